use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

const MANUFACTURED: &str = r#"
[domain]
n = 9

[coefficients]
L = "1+i"
M = "2+2i"

[boundary]
kind = "dirichlet"
f = "exp(x+y)"

[study]
n_list = [17, 33, 65]
exact = "exp(x+y)"
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, String) {
    let path = dir.join("problem.toml");
    fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_helmsaddle"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn solve_writes_one_row_per_node() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run(dir.path(), MANUFACTURED, &["solve"]);
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path(), "solution.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,u_re,u_im");
    assert_eq!(lines.len(), 1 + 81);
    // 17 significant digits.
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[2], "1.0000000000000000e0");
    let meta = read(dir.path(), "meta.txt");
    for key in ["command = solve", "theta_applied", "outer_iterations", "block_residual", "wall_seconds", "status = ok"] {
        assert!(meta.contains(key), "missing {key} in\n{meta}");
    }
}

#[test]
fn convergence_writes_three_rows_and_a_slope() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run(dir.path(), MANUFACTURED, &["convergence", "--jobs", "3"]);
    assert_eq!(code, 0, "{err}");
    let csv = read(dir.path(), "convergence.csv");
    let rows: Vec<&str> = csv.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    let slope: f64 = csv.lines().find_map(|l| l.strip_prefix("# slope,")).unwrap().parse().unwrap();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
}

#[test]
fn spectrum_writes_raw_and_preconditioned() {
    let dir = TempDir::new().unwrap();
    let config = "[domain]\nn = 8\n[coefficients]\nmodel = \"random\"\nseed = 1\nlo = 0\nhi = 10\n[boundary]\nkind = \"dirichlet\"\nf = 0\n";
    let (code, err) = run(dir.path(), config, &["spectrum"]);
    assert_eq!(code, 0, "{err}");
    let schur = read(dir.path(), "spectrum_schur.csv");
    assert_eq!(schur.lines().next(), Some("index,raw,preconditioned"));
    assert_eq!(schur.lines().count(), 1 + 36);
    for line in schur.lines().skip(1) {
        let pre: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(pre >= 1.0 - 1e-8);
    }
    assert_eq!(read(dir.path(), "spectrum_constitutive.csv").lines().count(), 7);
}

#[test]
fn outputs_are_deterministic() {
    let config = MANUFACTURED.replace("n = 9", "n = 12").replace("L = \"1+i\"", "L = \"1+2i\"");
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let dir = TempDir::new().unwrap();
            assert_eq!(run(dir.path(), &config, &["solve", "--mode", "direct"]).0, 0);
            read(dir.path(), "solution.csv")
        })
        .collect();
    assert_eq!(runs[0], runs[1]);

    let sweeps: Vec<String> = [1, 4]
        .iter()
        .map(|jobs| {
            let dir = TempDir::new().unwrap();
            let cfg = config.replace("[study]", "[study]\ntol_list = [1e-4, 1e-8]");
            assert_eq!(run(dir.path(), &cfg, &["pcg-sweep", "--jobs", &jobs.to_string()]).0, 0);
            read(dir.path(), "pcg_sweep.csv")
        })
        .collect();
    assert_eq!(sweeps[0], sweeps[1]);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = TempDir::new().unwrap();
    let (code, err) = run(dir.path(), &MANUFACTURED.replace("[domain]", "[domian]"), &["solve"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");

    let robin = "[coefficients]\nL = \"1+i\"\nM = \"1+i\"\n[boundary]\nkind = \"robin\"\na = 1\ng = 0\n";
    let (code, err) = run(dir.path(), robin, &["solve"]);
    assert_eq!(code, 3);
    assert!(err.contains("a' < 0"), "{err}");

    let (code, _) = run(dir.path(), &MANUFACTURED.replace("\"1+i\"", "\"1-i\""), &["solve", "--theta", "off"]);
    assert_eq!(code, 3);

    let (code, err) = run(dir.path(), MANUFACTURED, &["solve", "--tol", "1e-10", "--theta", "0.3"]);
    assert_eq!(code, 0, "{err}");
    let meta = read(dir.path(), "meta.txt");
    let theta: f64 = meta.lines().find_map(|l| l.strip_prefix("theta_applied = ")).unwrap().parse().unwrap();
    assert_eq!(theta, 0.3);

    let capped = MANUFACTURED.replace("[study]", "[solver]\nmax_iter = 1\nmode = \"direct\"\n[study]").replace("L = \"1+i\"", "L = \"1+3i\"");
    let (code, err) = run(dir.path(), &capped, &["solve"]);
    assert_eq!(code, 4, "{err}");
    assert!(read(dir.path(), "meta.txt").contains("status = failed"));
}

#[test]
fn failed_sweep_entries_are_listed() {
    let dir = TempDir::new().unwrap();
    let config = MANUFACTURED
        .replace("L = \"1+i\"", "L = \"1+3i\"")
        .replace("[study]", "[solver]\nmax_iter = 1\n[study]\ntol_list = [1e-8]");
    let (code, _) = run(dir.path(), &config, &["pcg-sweep"]);
    assert_eq!(code, 4);
    let csv = read(dir.path(), "pcg_sweep.csv");
    assert_eq!(csv.lines().count(), 4);
    assert!(read(dir.path(), "failures.txt").lines().count() >= 1);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in ["DirEx.toml", "RobEx.toml", "Table1.toml", "acoust.toml", "evals.toml", "pcg.toml", "rot_pic.toml"] {
        assert!(names.iter().any(|n| n == name), "missing {name}");
    }
    for name in names {
        let text = fs::read_to_string(dir.join(&name)).unwrap();
        if let Err(e) = helmsaddle::config::parse_config(&text) {
            panic!("{name}: {e}");
        }
    }
}
