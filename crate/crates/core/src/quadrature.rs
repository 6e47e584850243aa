//! Gauss–Legendre rules on [-1, 1].

/// Points and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
///
/// Rules with 1 to 5 points are tabulated; anything else panics.
pub fn gauss_legendre(n: usize) -> (&'static [f64], &'static [f64]) {
    const P1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const P2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    const P3: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W3: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    const P4: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const W4: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    const P5: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W5: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    match n {
        1 => (&P1, &W1),
        2 => (&P2, &W2),
        3 => (&P3, &W3),
        4 => (&P4, &W4),
        5 => (&P5, &W5),
        _ => panic!("Gauss-Legendre rule with {n} points is not tabulated"),
    }
}

/// Tensor-product rule mapped to the rectangle [x0, x0+hx] × [y0, y0+hy].
/// Yields `(x, y, weight)` triples.
pub fn rect_rule(
    n: usize,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
) -> impl Iterator<Item = (f64, f64, f64)> {
    let (pts, wts) = gauss_legendre(n);
    let jac = 0.25 * hx * hy;
    (0..n).flat_map(move |a| {
        (0..n).map(move |b| {
            let x = x0 + 0.5 * hx * (pts[a] + 1.0);
            let y = y0 + 0.5 * hy * (pts[b] + 1.0);
            (x, y, wts[a] * wts[b] * jac)
        })
    })
}
