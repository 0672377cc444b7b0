//! Quadrature rules: fixed Gauss–Legendre panels and an adaptive Gauss–Kronrod integrator.

/// Four-point Gauss–Legendre rule on [-1, 1].
pub const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// The same rule mapped to [0, 1].
pub const GAUSS4_UNIT: [(f64, f64); 4] = [
    ((1.0 + GAUSS4[0].0) / 2.0, GAUSS4[0].1 / 2.0),
    ((1.0 + GAUSS4[1].0) / 2.0, GAUSS4[1].1 / 2.0),
    ((1.0 + GAUSS4[2].0) / 2.0, GAUSS4[2].1 / 2.0),
    ((1.0 + GAUSS4[3].0) / 2.0, GAUSS4[3].1 / 2.0),
];

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Composite four-point Gauss rule with `panels` equal panels.
pub fn gauss_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &GAUSS4 {
            sum += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * sum
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration to an absolute-or-relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, _) = kronrod15(&f, a, b);
    let target = tol.max(f64::EPSILON * 8.0 * whole.abs());
    recurse(&f, a, b, target, 0)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let (val, err) = kronrod15(f, a, b);
    if err <= tol || depth >= 40 {
        return val;
    }
    let mid = 0.5 * (a + b);
    recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
}
