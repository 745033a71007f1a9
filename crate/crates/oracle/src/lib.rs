//! Reference integrators used by the test suites.
//!
//! Nothing in here shares code with `beamctl-core`: the quadrature rules and
//! the time stepper are written from scratch so that closed-form results can
//! be checked against an independent route.

/// Kronrod abscissae on [0, 1] (symmetric rule on [-1, 1]).
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
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the 7-point rule embedded at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_DEPTH: u32 = 24;
const NOISE_FLOOR: f64 = 1e-16;

/// Value of an integral together with the integral of its absolute value
/// (evaluated on the same accepted panels), used as a tolerance scale.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub abs_value: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, gauss * h, abs * h.abs())
}

/// Panels whose error estimate falls under `floor` are accepted whatever the
/// local tolerance says: below that level the estimate is evaluation noise.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, floor: f64, depth: u32) -> Quad {
    let (k, g, abs) = gk15(f, a, b);
    if (k - g).abs() <= tol.max(8.0 * f64::EPSILON * abs).max(floor) || depth >= MAX_DEPTH {
        return Quad { value: k, abs_value: abs };
    }
    let m = 0.5 * (a + b);
    let left = adapt(f, a, m, 0.5 * tol, floor, depth + 1);
    let right = adapt(f, m, b, 0.5 * tol, floor, depth + 1);
    Quad { value: left.value + right.value, abs_value: left.abs_value + right.abs_value }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the embedded error estimate; the
/// interval is first cut into `panels` equal pieces, which matters for
/// strongly oscillatory integrands. Error estimates below `1e-16` times
/// the integral of `|f|` are treated as converged.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Quad {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let scale: f64 = (0..panels).map(|i| gk15(&f, a + width * i as f64, a + width * (i + 1) as f64).2).sum();
    let floor = NOISE_FLOOR * scale;
    let mut out = Quad { value: 0.0, abs_value: 0.0 };
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        let q = adapt(&f, lo, hi, tol / panels as f64, floor, 0);
        out.value += q.value;
        out.abs_value += q.abs_value;
    }
    out
}

/// Fixed composite 15-point Kronrod rule (exact for degree 22 per panel).
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            gk15(&f, lo, lo + width).0
        })
        .sum()
}

/// Tensor-product composite rule over `[a, b] x [c, d]`.
pub fn composite_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a, b): (f64, f64),
    (c, d): (f64, f64),
    panels: (usize, usize),
) -> f64 {
    composite(|x| composite(|y| f(x, y), c, d, panels.1), a, b, panels.0)
}

/// Classical RK4 for `y'' + omega^2 y = g(t)`, started from `(y0, v0)` at
/// `t = 0`. Returns displacement and velocity at `t_end`.
pub fn rk4_oscillator<G: Fn(f64) -> f64>(omega: f64, y0: f64, v0: f64, g: G, t_end: f64, dt: f64) -> (f64, f64) {
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let w2 = omega * omega;
    let rhs = |t: f64, y: f64, v: f64| (v, g(t) - w2 * y);
    let (mut y, mut v) = (y0, v0);
    for i in 0..steps {
        let t = i as f64 * h;
        let (k1y, k1v) = rhs(t, y, v);
        let (k2y, k2v) = rhs(t + 0.5 * h, y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        let (k3y, k3v) = rhs(t + 0.5 * h, y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        let (k4y, k4v) = rhs(t + h, y + h * k3y, v + h * k3v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (y, v)
}

/// Cumulative trapezoid on a uniform grid.
pub fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    dt * (inner + 0.5 * (samples[0] + samples[samples.len() - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14, 1);
        assert!((q.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral() {
        let w = 317.0;
        let q = integrate(|t: f64| (w * t).cos().powi(2), 0.0, 2.0, 1e-13, 64);
        let exact = 1.0 + (4.0 * w).sin() / (4.0 * w);
        assert!((q.value - exact).abs() < 1e-12);
    }

    #[test]
    fn rk4_free_oscillator() {
        let (y, v) = rk4_oscillator(3.0, 1.0, 0.0, |_| 0.0, 2.0, 1e-4);
        assert!((y - 6.0f64.cos()).abs() < 1e-10);
        assert!((v + 3.0 * 6.0f64.sin()).abs() < 1e-9);
    }
}
