//! Window masses, the rescaled overlap kernel, strategic points and
//! observability constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beam_dynamics::{one_minus_sinc, sin_sq_integral, ControlRegion};
use crate::error::{invalid, Result};
use crate::hum_control::assemble_gramian;
use crate::modal_space::wavenumber;

/// Uniform constant in `I(b, t) >= c sin^2(pi b)`: the smallest of the
/// three case constants `(1 - 2/pi)/2`, `1/3`, `7/24`.
pub const INVERSE_BOUND_CONSTANT: f64 = 0.5 * (1.0 - 2.0 / PI);

const KERNEL_SLACK: f64 = 1e-12;

/// `int_xi^{xi+1/n} sin^2(mu_m x) dx`.
pub fn window_mass(m: usize, xi: f64, n: u32) -> Result<f64> {
    ControlRegion::internal(xi, n)?;
    Ok(sin_sq_integral(wavenumber(m), xi, xi + 1.0 / n as f64))
}

/// `1/(2n) - sin(pi/(2n))/pi`, evaluated as `(x - sin x)/pi` with `x = pi/(2n)`.
pub fn window_mass_lower_bound(n: u32) -> f64 {
    let x = PI / (2.0 * n.max(1) as f64);
    // x - sin x = x (1 - sinc x)
    x * one_minus_sinc(x) / PI
}

/// `I(b, t) = int_0^1 sin^2(pi (b + t z)) dz` in closed form.
pub fn overlap_kernel(b: f64, t: f64) -> f64 {
    if t == 0.0 {
        return (PI * b).sin().powi(2);
    }
    let x = PI * t;
    let s = (PI * (b + 0.5 * t)).sin();
    let sinc = x.sin() / x;
    (0.5 * (one_minus_sinc(x) + 2.0 * sinc * s * s)).clamp(0.0, 1.0)
}

/// One evaluation of `I(b, t) >= c sin^2(pi b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn inverse_bound_check(b: f64, t: f64) -> BoundCheck {
    let lhs = overlap_kernel(b, t);
    let rhs = INVERSE_BOUND_CONSTANT * (PI * b).sin().powi(2);
    BoundCheck { lhs, rhs, ok: lhs >= rhs - KERNEL_SLACK }
}

/// Whether every mode is visible from `xi = p/q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategicReport {
    pub xi_num: u64,
    pub xi_den: u64,
    pub strategic: bool,
    pub witness_m: Option<usize>,
    pub lower_bound: Option<f64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Decides whether `sin(mu_m p/q) != 0` for every `m`.
///
/// `mu_m p/q = k pi / (2q)` with `k = (2m + 1) p mod 4q`, and the residues
/// repeat with period at most `2q`, so one cycle decides both the witness
/// and the uniform lower bound.
pub fn strategic_check(p: u64, q: u64) -> Result<StrategicReport> {
    if p == 0 || p >= q {
        return Err(invalid(format!("xi = {p}/{q} must lie in (0, 1)")));
    }
    if gcd(p, q) != 1 {
        return Err(invalid(format!("xi = {p}/{q} is not in lowest terms")));
    }
    let (p, q) = (p as u128, q as u128);
    let mut witness = None;
    let mut lower = f64::INFINITY;
    for m in 0..=2 * q {
        let odd = 2 * m + 1;
        if (odd * p) % (2 * q) == 0 {
            witness = Some(m as usize);
            break;
        }
        let k = (odd * p) % (4 * q);
        lower = lower.min((k as f64 * PI / (2.0 * q as f64)).sin().abs());
    }
    Ok(StrategicReport {
        xi_num: p as u64,
        xi_den: q as u64,
        strategic: witness.is_none(),
        witness_m: witness,
        lower_bound: witness.is_none().then_some(lower),
    })
}

/// Smallest eigenvalue of the truncated observability Gramian.
pub fn observability_constant(region: &ControlRegion, horizon: f64, modes: usize) -> Result<f64> {
    Ok(assemble_gramian(region, horizon, modes)?.min_eigenvalue())
}

/// One cell of the window-mass diagnostics table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowMassRow {
    pub m: usize,
    pub xi: f64,
    pub n: u32,
    pub mass: f64,
    pub lower_bound: f64,
    pub violated: bool,
}

/// Window masses against their lower bound on every `(m, xi, n)` with a valid window.
///
/// Rows are returned in `(n, xi, m)` lexicographic order whatever the thread count.
pub fn window_mass_table(modes: usize, xis: &[f64], ns: &[u32]) -> Result<Vec<WindowMassRow>> {
    if modes == 0 {
        return Err(invalid("window-mass table needs at least one mode"));
    }
    let cells: Vec<(u32, f64)> = ns
        .iter()
        .flat_map(|&n| xis.iter().map(move |&xi| (n, xi)))
        .filter(|&(n, xi)| ControlRegion::internal(xi, n).is_ok())
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(n, xi)| {
            let bound = window_mass_lower_bound(n);
            (0..modes)
                .map(|m| {
                    let mass = sin_sq_integral(wavenumber(m), xi, xi + 1.0 / n as f64);
                    WindowMassRow { m, xi, n, mass, lower_bound: bound, violated: mass < bound }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(rows.into_iter().flatten().collect())
}

/// Result of sweeping `I(b, t) >= c sin^2(pi b)` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSweep {
    pub points: usize,
    pub violations: Vec<(f64, f64, BoundCheck)>,
    /// Smallest `lhs - rhs` seen.
    pub min_margin: f64,
}

/// Checks the inverse bound on `b = k db` in `(0, 1)` and `t = j dt` in `(0, t_max]`.
pub fn kernel_grid_sweep(db: f64, dt: f64, t_max: f64) -> Result<KernelSweep> {
    if !(db > 0.0 && db < 1.0 && dt > 0.0 && t_max >= dt) {
        return Err(invalid("kernel grid needs 0 < db < 1 and 0 < dt <= t_max"));
    }
    let nb = ((1.0 / db) - 1e-9).floor() as usize;
    let nt = (t_max / dt + 1e-9).floor() as usize;
    type Column = (usize, Vec<(f64, f64, BoundCheck)>, f64);
    let per_b: Vec<Column> = (1..=nb)
        .into_par_iter()
        .filter(|&i| (i as f64 * db) < 1.0)
        .map(|i| {
            let b = i as f64 * db;
            let mut bad = Vec::new();
            let mut margin = f64::INFINITY;
            for j in 1..=nt {
                let t = j as f64 * dt;
                let c = inverse_bound_check(b, t);
                margin = margin.min(c.lhs - c.rhs);
                if !c.ok {
                    bad.push((b, t, c));
                }
            }
            (nt, bad, margin)
        })
        .collect();
    let mut out = KernelSweep { points: 0, violations: Vec::new(), min_margin: f64::INFINITY };
    for (count, bad, margin) in per_b {
        out.points += count;
        out.violations.extend(bad);
        out.min_margin = out.min_margin.min(margin);
    }
    Ok(out)
}

/// `min_m |sin(mu_m xi)|` over the first `modes` modes; zero flags an invisible mode.
pub fn point_visibility(xi: f64, modes: usize) -> f64 {
    (0..modes).map(|m| (wavenumber(m) * xi).sin().abs()).fold(f64::INFINITY, f64::min)
}

/// Modes below `modes` that a sensor at `xi` cannot see.
pub fn invisible_modes(xi: f64, modes: usize) -> Vec<usize> {
    (0..modes).filter(|&m| (wavenumber(m) * xi).sin().abs() < 1e-12).collect()
}
