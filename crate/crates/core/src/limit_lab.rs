//! Window controls as the window shrinks to a point.
//!
//! For each `n` the window problem on `[xi, xi + 1/n]` is solved and compared
//! with the point problem at `xi`: through the effective trace
//! `phi(xi, t) + phi_x(xi, t) / (2n)`, through the controlled states at fixed
//! checkpoints, and through pairings against a fixed battery of forced test
//! motions `u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam_dynamics::{
    forced_trajectory, free_motion, interval_overlap, trace_dx_poly, trace_poly, ControlField, ControlRegion,
    DEFAULT_GRID,
};
use crate::error::{invalid, BeamError, Result};
use crate::hum_control::{
    assemble_gramian, solve_with_gramian, synthesize_control, verify_null_control, ControlProblem, Regularization,
};
use crate::modal_space::{frequency, norm, wavenumber, DataSpace, ModalState};
use crate::observability::{invisible_modes, strategic_check, StrategicReport};
use crate::signal::{TraceSignal, TrigPoly, TrigTerm};

/// Number of forced test motions in the pairing battery.
pub const BATTERY_SIZE: usize = 8;

/// Checkpoints, as fractions of `T`, where controlled states are compared.
pub const CHECKPOINTS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Exponent margin used by [`scaling_report`].
pub const SCALING_MARGIN: f64 = 0.2;

/// Closed form of `phi(xi, t) + phi_x(xi, t) / (2n)`.
pub fn effective_trace_poly(adjoint: &ModalState, xi: f64, n: u32) -> TrigPoly {
    trace_poly(adjoint, xi).sum(&trace_dx_poly(adjoint, xi).scaled(0.5 / n as f64))
}

/// `phi(xi, .) + phi_x(xi, .) / (2n)` on `grid` points of `[0, T]`.
pub fn effective_trace(adjoint: &ModalState, xi: f64, n: u32, horizon: f64, grid: usize) -> Result<TraceSignal> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid(format!("xi = {xi} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    TraceSignal::from_poly(effective_trace_poly(adjoint, xi, n), horizon, grid)
}

/// `int int control * u` for the control generated by `adjoint` on `region`,
/// where `u` starts from `u_data` and is driven by `forcing`.
///
/// Window: `n int_0^T int_window phi u dx dt`. Point: `int_0^T phi(xi, t) u(xi, t) dt`.
pub fn pairing_functional(
    u_data: &ModalState,
    forcing: &ControlField,
    adjoint: &ModalState,
    region: &ControlRegion,
    horizon: f64,
) -> Result<f64> {
    region.validate()?;
    let u = forced_trajectory(u_data, forcing)?;
    pairing_with_trajectory(&u, adjoint, region, horizon)
}

fn pairing_with_trajectory(u: &[TrigPoly], adjoint: &ModalState, region: &ControlRegion, horizon: f64) -> Result<f64> {
    match *region {
        ControlRegion::Internal { xi, n } => {
            let (a, b) = (xi, xi + 1.0 / n as f64);
            let phi = free_motion(adjoint);
            let mut acc = 0.0;
            for (j, pj) in phi.iter().enumerate() {
                if pj.is_zero() {
                    continue;
                }
                for (k, uk) in u.iter().enumerate() {
                    acc += interval_overlap(j, k, a, b) * pj.inner(uk, horizon);
                }
            }
            Ok(n as f64 * acc)
        }
        ControlRegion::Pointwise { xi } => {
            let v = trace_poly(adjoint, xi);
            let mut at_xi = TrigPoly::zero();
            for (k, uk) in u.iter().enumerate() {
                at_xi.add_scaled(uk, (wavenumber(k) * xi).sin());
            }
            Ok(v.inner(&at_xi, horizon))
        }
    }
}

/// A forced test motion: initial data and distributed forcing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub data: ModalState,
    pub forcing: ControlField,
}

/// Smooth random test motions: coefficients uniform in `[-1, 1]` scaled by
/// `1/(m+1)^2`, one forcing oscillation per mode with frequency in `[0.5, 20]`.
pub fn test_battery(modes: usize, seed: u64) -> Vec<TestField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..BATTERY_SIZE)
        .map(|_| {
            let decay = |m: usize| 1.0 / ((m + 1) * (m + 1)) as f64;
            let a = (0..modes).map(|m| rng.random_range(-1.0..1.0) * decay(m)).collect();
            let b = (0..modes).map(|m| rng.random_range(-1.0..1.0) * decay(m)).collect();
            let forcing = (0..modes)
                .map(|m| {
                    let nu = rng.random_range(0.5..20.0);
                    let c = rng.random_range(-1.0..1.0) * decay(m);
                    let s = rng.random_range(-1.0..1.0) * decay(m);
                    TrigPoly::oscillation(nu, c, s)
                })
                .collect();
            TestField { data: ModalState::new(a, b).expect("finite"), forcing: ControlField::distributed(forcing) }
        })
        .collect()
}

/// Both sides of `int int g psi = K - <y0, u1> + <y1, u0>` for one test motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

/// Evaluates the duality identity for the controlled motion `psi` of `data`
/// under the control of `adjoint`, tested against `field`.
pub fn duality_check(
    data: &ModalState,
    adjoint: &ModalState,
    region: &ControlRegion,
    horizon: f64,
    field: &TestField,
) -> Result<DualityCheck> {
    let control = synthesize_control(adjoint, region, horizon)?;
    let psi = forced_trajectory(data, &control)?;
    duality_with_trajectory(data, &psi, adjoint, region, horizon, field)
}

fn duality_with_trajectory(
    data: &ModalState,
    psi: &[TrigPoly],
    adjoint: &ModalState,
    region: &ControlRegion,
    horizon: f64,
    field: &TestField,
) -> Result<DualityCheck> {
    let modes = data.modes();
    if field.data.modes() != modes {
        return Err(invalid("test motion truncation differs from the data"));
    }
    let g = field.forcing.modal().ok_or_else(|| invalid("test forcing needs a closed form"))?;
    let lhs = 0.5 * (0..modes).map(|m| g[m].inner(&psi[m], horizon)).sum::<f64>();
    let k = pairing_functional(&field.data, &field.forcing, adjoint, region, horizon)?;
    let (mut y0u1, mut y1u0) = (0.0, 0.0);
    for m in 0..modes {
        let w = frequency(m);
        y0u1 += 0.5 * data.a()[m] * w * field.data.beta()[m];
        y1u0 += 0.5 * w * data.beta()[m] * field.data.a()[m];
    }
    let rhs = k - y0u1 + y1u0;
    let scale = lhs.abs().max(k.abs()).max(y0u1.abs()).max(y1u0.abs());
    let rel_error = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    Ok(DualityCheck { lhs, rhs, rel_error })
}

/// Inputs of a sweep over `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub xi_num: u64,
    pub xi_den: u64,
    pub n_list: Vec<u32>,
    pub data: ModalState,
    pub horizon: f64,
    pub regularization: Regularization,
    /// Samples kept for each effective-trace signal.
    pub grid: usize,
    /// Seed of the test battery.
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(xi_num: u64, xi_den: u64, n_list: Vec<u32>, data: ModalState) -> Self {
        Self {
            xi_num,
            xi_den,
            n_list,
            data,
            horizon: 2.0,
            regularization: Regularization::default(),
            grid: DEFAULT_GRID,
            seed: 0,
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi_num as f64 / self.xi_den as f64
    }
}

/// Per-`n` measurements.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: u32,
    /// `L2 x V'` norm of the scaled adjoint data `n p_n`.
    pub adjoint_l2vdual: f64,
    /// `F(xi)` norm of `n p_n`.
    pub adjoint_f: f64,
    /// `int int |control|^2`.
    pub control_energy: f64,
    pub final_residual: f64,
    pub identity_error: Option<f64>,
    /// `L2(0, T)` distance of the effective trace to the point control `v`.
    pub trace_distance_l2: Option<f64>,
    /// Same, after taking zero-mean time antiderivatives.
    pub trace_distance_hminus1: Option<f64>,
    /// `L2(0, 1)` distance of the controlled displacements at [`CHECKPOINTS`].
    pub psi_distances: Vec<f64>,
    /// `K_n(u)` for each battery motion.
    pub pairing_values: Vec<f64>,
    /// `sum |K_n(u) - K(u)|` over the battery.
    pub pairing_error: Option<f64>,
    /// Worst relative error of the duality identity over the battery.
    pub duality_error: f64,
    #[serde(skip)]
    pub effective_trace: Option<TraceSignal>,
}

/// The point problem every window problem is compared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReference {
    pub adjoint: ModalState,
    pub signal: TrigPoly,
    pub final_residual: f64,
    pub identity_error: Option<f64>,
    pub pairing_values: Vec<f64>,
    #[serde(skip)]
    trajectory: Vec<TrigPoly>,
}

/// Why the point comparison was skipped for a non-strategic `xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub witness_m: usize,
    /// Retained modes with `sin(mu_m xi) = 0`.
    pub invisible_modes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub strategic: StrategicReport,
    pub records: Vec<SweepRecord>,
    pub reference: Option<PointReference>,
    pub divergence: Option<DivergenceReport>,
    /// `F'(xi)` norm of the data; only for strategic `xi`.
    pub data_fdual_norm: Option<f64>,
}

fn state_at(trajectory: &[TrigPoly], t: f64) -> Vec<f64> {
    trajectory.iter().map(|y| y.eval(t)).collect()
}

/// `L2(0, T)` norm of `f - g` and of the zero-mean antiderivative of `f - g`.
fn signal_distances(f: &TrigPoly, g: &TrigPoly, horizon: f64) -> Result<(f64, f64)> {
    let diff = f.difference(g).compact();
    let l2 = diff.norm_sq(horizon).max(0.0).sqrt();
    let mut anti = diff.antiderivative()?;
    let mean = anti.integral(horizon) / horizon;
    anti.push(TrigTerm::oscillation(0.0, -mean, 0.0));
    Ok((l2, anti.norm_sq(horizon).max(0.0).sqrt()))
}

fn solve_region(
    config: &SweepConfig,
    region: ControlRegion,
) -> Result<(ModalState, ControlField, crate::hum_control::NullControlReport)> {
    let problem =
        ControlProblem::new(region, config.horizon, config.data.clone())?.with_regularization(config.regularization)?;
    let gramian = assemble_gramian(&region, config.horizon, config.data.modes())?;
    let (adjoint, _) = solve_with_gramian(&problem, &gramian)?;
    let control = synthesize_control(&adjoint, &region, config.horizon)?;
    let report = verify_null_control(&problem, &control)?;
    Ok((adjoint, control, report))
}

/// Solves the window problem for every `n` and the point problem once, and
/// compares them.
///
/// Per-`n` problems run in parallel; records come back in `n_list` order.
pub fn sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    let strategic = strategic_check(config.xi_num, config.xi_den)?;
    if !(config.horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    if config.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_list must be strictly increasing"));
    }
    let xi = config.xi();
    if let Some(&n0) = config.n_list.first() {
        ControlRegion::internal(xi, n0)?;
    }
    let modes = config.data.modes();
    let battery = test_battery(modes, config.seed);
    let u_traj: Vec<Vec<TrigPoly>> =
        battery.iter().map(|f| forced_trajectory(&f.data, &f.forcing)).collect::<Result<_>>()?;

    let (reference, divergence, data_fdual_norm) = if strategic.strategic {
        let region = ControlRegion::pointwise(xi)?;
        let (adjoint, control, report) = solve_region(config, region)?;
        let trajectory = forced_trajectory(&config.data, &control)?;
        let pairing_values = u_traj
            .iter()
            .map(|u| pairing_with_trajectory(u, &adjoint, &region, config.horizon))
            .collect::<Result<_>>()?;
        let reference = PointReference {
            signal: trace_poly(&adjoint, xi),
            adjoint,
            final_residual: report.final_residual,
            identity_error: report.identity_error,
            pairing_values,
            trajectory,
        };
        let fdual = norm(&config.data, DataSpace::Fdual(xi)).ok();
        (Some(reference), None, fdual)
    } else {
        let divergence = DivergenceReport {
            witness_m: strategic.witness_m.expect("non-strategic report names a witness"),
            invisible_modes: invisible_modes(xi, modes),
        };
        (None, Some(divergence), None)
    };

    let records = config
        .n_list
        .par_iter()
        .map(|&n| sweep_one(config, n, &battery, &u_traj, reference.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepOutcome { strategic, records, reference, divergence, data_fdual_norm })
}

fn sweep_one(
    config: &SweepConfig,
    n: u32,
    battery: &[TestField],
    u_traj: &[Vec<TrigPoly>],
    reference: Option<&PointReference>,
) -> Result<SweepRecord> {
    let xi = config.xi();
    let horizon = config.horizon;
    let region = ControlRegion::internal(xi, n)?;
    let (adjoint, control, report) = solve_region(config, region)?;
    let scaled = adjoint.scaled(n as f64);
    let psi = forced_trajectory(&config.data, &control)?;

    let pairing_values: Vec<f64> =
        u_traj.iter().map(|u| pairing_with_trajectory(u, &adjoint, &region, horizon)).collect::<Result<_>>()?;
    let mut duality_error: f64 = 0.0;
    for field in battery {
        let d = duality_with_trajectory(&config.data, &psi, &adjoint, &region, horizon, field)?;
        duality_error = duality_error.max(d.rel_error);
    }

    let eff = effective_trace_poly(&adjoint, xi, n);
    let mut record = SweepRecord {
        n,
        adjoint_l2vdual: norm(&scaled, DataSpace::L2Vdual)?,
        adjoint_f: norm(&scaled, DataSpace::F(xi))?,
        control_energy: report.control_energy,
        final_residual: report.final_residual,
        identity_error: report.identity_error,
        pairing_values,
        duality_error,
        effective_trace: Some(TraceSignal::from_poly(eff.clone(), horizon, config.grid)?),
        ..Default::default()
    };
    if let Some(r) = reference {
        let (l2, hm1) = signal_distances(&eff, &r.signal, horizon)?;
        record.trace_distance_l2 = Some(l2);
        record.trace_distance_hminus1 = Some(hm1);
        record.psi_distances = CHECKPOINTS
            .iter()
            .map(|f| {
                let t = f * horizon;
                let d: f64 =
                    state_at(&psi, t).iter().zip(state_at(&r.trajectory, t)).map(|(a, b)| (a - b).powi(2)).sum();
                (0.5 * d).sqrt()
            })
            .collect();
        record.pairing_error =
            Some(record.pairing_values.iter().zip(&r.pairing_values).map(|(a, b)| (a - b).abs()).sum());
    }
    Ok(record)
}

/// Least-squares slope of `ln(values)` against `ln(ns)`.
pub fn fit_exponent(ns: &[f64], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() {
        return Err(invalid("fit needs as many values as abscissae"));
    }
    if ns.len() < 3 {
        return Err(BeamError::InsufficientData(format!("{} points, need at least 3", ns.len())));
    }
    if ns.iter().chain(values).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("log-log fit needs positive finite values"));
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("fit needs at least two distinct n"));
    }
    Ok(sxy / sxx)
}

/// Which growth claim a scaling report tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// Growth slower than `n^3`.
    General,
    /// Growth slower than `n` (strategic `xi`, data in `F'`).
    Strategic,
}

impl ScalingMode {
    pub fn threshold(&self) -> f64 {
        match self {
            Self::General => 3.0,
            Self::Strategic => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub quantity: String,
    pub exponent: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub threshold: f64,
    pub margin: f64,
    pub fits: Vec<ExponentFit>,
    pub pass: bool,
}

/// Fits growth exponents of the adjoint-data norms and the control energy;
/// each passes when below `threshold - margin`.
pub fn scaling_report(records: &[SweepRecord], mode: ScalingMode) -> Result<ScalingReport> {
    if records.len() < 3 {
        return Err(BeamError::InsufficientData(format!("{} sweep records, need at least 3", records.len())));
    }
    let ns: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let threshold = mode.threshold();
    type Quantity = (&'static str, fn(&SweepRecord) -> f64);
    let quantities: [Quantity; 3] = [
        ("adjoint_f", |r| r.adjoint_f),
        ("adjoint_l2vdual", |r| r.adjoint_l2vdual),
        ("control_energy", |r| r.control_energy),
    ];
    let mut fits = Vec::new();
    for (name, get) in quantities {
        let values: Vec<f64> = records.iter().map(get).collect();
        let exponent = fit_exponent(&ns, &values)?;
        fits.push(ExponentFit { quantity: name.to_string(), exponent, pass: exponent < threshold - SCALING_MARGIN });
    }
    let pass = fits.iter().all(|f| f.pass);
    Ok(ScalingReport { mode, threshold, margin: SCALING_MARGIN, fits, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam_dynamics::homogeneous_eval;
    use beamctl_oracle::{composite, composite_2d};
    use std::f64::consts::PI;

    #[test]
    fn effective_trace_examples() {
        let s = ModalState::smooth_decay(4);
        let far = effective_trace(&s, 0.4, 1_000_000_000, 2.0, 101).unwrap();
        let tr = crate::beam_dynamics::trace(&s, 0.4, 2.0, 101).unwrap();
        let peak = tr.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in far.samples().iter().zip(tr.samples()) {
            assert!((a - b).abs() <= 1e-8 * peak);
        }

        let one = ModalState::new(vec![1.0], vec![0.0]).unwrap();
        let e = effective_trace_poly(&one, 1.0, 4);
        for t in [0.0, 0.7, 1.3] {
            assert!((e.eval(t) - (frequency(0) * t).cos()).abs() < 1e-14);
        }
        let e = effective_trace(&one, 0.5, 4, 2.0, 33).unwrap();
        let env = (PI / 4.0).sin() + wavenumber(0) * (PI / 4.0).cos() / 8.0;
        for (t, v) in e.times().iter().zip(e.samples()) {
            assert!((v - env * (frequency(0) * t).cos()).abs() < 1e-14);
        }
        assert!(effective_trace(&one, 1.0, 4, 2.0, 33).is_err());
    }

    #[test]
    fn pairing_examples() {
        let u = ModalState::new(vec![1.0], vec![0.0]).unwrap();
        let none = ControlField::zero(1);
        let region = ControlRegion::pointwise(0.3).unwrap();
        assert_eq!(pairing_functional(&u, &none, &ModalState::zeros(1), &region, 2.0).unwrap(), 0.0);
        let k = pairing_functional(&u, &none, &u, &region, 2.0).unwrap();
        let s = (wavenumber(0) * 0.3).sin().powi(2);
        let w0 = frequency(0);
        let want = s * (1.0 + (4.0 * w0).sin() / (4.0 * w0));
        assert!((k - want).abs() < 1e-14);
    }

    #[test]
    fn pairing_matches_quadrature() {
        let battery = test_battery(4, 3);
        let adjoint = ModalState::new(vec![0.5, -0.2, 0.1, 0.05], vec![0.1, 0.3, -0.1, 0.02]).unwrap();
        let region = ControlRegion::internal(0.3, 6).unwrap();
        for field in battery.iter().take(2) {
            let k = pairing_functional(&field.data, &field.forcing, &adjoint, &region, 2.0).unwrap();
            let u = forced_trajectory(&field.data, &field.forcing).unwrap();
            let u_at = |x: f64, t: f64| -> f64 {
                u.iter().enumerate().map(|(m, y)| y.eval(t) * (wavenumber(m) * x).sin()).sum()
            };
            let q = 6.0
                * composite_2d(
                    |x, t| homogeneous_eval(&adjoint, x, t) * u_at(x, t),
                    (0.3, 0.3 + 1.0 / 6.0),
                    (0.0, 2.0),
                    (4, 200),
                );
            assert!((k - q).abs() <= 1e-6 * q.abs(), "{k} {q}");
        }
        let point = ControlRegion::pointwise(0.3).unwrap();
        let field = &battery[0];
        let k = pairing_functional(&field.data, &field.forcing, &adjoint, &point, 2.0).unwrap();
        let u = forced_trajectory(&field.data, &field.forcing).unwrap();
        let q = composite(
            |t| {
                homogeneous_eval(&adjoint, 0.3, t)
                    * u.iter().enumerate().map(|(m, y)| y.eval(t) * (wavenumber(m) * 0.3).sin()).sum::<f64>()
            },
            0.0,
            2.0,
            200,
        );
        assert!((k - q).abs() <= 1e-6 * q.abs());
    }

    #[test]
    fn battery_is_seeded() {
        assert_eq!(test_battery(5, 11), test_battery(5, 11));
        assert_ne!(test_battery(5, 11), test_battery(5, 12));
        assert_eq!(test_battery(5, 0).len(), BATTERY_SIZE);
    }

    #[test]
    fn empty_sweep() {
        let cfg = SweepConfig::new(1, 3, vec![], ModalState::smooth_decay(4));
        let out = sweep(&cfg).unwrap();
        assert!(out.records.is_empty());
    }

    #[test]
    fn non_strategic_sweep_reports_divergence() {
        let cfg = SweepConfig::new(2, 3, vec![4], ModalState::smooth_decay(6));
        let out = sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        let d = out.divergence.unwrap();
        assert_eq!(d.witness_m, 1);
        assert!(d.invisible_modes.contains(&1));
        assert!(out.reference.is_none());
        assert!(out.records[0].trace_distance_l2.is_none());
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let data = ModalState::smooth_decay(4);
        assert!(sweep(&SweepConfig::new(1, 3, vec![8, 4], data.clone())).is_err());
        assert!(matches!(sweep(&SweepConfig::new(2, 3, vec![2], data)), Err(BeamError::InvalidRegion { .. })));
    }

    #[test]
    fn fit_examples() {
        let ns = [4.0, 8.0, 16.0, 32.0];
        let cube: Vec<f64> = ns.iter().map(|n: &f64| n.powi(3)).collect();
        assert!((fit_exponent(&ns, &cube).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(fit_exponent(&ns[..2], &cube[..2]), Err(BeamError::InsufficientData(_))));
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<SweepRecord> {
        [4u32, 8, 16, 32, 64]
            .iter()
            .map(|&n| {
                let v = f(n as f64);
                SweepRecord { n, adjoint_f: v, adjoint_l2vdual: v, control_energy: v, ..Default::default() }
            })
            .collect()
    }

    #[test]
    fn scaling_controls() {
        let cubic = synthetic(|n| n.powi(3));
        let r = scaling_report(&cubic, ScalingMode::General).unwrap();
        assert!(!r.pass);
        assert!(r.fits.iter().all(|f| (f.exponent - 3.0).abs() < 1e-12));

        let flat = synthetic(|_| 2.5);
        assert!(scaling_report(&flat, ScalingMode::General).unwrap().pass);
        let r = scaling_report(&flat, ScalingMode::Strategic).unwrap();
        assert!(r.pass);
        assert!(r.fits.iter().all(|f| f.exponent.abs() < 1e-12));

        assert!(matches!(scaling_report(&flat[..2], ScalingMode::General), Err(BeamError::InsufficientData(_))));
    }
}
