//! The five commands. Each writes its artifacts and returns the list of
//! asserted quantities that failed.

use serde::Serialize;
use serde_json::json;

use beamctl_core::beam_dynamics::{homogeneous_eval, trace, trace_dx, ControlRegion};
use beamctl_core::hum_control::{solve_and_verify, ControlProblem, HumDiagnostics};
use beamctl_core::limit_lab::{effective_trace_poly, scaling_report, sweep, ScalingMode, SweepConfig, CHECKPOINTS};
use beamctl_core::modal_space::{norm, DataSpace};
use beamctl_core::observability::{
    kernel_grid_sweep, observability_constant, overlap_kernel, strategic_check, window_mass_table,
    INVERSE_BOUND_CONSTANT,
};
use beamctl_core::signal::uniform_times;
use beamctl_core::BeamError;

use crate::config::{ExperimentConfig, RegionKind};
use crate::output::{num, opt, Artifacts, Csv};
use crate::svg::{line_plot, Axes, Series};
use crate::CliError;

/// Identity-error ceiling asserted by `control`.
pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// Slack allowed when checking that a sequence does not increase.
pub const MONOTONE_SLACK: f64 = 1.1;

pub type Failures = Vec<String>;

fn numerical(e: BeamError) -> CliError {
    CliError::Numerical(e.to_string())
}

fn rational(cfg: &ExperimentConfig) -> (u64, u64) {
    cfg.rational_xi().expect("validated rational xi")
}

pub fn simulate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Failures, CliError> {
    let data = cfg.initial_data();
    let xi = cfg.xi.expect("validated xi").value();
    let horizon = cfg.horizon;
    let u = trace(&data, xi, horizon, cfg.grid).map_err(numerical)?;
    let ux = trace_dx(&data, xi, horizon, cfg.grid).map_err(numerical)?;

    let mut csv = Csv::new(&["t", "u", "u_x"]);
    for ((t, a), b) in u.times().iter().zip(u.samples()).zip(ux.samples()) {
        csv.row(&[num(*t), num(*a), num(*b)]);
    }
    art.csv("trace.csv", csv)?;

    let mut field = Csv::new(&["t", "x", "u"]);
    for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let t = f * horizon;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            field.row(&[num(t), num(x), num(homogeneous_eval(&data, x, t))]);
        }
    }
    art.csv("field.csv", field)?;

    let points = u.times().into_iter().zip(u.samples().iter().copied()).collect();
    art.write(
        "trace.svg",
        &line_plot(&format!("u({xi}, t)"), "t", "u", &[Series::new("u(xi, t)", points)], Axes::Linear),
    )?;

    let before = norm(&data, DataSpace::L2Vdual).map_err(numerical)?;
    let after =
        norm(&beamctl_core::beam_dynamics::evolve_free(&data, horizon), DataSpace::L2Vdual).map_err(numerical)?;
    let mut failures = Vec::new();
    if (before - after).abs() > 1e-12 * before.max(1e-300) {
        failures.push(format!("energy drift: |{before:e} - {after:e}|"));
    }
    art.json(
        "simulate.json",
        "simulate",
        &json!({
            "xi": xi,
            "modes": cfg.modes,
            "horizon": horizon,
            "grid": cfg.grid,
            "norm_initial": before,
            "norm_final": after,
        }),
    )?;
    Ok(failures)
}

pub fn observability(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Failures, CliError> {
    let (p, q) = rational(cfg);
    let xi = p as f64 / q as f64;
    let ns = cfg.n_values();
    let mut failures = Vec::new();

    let rows = window_mass_table(cfg.modes, &[xi], &ns).map_err(numerical)?;
    let mut csv = Csv::new(&["m", "xi", "n", "mass", "lower_bound", "violated"]);
    for r in &rows {
        csv.row(&[
            r.m.to_string(),
            num(r.xi),
            r.n.to_string(),
            num(r.mass),
            num(r.lower_bound),
            r.violated.to_string(),
        ]);
    }
    art.csv("window_mass.csv", csv)?;
    let mass_violations = rows.iter().filter(|r| r.violated).count();

    let grid = kernel_grid_sweep(cfg.kernel_step, cfg.kernel_step, cfg.kernel_tmax).map_err(numerical)?;
    if !grid.violations.is_empty() {
        failures.push(format!("inverse bound violated at {} grid points", grid.violations.len()));
    }

    let steps = (cfg.kernel_tmax / cfg.kernel_step).floor() as usize;
    let bs: Vec<f64> = (0..cfg.modes.min(4)).map(|m| ((2 * m + 1) as f64 * xi / 2.0).fract()).collect();
    let mut kernel = Csv::new(&["b", "t", "kernel", "bound"]);
    let mut series = Vec::new();
    for &b in &bs {
        let bound = INVERSE_BOUND_CONSTANT * (std::f64::consts::PI * b).sin().powi(2);
        let mut pts = Vec::new();
        for j in 1..=steps {
            let t = j as f64 * cfg.kernel_step;
            let k = overlap_kernel(b, t);
            kernel.row(&[num(b), num(t), num(k), num(bound)]);
            pts.push((t, k));
        }
        series.push(Series::new(format!("I({b:.4}, t)"), pts));
        series.push(Series::new(
            format!("bound b={b:.4}"),
            vec![(cfg.kernel_step, bound), (steps as f64 * cfg.kernel_step, bound)],
        ));
    }
    art.csv("kernel.csv", kernel)?;
    art.write("kernel.svg", &line_plot("overlap kernel against bound", "t", "I(b, t)", &series, Axes::Linear))?;

    let mut constants = Csv::new(&["modes", "region", "n", "constant"]);
    let mut regions = vec![(ControlRegion::pointwise(xi).map_err(numerical)?, None)];
    for &n in &ns {
        regions.push((ControlRegion::internal(xi, n).map_err(numerical)?, Some(n)));
    }
    for (region, n) in &regions {
        let mut last = f64::INFINITY;
        for m in 1..=cfg.modes {
            let g = beamctl_core::hum_control::assemble_gramian(region, cfg.horizon, m).map_err(numerical)?;
            let c = g.min_eigenvalue();
            let scale = g.eigenvalues().last().copied().unwrap_or(0.0);
            if c > last + 1e-12 * scale {
                failures.push(format!("observability constant grew from {last:e} to {c:e} at {m} modes"));
            }
            last = c;
            let kind = if n.is_some() { "internal" } else { "pointwise" };
            constants.row(&[m.to_string(), kind.into(), n.map(|v| v.to_string()).unwrap_or_default(), num(c)]);
        }
    }
    art.csv("constants.csv", constants)?;
    let pointwise = observability_constant(&regions[0].0, cfg.horizon, cfg.modes).map_err(numerical)?;

    let report = strategic_check(p, q).map_err(numerical)?;
    art.json(
        "observability.json",
        "observability",
        &json!({
            "xi": format!("{p}/{q}"),
            "modes": cfg.modes,
            "horizon": cfg.horizon,
            "strategic": report,
            "pointwise_constant": pointwise,
            "window_mass_violations": mass_violations,
            "kernel_points": grid.points,
            "kernel_violations": grid.violations.len(),
            "kernel_min_margin": grid.min_margin,
            "inverse_bound_constant": INVERSE_BOUND_CONSTANT,
            "pass": failures.is_empty(),
        }),
    )?;
    Ok(failures)
}

pub fn strategic(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Failures, CliError> {
    let (p, q) = rational(cfg);
    let report = strategic_check(p, q).map_err(numerical)?;
    art.json("strategic.json", "strategic_report", &report)?;
    Ok(Vec::new())
}

#[derive(Serialize)]
struct ControlReport {
    region: ControlRegion,
    horizon: f64,
    modes: usize,
    diagnostics: HumDiagnostics,
    final_residual: f64,
    identity_error: Option<f64>,
    control_energy: f64,
    tolerance: f64,
    pass: bool,
}

pub fn control(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Failures, CliError> {
    let (p, q) = rational(cfg);
    let xi = p as f64 / q as f64;
    let region = match cfg.region.expect("validated region") {
        RegionKind::Internal => ControlRegion::internal(xi, cfg.n.expect("validated n")),
        RegionKind::Pointwise => ControlRegion::pointwise(xi),
    }
    .map_err(numerical)?;
    let problem = ControlProblem::new(region, cfg.horizon, cfg.initial_data())
        .and_then(|p| p.with_regularization(cfg.regularization))
        .and_then(|p| p.with_tolerance(cfg.tolerance))
        .map_err(numerical)?;
    let sol = solve_and_verify(&problem).map_err(numerical)?;

    let mut failures = Vec::new();
    if !(sol.report.final_residual <= cfg.tolerance) {
        failures.push(format!("final residual {:e} exceeds {:e}", sol.report.final_residual, cfg.tolerance));
    }
    if let Some(e) = sol.report.identity_error {
        if !(e <= IDENTITY_TOLERANCE) {
            failures.push(format!("identity error {e:e} exceeds {IDENTITY_TOLERANCE:e}"));
        }
    }

    art.write("gramian.json", &(sol.gramian.to_json() + "\n"))?;
    let times = uniform_times(cfg.horizon, cfg.grid);
    let (csv, series) = match region {
        ControlRegion::Pointwise { .. } => {
            let v = sol.control.signal().expect("point control has a signal");
            let mut csv = Csv::new(&["t", "v"]);
            let mut pts = Vec::with_capacity(times.len());
            for &t in &times {
                let x = v.eval(t);
                csv.row(&[num(t), num(x)]);
                pts.push((t, x));
            }
            (csv, vec![Series::new("v(t)", pts)])
        }
        ControlRegion::Internal { xi, n } => {
            let h = 1.0 / n as f64;
            let eff = effective_trace_poly(&sol.adjoint, xi, n);
            let mut csv = Csv::new(&["t", "field_left", "field_mid", "field_right", "effective_trace"]);
            let mut mid = Vec::with_capacity(times.len());
            let mut eff_pts = Vec::with_capacity(times.len());
            for &t in &times {
                let f = |x: f64| sol.control.field_at(x, t).unwrap_or(0.0);
                let (l, m, r) = (f(xi), f(xi + 0.5 * h), f(xi + h));
                let e = eff.eval(t);
                csv.row(&[num(t), num(l), num(m), num(r), num(e)]);
                mid.push((t, m));
                eff_pts.push((t, e));
            }
            (csv, vec![Series::new("field at window centre", mid), Series::new("effective trace", eff_pts)])
        }
    };
    art.csv("control.csv", csv)?;
    art.write("control.svg", &line_plot("control", "t", "value", &series, Axes::Linear))?;

    let report = ControlReport {
        region,
        horizon: cfg.horizon,
        modes: cfg.modes,
        diagnostics: sol.diagnostics.clone(),
        final_residual: sol.report.final_residual,
        identity_error: sol.report.identity_error,
        control_energy: sol.report.control_energy,
        tolerance: cfg.tolerance,
        pass: failures.is_empty(),
    };
    art.json("report.json", "control_report", &report)?;
    Ok(failures)
}

pub fn run_sweep(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Failures, CliError> {
    let (p, q) = rational(cfg);
    let mut sc = SweepConfig::new(p, q, cfg.n_list.clone().unwrap_or_default(), cfg.initial_data());
    sc.horizon = cfg.horizon;
    sc.regularization = cfg.regularization;
    sc.grid = cfg.grid;
    sc.seed = cfg.seed;
    let out = sweep(&sc).map_err(numerical)?;

    let mut failures = Vec::new();
    let mut header = vec![
        "n",
        "adjoint_l2vdual",
        "adjoint_f",
        "control_energy",
        "final_residual",
        "identity_error",
        "trace_distance_l2",
        "trace_distance_hminus1",
    ];
    let psi_cols: Vec<String> = CHECKPOINTS.iter().map(|f| format!("psi_distance_{f}T")).collect();
    header.extend(psi_cols.iter().map(String::as_str));
    header.extend(["pairing_error", "duality_error"]);
    let mut csv = Csv::new(&header);
    for r in &out.records {
        let mut row = vec![
            r.n.to_string(),
            num(r.adjoint_l2vdual),
            num(r.adjoint_f),
            num(r.control_energy),
            num(r.final_residual),
            opt(r.identity_error),
            opt(r.trace_distance_l2),
            opt(r.trace_distance_hminus1),
        ];
        for i in 0..CHECKPOINTS.len() {
            row.push(opt(r.psi_distances.get(i).copied()));
        }
        row.push(opt(r.pairing_error));
        row.push(num(r.duality_error));
        csv.row(&row);
        if !(r.final_residual <= cfg.tolerance) {
            failures.push(format!("n = {}: final residual {:e} exceeds {:e}", r.n, r.final_residual, cfg.tolerance));
        }
    }
    art.csv("sweep.csv", csv)?;

    let distances: Vec<f64> = out.records.iter().filter_map(|r| r.trace_distance_l2).collect();
    let monotone = distances.windows(2).all(|w| w[1] <= MONOTONE_SLACK * w[0]);
    if !monotone {
        failures.push("effective-trace distance increased by more than 10%".into());
    }

    let (general, strategic) = if out.records.len() >= 3 {
        let g = scaling_report(&out.records, ScalingMode::General).map_err(numerical)?;
        if !g.pass {
            failures.push(format!("general scaling: {}", describe_fits(&g)));
        }
        let s = if out.strategic.strategic {
            let s = scaling_report(&out.records, ScalingMode::Strategic).map_err(numerical)?;
            if !s.pass {
                failures.push(format!("strategic scaling: {}", describe_fits(&s)));
            }
            Some(s)
        } else {
            None
        };
        (Some(g), s)
    } else {
        (None, None)
    };

    let series = vec![
        Series::new(
            "effective trace L2",
            out.records.iter().filter_map(|r| Some((r.n as f64, r.trace_distance_l2?))).collect(),
        ),
        Series::new(
            "effective trace H^-1",
            out.records.iter().filter_map(|r| Some((r.n as f64, r.trace_distance_hminus1?))).collect(),
        ),
        Series::new("pairing error", out.records.iter().filter_map(|r| Some((r.n as f64, r.pairing_error?))).collect()),
        Series::new(
            "state distance at T",
            out.records.iter().filter_map(|r| Some((r.n as f64, *r.psi_distances.last()?))).collect(),
        ),
    ];
    art.write("convergence.svg", &line_plot("window to point", "n", "distance", &series, Axes::LogLog))?;

    art.json(
        "scaling.json",
        "sweep_summary",
        &json!({
            "xi": format!("{p}/{q}"),
            "modes": cfg.modes,
            "horizon": cfg.horizon,
            "n_list": sc.n_list,
            "seed": cfg.seed,
            "strategic": out.strategic,
            "divergence": out.divergence,
            "data_fdual_norm": out.data_fdual_norm,
            "reference": out.reference.as_ref().map(|r| json!({
                "final_residual": r.final_residual,
                "identity_error": r.identity_error,
                "pairing_values": r.pairing_values,
            })),
            "general": general,
            "strategic_scaling": strategic,
            "trace_distance_monotone": monotone,
            "pass": failures.is_empty(),
        }),
    )?;
    Ok(failures)
}

fn describe_fits(r: &beamctl_core::ScalingReport) -> String {
    r.fits
        .iter()
        .filter(|f| !f.pass)
        .map(|f| format!("{} exponent {:.3} not below {:.1}", f.quantity, f.exponent, r.threshold - r.margin))
        .collect::<Vec<_>>()
        .join("; ")
}
