//! Observability Gramians and minimal-energy (HUM) null controls.
//!
//! Adjoint data `p` is stored interleaved, `[alpha_0, gamma_0, alpha_1, ...]`,
//! for the free motion `phi_p = sum (alpha_m cos(omega_m t) + gamma_m sin(omega_m t)) sin(mu_m x)`.
//! The control is `n chi_window phi_p` (window) or `phi_p(xi, t) delta_xi`
//! (point), and it drives the data `y` to rest at `T` exactly when
//! `Lambda p = r(y)`, with `Lambda` the Gramian and `r` from [`duality_vector`].

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam_dynamics::{evolve_to_final, time_overlap, ControlField, ControlRegion, OverlapKind};
use crate::error::{invalid, BeamError, Result};
use crate::modal_space::{frequency, norm, DataSpace, ModalState};

/// Version tag written into every JSON document.
pub const SCHEMA: &str = "beamctl/1";

/// Default truncation.
pub const DEFAULT_MODES: usize = 16;

/// Eigenvalue ratio under which an unregularized Gramian counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-13;

const MAX_REFINEMENT: usize = 8;

/// Dense observability Gramian with its metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gramian {
    pub schema: String,
    pub dim: usize,
    pub modes: usize,
    pub region: ControlRegion,
    pub horizon: f64,
    /// Row-major entries.
    pub entries: Vec<f64>,
    /// `lambda_max / lambda_min`, infinite when `lambda_min <= 0`.
    pub condition_estimate: f64,
}

impl Gramian {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `p^T Lambda p`: the observed energy of the free motion of `adjoint`.
    pub fn quadratic_form(&self, adjoint: &ModalState) -> Result<f64> {
        if adjoint.modes() != self.modes {
            return Err(invalid("adjoint truncation does not match the Gramian"));
        }
        let p = DVector::from_vec(adjoint.to_interleaved());
        Ok(p.dot(&(self.matrix() * &p)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("gramian serializes")
    }
}

fn condition(eigenvalues: &[f64]) -> f64 {
    let lo = eigenvalues.first().copied().unwrap_or(0.0);
    let hi = eigenvalues.last().copied().unwrap_or(0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Assembles the Gramian in closed form: every entry is a spatial overlap
/// times a time overlap.
pub fn assemble_gramian(region: &ControlRegion, horizon: f64, modes: usize) -> Result<Gramian> {
    if modes == 0 {
        return Err(invalid("truncation must keep at least one mode"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon must be positive"));
    }
    let weights = region.observation_weights(modes)?;
    let dim = 2 * modes;
    let blocks: Vec<Vec<(usize, [f64; 4])>> = (0..modes)
        .into_par_iter()
        .map(|j| {
            let wj = frequency(j);
            (j..modes)
                .map(|k| {
                    let wk = frequency(k);
                    let s = weights[j][k];
                    let block = [
                        s * time_overlap(OverlapKind::CosCos, wj, wk, horizon),
                        s * time_overlap(OverlapKind::CosSin, wj, wk, horizon),
                        s * time_overlap(OverlapKind::CosSin, wk, wj, horizon),
                        s * time_overlap(OverlapKind::SinSin, wj, wk, horizon),
                    ];
                    (k, block)
                })
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; dim * dim];
    for (j, row) in blocks.into_iter().enumerate() {
        for (k, [cc, cs, sc, ss]) in row {
            let mut put = |r: usize, c: usize, v: f64| {
                entries[r * dim + c] = v;
                entries[c * dim + r] = v;
            };
            put(2 * j, 2 * k, cc);
            put(2 * j, 2 * k + 1, cs);
            put(2 * j + 1, 2 * k, sc);
            put(2 * j + 1, 2 * k + 1, ss);
        }
    }
    let mut g =
        Gramian { schema: SCHEMA.to_string(), dim, modes, region: *region, horizon, entries, condition_estimate: 0.0 };
    g.condition_estimate = condition(&g.eigenvalues());
    Ok(g)
}

/// Tikhonov shift added to the Gramian before factorization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Regularization {
    /// `epsilon = factor * trace(Lambda) / dim`.
    Relative(f64),
    /// Fixed `epsilon`.
    Absolute(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Self::Relative(1e-10)
    }
}

impl Regularization {
    pub fn epsilon(&self, gramian: &Gramian) -> f64 {
        match *self {
            Self::Relative(f) => f * gramian.trace() / gramian.dim as f64,
            Self::Absolute(e) => e,
        }
    }

    fn value(&self) -> f64 {
        match *self {
            Self::Relative(v) | Self::Absolute(v) => v,
        }
    }
}

/// Data to be steered to rest, and how to solve for the control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    pub region: ControlRegion,
    pub horizon: f64,
    pub initial_data: ModalState,
    pub regularization: Regularization,
    /// Target relative null-control residual.
    pub tolerance: f64,
}

impl ControlProblem {
    pub fn new(region: ControlRegion, horizon: f64, initial_data: ModalState) -> Result<Self> {
        let p = Self { region, horizon, initial_data, regularization: Regularization::default(), tolerance: 1e-6 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_regularization(mut self, regularization: Regularization) -> Result<Self> {
        self.regularization = regularization;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.initial_data.modes()
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon must be positive"));
        }
        let eps = self.regularization.value();
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(invalid("regularization must be non-negative"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        Ok(())
    }

    /// Amplitude of the synthesized control relative to `phi`: `n` for a window, 1 for a point.
    pub fn control_scale(&self) -> f64 {
        control_scale(&self.region)
    }
}

fn control_scale(region: &ControlRegion) -> f64 {
    match *region {
        ControlRegion::Internal { n, .. } => n as f64,
        ControlRegion::Pointwise { .. } => 1.0,
    }
}

/// `<y0, phi1> - <y1, phi0>` as a linear form in the adjoint data:
/// `r[2m] = -omega_m beta_m / 2`, `r[2m+1] = omega_m a_m / 2`.
pub fn duality_vector(data: &ModalState) -> Vec<f64> {
    let mut r = Vec::with_capacity(2 * data.modes());
    for m in 0..data.modes() {
        let w = frequency(m);
        r.push(-0.5 * w * data.beta()[m]);
        r.push(0.5 * w * data.a()[m]);
    }
    r
}

/// `<y0, phi1> - <y1, phi0>` for adjoint data `adjoint`.
pub fn pairing(data: &ModalState, adjoint: &ModalState) -> Result<f64> {
    if data.modes() != adjoint.modes() {
        return Err(invalid("pairing needs equal truncations"));
    }
    Ok(duality_vector(data).iter().zip(adjoint.to_interleaved()).map(|(r, p)| r * p).sum())
}

/// What the solve reports besides the adjoint data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumDiagnostics {
    pub condition_estimate: f64,
    pub epsilon: f64,
    /// `||(Lambda + eps I) p - r|| / ||r||`: accuracy of the factorized solve.
    pub solve_residual: f64,
    /// `||Lambda p - r|| / ||r||`: includes the Tikhonov bias.
    pub gramian_residual: f64,
    /// `p^T Lambda p`.
    pub energy: f64,
    pub refinement_steps: usize,
}

/// Solves for the adjoint data of the minimal-energy control.
pub fn solve_hum(problem: &ControlProblem) -> Result<(ModalState, HumDiagnostics)> {
    problem.validate()?;
    let g = assemble_gramian(&problem.region, problem.horizon, problem.modes())?;
    solve_with_gramian(problem, &g)
}

/// [`solve_hum`] against an already assembled Gramian.
pub fn solve_with_gramian(problem: &ControlProblem, gramian: &Gramian) -> Result<(ModalState, HumDiagnostics)> {
    problem.validate()?;
    if gramian.modes != problem.modes() || gramian.region != problem.region || gramian.horizon != problem.horizon {
        return Err(invalid("Gramian was assembled for a different problem"));
    }
    let dim = gramian.dim;
    let lambda = gramian.matrix();
    let r = DVector::from_vec(duality_vector(&problem.initial_data));
    let eps = problem.regularization.epsilon(gramian);
    let mut diag = HumDiagnostics {
        condition_estimate: gramian.condition_estimate,
        epsilon: eps,
        solve_residual: 0.0,
        gramian_residual: 0.0,
        energy: 0.0,
        refinement_steps: 0,
    };
    let r_norm = r.norm();
    if r_norm == 0.0 {
        return Ok((ModalState::zeros(problem.modes()), diag));
    }

    if eps == 0.0 {
        let eig = SymmetricEigen::new(lambda.clone());
        let (imin, lmin) =
            eig.eigenvalues.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let ratio = if lmax > 0.0 { lmin / lmax } else { 0.0 };
        if ratio <= SINGULAR_RATIO {
            return Err(BeamError::NonInvertible { mode: null_mode(&eig.eigenvectors.column(imin)), ratio });
        }
    }

    let shifted = &lambda + DMatrix::identity(dim, dim) * eps;
    let chol = Cholesky::new(shifted.clone()).ok_or_else(|| {
        let eig = SymmetricEigen::new(shifted.clone());
        let (imin, lmin) =
            eig.eigenvalues.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
        let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        BeamError::NonInvertible {
            mode: null_mode(&eig.eigenvectors.column(imin)),
            ratio: if lmax > 0.0 { lmin / lmax } else { 0.0 },
        }
    })?;

    let mut p = chol.solve(&r);
    for step in 0..MAX_REFINEMENT {
        let res = &r - &shifted * &p;
        let dp = chol.solve(&res);
        p += &dp;
        diag.refinement_steps = step + 1;
        if dp.norm() <= 1e-16 * p.norm() {
            break;
        }
    }
    diag.solve_residual = (&shifted * &p - &r).norm() / r_norm;
    diag.gramian_residual = (&lambda * &p - &r).norm() / r_norm;
    diag.energy = p.dot(&(&lambda * &p));
    Ok((ModalState::from_interleaved(p.as_slice())?, diag))
}

fn null_mode(v: &nalgebra::DVectorView<'_, f64>) -> usize {
    let (i, _) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("non-empty");
    i / 2
}

/// The control generated by adjoint data: `n phi` on the window, or the
/// trace `phi(xi, t)` applied at the point.
pub fn synthesize_control(adjoint: &ModalState, region: &ControlRegion, horizon: f64) -> Result<ControlField> {
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    match *region {
        ControlRegion::Internal { .. } => ControlField::window(*region, adjoint.clone(), control_scale(region)),
        ControlRegion::Pointwise { xi } => ControlField::point_trace(xi, adjoint.clone()),
    }
}

/// How well a control drives its problem to rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullControlReport {
    /// `L2 x V'` norm of the final state relative to that of the initial data.
    pub final_residual: f64,
    pub final_norm: f64,
    /// `|pairing(y, scale phi) - int int control^2| / int int control^2`;
    /// `None` when the control has no energy.
    pub identity_error: Option<f64>,
    pub control_energy: f64,
}

/// Evolves the problem data under `control` and checks the HUM identity.
pub fn verify_null_control(problem: &ControlProblem, control: &ControlField) -> Result<NullControlReport> {
    problem.validate()?;
    let data = &problem.initial_data;
    let (_, final_norm) = evolve_to_final(data, control, problem.horizon)?;
    let scale = norm(data, DataSpace::L2Vdual)?;
    let final_residual = if scale > 0.0 { final_norm / scale } else { final_norm };
    let energy = control.energy(problem.horizon);
    let identity_error = match control.adjoint() {
        Some((adjoint, amp)) if energy > 0.0 => {
            let lhs = amp * pairing(data, adjoint)?;
            Some((lhs - energy).abs() / energy)
        }
        _ => None,
    };
    Ok(NullControlReport { final_residual, final_norm, identity_error, control_energy: energy })
}

/// Assemble, solve, synthesize and verify in one call.
pub fn solve_and_verify(problem: &ControlProblem) -> Result<HumSolution> {
    let gramian = assemble_gramian(&problem.region, problem.horizon, problem.modes())?;
    let (adjoint, diagnostics) = solve_with_gramian(problem, &gramian)?;
    let control = synthesize_control(&adjoint, &problem.region, problem.horizon)?;
    let report = verify_null_control(problem, &control)?;
    Ok(HumSolution { gramian, adjoint, diagnostics, control, report })
}

/// Everything produced by [`solve_and_verify`].
#[derive(Clone, Debug)]
pub struct HumSolution {
    pub gramian: Gramian,
    pub adjoint: ModalState,
    pub diagnostics: HumDiagnostics,
    pub control: ControlField,
    pub report: NullControlReport,
}
