//! Free and forced motion of the beam in closed form.
//!
//! Mode `m` obeys `y'' + omega_m^2 y = g_m(t)`, where `g_m` is the sine
//! coefficient of the forcing (`g = sum g_m(t) sin(mu_m x)`). The forced part
//! is the Duhamel integral
//!
//! ```text
//! y_m(T) = (1/omega_m) int_0^T sin(omega_m (T - s)) g_m(s) ds
//! ```
//!
//! which, for trigonometric forcing, splits into the cos/sin overlaps of
//! [`time_overlap`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, BeamError, Result};
use crate::modal_space::{frequency, norm, wavenumber, DataSpace, ModalState};
use crate::signal::{moment_cos, moment_sin, uniform_grid, TraceSignal, TrigPoly, TrigTerm};

/// Default horizon; the smallest `T` for which the observability estimates hold.
pub const DEFAULT_HORIZON: f64 = 2.0;

/// Default number of samples for sampled traces.
pub const DEFAULT_GRID: usize = 2048;

/// Relative frequency gap below which two frequencies are treated as equal.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Minimum samples per period of the fastest retained mode for sampled forcing.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 10.0;

/// Where the control acts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlRegion {
    /// Distributed control on `[xi, xi + 1/n]`.
    Internal { xi: f64, n: u32 },
    /// Point control `v(t) delta_xi`.
    Pointwise { xi: f64 },
}

impl ControlRegion {
    pub fn internal(xi: f64, n: u32) -> Result<Self> {
        let r = Self::Internal { xi, n };
        r.validate()?;
        Ok(r)
    }

    pub fn pointwise(xi: f64) -> Result<Self> {
        let r = Self::Pointwise { xi };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Internal { xi, n } => {
                if n == 0 || !(xi > 0.0 && xi < 1.0) || xi + 1.0 / n as f64 > 1.0 + 1e-12 {
                    return Err(BeamError::InvalidRegion { xi, n });
                }
            }
            Self::Pointwise { xi } => {
                if !(xi > 0.0 && xi <= 1.0) {
                    return Err(invalid(format!("point xi = {xi} must lie in (0, 1]")));
                }
            }
        }
        Ok(())
    }

    pub fn xi(&self) -> f64 {
        match *self {
            Self::Internal { xi, .. } | Self::Pointwise { xi } => xi,
        }
    }

    /// `[xi, xi + 1/n]` for internal regions.
    pub fn window(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Internal { xi, n } => Some((xi, xi + 1.0 / n as f64)),
            Self::Pointwise { .. } => None,
        }
    }

    /// Spatial weights of the observation operator: `n int_window sin(mu_j x)
    /// sin(mu_k x) dx` for a window, `sin(mu_j xi) sin(mu_k xi)` for a point.
    #[allow(clippy::needless_range_loop)]
    pub fn observation_weights(&self, modes: usize) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut w = vec![vec![0.0; modes]; modes];
        for j in 0..modes {
            for k in j..modes {
                let v = match *self {
                    Self::Internal { n, .. } => n as f64 * spatial_overlap(j, k, self)?,
                    Self::Pointwise { .. } => spatial_overlap(j, k, self)?,
                };
                w[j][k] = v;
                w[k][j] = v;
            }
        }
        Ok(w)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `1 - sin(x)/x` without cancellation near zero.
pub(crate) fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        1.0 - x.sin() / x
    }
}

/// `int_a^b sin^2(mu x) dx`, written as
/// `(h/2) [(1 - sinc(mu h)) + 2 sinc(mu h) sin^2(mu (a + b)/2)]`
/// so that no two large terms cancel when the window is short.
pub(crate) fn sin_sq_integral(mu: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    if h == 0.0 {
        return 0.0;
    }
    let x = mu * h;
    let s = (0.5 * mu * (a + b)).sin();
    0.5 * h * (one_minus_sinc(x) + 2.0 * sinc(x) * s * s)
}

/// `int_a^b cos(lambda x) dx`.
fn cos_interval(lambda: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    h * sinc(0.5 * lambda * h) * (0.5 * lambda * (a + b)).cos()
}

/// `int_a^b sin(mu_j x) sin(mu_k x) dx`.
pub fn interval_overlap(j: usize, k: usize, a: f64, b: f64) -> f64 {
    if j == k {
        return sin_sq_integral(wavenumber(j), a, b);
    }
    let (mj, mk) = (wavenumber(j), wavenumber(k));
    0.5 * (cos_interval(mj - mk, a, b) - cos_interval(mj + mk, a, b))
}

/// Spatial overlap of modes `j` and `k` over the control region.
///
/// Internal: `int_xi^{xi+1/n} sin(mu_j x) sin(mu_k x) dx` (not scaled by `n`).
/// Pointwise: `sin(mu_j xi) sin(mu_k xi)`.
pub fn spatial_overlap(j: usize, k: usize, region: &ControlRegion) -> Result<f64> {
    region.validate()?;
    Ok(match *region {
        ControlRegion::Internal { xi, n } => interval_overlap(j, k, xi, xi + 1.0 / n as f64),
        ControlRegion::Pointwise { xi } => (wavenumber(j) * xi).sin() * (wavenumber(k) * xi).sin(),
    })
}

/// Which product [`time_overlap`] integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapKind {
    /// `cos(w t) cos(w' t)`
    CosCos,
    /// `cos(w t) sin(w' t)`
    CosSin,
    /// `sin(w t) sin(w' t)`
    SinSin,
}

/// `int_0^T cos(l t) dt`.
fn cos_integral(lambda: f64, horizon: f64) -> f64 {
    horizon * sinc(lambda * horizon)
}

/// `int_0^T sin(l t) dt = 2 sin^2(l T / 2) / l`.
fn sin_integral(lambda: f64, horizon: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let s = (0.5 * lambda * horizon).sin();
    2.0 * s * s / lambda
}

/// Exact `int_0^T` of the product selected by `kind`.
///
/// When `|w - w'| < 1e-9 max(w, w', 1)` the difference-frequency integrals
/// use their secular (Taylor) form around zero frequency.
pub fn time_overlap(kind: OverlapKind, w: f64, w2: f64, horizon: f64) -> f64 {
    let diff = w - w2;
    let sum = w + w2;
    let resonant = diff.abs() < RESONANCE_TOL * w.abs().max(w2.abs()).max(1.0);
    let (cd, sd) = if resonant {
        let t = horizon;
        let d = diff;
        (t - d * d * t.powi(3) / 6.0, d * t * t / 2.0 - d.powi(3) * t.powi(4) / 24.0)
    } else {
        (cos_integral(diff, horizon), sin_integral(diff, horizon))
    };
    let (cs, ss) = (cos_integral(sum, horizon), sin_integral(sum, horizon));
    match kind {
        OverlapKind::CosCos => 0.5 * (cd + cs),
        OverlapKind::SinSin => 0.5 * (cd - cs),
        // cos(w t) sin(w' t) = (sin((w + w') t) - sin((w - w') t)) / 2
        OverlapKind::CosSin => 0.5 * (ss - sd),
    }
}

/// Forcing given as samples of each `g_m` on the uniform grid of `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledForcing {
    horizon: f64,
    values: Vec<Vec<f64>>,
}

impl SampledForcing {
    pub fn new(horizon: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(invalid("sampled forcing horizon must be positive"));
        }
        let len = values.first().map_or(0, Vec::len);
        if len < 2 || values.iter().any(|v| v.len() != len) {
            return Err(invalid("sampled forcing needs at least two samples per mode, equal for every mode"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("sampled forcing must be finite"));
        }
        Ok(Self { horizon, values })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn modes(&self) -> usize {
        self.values.len()
    }

    pub fn grid_size(&self) -> usize {
        self.values[0].len()
    }

    pub fn step(&self) -> f64 {
        self.horizon / (self.grid_size() - 1) as f64
    }

    /// Piecewise-linear interpolant of `g_m` at `t`.
    pub fn value(&self, m: usize, t: f64) -> f64 {
        let v = &self.values[m];
        let h = self.step();
        let pos = (t / h).clamp(0.0, (v.len() - 1) as f64);
        let i = (pos.floor() as usize).min(v.len() - 2);
        let frac = pos - i as f64;
        v[i] + frac * (v[i + 1] - v[i])
    }

    /// `(int_0^T cos(w s) g_m(s) ds, int_0^T sin(w s) g_m(s) ds)` for the
    /// piecewise-linear interpolant, integrated exactly panel by panel.
    fn integrals(&self, m: usize, w: f64, horizon: f64) -> (f64, f64) {
        let v = &self.values[m];
        let h = self.step();
        let panel = |t0: f64, width: f64, g0: f64, g1: f64| -> (f64, f64) {
            // int_0^width e^{i w (t0 + u)} (g0 + (g1 - g0) u / width) du
            let ar = moment_cos(0, w, width);
            let ai = moment_sin(0, w, width);
            let br = moment_cos(1, w, width) / width;
            let bi = moment_sin(1, w, width) / width;
            let re = g0 * ar + (g1 - g0) * br;
            let im = g0 * ai + (g1 - g0) * bi;
            let (s, c) = (w * t0).sin_cos();
            (c * re - s * im, s * re + c * im)
        };
        let full = ((horizon / h) + 1e-9).floor() as usize;
        let full = full.min(v.len() - 1);
        let (mut ic, mut is) = (0.0, 0.0);
        for i in 0..full {
            let (a, b) = panel(i as f64 * h, h, v[i], v[i + 1]);
            ic += a;
            is += b;
        }
        let t0 = full as f64 * h;
        let rest = horizon - t0;
        if rest > 1e-12 * h {
            let (a, b) = panel(t0, rest, self.value(m, t0), self.value(m, horizon));
            ic += a;
            is += b;
        }
        (ic, is)
    }
}

/// Spatial shape of a forcing field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldProfile {
    /// `scale * phi(x, t)` on `[xi, xi + 1/n]`, zero elsewhere, where `phi` is
    /// the free evolution of `adjoint`.
    Window { region: ControlRegion, adjoint: ModalState, scale: f64 },
    /// `v(t) delta_xi`; `adjoint` is set when `v` is the trace of a free motion.
    Point { xi: f64, signal: TrigPoly, adjoint: Option<ModalState> },
    /// `sum g_m(t) sin(mu_m x)` over the whole beam.
    Distributed,
}

/// A forcing term together with its modal time coefficients `g_m(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    profile: FieldProfile,
    modal: Option<Vec<TrigPoly>>,
    sampled: Option<SampledForcing>,
}

impl ControlField {
    /// `scale * phi` restricted to an internal window; `phi` evolves from `adjoint`.
    pub fn window(region: ControlRegion, adjoint: ModalState, scale: f64) -> Result<Self> {
        let ControlRegion::Internal { xi, n } = region else {
            return Err(invalid("a window field needs an internal region"));
        };
        let modes = adjoint.modes();
        let (a, b) = (xi, xi + 1.0 / n as f64);
        region.validate()?;
        let free = free_motion(&adjoint);
        let modal = (0..modes)
            .map(|m| {
                let mut g = TrigPoly::zero();
                for (j, phi_j) in free.iter().enumerate() {
                    g.add_scaled(phi_j, 2.0 * scale * interval_overlap(m, j, a, b));
                }
                g
            })
            .collect();
        Ok(Self { profile: FieldProfile::Window { region, adjoint, scale }, modal: Some(modal), sampled: None })
    }

    /// Point forcing `v(t) delta_xi`, projected on `modes` modes.
    pub fn point(xi: f64, signal: TrigPoly, modes: usize) -> Result<Self> {
        ControlRegion::pointwise(xi)?;
        let modal = (0..modes).map(|m| signal.scaled(2.0 * (wavenumber(m) * xi).sin())).collect();
        Ok(Self { profile: FieldProfile::Point { xi, signal, adjoint: None }, modal: Some(modal), sampled: None })
    }

    /// Point forcing whose signal is the trace `phi(xi, t)` of the free motion of `adjoint`.
    pub fn point_trace(xi: f64, adjoint: ModalState) -> Result<Self> {
        let mut field = Self::point(xi, trace_poly(&adjoint, xi), adjoint.modes())?;
        if let FieldProfile::Point { adjoint: slot, .. } = &mut field.profile {
            *slot = Some(adjoint);
        }
        Ok(field)
    }

    /// Free motion generating the field, if there is one, with its amplitude factor.
    pub fn adjoint(&self) -> Option<(&ModalState, f64)> {
        match &self.profile {
            FieldProfile::Window { adjoint, scale, .. } => Some((adjoint, *scale)),
            FieldProfile::Point { adjoint: Some(a), .. } => Some((a, 1.0)),
            _ => None,
        }
    }

    /// Distributed forcing from its modal coefficients.
    pub fn distributed(modal: Vec<TrigPoly>) -> Self {
        Self { profile: FieldProfile::Distributed, modal: Some(modal), sampled: None }
    }

    /// Distributed forcing known only through samples.
    pub fn sampled(samples: SampledForcing) -> Self {
        Self { profile: FieldProfile::Distributed, modal: None, sampled: Some(samples) }
    }

    pub fn zero(modes: usize) -> Self {
        Self::distributed(vec![TrigPoly::zero(); modes])
    }

    /// Attaches samples of every `g_m` on a uniform grid of `[0, horizon]`.
    pub fn with_sampled_fallback(mut self, horizon: f64, grid: usize) -> Result<Self> {
        let modal = self.modal.as_ref().ok_or_else(|| invalid("field has no closed form to sample"))?;
        let values = modal.iter().map(|g| g.sample(horizon, grid)).collect();
        self.sampled = Some(SampledForcing::new(horizon, values)?);
        Ok(self)
    }

    pub fn profile(&self) -> &FieldProfile {
        &self.profile
    }

    pub fn region(&self) -> Option<ControlRegion> {
        match &self.profile {
            FieldProfile::Window { region, .. } => Some(*region),
            FieldProfile::Point { xi, .. } => Some(ControlRegion::Pointwise { xi: *xi }),
            FieldProfile::Distributed => None,
        }
    }

    pub fn modal(&self) -> Option<&[TrigPoly]> {
        self.modal.as_deref()
    }

    pub fn sampled_fallback(&self) -> Option<&SampledForcing> {
        self.sampled.as_ref()
    }

    pub fn modes(&self) -> usize {
        match (&self.modal, &self.sampled) {
            (Some(m), _) => m.len(),
            (None, Some(s)) => s.modes(),
            (None, None) => 0,
        }
    }

    /// `g_m(t)`.
    pub fn modal_value(&self, m: usize, t: f64) -> f64 {
        match (&self.modal, &self.sampled) {
            (Some(g), _) => g.get(m).map_or(0.0, |g| g.eval(t)),
            (None, Some(s)) if m < s.modes() => s.value(m, t),
            _ => 0.0,
        }
    }

    /// The time signal `v` of a point control.
    pub fn signal(&self) -> Option<&TrigPoly> {
        match &self.profile {
            FieldProfile::Point { signal, .. } => Some(signal),
            _ => None,
        }
    }

    /// Field value at `(x, t)`; `None` for a point control, which is not a function.
    pub fn field_at(&self, x: f64, t: f64) -> Option<f64> {
        match &self.profile {
            FieldProfile::Window { region, adjoint, scale } => {
                let (a, b) = region.window()?;
                Some(if x >= a && x <= b { scale * homogeneous_eval(adjoint, x, t) } else { 0.0 })
            }
            FieldProfile::Point { .. } => None,
            FieldProfile::Distributed => {
                Some((0..self.modes()).map(|m| self.modal_value(m, t) * (wavenumber(m) * x).sin()).sum())
            }
        }
    }

    /// `int_0^T int_0^1 field^2 dx dt`, or `int_0^T v^2 dt` for a point control.
    pub fn energy(&self, horizon: f64) -> f64 {
        match &self.profile {
            FieldProfile::Window { region, adjoint, scale } => {
                let Some((a, b)) = region.window() else { return 0.0 };
                let free = free_motion(adjoint);
                let mut acc = 0.0;
                for j in 0..free.len() {
                    for k in 0..free.len() {
                        acc += interval_overlap(j, k, a, b) * free[j].inner(&free[k], horizon);
                    }
                }
                scale * scale * acc
            }
            FieldProfile::Point { signal, .. } => signal.norm_sq(horizon),
            FieldProfile::Distributed => match &self.modal {
                Some(g) => 0.5 * g.iter().map(|g| g.norm_sq(horizon)).sum::<f64>(),
                None => 0.0,
            },
        }
    }
}

/// Free motion of every mode, `a_m cos(omega_m t) + beta_m sin(omega_m t)`.
pub fn free_motion(state: &ModalState) -> Vec<TrigPoly> {
    state
        .a()
        .iter()
        .zip(state.beta())
        .enumerate()
        .map(|(m, (a, b))| TrigPoly::oscillation(frequency(m), *a, *b))
        .collect()
}

/// Free evolution of a state to time `t`.
pub fn evolve_free(state: &ModalState, t: f64) -> ModalState {
    let mut a = Vec::with_capacity(state.modes());
    let mut beta = Vec::with_capacity(state.modes());
    for m in 0..state.modes() {
        let (s, c) = (frequency(m) * t).sin_cos();
        let (a0, b0) = (state.a()[m], state.beta()[m]);
        a.push(a0 * c + b0 * s);
        beta.push(-a0 * s + b0 * c);
    }
    ModalState::new(a, beta).expect("rotation preserves shape")
}

/// `phi(x, t) = sum (a_m cos(omega_m t) + beta_m sin(omega_m t)) sin(mu_m x)`.
pub fn homogeneous_eval(state: &ModalState, x: f64, t: f64) -> f64 {
    (0..state.modes())
        .map(|m| {
            let (s, c) = (frequency(m) * t).sin_cos();
            (state.a()[m] * c + state.beta()[m] * s) * (wavenumber(m) * x).sin()
        })
        .sum()
}

/// Closed form of `phi(xi, t)`.
pub fn trace_poly(state: &ModalState, xi: f64) -> TrigPoly {
    let mut p = TrigPoly::zero();
    for m in 0..state.modes() {
        let w = (wavenumber(m) * xi).sin();
        p.push(TrigTerm::oscillation(frequency(m), w * state.a()[m], w * state.beta()[m]));
    }
    p
}

/// Closed form of `phi_x(xi, t)`.
pub fn trace_dx_poly(state: &ModalState, xi: f64) -> TrigPoly {
    let mut p = TrigPoly::zero();
    for m in 0..state.modes() {
        let mu = wavenumber(m);
        let w = mu * (mu * xi).cos();
        p.push(TrigTerm::oscillation(frequency(m), w * state.a()[m], w * state.beta()[m]));
    }
    p
}

fn check_trace_args(xi: f64, horizon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(invalid(format!("trace point xi = {xi} must lie in [0, 1]")));
    }
    if !(horizon > 0.0) {
        return Err(invalid("horizon must be positive"));
    }
    Ok(())
}

/// `phi(xi, .)` sampled on `grid` points of `[0, T]`.
pub fn trace(state: &ModalState, xi: f64, horizon: f64, grid: usize) -> Result<TraceSignal> {
    check_trace_args(xi, horizon)?;
    TraceSignal::from_poly(trace_poly(state, xi), horizon, grid)
}

/// `phi_x(xi, .)` sampled on `grid` points of `[0, T]`.
pub fn trace_dx(state: &ModalState, xi: f64, horizon: f64, grid: usize) -> Result<TraceSignal> {
    check_trace_args(xi, horizon)?;
    TraceSignal::from_poly(trace_dx_poly(state, xi), horizon, grid)
}

/// `(int_0^T cos(w s) g(s) ds, int_0^T sin(w s) g(s) ds)`.
fn forced_integrals(g: &TrigPoly, w: f64, horizon: f64) -> (f64, f64) {
    let (mut ic, mut is) = (0.0, 0.0);
    for term in g.terms() {
        if term.power == 0 {
            let nu = term.freq;
            ic += term.cos * time_overlap(OverlapKind::CosCos, w, nu, horizon)
                + term.sin * time_overlap(OverlapKind::CosSin, w, nu, horizon);
            is += term.cos * time_overlap(OverlapKind::CosSin, nu, w, horizon)
                + term.sin * time_overlap(OverlapKind::SinSin, w, nu, horizon);
        } else {
            let single = TrigPoly::from_terms(vec![*term]);
            ic += single.inner(&TrigPoly::oscillation(w, 1.0, 0.0), horizon);
            is += single.inner(&TrigPoly::oscillation(w, 0.0, 1.0), horizon);
        }
    }
    (ic, is)
}

/// State at time `T` of the beam started from `state0` and driven by `forcing`,
/// truncated to `modes` modes.
pub fn duhamel_solve(state0: &ModalState, forcing: &ControlField, horizon: f64, modes: usize) -> Result<ModalState> {
    if !(horizon >= 0.0) {
        return Err(invalid("horizon must be non-negative"));
    }
    if state0.modes() != modes {
        return Err(invalid(format!("initial state has {} modes, expected {modes}", state0.modes())));
    }
    let closed = forcing.modal().filter(|g| g.len() >= modes);
    let sampled = match closed {
        Some(_) => None,
        None => {
            let s = forcing
                .sampled_fallback()
                .filter(|s| s.modes() >= modes)
                .ok_or_else(|| invalid(format!("forcing does not provide {modes} modal coefficients")))?;
            if horizon > s.horizon() * (1.0 + 1e-12) {
                return Err(invalid("sampled forcing does not cover the requested horizon"));
            }
            let fastest = modes - 1;
            let period = 2.0 * std::f64::consts::PI / frequency(fastest);
            let per_period = period / s.step();
            if per_period < MIN_SAMPLES_PER_PERIOD {
                return Err(BeamError::Accuracy { mode: fastest, samples_per_period: per_period });
            }
            Some(s)
        }
    };

    let free = evolve_free(state0, horizon);
    let mut a = free.a().to_vec();
    let mut beta = free.beta().to_vec();
    for m in 0..modes {
        let w = frequency(m);
        let (ic, is) = match (closed, sampled) {
            (Some(g), _) => forced_integrals(&g[m], w, horizon),
            (None, Some(s)) => s.integrals(m, w, horizon),
            (None, None) => unreachable!(),
        };
        let (s, c) = (w * horizon).sin_cos();
        // y(T)  = (1/w) [sin(wT) Ic - cos(wT) Is]
        // y'(T) = cos(wT) Ic + sin(wT) Is, stored as y'(T)/w
        a[m] += (s * ic - c * is) / w;
        beta[m] += (c * ic + s * is) / w;
    }
    ModalState::new(a, beta)
}

/// Displacement `y_m(t)` of every retained mode as a closed-form signal.
///
/// Requires trigonometric forcing made of pure oscillations (power 0).
pub fn forced_trajectory(state0: &ModalState, forcing: &ControlField) -> Result<Vec<TrigPoly>> {
    let modes = state0.modes();
    let g = forcing
        .modal()
        .filter(|g| g.len() >= modes)
        .ok_or_else(|| invalid("forced trajectories need closed-form modal forcing"))?;
    let mut out = free_motion(state0);
    for m in 0..modes {
        let w = frequency(m);
        for term in g[m].terms() {
            if term.power != 0 {
                return Err(invalid("forced trajectories need pure-oscillation forcing"));
            }
            let (nu, c, s) = (term.freq, term.cos, term.sin);
            let y = &mut out[m];
            if (w - nu).abs() < RESONANCE_TOL * w.max(nu).max(1.0) {
                // c t sin(wt)/(2w) + s (sin(wt) - w t cos(wt))/(2 w^2)
                y.push(TrigTerm { freq: w, power: 1, cos: -s / (2.0 * w), sin: c / (2.0 * w) });
                y.push(TrigTerm::oscillation(w, 0.0, s / (2.0 * w * w)));
            } else {
                let d = (w - nu) * (w + nu);
                y.push(TrigTerm::oscillation(nu, c / d, s / d));
                y.push(TrigTerm::oscillation(w, -c / d, -s * nu / (w * d)));
            }
        }
        out[m] = out[m].compact();
    }
    Ok(out)
}

/// State at time `t` read off closed-form trajectories.
pub fn trajectory_state(trajectory: &[TrigPoly], t: f64) -> Result<ModalState> {
    let a = trajectory.iter().map(|y| y.eval(t)).collect();
    let beta = trajectory.iter().enumerate().map(|(m, y)| y.derivative().eval(t) / frequency(m)).collect();
    ModalState::new(a, beta)
}

/// Final state under `control` and its `L2 x V'` norm (the null-control residual).
pub fn evolve_to_final(state0: &ModalState, control: &ControlField, horizon: f64) -> Result<(ModalState, f64)> {
    let fin = duhamel_solve(state0, control, horizon, state0.modes())?;
    let r = norm(&fin, DataSpace::L2Vdual)?;
    Ok((fin, r))
}

/// Samples `u(x, t)` of a free motion on `grid` time points, for output.
pub fn sample_free_motion(state: &ModalState, x: f64, horizon: f64, grid: usize) -> Vec<f64> {
    uniform_grid(horizon, grid).map(|t| homogeneous_eval(state, x, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal_space::norm_sq;
    use beamctl_oracle::{integrate, rk4_oscillator};
    use std::f64::consts::PI;

    #[test]
    fn homogeneous_examples() {
        let s = ModalState::new(vec![1.0], vec![0.0]).unwrap();
        assert!((homogeneous_eval(&s, 1.0, 0.0) - 1.0).abs() < 1e-15);
        let period = 2.0 * PI / frequency(0);
        assert!((homogeneous_eval(&s, 1.0, period) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_matches_rk4() {
        let s = ModalState::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let (x, t) = (0.5, 0.3);
        let got = homogeneous_eval(&s, x, t);
        let (y, _) = rk4_oscillator(frequency(1), 1.0, 0.0, |_| 0.0, t, 1e-5);
        let want = y * (wavenumber(1) * x).sin();
        assert!((got - want).abs() < 1e-6);
        assert!((got - (9.0 * frequency(0) * 0.3).cos() * (0.75 * PI).sin()).abs() < 1e-12);
    }

    #[test]
    fn trace_examples() {
        let s = ModalState::new(vec![1.0], vec![0.0]).unwrap();
        let tr = trace(&s, 1.0, 2.0, 64).unwrap();
        for (t, v) in tr.times().iter().zip(tr.samples()) {
            assert!((v - (frequency(0) * t).cos()).abs() < 1e-14);
        }
        let dx = trace_dx(&s, 1.0, 2.0, 64).unwrap();
        assert!(dx.samples().iter().all(|v| v.abs() < 1e-14));

        let s = ModalState::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let tr = trace(&s, 2.0 / 3.0, 2.0, 64).unwrap();
        assert!(tr.samples().iter().all(|v| v.abs() < 1e-14));
        assert!(trace(&s, 1.5, 2.0, 64).is_err());
    }

    #[test]
    fn spatial_overlap_examples() {
        let r = ControlRegion::internal(0.25, 4).unwrap();
        let v = spatial_overlap(0, 0, &r).unwrap();
        let q = integrate(|x: f64| (wavenumber(0) * x).sin().powi(2), 0.25, 0.5, 1e-15, 1);
        assert!((v - q.value).abs() < 1e-14);
        assert!((v - 0.078_384_596).abs() < 1e-8);

        let p = ControlRegion::pointwise(0.5).unwrap();
        assert!((spatial_overlap(0, 1, &p).unwrap() - 0.5).abs() < 1e-15);

        for (j, k) in [(0, 0), (1, 3), (7, 7)] {
            assert_eq!(interval_overlap(j, k, 0.3, 0.3), 0.0);
        }
        assert!(ControlRegion::internal(0.8, 4).is_err());
        assert_eq!(
            spatial_overlap(0, 0, &ControlRegion::Internal { xi: 0.8, n: 4 }),
            Err(BeamError::InvalidRegion { xi: 0.8, n: 4 })
        );
    }

    #[test]
    fn time_overlap_examples() {
        let w0 = frequency(0);
        let cc = time_overlap(OverlapKind::CosCos, w0, w0, 2.0);
        assert!((cc - (1.0 + (4.0 * w0).sin() / (4.0 * w0))).abs() < 1e-15);
        assert!((cc - 0.956_401).abs() < 1e-6);
        let w = 3.7;
        assert!(time_overlap(OverlapKind::CosSin, w, w, 2.0 * PI / w).abs() < 1e-15);
        assert_eq!(time_overlap(OverlapKind::SinSin, 0.0, 0.0, 1.3), 0.0);
        assert_eq!(time_overlap(OverlapKind::SinSin, 0.0, 4.0, 1.3), 0.0);
        assert!((time_overlap(OverlapKind::CosCos, 0.0, 0.0, 1.3) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn near_resonant_overlap_is_continuous() {
        let w = 1000.0;
        for d in [1e-7, 1e-6, 9.9e-7, 1.01e-6, 1e-5] {
            for kind in [OverlapKind::CosCos, OverlapKind::CosSin, OverlapKind::SinSin] {
                let got = time_overlap(kind, w, w + d, 2.0);
                let q = integrate(
                    |t: f64| match kind {
                        OverlapKind::CosCos => (w * t).cos() * ((w + d) * t).cos(),
                        OverlapKind::CosSin => (w * t).cos() * ((w + d) * t).sin(),
                        OverlapKind::SinSin => (w * t).sin() * ((w + d) * t).sin(),
                    },
                    0.0,
                    2.0,
                    1e-14,
                    512,
                );
                assert!((got - q.value).abs() < 1e-10 * q.abs_value, "{kind:?} d={d}");
            }
        }
    }

    #[test]
    fn duhamel_zero_forcing_is_free_motion() {
        let s = ModalState::new(vec![0.3, -1.0, 0.2], vec![0.5, 0.1, -0.7]).unwrap();
        let out = duhamel_solve(&s, &ControlField::zero(3), 1.37, 3).unwrap();
        let free = evolve_free(&s, 1.37);
        for m in 0..3 {
            assert!((out.a()[m] - free.a()[m]).abs() < 1e-15);
            assert!((out.beta()[m] - free.beta()[m]).abs() < 1e-15);
            let e0 = s.a()[m].powi(2) + s.beta()[m].powi(2);
            let e1 = out.a()[m].powi(2) + out.beta()[m].powi(2);
            assert!((e0 - e1).abs() < 1e-12);
        }
        for (x, t) in [(0.2, 0.0), (0.7, 1.37)] {
            let direct = homogeneous_eval(&s, x, t);
            let via = crate::modal_space::reconstruct(evolve_free(&s, t).a(), x);
            assert!((direct - via).abs() < 1e-13);
        }
    }

    #[test]
    fn resonant_forcing_matches_rk4() {
        let w0 = frequency(0);
        let g = vec![TrigPoly::oscillation(w0, 1.0, 0.0)];
        let field = ControlField::distributed(g);
        let horizon = 2.0;
        let out = duhamel_solve(&ModalState::zeros(1), &field, horizon, 1).unwrap();
        let (y, v) = rk4_oscillator(w0, 0.0, 0.0, |t| (w0 * t).cos(), horizon, 1e-5);
        assert!((out.a()[0] - y).abs() < 1e-6);
        assert!((out.beta()[0] - v / w0).abs() < 1e-6);
        // secular envelope t sin(w t) / (2 w)
        let secular = horizon * (w0 * horizon).sin() / (2.0 * w0);
        assert!((out.a()[0] - secular).abs() < 1e-12);
    }

    #[test]
    fn non_resonant_forcing_matches_rk4() {
        let w1 = frequency(1);
        let field = ControlField::distributed(vec![TrigPoly::oscillation(w1, 0.0, 1.0)]);
        let out = duhamel_solve(&ModalState::zeros(1), &field, 2.0, 1).unwrap();
        let w0 = frequency(0);
        let (y, v) = rk4_oscillator(w0, 0.0, 0.0, |t| (w1 * t).sin(), 2.0, 1e-5);
        assert!((out.a()[0] - y).abs() < 1e-7);
        assert!((out.beta()[0] - v / w0).abs() < 1e-7);
    }

    #[test]
    fn trajectory_agrees_with_duhamel() {
        let s = ModalState::new(vec![0.4, 0.0, -0.2], vec![0.0, 0.3, 0.1]).unwrap();
        let g = vec![
            TrigPoly::from_terms(vec![
                TrigTerm::oscillation(frequency(0), 1.0, 0.5),
                TrigTerm::oscillation(7.0, -0.3, 0.2),
            ]),
            TrigPoly::oscillation(frequency(0), 0.0, 2.0),
            TrigPoly::from_terms(vec![
                TrigTerm::oscillation(0.0, 1.0, 0.0),
                TrigTerm::oscillation(frequency(2), 0.0, -1.0),
            ]),
        ];
        let field = ControlField::distributed(g);
        let traj = forced_trajectory(&s, &field).unwrap();
        for t in [0.0, 0.4, 1.1, 2.0] {
            let a = duhamel_solve(&s, &field, t, 3).unwrap();
            let b = trajectory_state(&traj, t).unwrap();
            let d = norm_sq(&a.sub(&b).unwrap(), DataSpace::L2Vdual).unwrap().sqrt();
            assert!(d < 1e-12, "t = {t}: {d}");
        }
    }

    #[test]
    fn sampled_forcing_accuracy_guard() {
        let modes = 4;
        let coarse = SampledForcing::new(2.0, vec![vec![0.0; 100]; modes]).unwrap();
        let err = duhamel_solve(&ModalState::zeros(modes), &ControlField::sampled(coarse), 2.0, modes);
        assert!(matches!(err, Err(BeamError::Accuracy { mode: 3, .. })));
    }

    #[test]
    fn sampled_fallback_tracks_closed_form() {
        let modes = 3;
        let g: Vec<TrigPoly> = (0..modes).map(|m| TrigPoly::oscillation(1.0 + m as f64, 1.0, -0.5)).collect();
        let closed = ControlField::distributed(g).with_sampled_fallback(2.0, 40001).unwrap();
        let s = closed.sampled_fallback().unwrap().clone();
        for m in 0..modes {
            for (i, t) in uniform_grid(2.0, 40001).enumerate().step_by(997) {
                let exact = closed.modal().unwrap()[m].eval(t);
                assert!((s.values[m][i] - exact).abs() <= 1e-9 * exact.abs().max(1.0));
            }
        }
        let state0 = ModalState::new(vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let a = duhamel_solve(&state0, &closed, 1.5, modes).unwrap();
        let b = duhamel_solve(&state0, &ControlField::sampled(s), 1.5, modes).unwrap();
        let d = norm_sq(&a.sub(&b).unwrap(), DataSpace::L2Vdual).unwrap().sqrt();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn window_field_is_supported_on_window() {
        let region = ControlRegion::internal(0.25, 4).unwrap();
        let adjoint = ModalState::new(vec![1.0], vec![0.0]).unwrap();
        let f = ControlField::window(region, adjoint, 4.0).unwrap();
        assert_eq!(f.field_at(0.1, 0.3), Some(0.0));
        assert_eq!(f.field_at(0.9, 0.3), Some(0.0));
        for (x, t) in [(0.3, 0.2), (0.45, 1.7)] {
            let want = 4.0 * (frequency(0) * t).cos() * (wavenumber(0) * x).sin();
            assert!((f.field_at(x, t).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn evolve_to_final_residuals() {
        let (fin, r) = evolve_to_final(&ModalState::zeros(3), &ControlField::zero(3), 2.0).unwrap();
        assert!(fin.is_zero() && r == 0.0);
        let s = ModalState::smooth_decay(5);
        let (_, r) = evolve_to_final(&s, &ControlField::zero(5), 2.0).unwrap();
        assert!((r - norm(&s, DataSpace::L2Vdual).unwrap()).abs() < 1e-14);
    }
}
