//! Modal basis of the hinged-sliding beam and the weighted norms built on it.
//!
//! The operator `d^4/dx^4` with `u(0) = u_x(1) = u_xx(0) = u_xxx(1) = 0` has
//! eigenfunctions `sin(mu_m x)` with `mu_m = (2m + 1) pi / 2`, and the beam
//! vibrates at `omega_m = mu_m^2`. A state `(u0, u1)` is stored as
//!
//! ```text
//! u0(x) = sum a_m sin(mu_m x)
//! u1(x) = sum omega_m beta_m sin(mu_m x)
//! ```
//!
//! so that the free motion of mode `m` is `a_m cos(omega_m t) + beta_m sin(omega_m t)`
//! and the `L2 x V'` norm is the plain half-sum `(1/2) sum (a_m^2 + beta_m^2)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, BeamError, Result};
use crate::quadrature::CompositeRule;

/// Below this magnitude `sin(mu_m xi)` is treated as an exact zero.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Spatial wavenumber `mu_m = (2m + 1) pi / 2`.
#[inline]
pub fn wavenumber(m: usize) -> f64 {
    (2 * m + 1) as f64 * FRAC_PI_2
}

/// Temporal frequency `omega_m = mu_m^2`.
#[inline]
pub fn frequency(m: usize) -> f64 {
    let mu = wavenumber(m);
    mu * mu
}

/// Wavenumbers and frequencies of the first `M` modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    mu: Vec<f64>,
    omega: Vec<f64>,
}

impl FrequencyTable {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("the truncation must keep at least one mode"));
        }
        let mu: Vec<f64> = (0..modes).map(wavenumber).collect();
        let omega = mu.iter().map(|m| m * m).collect();
        Ok(Self { mu, omega })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
}

/// Frequency table for `M` modes.
pub fn frequencies(modes: usize) -> Result<FrequencyTable> {
    FrequencyTable::new(modes)
}

/// Truncated beam state in energy-normalised modal coordinates.
///
/// `a[m]` is the displacement coefficient and `beta[m] = b_m / mu_m^4` the
/// velocity coefficient divided by `omega_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    a: Vec<f64>,
    beta: Vec<f64>,
}

impl ModalState {
    pub fn new(a: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if a.len() != beta.len() {
            return Err(invalid(format!("displacement has {} coefficients but velocity has {}", a.len(), beta.len())));
        }
        if a.is_empty() {
            return Err(invalid("a modal state needs at least one mode"));
        }
        if a.iter().chain(&beta).any(|v| !v.is_finite()) {
            return Err(invalid("modal coefficients must be finite"));
        }
        Ok(Self { a, beta })
    }

    pub fn zeros(modes: usize) -> Self {
        Self { a: vec![0.0; modes], beta: vec![0.0; modes] }
    }

    /// Builds a state from plain `L2` sine coefficients of displacement and velocity.
    pub fn from_displacement_velocity(u0: &[f64], u1: &[f64]) -> Result<Self> {
        let beta = u1.iter().enumerate().map(|(m, v)| v / frequency(m)).collect();
        Self::new(u0.to_vec(), beta)
    }

    /// `a_m = 1 / (m + 1)^2`, zero velocity.
    pub fn smooth_decay(modes: usize) -> Self {
        let a = (0..modes).map(|m| 1.0 / ((m + 1) as f64).powi(2)).collect();
        Self { a, beta: vec![0.0; modes] }
    }

    /// Unit displacement in mode `k` only.
    pub fn single_mode(modes: usize, k: usize) -> Result<Self> {
        if k >= modes {
            return Err(invalid(format!("mode {k} is outside a {modes}-mode truncation")));
        }
        let mut s = Self::zeros(modes);
        s.a[k] = 1.0;
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `L2` sine coefficients of the velocity, `omega_m beta_m`.
    pub fn velocity(&self) -> Vec<f64> {
        self.beta.iter().enumerate().map(|(m, b)| b * frequency(m)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.beta).all(|v| *v == 0.0)
    }

    /// Interleaved coordinates `[a_0, beta_0, a_1, beta_1, ...]`, the ordering
    /// used by the Gramian.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.a.iter().zip(&self.beta).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn from_interleaved(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(invalid("interleaved modal vector must have even length"));
        }
        let a = v.iter().step_by(2).copied().collect();
        let beta = v.iter().skip(1).step_by(2).copied().collect();
        Self::new(a, beta)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { a: self.a.iter().map(|v| v * k).collect(), beta: self.beta.iter().map(|v| v * k).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.modes() != other.modes() {
            return Err(invalid("modal states have different truncations"));
        }
        Ok(Self {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect(),
            beta: self.beta.iter().zip(&other.beta).map(|(x, y)| x - y).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.sub(&other.scaled(-1.0))
    }
}

/// Weighted space for a single function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpaceTag {
    L2,
    V,
    Vdual,
    D4,
    F(f64),
    Fdual(f64),
}

/// Weighted space for a displacement/velocity pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataSpace {
    /// `L2 x V'`: weights 1 on `a` and `beta`.
    L2Vdual,
    /// `V x L2`: weights `mu^4`.
    VL2,
    /// `D(d^4) x V`: weights `mu^8`.
    D4V,
    /// Observability space at `xi`: weights `sin^2(mu_m xi)`.
    F(f64),
    /// Dual of `F` under the `L2 x V'` pairing: weights `1 / sin^2(mu_m xi)`.
    Fdual(f64),
}

fn pointwise_weight(m: usize, xi: f64) -> f64 {
    (wavenumber(m) * xi).sin().powi(2)
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid(format!("xi = {xi} must lie in (0, 1)")));
    }
    Ok(())
}

/// Squared norm of a single function given by its `L2` sine coefficients.
pub fn function_norm_sq(coeffs: &[f64], tag: SpaceTag) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in coeffs.iter().enumerate() {
        let mu4 = wavenumber(m).powi(4);
        let w = match tag {
            SpaceTag::L2 => 1.0,
            SpaceTag::V => mu4,
            SpaceTag::Vdual => 1.0 / mu4,
            SpaceTag::D4 => mu4 * mu4,
            SpaceTag::F(xi) => {
                check_xi(xi)?;
                pointwise_weight(m, xi)
            }
            SpaceTag::Fdual(xi) => {
                check_xi(xi)?;
                let s = pointwise_weight(m, xi);
                if s.sqrt() < WEIGHT_FLOOR {
                    return Err(BeamError::DegenerateWeight { mode: m });
                }
                1.0 / s
            }
        };
        acc += w * c * c;
    }
    Ok(0.5 * acc)
}

/// Squared data norm of a state in the given space.
pub fn norm_sq(state: &ModalState, space: DataSpace) -> Result<f64> {
    let mut acc = 0.0;
    for m in 0..state.modes() {
        let e = state.a[m].powi(2) + state.beta[m].powi(2);
        let w = match space {
            DataSpace::L2Vdual => 1.0,
            DataSpace::VL2 => wavenumber(m).powi(4),
            DataSpace::D4V => wavenumber(m).powi(8),
            DataSpace::F(xi) => {
                check_xi(xi)?;
                pointwise_weight(m, xi)
            }
            DataSpace::Fdual(xi) => {
                check_xi(xi)?;
                let s = pointwise_weight(m, xi);
                if s.sqrt() < WEIGHT_FLOOR {
                    return Err(BeamError::DegenerateWeight { mode: m });
                }
                1.0 / s
            }
        };
        acc += w * e;
    }
    Ok(0.5 * acc)
}

/// Data norm (square root of [`norm_sq`]).
pub fn norm(state: &ModalState, space: DataSpace) -> Result<f64> {
    norm_sq(state, space).map(f64::sqrt)
}

/// Applies `(d^4/dx^4)^{-1}` mode by mode: divides every coefficient by `mu_m^4`.
pub fn smooth(state: &ModalState) -> ModalState {
    scale_by_stiffness(state, -1)
}

/// Inverse of [`smooth`]: multiplies every coefficient by `mu_m^4`.
pub fn unsmooth(state: &ModalState) -> ModalState {
    scale_by_stiffness(state, 1)
}

fn scale_by_stiffness(state: &ModalState, sign: i32) -> ModalState {
    let w = |m: usize| wavenumber(m).powi(4 * sign);
    ModalState {
        a: state.a.iter().enumerate().map(|(m, v)| v * w(m)).collect(),
        beta: state.beta.iter().enumerate().map(|(m, v)| v * w(m)).collect(),
    }
}

/// `sum c_m sin(mu_m x)`.
pub fn reconstruct(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().enumerate().map(|(m, c)| c * (wavenumber(m) * x).sin()).sum()
}

/// `d/dx sum c_m sin(mu_m x)`.
pub fn reconstruct_dx(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let mu = wavenumber(m);
            c * mu * (mu * x).cos()
        })
        .sum()
}

const PROJECTION_ORDER: usize = 8;

/// Sine coefficients `c_m = 2 int_0^1 f(x) sin(mu_m x) dx` for `m < M`.
///
/// Composite 8-point Gauss-Legendre; panels are no wider than a quarter
/// wavelength of mode `M - 1` and at least `quadrature_points / 8` of them
/// are used.
pub fn project<F: Fn(f64) -> f64>(f: F, modes: usize, quadrature_points: usize) -> Result<Vec<f64>> {
    if modes == 0 {
        return Err(invalid("the truncation must keep at least one mode"));
    }
    if quadrature_points < 2 * modes + 2 {
        return Err(invalid(format!(
            "{quadrature_points} quadrature points cannot resolve {modes} modes (need at least {})",
            2 * modes + 2
        )));
    }
    let by_resolution = 2 * modes - 1;
    let by_request = quadrature_points.div_ceil(PROJECTION_ORDER);
    let rule = CompositeRule::new(0.0, 1.0, by_resolution.max(by_request), PROJECTION_ORDER);
    let samples: Vec<f64> = rule.points.iter().map(|&x| f(x)).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid("function produced non-finite values"));
    }
    Ok((0..modes)
        .map(|m| {
            let mu = wavenumber(m);
            2.0 * rule
                .points
                .iter()
                .zip(&rule.weights)
                .zip(&samples)
                .map(|((x, w), fx)| w * fx * (mu * x).sin())
                .sum::<f64>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn frequencies_examples() {
        let t = frequencies(1).unwrap();
        assert!((t.mu()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((t.omega()[0] - 2.467_401_1).abs() < 1e-7);
        let t = frequencies(3).unwrap();
        assert_eq!(t.mu()[2], 5.0 * t.mu()[0]);
        assert!((t.mu()[2] - 7.853_981_6).abs() < 1e-7);
        let t = frequencies(2).unwrap();
        assert!((t.omega()[1] / t.omega()[0] - 9.0).abs() < 1e-15);
        assert!(frequencies(0).is_err());
    }

    #[test]
    fn table_invariants() {
        let t = frequencies(40).unwrap();
        for m in 0..40 {
            assert_eq!(t.mu()[m], (2 * m + 1) as f64 * t.mu()[0]);
            assert_eq!(t.omega()[m], t.mu()[m] * t.mu()[m]);
            if m > 0 {
                assert!(t.mu()[m] > t.mu()[m - 1]);
            }
        }
    }

    #[test]
    fn project_sine_combinations() {
        let c = project(|x| (PI * x / 2.0).sin(), 4, 10).unwrap();
        for (got, want) in c.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        let c = project(|x| (1.5 * PI * x).sin() + 2.0 * (3.5 * PI * x).sin(), 4, 10).unwrap();
        for (got, want) in c.iter().zip([0.0, 1.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn project_rejects_too_few_points() {
        assert!(project(|x| x, 8, 17).is_err());
        assert!(project(|x| x, 8, 18).is_ok());
        assert!(project(|x| x, 0, 18).is_err());
    }

    #[test]
    fn norm_examples() {
        let mut a = vec![0.0; 4];
        a[0] = 1.0;
        let s = ModalState::new(a, vec![0.0; 4]).unwrap();
        assert!((norm_sq(&s, DataSpace::L2Vdual).unwrap() - 0.5).abs() < 1e-15);
        assert!((norm_sq(&s, DataSpace::F(0.5)).unwrap() - 0.25).abs() < 1e-15);

        let s = ModalState::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let expect = 0.5 * (PI / 2.0).powi(4);
        assert!((norm_sq(&s, DataSpace::VL2).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 3.0440).abs() < 1e-4);
    }

    #[test]
    fn fdual_degenerate_weight_names_mode() {
        let s = ModalState::smooth_decay(3);
        assert_eq!(norm_sq(&s, DataSpace::Fdual(2.0 / 3.0)), Err(BeamError::DegenerateWeight { mode: 1 }));
        assert!(norm_sq(&s, DataSpace::F(2.0 / 3.0)).is_ok());
        assert!(norm_sq(&s, DataSpace::Fdual(1.0 / 3.0)).is_ok());
    }

    #[test]
    fn single_function_tags_follow_pair_weights() {
        let c = [1.0, -2.0, 0.5];
        let v = function_norm_sq(&c, SpaceTag::V).unwrap();
        let expect: f64 = 0.5 * c.iter().enumerate().map(|(m, c)| c * c * wavenumber(m).powi(4)).sum::<f64>();
        assert!((v - expect).abs() < 1e-9 * expect);
        let vd = function_norm_sq(&c, SpaceTag::Vdual).unwrap();
        let l2 = function_norm_sq(&c, SpaceTag::L2).unwrap();
        assert!(vd < l2 && l2 < v);
        assert!(function_norm_sq(&c, SpaceTag::D4).unwrap() > v);
        assert!(function_norm_sq(&c, SpaceTag::Fdual(2.0 / 3.0)).is_err());
    }

    #[test]
    fn smooth_examples() {
        let s = ModalState::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let w = smooth(&s);
        assert!((w.a()[0] - 0.164_255).abs() < 1e-6);
        assert_eq!(w.a()[1], 0.0);
        assert!(unsmooth(&w).a()[0] - 1.0 < 1e-15);
        assert!(smooth(&ModalState::zeros(5)).is_zero());
    }

    #[test]
    fn reconstruct_examples() {
        assert!((reconstruct(&[1.0], 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(reconstruct(&[1.0], 0.0), 0.0);
        assert!((reconstruct(&[0.0, 1.0], 1.0 / 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn velocity_round_trip() {
        let s = ModalState::from_displacement_velocity(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        let v = s.velocity();
        assert!((v[0] - 3.0).abs() < 1e-14 && (v[1] - 4.0).abs() < 1e-14);
        assert!(ModalState::new(vec![1.0], vec![]).is_err());
    }
}
