//! Time signals on `[0, T]`.
//!
//! [`TrigPoly`] is a finite sum of terms `t^k (c cos(nu t) + s sin(nu t))`;
//! every time integral in the crate (Gramians, pairings, control energies,
//! trace distances) reduces to the moments `int_0^T t^k cos(lambda t) dt` and
//! `int_0^T t^k sin(lambda t) dt`, evaluated here in closed form.
//! [`TraceSignal`] is the sampled counterpart used for output.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Below this `|lambda T|` the moments are summed from their power series.
const SERIES_CUTOFF: f64 = 1.0;

/// `int_0^T t^k cos(lambda t) dt`.
pub fn moment_cos(k: u32, lambda: f64, horizon: f64) -> f64 {
    moments(k, lambda.abs(), horizon).0
}

/// `int_0^T t^k sin(lambda t) dt`.
pub fn moment_sin(k: u32, lambda: f64, horizon: f64) -> f64 {
    let s = moments(k, lambda.abs(), horizon).1;
    if lambda < 0.0 {
        -s
    } else {
        s
    }
}

/// Both moments for `lambda >= 0`.
fn moments(k: u32, lambda: f64, horizon: f64) -> (f64, f64) {
    let x = lambda * horizon;
    if x <= SERIES_CUTOFF {
        return moment_series(k, lambda, horizon);
    }
    let (sin_x, cos_x) = x.sin_cos();
    let half = (0.5 * x).sin();
    let mut c = sin_x / lambda;
    let mut s = 2.0 * half * half / lambda;
    let mut tk = 1.0;
    for j in 1..=k {
        tk *= horizon;
        let jf = j as f64;
        let c_next = tk * sin_x / lambda - jf / lambda * s;
        let s_next = -tk * cos_x / lambda + jf / lambda * c;
        c = c_next;
        s = s_next;
    }
    (c, s)
}

fn moment_series(k: u32, lambda: f64, horizon: f64) -> (f64, f64) {
    let kf = k as f64;
    let lt2 = (lambda * horizon).powi(2);
    let base = horizon.powi(k as i32 + 1);
    // cos: sum_j (-1)^j (lambda T)^{2j} / ((2j)! (k + 2j + 1)) * T^{k+1}
    // sin: sum_j (-1)^j (lambda T)^{2j+1} / ((2j+1)! (k + 2j + 2)) * T^{k+1}
    let mut c = 0.0;
    let mut s = 0.0;
    let mut term_c = 1.0; // (lambda T)^{2j} / (2j)!
    let mut term_s = lambda * horizon; // (lambda T)^{2j+1} / (2j+1)!
    for j in 0..30 {
        let jf = j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let dc = sign * term_c / (kf + 2.0 * jf + 1.0);
        let ds = sign * term_s / (kf + 2.0 * jf + 2.0);
        c += dc;
        s += ds;
        if dc.abs() < 1e-18 * c.abs().max(1e-300) && ds.abs() <= 1e-18 * s.abs().max(1e-300) {
            break;
        }
        term_c *= lt2 / ((2.0 * jf + 1.0) * (2.0 * jf + 2.0));
        term_s *= lt2 / ((2.0 * jf + 2.0) * (2.0 * jf + 3.0));
    }
    (c * base, s * base)
}

/// One term `t^power (cos * cos(freq t) + sin * sin(freq t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub freq: f64,
    pub power: u32,
    pub cos: f64,
    pub sin: f64,
}

impl TrigTerm {
    pub fn oscillation(freq: f64, cos: f64, sin: f64) -> Self {
        Self { freq, power: 0, cos, sin }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (s, c) = (self.freq * t).sin_cos();
        t.powi(self.power as i32) * (self.cos * c + self.sin * s)
    }
}

/// Finite sum of [`TrigTerm`]s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<TrigTerm>) -> Self {
        let mut p = Self::zero();
        for t in terms {
            p.push(t);
        }
        p
    }

    /// `c cos(freq t) + s sin(freq t)`.
    pub fn oscillation(freq: f64, cos: f64, sin: f64) -> Self {
        Self::from_terms(vec![TrigTerm::oscillation(freq, cos, sin)])
    }

    /// Appends a term, dropping exact zeros.
    pub fn push(&mut self, term: TrigTerm) {
        if term.cos != 0.0 || term.sin != 0.0 {
            self.terms.push(term);
        }
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_power(&self) -> u32 {
        self.terms.iter().map(|t| t.power).max().unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|t| TrigTerm { cos: t.cos * k, sin: t.sin * k, ..*t }).collect())
    }

    /// `self + k * other`.
    pub fn add_scaled(&mut self, other: &TrigPoly, k: f64) {
        for t in &other.terms {
            self.push(TrigTerm { cos: t.cos * k, sin: t.sin * k, ..*t });
        }
    }

    pub fn sum(&self, other: &TrigPoly) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn difference(&self, other: &TrigPoly) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// Merges terms sharing the same frequency and power.
    pub fn compact(&self) -> Self {
        let mut merged: Vec<TrigTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match merged.iter_mut().find(|m| m.freq == t.freq && m.power == t.power) {
                Some(m) => {
                    m.cos += t.cos;
                    m.sin += t.sin;
                }
                None => merged.push(*t),
            }
        }
        Self::from_terms(merged)
    }

    /// Time derivative.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            // d/dt [t^k (c cos + s sin)] = k t^{k-1}(c cos + s sin) + t^k nu (s cos - c sin)
            if t.power > 0 {
                out.push(TrigTerm {
                    power: t.power - 1,
                    cos: t.cos * t.power as f64,
                    sin: t.sin * t.power as f64,
                    ..*t
                });
            }
            if t.freq != 0.0 {
                out.push(TrigTerm { freq: t.freq, power: t.power, cos: t.freq * t.sin, sin: -t.freq * t.cos });
            }
        }
        out
    }

    /// Antiderivative vanishing at `t = 0`. Only power-0 terms are supported.
    pub fn antiderivative(&self) -> Result<Self> {
        let mut out = Self::zero();
        let mut constant = 0.0;
        for t in &self.terms {
            if t.power != 0 {
                return Err(invalid("antiderivative is only available for pure oscillations"));
            }
            if t.freq == 0.0 {
                // c * t
                out.push(TrigTerm { freq: 0.0, power: 1, cos: t.cos, sin: 0.0 });
            } else {
                // c sin(nu t)/nu - s cos(nu t)/nu + s/nu
                out.push(TrigTerm::oscillation(t.freq, -t.sin / t.freq, t.cos / t.freq));
                constant += t.sin / t.freq;
            }
        }
        out.push(TrigTerm::oscillation(0.0, constant, 0.0));
        Ok(out)
    }

    /// `int_0^T self(t) other(t) dt` in closed form.
    pub fn inner(&self, other: &TrigPoly, horizon: f64) -> f64 {
        let mut acc = 0.0;
        for p in &self.terms {
            for q in &other.terms {
                acc += term_product_integral(p, q, horizon);
            }
        }
        acc
    }

    /// `int_0^T self(t)^2 dt`.
    pub fn norm_sq(&self, horizon: f64) -> f64 {
        self.inner(self, horizon).max(0.0)
    }

    /// `int_0^T self(t) dt`.
    pub fn integral(&self, horizon: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.cos * moment_cos(t.power, t.freq, horizon) + t.sin * moment_sin(t.power, t.freq, horizon))
            .sum()
    }

    pub fn sample(&self, horizon: f64, grid: usize) -> Vec<f64> {
        uniform_grid(horizon, grid).map(|t| self.eval(t)).collect()
    }
}

fn term_product_integral(p: &TrigTerm, q: &TrigTerm, horizon: f64) -> f64 {
    let k = p.power + q.power;
    let diff = p.freq - q.freq;
    let sum = p.freq + q.freq;
    let cd = moment_cos(k, diff, horizon);
    let cs = moment_cos(k, sum, horizon);
    let sd = moment_sin(k, diff, horizon);
    let ss = moment_sin(k, sum, horizon);
    // cos a cos b = (cos(a-b) + cos(a+b))/2
    // sin a sin b = (cos(a-b) - cos(a+b))/2
    // cos a sin b = (sin(a+b) - sin(a-b))/2
    // sin a cos b = (sin(a+b) + sin(a-b))/2
    0.5 * (p.cos * q.cos * (cd + cs)
        + p.sin * q.sin * (cd - cs)
        + p.cos * q.sin * (ss - sd)
        + p.sin * q.cos * (ss + sd))
}

pub(crate) fn uniform_grid(horizon: f64, grid: usize) -> impl Iterator<Item = f64> {
    let step = if grid > 1 { horizon / (grid - 1) as f64 } else { 0.0 };
    (0..grid).map(move |i| i as f64 * step)
}

/// `t_i = i T / (N - 1)` for `i < N`.
pub fn uniform_times(horizon: f64, grid: usize) -> Vec<f64> {
    uniform_grid(horizon, grid).collect()
}

/// Scalar signal sampled on the uniform grid `t_i = i T / (N - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSignal {
    horizon: f64,
    samples: Vec<f64>,
    closed_form: Option<TrigPoly>,
}

impl TraceSignal {
    pub fn from_samples(horizon: f64, samples: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(invalid("trace horizon must be positive"));
        }
        if samples.len() < 2 {
            return Err(invalid("a trace needs at least two samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("trace samples must be finite"));
        }
        Ok(Self { horizon, samples, closed_form: None })
    }

    pub fn from_poly(poly: TrigPoly, horizon: f64, grid: usize) -> Result<Self> {
        let samples = poly.sample(horizon, grid);
        let mut s = Self::from_samples(horizon, samples)?;
        s.closed_form = Some(poly);
        Ok(s)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn closed_form(&self) -> Option<&TrigPoly> {
        self.closed_form.as_ref()
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.samples.len()).collect()
    }

    pub fn step(&self) -> f64 {
        self.horizon / (self.samples.len() - 1) as f64
    }

    /// `L2(0, T)` norm: closed form when available, trapezoid otherwise.
    pub fn l2_norm(&self) -> f64 {
        match &self.closed_form {
            Some(p) => p.norm_sq(self.horizon).sqrt(),
            None => {
                let sq: Vec<f64> = self.samples.iter().map(|v| v * v).collect();
                trapezoid(&sq, self.step()).sqrt()
            }
        }
    }
}

pub(crate) fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    dt * (samples[1..n - 1].iter().sum::<f64>() + 0.5 * (samples[0] + samples[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use beamctl_oracle::integrate;
    use proptest::prelude::*;

    #[test]
    fn moments_match_quadrature() {
        for &lambda in &[0.0, 1e-9, 0.3, 0.49, 0.51, 3.0, 250.0, -7.5] {
            for k in 0..4u32 {
                let t = 2.0;
                let qc = integrate(|s: f64| s.powi(k as i32) * (lambda * s).cos(), 0.0, t, 1e-15, 64);
                let qs = integrate(|s: f64| s.powi(k as i32) * (lambda * s).sin(), 0.0, t, 1e-15, 64);
                let c = moment_cos(k, lambda, t);
                let s = moment_sin(k, lambda, t);
                assert!(
                    (c - qc.value).abs() <= 1e-12 * qc.abs_value.max(1e-3),
                    "cos k={k} l={lambda}: {c} vs {}",
                    qc.value
                );
                assert!(
                    (s - qs.value).abs() <= 1e-12 * qs.abs_value.max(1e-3),
                    "sin k={k} l={lambda}: {s} vs {}",
                    qs.value
                );
            }
        }
    }

    #[test]
    fn derivative_and_antiderivative() {
        let p = TrigPoly::from_terms(vec![
            TrigTerm::oscillation(3.0, 1.0, -2.0),
            TrigTerm::oscillation(0.0, 0.5, 0.0),
            TrigTerm { freq: 2.0, power: 1, cos: 0.3, sin: 0.7 },
        ]);
        let d = p.derivative();
        let h = 1e-6;
        for &t in &[0.1, 0.7, 1.9] {
            let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
            assert!((d.eval(t) - fd).abs() < 1e-7);
        }
        let q = TrigPoly::from_terms(vec![TrigTerm::oscillation(3.0, 1.0, -2.0), TrigTerm::oscillation(0.0, 0.5, 0.0)]);
        let anti = q.antiderivative().unwrap();
        assert!(anti.eval(0.0).abs() < 1e-15);
        let back = anti.derivative();
        for &t in &[0.0, 0.4, 1.3] {
            assert!((back.eval(t) - q.eval(t)).abs() < 1e-13);
        }
        assert!(p.antiderivative().is_err());
    }

    #[test]
    fn trace_signal_validation() {
        assert!(TraceSignal::from_samples(1.0, vec![1.0]).is_err());
        assert!(TraceSignal::from_samples(0.0, vec![1.0, 2.0]).is_err());
        assert!(TraceSignal::from_samples(1.0, vec![1.0, f64::NAN]).is_err());
        let s = TraceSignal::from_poly(TrigPoly::oscillation(0.0, 2.0, 0.0), 3.0, 5).unwrap();
        assert_eq!(s.times(), vec![0.0, 0.75, 1.5, 2.25, 3.0]);
        assert!((s.l2_norm() - (12.0f64).sqrt()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn inner_product_matches_quadrature(
            f1 in 0.0f64..60.0, f2 in 0.0f64..60.0,
            c1 in -2.0f64..2.0, s1 in -2.0f64..2.0,
            c2 in -2.0f64..2.0, s2 in -2.0f64..2.0,
            k1 in 0u32..2, k2 in 0u32..2,
        ) {
            let p = TrigPoly::from_terms(vec![TrigTerm { freq: f1, power: k1, cos: c1, sin: s1 }]);
            let q = TrigPoly::from_terms(vec![TrigTerm { freq: f2, power: k2, cos: c2, sin: s2 }]);
            let t = 2.0;
            let quad = integrate(|x| p.eval(x) * q.eval(x), 0.0, t, 1e-14, 32);
            let got = p.inner(&q, t);
            prop_assert!((got - quad.value).abs() <= 1e-11 * quad.abs_value.max(1e-6));
        }
    }
}
