//! Spectral toolkit for exact controllability of a hinged-sliding
//! Euler-Bernoulli beam.
//!
//! States live in modal energy coordinates ([`ModalState`]). The beam is
//! steered either by a control on a short window `[xi, xi + 1/n]` or by a
//! point force at `xi`; [`hum_control`] builds the minimal-energy control,
//! and [`limit_lab`] tracks the window controls as `n` grows.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam_dynamics;
pub mod error;
pub mod hum_control;
pub mod limit_lab;
pub mod modal_space;
pub mod observability;
pub mod signal;

mod quadrature;

pub use beam_dynamics::{ControlField, ControlRegion, FieldProfile, OverlapKind, SampledForcing};
pub use error::{BeamError, Result};
pub use hum_control::{ControlProblem, Gramian, HumDiagnostics, NullControlReport, Regularization};
pub use limit_lab::{ScalingMode, ScalingReport, SweepConfig, SweepOutcome, SweepRecord};
pub use modal_space::{DataSpace, FrequencyTable, ModalState, SpaceTag};
pub use observability::StrategicReport;
pub use signal::{TraceSignal, TrigPoly, TrigTerm};
