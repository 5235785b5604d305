//! Optimal dividend and capital-injection control for a dual risk model with
//! investment returns.
//!
//! The crate solves for barrier strategies in the regimes that admit closed
//! forms (scale functions without returns, Kummer functions for exponential
//! gains with deterministic returns), verifies candidates against the
//! Hamilton-Jacobi-Bellman variational inequalities, and simulates the
//! controlled surplus by Monte Carlo for cross-checks and for regimes without
//! closed forms.

pub mod combined;
pub mod config;
pub mod dividends;
pub mod hjb;
pub mod injections;
pub mod kummer;
pub mod kummer_form;
pub mod model;
pub mod report;
pub mod numerics;
pub mod scale;
pub mod simulate;
pub mod solution;

pub use model::{CostParams, Diagnostic, JumpLaw, ModelParams, Regime, Severity};
