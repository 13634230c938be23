//! Design engine for multiple-dose randomized dose-optimization trials.
//!
//! Each of `J` dose arms enrolls `n` patients with binary toxicity and
//! efficacy outcomes. An arm is declared admissible when it shows at most
//! `m_T` toxicities and at least `m_E` responses. The engine finds the
//! smallest `n` (and the boundaries) that keep the worst-case type I error
//! over every null configuration below a target while holding generalized
//! power over the least favorable alternatives above a target, and simulates
//! trials with isotonic adjustment and Bayesian interim monitoring.

pub mod bivariate;
pub mod copula;
pub mod error;
pub mod hypothesis;
pub mod oc;
pub mod rng;
pub mod search;
pub mod table2;
pub mod trial;

pub use error::{MeritError, Result};
