use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{MeritError, Result};
use crate::hypothesis::DesignRates;
use crate::oc::Boundary;

use super::pava::pava_adjust;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Above,
    Below,
}

/// Posterior probability that a rate lies above (or below) `threshold` after
/// `x` events in `n` patients under a Beta(a, b) prior.
pub fn posterior_exceedance(
    x: usize,
    n: usize,
    threshold: f64,
    a: f64,
    b: f64,
    direction: Direction,
) -> Result<f64> {
    if x > n {
        return Err(MeritError::invalid("x", format!("{x} events exceed {n} patients")));
    }
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(MeritError::invalid("prior", format!("Beta({a}, {b}) needs positive parameters")));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MeritError::invalid("threshold", format!("{threshold} is outside [0, 1]")));
    }
    let alpha = a + x as f64;
    let beta = b + (n - x) as f64;
    // Pr(pi > t) = I_{1-t}(beta, alpha), computed directly for accuracy near 1.
    Ok(match direction {
        Direction::Below => beta_reg(alpha, beta, threshold),
        Direction::Above => beta_reg(beta, alpha, 1.0 - threshold),
    })
}

/// Interim look schedule and stopping cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimPolicy {
    /// Fractions of the per-arm sample size at which arms are reviewed.
    pub looks: Vec<f64>,
    pub c_t: f64,
    pub c_e: f64,
    pub prior_a: f64,
    pub prior_b: f64,
}

impl Default for InterimPolicy {
    fn default() -> Self {
        InterimPolicy {
            looks: vec![0.5],
            c_t: 0.95,
            c_e: 0.95,
            prior_a: 0.1,
            prior_b: 0.1,
        }
    }
}

impl InterimPolicy {
    pub fn with_looks(looks: Vec<f64>) -> Result<Self> {
        let p = InterimPolicy {
            looks,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.looks.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(MeritError::invalid("looks", format!("fraction {f} is outside (0, 1)")));
        }
        if self.looks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MeritError::invalid("looks", "fractions must be strictly increasing"));
        }
        for (field, c) in [("c_t", self.c_t), ("c_e", self.c_e)] {
            if !(c > 0.0 && c < 1.0) {
                return Err(MeritError::invalid(field, format!("{c} is outside (0, 1)")));
            }
        }
        for (field, v) in [("prior_a", self.prior_a), ("prior_b", self.prior_b)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MeritError::invalid(field, format!("{v} must be positive")));
            }
        }
        Ok(())
    }

    /// Cumulative per-arm enrollment at each look: `fraction * n` rounded
    /// half up. Looks that round to zero, to `n`, or onto an earlier look are
    /// dropped.
    pub fn look_sizes(&self, n: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = Vec::new();
        for f in &self.looks {
            let k = (f * n as f64 + 0.5).floor() as usize;
            if k > 0 && k < n && sizes.last().is_none_or(|&last| k > last) {
                sizes.push(k);
            }
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmStatus {
    Active,
    StoppedSafety,
    StoppedFutility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub enrolled: usize,
    pub n_t: usize,
    pub n_e: usize,
    pub status: ArmStatus,
}

impl ArmRecord {
    pub fn new(enrolled: usize, n_t: usize, n_e: usize) -> Result<Self> {
        let r = ArmRecord {
            enrolled,
            n_t,
            n_e,
            status: ArmStatus::Active,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t > self.enrolled {
            return Err(MeritError::invalid("n_t", format!("{} exceeds enrollment {}", self.n_t, self.enrolled)));
        }
        if self.n_e > self.enrolled {
            return Err(MeritError::invalid("n_e", format!("{} exceeds enrollment {}", self.n_e, self.enrolled)));
        }
        Ok(())
    }
}

/// Per-arm counts, lowest dose first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialData {
    pub arms: Vec<ArmRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Zero-based indices of admissible arms.
    pub admissible_set: Vec<usize>,
    pub rejected_h0: bool,
    pub total_enrolled: usize,
    pub statuses: Vec<ArmStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterimDecision {
    Continue,
    StopSafety,
    StopFutility,
}

/// Safety first: stop if Pr(pi_T > phi_T1) > C_T, otherwise stop for futility
/// if Pr(pi_E < phi_E1) > C_E.
pub fn interim_decision(arm: &ArmRecord, rates: &DesignRates, policy: &InterimPolicy) -> Result<InterimDecision> {
    arm.validate()?;
    if arm.status != ArmStatus::Active {
        return Err(MeritError::State(format!("arm already stopped ({:?})", arm.status)));
    }
    let (a, b) = (policy.prior_a, policy.prior_b);
    let tox = posterior_exceedance(arm.n_t, arm.enrolled, rates.phi_t1, a, b, Direction::Above)?;
    if tox > policy.c_t {
        return Ok(InterimDecision::StopSafety);
    }
    let short = posterior_exceedance(arm.n_e, arm.enrolled, rates.phi_e1, a, b, Direction::Below)?;
    if short > policy.c_e {
        return Ok(InterimDecision::StopFutility);
    }
    Ok(InterimDecision::Continue)
}

/// Applies the boundary to fully enrolled active arms. With an isotonic flag
/// set, the corresponding counts of those arms are replaced by their
/// nondecreasing PAVA fit before comparison.
pub fn admissible_set(data: &TrialData, b: &Boundary, isotonic_tox: bool, isotonic_eff: bool) -> Result<TrialOutcome> {
    Ok(assess(data, b, isotonic_tox, isotonic_eff)?.0)
}

/// Outcome plus the (possibly adjusted) toxicity and efficacy counts of each
/// arm that reached the final analysis.
pub(super) fn assess(
    data: &TrialData,
    b: &Boundary,
    isotonic_tox: bool,
    isotonic_eff: bool,
) -> Result<(TrialOutcome, Vec<Option<(f64, f64)>>)> {
    b.validate()?;
    let mut active = Vec::new();
    for (j, arm) in data.arms.iter().enumerate() {
        arm.validate()?;
        if arm.status == ArmStatus::Active {
            if arm.enrolled != b.n {
                return Err(MeritError::State(format!(
                    "arm {} is active with {} of {} patients",
                    j + 1,
                    arm.enrolled,
                    b.n
                )));
            }
            active.push(j);
        }
    }
    let mut adjusted = vec![None; data.arms.len()];
    let mut admissible = Vec::new();
    if !active.is_empty() {
        let weights = vec![b.n as f64; active.len()];
        let adjust = |pick: fn(&ArmRecord) -> usize, on: bool| -> Result<Vec<f64>> {
            let raw: Vec<f64> = active.iter().map(|&j| pick(&data.arms[j]) as f64).collect();
            if on {
                pava_adjust(&raw, &weights)
            } else {
                Ok(raw)
            }
        };
        let tox = adjust(|a| a.n_t, isotonic_tox)?;
        let eff = adjust(|a| a.n_e, isotonic_eff)?;
        for (i, &j) in active.iter().enumerate() {
            adjusted[j] = Some((tox[i], eff[i]));
            if tox[i] <= b.m_t as f64 && eff[i] >= b.m_e as f64 {
                admissible.push(j);
            }
        }
    }
    let outcome = TrialOutcome {
        rejected_h0: !admissible.is_empty(),
        admissible_set: admissible,
        total_enrolled: data.arms.iter().map(|a| a.enrolled).sum(),
        statuses: data.arms.iter().map(|a| a.status).collect(),
    };
    Ok((outcome, adjusted))
}
