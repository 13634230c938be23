//! Null, alternative and least favorable dose-rate configurations.
//!
//! Every configuration assigns each dose one of four states built from the
//! elicited rates. Toxicity and efficacy are nondecreasing in dose, so a
//! configuration is fixed by the positions where each endpoint switches.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MeritError, Result};

/// Elicited null/alternative toxicity and efficacy rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignRates {
    /// Unacceptable (null) toxicity rate.
    pub phi_t0: f64,
    /// Acceptable (alternative) toxicity rate.
    pub phi_t1: f64,
    /// Unacceptable (null) efficacy rate.
    pub phi_e0: f64,
    /// Acceptable (alternative) efficacy rate.
    pub phi_e1: f64,
}

impl DesignRates {
    pub fn new(phi_t0: f64, phi_t1: f64, phi_e0: f64, phi_e1: f64) -> Result<Self> {
        let rates = DesignRates {
            phi_t0,
            phi_t1,
            phi_e0,
            phi_e1,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("phi_t0", self.phi_t0),
            ("phi_t1", self.phi_t1),
            ("phi_e0", self.phi_e0),
            ("phi_e1", self.phi_e1),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(MeritError::invalid(field, format!("{v} is not in (0, 1)")));
            }
        }
        if self.phi_t0 <= self.phi_t1 {
            return Err(MeritError::invalid("phi_t0", "must exceed phi_t1"));
        }
        if self.phi_e0 >= self.phi_e1 {
            return Err(MeritError::invalid("phi_e1", "must exceed phi_e0"));
        }
        Ok(())
    }

    /// `(pi_T, pi_E)` for a dose in `state`.
    pub fn rates_for(&self, state: ArmState) -> (f64, f64) {
        match state {
            ArmState::SafeFutile => (self.phi_t1, self.phi_e0),
            ArmState::ToxicFutile => (self.phi_t0, self.phi_e0),
            ArmState::ToxicEfficacious => (self.phi_t0, self.phi_e1),
            ArmState::SafeEfficacious => (self.phi_t1, self.phi_e1),
        }
    }
}

impl Default for DesignRates {
    fn default() -> Self {
        DesignRates {
            phi_t0: 0.4,
            phi_t1: 0.2,
            phi_e0: 0.2,
            phi_e1: 0.4,
        }
    }
}

/// True state of a dose arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmState {
    SafeFutile,
    ToxicFutile,
    ToxicEfficacious,
    SafeEfficacious,
}

impl ArmState {
    pub const ALL: [ArmState; 4] = [
        ArmState::SafeFutile,
        ArmState::ToxicFutile,
        ArmState::ToxicEfficacious,
        ArmState::SafeEfficacious,
    ];

    pub fn is_safe(self) -> bool {
        matches!(self, ArmState::SafeFutile | ArmState::SafeEfficacious)
    }

    pub fn is_efficacious(self) -> bool {
        matches!(self, ArmState::ToxicEfficacious | ArmState::SafeEfficacious)
    }

    pub fn is_admissible(self) -> bool {
        self == ArmState::SafeEfficacious
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dose {
    pub pi_t: f64,
    pub pi_e: f64,
    pub state: ArmState,
}

/// Identifies a configuration: `Null(s, k)`, `Alt(u, v)` or the `j`-th
/// least favorable alternative (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HypothesisLabel {
    Null { s: usize, k: usize },
    Alt { u: usize, v: usize },
    Lfs { j: usize },
}

impl HypothesisLabel {
    pub fn is_null(&self) -> bool {
        matches!(self, HypothesisLabel::Null { .. })
    }

    /// The `Alt(u, v)` this label denotes, if it is an alternative.
    pub fn as_alt(&self) -> Option<(usize, usize)> {
        match *self {
            HypothesisLabel::Alt { u, v } => Some((u, v)),
            HypothesisLabel::Lfs { j } => Some((j - 1, j)),
            HypothesisLabel::Null { .. } => None,
        }
    }

    /// Scenario number. For two and three doses this is the conventional
    /// numbering (nulls 1–6 and 7–16, alternatives 17–19 and 20–25); for
    /// other dose counts nulls then alternatives are numbered from 1 in
    /// lexicographic order.
    pub fn scenario(&self, doses: usize) -> u32 {
        let big_j = doses;
        let null_count = (big_j + 1) * (big_j + 2) / 2;
        let (null_base, alt_base) = match big_j {
            2 => (0, 16),
            3 => (6, 19),
            _ => (0, null_count),
        };
        match *self {
            HypothesisLabel::Null { s, k } => {
                let before: usize = (0..s).map(|s2| big_j - s2 + 1).sum();
                (null_base + before + (k - s) + 1) as u32
            }
            _ => {
                let (u, v) = self.as_alt().expect("alternative label");
                let before: usize = (0..u).map(|u2| big_j - u2).sum();
                (alt_base + before + (v - u - 1) + 1) as u32
            }
        }
    }
}

impl fmt::Display for HypothesisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypothesisLabel::Null { s, k } => write!(f, "H0({s},{k})"),
            HypothesisLabel::Alt { u, v } => write!(f, "H1({u},{v})"),
            HypothesisLabel::Lfs { j } => write!(f, "H1({j})"),
        }
    }
}

/// A labelled vector of per-dose rates, lowest dose first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConfig {
    pub label: HypothesisLabel,
    pub doses: Vec<Dose>,
}

impl HypothesisConfig {
    fn from_states(label: HypothesisLabel, states: &[ArmState], rates: &DesignRates) -> Self {
        let doses = states
            .iter()
            .map(|&state| {
                let (pi_t, pi_e) = rates.rates_for(state);
                Dose { pi_t, pi_e, state }
            })
            .collect();
        HypothesisConfig { label, doses }
    }

    pub fn num_doses(&self) -> usize {
        self.doses.len()
    }

    pub fn scenario(&self) -> u32 {
        self.label.scenario(self.doses.len())
    }

    pub fn is_null(&self) -> bool {
        self.label.is_null()
    }

    /// Indices of truly admissible doses.
    pub fn admissible(&self) -> Vec<usize> {
        self.doses
            .iter()
            .enumerate()
            .filter(|(_, d)| d.state.is_admissible())
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_doses(doses: usize) -> Result<()> {
    if doses == 0 {
        Err(MeritError::invalid("doses", "need at least one dose"))
    } else {
        Ok(())
    }
}

/// `Null(s, k)`: doses `1..=s` safe but futile, `s+1..=k` toxic and futile,
/// the rest toxic and efficacious.
pub fn null_config(doses: usize, s: usize, k: usize, rates: &DesignRates) -> Result<HypothesisConfig> {
    check_doses(doses)?;
    if s > k || k > doses {
        return Err(MeritError::invalid("null indices", format!("need 0 <= s <= k <= J, got s={s}, k={k}, J={doses}")));
    }
    let states: Vec<_> = (1..=doses)
        .map(|d| {
            if d <= s {
                ArmState::SafeFutile
            } else if d <= k {
                ArmState::ToxicFutile
            } else {
                ArmState::ToxicEfficacious
            }
        })
        .collect();
    Ok(HypothesisConfig::from_states(HypothesisLabel::Null { s, k }, &states, rates))
}

fn alt_states(doses: usize, u: usize, v: usize) -> Vec<ArmState> {
    (1..=doses)
        .map(|d| {
            if d <= u {
                ArmState::SafeFutile
            } else if d <= v {
                ArmState::SafeEfficacious
            } else {
                ArmState::ToxicEfficacious
            }
        })
        .collect()
}

/// `Alt(u, v)`: doses `1..=u` safe but futile, `u+1..=v` admissible, the
/// rest toxic and efficacious.
pub fn alt_config(doses: usize, u: usize, v: usize, rates: &DesignRates) -> Result<HypothesisConfig> {
    check_doses(doses)?;
    if u >= v || v > doses {
        return Err(MeritError::invalid("alternative indices", format!("need 0 <= u < v <= J, got u={u}, v={v}, J={doses}")));
    }
    Ok(HypothesisConfig::from_states(
        HypothesisLabel::Alt { u, v },
        &alt_states(doses, u, v),
        rates,
    ))
}

/// All `(J + 1)(J + 2) / 2` null configurations, ordered by `(s, k)`.
pub fn enumerate_null(doses: usize, rates: &DesignRates) -> Result<Vec<HypothesisConfig>> {
    check_doses(doses)?;
    let mut out = Vec::with_capacity((doses + 1) * (doses + 2) / 2);
    for s in 0..=doses {
        for k in s..=doses {
            out.push(null_config(doses, s, k, rates)?);
        }
    }
    Ok(out)
}

/// All `J(J + 1) / 2` alternative configurations, ordered by `(u, v)`.
pub fn enumerate_alternative(doses: usize, rates: &DesignRates) -> Result<Vec<HypothesisConfig>> {
    check_doses(doses)?;
    let mut out = Vec::with_capacity(doses * (doses + 1) / 2);
    for u in 0..doses {
        for v in u + 1..=doses {
            out.push(alt_config(doses, u, v, rates)?);
        }
    }
    Ok(out)
}

/// The `J` alternatives with exactly one admissible dose: for the `j`-th,
/// lower doses are safe but futile and higher doses toxic and efficacious.
pub fn least_favorable_set(doses: usize, rates: &DesignRates) -> Result<Vec<HypothesisConfig>> {
    check_doses(doses)?;
    Ok((1..=doses)
        .map(|j| {
            HypothesisConfig::from_states(HypothesisLabel::Lfs { j }, &alt_states(doses, j - 1, j), rates)
        })
        .collect())
}
