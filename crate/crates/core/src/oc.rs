//! Type I error and generalized power for a decision boundary, exactly or by
//! Monte Carlo.
//!
//! Arms are independent given the configuration, so every probability is a
//! product of per-arm factors. Exact factors come from the joint count
//! distribution of each distinct `(pi_T, pi_E)` pair.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{binomial_pmf, cell_probabilities, sample_arm, CellProbs, JointPmf};
use crate::error::{MeritError, Result};
use crate::hypothesis::{
    enumerate_alternative, enumerate_null, least_favorable_set, ArmState, DesignRates, Dose,
    HypothesisConfig, HypothesisLabel,
};
use crate::rng::{blocks, stream_id, stream_rng};

/// Per-arm sample size with the toxicity ceiling and efficacy floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Boundary {
    pub n: usize,
    pub m_t: usize,
    pub m_e: usize,
}

impl Boundary {
    pub fn new(n: usize, m_t: usize, m_e: usize) -> Result<Self> {
        let b = Boundary { n, m_t, m_e };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(MeritError::invalid("n", "must be at least 1"));
        }
        if self.m_t > self.n {
            return Err(MeritError::invalid("m_t", format!("{} exceeds n = {}", self.m_t, self.n)));
        }
        if self.m_e > self.n {
            return Err(MeritError::invalid("m_e", format!("{} exceeds n = {}", self.m_e, self.n)));
        }
        Ok(())
    }

    /// Every `(m_T, m_E)` pair at sample size `n`.
    pub fn full_grid(n: usize) -> Vec<Boundary> {
        (0..=n)
            .flat_map(|m_t| (0..=n).map(move |m_e| Boundary { n, m_t, m_e }))
            .collect()
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m_T={}, m_E={})", self.n, self.m_t, self.m_e)
    }
}

/// Generalized power I requires every selected dose to be truly admissible;
/// power II requires at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerKind {
    I,
    II,
}

impl PowerKind {
    pub fn index(self) -> u8 {
        match self {
            PowerKind::I => 1,
            PowerKind::II => 2,
        }
    }
}

impl fmt::Display for PowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Default replicate count for Monte Carlo evaluation.
pub const DEFAULT_REPLICATES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    Exact,
    MonteCarlo { replicates: u64, seed: u64 },
}

impl EvalMode {
    pub fn monte_carlo(seed: u64) -> Self {
        EvalMode::MonteCarlo {
            replicates: DEFAULT_REPLICATES,
            seed,
        }
    }
}

/// One scenario's probability, with its standard error under Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioValue {
    pub label: HypothesisLabel,
    pub scenario: u32,
    pub value: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcResult {
    pub global_alpha: f64,
    pub per_null_alpha: Vec<ScenarioValue>,
    pub global_power: f64,
    pub per_lfs_power: Vec<ScenarioValue>,
    pub kind: PowerKind,
    pub mode: EvalMode,
    /// Zero for exact evaluation.
    pub replicates: u64,
    /// Largest standard error over the reported scenarios.
    pub mc_standard_error: Option<f64>,
}

/// Exact per-arm factors at one sample size: acceptance for every boundary
/// pair plus the two single-endpoint rejection tails.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmTables {
    n: usize,
    acceptance: Vec<f64>,
    tox_exceed: Vec<f64>,
    eff_short: Vec<f64>,
}

impl ArmTables {
    pub fn exact(n: usize, pi_t: f64, pi_e: f64, rho: f64) -> Result<Self> {
        let cells = cell_probabilities(pi_t, pi_e, rho)?;
        let pmf = JointPmf::new(n, &cells);
        Ok(ArmTables {
            n,
            acceptance: pmf.tail_table(),
            tox_exceed: upper_exceedance(&binomial_pmf(n, pi_t)),
            eff_short: lower_shortfall(&binomial_pmf(n, pi_e)),
        })
    }

    /// Tables from an arbitrary (e.g. empirical) joint count distribution.
    pub fn from_pmf(pmf: &JointPmf) -> Self {
        ArmTables {
            n: pmf.n(),
            acceptance: pmf.tail_table(),
            tox_exceed: upper_exceedance(&pmf.toxicity_marginal()),
            eff_short: lower_shortfall(&pmf.efficacy_marginal()),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Pr(n_T <= m_t, n_E >= m_e)`
    pub fn acceptance(&self, m_t: usize, m_e: usize) -> f64 {
        self.acceptance[m_t * (self.n + 1) + m_e]
    }

    /// `Pr(n_T > m_t)`
    pub fn tox_exceed(&self, m_t: usize) -> f64 {
        self.tox_exceed[m_t]
    }

    /// `Pr(n_E < m_e)`
    pub fn eff_short(&self, m_e: usize) -> f64 {
        self.eff_short[m_e]
    }
}

fn upper_exceedance(pmf: &[f64]) -> Vec<f64> {
    // entry m = sum of pmf[m + 1..]
    let mut out = vec![0.0; pmf.len()];
    let mut acc = 0.0f64;
    for m in (0..pmf.len()).rev() {
        out[m] = acc.min(1.0);
        acc += pmf[m];
    }
    out
}

fn lower_shortfall(pmf: &[f64]) -> Vec<f64> {
    // entry m = sum of pmf[..m]
    let mut out = vec![0.0; pmf.len()];
    let mut acc = 0.0f64;
    for m in 0..pmf.len() {
        out[m] = acc.min(1.0);
        acc += pmf[m];
    }
    out
}

fn rate_key(d: &Dose) -> (u64, u64) {
    (d.pi_t.to_bits(), d.pi_e.to_bits())
}

/// Arm tables for every distinct dose law appearing in a set of
/// configurations, all at one sample size.
#[derive(Debug, Clone)]
pub struct OcTables {
    n: usize,
    entries: Vec<((u64, u64), ArmTables)>,
}

impl OcTables {
    pub fn exact<'a>(
        n: usize,
        rho: f64,
        configs: impl IntoIterator<Item = &'a HypothesisConfig>,
    ) -> Result<Self> {
        Self::build(n, configs, |d| ArmTables::exact(n, d.pi_t, d.pi_e, rho))
    }

    pub fn build<'a>(
        n: usize,
        configs: impl IntoIterator<Item = &'a HypothesisConfig>,
        mut make: impl FnMut(&Dose) -> Result<ArmTables>,
    ) -> Result<Self> {
        let mut entries: Vec<((u64, u64), ArmTables)> = Vec::new();
        for cfg in configs {
            for d in &cfg.doses {
                let key = rate_key(d);
                if !entries.iter().any(|(k, _)| *k == key) {
                    entries.push((key, make(d)?));
                }
            }
        }
        Ok(OcTables { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn arm(&self, d: &Dose) -> &ArmTables {
        let key = rate_key(d);
        &self
            .entries
            .iter()
            .find(|(k, _)| *k == key)
            .expect("tables built for every dose in the configuration set")
            .1
    }

    /// Probability that at least one arm is declared admissible.
    pub fn rejection(&self, cfg: &HypothesisConfig, m_t: usize, m_e: usize) -> f64 {
        let none = cfg
            .doses
            .iter()
            .map(|d| 1.0 - self.arm(d).acceptance(m_t, m_e))
            .product::<f64>();
        1.0 - none
    }

    /// Generalized power: the admissible-arm factor, times for kind I the
    /// probability that every safe-but-futile arm falls short on efficacy
    /// and every toxic arm exceeds the toxicity ceiling.
    pub fn power(&self, cfg: &HypothesisConfig, m_t: usize, m_e: usize, kind: PowerKind) -> f64 {
        let mut miss_all = 1.0;
        let mut others = 1.0;
        for d in &cfg.doses {
            let arm = self.arm(d);
            match d.state {
                ArmState::SafeEfficacious => miss_all *= 1.0 - arm.acceptance(m_t, m_e),
                ArmState::SafeFutile => others *= arm.eff_short(m_e),
                ArmState::ToxicFutile | ArmState::ToxicEfficacious => others *= arm.tox_exceed(m_t),
            }
        }
        let hit = 1.0 - miss_all;
        match kind {
            PowerKind::I => others * hit,
            PowerKind::II => hit,
        }
    }
}

fn require_null(cfg: &HypothesisConfig) -> Result<()> {
    if cfg.is_null() {
        Ok(())
    } else {
        Err(MeritError::Label {
            expected: "null",
            got: cfg.label.to_string(),
        })
    }
}

fn require_alternative(cfg: &HypothesisConfig) -> Result<()> {
    if cfg.is_null() || cfg.admissible().is_empty() {
        Err(MeritError::Label {
            expected: "alternative",
            got: cfg.label.to_string(),
        })
    } else {
        Ok(())
    }
}

/// Exact probability that one arm is declared admissible.
pub fn arm_acceptance(pi_t: f64, pi_e: f64, rho: f64, b: &Boundary) -> Result<f64> {
    b.validate()?;
    let cells = cell_probabilities(pi_t, pi_e, rho)?;
    Ok(JointPmf::new(b.n, &cells).tail(b.m_t, b.m_e))
}

/// Exact type I error under one null configuration.
pub fn type1_error(cfg: &HypothesisConfig, rho: f64, b: &Boundary) -> Result<f64> {
    require_null(cfg)?;
    b.validate()?;
    let tables = OcTables::exact(b.n, rho, [cfg])?;
    Ok(tables.rejection(cfg, b.m_t, b.m_e))
}

/// Exact generalized power under one alternative configuration.
pub fn power(cfg: &HypothesisConfig, rho: f64, b: &Boundary, kind: PowerKind) -> Result<f64> {
    require_alternative(cfg)?;
    b.validate()?;
    let tables = OcTables::exact(b.n, rho, [cfg])?;
    Ok(tables.power(cfg, b.m_t, b.m_e, kind))
}

/// What a Monte Carlo replicate counts as a success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McEvent {
    Rejection,
    Power(PowerKind),
}

/// Monte Carlo estimate and standard error of one configuration's rejection
/// probability or power. `task` selects the family of random streams.
pub fn mc_probability(
    cfg: &HypothesisConfig,
    rho: f64,
    b: &Boundary,
    event: McEvent,
    replicates: u64,
    seed: u64,
    task: u32,
) -> Result<(f64, f64)> {
    b.validate()?;
    if replicates == 0 {
        return Err(MeritError::invalid("replicates", "must be positive"));
    }
    let arms: Vec<(ArmState, CellProbs)> = cfg
        .doses
        .iter()
        .map(|d| Ok((d.state, cell_probabilities(d.pi_t, d.pi_e, rho)?)))
        .collect::<Result<_>>()?;
    let hits: u64 = blocks(replicates)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(block, len)| {
            let mut rng = stream_rng(seed, stream_id(task, block));
            let mut hits = 0u64;
            for _ in 0..len {
                let mut any_adm = false;
                let mut any = false;
                let mut others_ok = true;
                for (state, cells) in &arms {
                    let (t, e) = sample_arm(b.n, cells, &mut rng);
                    let accepted = t <= b.m_t && e >= b.m_e;
                    any |= accepted;
                    match state {
                        ArmState::SafeEfficacious => any_adm |= accepted,
                        ArmState::SafeFutile => others_ok &= e < b.m_e,
                        _ => others_ok &= t > b.m_t,
                    }
                }
                let success = match event {
                    McEvent::Rejection => any,
                    McEvent::Power(PowerKind::II) => any_adm,
                    McEvent::Power(PowerKind::I) => any_adm && others_ok,
                };
                hits += u64::from(success);
            }
            hits
        })
        .sum();
    let p = hits as f64 / replicates as f64;
    Ok((p, (p * (1.0 - p) / replicates as f64).sqrt()))
}

/// Global type I error over every null configuration and global power over
/// the least favorable set.
pub fn global_oc(
    b: &Boundary,
    doses: usize,
    rates: &DesignRates,
    rho: f64,
    kind: PowerKind,
    mode: EvalMode,
) -> Result<OcResult> {
    b.validate()?;
    rates.validate()?;
    let nulls = enumerate_null(doses, rates)?;
    let lfs = least_favorable_set(doses, rates)?;
    match mode {
        EvalMode::Exact => {
            let tables = OcTables::exact(b.n, rho, nulls.iter().chain(&lfs))?;
            Ok(summarize_tables(&tables, b, &nulls, &lfs, kind))
        }
        EvalMode::MonteCarlo { replicates, seed } => {
            let jobs: Vec<(usize, &HypothesisConfig)> = nulls.iter().chain(&lfs).enumerate().collect();
            let estimates = jobs
                .par_iter()
                .map(|&(i, cfg)| {
                    let event = if cfg.is_null() {
                        McEvent::Rejection
                    } else {
                        McEvent::Power(kind)
                    };
                    let (p, se) = mc_probability(cfg, rho, b, event, replicates, seed, i as u32)?;
                    Ok(ScenarioValue {
                        label: cfg.label,
                        scenario: cfg.scenario(),
                        value: p,
                        se: Some(se),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (per_null, per_lfs) = estimates.split_at(nulls.len());
            Ok(assemble(per_null.to_vec(), per_lfs.to_vec(), kind, mode))
        }
    }
}

/// Exact summary from prebuilt tables. `tables` must cover `nulls` and `lfs`.
pub fn summarize_tables(
    tables: &OcTables,
    b: &Boundary,
    nulls: &[HypothesisConfig],
    lfs: &[HypothesisConfig],
    kind: PowerKind,
) -> OcResult {
    let value = |cfg: &HypothesisConfig, v: f64| ScenarioValue {
        label: cfg.label,
        scenario: cfg.scenario(),
        value: v,
        se: None,
    };
    let per_null = nulls
        .iter()
        .map(|c| value(c, tables.rejection(c, b.m_t, b.m_e)))
        .collect();
    let per_lfs = lfs
        .iter()
        .map(|c| value(c, tables.power(c, b.m_t, b.m_e, kind)))
        .collect();
    assemble(per_null, per_lfs, kind, EvalMode::Exact)
}

fn assemble(
    per_null: Vec<ScenarioValue>,
    per_lfs: Vec<ScenarioValue>,
    kind: PowerKind,
    mode: EvalMode,
) -> OcResult {
    let global_alpha = per_null.iter().map(|s| s.value).fold(0.0, f64::max);
    let global_power = per_lfs.iter().map(|s| s.value).fold(1.0, f64::min);
    let mc_standard_error = per_null
        .iter()
        .chain(&per_lfs)
        .filter_map(|s| s.se)
        .reduce(f64::max);
    let replicates = match mode {
        EvalMode::Exact => 0,
        EvalMode::MonteCarlo { replicates, .. } => replicates,
    };
    OcResult {
        global_alpha,
        per_null_alpha: per_null,
        global_power,
        per_lfs_power: per_lfs,
        kind,
        mode,
        replicates,
        mc_standard_error,
    }
}

/// Exact power under every alternative configuration, not only the least
/// favorable ones.
pub fn power_over_all_alternatives(
    b: &Boundary,
    doses: usize,
    rates: &DesignRates,
    rho: f64,
    kind: PowerKind,
) -> Result<Vec<ScenarioValue>> {
    b.validate()?;
    let alts = enumerate_alternative(doses, rates)?;
    let tables = OcTables::exact(b.n, rho, &alts)?;
    Ok(alts
        .iter()
        .map(|c| ScenarioValue {
            label: c.label,
            scenario: c.scenario(),
            value: tables.power(c, b.m_t, b.m_e, kind),
            se: None,
        })
        .collect())
}

/// One comparison between an alternative's power and the least favorable
/// minimum at the same boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub boundary: Boundary,
    pub kind: PowerKind,
    pub alternative: HypothesisLabel,
    pub power: f64,
    pub lfs_min: f64,
    /// 1-based index of the minimizing least favorable configuration.
    pub lfs_argmin: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub doses: usize,
    pub rho: f64,
    pub boundaries: usize,
    pub rows: Vec<TheoremRow>,
}

impl TheoremReport {
    pub fn violations(&self) -> impl Iterator<Item = &TheoremRow> {
        self.rows.iter().filter(|r| !r.holds)
    }

    pub fn is_clean(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Slack allowed for rounding when comparing powers.
const THEOREM_SLACK: f64 = 1e-12;

/// Checks, for every boundary in `grid`, both power kinds and every
/// alternative, that some least favorable configuration has power no larger
/// than the alternative's.
pub fn verify_theorem1(
    doses: usize,
    rates: &DesignRates,
    rho: f64,
    grid: &[Boundary],
) -> Result<TheoremReport> {
    rates.validate()?;
    for b in grid {
        b.validate()?;
    }
    let alts = enumerate_alternative(doses, rates)?;
    let lfs = least_favorable_set(doses, rates)?;

    let mut sizes: Vec<usize> = grid.iter().map(|b| b.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let tables: Vec<OcTables> = sizes
        .par_iter()
        .map(|&n| OcTables::exact(n, rho, &alts))
        .collect::<Result<_>>()?;

    let rows = grid
        .par_iter()
        .flat_map_iter(|b| {
            let t = &tables[sizes.binary_search(&b.n).expect("size tabulated")];
            let alts = &alts;
            let lfs = &lfs;
            [PowerKind::I, PowerKind::II].into_iter().flat_map(move |kind| {
                let (argmin, lfs_min) = lfs
                    .iter()
                    .map(|c| t.power(c, b.m_t, b.m_e, kind))
                    .enumerate()
                    .fold((0, f64::INFINITY), |best, (i, p)| if p < best.1 { (i, p) } else { best });
                alts.iter().map(move |alt| {
                    let power = t.power(alt, b.m_t, b.m_e, kind);
                    TheoremRow {
                        boundary: *b,
                        kind,
                        alternative: alt.label,
                        power,
                        lfs_min,
                        lfs_argmin: argmin + 1,
                        holds: lfs_min <= power + THEOREM_SLACK,
                    }
                })
            })
        })
        .collect();
    Ok(TheoremReport {
        doses,
        rho,
        boundaries: grid.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{alt_config, null_config};
    use proptest::prelude::*;

    fn rates() -> DesignRates {
        DesignRates::default()
    }

    #[test]
    fn single_patient_acceptance() {
        let b = Boundary::new(1, 0, 1).unwrap();
        let p = arm_acceptance(0.2, 0.4, 0.0, &b).unwrap();
        assert!((p - 0.8 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn vacuous_boundary_always_accepts() {
        for rho in [-0.5, 0.0, 0.5] {
            let b = Boundary::new(12, 12, 0).unwrap();
            assert!((arm_acceptance(0.3, 0.6, rho, &b).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_invariants() {
        assert!(Boundary::new(0, 0, 0).is_err());
        assert!(Boundary::new(10, 11, 0).is_err());
        assert!(Boundary::new(10, 0, 11).is_err());
        assert_eq!(Boundary::full_grid(3).len(), 16);
    }

    #[test]
    fn type1_error_is_complement_of_product() {
        // Two safe-futile arms share one acceptance probability q.
        let cfg = null_config(2, 2, 2, &rates()).unwrap();
        let b = Boundary::new(20, 6, 7).unwrap();
        let q = arm_acceptance(0.2, 0.2, 0.5, &b).unwrap();
        let alpha = type1_error(&cfg, 0.5, &b).unwrap();
        assert!((alpha - (1.0 - (1.0 - q).powi(2))).abs() < 1e-14);
    }

    #[test]
    fn label_errors() {
        let b = Boundary::new(10, 3, 3).unwrap();
        let alt = alt_config(2, 0, 1, &rates()).unwrap();
        let null = null_config(2, 0, 1, &rates()).unwrap();
        assert!(matches!(type1_error(&alt, 0.5, &b), Err(MeritError::Label { .. })));
        assert!(matches!(power(&null, 0.5, &b, PowerKind::I), Err(MeritError::Label { .. })));
    }

    #[test]
    fn single_dose_power_two_is_acceptance() {
        let lfs = least_favorable_set(1, &rates()).unwrap();
        let b = Boundary::new(25, 7, 8).unwrap();
        let p = power(&lfs[0], 0.5, &b, PowerKind::II).unwrap();
        let q = arm_acceptance(0.2, 0.4, 0.5, &b).unwrap();
        assert!((p - q).abs() < 1e-15);
    }

    #[test]
    fn null_rejection_at_47_13_14() {
        // numpy dynamic-program oracle, scenarios 1..=6
        let want = [
            0.089_968_671_046_794_4,
            0.046_774_749_319_230_2,
            0.001_530_662_048_076_503,
            0.102_195_561_216_771_65,
            0.059_581_979_220_567_07,
            0.114_258_174_797_062_02,
        ];
        let b = Boundary::new(47, 13, 14).unwrap();
        let oc = global_oc(&b, 2, &rates(), 0.5, PowerKind::I, EvalMode::Exact).unwrap();
        for (s, w) in oc.per_null_alpha.iter().zip(want) {
            assert!((s.value - w).abs() < 1e-12, "{}: {} vs {}", s.label, s.value, w);
        }
        assert_eq!(oc.global_alpha, oc.per_null_alpha[5].value);
    }

    #[test]
    fn global_values_are_extremes() {
        let b = Boundary::new(30, 9, 10).unwrap();
        for doses in 1..=4 {
            let oc = global_oc(&b, doses, &rates(), 0.5, PowerKind::I, EvalMode::Exact).unwrap();
            assert_eq!(oc.per_null_alpha.len(), (doses + 1) * (doses + 2) / 2);
            assert_eq!(oc.per_lfs_power.len(), doses);
            let max = oc.per_null_alpha.iter().map(|s| s.value).fold(f64::MIN, f64::max);
            let min = oc.per_lfs_power.iter().map(|s| s.value).fold(f64::MAX, f64::min);
            assert_eq!(oc.global_alpha, max);
            assert_eq!(oc.global_power, min);
            // Recompute each null directly.
            for s in &oc.per_null_alpha {
                let HypothesisLabel::Null { s: s0, k } = s.label else { panic!() };
                let cfg = null_config(doses, s0, k, &rates()).unwrap();
                assert!((type1_error(&cfg, 0.5, &b).unwrap() - s.value).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn all_alternatives_minimum_is_attained_on_lfs() {
        let b = Boundary::new(47, 13, 14).unwrap();
        for kind in [PowerKind::I, PowerKind::II] {
            let all = power_over_all_alternatives(&b, 2, &rates(), 0.5, kind).unwrap();
            assert_eq!(all.len(), 3);
            let oc = global_oc(&b, 2, &rates(), 0.5, kind, EvalMode::Exact).unwrap();
            let min_all = all.iter().map(|s| s.value).fold(1.0, f64::min);
            assert!((min_all - oc.global_power).abs() < 1e-15);
        }
        for m_t in [5, 8, 10, 12, 15] {
            for m_e in [4, 7, 9, 11, 14] {
                let b = Boundary::new(30, m_t, m_e).unwrap();
                for kind in [PowerKind::I, PowerKind::II] {
                    let all = power_over_all_alternatives(&b, 3, &rates(), 0.5, kind).unwrap();
                    let oc = global_oc(&b, 3, &rates(), 0.5, kind, EvalMode::Exact).unwrap();
                    let min_all = all.iter().map(|s| s.value).fold(1.0, f64::min);
                    assert!((min_all - oc.global_power).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn theorem_holds_on_small_grids() {
        for n in [10, 20] {
            let report = verify_theorem1(2, &rates(), 0.5, &Boundary::full_grid(n)).unwrap();
            assert!(report.is_clean());
            assert_eq!(report.rows.len(), (n + 1) * (n + 1) * 2 * 3);
        }
        let report = verify_theorem1(3, &rates(), 0.5, &Boundary::full_grid(15)).unwrap();
        assert_eq!(report.violations().count(), 0);
    }

    #[test]
    fn theorem_report_shape_for_single_boundary() {
        let b = Boundary::new(20, 5, 6).unwrap();
        let report = verify_theorem1(3, &rates(), 0.5, &[b]).unwrap();
        assert_eq!(report.boundaries, 1);
        assert_eq!(report.rows.len(), 2 * 6);
        assert!(report.rows.iter().all(|r| r.boundary == b));
    }

    #[test]
    fn monte_carlo_tracks_exact() {
        let b = Boundary::new(47, 13, 14).unwrap();
        let exact = global_oc(&b, 2, &rates(), 0.5, PowerKind::I, EvalMode::Exact).unwrap();
        let mc = global_oc(
            &b,
            2,
            &rates(),
            0.5,
            PowerKind::I,
            EvalMode::MonteCarlo { replicates: 200_000, seed: 17 },
        )
        .unwrap();
        assert_eq!(mc.replicates, 200_000);
        for (e, m) in exact
            .per_null_alpha
            .iter()
            .chain(&exact.per_lfs_power)
            .zip(mc.per_null_alpha.iter().chain(&mc.per_lfs_power))
        {
            let se = (e.value * (1.0 - e.value) / 200_000.0).sqrt();
            assert!((e.value - m.value).abs() <= 3.0 * se + 1e-12, "{}: {} vs {}", e.label, e.value, m.value);
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let b = Boundary::new(20, 6, 6).unwrap();
        let mode = EvalMode::MonteCarlo { replicates: 25_000, seed: 3 };
        let a = global_oc(&b, 3, &rates(), 0.5, PowerKind::II, mode).unwrap();
        let c = global_oc(&b, 3, &rates(), 0.5, PowerKind::II, mode).unwrap();
        assert_eq!(a, c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn probabilities_and_kind_ordering(
            n in 1usize..=40, a in 0.0f64..=1.0, c in 0.0f64..=1.0,
            doses in 1usize..=4, rho in -0.8f64..0.8,
        ) {
            let b = Boundary::new(n, (a * n as f64) as usize, (c * n as f64) as usize).unwrap();
            let r = rates();
            let alts = enumerate_alternative(doses, &r).unwrap();
            let nulls = enumerate_null(doses, &r).unwrap();
            let t = OcTables::exact(n, rho, alts.iter().chain(&nulls)).unwrap();
            for cfg in &alts {
                let p1 = t.power(cfg, b.m_t, b.m_e, PowerKind::I);
                let p2 = t.power(cfg, b.m_t, b.m_e, PowerKind::II);
                prop_assert!((0.0..=1.0).contains(&p1));
                prop_assert!((0.0..=1.0).contains(&p2));
                prop_assert!(p1 <= p2 + 1e-15);
            }
            for cfg in &nulls {
                let alpha = t.rejection(cfg, b.m_t, b.m_e);
                prop_assert!((0.0..=1.0 + 1e-15).contains(&alpha));
            }
        }

        #[test]
        fn global_alpha_monotone_in_boundaries(n in 1usize..=30, doses in 1usize..=3, rho in -0.8f64..0.8) {
            let r = rates();
            let nulls = enumerate_null(doses, &r).unwrap();
            let t = OcTables::exact(n, rho, &nulls).unwrap();
            let alpha = |m_t, m_e| nulls.iter().map(|c| t.rejection(c, m_t, m_e)).fold(0.0, f64::max);
            for m_t in 0..n {
                for m_e in 0..n {
                    let here = alpha(m_t, m_e);
                    prop_assert!(alpha(m_t + 1, m_e) >= here - 1e-14);
                    prop_assert!(alpha(m_t, m_e + 1) <= here + 1e-14);
                }
            }
        }
    }
}
