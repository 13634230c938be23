use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{cell_probabilities, sample_arm, CellProbs};
use crate::error::{MeritError, Result};
use crate::hypothesis::{ArmState, DesignRates, HypothesisConfig, HypothesisLabel};
use crate::oc::{Boundary, McEvent, PowerKind};
use crate::rng::{blocks, stream_id, stream_rng};

use super::monitor::{assess, interim_decision, ArmRecord, ArmStatus, InterimDecision, InterimPolicy, TrialData, TrialOutcome};

/// Everything a simulated trial needs besides the true arm laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDesign {
    pub boundary: Boundary,
    /// Supplies the interim thresholds `phi_T1` and `phi_E1`.
    pub rates: DesignRates,
    pub policy: Option<InterimPolicy>,
    pub isotonic_tox: bool,
    pub isotonic_eff: bool,
}

impl TrialDesign {
    /// No interim looks, isotonic adjustment on both endpoints.
    pub fn new(boundary: Boundary, rates: DesignRates) -> Self {
        TrialDesign {
            boundary,
            rates,
            policy: None,
            isotonic_tox: true,
            isotonic_eff: true,
        }
    }

    pub fn with_policy(mut self, policy: InterimPolicy) -> Self {
        self.policy = Some(policy);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.boundary.validate()?;
        self.rates.validate()?;
        if let Some(p) = &self.policy {
            p.validate()?;
        }
        Ok(())
    }

    /// Cumulative enrollment at each analysis, ending with `n`.
    fn stages(&self) -> Vec<usize> {
        let n = self.boundary.n;
        let mut s = self.policy.as_ref().map(|p| p.look_sizes(n)).unwrap_or_default();
        s.push(n);
        s
    }
}

/// Per-arm cohort increments: `draws[stage][arm] = (tox, eff)`.
type Draws = Vec<Vec<(usize, usize)>>;

fn draw<R: Rng + ?Sized>(cells: &[CellProbs], stages: &[usize], rng: &mut R) -> Draws {
    let mut prev = 0;
    stages
        .iter()
        .map(|&cum| {
            let size = cum - prev;
            prev = cum;
            cells.iter().map(|c| sample_arm(size, c, rng)).collect()
        })
        .collect()
}

fn run(
    draws: &Draws,
    stages: &[usize],
    design: &TrialDesign,
    monitor: bool,
) -> Result<(TrialOutcome, Vec<Option<(f64, f64)>>)> {
    let arms = draws.first().map_or(0, Vec::len);
    let mut data = TrialData {
        arms: vec![
            ArmRecord {
                enrolled: 0,
                n_t: 0,
                n_e: 0,
                status: ArmStatus::Active,
            };
            arms
        ],
    };
    let mut prev = 0;
    let last = stages.len() - 1;
    for (stage, (&cum, cohort)) in stages.iter().zip(draws).enumerate() {
        for (arm, &(t, e)) in data.arms.iter_mut().zip(cohort) {
            if arm.status != ArmStatus::Active {
                continue;
            }
            arm.enrolled += cum - prev;
            arm.n_t += t;
            arm.n_e += e;
        }
        prev = cum;
        if stage == last || !monitor {
            continue;
        }
        let policy = design.policy.as_ref().expect("monitoring requires a policy");
        for arm in data.arms.iter_mut().filter(|a| a.status == ArmStatus::Active) {
            arm.status = match interim_decision(arm, &design.rates, policy)? {
                InterimDecision::Continue => ArmStatus::Active,
                InterimDecision::StopSafety => ArmStatus::StoppedSafety,
                InterimDecision::StopFutility => ArmStatus::StoppedFutility,
            };
        }
    }
    assess(&data, &design.boundary, design.isotonic_tox, design.isotonic_eff)
}

/// Simulates one trial from explicit per-arm cell probabilities.
pub fn simulate_trial_cells<R: Rng + ?Sized>(cells: &[CellProbs], design: &TrialDesign, rng: &mut R) -> Result<TrialOutcome> {
    design.validate()?;
    if cells.is_empty() {
        return Err(MeritError::Empty("arms"));
    }
    let stages = design.stages();
    let draws = draw(cells, &stages, rng);
    Ok(run(&draws, &stages, design, design.policy.is_some())?.0)
}

/// Simulates one trial under a hypothesis configuration.
pub fn simulate_trial<R: Rng + ?Sized>(
    cfg: &HypothesisConfig,
    rho: f64,
    design: &TrialDesign,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let cells = config_cells(cfg, rho)?;
    simulate_trial_cells(&cells, design, rng)
}

fn config_cells(cfg: &HypothesisConfig, rho: f64) -> Result<Vec<CellProbs>> {
    cfg.doses
        .iter()
        .map(|d| cell_probabilities(d.pi_t, d.pi_e, rho))
        .collect()
}

/// Whether a finished trial counts toward the scenario's operating
/// characteristic. Under kind I every arm that is not truly admissible must
/// be stopped or fail the endpoint that makes it inadmissible: efficacy for a
/// safe-futile arm, toxicity for a toxic arm.
fn success(
    cfg: &HypothesisConfig,
    b: &Boundary,
    outcome: &TrialOutcome,
    adjusted: &[Option<(f64, f64)>],
    event: McEvent,
) -> bool {
    let hit = || {
        outcome
            .admissible_set
            .iter()
            .any(|&j| cfg.doses[j].state.is_admissible())
    };
    match event {
        McEvent::Rejection => outcome.rejected_h0,
        McEvent::Power(PowerKind::II) => hit(),
        McEvent::Power(PowerKind::I) => {
            hit()
                && cfg.doses.iter().zip(adjusted).all(|(d, adj)| match (d.state, adj) {
                    (ArmState::SafeEfficacious, _) | (_, None) => true,
                    (ArmState::SafeFutile, Some((_, e))) => *e < b.m_e as f64,
                    (_, Some((t, _))) => *t > b.m_t as f64,
                })
        }
    }
}

/// Mean and standard error of a per-trial quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Operating characteristic and expected total enrollment of one monitoring
/// regime in one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOc {
    /// Rejection rate under a null, power under an alternative.
    pub probability: Estimate,
    pub expected_n: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterimOcRow {
    pub label: HypothesisLabel,
    pub scenario: u32,
    pub without: RegimeOc,
    pub with: RegimeOc,
    /// `with - without` for the probability, from paired replicates.
    pub delta: Estimate,
    /// `with - without` for expected total enrollment.
    pub delta_n: Estimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    hits_without: u64,
    hits_with: u64,
    discordant: i64,
    discordant_abs: u64,
    n_without: f64,
    n_without_sq: f64,
    n_with: f64,
    n_with_sq: f64,
    dn: f64,
    dn_sq: f64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.hits_without += o.hits_without;
        self.hits_with += o.hits_with;
        self.discordant += o.discordant;
        self.discordant_abs += o.discordant_abs;
        self.n_without += o.n_without;
        self.n_without_sq += o.n_without_sq;
        self.n_with += o.n_with;
        self.n_with_sq += o.n_with_sq;
        self.dn += o.dn;
        self.dn_sq += o.dn_sq;
        self
    }
}

fn mean_se(sum: f64, sum_sq: f64, r: f64) -> Estimate {
    let mean = sum / r;
    let var = if r > 1.0 {
        ((sum_sq - r * mean * mean) / (r - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        se: (var / r).sqrt(),
    }
}

fn proportion(hits: u64, r: f64) -> Estimate {
    let p = hits as f64 / r;
    Estimate {
        value: p,
        se: (p * (1.0 - p) / r).sqrt(),
    }
}

/// Simulates every configuration with and without the design's interim
/// policy. Both regimes see the same patient outcomes in each replicate, so
/// the deltas are paired.
pub fn simulate_oc_with_interim(
    configs: &[HypothesisConfig],
    design: &TrialDesign,
    rho: f64,
    kind: PowerKind,
    replicates: u64,
    seed: u64,
) -> Result<Vec<InterimOcRow>> {
    design.validate()?;
    if design.policy.is_none() {
        return Err(MeritError::invalid("policy", "interim comparison needs an interim policy"));
    }
    if configs.is_empty() {
        return Err(MeritError::Empty("scenario list"));
    }
    if replicates == 0 {
        return Err(MeritError::invalid("replicates", "must be positive"));
    }
    let stages = design.stages();
    let b = &design.boundary;
    let jobs: Vec<(usize, u32, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, _)| blocks(replicates).map(move |(blk, len)| (i, blk, len)))
        .collect();
    let cells: Vec<Vec<CellProbs>> = configs.iter().map(|c| config_cells(c, rho)).collect::<Result<_>>()?;

    let tallies: Vec<(usize, Tally)> = jobs
        .par_iter()
        .map(|&(i, blk, len)| {
            let cfg = &configs[i];
            let event = if cfg.is_null() { McEvent::Rejection } else { McEvent::Power(kind) };
            let mut rng = stream_rng(seed, stream_id(i as u32, blk));
            let mut t = Tally::default();
            for _ in 0..len {
                let draws = draw(&cells[i], &stages, &mut rng);
                let (o0, a0) = run(&draws, &stages, design, false)?;
                let (o1, a1) = run(&draws, &stages, design, true)?;
                let s0 = success(cfg, b, &o0, &a0, event);
                let s1 = success(cfg, b, &o1, &a1, event);
                t.hits_without += u64::from(s0);
                t.hits_with += u64::from(s1);
                let d = i64::from(s1) - i64::from(s0);
                t.discordant += d;
                t.discordant_abs += d.unsigned_abs();
                let (n0, n1) = (o0.total_enrolled as f64, o1.total_enrolled as f64);
                t.n_without += n0;
                t.n_without_sq += n0 * n0;
                t.n_with += n1;
                t.n_with_sq += n1 * n1;
                t.dn += n1 - n0;
                t.dn_sq += (n1 - n0) * (n1 - n0);
            }
            Ok((i, t))
        })
        .collect::<Result<_>>()?;

    let mut totals = vec![Tally::default(); configs.len()];
    for (i, t) in tallies {
        totals[i] = totals[i].merge(t);
    }
    let r = replicates as f64;
    Ok(configs
        .iter()
        .zip(totals)
        .map(|(cfg, t)| InterimOcRow {
            label: cfg.label,
            scenario: cfg.scenario(),
            without: RegimeOc {
                probability: proportion(t.hits_without, r),
                expected_n: mean_se(t.n_without, t.n_without_sq, r),
            },
            with: RegimeOc {
                probability: proportion(t.hits_with, r),
                expected_n: mean_se(t.n_with, t.n_with_sq, r),
            },
            delta: mean_se(t.discordant as f64, t.discordant_abs as f64, r),
            delta_n: mean_se(t.dn, t.dn_sq, r),
        })
        .collect())
}

/// Monte Carlo rejection rate or power of full trials without interim looks.
pub fn simulate_oc(
    cfg: &HypothesisConfig,
    design: &TrialDesign,
    rho: f64,
    event: McEvent,
    replicates: u64,
    seed: u64,
) -> Result<Estimate> {
    let design = TrialDesign {
        policy: None,
        ..design.clone()
    };
    design.validate()?;
    if replicates == 0 {
        return Err(MeritError::invalid("replicates", "must be positive"));
    }
    let cells = config_cells(cfg, rho)?;
    let stages = design.stages();
    let hits = blocks(replicates)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(blk, len)| {
            let mut rng = stream_rng(seed, stream_id(0, blk));
            let mut hits = 0u64;
            for _ in 0..len {
                let draws = draw(&cells, &stages, &mut rng);
                let (o, adj) = run(&draws, &stages, &design, false)?;
                hits += u64::from(success(cfg, &design.boundary, &o, &adj, event));
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(proportion(hits, replicates as f64))
}
