//! Minimal-sample-size search over decision boundaries.
//!
//! For each candidate `n` every `(m_T, m_E)` pair is screened against the
//! type I error and power targets. Global type I error is nondecreasing in
//! `m_T` at fixed `m_E`, so each column of the grid is scanned upward and cut
//! at the first violation.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{cell_probabilities, sample_arm, JointPmf};
use crate::error::{MeritError, Result};
use crate::hypothesis::{enumerate_null, least_favorable_set, DesignRates, HypothesisConfig};
use crate::oc::{summarize_tables, ArmTables, Boundary, EvalMode, OcResult, OcTables, PowerKind};
use crate::rng::{blocks, stream_id, stream_rng};

/// Targets and model settings for one design problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub rates: DesignRates,
    /// Number of dose arms, J.
    pub doses: usize,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub power_kind: PowerKind,
    pub rho: f64,
    pub n_max: usize,
    pub mode: EvalMode,
}

impl DesignSpec {
    pub const DEFAULT_RHO: f64 = 0.5;
    pub const DEFAULT_N_MAX: usize = 100;

    /// Spec with default correlation, `n_max` and exact evaluation.
    pub fn new(
        rates: DesignRates,
        doses: usize,
        alpha_star: f64,
        beta_star: f64,
        power_kind: PowerKind,
    ) -> Result<Self> {
        let spec = DesignSpec {
            rates,
            doses,
            alpha_star,
            beta_star,
            power_kind,
            rho: Self::DEFAULT_RHO,
            n_max: Self::DEFAULT_N_MAX,
            mode: EvalMode::Exact,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if self.doses == 0 {
            return Err(MeritError::invalid("doses", "need at least one dose"));
        }
        open_unit("alpha_star", self.alpha_star)?;
        open_unit("beta_star", self.beta_star)?;
        if self.rho.is_nan() || self.rho.abs() >= 1.0 {
            return Err(MeritError::invalid("rho", format!("{} is outside (-1, 1)", self.rho)));
        }
        if self.n_max == 0 {
            return Err(MeritError::invalid("n_max", "must be at least 1"));
        }
        if let EvalMode::MonteCarlo { replicates: 0, .. } = self.mode {
            return Err(MeritError::invalid("replicates", "must be positive"));
        }
        Ok(())
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(MeritError::invalid(field, format!("{v} is outside (0, 1)")))
    }
}

/// A boundary meeting both targets, with its operating characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub boundary: Boundary,
    pub oc: OcResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub boundary: Boundary,
    pub oc: OcResult,
    pub feasible: bool,
    /// Every feasible boundary at the chosen `n`, in `(m_T, m_E)` order.
    /// Empty when infeasible.
    pub alternatives_at_n: Vec<Boundary>,
}

/// Configurations and per-arm tables at one sample size.
struct Stage {
    n: usize,
    nulls: Vec<HypothesisConfig>,
    lfs: Vec<HypothesisConfig>,
    tables: OcTables,
}

impl Stage {
    fn new(n: usize, spec: &DesignSpec) -> Result<Self> {
        spec.validate()?;
        if n == 0 || n > spec.n_max {
            return Err(MeritError::invalid("n", format!("{n} is outside [1, {}]", spec.n_max)));
        }
        let nulls = enumerate_null(spec.doses, &spec.rates)?;
        let lfs = least_favorable_set(spec.doses, &spec.rates)?;
        let tables = match spec.mode {
            EvalMode::Exact => OcTables::exact(n, spec.rho, nulls.iter().chain(&lfs))?,
            EvalMode::MonteCarlo { replicates, seed } => {
                let mut law = 0u32;
                OcTables::build(n, nulls.iter().chain(&lfs), |d| {
                    law += 1;
                    let task = (n as u32) << 8 | law;
                    plug_in_tables(n, d.pi_t, d.pi_e, spec.rho, replicates, seed, task)
                })?
            }
        };
        Ok(Stage { n, nulls, lfs, tables })
    }

    fn alpha(&self, m_t: usize, m_e: usize) -> f64 {
        self.nulls
            .iter()
            .map(|c| self.tables.rejection(c, m_t, m_e))
            .fold(0.0, f64::max)
    }

    fn power(&self, m_t: usize, m_e: usize, kind: PowerKind) -> f64 {
        self.lfs
            .iter()
            .map(|c| self.tables.power(c, m_t, m_e, kind))
            .fold(1.0, f64::min)
    }

    fn oc(&self, b: &Boundary, spec: &DesignSpec) -> OcResult {
        let mut oc = summarize_tables(&self.tables, b, &self.nulls, &self.lfs, spec.power_kind);
        if let EvalMode::MonteCarlo { replicates, .. } = spec.mode {
            // Binomial standard errors of the plug-in estimates.
            let r = replicates as f64;
            for s in oc.per_null_alpha.iter_mut().chain(oc.per_lfs_power.iter_mut()) {
                s.se = Some((s.value * (1.0 - s.value) / r).sqrt());
            }
            oc.mc_standard_error = oc
                .per_null_alpha
                .iter()
                .chain(&oc.per_lfs_power)
                .filter_map(|s| s.se)
                .reduce(f64::max);
            oc.mode = spec.mode;
            oc.replicates = replicates;
        }
        oc
    }

    fn candidate(&self, m_t: usize, m_e: usize, spec: &DesignSpec) -> Candidate {
        let boundary = Boundary { n: self.n, m_t, m_e };
        Candidate {
            boundary,
            oc: self.oc(&boundary, spec),
        }
    }
}

/// Empirical per-arm tables from `replicates` simulated arms of size `n`.
fn plug_in_tables(
    n: usize,
    pi_t: f64,
    pi_e: f64,
    rho: f64,
    replicates: u64,
    seed: u64,
    task: u32,
) -> Result<ArmTables> {
    let cells = cell_probabilities(pi_t, pi_e, rho)?;
    let width = n + 1;
    let counts = blocks(replicates)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(block, len)| {
            let mut rng = stream_rng(seed, stream_id(task, block));
            let mut counts = vec![0u64; width * width];
            for _ in 0..len {
                let (t, e) = sample_arm(n, &cells, &mut rng);
                counts[t * width + e] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; width * width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ArmTables::from_pmf(&JointPmf::from_counts(n, &counts)))
}

fn pruned_scan(stage: &Stage, spec: &DesignSpec) -> Vec<(usize, usize)> {
    let n = stage.n;
    let mut pairs: Vec<(usize, usize)> = (0..=n)
        .into_par_iter()
        .flat_map_iter(|m_e| {
            let mut hits = Vec::new();
            for m_t in 0..=n {
                if stage.alpha(m_t, m_e) > spec.alpha_star {
                    break;
                }
                if stage.power(m_t, m_e, spec.power_kind) >= spec.beta_star {
                    hits.push((m_t, m_e));
                }
            }
            hits
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

fn naive_scan(stage: &Stage, spec: &DesignSpec) -> Vec<(usize, usize)> {
    let n = stage.n;
    (0..=n)
        .flat_map(|m_t| (0..=n).map(move |m_e| (m_t, m_e)))
        .filter(|&(m_t, m_e)| {
            stage.alpha(m_t, m_e) <= spec.alpha_star
                && stage.power(m_t, m_e, spec.power_kind) >= spec.beta_star
        })
        .collect()
}

/// All boundaries at sample size `n` meeting both targets, ordered by
/// `(m_T, m_E)`.
pub fn feasible_boundaries(n: usize, spec: &DesignSpec) -> Result<Vec<Candidate>> {
    let stage = Stage::new(n, spec)?;
    Ok(pruned_scan(&stage, spec)
        .into_iter()
        .map(|(m_t, m_e)| stage.candidate(m_t, m_e, spec))
        .collect())
}

/// Same result as [`feasible_boundaries`] from an unpruned scan of the whole
/// grid.
pub fn feasible_boundaries_naive(n: usize, spec: &DesignSpec) -> Result<Vec<Candidate>> {
    let stage = Stage::new(n, spec)?;
    Ok(naive_scan(&stage, spec)
        .into_iter()
        .map(|(m_t, m_e)| stage.candidate(m_t, m_e, spec))
        .collect())
}

/// Ordering used to pick one boundary: highest power, then lowest type I
/// error, then smallest `m_E`, then smallest `m_T`.
fn preference(a: &Candidate, b: &Candidate) -> Ordering {
    b.oc
        .global_power
        .total_cmp(&a.oc.global_power)
        .then(a.oc.global_alpha.total_cmp(&b.oc.global_alpha))
        .then(a.boundary.m_e.cmp(&b.boundary.m_e))
        .then(a.boundary.m_t.cmp(&b.boundary.m_t))
}

/// Smallest `n <= n_max` admitting a feasible boundary. When none exists the
/// result is flagged infeasible and carries the best near miss at `n_max`:
/// the most powerful boundary within the type I error target, or failing
/// that the one with the smallest type I error.
pub fn find_optimal_design(spec: &DesignSpec) -> Result<DesignResult> {
    spec.validate()?;
    for n in 1..=spec.n_max {
        let cands = feasible_boundaries(n, spec)?;
        if let Some(best) = cands.iter().min_by(|a, b| preference(a, b)) {
            return Ok(DesignResult {
                boundary: best.boundary,
                oc: best.oc.clone(),
                feasible: true,
                alternatives_at_n: cands.iter().map(|c| c.boundary).collect(),
            });
        }
    }
    let stage = Stage::new(spec.n_max, spec)?;
    let n = stage.n;
    let grid: Vec<(usize, usize, f64)> = (0..=n)
        .flat_map(|m_t| (0..=n).map(move |m_e| (m_t, m_e)))
        .map(|(m_t, m_e)| (m_t, m_e, stage.alpha(m_t, m_e)))
        .collect();
    let within: Vec<_> = grid.iter().filter(|g| g.2 <= spec.alpha_star).collect();
    let pick = if within.is_empty() {
        grid.iter()
            .min_by(|a, b| a.2.total_cmp(&b.2).then((a.1, a.0).cmp(&(b.1, b.0))))
            .expect("grid is nonempty")
    } else {
        within
            .into_iter()
            .map(|g| (g, stage.candidate(g.0, g.1, spec)))
            .min_by(|a, b| preference(&a.1, &b.1))
            .expect("checked nonempty")
            .0
    };
    let near = stage.candidate(pick.0, pick.1, spec);
    Ok(DesignResult {
        boundary: near.boundary,
        oc: near.oc,
        feasible: false,
        alternatives_at_n: Vec::new(),
    })
}

/// Minimal feasible `n` for each type I error target, holding everything else
/// in `spec` fixed. `None` marks targets infeasible within `n_max`.
pub fn sample_size_curve(spec: &DesignSpec, alpha_grid: &[f64]) -> Result<Vec<(f64, Option<usize>)>> {
    if alpha_grid.is_empty() {
        return Err(MeritError::Empty("alpha grid"));
    }
    alpha_grid
        .par_iter()
        .map(|&alpha_star| {
            let s = DesignSpec { alpha_star, ..*spec };
            let r = find_optimal_design(&s)?;
            Ok((alpha_star, r.feasible.then_some(r.boundary.n)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oc::global_oc;

    fn spec(e0: f64, e1: f64, doses: usize, alpha: f64, beta: f64, kind: PowerKind) -> DesignSpec {
        let rates = DesignRates::new(0.4, 0.2, e0, e1).unwrap();
        DesignSpec::new(rates, doses, alpha, beta, kind).unwrap()
    }

    #[test]
    fn spec_validation_names_fields() {
        let r = DesignRates::default();
        let err = DesignSpec::new(r, 2, 1.5, 0.8, PowerKind::I).unwrap_err();
        assert!(err.to_string().contains("alpha_star"), "{err}");
        let err = DesignSpec::new(r, 2, 0.1, 0.0, PowerKind::I).unwrap_err();
        assert!(err.to_string().contains("beta_star"));
        assert!(DesignSpec::new(r, 0, 0.1, 0.8, PowerKind::I).is_err());
        let mut s = DesignSpec::new(r, 2, 0.1, 0.8, PowerKind::I).unwrap();
        s.n_max = 0;
        assert!(s.validate().is_err());
        s.n_max = 10;
        assert!(feasible_boundaries(11, &s).is_err());
    }

    #[test]
    fn one_patient_cannot_meet_demanding_targets() {
        let s = spec(0.2, 0.4, 2, 0.01, 0.99, PowerKind::I);
        assert!(feasible_boundaries(1, &s).unwrap().is_empty());
    }

    #[test]
    fn pruning_matches_naive_scan() {
        for (doses, kind, alpha, beta) in [
            (2, PowerKind::I, 0.1, 0.8),
            (2, PowerKind::II, 0.3, 0.6),
            (3, PowerKind::I, 0.2, 0.7),
            (3, PowerKind::II, 0.1, 0.8),
        ] {
            let s = spec(0.2, 0.4, doses, alpha, beta, kind);
            for n in [5, 20, 35, 50, 60] {
                let a = feasible_boundaries(n, &s).unwrap();
                let b = feasible_boundaries_naive(n, &s).unwrap();
                assert_eq!(a, b, "n={n}");
            }
        }
    }

    #[test]
    fn result_is_minimal_and_revalidates() {
        let s = spec(0.1, 0.3, 2, 0.1, 0.6, PowerKind::I);
        let r = find_optimal_design(&s).unwrap();
        assert!(r.feasible);
        assert!(feasible_boundaries(r.boundary.n - 1, &s).unwrap().is_empty());
        assert!(r.alternatives_at_n.contains(&r.boundary));
        let oc = global_oc(&r.boundary, 2, &s.rates, s.rho, s.power_kind, EvalMode::Exact).unwrap();
        assert!(oc.global_alpha <= s.alpha_star);
        assert!(oc.global_power >= s.beta_star);
        assert_eq!(oc, r.oc);
    }

    #[test]
    fn chosen_boundary_wins_the_tie_break() {
        let s = spec(0.2, 0.4, 2, 0.2, 0.7, PowerKind::II);
        let r = find_optimal_design(&s).unwrap();
        let all = feasible_boundaries(r.boundary.n, &s).unwrap();
        for c in &all {
            assert!(preference(c, &all.iter().find(|x| x.boundary == r.boundary).unwrap().clone()) != Ordering::Less);
        }
    }

    #[test]
    fn infeasible_spec_reports_near_miss() {
        let mut s = spec(0.2, 0.4, 2, 0.05, 0.95, PowerKind::I);
        s.n_max = 12;
        let r = find_optimal_design(&s).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.boundary.n, 12);
        assert!(r.alternatives_at_n.is_empty());
        assert!(r.oc.global_power < s.beta_star || r.oc.global_alpha > s.alpha_star);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = spec(0.3, 0.5, 3, 0.2, 0.7, PowerKind::I);
        let a = find_optimal_design(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| find_optimal_design(&s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn curve_is_monotone() {
        for kind in [PowerKind::I, PowerKind::II] {
            let s = spec(0.2, 0.4, 2, 0.1, 0.8, kind);
            let curve = sample_size_curve(&s, &[0.05, 0.1, 0.2, 0.3, 0.4]).unwrap();
            let ns: Vec<usize> = curve.iter().map(|c| c.1.unwrap()).collect();
            assert!(ns.windows(2).all(|w| w[0] >= w[1]), "{ns:?}");
        }
        assert!(sample_size_curve(&spec(0.2, 0.4, 2, 0.1, 0.8, PowerKind::I), &[]).is_err());
    }

    #[test]
    fn monte_carlo_search_is_reproducible_and_close() {
        let mut s = spec(0.1, 0.3, 2, 0.3, 0.6, PowerKind::II);
        let exact = find_optimal_design(&s).unwrap();
        s.mode = EvalMode::MonteCarlo { replicates: 50_000, seed: 9 };
        let a = find_optimal_design(&s).unwrap();
        let b = find_optimal_design(&s).unwrap();
        assert_eq!(a, b);
        assert!(a.feasible);
        assert!(a.oc.mc_standard_error.is_some());
        assert!(a.boundary.n.abs_diff(exact.boundary.n) <= 2, "{} vs {}", a.boundary, exact.boundary);
    }
}
