use merit_core::hypothesis::{enumerate_alternative, enumerate_null, HypothesisConfig};
use merit_core::oc::{
    global_oc, mc_probability, power_over_all_alternatives, verify_theorem1, Boundary, EvalMode, McEvent, OcResult,
    ScenarioValue,
};
use merit_core::search::{feasible_boundaries, find_optimal_design, DesignSpec};
use merit_core::table2::{reproduce_table2, CellMatch, Table2Summary};
use merit_core::trial::{simulate_oc_with_interim, TrialDesign};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Cell, Format, Report};

pub struct Outcome {
    pub report: Report,
    /// False for infeasible designs, theorem violations, or designs that fail
    /// re-validation.
    pub ok: bool,
}

fn spec_line(s: &DesignSpec) -> String {
    let r = &s.rates;
    format!(
        "rates (phi_T0, phi_T1, phi_E0, phi_E1) = ({}, {}, {}, {}); J = {}; alpha* = {}; beta* = {}; power {}; rho = {}",
        r.phi_t0, r.phi_t1, r.phi_e0, r.phi_e1, s.doses, s.alpha_star, s.beta_star, s.power_kind, s.rho
    )
}

fn scenario_rows(report: &mut Report, oc: &OcResult) {
    for s in &oc.per_null_alpha {
        report.push(vec![s.scenario.into(), s.label.to_string().into(), "alpha".into(), Cell::Prob(s.value), s.se.into()]);
    }
    let measure = format!("power_{}", oc.kind);
    for s in &oc.per_lfs_power {
        report.push(vec![s.scenario.into(), s.label.to_string().into(), measure.clone().into(), Cell::Prob(s.value), s.se.into()]);
    }
}

pub fn design(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let result = find_optimal_design(&spec)?;
    let b = result.boundary;
    match format {
        Format::Table => {
            let mut report = Report::new(&["scenario", "hypothesis", "measure", "value", "se"]);
            report.note(spec_line(&spec));
            if result.feasible {
                report.note(format!("optimal design: n = {}, m_T = {}, m_E = {}", b.n, b.m_t, b.m_e));
                report.note(format!("{} feasible boundary pair(s) at n = {}", result.alternatives_at_n.len(), b.n));
            } else {
                report.note(format!("infeasible: no n <= {} meets both targets", spec.n_max));
                report.note(format!("best near miss: n = {}, m_T = {}, m_E = {}", b.n, b.m_t, b.m_e));
            }
            report.note(format!(
                "global alpha = {:.6}, global power = {:.6}",
                result.oc.global_alpha, result.oc.global_power
            ));
            scenario_rows(&mut report, &result.oc);
            Ok(Outcome {
                report,
                ok: result.feasible,
            })
        }
        Format::Csv => {
            let mut report = Report::new(&[
                "phi_t0", "phi_t1", "phi_e0", "phi_e1", "doses", "alpha_star", "beta_star", "power_kind", "rho", "n", "m_t",
                "m_e", "alpha", "beta", "selected", "feasible",
            ]);
            let rows: Vec<(Boundary, OcResult)> = if result.feasible {
                feasible_boundaries(b.n, &spec)?.into_iter().map(|c| (c.boundary, c.oc)).collect()
            } else {
                vec![(b, result.oc.clone())]
            };
            let r = &spec.rates;
            for (cand, oc) in rows {
                report.push(vec![
                    Cell::Prob(r.phi_t0),
                    Cell::Prob(r.phi_t1),
                    Cell::Prob(r.phi_e0),
                    Cell::Prob(r.phi_e1),
                    spec.doses.into(),
                    Cell::Prob(spec.alpha_star),
                    Cell::Prob(spec.beta_star),
                    u32::from(spec.power_kind.index()).into(),
                    Cell::Prob(spec.rho),
                    cand.n.into(),
                    cand.m_t.into(),
                    cand.m_e.into(),
                    Cell::Prob(oc.global_alpha),
                    Cell::Prob(oc.global_power),
                    usize::from(cand == b).into(),
                    usize::from(result.feasible).into(),
                ]);
            }
            Ok(Outcome {
                report,
                ok: result.feasible,
            })
        }
    }
}

pub fn evaluate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let b = cfg.boundary()?;
    let nulls = enumerate_null(spec.doses, &spec.rates)?;
    let alts = enumerate_alternative(spec.doses, &spec.rates)?;
    let kind = spec.power_kind;
    let (null_vals, alt_vals): (Vec<ScenarioValue>, Vec<ScenarioValue>) = match spec.mode {
        EvalMode::Exact => {
            let oc = global_oc(&b, spec.doses, &spec.rates, spec.rho, kind, EvalMode::Exact)?;
            let alts = power_over_all_alternatives(&b, spec.doses, &spec.rates, spec.rho, kind)?;
            (oc.per_null_alpha, alts)
        }
        EvalMode::MonteCarlo { replicates, seed } => {
            let run = |cfgs: &[HypothesisConfig], event: McEvent, offset: usize| -> Result<Vec<ScenarioValue>, CliError> {
                cfgs.iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let (p, se) = mc_probability(c, spec.rho, &b, event, replicates, seed, (offset + i) as u32)?;
                        Ok(ScenarioValue {
                            label: c.label,
                            scenario: c.scenario(),
                            value: p,
                            se: Some(se),
                        })
                    })
                    .collect()
            };
            (run(&nulls, McEvent::Rejection, 0)?, run(&alts, McEvent::Power(kind), nulls.len())?)
        }
    };
    let mut report = Report::new(&["scenario", "hypothesis", "measure", "value", "se"]);
    report.note(spec_line(&spec));
    report.note(format!("boundary: n = {}, m_T = {}, m_E = {}", b.n, b.m_t, b.m_e));
    let alpha = null_vals.iter().map(|s| s.value).fold(0.0, f64::max);
    report.note(format!("global alpha = {alpha:.6}"));
    for s in &null_vals {
        report.push(vec![s.scenario.into(), s.label.to_string().into(), "alpha".into(), Cell::Prob(s.value), s.se.into()]);
    }
    let measure = format!("power_{kind}");
    for s in &alt_vals {
        report.push(vec![s.scenario.into(), s.label.to_string().into(), measure.clone().into(), Cell::Prob(s.value), s.se.into()]);
    }
    Ok(Outcome { report, ok: true })
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = DesignSpec {
        mode: EvalMode::Exact,
        ..cfg.spec()?
    };
    let policy = cfg.policy()?;
    let (b, origin) = match cfg.boundary {
        Some(_) => (cfg.boundary()?, "configured"),
        None => {
            let r = find_optimal_design(&spec)?;
            if !r.feasible {
                return Err(CliError::Usage(format!(
                    "no [boundary] given and the design is infeasible within n_max = {}",
                    spec.n_max
                )));
            }
            (r.boundary, "optimal")
        }
    };
    let mut configs = enumerate_null(spec.doses, &spec.rates)?;
    configs.extend(enumerate_alternative(spec.doses, &spec.rates)?);
    let wanted = &cfg.simulate.scenarios;
    if !wanted.is_empty() {
        if let Some(bad) = wanted.iter().find(|s| !configs.iter().any(|c| c.scenario() == **s)) {
            return Err(CliError::Usage(format!("simulate.scenarios: no scenario {bad} for J = {}", spec.doses)));
        }
        configs.retain(|c| wanted.contains(&c.scenario()));
    }
    let design = TrialDesign {
        boundary: b,
        rates: spec.rates,
        policy: Some(policy.clone()),
        isotonic_tox: cfg.simulate.isotonic_tox,
        isotonic_eff: cfg.simulate.isotonic_eff,
    };
    let rows = simulate_oc_with_interim(
        &configs,
        &design,
        spec.rho,
        spec.power_kind,
        cfg.design.replicates,
        cfg.design.seed,
    )?;
    let mut report = Report::new(&[
        "scenario",
        "hypothesis",
        "measure",
        "without",
        "with",
        "se_with",
        "delta",
        "se_delta",
        "expected_n_without",
        "expected_n_with",
        "se_expected_n_with",
        "delta_n",
    ]);
    report.note(spec_line(&spec));
    report.note(format!("{origin} boundary: n = {}, m_T = {}, m_E = {}", b.n, b.m_t, b.m_e));
    report.note(format!(
        "looks at {:?} of n (per-arm sizes {:?}); C_T = {}, C_E = {}; prior Beta({}, {}); {} replicates, seed {}",
        policy.looks,
        policy.look_sizes(b.n),
        policy.c_t,
        policy.c_e,
        policy.prior_a,
        policy.prior_b,
        cfg.design.replicates,
        cfg.design.seed
    ));
    let power = format!("power_{}", spec.power_kind);
    for (cfg, r) in configs.iter().zip(&rows) {
        let measure = if cfg.is_null() { "alpha".to_string() } else { power.clone() };
        report.push(vec![
            r.scenario.into(),
            r.label.to_string().into(),
            measure.into(),
            Cell::Prob(r.without.probability.value),
            Cell::Prob(r.with.probability.value),
            Cell::Prob(r.with.probability.se),
            Cell::Prob(r.delta.value),
            Cell::Prob(r.delta.se),
            Cell::Real(r.without.expected_n.value),
            Cell::Real(r.with.expected_n.value),
            Cell::Real(r.with.expected_n.se),
            Cell::Real(r.delta_n.value),
        ]);
    }
    Ok(Outcome { report, ok: true })
}

pub fn verify_theorem(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rates = cfg.rates()?;
    let t = &cfg.theorem;
    let doses = if t.doses.is_empty() { vec![cfg.design.doses] } else { t.doses.clone() };
    let rhos = if t.rho.is_empty() { vec![cfg.design.rho] } else { t.rho.clone() };
    let grids: Vec<(String, Vec<Boundary>)> = match t.boundary {
        Some(b) => {
            let b = Boundary::new(b.n, b.m_t, b.m_e).map_err(|e| CliError::Usage(format!("[theorem] {e}")))?;
            vec![(b.to_string(), vec![b])]
        }
        None => {
            if t.n.is_empty() {
                return Err(CliError::Usage("theorem.n: need at least one sample size".into()));
            }
            t.n.iter()
                .map(|&n| {
                    if n == 0 {
                        Err(CliError::Usage("theorem.n: sample sizes must be positive".into()))
                    } else {
                        Ok((format!("n = {n}, all pairs"), Boundary::full_grid(n)))
                    }
                })
                .collect::<Result<_, _>>()?
        }
    };
    let mut report = Report::new(&["doses", "rho", "grid", "boundaries", "comparisons", "violations", "max_excess"]);
    let mut total = 0;
    for &j in &doses {
        for &rho in &rhos {
            for (name, grid) in &grids {
                let r = verify_theorem1(j, &rates, rho, grid)?;
                let violations = r.violations().count();
                total += violations;
                let excess = r.rows.iter().map(|row| row.lfs_min - row.power).fold(f64::NEG_INFINITY, f64::max);
                report.push(vec![
                    j.into(),
                    Cell::Prob(rho),
                    name.clone().into(),
                    r.boundaries.into(),
                    r.rows.len().into(),
                    violations.into(),
                    Cell::Prob(excess),
                ]);
            }
        }
    }
    report.note(if total == 0 {
        "least favorable minimum holds on every checked boundary".to_string()
    } else {
        format!("{total} violation(s) found")
    });
    Ok(Outcome {
        report,
        ok: total == 0,
    })
}

pub fn table2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.table2_grid()?;
    let mode = cfg.mode()?;
    let rows = reproduce_table2(&grid, cfg.design.rho, cfg.design.n_max, mode)?;
    let summary = Table2Summary::of(&rows);
    let mut report = Report::new(&[
        "phi_e0", "phi_e1", "doses", "power_kind", "alpha_star", "beta_star", "pub_n", "pub_m_t", "pub_m_e", "n", "m_t", "m_e",
        "alpha", "beta", "match", "revalidated",
    ]);
    report.note(format!(
        "{} cells, {} published: {} exact, {} within one on n, {} mismatched; {} re-validated ({:.1}% exact)",
        summary.cells,
        summary.published,
        summary.exact,
        summary.within_one,
        summary.mismatch,
        summary.revalidated,
        100.0 * summary.exact_fraction()
    ));
    for r in &rows {
        let s = &r.spec;
        let (pn, pt, pe) = match r.published {
            Some(p) => (p.n.into(), p.m_t.into(), p.m_e.into()),
            None => (Cell::Empty, Cell::Empty, Cell::Empty),
        };
        let b = r.result.boundary;
        let flag = match r.agreement {
            CellMatch::Exact => "exact",
            CellMatch::WithinOne => "within_one",
            CellMatch::Mismatch => "mismatch",
            CellMatch::Unpublished => "unpublished",
        };
        report.push(vec![
            Cell::Prob(s.rates.phi_e0),
            Cell::Prob(s.rates.phi_e1),
            s.doses.into(),
            u32::from(s.power_kind.index()).into(),
            Cell::Prob(s.alpha_star),
            Cell::Prob(s.beta_star),
            pn,
            pt,
            pe,
            b.n.into(),
            b.m_t.into(),
            b.m_e.into(),
            Cell::Prob(r.result.oc.global_alpha),
            Cell::Prob(r.result.oc.global_power),
            flag.into(),
            usize::from(r.revalidated).into(),
        ]);
    }
    Ok(Outcome {
        report,
        ok: rows.iter().all(|r| r.revalidated),
    })
}
