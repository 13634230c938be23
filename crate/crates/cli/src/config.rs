use std::path::Path;

use merit_core::hypothesis::DesignRates;
use merit_core::oc::{Boundary, EvalMode, PowerKind, DEFAULT_REPLICATES};
use merit_core::search::DesignSpec;
use merit_core::table2::Table2Grid;
use merit_core::trial::InterimPolicy;
use serde::Deserialize;

use crate::error::CliError;

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub design: DesignSection,
    pub boundary: Option<BoundarySection>,
    pub simulate: SimulateSection,
    pub theorem: TheoremSection,
    pub table2: Table2Section,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub phi_t0: f64,
    pub phi_t1: f64,
    pub phi_e0: f64,
    pub phi_e1: f64,
    pub doses: usize,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub power_kind: u8,
    pub rho: f64,
    pub n_max: usize,
    pub mode: String,
    pub replicates: u64,
    pub seed: u64,
}

impl Default for DesignSection {
    fn default() -> Self {
        let r = DesignRates::default();
        DesignSection {
            phi_t0: r.phi_t0,
            phi_t1: r.phi_t1,
            phi_e0: r.phi_e0,
            phi_e1: r.phi_e1,
            doses: 2,
            alpha_star: 0.1,
            beta_star: 0.8,
            power_kind: 1,
            rho: DesignSpec::DEFAULT_RHO,
            n_max: DesignSpec::DEFAULT_N_MAX,
            mode: "exact".into(),
            replicates: DEFAULT_REPLICATES,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub n: usize,
    pub m_t: usize,
    pub m_e: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Look fractions, e.g. `["1/3", "2/3"]` or `[0.5]`.
    pub looks: Vec<Fraction>,
    pub c_t: f64,
    pub c_e: f64,
    pub prior_a: f64,
    pub prior_b: f64,
    pub isotonic_tox: bool,
    pub isotonic_eff: bool,
    /// Scenario numbers to simulate; all nulls and alternatives when empty.
    pub scenarios: Vec<u32>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let p = InterimPolicy::default();
        SimulateSection {
            looks: p.looks.iter().map(|&f| Fraction::Value(f)).collect(),
            c_t: p.c_t,
            c_e: p.c_e,
            prior_a: p.prior_a,
            prior_b: p.prior_b,
            isotonic_tox: true,
            isotonic_eff: true,
            scenarios: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Fraction {
    Value(f64),
    Text(String),
}

impl Fraction {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Fraction::Value(v) => Ok(*v),
            Fraction::Text(s) => parse_fraction(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremSection {
    /// Sample sizes whose full boundary grids are checked.
    pub n: Vec<usize>,
    /// Dose counts; the design's when empty.
    pub doses: Vec<usize>,
    /// Correlations; the design's when empty.
    pub rho: Vec<f64>,
    /// Check this single boundary instead of full grids.
    pub boundary: Option<BoundarySection>,
}

impl Default for TheoremSection {
    fn default() -> Self {
        TheoremSection {
            n: vec![10, 15, 20],
            doses: Vec::new(),
            rho: Vec::new(),
            boundary: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table2Section {
    pub efficacy: Vec<(f64, f64)>,
    pub doses: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub kinds: Vec<u8>,
}

impl Default for Table2Section {
    fn default() -> Self {
        let g = Table2Grid::default();
        Table2Section {
            efficacy: g.efficacy,
            doses: g.doses,
            alphas: g.alphas,
            betas: g.betas,
            kinds: g.kinds.iter().map(|k| k.index()).collect(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }

    pub fn mode(&self) -> Result<EvalMode, CliError> {
        match self.design.mode.as_str() {
            "exact" => Ok(EvalMode::Exact),
            "mc" => Ok(EvalMode::MonteCarlo {
                replicates: self.design.replicates,
                seed: self.design.seed,
            }),
            other => Err(CliError::Usage(format!("design.mode: expected exact or mc, got {other:?}"))),
        }
    }

    pub fn rates(&self) -> Result<DesignRates, CliError> {
        let d = &self.design;
        DesignRates::new(d.phi_t0, d.phi_t1, d.phi_e0, d.phi_e1).map_err(|e| section("design", e))
    }

    pub fn spec(&self) -> Result<DesignSpec, CliError> {
        let d = &self.design;
        let spec = DesignSpec {
            rates: self.rates()?,
            doses: d.doses,
            alpha_star: d.alpha_star,
            beta_star: d.beta_star,
            power_kind: power_kind(d.power_kind).map_err(|e| CliError::Usage(format!("design.power_kind: {e}")))?,
            rho: d.rho,
            n_max: d.n_max,
            mode: self.mode()?,
        };
        spec.validate().map_err(|e| section("design", e))?;
        Ok(spec)
    }

    pub fn boundary(&self) -> Result<Boundary, CliError> {
        let b = self
            .boundary
            .ok_or_else(|| CliError::Usage("a [boundary] section with n, m_t and m_e is required".into()))?;
        Boundary::new(b.n, b.m_t, b.m_e).map_err(|e| section("boundary", e))
    }

    pub fn policy(&self) -> Result<InterimPolicy, CliError> {
        let s = &self.simulate;
        let policy = InterimPolicy {
            looks: s.looks.iter().map(Fraction::value).collect::<Result<_, _>>()?,
            c_t: s.c_t,
            c_e: s.c_e,
            prior_a: s.prior_a,
            prior_b: s.prior_b,
        };
        policy.validate().map_err(|e| section("simulate", e))?;
        Ok(policy)
    }

    pub fn table2_grid(&self) -> Result<Table2Grid, CliError> {
        let t = &self.table2;
        Ok(Table2Grid {
            efficacy: t.efficacy.clone(),
            doses: t.doses.clone(),
            alphas: t.alphas.clone(),
            betas: t.betas.clone(),
            kinds: t
                .kinds
                .iter()
                .map(|&k| power_kind(k))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("table2.kinds: {e}")))?,
        })
    }
}

fn section(name: &str, e: merit_core::MeritError) -> CliError {
    CliError::Usage(format!("[{name}] {e}"))
}

pub fn power_kind(k: u8) -> Result<PowerKind, String> {
    match k {
        1 => Ok(PowerKind::I),
        2 => Ok(PowerKind::II),
        other => Err(format!("power kind must be 1 or 2, got {other}")),
    }
}

/// Parses `"1/3"` or `"0.5"`.
pub fn parse_fraction(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Usage(format!("cannot parse look fraction {s:?}"));
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Parses a comma-separated look list such as `"1/3,2/3"`.
pub fn parse_looks(s: &str) -> Result<Vec<Fraction>, CliError> {
    s.split(',').map(|p| parse_fraction(p).map(Fraction::Value)).collect()
}
