//! Per-arm joint law of (toxicity, efficacy) under a Gaussian copula, exact
//! joint tails of the count pair, and samplers.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bivariate::{bivariate_normal_cdf, std_normal_quantile};
use crate::error::{MeritError, Result};

/// Single-patient probabilities of the four `(Y_T, Y_E)` outcomes.
/// `p10` is toxicity without response, `p01` response without toxicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbs {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl CellProbs {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Result<Self> {
        let cells = CellProbs { p00, p01, p10, p11 };
        if cells.as_array().iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return Err(MeritError::invalid("cell probabilities", "entries must lie in [0, 1]"));
        }
        if (cells.as_array().iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(MeritError::invalid("cell probabilities", "entries must sum to 1"));
        }
        Ok(cells)
    }

    /// `[p00, p01, p10, p11]`
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }

    pub fn toxicity_marginal(&self) -> f64 {
        self.p10 + self.p11
    }

    pub fn efficacy_marginal(&self) -> f64 {
        self.p01 + self.p11
    }
}

/// Marginal rates, latent correlation and the cell law they induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmLaw {
    pub phi_t: f64,
    pub phi_e: f64,
    pub rho: f64,
    pub cells: CellProbs,
}

impl ArmLaw {
    pub fn new(phi_t: f64, phi_e: f64, rho: f64) -> Result<Self> {
        let cells = cell_probabilities(phi_t, phi_e, rho)?;
        Ok(ArmLaw {
            phi_t,
            phi_e,
            rho,
            cells,
        })
    }
}

fn check_marginal(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(MeritError::DegenerateMarginal { name, value })
    }
}

/// Cell probabilities implied by thresholding a standard bivariate normal
/// latent pair: a patient is toxic when `X_T <= Φ⁻¹(φ_T)` and responds when
/// `X_E <= Φ⁻¹(φ_E)`.
pub fn cell_probabilities(phi_t: f64, phi_e: f64, rho: f64) -> Result<CellProbs> {
    check_marginal("toxicity rate", phi_t)?;
    check_marginal("efficacy rate", phi_e)?;
    let p11 = if rho == 0.0 {
        phi_t * phi_e
    } else {
        bivariate_normal_cdf(std_normal_quantile(phi_t), std_normal_quantile(phi_e), rho)?
    };
    // Fréchet bounds absorb last-ulp drift from the quantile round trip.
    let p11 = p11.clamp((phi_t + phi_e - 1.0).max(0.0), phi_t.min(phi_e));
    let p10 = (phi_t - p11).max(0.0);
    let p01 = (phi_e - p11).max(0.0);
    let p00 = (1.0 - phi_t - phi_e + p11).max(0.0);
    Ok(CellProbs { p00, p01, p10, p11 })
}

/// Exact distribution of `(n_T, n_E)` after `n` independent patients.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    n: usize,
    /// Row-major over toxicity count, `(n + 1)²` entries.
    mass: Vec<f64>,
}

impl JointPmf {
    /// Forward recursion over patients; state is the (toxicity, efficacy)
    /// count pair, so the work is O(n³).
    pub fn new(n: usize, cells: &CellProbs) -> Self {
        let w = n + 1;
        let mut cur = vec![0.0; w * w];
        let mut next = vec![0.0; w * w];
        cur[0] = 1.0;
        for i in 0..n {
            next[..].fill(0.0);
            for t in 0..=i {
                for e in 0..=i {
                    let m = cur[t * w + e];
                    if m == 0.0 {
                        continue;
                    }
                    next[t * w + e] += m * cells.p00;
                    next[t * w + e + 1] += m * cells.p01;
                    next[(t + 1) * w + e] += m * cells.p10;
                    next[(t + 1) * w + e + 1] += m * cells.p11;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        JointPmf { n, mass: cur }
    }

    /// Empirical distribution from observed count pairs.
    pub fn from_counts(n: usize, counts: &[u64]) -> Self {
        let w = n + 1;
        assert_eq!(counts.len(), w * w, "count table must be (n + 1)²");
        let total: u64 = counts.iter().sum();
        let mass = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        JointPmf { n, mass }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, n_t: usize, n_e: usize) -> f64 {
        self.mass[n_t * (self.n + 1) + n_e]
    }

    /// `Pr(n_T <= m_t, n_E >= m_e)`; thresholds beyond `n` saturate.
    pub fn tail(&self, m_t: usize, m_e: usize) -> f64 {
        let w = self.n + 1;
        let mut total = 0.0;
        for t in 0..=m_t.min(self.n) {
            for e in m_e..w {
                total += self.mass[t * w + e];
            }
        }
        total
    }

    /// All tails at once: entry `[m_t * (n + 1) + m_e]` equals
    /// [`JointPmf::tail`] at `(m_t, m_e)`.
    pub fn tail_table(&self) -> Vec<f64> {
        let w = self.n + 1;
        let mut table = vec![0.0; w * w];
        for t in 0..w {
            let mut suffix = 0.0;
            for e in (0..w).rev() {
                suffix += self.mass[t * w + e];
                let above = if t == 0 { 0.0 } else { table[(t - 1) * w + e] };
                table[t * w + e] = above + suffix;
            }
        }
        table
    }

    /// Marginal pmf of the toxicity count.
    pub fn toxicity_marginal(&self) -> Vec<f64> {
        let w = self.n + 1;
        (0..w).map(|t| self.mass[t * w..(t + 1) * w].iter().sum()).collect()
    }

    /// Marginal pmf of the efficacy count.
    pub fn efficacy_marginal(&self) -> Vec<f64> {
        let w = self.n + 1;
        (0..w).map(|e| (0..w).map(|t| self.mass[t * w + e]).sum()).collect()
    }
}

fn check_counts(n: usize, m_t: usize, m_e: usize) -> Result<()> {
    if n == 0 {
        return Err(MeritError::invalid("n", "must be at least 1"));
    }
    if m_t > n || m_e > n {
        return Err(MeritError::invalid("boundary", format!("m_T = {m_t}, m_E = {m_e} must not exceed n = {n}")));
    }
    Ok(())
}

/// Exact `Pr(n_T <= m_t AND n_E >= m_e)` for one arm of `n` patients.
pub fn joint_tail(n: usize, m_t: usize, m_e: usize, cells: &CellProbs) -> Result<f64> {
    check_counts(n, m_t, m_e)?;
    Ok(JointPmf::new(n, cells).tail(m_t, m_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSide {
    /// `Pr(X <= threshold)`
    Lower,
    /// `Pr(X >= threshold)`
    Upper,
}

/// Binomial pmf over `0..=n`.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if p <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    if p >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    // Start at the mode and recurse outward to stay clear of underflow.
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let ln_mode = ln_choose(n, mode) + mode as f64 * p.ln() + (n - mode) as f64 * (-p).ln_1p();
    let ratio = p / (1.0 - p);
    let mut v = vec![0.0; n + 1];
    v[mode] = ln_mode.exp();
    for k in mode..n {
        v[k + 1] = v[k] * ((n - k) as f64 / (k + 1) as f64) * ratio;
    }
    for k in (1..=mode).rev() {
        v[k - 1] = v[k] * (k as f64 / (n - k + 1) as f64) / ratio;
    }
    v
}

fn ln_choose(n: usize, k: usize) -> f64 {
    statrs::function::factorial::ln_binomial(n as u64, k as u64)
}

/// Exact binomial lower (CDF) or upper (survival, inclusive) tail.
pub fn marginal_tails(n: usize, threshold: usize, p: f64, side: TailSide) -> Result<f64> {
    if threshold > n {
        return Err(MeritError::invalid("threshold", format!("{threshold} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(MeritError::invalid("p", format!("{p} is not a probability")));
    }
    let pmf = binomial_pmf(n, p);
    let total: f64 = match side {
        TailSide::Lower => pmf[..=threshold].iter().sum(),
        TailSide::Upper => pmf[threshold..].iter().sum(),
    };
    Ok(total.min(1.0))
}

fn binomial_draw<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p checked in (0, 1)").sample(rng)
    }
}

/// Draws `(n_T, n_E)` for `n` patients by splitting the multinomial cell
/// counts into conditional binomials.
pub fn sample_arm<R: Rng + ?Sized>(n: usize, cells: &CellProbs, rng: &mut R) -> (usize, usize) {
    let n = n as u64;
    let n11 = binomial_draw(rng, n, cells.p11);
    let rest = 1.0 - cells.p11;
    let n10 = if rest > 0.0 {
        binomial_draw(rng, n - n11, cells.p10 / rest)
    } else {
        0
    };
    let rest = cells.p01 + cells.p00;
    let n01 = if rest > 0.0 {
        binomial_draw(rng, n - n11 - n10, cells.p01 / rest)
    } else {
        0
    };
    ((n11 + n10) as usize, (n11 + n01) as usize)
}

/// Draws `(n_T, n_E)` by simulating each patient's latent normal pair and
/// thresholding at the marginal quantiles. Much slower than [`sample_arm`];
/// useful for checking the copula cells independently.
pub fn sample_arm_latent<R: Rng + ?Sized>(n: usize, law: &ArmLaw, rng: &mut R) -> (usize, usize) {
    let cut_t = std_normal_quantile(law.phi_t);
    let cut_e = std_normal_quantile(law.phi_e);
    let scale = (1.0 - law.rho * law.rho).sqrt();
    let (mut tox, mut eff) = (0, 0);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let x_e = law.rho * z1 + scale * z2;
        tox += usize::from(z1 <= cut_t);
        eff += usize::from(x_e <= cut_e);
    }
    (tox, eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    /// Enumerates all 4ⁿ outcome sequences.
    fn brute_force_tail(n: usize, m_t: usize, m_e: usize, cells: &CellProbs) -> f64 {
        let probs = cells.as_array();
        let mut total = 0.0;
        for code in 0..4usize.pow(n as u32) {
            let (mut c, mut t, mut e, mut p) = (code, 0, 0, 1.0);
            for _ in 0..n {
                let cell = c % 4;
                c /= 4;
                p *= probs[cell];
                t += cell >> 1;
                e += cell & 1;
            }
            if t <= m_t && e >= m_e {
                total += p;
            }
        }
        total
    }

    fn binom_pmf_naive(n: usize, k: usize, p: f64) -> f64 {
        let mut c = 1.0;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn independence_cells() {
        let c = cell_probabilities(0.2, 0.4, 0.0).unwrap();
        assert!((c.p11 - 0.08).abs() < 1e-15);
        assert!((c.p10 - 0.12).abs() < 1e-15);
        assert!((c.p01 - 0.32).abs() < 1e-15);
        assert!((c.p00 - 0.48).abs() < 1e-15);
    }

    #[test]
    fn symmetric_cells_at_half() {
        let c = cell_probabilities(0.5, 0.5, 0.5).unwrap();
        assert!((c.p11 - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn correlated_cells_match_quadrature() {
        // scipy dblquad of the latent density, epsabs 1e-14.
        let c = cell_probabilities(0.2, 0.4, 0.5).unwrap();
        assert!((c.p11 - 0.137_972_818_622_777_63).abs() < 1e-13);
        assert!((c.p10 - 0.062_027_181_377_222_38).abs() < 1e-13);
        assert!((c.p01 - 0.262_027_181_377_222_36).abs() < 1e-13);
        assert!((c.p00 - 0.537_972_818_622_777_7).abs() < 1e-13);
    }

    #[test]
    fn degenerate_marginals_rejected() {
        assert!(matches!(
            cell_probabilities(0.0, 0.4, 0.5),
            Err(MeritError::DegenerateMarginal { .. })
        ));
        assert!(cell_probabilities(0.2, 1.0, 0.5).is_err());
        assert!(matches!(
            cell_probabilities(0.2, 0.4, 1.0),
            Err(MeritError::Correlation(_))
        ));
    }

    #[test]
    fn joint_tail_trivial_cases() {
        let c = cell_probabilities(0.3, 0.6, 0.4).unwrap();
        assert!((joint_tail(1, 0, 1, &c).unwrap() - c.p01).abs() < 1e-15);
        assert!((joint_tail(10, 10, 0, &c).unwrap() - 1.0).abs() < 1e-13);
        assert!(joint_tail(10, 11, 0, &c).is_err());
        assert!(joint_tail(0, 0, 0, &c).is_err());
    }

    #[test]
    fn joint_tail_factorizes_under_independence() {
        let c = cell_probabilities(0.2, 0.4, 0.0).unwrap();
        let got = joint_tail(10, 3, 4, &c).unwrap();
        let brute = brute_force_tail(10, 3, 4, &c);
        let lower: f64 = (0..=3).map(|k| binom_pmf_naive(10, k, 0.2)).sum();
        let upper: f64 = (4..=10).map(|k| binom_pmf_naive(10, k, 0.4)).sum();
        assert!((got - brute).abs() < 1e-12);
        assert!((got - lower * upper).abs() < 1e-12);
    }

    #[test]
    fn joint_tail_matches_enumeration() {
        for (pt, pe, rho) in [(0.2, 0.4, 0.5), (0.4, 0.2, -0.3), (0.35, 0.55, 0.8)] {
            let c = cell_probabilities(pt, pe, rho).unwrap();
            for n in 1..=8 {
                let pmf = JointPmf::new(n, &c);
                let table = pmf.tail_table();
                for m_t in 0..=n {
                    for m_e in 0..=n {
                        let want = brute_force_tail(n, m_t, m_e, &c);
                        assert!((pmf.tail(m_t, m_e) - want).abs() < 1e-12);
                        assert!((table[m_t * (n + 1) + m_e] - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn marginal_tail_examples() {
        assert!((marginal_tails(5, 5, 0.3, TailSide::Lower).unwrap() - 1.0).abs() < 1e-15);
        assert!((marginal_tails(5, 0, 0.3, TailSide::Lower).unwrap() - 0.7f64.powi(5)).abs() < 1e-15);
        // scipy binom.sf(6, 20, 0.4)
        let up = marginal_tails(20, 7, 0.4, TailSide::Upper).unwrap();
        assert!((up - 0.749_989_328_062_177_7).abs() < 1e-12);
        let oracle: f64 = (7..=20).map(|k| binom_pmf_naive(20, k, 0.4)).sum();
        assert!((up - oracle).abs() < 1e-12);
        assert!(marginal_tails(5, 6, 0.3, TailSide::Lower).is_err());
    }

    #[test]
    fn sampler_edge_cases() {
        let mut rng = stream_rng(1, 0);
        let c = cell_probabilities(0.3, 0.5, 0.5).unwrap();
        assert_eq!(sample_arm(0, &c, &mut rng), (0, 0));
        let all = CellProbs::new(0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(sample_arm(17, &all, &mut rng), (17, 17));
    }

    #[test]
    fn sampler_cell_frequencies() {
        let c = cell_probabilities(0.2, 0.4, 0.5).unwrap();
        let mut rng = stream_rng(99, 3);
        let draws = 1_000_000;
        let mut counts = [0u64; 4];
        for _ in 0..draws {
            let (t, e) = sample_arm(1, &c, &mut rng);
            counts[2 * t + e] += 1;
        }
        for (cell, p) in c.as_array().iter().enumerate() {
            let freq = counts[cell] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "cell {cell}: {freq} vs {p}");
        }
    }

    #[test]
    fn latent_sampler_agrees_with_copula_cells() {
        let law = ArmLaw::new(0.2, 0.4, 0.5).unwrap();
        let mut rng = stream_rng(5, 5);
        let draws = 400_000;
        let mut both = 0u64;
        for _ in 0..draws {
            let (t, e) = sample_arm_latent(1, &law, &mut rng);
            both += (t * e) as u64;
        }
        let freq = both as f64 / draws as f64;
        let p = law.cells.p11;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "{freq} vs {p}");
    }

    #[test]
    fn sampled_acceptance_matches_joint_tail() {
        let c = cell_probabilities(0.25, 0.45, 0.5).unwrap();
        let (n, m_t, m_e) = (20, 6, 8);
        let exact = joint_tail(n, m_t, m_e, &c).unwrap();
        let mut rng = stream_rng(11, 0);
        let reps = 1_000_000;
        let mut hits = 0u64;
        for _ in 0..reps {
            let (t, e) = sample_arm(n, &c, &mut rng);
            hits += u64::from(t <= m_t && e >= m_e);
        }
        let freq = hits as f64 / reps as f64;
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((freq - exact).abs() < 3.0 * se, "{freq} vs {exact}");
    }

    proptest! {
        #[test]
        fn cells_are_a_valid_law(pt in 0.01f64..0.99, pe in 0.01f64..0.99, rho in -0.98f64..0.98) {
            let c = cell_probabilities(pt, pe, rho).unwrap();
            prop_assert!(c.as_array().iter().all(|p| *p >= 0.0));
            prop_assert!((c.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((c.toxicity_marginal() - pt).abs() < 1e-10);
            prop_assert!((c.efficacy_marginal() - pe).abs() < 1e-10);
        }

        #[test]
        fn independent_tail_is_product(
            pt in 0.05f64..0.95, pe in 0.05f64..0.95, n in 1usize..=30, a in 0.0f64..1.0, b in 0.0f64..1.0
        ) {
            let m_t = (a * n as f64) as usize;
            let m_e = (b * n as f64) as usize;
            let c = cell_probabilities(pt, pe, 0.0).unwrap();
            let joint = joint_tail(n, m_t, m_e, &c).unwrap();
            let lo = marginal_tails(n, m_t, pt, TailSide::Lower).unwrap();
            let up = marginal_tails(n, m_e, pe, TailSide::Upper).unwrap();
            prop_assert!((joint - lo * up).abs() < 1e-10);
        }

        #[test]
        fn tail_is_monotone_in_thresholds(
            pt in 0.05f64..0.95, pe in 0.05f64..0.95, rho in -0.9f64..0.9, n in 1usize..=25
        ) {
            let c = cell_probabilities(pt, pe, rho).unwrap();
            let pmf = JointPmf::new(n, &c);
            for m_t in 0..n {
                for m_e in 0..n {
                    let here = pmf.tail(m_t, m_e);
                    prop_assert!(pmf.tail(m_t + 1, m_e) >= here - 1e-15);
                    prop_assert!(pmf.tail(m_t, m_e + 1) <= here + 1e-15);
                }
            }
        }
    }
}
