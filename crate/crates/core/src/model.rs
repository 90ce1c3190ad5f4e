//! Market primitives: CP rates, linear revenue-share contracts, the ISP's
//! best-response effort, and the expected utilities that follow from them.
//!
//! Demand for CP `i` is `log(a_i + 1)` plus zero-mean noise, with any demand
//! scale folded into the rate `r_i`. All logarithms are natural.

use std::fmt;

use crate::error::{Error, Result};

/// Whether the ISP may differentiate its effort across CPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// One common effort level for every CP.
    Neutral,
    /// A separate effort level per CP.
    NonNeutral,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Neutral => write!(f, "neutral"),
            Regime::NonNeutral => write!(f, "nonneutral"),
        }
    }
}

/// The deterministic economy: per-CP revenue rates and the ISP's marginal
/// effort cost.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    rates: Vec<f64>,
    cost: f64,
}

impl MarketParams {
    pub fn new(rates: Vec<f64>, cost: f64) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParams("at least one CP is required".into()));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidParams(format!("rates must be positive and finite, got {r}")));
        }
        if !(cost.is_finite() && cost > 0.0) {
            return Err(Error::InvalidParams(format!("cost must be positive and finite, got {cost}")));
        }
        Ok(MarketParams { rates, cost })
    }

    /// `n` CPs sharing the same rate.
    pub fn symmetric(n: usize, rate: f64, cost: f64) -> Result<Self> {
        MarketParams::new(vec![rate; n], cost)
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn is_symmetric(&self) -> bool {
        self.rates.iter().all(|&r| r == self.rates[0])
    }

    pub(crate) fn expect_n(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(Error::Unsupported(format!(
                "this operation needs exactly {n} CPs, got {}",
                self.n()
            )));
        }
        Ok(())
    }
}

/// Revenue fractions `beta_i` handed to the ISP, one per CP.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    shares: Vec<f64>,
}

impl Contract {
    pub fn new(shares: Vec<f64>) -> Result<Self> {
        if let Some(b) = shares.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::InvalidParams(format!("shares must lie in [0, 1], got {b}")));
        }
        Ok(Contract { shares })
    }

    pub fn zeros(n: usize) -> Self {
        Contract { shares: vec![0.0; n] }
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    /// Copy of this contract with CP `index` deviating to `share`.
    pub fn with_share(&self, index: usize, share: f64) -> Result<Self> {
        let mut shares = self.shares.clone();
        match shares.get_mut(index) {
            Some(s) => *s = share,
            None => return Err(Error::LengthMismatch { expected: index + 1, got: self.len() }),
        }
        Contract::new(shares)
    }

    fn check_len(&self, params: &MarketParams) -> Result<()> {
        if self.len() != params.n() {
            return Err(Error::LengthMismatch { expected: params.n(), got: self.len() });
        }
        Ok(())
    }
}

/// ISP investment per CP under a given regime.
#[derive(Debug, Clone, PartialEq)]
pub struct EffortProfile {
    efforts: Vec<f64>,
    regime: Regime,
}

impl EffortProfile {
    pub fn new(efforts: Vec<f64>, regime: Regime) -> Result<Self> {
        if let Some(a) = efforts.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidParams(format!("efforts must be non-negative, got {a}")));
        }
        if regime == Regime::Neutral && efforts.iter().any(|&a| a != efforts[0]) {
            return Err(Error::InvalidParams("neutral efforts must all be equal".into()));
        }
        Ok(EffortProfile { efforts, regime })
    }

    pub fn efforts(&self) -> &[f64] {
        &self.efforts
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn total(&self) -> f64 {
        self.efforts.iter().sum()
    }
}

/// Expected utilities of every party at a (contract, effort) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Utilities {
    pub cp: Vec<f64>,
    /// Expected net ISP revenue: shared revenue minus effort cost.
    pub isp_net: f64,
    pub social: f64,
}

impl Utilities {
    pub(crate) fn from_parts(cp: Vec<f64>, isp_net: f64) -> Self {
        let social = cp.iter().sum::<f64>() + isp_net;
        Utilities { cp, isp_net, social }
    }

    pub fn zeros(n: usize) -> Self {
        Utilities { cp: vec![0.0; n], isp_net: 0.0, social: 0.0 }
    }
}

/// CARA risk parameters for the two-CP noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub z: f64,
    pub sigma: [f64; 2],
    pub rho: f64,
    /// Reserve utility `H`; the equilibrium machinery assumes `-1`.
    pub reserve: f64,
}

impl NoiseModel {
    pub fn new(z: f64, sigma: [f64; 2], rho: f64, reserve: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidParams(format!("risk aversion z must be positive, got {z}")));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParams(format!("sigma must be non-negative, got {sigma:?}")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParams(format!("correlation must lie in [-1, 1], got {rho}")));
        }
        if !(-1.0..=0.0).contains(&reserve) {
            return Err(Error::InvalidParams(format!("reserve must lie in [-1, 0], got {reserve}")));
        }
        Ok(NoiseModel { z, sigma, rho, reserve })
    }

    /// Noise model with the default reserve utility `-1`.
    pub fn with_default_reserve(z: f64, sigma: [f64; 2], rho: f64) -> Result<Self> {
        NoiseModel::new(z, sigma, rho, -1.0)
    }

    /// Reserve in certainty-equivalent units, `-log(-H)`.
    pub fn reserve_ce(&self) -> f64 {
        -(-self.reserve).ln()
    }

    /// Variance of the ISP's shared revenue, `(b r s)' K (b r s)`.
    pub fn revenue_variance(&self, params: &MarketParams, contract: &Contract) -> f64 {
        let r = params.rates();
        let b = contract.shares();
        let x1 = b[0] * r[0] * self.sigma[0];
        let x2 = b[1] * r[1] * self.sigma[1];
        x1 * x1 + x2 * x2 + 2.0 * self.rho * x1 * x2
    }
}

/// ISP best-response efforts to a contract.
///
/// Non-neutral: `a_i = max(beta_i r_i / c - 1, 0)` per CP. Neutral: one
/// common `a = max(sum beta_i r_i / (n c) - 1, 0)`.
pub fn best_effort(params: &MarketParams, contract: &Contract, regime: Regime) -> Result<EffortProfile> {
    contract.check_len(params)?;
    let c = params.cost();
    let efforts = match regime {
        Regime::NonNeutral => params
            .rates()
            .iter()
            .zip(contract.shares())
            .map(|(r, b)| (b * r / c - 1.0).max(0.0))
            .collect(),
        Regime::Neutral => {
            let n = params.n() as f64;
            let pooled: f64 = params.rates().iter().zip(contract.shares()).map(|(r, b)| b * r).sum();
            vec![(pooled / (n * c) - 1.0).max(0.0); params.n()]
        }
    };
    Ok(EffortProfile { efforts, regime })
}

/// Expected CP utilities `(1 - beta_i) r_i log(a_i + 1)`, net ISP revenue,
/// and their sum.
pub fn expected_utilities(params: &MarketParams, contract: &Contract, efforts: &EffortProfile) -> Result<Utilities> {
    contract.check_len(params)?;
    if efforts.efforts.len() != params.n() {
        return Err(Error::LengthMismatch { expected: params.n(), got: efforts.efforts.len() });
    }
    let c = params.cost();
    let mut cp = Vec::with_capacity(params.n());
    let mut isp_net = 0.0;
    for ((r, b), a) in params.rates().iter().zip(contract.shares()).zip(&efforts.efforts) {
        let demand = a.ln_1p();
        cp.push((1.0 - b) * r * demand);
        isp_net += b * r * demand - c * a;
    }
    Ok(Utilities::from_parts(cp, isp_net))
}

/// Closed-form CARA expected utility of the ISP for two CPs with jointly
/// Gaussian demand noise.
pub fn cara_isp_utility(
    params: &MarketParams,
    noise: &NoiseModel,
    contract: &Contract,
    efforts: &EffortProfile,
) -> Result<f64> {
    params.expect_n(2)?;
    let mean = expected_utilities(params, contract, efforts)?.isp_net;
    let z = noise.z;
    Ok(-(-z * mean + 0.5 * z * z * noise.revenue_variance(params, contract)).exp())
}

/// Participation check: certainty equivalent of the ISP against the reserve.
///
/// With the default reserve of `-1` this holds at every best response, since
/// the ISP can always pick zero effort.
pub fn participation_holds(
    params: &MarketParams,
    noise: &NoiseModel,
    contract: &Contract,
    efforts: &EffortProfile,
) -> Result<bool> {
    params.expect_n(2)?;
    let mean = expected_utilities(params, contract, efforts)?.isp_net;
    let ce = mean - 0.5 * noise.z * noise.revenue_variance(params, contract);
    Ok(ce >= noise.reserve_ce())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn p(rates: &[f64], c: f64) -> MarketParams {
        MarketParams::new(rates.to_vec(), c).unwrap()
    }

    fn k(shares: &[f64]) -> Contract {
        Contract::new(shares.to_vec()).unwrap()
    }

    #[test]
    fn effort_examples() {
        let a = best_effort(&p(&[5.0, 5.0], 1.0), &k(&[0.0, 0.0]), Regime::NonNeutral).unwrap();
        assert_eq!(a.efforts(), &[0.0, 0.0]);

        let a = best_effort(&p(&[2.0 * E], 1.0), &k(&[0.5]), Regime::NonNeutral).unwrap();
        assert!((a.efforts()[0] - (E - 1.0)).abs() < 1e-15);

        let a = best_effort(&p(&[4.0, 2.0], 1.0), &k(&[0.5, 0.5]), Regime::Neutral).unwrap();
        assert_eq!(a.efforts(), &[0.5, 0.5]);
    }

    #[test]
    fn shape_and_range_checks() {
        assert!(matches!(
            best_effort(&p(&[1.0, 2.0], 1.0), &k(&[0.1]), Regime::Neutral),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(Contract::new(vec![1.2]).is_err());
        assert!(MarketParams::new(vec![], 1.0).is_err());
        assert!(MarketParams::new(vec![1.0], 0.0).is_err());
        assert!(MarketParams::new(vec![-1.0], 1.0).is_err());
        assert!(EffortProfile::new(vec![1.0, 2.0], Regime::Neutral).is_err());
        assert!(NoiseModel::new(0.5, [1.0, 1.0], 1.5, -1.0).is_err());
        assert!(NoiseModel::new(0.0, [1.0, 1.0], 0.0, -1.0).is_err());
    }

    #[test]
    fn utility_examples() {
        let params = p(&[3.0, 7.0], 1.3);
        let zero = k(&[0.0, 0.0]);
        let a = best_effort(&params, &zero, Regime::NonNeutral).unwrap();
        let u = expected_utilities(&params, &zero, &a).unwrap();
        assert_eq!(u, Utilities::zeros(2));

        let params = p(&[2.0 * E], 1.0);
        let half = k(&[0.5]);
        let a = best_effort(&params, &half, Regime::NonNeutral).unwrap();
        let u = expected_utilities(&params, &half, &a).unwrap();
        assert!((u.cp[0] - E).abs() < 1e-14);
        assert!((u.isp_net - 1.0).abs() < 1e-14);
        assert!((u.social - (E + 1.0)).abs() < 1e-14);
        // surplus identity (1-b)^2/b * r at the non-neutral optimum
        assert!((u.cp[0] - 0.25 / 0.5 * 2.0 * E).abs() < 1e-14);

        let r = 2.0 * E.sqrt();
        let params = p(&[r, r], 1.0);
        let half = k(&[0.5, 0.5]);
        let a = best_effort(&params, &half, Regime::Neutral).unwrap();
        assert!((a.efforts()[0] - (E.sqrt() - 1.0)).abs() < 1e-15);
        let u = expected_utilities(&params, &half, &a).unwrap();
        assert!((u.cp[0] - 0.8244).abs() < 1e-4);
        assert!((u.cp[1] - 0.25 / (2.0 * 0.5) * r).abs() < 1e-14);
    }

    #[test]
    fn cara_examples() {
        let params = p(&[4.0, 2.0], 1.0);
        let noise = NoiseModel::with_default_reserve(0.5, [1.0, 1.0], 0.3).unwrap();
        let zero = k(&[0.0, 0.0]);
        let a = best_effort(&params, &zero, Regime::NonNeutral).unwrap();
        assert_eq!(cara_isp_utility(&params, &noise, &zero, &a).unwrap(), -1.0);

        let quiet = NoiseModel::with_default_reserve(0.5, [0.0, 0.0], 0.9).unwrap();
        let half = k(&[0.5, 0.5]);
        let a = best_effort(&params, &half, Regime::NonNeutral).unwrap();
        let u = expected_utilities(&params, &half, &a).unwrap();
        let cara = cara_isp_utility(&params, &quiet, &half, &a).unwrap();
        assert!((cara + (-0.5 * u.isp_net).exp()).abs() < 1e-12);
        assert!(cara < 0.0);

        assert!(cara_isp_utility(&p(&[1.0, 2.0, 3.0], 1.0), &noise, &k(&[0.0; 3]), &a).is_err());
    }

    #[test]
    fn participation_with_default_reserve() {
        let params = p(&[4.0, 2.0], 1.0);
        let noise = NoiseModel::with_default_reserve(0.5, [0.0, 0.0], 0.0).unwrap();
        assert_eq!(noise.reserve_ce(), 0.0);
        let half = k(&[0.5, 0.5]);
        let a = best_effort(&params, &half, Regime::NonNeutral).unwrap();
        assert!(participation_holds(&params, &noise, &half, &a).unwrap());
    }

    proptest! {
        #[test]
        fn scale_covariance(
            r1 in 0.1f64..50.0, r2 in 0.1f64..50.0, c in 0.1f64..5.0,
            b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0, lambda in 0.1f64..10.0,
            neutral in any::<bool>(),
        ) {
            let regime = if neutral { Regime::Neutral } else { Regime::NonNeutral };
            let contract = k(&[b1, b2]);
            let base = p(&[r1, r2], c);
            let scaled = p(&[lambda * r1, lambda * r2], lambda * c);
            let a = best_effort(&base, &contract, regime).unwrap();
            let a_s = best_effort(&scaled, &contract, regime).unwrap();
            for (x, y) in a.efforts().iter().zip(a_s.efforts()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
            let u = expected_utilities(&base, &contract, &a).unwrap();
            let u_s = expected_utilities(&scaled, &contract, &a_s).unwrap();
            let tol = 1e-10 * lambda * (1.0 + u.social.abs() + r1 + r2);
            prop_assert!((u_s.isp_net - lambda * u.isp_net).abs() <= tol);
            prop_assert!((u_s.social - lambda * u.social).abs() <= tol);
            for (x, y) in u.cp.iter().zip(&u_s.cp) {
                prop_assert!((y - lambda * x).abs() <= tol);
            }
        }

        #[test]
        fn neutral_efforts_equal_and_social_is_sum(
            rates in proptest::collection::vec(0.1f64..30.0, 1..6),
            c in 0.1f64..5.0,
            seed in proptest::collection::vec(0.0f64..=1.0, 6),
        ) {
            let params = p(&rates, c);
            let contract = k(&seed[..rates.len()]);
            let a = best_effort(&params, &contract, Regime::Neutral).unwrap();
            prop_assert!(a.efforts().iter().all(|&x| x == a.efforts()[0]));
            let u = expected_utilities(&params, &contract, &a).unwrap();
            let sum: f64 = u.cp.iter().sum::<f64>() + u.isp_net;
            prop_assert!((u.social - sum).abs() <= 1e-12 * (1.0 + sum.abs()));
        }

        #[test]
        fn cara_without_noise_is_deterministic_exponential(
            r1 in 0.1f64..20.0, r2 in 0.1f64..20.0, c in 0.1f64..3.0,
            b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0, z in 0.01f64..2.0, rho in -1.0f64..=1.0,
        ) {
            let params = p(&[r1, r2], c);
            let contract = k(&[b1, b2]);
            let noise = NoiseModel::with_default_reserve(z, [0.0, 0.0], rho).unwrap();
            let a = best_effort(&params, &contract, Regime::NonNeutral).unwrap();
            let u = expected_utilities(&params, &contract, &a).unwrap();
            let cara = cara_isp_utility(&params, &noise, &contract, &a).unwrap();
            let expect = -(-z * u.isp_net).exp();
            prop_assert!((cara - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }
}
