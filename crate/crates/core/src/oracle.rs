//! Brute-force checks that rely only on the model primitives: exhaustive
//! best responses, equilibrium certification, grid Nash bargaining, and a
//! Monte Carlo estimate of the CARA utility.
//!
//! Nothing here calls into `equilibria`, `bargaining` or `regulator`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bargaining::{BargainingCase, BargainingOutcome, BargainingProblem};
use crate::error::{Error, Result};
use crate::model::{best_effort, expected_utilities, Contract, EffortProfile, MarketParams, NoiseModel, Regime, Utilities};
use crate::numerics::golden_section_max;

pub const DEFAULT_STEP_1D: f64 = 1e-4;
pub const DEFAULT_STEP_2D: f64 = 2e-3;

fn check_step(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(Error::InvalidParams(format!("grid step must lie in (0, 0.01], got {step}")));
    }
    Ok((1.0 / step).round() as usize)
}

fn grid_point(k: usize, step: f64) -> f64 {
    (k as f64 * step).min(1.0)
}

fn utilities_at(params: &MarketParams, contract: &Contract, regime: Regime) -> Result<Utilities> {
    let efforts = best_effort(params, contract, regime)?;
    expected_utilities(params, contract, &efforts)
}

/// Result of a one-dimensional best-response scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub share: f64,
    pub utility: f64,
    /// Largest utility change per unit share between the argmax and its grid
    /// neighbours.
    pub local_lipschitz: f64,
}

/// Scan CP `cp_index`'s share over `{0, step, ..., 1}` with every other share
/// held at its value in `contract`. Ties go to the smaller share.
pub fn grid_best_response(
    params: &MarketParams,
    regime: Regime,
    cp_index: usize,
    contract: &Contract,
    step: f64,
) -> Result<BestResponse> {
    let steps = check_step(step)?;
    if cp_index >= params.n() {
        return Err(Error::InvalidParams(format!("CP index {cp_index} out of range")));
    }
    let utility = |b: f64| -> Result<f64> {
        Ok(utilities_at(params, &contract.with_share(cp_index, b)?, regime)?.cp[cp_index])
    };
    let mut values = Vec::with_capacity(steps + 1);
    let mut best_k = 0;
    for k in 0..=steps {
        let v = utility(grid_point(k, step))?;
        if v > values.get(best_k).copied().unwrap_or(f64::NEG_INFINITY) {
            best_k = k;
        }
        values.push(v);
    }
    let best = values[best_k];
    let mut lipschitz: f64 = 0.0;
    for nb in [best_k.checked_sub(1), Some(best_k + 1)].into_iter().flatten() {
        if let Some(v) = values.get(nb) {
            lipschitz = lipschitz.max((best - v).abs() / step);
        }
    }
    Ok(BestResponse { share: grid_point(best_k, step), utility: best, local_lipschitz: lipschitz })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Largest utility gain any single CP gets by deviating on the grid.
    pub max_unilateral_gain: f64,
    pub per_cp_best_response: Vec<f64>,
    pub per_cp_gain: Vec<f64>,
    pub grid_step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Certify that no CP can gain more than `tol` by a unilateral grid deviation.
pub fn verify_equilibrium(
    params: &MarketParams,
    regime: Regime,
    contract: &Contract,
    step: f64,
    tol: f64,
) -> Result<VerificationReport> {
    if contract.len() != params.n() {
        return Err(Error::LengthMismatch { expected: params.n(), got: contract.len() });
    }
    let at_contract = utilities_at(params, contract, regime)?;
    let mut per_cp_best_response = Vec::with_capacity(params.n());
    let mut per_cp_gain = Vec::with_capacity(params.n());
    for i in 0..params.n() {
        let br = grid_best_response(params, regime, i, contract, step)?;
        per_cp_best_response.push(br.share);
        per_cp_gain.push((br.utility - at_contract.cp[i]).max(0.0));
    }
    let max_unilateral_gain = per_cp_gain.iter().cloned().fold(0.0, f64::max);
    Ok(VerificationReport {
        passed: max_unilateral_gain <= tol,
        max_unilateral_gain,
        per_cp_best_response,
        per_cp_gain,
        grid_step: step,
        tolerance: tol,
    })
}

/// Exhaustive Nash-bargaining search over the `(beta_1, beta_2)` grid under
/// neutral efforts, followed by coordinate golden-section refinement.
pub fn grid_nbs(problem: &BargainingProblem, step: f64) -> Result<BargainingOutcome> {
    let steps = check_step(step)?;
    let params = problem.params();
    let d = problem.disagreement();
    let gains = |b1: f64, b2: f64| -> Option<(f64, f64)> {
        let contract = Contract::new(vec![b1, b2]).ok()?;
        let u = utilities_at(params, &contract, Regime::Neutral).ok()?;
        Some((u.cp[0] - d[0], u.cp[1] - d[1]))
    };
    let objective = |b1: f64, b2: f64| match gains(b1, b2) {
        Some((g1, g2)) if g1 >= 0.0 && g2 >= 0.0 => g1 * g2,
        _ => -1.0,
    };

    let mut best: Option<([f64; 2], f64)> = None;
    for i in 0..=steps {
        for j in 0..=steps {
            let (b1, b2) = (grid_point(i, step), grid_point(j, step));
            if let Some((g1, g2)) = gains(b1, b2) {
                let v = g1 * g2;
                if g1 > 0.0 && g2 > 0.0 && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some(([b1, b2], v));
                }
            }
        }
    }

    let Some((mut x, mut val)) = best else {
        let fallback = problem.fallback().clone();
        let isp_net = utilities_at(params, &fallback, Regime::Neutral)?.isp_net;
        let cp = d.to_vec();
        let social = cp.iter().sum::<f64>() + isp_net;
        return Ok(BargainingOutcome {
            contract: fallback,
            utilities: Utilities { cp, isp_net, social },
            nash_product: 0.0,
            case_tag: BargainingCase::DisagreementReturned,
            clamped: false,
        });
    };

    // Alternate one-dimensional golden-section searches around the grid
    // maximizer until neither coordinate moves.
    let mut width = step;
    for _ in 0..10_000 {
        let prev = x;
        for coord in 0..2 {
            let probe = |t: f64| {
                let mut y = x;
                y[coord] = t;
                objective(y[0], y[1])
            };
            let (t, v) = golden_section_max(probe, (x[coord] - width).max(0.0), (x[coord] + width).min(1.0), 1e-11);
            if v > val {
                x[coord] = t;
                val = v;
            }
        }
        let moved = (x[0] - prev[0]).abs().max((x[1] - prev[1]).abs());
        if moved < 1e-11 {
            break;
        }
        width = (4.0 * moved).clamp(1e-9, step);
    }

    let contract = Contract::new(x.to_vec())?;
    let utilities = utilities_at(params, &contract, Regime::Neutral)?;
    let weaker = if params.rates()[1] > params.rates()[0] { 0 } else { 1 };
    Ok(BargainingOutcome {
        nash_product: (utilities.cp[0] - d[0]) * (utilities.cp[1] - d[1]),
        case_tag: if x[weaker] == 0.0 { BargainingCase::CornerCp2Zero } else { BargainingCase::Interior },
        contract,
        utilities,
        clamped: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

pub const MIN_MC_SAMPLES: usize = 10_000;
const MC_SUBSTREAM: usize = 1 << 16;

/// Monte Carlo estimate of `E[-exp(-z W)]` for the ISP's realized wealth
/// `W = sum_i [beta_i r_i (log(a_i + 1) + eps_i) - c a_i]` with
/// `eps ~ N(0, K)`.
///
/// Normals come from ChaCha8 streams through the ziggurat sampler in
/// `rand_distr`. The sample count is split into blocks of 65536, each drawn
/// from its own ChaCha stream (`set_stream(block)`) under the master seed, so
/// blocks can be evaluated independently. Mean and variance are accumulated
/// with Welford's update.
pub fn mc_cara(
    params: &MarketParams,
    noise: &NoiseModel,
    contract: &Contract,
    efforts: &EffortProfile,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    params.expect_n(2)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidParams(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}")));
    }
    let one_minus_rho2 = 1.0 - noise.rho * noise.rho;
    if one_minus_rho2 < 0.0 {
        return Err(Error::InvalidParams("covariance matrix is not positive semidefinite".into()));
    }
    if contract.len() != 2 || efforts.efforts().len() != 2 {
        return Err(Error::LengthMismatch { expected: 2, got: contract.len().min(efforts.efforts().len()) });
    }

    // Cholesky factor of K
    let [s1, s2] = noise.sigma;
    let l11 = s1;
    let l21 = noise.rho * s2;
    let l22 = s2 * one_minus_rho2.sqrt();

    let r = params.rates();
    let b = contract.shares();
    let a = efforts.efforts();
    let c = params.cost();
    let base: f64 = (0..2).map(|i| b[i] * r[i] * a[i].ln_1p() - c * a[i]).sum();
    let (w1, w2) = (b[0] * r[0], b[1] * r[1]);
    let z = noise.z;

    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0usize;
    let mut block = 0u64;
    while count < samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let todo = (samples - count).min(MC_SUBSTREAM);
        for _ in 0..todo {
            let u1: f64 = rng.sample(StandardNormal);
            let u2: f64 = rng.sample(StandardNormal);
            let e1 = l11 * u1;
            let e2 = l21 * u1 + l22 * u2;
            let wealth = base + w1 * e1 + w2 * e2;
            let x = -(-z * wealth).exp();
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        block += 1;
    }
    let variance = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    Ok(McEstimate { estimate: mean, stderr: (variance / count as f64).sqrt(), samples: count })
}
