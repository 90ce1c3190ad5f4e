//! Nash bargaining between two CPs over their revenue shares, with the ISP
//! responding under the neutral regime.
//!
//! With zero disagreement utilities the solution has a closed form; any other
//! disagreement point (in particular the non-cooperative equilibrium) goes
//! through the grid-and-refine solver.

use std::f64::consts::E;
use std::fmt;

use crate::equilibria::{neutral_equilibrium, nonneutral_equilibrium};
use crate::error::{Error, Result};
use crate::model::{best_effort, expected_utilities, Contract, MarketParams, Regime, Utilities};
use crate::numerics::{golden_section_max, lambert_w0};

pub const DEFAULT_GRID_STEP: f64 = 2e-3;
const REFINE_TOL: f64 = 1e-10;
const REFINE_MAX_CYCLES: usize = 5_000;

/// Where the disagreement utilities come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisagreementPoint {
    Zero,
    /// Utilities of the non-cooperative equilibrium in the given regime.
    Equilibrium(Regime),
    Fixed([f64; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainingProblem {
    params: MarketParams,
    disagreement: [f64; 2],
    /// Contract played if bargaining fails.
    fallback: Contract,
}

impl BargainingProblem {
    pub fn new(params: MarketParams, disagreement: [f64; 2]) -> Result<Self> {
        params.expect_n(2)?;
        if disagreement.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "disagreement utilities must be finite and non-negative, got {disagreement:?}"
            )));
        }
        Ok(BargainingProblem { params, disagreement, fallback: Contract::zeros(2) })
    }

    pub fn zero(params: MarketParams) -> Result<Self> {
        BargainingProblem::new(params, [0.0, 0.0])
    }

    /// Disagreement at the non-cooperative equilibrium of `regime`.
    pub fn at_equilibrium(params: MarketParams, regime: Regime) -> Result<Self> {
        params.expect_n(2)?;
        let eq = match regime {
            Regime::Neutral => neutral_equilibrium(&params)?,
            Regime::NonNeutral => nonneutral_equilibrium(&params)?,
        };
        let d = [eq.utilities.cp[0].max(0.0), eq.utilities.cp[1].max(0.0)];
        let mut problem = BargainingProblem::new(params, d)?;
        problem.fallback = eq.contract;
        Ok(problem)
    }

    pub fn from_point(params: MarketParams, point: DisagreementPoint) -> Result<Self> {
        match point {
            DisagreementPoint::Zero => BargainingProblem::zero(params),
            DisagreementPoint::Equilibrium(regime) => BargainingProblem::at_equilibrium(params, regime),
            DisagreementPoint::Fixed(d) => BargainingProblem::new(params, d),
        }
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn disagreement(&self) -> [f64; 2] {
        self.disagreement
    }

    pub fn fallback(&self) -> &Contract {
        &self.fallback
    }

    /// Indices of the higher- and lower-rate CP (ties keep caller order).
    fn sorted(&self) -> (usize, usize) {
        let r = self.params.rates();
        if r[1] > r[0] {
            (1, 0)
        } else {
            (0, 1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BargainingCase {
    Interior,
    /// The lower-rate CP shares nothing.
    CornerCp2Zero,
    DisagreementReturned,
}

impl fmt::Display for BargainingCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BargainingCase::Interior => "interior",
            BargainingCase::CornerCp2Zero => "corner_cp2_zero",
            BargainingCase::DisagreementReturned => "disagreement_returned",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainingOutcome {
    pub contract: Contract,
    /// Utilities under neutral ISP efforts.
    pub utilities: Utilities,
    pub nash_product: f64,
    pub case_tag: BargainingCase,
    /// The closed form left `[0, 1]` and the zero contract was substituted.
    pub clamped: bool,
}

/// Neutral-regime utilities at a two-CP contract.
pub(crate) fn neutral_utilities(params: &MarketParams, contract: &Contract) -> Result<Utilities> {
    let efforts = best_effort(params, contract, Regime::Neutral)?;
    expected_utilities(params, contract, &efforts)
}

/// `(U_1 - d_1)(U_2 - d_2)` at `contract`; negative when exactly one CP
/// falls below its disagreement utility.
pub fn nash_product(problem: &BargainingProblem, contract: &Contract) -> Result<f64> {
    let u = neutral_utilities(&problem.params, contract)?;
    let d = problem.disagreement;
    Ok((u.cp[0] - d[0]) * (u.cp[1] - d[1]))
}

fn outcome_at(problem: &BargainingProblem, contract: Contract, case_tag: BargainingCase) -> Result<BargainingOutcome> {
    let utilities = neutral_utilities(&problem.params, &contract)?;
    let nash_product = nash_product(problem, &contract)?;
    Ok(BargainingOutcome { contract, utilities, nash_product, case_tag, clamped: false })
}

fn disagreement_outcome(problem: &BargainingProblem) -> Result<BargainingOutcome> {
    let isp_net = neutral_utilities(&problem.params, &problem.fallback)?.isp_net;
    Ok(BargainingOutcome {
        contract: problem.fallback.clone(),
        utilities: Utilities::from_parts(problem.disagreement.to_vec(), isp_net),
        nash_product: 0.0,
        case_tag: BargainingCase::DisagreementReturned,
        clamped: false,
    })
}

/// Closed-form bargaining solution for zero disagreement utilities.
///
/// Equal rates give `1 / W((r/c) e)` to both CPs. Otherwise, with `r1 > r2`,
/// the solution is interior iff `(r1 + r2)/(r1 - r2) > W((r1 + r2) e / (2c))`
/// and is `(2 / W((r1/c) e^2), 0)` otherwise.
pub fn nbs_closed_form(problem: &BargainingProblem) -> Result<BargainingOutcome> {
    if problem.disagreement != [0.0, 0.0] {
        return Err(Error::Unsupported(
            "closed-form bargaining needs zero disagreement utilities; use the numeric solver".into(),
        ));
    }
    let c = problem.params.cost();
    let rates = problem.params.rates();
    let (hi, lo) = problem.sorted();
    let (r1, r2) = (rates[hi], rates[lo]);

    if r1 == r2 {
        if r1 / c <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "symmetric bargaining needs r/c > 1, got r={r1}, c={c}"
            )));
        }
        let share = 1.0 / lambert_w0(r1 / c * E)?;
        return outcome_at(problem, Contract::new(vec![share, share])?, BargainingCase::Interior);
    }

    let sum = r1 + r2;
    let w = lambert_w0(sum * E / (2.0 * c))?;
    let mut shares = [0.0; 2];
    let case_tag = if sum / (r1 - r2) > w {
        shares[hi] = sum / (2.0 * r1 * w) - (r2 - r1) / (2.0 * r1);
        shares[lo] = sum / (2.0 * r2 * w) - (r1 - r2) / (2.0 * r2);
        BargainingCase::Interior
    } else {
        shares[hi] = 2.0 / lambert_w0(r1 / c * E * E)?;
        BargainingCase::CornerCp2Zero
    };

    // Both forms need the pooled effort term log(S / 2c) to be positive,
    // which fails when the rates are too small relative to c.
    let pooled = shares[hi] * r1 + shares[lo] * r2;
    let in_range = shares.iter().all(|b| (0.0..=1.0).contains(b)) && pooled > 2.0 * c;
    if !in_range {
        let mut out = disagreement_outcome(problem)?;
        out.clamped = true;
        return Ok(out);
    }
    outcome_at(problem, Contract::new(shares.to_vec())?, case_tag)
}

/// Nash product restricted to the feasible set: `None` when a CP falls below
/// its disagreement utility.
fn feasible_product(problem: &BargainingProblem, b1: f64, b2: f64) -> Option<f64> {
    let contract = Contract::new(vec![b1, b2]).ok()?;
    let u = neutral_utilities(&problem.params, &contract).ok()?;
    let g1 = u.cp[0] - problem.disagreement[0];
    let g2 = u.cp[1] - problem.disagreement[1];
    (g1 >= 0.0 && g2 >= 0.0).then_some(g1 * g2)
}

/// Numerical bargaining solution for any disagreement point.
///
/// Scans the `(beta_1, beta_2)` grid at `DEFAULT_GRID_STEP` (lexicographically
/// first maximizer wins ties), then refines coordinate-wise by golden section.
pub fn nbs_numeric(problem: &BargainingProblem) -> Result<BargainingOutcome> {
    let steps = (1.0 / DEFAULT_GRID_STEP).round() as usize;
    let mut best: Option<([f64; 2], f64)> = None;
    for i in 0..=steps {
        let b1 = (i as f64 * DEFAULT_GRID_STEP).min(1.0);
        for j in 0..=steps {
            let b2 = (j as f64 * DEFAULT_GRID_STEP).min(1.0);
            if let Some(v) = feasible_product(problem, b1, b2) {
                if v > 0.0 && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some(([b1, b2], v));
                }
            }
        }
    }
    let Some((start, start_val)) = best else {
        return disagreement_outcome(problem);
    };

    let x = refine(
        |b1, b2| feasible_product(problem, b1, b2).unwrap_or(-1.0),
        start,
        start_val,
        DEFAULT_GRID_STEP,
    );
    let (_, lo) = problem.sorted();
    let case_tag = if x[lo] == 0.0 { BargainingCase::CornerCp2Zero } else { BargainingCase::Interior };
    outcome_at(problem, Contract::new(x.to_vec())?, case_tag)
}

/// Coordinate-wise golden-section ascent on `[0, 1]^2` starting from a grid
/// point; the search window tracks the size of the last move.
pub(crate) fn refine<F>(f: F, start: [f64; 2], start_val: f64, step: f64) -> [f64; 2]
where
    F: Fn(f64, f64) -> f64,
{
    let mut x = start;
    let mut val = start_val;
    let mut half_width = step;
    for _ in 0..REFINE_MAX_CYCLES {
        let prev = x;
        for coord in 0..2 {
            let lo = (x[coord] - half_width).max(0.0);
            let hi = (x[coord] + half_width).min(1.0);
            let probe = |t: f64| {
                let mut y = x;
                y[coord] = t;
                f(y[0], y[1])
            };
            let (t, v) = golden_section_max(probe, lo, hi, REFINE_TOL);
            if v > val {
                x[coord] = t;
                val = v;
            }
        }
        let moved = (x[0] - prev[0]).abs().max((x[1] - prev[1]).abs());
        if moved < REFINE_TOL {
            break;
        }
        half_width = (4.0 * moved).clamp(1e-8, step);
    }
    x
}
