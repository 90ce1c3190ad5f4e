//! Taxes on CP revenue chosen by an authority to make the ISP's non-neutral
//! efforts equal across CPs.
//!
//! A tax `t_i` scales CP `i`'s revenue rate to `r_i (1 - t_i)` for both the
//! CP and the ISP, so the taxed game is the non-neutral game at the effective
//! rates.

use std::f64::consts::E;
use std::fmt;

use crate::equilibria::{nonneutral_equilibrium, EquilibriumReport};
use crate::error::{Error, Result};
use crate::model::MarketParams;
use crate::numerics::{find_root, lambert_w0, Bracket};

#[derive(Debug, Clone, PartialEq)]
pub struct TaxPolicy {
    taxes: Vec<f64>,
}

impl TaxPolicy {
    pub fn new(taxes: Vec<f64>) -> Result<Self> {
        if let Some(t) = taxes.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::InvalidParams(format!("taxes must lie in [0, 1), got {t}")));
        }
        Ok(TaxPolicy { taxes })
    }

    pub fn none(n: usize) -> Self {
        TaxPolicy { taxes: vec![0.0; n] }
    }

    pub fn taxes(&self) -> &[f64] {
        &self.taxes
    }
}

fn effective_params(params: &MarketParams, taxes: &TaxPolicy) -> Result<MarketParams> {
    if taxes.taxes.len() != params.n() {
        return Err(Error::LengthMismatch { expected: params.n(), got: taxes.taxes.len() });
    }
    let rates = params.rates().iter().zip(&taxes.taxes).map(|(r, t)| r * (1.0 - t)).collect();
    MarketParams::new(rates, params.cost())
}

/// Non-neutral equilibrium after taxation.
///
/// CP `i` shares nothing when `r_i (1 - t_i) <= c` and `1 / W(r_i (1 - t_i) e / c)`
/// otherwise. Utilities are reported net of tax.
pub fn taxed_equilibrium(params: &MarketParams, taxes: &TaxPolicy) -> Result<EquilibriumReport> {
    params.expect_n(2)?;
    nonneutral_equilibrium(&effective_params(params, taxes)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaxMode {
    /// Tax the dominant CP down to the other CP's rate.
    EqualEffectiveRate,
    /// Solve `exp(W(r_2 (1-t_2) e/c) - W(r_1 (1-t_1) e/c)) = r_2 / r_1`.
    PaperCondition,
}

impl fmt::Display for TaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaxMode::EqualEffectiveRate => f.write_str("equal_effective_rate"),
            TaxMode::PaperCondition => f.write_str("paper_condition"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaxOutcome {
    pub mode: TaxMode,
    pub policy: TaxPolicy,
    /// Index (caller order) of the CP carrying the tax, if any.
    pub taxed_cp: Option<usize>,
    pub equilibrium: EquilibriumReport,
    /// `|a_1 - a_2|` at the taxed equilibrium.
    pub effort_gap: f64,
}

/// Two-CP tax that neutralizes the ISP's effort split, with one CP untaxed.
///
/// `EqualEffectiveRate` sets `t_1 = 1 - r_2 / r_1` on the dominant CP.
/// `PaperCondition` solves the exponential-W condition; taxing the dominant
/// CP never satisfies it for `r_1 > r_2` (the left side only moves away), so
/// the weaker CP is taxed when the dominant-CP bracket has no sign change.
pub fn neutralizing_tax(params: &MarketParams, mode: TaxMode) -> Result<TaxOutcome> {
    params.expect_n(2)?;
    let rates = params.rates();
    let c = params.cost();
    let (hi, lo) = if rates[1] > rates[0] { (1, 0) } else { (0, 1) };
    let (r1, r2) = (rates[hi], rates[lo]);

    let mut taxes = vec![0.0; 2];
    let mut taxed_cp = None;
    if r1 != r2 {
        match mode {
            TaxMode::EqualEffectiveRate => {
                taxes[hi] = 1.0 - r2 / r1;
                taxed_cp = Some(hi);
            }
            TaxMode::PaperCondition => {
                let (idx, t) = solve_paper_condition(r1, r2, c)?;
                taxes[if idx == 0 { hi } else { lo }] = t;
                taxed_cp = Some(if idx == 0 { hi } else { lo });
            }
        }
    }

    let policy = TaxPolicy::new(taxes)?;
    let equilibrium = taxed_equilibrium(params, &policy)?;
    let a = equilibrium.efforts.efforts();
    Ok(TaxOutcome { mode, effort_gap: (a[0] - a[1]).abs(), policy, taxed_cp, equilibrium })
}

/// `W(r2 (1-t2) e/c) - W(r1 (1-t1) e/c) - log(r2/r1)`.
fn paper_residual(r1: f64, t1: f64, r2: f64, t2: f64, c: f64) -> f64 {
    let w1 = lambert_w0(r1 * (1.0 - t1) * E / c).unwrap_or(f64::NAN);
    let w2 = lambert_w0(r2 * (1.0 - t2) * E / c).unwrap_or(f64::NAN);
    w2 - w1 - (r2 / r1).ln()
}

/// Returns `(0, t1)` when taxing the dominant CP works, else `(1, t2)`.
fn solve_paper_condition(r1: f64, r2: f64, c: f64) -> Result<(usize, f64)> {
    let tol = 1e-14;
    let upper1 = 1.0 - c / r1;
    if upper1 > 0.0 {
        let f = |t: f64| paper_residual(r1, t, r2, 0.0, c);
        match find_root(f, Bracket::new(0.0, upper1)?, tol) {
            Ok(t) => return Ok((0, t)),
            Err(Error::NoSignChange { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let upper2 = 1.0 - c / r2;
    if upper2 > 0.0 {
        let f = |t: f64| paper_residual(r1, 0.0, r2, t, c);
        match find_root(f, Bracket::new(0.0, upper2)?, tol) {
            Ok(t) => return Ok((1, t)),
            Err(Error::NoSignChange { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoRoot {
        kind: "neutralizing tax",
        lo: 0.0,
        hi: upper1.max(upper2),
        sign_at_lo: paper_residual(r1, 0.0, r2, 0.0, c).signum(),
    })
}
