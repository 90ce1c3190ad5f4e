//! Dominant-rate sweeps over two-CP markets and their CSV rendering.

use std::fmt;

use crate::bargaining::{nbs_closed_form, nbs_numeric, BargainingOutcome, BargainingProblem};
use crate::equilibria::{compare_regimes, ComparisonRow};
use crate::error::{Error, Result};
use crate::model::{MarketParams, Regime};
use crate::oracle::{verify_equilibrium, DEFAULT_STEP_1D};

pub const CSV_HEADER: [&str; 27] = [
    "r1", "r2", "c", "beta1_nn", "beta2_nn", "beta1_n", "beta2_n", "a1_nn", "a2_nn", "a_n", "ucp1_nn", "ucp2_nn",
    "ucp1_n", "ucp2_n", "uisp_nn", "uisp_n", "su_nn", "su_n", "total_effort_nn", "total_effort_n", "beta1_b",
    "beta2_b", "ucp1_b", "ucp2_b", "uisp_b", "su_b", "error",
];

/// Significant digits used for every number in the CSV.
pub const CSV_SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepOutput {
    Equilibria,
    /// Bargaining with zero disagreement utilities.
    BargainingZeroD,
    /// Bargaining with the neutral non-cooperative equilibrium as disagreement.
    BargainingNeD,
}

impl fmt::Display for SweepOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepOutput::Equilibria => "equilibria",
            SweepOutput::BargainingZeroD => "bargaining_zero_d",
            SweepOutput::BargainingNeD => "bargaining_ne_d",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub r1_from: f64,
    pub r1_to: f64,
    pub r1_steps: usize,
    pub r2: f64,
    pub c: f64,
    pub outputs: Vec<SweepOutput>,
}

impl SweepSpec {
    pub fn new(r1_from: f64, r1_to: f64, r1_steps: usize, r2: f64, c: f64, outputs: Vec<SweepOutput>) -> Result<Self> {
        if !(r1_from.is_finite() && r1_to.is_finite() && r1_from <= r1_to) {
            return Err(Error::InvalidParams(format!("need r1_from <= r1_to, got {r1_from}..{r1_to}")));
        }
        if r1_steps < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 sweep steps, got {r1_steps}")));
        }
        if !(r2.is_finite() && r2 > 0.0 && c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!("need r2 > 0 and c > 0, got r2={r2}, c={c}")));
        }
        if outputs.contains(&SweepOutput::BargainingZeroD) && outputs.contains(&SweepOutput::BargainingNeD) {
            return Err(Error::InvalidParams("only one bargaining variant fits the CSV columns".into()));
        }
        Ok(SweepSpec { r1_from, r1_to, r1_steps, r2, c, outputs })
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.r1_steps - 1) as f64;
        (0..self.r1_steps)
            .map(|k| {
                if k + 1 == self.r1_steps {
                    self.r1_to
                } else {
                    self.r1_from + (self.r1_to - self.r1_from) * k as f64 / last
                }
            })
            .collect()
    }

    fn wants(&self, out: SweepOutput) -> bool {
        self.outputs.contains(&out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r1: f64,
    pub r2: f64,
    pub c: f64,
    pub comparison: Option<ComparisonRow>,
    pub bargaining: Option<BargainingOutcome>,
    pub error: Option<String>,
}

impl SweepRow {
    /// Numeric cells in CSV column order, `None` for empty cells. The final
    /// `error` column is not included.
    pub fn cells(&self) -> Vec<Option<f64>> {
        let mut cells = vec![Some(self.r1), Some(self.r2), Some(self.c)];
        match &self.comparison {
            Some(cmp) => {
                let (nn, n) = (&cmp.nonneutral, &cmp.neutral);
                let bnn = nn.contract.shares();
                let bn = n.contract.shares();
                let ann = nn.efforts.efforts();
                cells.extend(
                    [
                        bnn[0],
                        bnn[1],
                        bn[0],
                        bn[1],
                        ann[0],
                        ann[1],
                        n.efforts.efforts()[0],
                        nn.utilities.cp[0],
                        nn.utilities.cp[1],
                        n.utilities.cp[0],
                        n.utilities.cp[1],
                        nn.utilities.isp_net,
                        n.utilities.isp_net,
                        nn.utilities.social,
                        n.utilities.social,
                        nn.total_effort,
                        n.total_effort,
                    ]
                    .map(Some),
                );
            }
            None => cells.extend([None; 17]),
        }
        match &self.bargaining {
            Some(b) => {
                let s = b.contract.shares();
                cells.extend(
                    [s[0], s[1], b.utilities.cp[0], b.utilities.cp[1], b.utilities.isp_net, b.utilities.social]
                        .map(Some),
                );
            }
            None => cells.extend([None; 6]),
        }
        cells
    }
}

fn solve_row(spec: &SweepSpec, r1: f64) -> Result<(Option<ComparisonRow>, Option<BargainingOutcome>)> {
    let params = MarketParams::new(vec![r1, spec.r2], spec.c)?;
    let comparison = if spec.wants(SweepOutput::Equilibria) { Some(compare_regimes(&params)?) } else { None };
    let bargaining = if spec.wants(SweepOutput::BargainingZeroD) {
        Some(nbs_closed_form(&BargainingProblem::zero(params)?)?)
    } else if spec.wants(SweepOutput::BargainingNeD) {
        Some(nbs_numeric(&BargainingProblem::at_equilibrium(params, Regime::Neutral)?)?)
    } else {
        None
    };
    Ok((comparison, bargaining))
}

/// One row per grid point in ascending `r1`. Solver failures land in the
/// row's error field instead of aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    spec.grid()
        .into_iter()
        .map(|r1| {
            let (comparison, bargaining, error) = match solve_row(spec, r1) {
                Ok((cmp, b)) => (cmp, b, None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepRow { r1, r2: spec.r2, c: spec.c, comparison, bargaining, error }
        })
        .collect()
}

/// Oracle-certifies both regime equilibria on every `every`-th row. Failing
/// rows get an error message; returns the number of rows checked.
pub fn spot_check(rows: &mut [SweepRow], every: usize, tol: f64) -> Result<usize> {
    let every = every.max(1);
    let mut checked = 0;
    for row in rows.iter_mut().step_by(every) {
        let Some(cmp) = &row.comparison else { continue };
        let params = MarketParams::new(vec![row.r1, row.r2], row.c)?;
        let mut failures = Vec::new();
        for rep in [&cmp.nonneutral, &cmp.neutral] {
            let v = verify_equilibrium(&params, rep.regime, &rep.contract, DEFAULT_STEP_1D, tol)?;
            if !v.passed {
                failures.push(format!("{} equilibrium gain {:.3e}", rep.regime, v.max_unilateral_gain));
            }
        }
        if !failures.is_empty() {
            row.error = Some(format!("verification failed: {}", failures.join("; ")));
        }
        checked += 1;
    }
    Ok(checked)
}

/// `%g`-style rendering with `CSV_SIG_DIGITS` significant digits.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let prec = CSV_SIG_DIGITS - 1;
    let sci = format!("{v:.prec$e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= CSV_SIG_DIGITS as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (prec as i32 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn emit_csv(rows: &[SweepRow]) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("write to memory");
    for row in rows {
        let mut record: Vec<String> = row.cells().into_iter().map(|c| c.map(format_sig).unwrap_or_default()).collect();
        record.push(row.error.clone().unwrap_or_default());
        writer.write_record(&record).expect("write to memory");
    }
    let bytes = writer.into_inner().expect("flush to memory");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

/// A parsed CSV data line: numeric cells (`None` when empty) and the error text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub cells: Vec<Option<f64>>,
    pub error: String,
}

pub fn parse_csv(text: &str) -> Result<Vec<ParsedRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::InvalidParams(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidParams("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidParams(e.to_string()))?;
        let n = record.len();
        let cells = record
            .iter()
            .take(n - 1)
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| Error::InvalidParams(format!("{s}: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ParsedRow { cells, error: record[n - 1].to_string() });
    }
    Ok(rows)
}
