//! Command-line front end. Reports go to the output stream, diagnostics and
//! usage errors to the error stream.
//!
//! Exit status: 0 on success, 1 on a solver error, 2 on a usage error.

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bargaining::{nbs_closed_form, nbs_numeric, BargainingOutcome, BargainingProblem, DisagreementPoint};
use crate::equilibria::{neutral_equilibrium, nonneutral_equilibrium, EquilibriumReport};
use crate::error::Error;
use crate::model::{Contract, MarketParams, Regime};
use crate::oracle::{verify_equilibrium, VerificationReport, DEFAULT_STEP_1D};
use crate::regulator::{neutralizing_tax, TaxMode, TaxOutcome};
use crate::sweep::{emit_csv, run_sweep, spot_check, SweepOutput, SweepSpec};

const VERIFY_EVERY: usize = 8;
const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "revshare", about = "Revenue-sharing equilibria between content providers and an ISP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Neutral,
    Nonneutral,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SingleRegime {
    Neutral,
    Nonneutral,
}

impl From<SingleRegime> for Regime {
    fn from(r: SingleRegime) -> Self {
        match r {
            SingleRegime::Neutral => Regime::Neutral,
            SingleRegime::Nonneutral => Regime::NonNeutral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputArg {
    Equilibria,
    BargainingZero,
    BargainingNe,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureSet {
    AsymZero,
    AsymNe,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BargainMethod {
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    from: f64,
    to: f64,
    steps: usize,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [from, to, steps] = parts[..] else {
        return Err(format!("expected FROM:TO:STEPS, got '{s}'"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok(Range {
        from: num(from)?,
        to: num(to)?,
        steps: steps.trim().parse().map_err(|e| format!("'{steps}': {e}"))?,
    })
}

#[derive(Debug, Clone, Copy)]
enum DisagreementArg {
    Zero,
    Ne,
    Fixed([f64; 2]),
}

fn parse_disagreement(s: &str) -> Result<DisagreementArg, String> {
    match s {
        "zero" => Ok(DisagreementArg::Zero),
        "ne" => Ok(DisagreementArg::Ne),
        _ => {
            let vals: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
                .collect::<Result<_, _>>()?;
            match vals[..] {
                [d1, d2] => Ok(DisagreementArg::Fixed([d1, d2])),
                _ => Err(format!("expected zero, ne or D1,D2; got '{s}'")),
            }
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium contracts for one market.
    Solve {
        /// Number of CPs; a single rate is replicated to all of them.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        cost: f64,
        #[arg(long, value_enum, default_value = "both")]
        regime: RegimeArg,
    },
    /// CSV sweep over the dominant CP's rate.
    Sweep {
        /// FROM:TO:STEPS for r1.
        #[arg(long, value_parser = parse_range)]
        r1: Range,
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        cost: f64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "equilibria")]
        outputs: Vec<OutputArg>,
        /// Oracle-check every 8th row.
        #[arg(long)]
        verify: bool,
    },
    /// Nash bargaining between two CPs.
    Bargain {
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        cost: f64,
        /// zero, ne, or D1,D2.
        #[arg(long, value_parser = parse_disagreement, default_value = "zero")]
        disagreement: DisagreementArg,
        /// Defaults to the closed form for zero disagreement, numeric otherwise.
        #[arg(long, value_enum)]
        method: Option<BargainMethod>,
    },
    /// Neutralizing taxes for two CPs under both modes.
    Tax {
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        cost: f64,
    },
    /// Certify a contract as an equilibrium against grid deviations.
    Verify {
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long)]
        cost: f64,
        #[arg(long, value_enum)]
        regime: SingleRegime,
        #[arg(long, value_delimiter = ',', required = true)]
        contract: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_STEP_1D)]
        step: f64,
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Preset sweeps behind the two-CP comparison plots.
    Figures {
        #[arg(long, value_enum)]
        set: FigureSet,
        /// Upper end of the r1 range (30 for asym-zero, 10 for asym-ne).
        #[arg(long)]
        r1_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        verify: bool,
    },
}

enum Failure {
    Usage(String),
    Solver(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run_command<O: Write, E: Write>(argv: &[String], out: &mut O, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Solver(e)) => {
            let _ = writeln!(err, "solver error: {e}");
            1
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Usage(format!("write failed: {e}"))
}

fn dispatch<O: Write, E: Write>(command: Command, out: &mut O, err: &mut E) -> Result<(), Failure> {
    match command {
        Command::Solve { n, rates, cost, regime } => {
            let rates = match (n, rates.len()) {
                (Some(n), 1) => vec![rates[0]; n],
                (Some(n), len) if n != len => {
                    return Err(Failure::Usage(format!("--n {n} does not match {len} rates")));
                }
                _ => rates,
            };
            let params = MarketParams::new(rates, cost).map_err(usage)?;
            if matches!(regime, RegimeArg::Nonneutral | RegimeArg::Both) {
                write_report(out, &nonneutral_equilibrium(&params)?).map_err(io)?;
            }
            if matches!(regime, RegimeArg::Neutral | RegimeArg::Both) {
                write_report(out, &neutral_equilibrium(&params)?).map_err(io)?;
            }
        }
        Command::Sweep { r1, r2, cost, outputs, verify } => {
            let outputs = outputs
                .into_iter()
                .map(|o| match o {
                    OutputArg::Equilibria => SweepOutput::Equilibria,
                    OutputArg::BargainingZero => SweepOutput::BargainingZeroD,
                    OutputArg::BargainingNe => SweepOutput::BargainingNeD,
                })
                .collect();
            let spec = SweepSpec::new(r1.from, r1.to, r1.steps, r2, cost, outputs).map_err(usage)?;
            emit_sweep(&spec, verify, out, err)?;
        }
        Command::Figures { set, r1_max, steps, verify } => {
            let (to, default_steps, bargaining) = match set {
                FigureSet::AsymZero => (30.0, 57, SweepOutput::BargainingZeroD),
                FigureSet::AsymNe => (10.0, 33, SweepOutput::BargainingNeD),
            };
            let to = r1_max.unwrap_or(to);
            let spec = SweepSpec::new(
                2.0,
                to,
                steps.unwrap_or(default_steps),
                2.0,
                1.0,
                vec![SweepOutput::Equilibria, bargaining],
            )
            .map_err(usage)?;
            emit_sweep(&spec, verify, out, err)?;
        }
        Command::Bargain { rates, cost, disagreement, method } => {
            let params = MarketParams::new(rates, cost).map_err(usage)?;
            let point = match disagreement {
                DisagreementArg::Zero => DisagreementPoint::Zero,
                DisagreementArg::Ne => DisagreementPoint::Equilibrium(Regime::Neutral),
                DisagreementArg::Fixed(d) => DisagreementPoint::Fixed(d),
            };
            let problem = BargainingProblem::from_point(params, point).map_err(usage)?;
            let method = method.unwrap_or(if matches!(disagreement, DisagreementArg::Zero) {
                BargainMethod::Closed
            } else {
                BargainMethod::Numeric
            });
            let outcome = match method {
                BargainMethod::Closed => nbs_closed_form(&problem)?,
                BargainMethod::Numeric => nbs_numeric(&problem)?,
            };
            write_bargaining(out, &problem, &outcome).map_err(io)?;
        }
        Command::Tax { rates, cost } => {
            let params = MarketParams::new(rates, cost).map_err(usage)?;
            for mode in [TaxMode::EqualEffectiveRate, TaxMode::PaperCondition] {
                match neutralizing_tax(&params, mode) {
                    Ok(outcome) => write_tax(out, &outcome).map_err(io)?,
                    Err(e) => {
                        writeln!(out, "mode: {mode}\n  error: {e}").map_err(io)?;
                        return Err(e.into());
                    }
                }
            }
        }
        Command::Verify { rates, cost, regime, contract, step, tol } => {
            let params = MarketParams::new(rates, cost).map_err(usage)?;
            let contract = Contract::new(contract).map_err(usage)?;
            let report = verify_equilibrium(&params, regime.into(), &contract, step, tol).map_err(usage)?;
            write_verification(out, &report).map_err(io)?;
        }
    }
    Ok(())
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn emit_sweep<O: Write, E: Write>(spec: &SweepSpec, verify: bool, out: &mut O, err: &mut E) -> Result<(), Failure> {
    let mut rows = run_sweep(spec);
    if verify {
        let checked = spot_check(&mut rows, VERIFY_EVERY, VERIFY_TOL)?;
        let failed = rows.iter().filter(|r| r.error.as_deref().is_some_and(|e| e.starts_with("verification"))).count();
        writeln!(err, "verified {checked} rows, {failed} failed").map_err(io)?;
    }
    out.write_all(emit_csv(&rows).as_bytes()).map_err(io)
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.10}")).collect::<Vec<_>>().join(", ")
}

fn write_report<O: Write>(out: &mut O, rep: &EquilibriumReport) -> std::io::Result<()> {
    writeln!(out, "regime: {}", rep.regime)?;
    writeln!(out, "  shares: [{}]", list(rep.contract.shares()))?;
    writeln!(out, "  efforts: [{}]", list(rep.efforts.efforts()))?;
    writeln!(out, "  total_effort: {:.10}", rep.total_effort)?;
    writeln!(out, "  cp_utilities: [{}]", list(&rep.utilities.cp))?;
    writeln!(out, "  isp_net: {:.10}", rep.utilities.isp_net)?;
    writeln!(out, "  social: {:.10}", rep.utilities.social)?;
    writeln!(out, "  multiplicity: {}", rep.multiplicity)?;
    let set: Vec<String> = rep.contributing_set.iter().map(|i| (i + 1).to_string()).collect();
    writeln!(out, "  contributing: {{{}}}", set.join(", "))?;
    if rep.partial_coalition {
        writeln!(out, "  note: partial contributing set")?;
    }
    if rep.asymmetric_seam {
        writeln!(out, "  note: a non-zero neutral equilibrium also exists")?;
    }
    Ok(())
}

fn write_bargaining<O: Write>(out: &mut O, problem: &BargainingProblem, b: &BargainingOutcome) -> std::io::Result<()> {
    writeln!(out, "disagreement: [{}]", list(&problem.disagreement()))?;
    writeln!(out, "case: {}", b.case_tag)?;
    writeln!(out, "  shares: [{}]", list(b.contract.shares()))?;
    writeln!(out, "  cp_utilities: [{}]", list(&b.utilities.cp))?;
    writeln!(out, "  isp_net: {:.10}", b.utilities.isp_net)?;
    writeln!(out, "  social: {:.10}", b.utilities.social)?;
    writeln!(out, "  nash_product: {:.10}", b.nash_product)?;
    if b.clamped {
        writeln!(out, "  note: closed form outside [0, 1]; zero contract returned")?;
    }
    Ok(())
}

fn write_tax<O: Write>(out: &mut O, t: &TaxOutcome) -> std::io::Result<()> {
    writeln!(out, "mode: {}", t.mode)?;
    writeln!(out, "  taxes: [{}]", list(t.policy.taxes()))?;
    match t.taxed_cp {
        Some(i) => writeln!(out, "  taxed_cp: {}", i + 1)?,
        None => writeln!(out, "  taxed_cp: none")?,
    }
    writeln!(out, "  shares: [{}]", list(t.equilibrium.contract.shares()))?;
    writeln!(out, "  efforts: [{}]", list(t.equilibrium.efforts.efforts()))?;
    writeln!(out, "  effort_gap: {:.3e}", t.effort_gap)
}

fn write_verification<O: Write>(out: &mut O, v: &VerificationReport) -> std::io::Result<()> {
    writeln!(out, "passed: {}", v.passed)?;
    writeln!(out, "  max_unilateral_gain: {:.3e}", v.max_unilateral_gain)?;
    writeln!(out, "  per_cp_gain: [{}]", v.per_cp_gain.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(", "))?;
    writeln!(out, "  best_responses: [{}]", list(&v.per_cp_best_response))?;
    writeln!(out, "  grid_step: {}", v.grid_step)?;
    writeln!(out, "  tolerance: {}", v.tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("revshare").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_command(&argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn range_and_disagreement_parsers() {
        let r = parse_range("2:30:57").unwrap();
        assert_eq!((r.from, r.to, r.steps), (2.0, 30.0, 57));
        assert!(parse_range("2:30").is_err());
        assert!(parse_range("a:3:4").is_err());
        assert!(matches!(parse_disagreement("ne"), Ok(DisagreementArg::Ne)));
        assert!(matches!(parse_disagreement("0.5,1"), Ok(DisagreementArg::Fixed([0.5, 1.0]))));
        assert!(parse_disagreement("1,2,3").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, out, err) = run(&["solve", "--rates", "abc", "--cost", "1"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(!err.is_empty());
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["solve", "--rates", "1", "--cost", "1", "--bogus"]).0, 2);
        assert_eq!(run(&["solve", "--n", "3", "--rates", "1,2", "--cost", "1"]).0, 2);
        assert_eq!(run(&["solve", "--rates", "1", "--cost", "-1"]).0, 2);
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("sweep"));
    }

    #[test]
    fn solver_errors_exit_one() {
        let (code, _, err) = run(&["bargain", "--rates", "0.5,0.5", "--cost", "1"]);
        assert_eq!(code, 1);
        assert!(err.contains("solver error"));
    }
}
