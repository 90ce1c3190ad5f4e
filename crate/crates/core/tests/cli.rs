use revshare::cli::run_command;
use revshare::sweep::parse_csv;

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("revshare").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_command(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn shares_line(text: &str) -> Vec<f64> {
    let line = text.lines().find(|l| l.trim_start().starts_with("shares:")).unwrap();
    let inner = line.split('[').nth(1).unwrap().trim_end_matches(']');
    inner.split(',').map(|x| x.trim().parse().unwrap()).collect()
}

#[test]
fn solve_single_cp() {
    let (code, out, _) = run(&["solve", "--n", "1", "--rates", "5.43656", "--cost", "1", "--regime", "nonneutral"]);
    assert_eq!(code, 0);
    assert!((shares_line(&out)[0] - 0.5).abs() < 1e-6);
}

#[test]
fn sweep_row_count_and_header() {
    let (code, out, _) = run(&["sweep", "--r1", "2:30:57", "--r2", "2", "--cost", "1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("r1,r2,c,"));
    let rows = parse_csv(&out).unwrap();
    assert_eq!(rows.len(), 57);
    assert!(rows.iter().all(|r| r.error.is_empty()));
}

#[test]
fn bargain_closed_form_point() {
    let (code, out, _) = run(&["bargain", "--rates", "4,2", "--cost", "1"]);
    assert_eq!(code, 0);
    let b = shares_line(&out);
    assert!((b[0] - 0.714).abs() < 1e-3 && (b[1] - 0.427).abs() < 1e-3, "{b:?}");
    assert!(out.contains("case: interior"));
}

#[test]
fn tax_reports_both_modes() {
    let (code, out, _) = run(&["tax", "--rates", "4,2", "--cost", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("mode: equal_effective_rate"));
    assert!(out.contains("mode: paper_condition"));
}

#[test]
fn verify_flags_a_non_equilibrium() {
    let (code, out, _) = run(&["verify", "--rates", "4,2", "--cost", "1", "--regime", "nonneutral", "--contract", "0.1,0.1"]);
    assert_eq!(code, 0);
    assert!(out.contains("passed: false"), "{out}");
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(run(&["solve", "--rates", "1,1", "--cost", "0"]).0, 2);
    assert_eq!(run(&["sweep", "--r1", "2:30", "--r2", "2", "--cost", "1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}
