//! Release gate: every cross-validation criterion at its stated
//! tolerance, one pass/fail line each. Run with `--nocapture` to see the
//! lines as they complete.

use csma_rsa::validation::{run_acceptance, DEFAULT_SEED};

#[test]
fn acceptance_suite() {
    let results = run_acceptance(DEFAULT_SEED);
    for r in &results {
        println!("{}", r.report_line());
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    assert!(
        failed.is_empty(),
        "{} acceptance criteria failed:\n{}",
        failed.len(),
        failed
            .iter()
            .map(|r| r.report_line())
            .collect::<Vec<_>>()
            .join("\n")
    );
}
