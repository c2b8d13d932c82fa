//! Runs the bundled invariance suite and prints one line per test.

use solitonlab::verify::{parse_suite, run_suite, INVARIANCE_CORE};

fn main() -> solitonlab::Result<()> {
    let entries = parse_suite(INVARIANCE_CORE)?;
    let outcomes = run_suite(&entries);
    for o in &outcomes {
        let verdict = match &o.report {
            Ok(r) if r.passed() => "pass",
            Ok(_) => "fail",
            Err(_) => "error",
        };
        let expected = if o.entry.expect_pass { "pass" } else { "fail" };
        println!("line {:>3}: {verdict} (expected {expected})", o.entry.line);
    }
    let unexpected = outcomes.iter().filter(|o| !o.as_expected()).count();
    println!("{} tests, {unexpected} unexpected", outcomes.len());
    Ok(())
}
