use std::time::{Duration, Instant};

use gdtm::verify::{self, CheckResult};

fn report(r: &CheckResult, elapsed: Duration) {
    println!(
        "[{}] {}. {} ({} assertions, {:.2}s): {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.id,
        r.name,
        r.assertions,
        elapsed.as_secs_f64(),
        r.detail
    );
}

fn timed(check: fn() -> CheckResult) -> (CheckResult, Duration) {
    let start = Instant::now();
    let r = check();
    let elapsed = start.elapsed();
    report(&r, elapsed);
    (r, elapsed)
}

#[test]
fn acceptance_suite() {
    let mut failed = Vec::new();
    for (k, check) in verify::CHECKS.iter().enumerate() {
        let (r, elapsed) = timed(*check);
        if !r.passed {
            failed.push(r.id);
        }
        if k < 2 && elapsed > Duration::from_secs(5) {
            println!("[FAIL] {}. runtime {:.2}s exceeds 5s", r.id, elapsed.as_secs_f64());
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
