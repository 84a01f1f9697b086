use std::process::ExitCode;
use std::time::Instant;

use geodesic_partners::acceptance::run_all;
use geodesic_partners::fuchsian::builtin_octagon;

fn main() -> ExitCode {
    let group = builtin_octagon();
    let start = Instant::now();
    let outcomes = run_all(&group, 7);
    let mut all = true;
    for c in &outcomes {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {} ({}): {}", c.id, c.name, c.detail);
        all &= c.passed;
    }
    println!("acceptance: {} of {} criteria passed in {:.1}s", outcomes.iter().filter(|c| c.passed).count(), outcomes.len(), start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
