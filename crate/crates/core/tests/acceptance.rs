//! Acceptance suite: one test per criterion, run one at a time so that the
//! runtime budgets are measured without contention. Each test writes its
//! PASS/FAIL line straight to stderr, past the test harness capture.

use std::io::Write;
use std::sync::Mutex;

use csvortex::verify::{self, CheckOutcome};

static SERIAL: Mutex<()> = Mutex::new(());

fn run(check: fn() -> CheckOutcome) {
    let guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let out = check();
    let mut text = format!("{}\n", out.line());
    for d in &out.details {
        text.push_str(&format!("    {d}\n"));
    }
    let _ = std::io::stderr().write_all(text.as_bytes());
    drop(guard);
    assert!(out.passed, "{}", out.line());
}

#[test]
fn criterion_1_liouville_mass() {
    run(verify::liouville_mass);
}

#[test]
fn criterion_2_liouville_orders() {
    run(verify::liouville_orders);
}

#[test]
fn criterion_3_projection_algebra() {
    run(verify::projection_algebra);
}

#[test]
fn criterion_4_topological_solver() {
    run(verify::topological_solver);
}

#[test]
fn criterion_5_lambda_one_ladder() {
    run(verify::lambda_one_ladder);
}

#[test]
fn criterion_6_generic_ladder() {
    run(verify::generic_ladder);
}

#[test]
fn criterion_7_reduced_map_slope() {
    run(verify::reduced_map_slope);
}

#[test]
fn criterion_8_scaling_ladder() {
    run(verify::scaling_ladder);
}

#[test]
fn criterion_9_shooting_cross_check() {
    run(verify::shooting_cross_check);
}
