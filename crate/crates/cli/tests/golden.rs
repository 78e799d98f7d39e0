mod common;

use common::{check_golden, run};

#[test]
fn golden_outputs() {
    let failures = check_golden(std::env::var_os("UPDATE_GOLDEN").is_some());
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn repeated_runs_are_identical() {
    for args in [&["fourier", "x^2", "--N", "8"][..], &["integrate", "--engine=all", "sin(x)", "--tol", "1e-4"]] {
        assert_eq!(run(args), run(args));
    }
}

#[test]
fn job_count_does_not_change_output() {
    let base = run(&["fourier", "abs(x)", "--N", "12", "--jobs", "1"]);
    assert_eq!(base, run(&["fourier", "abs(x)", "--N", "12", "--jobs", "3"]));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["integrate", "x", "--engine", "simpson"]).2, 2);
    assert_eq!(run(&["fourier", "x", "--emit-plot", "256"]).2, 2);
    assert_eq!(run(&["measure", "[0,1"]).2, 2);
}
