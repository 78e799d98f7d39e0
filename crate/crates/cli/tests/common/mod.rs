use std::path::PathBuf;
use std::process::Command;

/// `(name, args, exit code)`. Each case's stdout is compared with
/// `tests/golden/<name>.out` and its stderr, when nonempty, with `<name>.err`.
/// Set `UPDATE_GOLDEN=1` to rewrite the files.
pub const CASES: &[(&str, &[&str], i32)] = &[
    ("measure_cantor", &["measure", "cantor(2)"], 0),
    ("measure_ops", &["measure", "([0,1/2] | [3/4,1]) \\ cantor(1)"], 0),
    ("measure_dirac", &["measure", "cantor(3)", "--measure", "dirac:1/4"], 0),
    ("measure_density", &["measure", "[0,1/2]", "--measure", "density:2*x"], 0),
    ("integrate_riemann_dirichlet", &["integrate", "--engine=riemann", "dirichlet(0,1)"], 1),
    ("integrate_lebesgue_dirichlet", &["integrate", "--engine=lebesgue", "dirichlet(0,1)"], 0),
    ("integrate_dirichlet_3_2", &["integrate", "dirichlet(3,2)"], 0),
    ("integrate_all", &["integrate", "--engine=all", "x^2", "--tol", "1e-4"], 0),
    ("integrate_piecewise", &["integrate", "--engine=all", "piecewise{[0,1/2): x, [1/2,1]: 1-x}", "--tol", "1e-4"], 0),
    ("integrate_over", &["integrate", "x", "--over", "cantor(1)"], 0),
    ("integrate_sqrt", &["integrate", "1/sqrt(x)", "--tol", "1e-4"], 0),
    ("integrate_exceeded", &["integrate", "1/x^2", "--bound", "1000"], 1),
    ("integrate_dirac", &["integrate", "x^2", "--measure", "dirac:1/3"], 0),
    ("cantor_csv", &["cantor", "6", "--format", "csv"], 0),
    ("cantor_json", &["cantor", "2", "--full"], 0),
    ("cover", &["cover", "--tol", "1e-3"], 0),
    ("converge", &["converge", "n*indicator([1/n,2/n])", "--limit", "0", "--ns", "2,4,8,16"], 0),
    ("converge_csv", &["converge", "min(1/sqrt(x), n)", "--mode", "monotone", "--ns", "1,2,4", "--format", "csv"], 0),
    ("fourier", &["fourier", "x", "--N", "16", "--emit-plot", "grid=256"], 0),
    ("fourier_json", &["fourier", "sin(pi*x)", "--N", "2", "--format", "json", "--tol", "1e-9"], 0),
    ("l2check", &["l2check", "x", "1"], 0),
    ("syntax_error", &["integrate", "x + * 2"], 2),
    ("bad_tol", &["integrate", "x", "--tol=-1"], 2),
];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_measura")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap(), out.status.code().unwrap())
}

/// Runs every case, rewriting the files first when `update` is set, and
/// returns one message per mismatch.
pub fn check_golden(update: bool) -> Vec<String> {
    let mut failures = Vec::new();
    for (name, args, code) in CASES {
        let (stdout, stderr, got) = run(args);
        let out_path = golden_dir().join(format!("{name}.out"));
        let err_path = golden_dir().join(format!("{name}.err"));
        if update {
            std::fs::write(&out_path, &stdout).unwrap();
            if stderr.is_empty() {
                let _ = std::fs::remove_file(&err_path);
            } else {
                std::fs::write(&err_path, &stderr).unwrap();
            }
        }
        let want_out = std::fs::read_to_string(&out_path).unwrap_or_default();
        let want_err = std::fs::read_to_string(&err_path).unwrap_or_default();
        if got != *code {
            failures.push(format!("{name}: exit {got}, expected {code}"));
        }
        if stdout != want_out {
            failures.push(format!("{name}: stdout differs from {}", out_path.display()));
        }
        if stderr != want_err {
            failures.push(format!("{name}: stderr differs: {stderr}"));
        }
    }
    failures
}
