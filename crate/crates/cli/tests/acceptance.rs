//! Acceptance criteria 1-12. Prints one line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use tscale::trigfun::TrigFamily;
use tscale::verify::{Suite, SuiteReport, DEFAULT_SEED};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn from_report(report: &SuiteReport) -> Self {
        let failures: Vec<String> = report
            .failures()
            .iter()
            .map(|c| format!("{} = {:.4e} (want {})", c.name, c.value, c.bound))
            .collect();
        let worst = report
            .checks
            .iter()
            .map(|c| format!("{:.2e}", c.value))
            .collect::<Vec<_>>()
            .join(" ");
        Verdict {
            passed: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("values {worst}")
            } else {
                failures.join("; ")
            },
        }
    }
}

fn suite(suite: Suite) -> Verdict {
    match suite.run(DEFAULT_SEED) {
        Ok(report) => Verdict::from_report(&report),
        Err(e) => Verdict {
            passed: false,
            detail: format!("suite error: {e}"),
        },
    }
}

fn tscale(args: &[&str]) -> (Option<i32>, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_tscale"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        output.status.code(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
    )
}

fn cli() -> Verdict {
    let start = Instant::now();
    let mut problems = Vec::new();

    let (code, out) = tscale(&[
        "exp",
        "--scheme",
        "cayley",
        "--alpha",
        "1",
        "--scale",
        "uniform:0:1:3",
        "--t0",
        "0",
    ]);
    if code != Some(0) || out != "t,re,im\n0,1,0\n1,3,0\n2,9,0\n3,27,0\n" {
        problems.push(format!("powers-of-three example gave {code:?}: {out:?}"));
    }

    let (code, out) = tscale(&[
        "exp",
        "--scheme",
        "cayley",
        "--alpha",
        "0",
        "--scale",
        "uniform:0:1:3;interval:4:5",
    ]);
    let ones = out
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("1"));
    if code != Some(0) || !ones {
        problems.push(format!("all-ones example gave {code:?}"));
    }

    let (code, out) = tscale(&["verify", "pythagorean", "--family", "cayley"]);
    let small = out.lines().filter(|l| l.contains("max |")).all(|l| {
        l.split_whitespace()
            .rev()
            .nth(2)
            .and_then(|v| v.parse::<f64>().ok())
            .is_some_and(|v| v <= 1e-12)
    });
    if code != Some(0) || !small {
        problems.push(format!("pythagorean example gave {code:?}"));
    }

    let (code, out) = tscale(&["verify", "all"]);
    if code != Some(0) {
        let failed = out
            .lines()
            .find(|l| l.starts_with("failed:"))
            .unwrap_or("failed: ?");
        problems.push(format!("verify all exited {code:?} ({failed})"));
    }

    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        problems.push(format!("runtime {elapsed:.1?} over 60 s"));
    }
    Verdict {
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("runtime {elapsed:.2?}")
        } else {
            problems.join("; ")
        },
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("Pythagorean exactness", || {
            suite(Suite::Pythagorean(TrigFamily::Cayley))
        }),
        ("semigroup and inverse laws", || suite(Suite::Semigroup)),
        ("oplus law and beta bijection", || suite(Suite::Oplus)),
        ("cylinder-form equivalence", || suite(Suite::Cylinder)),
        ("order of accuracy", || suite(Suite::Order)),
        ("unit-circle property", || suite(Suite::UnitCircle)),
        ("energy exactness", || suite(Suite::Energy)),
        ("oscillator analogue", || suite(Suite::Oscillator)),
        ("exact exponential", || suite(Suite::Exact)),
        ("q-calculus", || suite(Suite::QCalc)),
        ("Lie flows", || suite(Suite::Lie)),
        ("CLI", cli),
    ];
    let mut failed = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        let verdict = check();
        let mark = if verdict.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {:<30} {mark}  {}",
            k + 1,
            title,
            verdict.detail
        );
        failed += usize::from(!verdict.passed);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
