//! Command-line front end for `tscale`: tabulates the function families,
//! compares schemes, runs flows and verification suites, and writes CSV or
//! JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tscale::dynamics::{
    integrate, integrate_hamiltonian, HamiltonianSpec, SchemeKind, Trajectory, VectorField,
};
use tscale::expfun::{eval_exp, Coefficient, ExpScheme};
use tscale::liegroup::{flow, CMatrix, LieFlowProblem, QuadraticGroupSpec, ScalarField};
use tscale::qcalc::{q_exp_product, q_exp_series, q_trig, QParams};
use tscale::timescale::{ScaleSpec, TimeScale};
use tscale::trigfun::TrigFamily;
use tscale::verify::{Suite, SuiteReport, DEFAULT_SEED};
use tscale::{Complex64, Error};

pub mod parse;
pub mod table;

use parse::FieldSpec;
use table::{Cell, Table};

#[derive(Debug, Parser)]
#[command(
    name = "tscale",
    version,
    about = "Exponential and trigonometric functions, schemes and flows on time scales"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Series tolerance for q-calculus evaluations.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QMethod {
    Product,
    Series,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Time scale: `;`-joined pieces (uniform:START:STEP:COUNT,
    /// qgrid:Q:SCALE:COUNT[:zero], points:A,B,..., interval:A:B,
    /// window:A:B) or a JSON spec file.
    #[arg(long, value_parser = parse::scale)]
    pub scale: ScaleSpec,
    /// Initial time; defaults to the minimum of the scale.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate an exponential E(t, t0) over the scale.
    Exp {
        /// delta, nabla, cayley, exact or pade:J:K.
        #[arg(long, default_value = "cayley")]
        scheme: ExpScheme,
        /// Constant coefficient, e.g. `1`, `-0.5+2i`.
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
        alpha: Complex64,
        #[command(flatten)]
        scale: ScaleArgs,
        /// Samples per dense interval.
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        points: u32,
    },
    /// Tabulate a trigonometric or hyperbolic pair and its Pythagorean defect.
    Trig {
        /// hilger, bp, cayley or exact.
        #[arg(long, default_value = "cayley")]
        family: TrigFamily,
        /// Constant frequency (or hyperbolic coefficient).
        #[arg(long, value_parser = parse::complex, allow_hyphen_values = true, default_value = "1")]
        omega: Complex64,
        /// Hyperbolic pair instead of the trigonometric one.
        #[arg(long)]
        hyperbolic: bool,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
        points: u32,
    },
    /// Integrate one field with several schemes.
    Compare {
        /// Comma-separated schemes.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "forward-euler,backward-euler,trapezoidal1,trapezoidal2,midpoint"
        )]
        schemes: Vec<SchemeKind>,
        /// linear:ALPHA, harmonic:W0 or pendulum:W0.
        #[arg(long, value_parser = parse::field, default_value = "harmonic:1")]
        field: FieldSpec,
        /// Initial state, comma-separated; defaults to 1 (linear) or 1,0.
        #[arg(long, value_delimiter = ',', value_parser = parse::complex, allow_hyphen_values = true)]
        x0: Vec<Complex64>,
        #[command(flatten)]
        scale: ScaleArgs,
        /// Final time; defaults to the maximum of the scale.
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<f64>,
    },
    /// Harmonic oscillator trajectory with its energy drift.
    Oscillator {
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        #[arg(long, default_value = "midpoint")]
        scheme: SchemeKind,
        /// Number of uniform steps when no scale is given.
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Uniform step size when no scale is given.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Scale to integrate on instead of the uniform grid.
        #[arg(long, value_parser = parse::scale)]
        scale: Option<ScaleSpec>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        q0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        p0: f64,
    },
    /// Tabulate the modified q-exponential and q-trigonometric functions.
    Qexp {
        #[arg(long)]
        q: f64,
        /// LO:HI:N or a comma-separated list.
        #[arg(long, value_parser = parse::grid, default_value = "-1:1:21", allow_hyphen_values = true)]
        x: parse::Grid,
        /// Evaluate the exponential by its product or by its power series
        /// (capped by TSCALE_MAX_TERMS).
        #[arg(long, value_enum, default_value_t = QMethod::Product)]
        method: QMethod,
    },
    /// Cayley flow on a quadratic matrix group, started at the identity.
    Lieflow {
        /// so:N, u:N, sp:N, so3, su2 or sp4.
        #[arg(long, value_parser = parse::group)]
        group: QuadraticGroupSpec,
        /// Constant algebra element as rows `a,b;c,d`; a default generator
        /// of the group is used when omitted.
        #[arg(long, value_parser = parse::matrix, allow_hyphen_values = true)]
        generator: Option<CMatrix>,
        #[command(flatten)]
        scale: ScaleArgs,
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<f64>,
    },
    /// Run an invariant suite, or `all` of them.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        /// Trigonometric family for the Pythagorean suite.
        #[arg(long)]
        family: Option<TrigFamily>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{0}")]
    Io(String),
}

/// Rendered command output; `passed` is false when a verification failed.
struct Output {
    text: String,
    passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, passed: true }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a domain error or failed
/// verification, 2 on a usage error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return e.exit_code();
        }
    };
    let result = execute(&cli).and_then(|output| {
        match &cli.out {
            Some(path) => std::fs::write(path, &output.text)
                .map_err(|e| Failure::Io(format!("cannot write '{}': {e}", path.display())))?,
            None => stdout
                .write_all(output.text.as_bytes())
                .map_err(|e| Failure::Io(e.to_string()))?,
        }
        Ok(output.passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(stderr, "error: verification failed");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<Output, Failure> {
    let table = match &cli.command {
        Command::Exp {
            scheme,
            alpha,
            scale,
            points,
        } => exp_table(*scheme, *alpha, scale, *points)?,
        Command::Trig {
            family,
            omega,
            hyperbolic,
            scale,
            points,
        } => trig_table(*family, *omega, *hyperbolic, scale, *points)?,
        Command::Compare {
            schemes,
            field,
            x0,
            scale,
            t1,
        } => compare_table(schemes, *field, x0, scale, *t1)?,
        Command::Oscillator {
            omega0,
            scheme,
            steps,
            step,
            scale,
            q0,
            p0,
        } => {
            let ts = match scale {
                Some(spec) => spec.build()?,
                None => TimeScale::uniform(0.0, *step, *steps)?,
            };
            oscillator_table(*omega0, *scheme, &ts, *q0, *p0)?
        }
        Command::Qexp { q, x, method } => qexp_table(*q, &x.0, *method, cli.tol)?,
        Command::Lieflow {
            group,
            generator,
            scale,
            t1,
        } => {
            return lieflow(group, generator.as_ref(), scale, *t1, cli.format).map(Output::ok);
        }
        Command::Verify {
            suite,
            family,
            seed,
        } => return verify(suite, *family, *seed, cli.format),
    };
    render(&table, cli.format).map(Output::ok)
}

fn render(table: &Table, format: Format) -> Result<String, Failure> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            table
                .write_csv(&mut buf)
                .map_err(|e| Failure::Io(e.to_string()))?;
            Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
        }
        Format::Json => Ok(pretty(&table.to_json())),
    }
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    text
}

fn resolve(scale: &ScaleArgs) -> Result<(TimeScale, f64), Error> {
    let ts = scale.scale.build()?;
    let t0 = match scale.t0 {
        Some(t) => ts.snap(t)?,
        None => ts.min(),
    };
    Ok((ts, t0))
}

fn exp_table(
    scheme: ExpScheme,
    alpha: Complex64,
    scale: &ScaleArgs,
    points: u32,
) -> Result<Table, Error> {
    let (ts, t0) = resolve(scale)?;
    let alpha = Coefficient::constant(alpha);
    let mut table = Table::new(["t", "re", "im"]);
    for t in ts.sample(points as usize) {
        let e = eval_exp(scheme, &alpha, &ts, t, t0)?;
        table.push(vec![t.into(), e.re.into(), e.im.into()]);
    }
    Ok(table)
}

fn trig_table(
    family: TrigFamily,
    omega: Complex64,
    hyperbolic: bool,
    scale: &ScaleArgs,
    points: u32,
) -> Result<Table, Error> {
    let (ts, t0) = resolve(scale)?;
    let omega = Coefficient::constant(omega);
    let (c, s) = if hyperbolic {
        ("cosh", "sinh")
    } else {
        ("cos", "sin")
    };
    let mut table = Table::new([
        "t".to_string(),
        format!("{c}_re"),
        format!("{c}_im"),
        format!("{s}_re"),
        format!("{s}_im"),
        "defect".to_string(),
    ]);
    for t in ts.sample(points as usize) {
        let (pair, defect) = if hyperbolic {
            let p = family.hyperbolic(&ts, &omega, t, t0)?;
            (p, p.cos * p.cos - p.sin * p.sin)
        } else {
            let p = family.trig(&ts, &omega, t, t0)?;
            (p, p.cos * p.cos + p.sin * p.sin)
        };
        let defect = (defect - Complex64::new(1.0, 0.0)).norm();
        table.push(vec![
            t.into(),
            pair.cos.re.into(),
            pair.cos.im.into(),
            pair.sin.re.into(),
            pair.sin.im.into(),
            defect.into(),
        ]);
    }
    Ok(table)
}

fn state_columns(dim: usize) -> Vec<String> {
    (0..dim)
        .flat_map(|k| [format!("x{k}_re"), format!("x{k}_im")])
        .collect()
}

fn push_trajectory(table: &mut Table, prefix: Vec<Cell>, trajectory: &Trajectory) {
    for ((t, x), d) in trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .zip(&trajectory.diagnostics)
    {
        let mut row = prefix.clone();
        row.push((*t).into());
        row.extend(x.iter().flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)]));
        row.push(d.iterations.into());
        row.push(d.residual.into());
        table.push(row);
    }
}

fn pendulum_field(omega0: f64) -> VectorField {
    let w2 = omega0 * omega0;
    VectorField::new(2, true, move |x, _| vec![x[1], -(x[0].sin()) * w2])
}

fn compare_table(
    schemes: &[SchemeKind],
    field: FieldSpec,
    x0: &[Complex64],
    scale: &ScaleArgs,
    t1: Option<f64>,
) -> Result<Table, Error> {
    let (ts, t0) = resolve(scale)?;
    let t1 = t1.unwrap_or(ts.max());
    let one = Complex64::new(1.0, 0.0);
    let (vector_field, hamiltonian, default_x0) = match field {
        FieldSpec::Linear(alpha) => (
            VectorField::scalar_linear(Coefficient::constant(alpha)),
            None,
            vec![one],
        ),
        FieldSpec::Harmonic(w) => (
            VectorField::harmonic(w),
            Some(HamiltonianSpec::harmonic(w)),
            vec![one, 0.0.into()],
        ),
        FieldSpec::Pendulum(w) => (
            pendulum_field(w),
            Some(HamiltonianSpec::pendulum(w)),
            vec![one, 0.0.into()],
        ),
    };
    let x0 = if x0.is_empty() {
        default_x0
    } else {
        x0.to_vec()
    };
    let mut columns = vec!["scheme".to_string(), "t".to_string()];
    columns.extend(state_columns(vector_field.dim()));
    columns.extend(["iterations".to_string(), "residual".to_string()]);
    let mut table = Table::new(columns);
    for &scheme in schemes {
        let trajectory = match (scheme, &hamiltonian) {
            (SchemeKind::DiscreteGradient, Some(h)) => {
                if x0.len() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: x0.len(),
                    });
                }
                integrate_hamiltonian(h, &ts, x0[0].re, x0[1].re, t0, t1)?
            }
            _ => integrate(scheme, &vector_field, &ts, &x0, t0, t1)?,
        };
        push_trajectory(
            &mut table,
            vec![Cell::Text(scheme.to_string())],
            &trajectory,
        );
    }
    Ok(table)
}

fn oscillator_table(
    omega0: f64,
    scheme: SchemeKind,
    ts: &TimeScale,
    q0: f64,
    p0: f64,
) -> Result<Table, Error> {
    let h = HamiltonianSpec::harmonic(omega0);
    let (t0, t1) = (ts.min(), ts.max());
    let trajectory = if scheme == SchemeKind::DiscreteGradient {
        integrate_hamiltonian(&h, ts, q0, p0, t0, t1)?
    } else {
        let x0 = [Complex64::new(q0, 0.0), Complex64::new(p0, 0.0)];
        integrate(scheme, &VectorField::harmonic(omega0), ts, &x0, t0, t1)?
    };
    let e0 = h.energy(q0, p0);
    let mut table = Table::new(["t", "q", "p", "energy", "drift", "iterations", "residual"]);
    for ((t, x), d) in trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .zip(&trajectory.diagnostics)
    {
        let e = h.energy(x[0].re, x[1].re);
        let drift = if e0 == 0.0 {
            e.abs()
        } else {
            ((e - e0) / e0).abs()
        };
        table.push(vec![
            (*t).into(),
            x[0].re.into(),
            x[1].re.into(),
            e.into(),
            drift.into(),
            d.iterations.into(),
            d.residual.into(),
        ]);
    }
    Ok(table)
}

fn qexp_table(q: f64, xs: &[f64], method: QMethod, tol: Option<f64>) -> Result<Table, Error> {
    let mut params = QParams::new(q)?;
    if let Some(tol) = tol {
        params = QParams::with_limits(q, tol, params.max_terms())?;
    }
    let mut table = Table::new(["x", "exp_re", "exp_im", "sin", "cos"]);
    for &x in xs {
        let e = match method {
            QMethod::Product => q_exp_product(Complex64::new(x, 0.0), &params)?,
            QMethod::Series => q_exp_series(Complex64::new(x, 0.0), &params)?,
        };
        let (cos, sin) = q_trig(x, &params)?;
        table.push(vec![
            x.into(),
            e.re.into(),
            e.im.into(),
            sin.into(),
            cos.into(),
        ]);
    }
    Ok(table)
}

/// A fixed element of the algebra of `group`: skew, traceless
/// anti-Hermitian, or `J S` with `S = diag(1..n)`.
fn default_generator(group: &QuadraticGroupSpec) -> CMatrix {
    let n = group.dim();
    let j = group.j();
    if *j == CMatrix::identity(n, n) {
        let centre = (n as f64 - 1.0) / 2.0;
        CMatrix::from_fn(n, n, |r, c| {
            let skew = Complex64::new(0.5 * (c as f64 - r as f64), 0.0);
            match (group.field(), r == c) {
                (ScalarField::Complex, true) => Complex64::new(0.0, r as f64 - centre),
                _ => skew,
            }
        })
    } else {
        j * CMatrix::from_fn(n, n, |r, c| {
            Complex64::new(if r == c { r as f64 + 1.0 } else { 0.0 }, 0.0)
        })
    }
}

fn lieflow(
    group: &QuadraticGroupSpec,
    generator: Option<&CMatrix>,
    scale: &ScaleArgs,
    t1: Option<f64>,
    format: Format,
) -> Result<String, Failure> {
    let (ts, t0) = resolve(scale)?;
    let t1 = t1.unwrap_or(ts.max());
    let n = group.dim();
    let a = generator
        .cloned()
        .unwrap_or_else(|| default_generator(group));
    if a.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        }
        .into());
    }
    let problem = LieFlowProblem::constant(group.clone(), a, CMatrix::identity(n, n), ts)?;
    let points = flow(&problem, t0, t1)?;
    let row_major = |phi: &CMatrix| -> Vec<Complex64> {
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| phi[(r, c)])
            .collect()
    };
    match format {
        Format::Json => {
            let array = points
                .iter()
                .map(|p| {
                    let phi: Vec<[f64; 2]> =
                        row_major(&p.phi).iter().map(|z| [z.re, z.im]).collect();
                    json!({ "t": p.t, "Phi": phi, "defect": p.defect })
                })
                .collect();
            Ok(pretty(&Value::Array(array)))
        }
        Format::Csv => {
            let mut columns = vec!["t".to_string(), "defect".to_string()];
            for r in 0..n {
                for c in 0..n {
                    columns.push(format!("phi{r}{c}_re"));
                    columns.push(format!("phi{r}{c}_im"));
                }
            }
            let mut table = Table::new(columns);
            for p in &points {
                let mut row = vec![Cell::Num(p.t), Cell::Num(p.defect)];
                row.extend(
                    row_major(&p.phi)
                        .iter()
                        .flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)]),
                );
                table.push(row);
            }
            render(&table, Format::Csv)
        }
    }
}

fn report_json(report: &SuiteReport) -> Value {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "value": c.value, "bound": c.bound.to_string(), "passed": c.passed() }))
        .collect();
    json!({ "suite": report.suite, "passed": report.passed(), "checks": checks, "notes": report.notes })
}

fn verify(
    name: &str,
    family: Option<TrigFamily>,
    seed: u64,
    format: Format,
) -> Result<Output, Failure> {
    let mut suites: Vec<Suite> = if name.trim().eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    if let Some(family) = family {
        for suite in &mut suites {
            if let Suite::Pythagorean(f) = suite {
                *f = family;
            }
        }
    }
    let reports = suites
        .iter()
        .map(|s| s.run(seed))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(SuiteReport::passed);
    let text = match format {
        Format::Json => pretty(&Value::Array(reports.iter().map(report_json).collect())),
        Format::Csv => {
            let mut text = String::new();
            for report in &reports {
                let _ = writeln!(text, "{report}");
            }
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| r.suite.as_str())
                .collect();
            let _ = writeln!(
                text,
                "{} of {} suites passed",
                reports.len() - failed.len(),
                reports.len()
            );
            if !failed.is_empty() {
                let _ = writeln!(text, "failed: {}", failed.join(", "));
            }
            text
        }
    };
    Ok(Output { text, passed })
}
