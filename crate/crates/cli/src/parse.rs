//! Value parsers for command-line flags.

use std::fs;

use tscale::liegroup::{CMatrix, QuadraticGroupSpec};
use tscale::timescale::{PieceSpec, ScaleSpec};
use tscale::Complex64;

fn number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))
}

fn count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a nonnegative integer"))
}

/// Complex literal `re`, `re+imi`, `re-imi` or `imi`; a bare `i` means one.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim();
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return number(s).map(|re| Complex64::new(re, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, ch)| (ch == '+' || ch == '-') && !body[..k].ends_with(['e', 'E']))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (number(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => number(other)?,
    };
    Ok(Complex64::new(re, im))
}

fn piece(s: &str) -> Result<Option<PieceSpec>, String> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("bad scale piece '{s}'"))?;
    let fields: Vec<&str> = rest.split(':').collect();
    let arity = |n: usize| {
        if fields.len() == n {
            Ok(())
        } else {
            Err(format!("'{kind}' takes {n} fields, got '{rest}'"))
        }
    };
    Ok(Some(match kind.trim() {
        "uniform" => {
            arity(3)?;
            PieceSpec::Uniform {
                start: number(fields[0])?,
                step: number(fields[1])?,
                count: count(fields[2])?,
            }
        }
        "qgrid" => {
            let include_zero = match fields.get(3).map(|f| f.trim()) {
                None => false,
                Some("zero" | "true" | "1") => true,
                Some("false" | "0") => false,
                Some(other) => {
                    return Err(format!("qgrid zero flag must be 'zero', got '{other}'"))
                }
            };
            if !(3..=4).contains(&fields.len()) {
                return Err(format!("'qgrid' takes q:scale:count[:zero], got '{rest}'"));
            }
            PieceSpec::Qgrid {
                q: number(fields[0])?,
                scale: number(fields[1])?,
                count: count(fields[2])?,
                include_zero,
            }
        }
        "points" => PieceSpec::Points {
            values: rest.split(',').map(number).collect::<Result<_, _>>()?,
        },
        "interval" => {
            arity(2)?;
            PieceSpec::Interval {
                a: number(fields[0])?,
                b: number(fields[1])?,
            }
        }
        "window" => return Ok(None),
        other => return Err(format!("unknown scale piece '{other}'")),
    }))
}

fn window(s: &str) -> Result<Option<[f64; 2]>, String> {
    match s.trim().strip_prefix("window:") {
        None => Ok(None),
        Some(rest) => {
            let (a, b) = rest
                .split_once(':')
                .ok_or_else(|| format!("bad window '{s}'"))?;
            Ok(Some([number(a)?, number(b)?]))
        }
    }
}

/// Time-scale description: `;`-joined shorthands such as
/// `uniform:0:0.5:4;interval:3:5`, or the path of a JSON spec file.
pub fn scale(s: &str) -> Result<ScaleSpec, String> {
    let shorthand = ["uniform:", "qgrid:", "points:", "interval:", "window:"];
    if !shorthand.iter().any(|p| s.trim_start().starts_with(p)) {
        let text =
            fs::read_to_string(s).map_err(|e| format!("cannot read scale file '{s}': {e}"))?;
        return ScaleSpec::from_json(&text).map_err(|e| e.to_string());
    }
    let mut spec = ScaleSpec {
        window: None,
        pieces: Vec::new(),
    };
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        if let Some(w) = window(part)? {
            spec.window = Some(w);
        } else if let Some(p) = piece(part)? {
            spec.pieces.push(p);
        }
    }
    Ok(spec)
}

/// Evaluation points for tabulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Evaluation grid `lo:hi:n` (n evenly spaced values, ends included) or a
/// comma-separated list.
pub fn grid(s: &str) -> Result<Grid, String> {
    values(s).map(Grid)
}

fn values(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(',') || !s.contains(':') {
        return s.split(',').map(number).collect();
    }
    let fields: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = fields[..] else {
        return Err(format!("grid must be lo:hi:n, got '{s}'"));
    };
    let (lo, hi, n) = (number(lo)?, number(hi)?, count(n)?);
    match n {
        0 => Err("grid needs at least one point".into()),
        1 => Ok(vec![lo]),
        _ => Ok((0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()),
    }
}

/// Right-hand sides offered by `compare`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Linear(Complex64),
    Harmonic(f64),
    Pendulum(f64),
}

pub fn field(s: &str) -> Result<FieldSpec, String> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| format!("field must be kind:value, got '{s}'"))?;
    match kind.trim() {
        "linear" => Ok(FieldSpec::Linear(complex(value)?)),
        "harmonic" => Ok(FieldSpec::Harmonic(number(value)?)),
        "pendulum" => Ok(FieldSpec::Pendulum(number(value)?)),
        other => Err(format!(
            "unknown field '{other}' (linear, harmonic, pendulum)"
        )),
    }
}

/// Square matrix as `;`-separated rows of `,`-separated complex entries.
pub fn matrix(s: &str) -> Result<CMatrix, String> {
    let rows: Vec<Vec<Complex64>> = s
        .split(';')
        .map(|row| row.split(',').map(complex).collect())
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix '{s}' is not square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// `so:N`, `u:N` or `sp:N`, with the shorthands `so3`, `su2` and `sp4`.
pub fn group(s: &str) -> Result<QuadraticGroupSpec, String> {
    let key = s.trim().to_ascii_lowercase();
    let (kind, n) = match key.as_str() {
        "so3" => ("so", 3),
        "su2" => ("u", 2),
        "sp4" => ("sp", 4),
        _ => {
            let (kind, n) = key
                .split_once(':')
                .ok_or_else(|| format!("unknown group '{s}'"))?;
            (kind, count(n)?)
        }
    };
    if n == 0 {
        return Err("group dimension must be positive".into());
    }
    match kind {
        "so" | "o" => Ok(QuadraticGroupSpec::orthogonal(n)),
        "u" | "su" => Ok(QuadraticGroupSpec::unitary(n)),
        "sp" => QuadraticGroupSpec::symplectic(n).map_err(|e| e.to_string()),
        other => Err(format!("unknown group family '{other}' (so, u, sp)")),
    }
}
