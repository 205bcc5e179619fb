//! Time scales over a bounded window and the basic calculus on them.
//!
//! A [`TimeScale`] is a finite union of closed intervals and scattered points.
//! Every constructor goes through [`TimeScale::normalize`], so two scales that
//! describe the same set compare equal.

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance used to decide membership.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// Relative tolerance for finite-difference derivatives at dense points.
pub const TAU_FD: f64 = 1e-8;

/// Absolute membership tolerance at `t`.
pub fn tau_mem(t: f64) -> f64 {
    MEMBERSHIP_RTOL * t.abs().max(1.0)
}

/// One building block of a time scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    Interval { lo: f64, hi: f64 },
    Point(f64),
}

impl Piece {
    pub fn start(&self) -> f64 {
        match *self {
            Piece::Interval { lo, .. } => lo,
            Piece::Point(t) => t,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Piece::Interval { hi, .. } => hi,
            Piece::Point(t) => t,
        }
    }
}

/// Closed subset of the reals inside a bounded window.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    window: (f64, f64),
    pieces: Vec<Piece>,
}

/// Right or left neighbourhood of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Side {
    Dense,
    /// Gap to the neighbouring point.
    Scattered(f64),
}

/// Four-way classification of a point of the scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointClass {
    pub right: Side,
    pub left: Side,
    pub at_max: bool,
    pub at_min: bool,
}

impl PointClass {
    /// Forward graininess: zero when right-dense.
    pub fn mu(&self) -> f64 {
        match self.right {
            Side::Dense => 0.0,
            Side::Scattered(mu) => mu,
        }
    }

    /// Backward graininess: zero when left-dense.
    pub fn nu(&self) -> f64 {
        match self.left {
            Side::Dense => 0.0,
            Side::Scattered(nu) => nu,
        }
    }
}

/// A stretch of the path between two points of a scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Dense sub-interval traversed continuously.
    Dense { lo: f64, hi: f64 },
    /// Jump from a right-scattered `t` to `t + mu`.
    Step { t: f64, mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Position {
    Point,
    IntervalStart,
    IntervalEnd,
    Interior,
}

#[derive(Debug, Clone, Copy)]
struct Location {
    index: usize,
    t: f64,
    position: Position,
}

impl TimeScale {
    /// Builds the canonical representation of the union of `pieces`
    /// intersected with `window`.
    ///
    /// Overlapping or touching intervals are merged, points touching an
    /// interval are absorbed, duplicate points are removed and the window is
    /// tightened to the hull of what remains.
    pub fn normalize(pieces: &[Piece], window: (f64, f64)) -> Result<Self> {
        let (wa, wb) = window;
        if !(wa.is_finite() && wb.is_finite()) || wa > wb {
            return Err(Error::InvalidParameter(format!(
                "window [{wa}, {wb}] must be finite and ordered"
            )));
        }
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        let mut points: Vec<f64> = Vec::new();
        for piece in pieces {
            match *piece {
                Piece::Interval { lo, hi } => {
                    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                        return Err(Error::InvalidParameter(format!(
                            "interval [{lo}, {hi}] must be finite and ordered"
                        )));
                    }
                    if hi < wa - tau_mem(wa) || lo > wb + tau_mem(wb) {
                        continue;
                    }
                    let lo = lo.max(wa);
                    let hi = hi.min(wb);
                    if hi - lo <= tau_mem(lo) {
                        points.push(lo);
                    } else {
                        intervals.push((lo, hi));
                    }
                }
                Piece::Point(t) => {
                    if !t.is_finite() {
                        return Err(Error::InvalidParameter(format!("point {t} is not finite")));
                    }
                    if t >= wa - tau_mem(wa) && t <= wb + tau_mem(wb) {
                        points.push(t.clamp(wa, wb));
                    }
                }
            }
        }

        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + tau_mem(last.1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }

        points.sort_by(f64::total_cmp);
        let mut kept: Vec<f64> = Vec::with_capacity(points.len());
        for t in points {
            if let Some(&last) = kept.last() {
                if t - last <= tau_mem(last) {
                    continue;
                }
            }
            let absorbed = merged
                .iter()
                .any(|&(lo, hi)| t >= lo - tau_mem(lo) && t <= hi + tau_mem(hi));
            if !absorbed {
                kept.push(t);
            }
        }

        let mut out: Vec<Piece> = merged
            .into_iter()
            .map(|(lo, hi)| Piece::Interval { lo, hi })
            .chain(kept.into_iter().map(Piece::Point))
            .collect();
        out.sort_by(|a, b| a.start().total_cmp(&b.start()));
        match (out.first(), out.last()) {
            (Some(first), Some(last)) => Ok(TimeScale {
                window: (first.start(), last.end()),
                pieces: out,
            }),
            _ => Err(Error::EmptyScale { lo: wa, hi: wb }),
        }
    }

    /// Normalizes `pieces` with the window taken as their hull.
    pub fn from_pieces(pieces: &[Piece]) -> Result<Self> {
        let lo = pieces
            .iter()
            .map(Piece::start)
            .fold(f64::INFINITY, f64::min);
        let hi = pieces
            .iter()
            .map(Piece::end)
            .fold(f64::NEG_INFINITY, f64::max);
        if pieces.is_empty() {
            return Err(Error::EmptyScale { lo: 0.0, hi: 0.0 });
        }
        Self::normalize(pieces, (lo, hi))
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_pieces(&[Piece::Interval { lo, hi }])
    }

    pub fn points(values: &[f64]) -> Result<Self> {
        let pieces: Vec<Piece> = values.iter().map(|&t| Piece::Point(t)).collect();
        Self::from_pieces(&pieces)
    }

    /// `{start + i*step : i = 0..=steps}`.
    pub fn uniform(start: f64, step: f64, steps: usize) -> Result<Self> {
        Self::from_pieces(&uniform_pieces(start, step, steps)?)
    }

    /// `{scale * q^k : k = 0..=steps}`, optionally with `0` added.
    pub fn qgrid(q: f64, scale: f64, steps: usize, include_zero: bool) -> Result<Self> {
        Self::from_pieces(&qgrid_pieces(q, scale, steps, include_zero)?)
    }

    /// Union of two scales.
    pub fn union(&self, other: &TimeScale) -> Result<Self> {
        let mut pieces = self.pieces.clone();
        pieces.extend_from_slice(&other.pieces);
        Self::from_pieces(&pieces)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn min(&self) -> f64 {
        self.window.0
    }

    pub fn max(&self) -> f64 {
        self.window.1
    }

    /// `0` when it belongs to the scale, otherwise the minimum.
    pub fn anchor(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.min()
        }
    }

    /// True when the scale has no dense part.
    pub fn is_discrete(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, Piece::Point(_)))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_ok()
    }

    /// Canonical representative of `t` (exact grid value when `t` is within
    /// the membership tolerance of one).
    pub fn snap(&self, t: f64) -> Result<f64> {
        self.locate(t).map(|loc| loc.t)
    }

    fn locate(&self, t: f64) -> Result<Location> {
        if !t.is_finite() {
            return Err(Error::NotInScale { t });
        }
        let tol = tau_mem(t);
        let idx = self.pieces.partition_point(|p| p.start() <= t + tol);
        if idx == 0 {
            return Err(Error::NotInScale { t });
        }
        let index = idx - 1;
        match self.pieces[index] {
            Piece::Point(p) if (t - p).abs() <= tol => Ok(Location {
                index,
                t: p,
                position: Position::Point,
            }),
            Piece::Interval { lo, hi } if t >= lo - tol && t <= hi + tol => {
                let (t, position) = if (t - lo).abs() <= tol {
                    (lo, Position::IntervalStart)
                } else if (t - hi).abs() <= tol {
                    (hi, Position::IntervalEnd)
                } else {
                    (t, Position::Interior)
                };
                Ok(Location { index, t, position })
            }
            _ => Err(Error::NotInScale { t }),
        }
    }

    /// Forward jump operator, with `sigma(max) = max`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let loc = self.locate(t)?;
        Ok(match loc.position {
            Position::Point | Position::IntervalEnd => {
                self.pieces.get(loc.index + 1).map_or(loc.t, Piece::start)
            }
            Position::IntervalStart | Position::Interior => loc.t,
        })
    }

    /// Backward jump operator, with `rho(min) = min`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let loc = self.locate(t)?;
        Ok(match loc.position {
            Position::Point | Position::IntervalStart => {
                if loc.index == 0 {
                    loc.t
                } else {
                    self.pieces[loc.index - 1].end()
                }
            }
            Position::IntervalEnd | Position::Interior => loc.t,
        })
    }

    /// `sigma(t) - t`.
    pub fn graininess(&self, t: f64) -> Result<f64> {
        let s = self.snap(t)?;
        Ok(self.sigma(s)? - s)
    }

    /// `t - rho(t)`.
    pub fn left_graininess(&self, t: f64) -> Result<f64> {
        let s = self.snap(t)?;
        Ok(s - self.rho(s)?)
    }

    pub fn classify(&self, t: f64) -> Result<PointClass> {
        let s = self.snap(t)?;
        let mu = self.sigma(s)? - s;
        let nu = s - self.rho(s)?;
        let side = |gap: f64| {
            if gap > 0.0 {
                Side::Scattered(gap)
            } else {
                Side::Dense
            }
        };
        Ok(PointClass {
            right: side(mu),
            left: side(nu),
            at_max: s == self.max(),
            at_min: s == self.min(),
        })
    }

    /// Decomposes the path from `a` to `b` (`a <= b`) into dense stretches
    /// and scattered jumps, in order.
    pub fn segments(&self, a: f64, b: f64) -> Result<Vec<Segment>> {
        let start = self.locate(a)?;
        let stop = self.locate(b)?;
        if start.t > stop.t {
            return Err(Error::InvalidParameter(format!(
                "path start {a} lies after its end {b}"
            )));
        }
        let mut out = Vec::new();
        let (mut i, mut s) = (start.index, start.t);
        while s < stop.t {
            if let Piece::Interval { hi, .. } = self.pieces[i] {
                if s < hi {
                    let end = if i == stop.index { stop.t } else { hi };
                    out.push(Segment::Dense { lo: s, hi: end });
                    s = end;
                    continue;
                }
            }
            let next = self.pieces[i + 1].start();
            out.push(Segment::Step { t: s, mu: next - s });
            s = next;
            i += 1;
        }
        Ok(out)
    }

    /// All scattered points and interval endpoints, in increasing order.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            match *piece {
                Piece::Point(t) => out.push(t),
                Piece::Interval { lo, hi } => {
                    out.push(lo);
                    out.push(hi);
                }
            }
        }
        out
    }

    /// Nodes plus `per_interval - 1` equally spaced interior samples of
    /// every interval.
    pub fn sample(&self, per_interval: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            match *piece {
                Piece::Point(t) => out.push(t),
                Piece::Interval { lo, hi } => {
                    let n = per_interval.max(1);
                    for i in 0..n {
                        out.push(lo + (hi - lo) * i as f64 / n as f64);
                    }
                    out.push(hi);
                }
            }
        }
        out
    }
}

/// Pieces for `{start + i*step : i = 0..=steps}`.
pub fn uniform_pieces(start: f64, step: f64, steps: usize) -> Result<Vec<Piece>> {
    if !(step > 0.0 && step.is_finite() && start.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "uniform grid needs a finite start and positive step (got {start}, {step})"
        )));
    }
    Ok((0..=steps)
        .map(|i| Piece::Point(start + i as f64 * step))
        .collect())
}

/// Pieces for the geometric grid `{scale * q^k : k = 0..=steps}` (plus `0`).
pub fn qgrid_pieces(q: f64, scale: f64, steps: usize, include_zero: bool) -> Result<Vec<Piece>> {
    if !(q > 0.0 && q != 1.0 && q.is_finite() && scale.is_finite() && scale != 0.0) {
        return Err(Error::InvalidParameter(format!(
            "q-grid needs q > 0, q != 1 and a nonzero scale (got q = {q}, scale = {scale})"
        )));
    }
    let mut out: Vec<Piece> = (0..=steps)
        .map(|k| Piece::Point(scale * q.powi(k as i32)))
        .collect();
    if include_zero {
        out.push(Piece::Point(0.0));
    }
    Ok(out)
}

/// One entry of a JSON time-scale description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PieceSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Points {
        values: Vec<f64>,
    },
    Uniform {
        start: f64,
        step: f64,
        count: usize,
    },
    Qgrid {
        q: f64,
        scale: f64,
        count: usize,
        #[serde(default)]
        include_zero: bool,
    },
}

/// JSON time-scale description: `{"window": [a, b], "pieces": [...]}`.
///
/// `count` in `uniform` and `qgrid` is the number of steps, so the grid has
/// `count + 1` points. A missing window defaults to the hull of the pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    pub pieces: Vec<PieceSpec>,
}

impl ScaleSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("bad time-scale spec: {e}")))
    }

    pub fn build(&self) -> Result<TimeScale> {
        let mut pieces = Vec::new();
        for spec in &self.pieces {
            match *spec {
                PieceSpec::Interval { a, b } => pieces.push(Piece::Interval { lo: a, hi: b }),
                PieceSpec::Points { ref values } => {
                    pieces.extend(values.iter().map(|&t| Piece::Point(t)))
                }
                PieceSpec::Uniform { start, step, count } => {
                    pieces.extend(uniform_pieces(start, step, count)?)
                }
                PieceSpec::Qgrid {
                    q,
                    scale,
                    count,
                    include_zero,
                } => pieces.extend(qgrid_pieces(q, scale, count, include_zero)?),
            }
        }
        match self.window {
            Some([a, b]) => TimeScale::normalize(&pieces, (a, b)),
            None => TimeScale::from_pieces(&pieces),
        }
    }
}

/// A function sampled on a time scale through an analytic callable.
pub struct GridFunction<'a, F> {
    scale: &'a TimeScale,
    eval: F,
}

impl<'a, F> GridFunction<'a, F>
where
    F: Fn(f64) -> Complex64,
{
    pub fn new(scale: &'a TimeScale, eval: F) -> Self {
        GridFunction { scale, eval }
    }

    pub fn scale(&self) -> &TimeScale {
        self.scale
    }

    /// Value at a point of the scale.
    pub fn at(&self, t: f64) -> Result<Complex64> {
        Ok((self.eval)(self.scale.snap(t)?))
    }

    /// Delta derivative: exact difference quotient at right-scattered points,
    /// Richardson-refined finite differences at right-dense points.
    pub fn delta_derivative(&self, t: f64) -> Result<Complex64> {
        let loc = self.scale.locate(t)?;
        let t = loc.t;
        if t == self.scale.max() {
            return Err(Error::DegenerateAtMax { t });
        }
        let s = self.scale.sigma(t)?;
        if s > t {
            return Ok(((self.eval)(s) - (self.eval)(t)) / (s - t));
        }
        let Piece::Interval { lo, hi } = self.scale.pieces[loc.index] else {
            unreachable!("right-dense point outside an interval");
        };
        Ok(self.dense_derivative(t, lo, hi, Direction::Right))
    }

    /// Nabla derivative: mirror of [`Self::delta_derivative`].
    pub fn nabla_derivative(&self, t: f64) -> Result<Complex64> {
        let loc = self.scale.locate(t)?;
        let t = loc.t;
        if t == self.scale.min() {
            return Err(Error::DegenerateAtMin { t });
        }
        let r = self.scale.rho(t)?;
        if r < t {
            return Ok(((self.eval)(t) - (self.eval)(r)) / (t - r));
        }
        let Piece::Interval { lo, hi } = self.scale.pieces[loc.index] else {
            unreachable!("left-dense point outside an interval");
        };
        Ok(self.dense_derivative(t, lo, hi, Direction::Left))
    }

    fn dense_derivative(&self, t: f64, lo: f64, hi: f64, preferred: Direction) -> Complex64 {
        let f = &self.eval;
        let left_room = t - lo;
        let right_room = hi - t;
        let h_cap = 0.1 * t.abs().max(1.0);
        if left_room > 0.0 && right_room > 0.0 {
            let h0 = h_cap.min(left_room).min(right_room);
            return richardson(|h| (f(t + h) - f(t - h)) / (2.0 * h), h0, 2);
        }
        match preferred {
            Direction::Right => {
                let h0 = h_cap.min(right_room);
                richardson(|h| (f(t + h) - f(t)) / h, h0, 1)
            }
            Direction::Left => {
                let h0 = h_cap.min(left_room);
                richardson(|h| (f(t) - f(t - h)) / h, h0, 1)
            }
        }
    }

    /// Delta integral over `[a, b)`: `mu * f` summed over scattered steps plus
    /// adaptive quadrature over dense stretches.
    pub fn delta_integral(&self, a: f64, b: f64) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for segment in self.scale.segments(a, b)? {
            total += match segment {
                Segment::Dense { lo, hi } => {
                    quadrature::integrate(&self.eval, lo, hi, quadrature::TAU_QUAD)?
                }
                Segment::Step { t, mu } => (self.eval)(t) * mu,
            };
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    Left,
    Right,
}

/// Neville-style Richardson extrapolation of a difference quotient `g(h)`
/// whose error expands in powers of `h^order`.
fn richardson<G: Fn(f64) -> Complex64>(g: G, h0: f64, order: i32) -> Complex64 {
    const LEVELS: usize = 10;
    const SHRINK: f64 = 2.0;
    let mut table = [[Complex64::new(0.0, 0.0); LEVELS]; LEVELS];
    let mut h = h0;
    table[0][0] = g(h);
    let mut best = table[0][0];
    let mut best_err = f64::INFINITY;
    for i in 1..LEVELS {
        h /= SHRINK;
        table[0][i] = g(h);
        let mut fac = SHRINK.powi(order);
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK.powi(order);
            let err = (table[j][i] - table[j - 1][i])
                .norm()
                .max((table[j][i] - table[j - 1][i - 1]).norm());
            if err <= best_err {
                best_err = err;
                best = table[j][i];
            }
        }
        if (table[i][i] - table[i - 1][i - 1]).norm() >= 2.0 * best_err {
            break;
        }
        if best_err <= TAU_FD * best.norm().max(1.0) * 1e-3 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mixed() -> TimeScale {
        TimeScale::from_pieces(&[Piece::Interval { lo: 0.0, hi: 1.0 }, Piece::Point(2.0)]).unwrap()
    }

    #[test]
    fn normalize_absorbs_touching_point() {
        let ts = TimeScale::normalize(
            &[
                Piece::Point(0.0),
                Piece::Point(1.0),
                Piece::Interval { lo: 1.0, hi: 2.0 },
            ],
            (0.0, 2.0),
        )
        .unwrap();
        assert_eq!(
            ts.pieces(),
            &[Piece::Point(0.0), Piece::Interval { lo: 1.0, hi: 2.0 }]
        );
        assert_eq!(ts.window(), (0.0, 2.0));
    }

    #[test]
    fn normalize_merges_overlap() {
        let ts = TimeScale::from_pieces(&[
            Piece::Interval { lo: 0.0, hi: 1.0 },
            Piece::Interval { lo: 0.5, hi: 2.0 },
        ])
        .unwrap();
        assert_eq!(ts.pieces(), &[Piece::Interval { lo: 0.0, hi: 2.0 }]);
    }

    #[test]
    fn normalize_sorts_points_and_tightens_window() {
        let ts = TimeScale::normalize(
            &[Piece::Point(3.0), Piece::Point(1.0), Piece::Point(2.0)],
            (0.0, 10.0),
        )
        .unwrap();
        assert_eq!(
            ts.pieces(),
            &[Piece::Point(1.0), Piece::Point(2.0), Piece::Point(3.0)]
        );
        assert_eq!(ts.window(), (1.0, 3.0));
    }

    #[test]
    fn normalize_rejects_empty_window() {
        let err = TimeScale::normalize(&[Piece::Point(5.0)], (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::EmptyScale { .. }));
    }

    #[test]
    fn normalize_is_idempotent() {
        let ts = mixed();
        let again = TimeScale::normalize(ts.pieces(), ts.window()).unwrap();
        assert_eq!(ts, again);
    }

    #[test]
    fn jump_operators_on_integers() {
        let ts = TimeScale::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(ts.sigma(2.0).unwrap(), 3.0);
        assert_eq!(ts.rho(2.0).unwrap(), 1.0);
        assert_eq!(ts.sigma(5.0).unwrap(), 5.0);
        assert_eq!(ts.rho(0.0).unwrap(), 0.0);
    }

    #[test]
    fn jump_operators_on_mixed_scale() {
        let ts = mixed();
        assert_eq!(ts.sigma(0.5).unwrap(), 0.5);
        assert_eq!(ts.sigma(1.0).unwrap(), 2.0);
        assert_eq!(ts.rho(2.0).unwrap(), 1.0);
        assert_eq!(ts.rho(0.0).unwrap(), 0.0);
        assert!(matches!(ts.sigma(1.5), Err(Error::NotInScale { .. })));
    }

    #[test]
    fn graininess_examples() {
        let half = TimeScale::uniform(0.0, 0.5, 8).unwrap();
        assert_eq!(half.graininess(1.5).unwrap(), 0.5);
        let unit = TimeScale::interval(0.0, 1.0).unwrap();
        assert_eq!(unit.graininess(0.3).unwrap(), 0.0);
        let pts = TimeScale::points(&[0.0, 0.5, 1.5]).unwrap();
        assert_eq!(pts.graininess(0.5).unwrap(), 1.0);
    }

    #[test]
    fn classification() {
        let ts = mixed();
        let c1 = ts.classify(1.0).unwrap();
        assert_eq!(c1.left, Side::Dense);
        assert_eq!(c1.right, Side::Scattered(1.0));
        let c2 = ts.classify(2.0).unwrap();
        assert_eq!(c2.left, Side::Scattered(1.0));
        assert!(c2.at_max);
        let unit = TimeScale::interval(0.0, 1.0).unwrap();
        let c3 = unit.classify(0.5).unwrap();
        assert_eq!((c3.left, c3.right), (Side::Dense, Side::Dense));
        assert!(!c3.at_max && !c3.at_min);
    }

    #[test]
    fn membership_tolerates_rounding() {
        let ts = TimeScale::uniform(0.0, 0.1, 10).unwrap();
        // 0.1 * 3 != 0.3 in binary, but the point must be found
        assert!(ts.contains(0.3));
        assert!(ts.contains(0.1 + 0.2));
        assert!(!ts.contains(0.35));
    }

    #[test]
    fn delta_derivative_examples() {
        let z = TimeScale::uniform(0.0, 1.0, 5).unwrap();
        let f = GridFunction::new(&z, |t| c(t * t));
        assert_eq!(f.delta_derivative(3.0).unwrap(), c(7.0));
        assert_eq!(f.nabla_derivative(3.0).unwrap(), c(5.0));
        let k = GridFunction::new(&z, |_| c(4.2));
        assert_eq!(k.delta_derivative(1.0).unwrap(), c(0.0));
        assert_eq!(k.nabla_derivative(1.0).unwrap(), c(0.0));

        let unit = TimeScale::interval(0.0, 1.0).unwrap();
        let g = GridFunction::new(&unit, |t| c(t * t));
        assert!((g.delta_derivative(0.5).unwrap() - c(1.0)).norm() < TAU_FD);
        assert!((g.nabla_derivative(0.5).unwrap() - c(1.0)).norm() < TAU_FD);
        // one-sided at the left end of the interval
        assert!((g.delta_derivative(0.0).unwrap() - c(0.0)).norm() < TAU_FD);
        assert!(matches!(
            g.delta_derivative(1.0),
            Err(Error::DegenerateAtMax { .. })
        ));
        assert!(matches!(
            g.nabla_derivative(0.0),
            Err(Error::DegenerateAtMin { .. })
        ));
    }

    #[test]
    fn delta_derivative_of_sin_on_mixed_scale() {
        let ts = mixed();
        let f = GridFunction::new(&ts, |t| c(t.sin()));
        let d = f.delta_derivative(0.3).unwrap();
        assert!((d.re - 0.3f64.cos()).abs() < 1e-9);
        let d1 = f.delta_derivative(1.0).unwrap();
        assert_eq!(d1.re, 2f64.sin() - 1f64.sin());
    }

    #[test]
    fn delta_integral_examples() {
        let pts = TimeScale::points(&[0.0, 1.0, 2.0, 4.0]).unwrap();
        let one = GridFunction::new(&pts, |_| c(1.0));
        assert_eq!(one.delta_integral(0.0, 4.0).unwrap(), c(4.0));

        let unit = TimeScale::interval(0.0, 3.0).unwrap();
        let one = GridFunction::new(&unit, |_| c(1.0));
        assert!((one.delta_integral(0.0, 3.0).unwrap() - c(3.0)).norm() < 1e-13);

        let z = TimeScale::uniform(0.0, 1.0, 3).unwrap();
        let id = GridFunction::new(&z, c);
        assert_eq!(id.delta_integral(0.0, 3.0).unwrap(), c(3.0));
    }

    #[test]
    fn delta_integral_on_mixed_scale() {
        // [0,1] dense contributes 1/2, the jump 1 -> 2 contributes 1 * f(1)
        let ts = mixed();
        let id = GridFunction::new(&ts, c);
        let v = id.delta_integral(0.0, 2.0).unwrap();
        assert!((v - c(1.5)).norm() < 1e-13);
    }

    #[test]
    fn segments_of_mixed_path() {
        let ts = TimeScale::from_pieces(&[
            Piece::Point(-1.0),
            Piece::Interval { lo: 0.0, hi: 1.0 },
            Piece::Point(2.0),
            Piece::Interval { lo: 3.0, hi: 4.0 },
        ])
        .unwrap();
        let segs = ts.segments(-1.0, 3.5).unwrap();
        assert_eq!(
            segs,
            vec![
                Segment::Step { t: -1.0, mu: 1.0 },
                Segment::Dense { lo: 0.0, hi: 1.0 },
                Segment::Step { t: 1.0, mu: 1.0 },
                Segment::Step { t: 2.0, mu: 1.0 },
                Segment::Dense { lo: 3.0, hi: 3.5 },
            ]
        );
        assert!(ts.segments(0.5, 0.5).unwrap().is_empty());
        assert!(ts.segments(2.0, 1.0).is_err());
    }

    #[test]
    fn json_spec_parses_and_normalizes() {
        let text = r#"{"window":[0,3],"pieces":[
            {"type":"interval","a":0,"b":1},
            {"type":"points","values":[2.5, 1.0]},
            {"type":"uniform","start":2,"step":0.5,"count":2},
            {"type":"qgrid","q":0.5,"scale":1,"count":3,"include_zero":true}]}"#;
        let ts = ScaleSpec::from_json(text).unwrap().build().unwrap();
        assert_eq!(
            ts.pieces(),
            &[
                Piece::Interval { lo: 0.0, hi: 1.0 },
                Piece::Point(2.0),
                Piece::Point(2.5),
                Piece::Point(3.0)
            ]
        );
    }

    #[test]
    fn qgrid_builder() {
        let ts = TimeScale::qgrid(0.5, 1.0, 3, true).unwrap();
        assert_eq!(ts.nodes(), vec![0.0, 0.125, 0.25, 0.5, 1.0]);
        assert_eq!(ts.sigma(0.25).unwrap(), 0.5);
    }
}
