//! Chart maps between the tubular-neighbourhood coordinates `(z, w)` and
//! ambient `(x, y) ∈ ℂ²`, piecewise-linear paths, winding numbers and the
//! verticality classifier for lifted loops.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::algebra::{principal_sqrt, Complex};
use crate::error::{Error, Result};

/// Piecewise-linear path in the complex plane. A closed path does not repeat
/// its first vertex at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct PathSpec {
    vertices: Vec<Complex>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    vertices: Vec<Complex>,
    closed: bool,
}

impl TryFrom<RawPath> for PathSpec {
    type Error = Error;

    fn try_from(raw: RawPath) -> Result<Self> {
        PathSpec::new(raw.vertices, raw.closed)
    }
}

impl From<PathSpec> for RawPath {
    fn from(p: PathSpec) -> Self {
        RawPath { vertices: p.vertices, closed: p.closed }
    }
}

impl PathSpec {
    /// Open paths need at least one vertex (a single vertex is the
    /// zero-length path); closed paths need at least two.
    pub fn new(vertices: Vec<Complex>, closed: bool) -> Result<Self> {
        let min = if closed { 2 } else { 1 };
        if vertices.len() < min {
            return Err(Error::InvalidArgument(format!("path needs at least {min} vertices, got {}", vertices.len())));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { name: "path vertex" });
            }
            if i > 0 && vertices[i - 1] == *v {
                return Err(Error::InvalidArgument(format!("vertices {} and {i} coincide", i - 1)));
            }
        }
        if closed && vertices.first() == vertices.last() {
            return Err(Error::InvalidArgument("closed path must not repeat its first vertex".into()));
        }
        Ok(Self { vertices, closed })
    }

    pub fn open(vertices: Vec<Complex>) -> Result<Self> {
        Self::new(vertices, false)
    }

    pub fn closed(vertices: Vec<Complex>) -> Result<Self> {
        Self::new(vertices, true)
    }

    /// Straight segment from `from` to `to`.
    pub fn segment(from: Complex, to: Complex) -> Result<Self> {
        Self::open(vec![from, to])
    }

    /// Closed polygon approximating a circle, `samples` vertices.
    pub fn circle(center: Complex, radius: f64, samples: usize) -> Result<Self> {
        let vertices =
            (0..samples).map(|k| center + Complex::from_polar(radius, TAU * k as f64 / samples as f64)).collect();
        Self::closed(vertices)
    }

    pub fn vertices(&self) -> &[Complex] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segments as `(start, end)` pairs, including the closing segment.
    pub fn segments(&self) -> impl Iterator<Item = (Complex, Complex)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Point at normalized arc length `s ∈ [0, 1]`.
    pub fn point_at(&self, s: f64) -> Complex {
        let total = self.length();
        if total == 0.0 || s <= 0.0 {
            return self.vertices[0];
        }
        let mut remaining = s.min(1.0) * total;
        let mut last = self.vertices[0];
        for (a, b) in self.segments() {
            let len = (b - a).norm();
            if remaining <= len {
                return a + (b - a) * (remaining / len);
            }
            remaining -= len;
            last = b;
        }
        last
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        if self.closed {
            vertices[1..].reverse();
        } else {
            vertices.reverse();
        }
        Self { vertices, closed: self.closed }
    }

    /// Inserts the midpoint of every segment.
    pub fn refined(&self) -> Self {
        let mut vertices = Vec::with_capacity(2 * self.vertices.len());
        for (a, b) in self.segments() {
            vertices.push(a);
            vertices.push((a + b) * 0.5);
        }
        if !self.closed {
            vertices.push(*self.vertices.last().unwrap());
        }
        Self { vertices, closed: self.closed }
    }

    /// Concatenates two closed loops that share their base vertex.
    pub fn concat_loops(&self, other: &PathSpec) -> Result<Self> {
        if !(self.closed && other.closed) || self.vertices[0] != other.vertices[0] {
            return Err(Error::InvalidArgument(
                "loop concatenation needs two closed loops with a common base point".into(),
            ));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        Self::closed(vertices)
    }

    /// Winding number of a closed path about `center`.
    pub fn winding_number(&self, center: Complex) -> Result<i64> {
        if !self.closed {
            return Err(Error::InvalidArgument("winding number needs a closed path".into()));
        }
        winding_of_loop(&self.vertices, center)
    }
}

/// Free-function form of [`PathSpec::winding_number`].
pub fn winding_number(path: &PathSpec, center: Complex) -> Result<i64> {
    path.winding_number(center)
}

fn segment_distance(a: Complex, b: Complex, p: Complex) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// Argument of `to - center` relative to `from - center`, in `(-π, π]`.
fn arg_increment(from: Complex, to: Complex, center: Complex) -> f64 {
    let r = (to - center) / (from - center);
    let theta = r.im.atan2(r.re);
    if theta <= -PI {
        PI
    } else {
        theta
    }
}

/// Winding of the closed polygon through `points` (closure implied).
/// Repeated consecutive points are skipped.
fn winding_of_loop(points: &[Complex], center: Complex) -> Result<i64> {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        if segment_distance(a, b, center) <= 0.0 {
            return Err(Error::PathThroughCenter { center, segment: i });
        }
        if a != b {
            total += arg_increment(a, b, center);
        }
    }
    Ok((total / TAU).round() as i64)
}

/// Point `(z, w)` of the chart `𝔅_{r₀} × D_{r₁}(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub z: Complex,
    pub w: Complex,
}

impl ChartPoint {
    pub fn new(z: Complex, w: Complex) -> Self {
        Self { z, w }
    }

    /// Checks `|Im z| < r₀` and `|w| ≤ r₁`.
    pub fn in_chart(&self, r0: f64, r1: f64) -> bool {
        self.z.im.abs() < r0 && self.w.norm() <= r1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub x: Complex,
    pub y: Complex,
}

impl AmbientPoint {
    pub fn new(x: Complex, y: Complex) -> Self {
        Self { x, y }
    }
}

/// `(z, w) ↦ (ξ cos z, ξ sin z)` with `ξ = 1/√(1 - w)`.
pub fn chart_to_ambient(p: ChartPoint) -> Result<AmbientPoint> {
    let one_minus_w = Complex::new(1.0, 0.0) - p.w;
    if one_minus_w.norm() == 0.0 {
        return Err(Error::ChartSingularity { w: p.w });
    }
    let xi = principal_sqrt(one_minus_w).inv();
    Ok(AmbientPoint { x: xi * p.z.cos(), y: xi * p.z.sin() })
}

/// `H = x² + y²`.
pub fn ambient_h(p: AmbientPoint) -> Complex {
    p.x * p.x + p.y * p.y
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalWinding {
    pub critical_value: Complex,
    pub winding: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Verticality {
    Vertical,
    NonVertical,
    Indeterminate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalityReport {
    pub windings: Vec<CriticalWinding>,
    pub verdict: Verticality,
}

impl VerticalityReport {
    /// `None` when the verdict is indeterminate.
    pub fn vertical(&self) -> Option<bool> {
        match self.verdict {
            Verticality::Vertical => Some(true),
            Verticality::NonVertical => Some(false),
            Verticality::Indeterminate(_) => None,
        }
    }

    fn indeterminate(reason: String) -> Self {
        Self { windings: Vec::new(), verdict: Verticality::Indeterminate(reason) }
    }
}

/// Classifies a sampled closed ambient loop by the winding of its `H`-image
/// about each critical value. The loop is vertical iff every winding is zero.
///
/// The image must stay more than `margin` away from every critical value and
/// consecutive samples must turn by less than π/2 about each of them;
/// otherwise the verdict is indeterminate.
pub fn verticality_check(loop_ambient: &[AmbientPoint], critical_values: &[Complex], margin: f64) -> VerticalityReport {
    if loop_ambient.len() < 2 {
        return VerticalityReport::indeterminate("loop needs at least two samples".into());
    }
    let image: Vec<Complex> = loop_ambient.iter().map(|p| ambient_h(*p)).collect();
    let n = image.len();
    let mut windings = Vec::with_capacity(critical_values.len());
    for &c in critical_values {
        for i in 0..n {
            let (a, b) = (image[i], image[(i + 1) % n]);
            let dist = segment_distance(a, b, c);
            if dist <= margin {
                return VerticalityReport::indeterminate(format!(
                    "H-image passes within {dist:e} of critical value {c} (margin {margin:e})"
                ));
            }
            if a != b && arg_increment(a, b, c).abs() >= FRAC_PI_2 {
                return VerticalityReport::indeterminate(format!(
                    "H-image undersampled around critical value {c} at sample {i}"
                ));
            }
        }
        match winding_of_loop(&image, c) {
            Ok(winding) => windings.push(CriticalWinding { critical_value: c, winding }),
            Err(e) => return VerticalityReport::indeterminate(e.to_string()),
        }
    }
    let verdict =
        if windings.iter().all(|w| w.winding == 0) { Verticality::Vertical } else { Verticality::NonVertical };
    VerticalityReport { windings, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn unit_square() -> PathSpec {
        PathSpec::closed(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn chart_examples() {
        let p = chart_to_ambient(ChartPoint::new(c(0.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!(p, AmbientPoint::new(c(1.0, 0.0), c(0.0, 0.0)));

        let p = chart_to_ambient(ChartPoint::new(c(PI / 2.0, 0.0), c(0.0, 0.0))).unwrap();
        assert!((p.x - c(0.0, 0.0)).norm() < 1e-15 && (p.y - c(1.0, 0.0)).norm() < 1e-15);

        let p = chart_to_ambient(ChartPoint::new(c(0.0, 0.0), c(0.36, 0.0))).unwrap();
        assert!((p.x - c(1.25, 0.0)).norm() < 1e-15 && p.y.norm() < 1e-15);

        assert!(matches!(
            chart_to_ambient(ChartPoint::new(c(0.3, 0.0), c(1.0, 0.0))),
            Err(Error::ChartSingularity { .. })
        ));
    }

    #[test]
    fn h_examples() {
        assert_eq!(ambient_h(AmbientPoint::new(c(1.0, 0.0), c(0.0, 0.0))), c(1.0, 0.0));
        let h = ambient_h(AmbientPoint::new(c(0.6, 0.0), c(0.8, 0.0)));
        assert!((h - c(1.0, 0.0)).norm() < 1e-15);
        let p = chart_to_ambient(ChartPoint::new(c(1.234, 0.1), c(0.36, 0.0))).unwrap();
        assert!((ambient_h(p) - c(1.5625, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn winding_examples() {
        let sq = unit_square();
        assert_eq!(sq.winding_number(c(0.0, 0.0)).unwrap(), 1);
        assert_eq!(sq.winding_number(c(3.0, 0.0)).unwrap(), 0);
        assert_eq!(sq.reversed().winding_number(c(0.0, 0.0)).unwrap(), -1);

        let circle = PathSpec::circle(c(0.0, 0.0), 1.0, 16).unwrap();
        let twice = circle.concat_loops(&circle).unwrap();
        assert_eq!(twice.winding_number(c(0.0, 0.0)).unwrap(), 2);
    }

    #[test]
    fn winding_rejects_center_on_path() {
        let sq = unit_square();
        assert!(matches!(sq.winding_number(c(1.0, 1.0)), Err(Error::PathThroughCenter { .. })));
        assert!(matches!(sq.winding_number(c(0.0, -1.0)), Err(Error::PathThroughCenter { .. })));
        assert!(sq.winding_number(c(0.0, 0.0)).is_ok());
        let open = PathSpec::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(open.winding_number(c(0.0, 1.0)).is_err());
    }

    #[test]
    fn path_validation() {
        assert!(PathSpec::closed(vec![c(0.0, 0.0)]).is_err());
        assert!(PathSpec::open(vec![c(0.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(PathSpec::closed(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(PathSpec::open(vec![c(0.0, 0.0)]).is_ok());
        assert!(PathSpec::open(vec![c(f64::NAN, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn path_json_shape() {
        let p = PathSpec::segment(c(0.0, 0.5), c(1.0, -2.0)).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"vertices":[[0.0,0.5],[1.0,-2.0]],"closed":false}"#);
        let back: PathSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"vertices":[[0.0,0.0],[0.0,0.0]],"closed":false}"#;
        assert!(serde_json::from_str::<PathSpec>(bad).is_err());
    }

    #[test]
    fn point_at_follows_arc_length() {
        let p = PathSpec::open(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]).unwrap();
        assert_eq!(p.point_at(0.0), c(0.0, 0.0));
        assert!((p.point_at(0.25) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p.point_at(0.75) - c(1.0, 0.5)).norm() < 1e-15);
        assert_eq!(p.point_at(1.0), c(1.0, 1.0));
        let point = PathSpec::open(vec![c(0.2, 0.3)]).unwrap();
        assert_eq!(point.length(), 0.0);
        assert_eq!(point.point_at(0.5), c(0.2, 0.3));
    }

    fn loop_of_h(h: impl Fn(f64) -> Complex, samples: usize) -> Vec<AmbientPoint> {
        // x = (h+1)/2, y = i(h-1)/2 gives x² + y² = h.
        (0..samples)
            .map(|k| {
                let v = h(TAU * k as f64 / samples as f64);
                AmbientPoint::new((v + 1.0) * 0.5, c(0.0, 1.0) * (v - 1.0) * 0.5)
            })
            .collect()
    }

    #[test]
    fn verticality_examples() {
        let s1: Vec<AmbientPoint> = (0..64)
            .map(|k| {
                let t = TAU * k as f64 / 64.0;
                AmbientPoint::new(c(t.cos(), 0.0), c(t.sin(), 0.0))
            })
            .collect();
        let report = verticality_check(&s1, &[c(0.0, 0.0)], 1e-9);
        assert_eq!(report.vertical(), Some(true));
        assert_eq!(report.windings[0].winding, 0);

        let circling = loop_of_h(|t| Complex::from_polar(0.5, t), 64);
        let report = verticality_check(&circling, &[c(0.0, 0.0)], 1e-9);
        assert_eq!(report.vertical(), Some(false));
        assert_eq!(report.windings[0].winding, 1);
    }

    #[test]
    fn verticality_refuses_bad_samples() {
        let coarse = loop_of_h(|t| Complex::from_polar(0.5, t), 3);
        assert_eq!(verticality_check(&coarse, &[c(0.0, 0.0)], 1e-9).vertical(), None);

        let near = loop_of_h(|t| c(0.5, 0.0) + Complex::from_polar(0.5 - 1e-12, t), 256);
        let report = verticality_check(&near, &[c(0.0, 0.0)], 1e-9);
        assert!(matches!(report.verdict, Verticality::Indeterminate(_)));
    }

    fn random_polygon() -> impl Strategy<Value = PathSpec> {
        prop::collection::vec((0.2f64..3.0, 0.0f64..TAU), 3..12).prop_filter_map("degenerate polygon", |pts| {
            let mut pts = pts;
            pts.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let v: Vec<Complex> = pts.iter().map(|(r, t)| Complex::from_polar(*r, *t)).collect();
            PathSpec::closed(v).ok()
        })
    }

    proptest! {
        #[test]
        fn chart_h_identity(zr in -10.0f64..10.0, zi in -0.5f64..0.5, wr in 0.0f64..0.95, wt in 0.0f64..TAU) {
            let w = Complex::from_polar(wr, wt);
            let p = chart_to_ambient(ChartPoint::new(c(zr, zi), w)).unwrap();
            let expected = (Complex::new(1.0, 0.0) - w).inv();
            prop_assert!((ambient_h(p) - expected).norm() <= 1e-12 * expected.norm());
        }

        #[test]
        fn winding_reverses_and_survives_refinement(p in random_polygon(), cx in -4.0f64..4.0, cy in -4.0f64..4.0) {
            let center = c(cx, cy);
            if let Ok(w) = p.winding_number(center) {
                prop_assert_eq!(p.reversed().winding_number(center).unwrap(), -w);
                prop_assert_eq!(p.refined().winding_number(center).unwrap(), w);
                prop_assert_eq!(p.concat_loops(&p).unwrap().winding_number(center).unwrap(), 2 * w);
            }
        }
    }
}
