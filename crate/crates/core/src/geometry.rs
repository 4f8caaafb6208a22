//! Closed subsets of the real line with exact distance oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection tolerance for boundaries of the nearer-to-`Z1` set.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `{sign * scale / n^2 : n >= 1} ∪ {0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointFamily {
    pub scale: f64,
    #[serde(default = "positive")]
    pub sign: f64,
}

fn positive() -> f64 {
    1.0
}

impl PointFamily {
    pub fn new(scale: f64, sign: f64) -> Result<Self> {
        let fam = PointFamily { scale, sign };
        fam.validate()?;
        Ok(fam)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("family scale must be positive, got {}", self.scale)));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::invalid(format!("family sign must be ±1, got {}", self.sign)));
        }
        Ok(())
    }

    /// The n-th point. Every routine producing family points goes through
    /// this expression, so membership tests are bit-exact.
    pub fn point(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.sign * (self.scale / (nf * nf))
    }

    pub fn distance(&self, x: f64) -> f64 {
        let y = self.sign * x;
        if y <= 0.0 {
            return -y;
        }
        if y >= self.scale {
            return y - self.scale;
        }
        let root = (self.scale / y).sqrt();
        let lo = (root.floor() as u64).max(1);
        let mut best = y;
        for n in [lo.saturating_sub(1).max(1), lo, lo + 1, lo + 2] {
            best = best.min((y - self.sign * self.point(n)).abs());
        }
        best
    }

    /// Points of the family with `|p| >= min_abs`, largest first.
    pub fn points_above(&self, min_abs: f64) -> Vec<f64> {
        if min_abs <= 0.0 {
            return Vec::new();
        }
        let n_max = (self.scale / min_abs).sqrt().floor() as u64;
        (1..=n_max).map(|n| self.point(n)).collect()
    }
}

/// Finite union of points, closed intervals and point families.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClosedSet {
    #[serde(default)]
    pub points: Vec<f64>,
    #[serde(default)]
    pub intervals: Vec<(f64, f64)>,
    #[serde(default)]
    pub families: Vec<PointFamily>,
}

impl ClosedSet {
    pub fn empty() -> Self {
        ClosedSet::default()
    }

    pub fn point(c: f64) -> Self {
        ClosedSet {
            points: vec![c],
            ..ClosedSet::default()
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        ClosedSet {
            intervals: vec![(a, b)],
            ..ClosedSet::default()
        }
    }

    pub fn family(scale: f64, sign: f64) -> Self {
        ClosedSet {
            families: vec![PointFamily { scale, sign }],
            ..ClosedSet::default()
        }
    }

    pub fn union(&self, other: &ClosedSet) -> ClosedSet {
        let mut out = self.clone();
        out.points.extend(&other.points);
        out.intervals.extend(&other.intervals);
        out.families.extend(&other.families);
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("set points must be finite"));
        }
        for &(a, b) in &self.intervals {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::invalid(format!("bad interval [{a}, {b}]")));
            }
        }
        self.families.iter().try_for_each(PointFamily::validate)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty() && self.families.is_empty()
    }

    /// Exact Euclidean distance; `+∞` for the empty set.
    pub fn dist(&self, x: f64) -> f64 {
        let p = self.points.iter().map(|&c| (x - c).abs());
        let i = self.intervals.iter().map(|&(a, b)| {
            if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            }
        });
        let f = self.families.iter().map(|fam| fam.distance(x));
        p.chain(i).chain(f).fold(f64::INFINITY, f64::min)
    }

    pub fn distance(&self, x: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::invalid("distance to the empty set"));
        }
        Ok(self.dist(x))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.dist(x) == 0.0
    }

    /// Membership in the open enlargement `{x : d(x, S) < eps}`.
    pub fn enlarge(&self, eps: f64) -> Result<impl Fn(f64) -> bool + '_> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("enlargement radius must be positive, got {eps}")));
        }
        if self.is_empty() {
            return Err(Error::invalid("enlargement of the empty set"));
        }
        Ok(move |x: f64| self.dist(x) < eps)
    }

    /// `(lo, hi)` of the bounded hull, or `None` for the empty set.
    pub fn hull(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &p in &self.points {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        for &(a, b) in &self.intervals {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for fam in &self.families {
            let end = fam.point(1);
            lo = lo.min(end).min(0.0);
            hi = hi.max(end).max(0.0);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Representative members: all points, interval endpoints and midpoints,
    /// and family points with `n <= family_terms` together with 0.
    pub fn sample_members(&self, family_terms: u64) -> Vec<f64> {
        let mut out = self.points.clone();
        for &(a, b) in &self.intervals {
            out.extend([a, 0.5 * (a + b), b]);
        }
        for fam in &self.families {
            out.push(0.0);
            out.extend((1..=family_terms).map(|n| fam.point(n)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenBall {
    pub center: f64,
    pub radius: f64,
}

impl OpenBall {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(OpenBall { center, radius })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() < self.radius
    }
}

/// `{x : d(x, Z1) <= delta and d(x, Z1) <= d(x, Z2)}`.
///
/// `Z2` may be empty, in which case the second condition always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeSet {
    pub z1: ClosedSet,
    pub z2: ClosedSet,
    pub delta: f64,
}

impl TildeSet {
    pub fn new(z1: ClosedSet, z2: ClosedSet, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if z1.is_empty() {
            return Err(Error::invalid("Z1 must be nonempty"));
        }
        z1.validate()?;
        z2.validate()?;
        Ok(TildeSet { z1, z2, delta })
    }

    /// `max(d1 - delta, d1 - d2)`; the set is `{g <= 0}`.
    pub fn gap(&self, x: f64) -> f64 {
        let d1 = self.z1.dist(x);
        let d2 = self.z2.dist(x);
        (d1 - self.delta).max(d1 - d2)
    }

    pub fn contains(&self, x: f64) -> bool {
        let d1 = self.z1.dist(x);
        d1 <= self.delta && d1 <= self.z2.dist(x)
    }

    /// Closed intervals covering the set within `[lo, hi]`.
    ///
    /// Components are located by scanning the membership predicate on a grid
    /// of step `min(delta, hi - lo) / 64`, with each boundary bisected to
    /// [`BOUNDARY_TOL`] and reported on its member side. Components narrower
    /// than the grid step are recovered only where they contain explicit
    /// atoms of `Z1` (points, intervals, resolvable family points).
    pub fn intervals(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
        }
        let step = self.delta.min(hi - lo) / 64.0;
        let count = ((hi - lo) / step).ceil() as usize;
        let xs: Vec<f64> = (0..=count)
            .map(|i| if i == count { hi } else { lo + step * i as f64 })
            .collect();
        let member: Vec<bool> = xs.iter().map(|&x| self.contains(x)).collect();

        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        for i in 0..xs.len() {
            match (start, member[i]) {
                (None, true) => {
                    start = Some(if i == 0 {
                        xs[0]
                    } else {
                        self.bisect(xs[i - 1], xs[i])
                    });
                }
                (Some(s), false) => {
                    out.push((s, self.bisect(xs[i], xs[i - 1])));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, hi));
        }

        // Z1 is always a subset; pick up atoms the grid stepped over.
        for &p in &self.z1.points {
            if p >= lo && p <= hi {
                out.push((p, p));
            }
        }
        for &(a, b) in &self.z1.intervals {
            let (a, b) = (a.max(lo), b.min(hi));
            if a <= b {
                out.push((a, b));
            }
        }
        for fam in &self.z1.families {
            for p in fam.points_above(step).into_iter().chain([0.0]) {
                if p >= lo && p <= hi {
                    out.push((p, p));
                }
            }
        }
        Ok(merge_intervals(out))
    }

    /// Boundary between a non-member `outside` and a member `inside`; returns
    /// a member point within [`BOUNDARY_TOL`] of the boundary.
    fn bisect(&self, mut outside: f64, mut inside: f64) -> f64 {
        while (inside - outside).abs() > BOUNDARY_TOL {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if self.contains(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    }
}

/// Sorts and merges overlapping or touching closed intervals.
pub fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Distance from `x` to a union of closed intervals (`+∞` if empty).
pub fn distance_to_intervals(intervals: &[(f64, f64)], x: f64) -> f64 {
    intervals
        .iter()
        .map(|&(a, b)| {
            if x < a {
                a - x
            } else if x > b {
                x - b
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Assert2Report {
    pub samples: usize,
    pub tilde_members: usize,
    /// `x ∈ Z̃` but `d(x, Z1) > delta`.
    pub distance_violations: usize,
    /// `x ∈ Z1` but `x ∉ Z̃`.
    pub inclusion_violations: usize,
    /// `x ∈ Z̃ ∩ Z2` but `x ∉ Z1`.
    pub intersection_violations: usize,
}

impl Assert2Report {
    pub fn holds(&self) -> bool {
        self.distance_violations == 0 && self.inclusion_violations == 0 && self.intersection_violations == 0
    }
}

/// Sampled check of the three properties of the nearer-to-`Z1` set:
/// it contains `Z1`, stays within `delta` of `Z1`, and meets `Z2` exactly
/// where `Z1` does.
///
/// Samples are a randomly shifted golden-ratio sequence over the hull of
/// `Z1 ∪ Z2` padded by `2·delta + 1`, plus explicit members of both sets.
pub fn assert2_check(z1: &ClosedSet, z2: &ClosedSet, delta: f64, sample_count: usize, seed: u64) -> Result<Assert2Report> {
    let tilde = TildeSet::new(z1.clone(), z2.clone(), delta)?;
    let (lo, hi) = match (z1.hull(), z2.hull()) {
        (Some(a), Some(b)) => (a.0.min(b.0), a.1.max(b.1)),
        (Some(a), None) => a,
        _ => unreachable!("Z1 is nonempty"),
    };
    let pad = 2.0 * delta + 1.0;
    let (lo, hi) = (lo - pad, hi + pad);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: f64 = rng.gen();
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let mut xs: Vec<f64> = (0..sample_count)
        .map(|i| lo + (hi - lo) * (shift + GOLDEN * i as f64).fract())
        .collect();
    xs.extend(z1.sample_members(1000));
    xs.extend(z2.sample_members(1000));

    let mut report = Assert2Report {
        samples: xs.len(),
        ..Assert2Report::default()
    };
    for x in xs {
        let in_tilde = tilde.contains(x);
        if in_tilde {
            report.tilde_members += 1;
            if z1.dist(x) > delta + 1e-12 {
                report.distance_violations += 1;
            }
            if z2.contains(x) && !z1.contains(x) {
                report.intersection_violations += 1;
            }
        }
        if z1.contains(x) && !in_tilde {
            report.inclusion_violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_and_interval_distances() {
        assert_eq!(ClosedSet::point(0.0).distance(0.3).unwrap(), 0.3);
        assert_eq!(ClosedSet::interval(0.0, 1.0).distance(0.5).unwrap(), 0.0);
        assert_eq!(ClosedSet::interval(0.0, 1.0).distance(1.5).unwrap(), 0.5);
        assert!(ClosedSet::empty().distance(0.0).is_err());
    }

    #[test]
    fn family_contains_its_points_and_limit() {
        let fam = ClosedSet::family(1.0, 1.0);
        for n in 1..200u64 {
            assert!(fam.contains(1.0 / (n as f64 * n as f64)));
        }
        assert!(fam.contains(0.0));
        assert!(!fam.contains(0.5));
        let mirrored = ClosedSet::family(1.0, -1.0);
        assert!(mirrored.contains(-0.25));
        assert_eq!(mirrored.dist(0.25), 0.25);
    }

    #[test]
    fn enlargement_is_open() {
        let s = ClosedSet::point(0.0);
        let inside = s.enlarge(0.1).unwrap();
        assert!(inside(0.05));
        assert!(!inside(0.1));
        assert!(s.enlarge(0.0).is_err());
    }

    #[test]
    fn tilde_of_two_points() {
        let t = TildeSet::new(ClosedSet::point(0.0), ClosedSet::point(1.0), 0.25).unwrap();
        let iv = t.intervals(-2.0, 2.0).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 0.25).abs() < 1e-11 && (iv[0].1 - 0.25).abs() < 1e-11);
        assert!(TildeSet::new(ClosedSet::point(0.0), ClosedSet::point(1.0), 0.0).is_err());
        assert!(TildeSet::new(ClosedSet::empty(), ClosedSet::point(1.0), 0.1).is_err());
    }

    #[test]
    fn tilde_shares_exactly_the_common_point() {
        let z2 = ClosedSet::point(0.0).union(&ClosedSet::point(1.0));
        let t = TildeSet::new(ClosedSet::point(0.0), z2.clone(), 0.3).unwrap();
        for x in z2.sample_members(0) {
            assert_eq!(t.contains(x), x == 0.0);
        }
    }

    #[test]
    fn isolated_atoms_survive_the_scan() {
        // Z1 = {0}, Z2 = [-1, 1]: the tilde set is exactly {0}.
        let t = TildeSet::new(ClosedSet::point(0.0), ClosedSet::interval(-1.0, 1.0), 0.1).unwrap();
        assert_eq!(t.intervals(-2.0, 2.0).unwrap(), vec![(0.0, 0.0)]);
    }

    #[test]
    fn merge_touching_intervals() {
        let m = merge_intervals(vec![(2.0, 3.0), (0.0, 1.0), (1.0, 1.5), (2.5, 2.7)]);
        assert_eq!(m, vec![(0.0, 1.5), (2.0, 3.0)]);
    }

    #[test]
    fn identical_sets_pass_assertion_two() {
        let z = ClosedSet::point(0.0);
        assert!(assert2_check(&z, &z, 0.2, 1000, 0).unwrap().holds());
    }

    #[test]
    fn json_shape() {
        let s: ClosedSet = serde_json::from_str(
            r#"{"points":[0.5],"intervals":[[0,1]],"families":[{"scale":1,"sign":-1}]}"#,
        )
        .unwrap();
        assert_eq!(s.intervals, vec![(0.0, 1.0)]);
        assert_eq!(s.families[0].sign, -1.0);
    }
}
