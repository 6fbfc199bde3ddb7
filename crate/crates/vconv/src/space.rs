//! Domains with nested neighborhood bases, codomain semidistance families,
//! and evaluable functions.
//!
//! A domain is either a box in `R^d` (with the Chebyshev metric, so that
//! metric balls intersected with the box are again boxes and admit regular
//! grid sampling) or a finite point set with an explicit distance table.
//! Every point carries a countable nested base of closed balls with
//! geometrically shrinking radii `r0 * beta^k`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the domain, by coordinates.
pub type Point = Vec<f64>;

/// Exact bit-level key for memoizing evaluations at a point.
pub fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|c| c.to_bits()).collect()
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    FiniteSet {
        points: Vec<Point>,
        distances: Vec<Vec<f64>>,
    },
}

/// A computable topological domain with a nested neighborhood base.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    pub r0: f64,
    pub beta: f64,
}

impl DomainSpec {
    /// Box domain with default scales: `r0` a quarter of the diameter,
    /// `beta = 0.5`.
    pub fn box_domain(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let kind = DomainKind::Box { lower, upper };
        let diameter = Self::kind_diameter(&kind)?;
        let spec = DomainSpec {
            kind,
            r0: diameter / 4.0,
            beta: 0.5,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One-dimensional interval domain.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::box_domain(vec![lo], vec![hi])
    }

    /// Finite metric set given by a point list and a pairwise distance table.
    pub fn finite_set(points: Vec<Point>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let kind = DomainKind::FiniteSet { points, distances };
        let diameter = Self::kind_diameter(&kind)?;
        let spec = DomainSpec {
            kind,
            r0: if diameter > 0.0 { diameter / 4.0 } else { 1.0 },
            beta: 0.5,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Override the neighborhood-base scales.
    pub fn with_scales(mut self, r0: f64, beta: f64) -> Result<Self> {
        self.r0 = r0;
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidSpec(format!("r0 must be > 0, got {}", self.r0)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "beta must lie in (0,1), got {}",
                self.beta
            )));
        }
        match &self.kind {
            DomainKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidSpec(
                        "box corners must be nonempty and of equal dimension".into(),
                    ));
                }
                for (lo, hi) in lower.iter().zip(upper) {
                    if !(lo < hi) {
                        return Err(Error::InvalidSpec(format!(
                            "box corners must satisfy lower < upper per axis ({lo} vs {hi})"
                        )));
                    }
                }
            }
            DomainKind::FiniteSet { points, distances } => {
                let n = points.len();
                if n == 0 {
                    return Err(Error::InvalidSpec("finite set must be nonempty".into()));
                }
                if distances.len() != n || distances.iter().any(|row| row.len() != n) {
                    return Err(Error::InvalidSpec("distance table must be n x n".into()));
                }
                for i in 0..n {
                    if distances[i][i] != 0.0 {
                        return Err(Error::InvalidSpec("distance table diagonal must be zero".into()));
                    }
                    for j in 0..n {
                        if distances[i][j] < 0.0 || distances[i][j] != distances[j][i] {
                            return Err(Error::InvalidSpec(
                                "distance table must be symmetric and nonnegative".into(),
                            ));
                        }
                        for k in 0..n {
                            if distances[i][k] > distances[i][j] + distances[j][k] + 1e-12 {
                                return Err(Error::InvalidSpec(
                                    "distance table violates the triangle inequality".into(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Box { lower, .. } => lower.len(),
            DomainKind::FiniteSet { points, .. } => points.first().map_or(0, |p| p.len()),
        }
    }

    fn kind_diameter(kind: &DomainKind) -> Result<f64> {
        match kind {
            DomainKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidSpec("malformed box corners".into()));
                }
                Ok(lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| hi - lo)
                    .fold(0.0, f64::max))
            }
            DomainKind::FiniteSet { distances, .. } => Ok(distances
                .iter()
                .flat_map(|row| row.iter().copied())
                .fold(0.0, f64::max)),
        }
    }

    /// Diameter in the domain metric (Chebyshev for boxes).
    pub fn diameter(&self) -> f64 {
        Self::kind_diameter(&self.kind).unwrap_or(0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::Box { lower, upper } => {
                x.len() == lower.len()
                    && x.iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(c, (lo, hi))| *c >= *lo && *c <= *hi)
            }
            DomainKind::FiniteSet { points, .. } => points.iter().any(|p| p == x),
        }
    }

    /// Metric distance between two domain points (Chebyshev on boxes,
    /// table lookup on finite sets).
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match &self.kind {
            DomainKind::Box { .. } => Ok(a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max)),
            DomainKind::FiniteSet { points, distances } => {
                let i = points
                    .iter()
                    .position(|p| p == a)
                    .ok_or_else(|| Error::PointOutsideDomain { point: a.to_vec() })?;
                let j = points
                    .iter()
                    .position(|p| p == b)
                    .ok_or_else(|| Error::PointOutsideDomain { point: b.to_vec() })?;
                Ok(distances[i][j])
            }
        }
    }

    /// Radius of the k-th base neighborhood: `r0 * beta^k`.
    pub fn scale_radius(&self, k: u32) -> f64 {
        self.r0 * self.beta.powi(k as i32)
    }

    /// The k-th base neighborhood of `a`: the closed metric ball of radius
    /// `r0 * beta^k` about `a`, intersected with the domain. Balls at the
    /// boundary are clipped, not excluded.
    pub fn neighborhood(&self, a: &[f64], k: u32) -> Result<Region> {
        if !self.contains(a) {
            return Err(Error::PointOutsideDomain { point: a.to_vec() });
        }
        Ok(Region {
            domain: self.clone(),
            center: a.to_vec(),
            radius: self.scale_radius(k),
            scale: k,
        })
    }

    /// A region covering the entire domain, for whole-domain sup estimates.
    pub fn whole_region(&self) -> Region {
        match &self.kind {
            DomainKind::Box { lower, upper } => {
                let center: Vec<f64> = lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| 0.5 * (lo + hi))
                    .collect();
                let radius = lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| 0.5 * (hi - lo))
                    .fold(0.0, f64::max);
                Region {
                    domain: self.clone(),
                    center,
                    radius,
                    scale: 0,
                }
            }
            DomainKind::FiniteSet { points, .. } => Region {
                domain: self.clone(),
                center: points[0].clone(),
                radius: self.diameter(),
                scale: 0,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// A closed metric ball intersected with its domain, at scale index `k`.
#[derive(Clone, Debug)]
pub struct Region {
    pub domain: DomainSpec,
    pub center: Point,
    pub radius: f64,
    pub scale: u32,
}

impl Region {
    /// Ball with an explicit radius, outside the scale ladder (scale 0).
    pub fn ball(domain: &DomainSpec, center: Point, radius: f64) -> Self {
        Region {
            domain: domain.clone(),
            center,
            radius,
            scale: 0,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        // Round-off slack: sampled boundary points may land an ulp outside.
        let scale = self
            .center
            .iter()
            .fold(self.radius.abs().max(1.0), |m, c| m.max(c.abs()));
        let tol = 1e-12 * scale;
        self.domain.contains(x)
            && self
                .domain
                .distance(&self.center, x)
                .map(|d| d <= self.radius + tol)
                .unwrap_or(false)
    }

    /// Open-ball membership (strict radius inequality), used by the
    /// cover-patching construction.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        self.domain.contains(x)
            && self
                .domain
                .distance(&self.center, x)
                .map(|d| d < self.radius)
                .unwrap_or(false)
    }

    /// Per-axis sampling mesh at the given depth.
    pub fn mesh(&self, depth: u32) -> f64 {
        self.radius / f64::from(1u32 << depth.min(52))
    }

    /// Deterministic point set covering the region.
    ///
    /// Box case: a regular grid with per-axis mesh `radius / 2^depth`,
    /// clipped to the domain, always including the center and the extreme
    /// in-domain points. Finite-set case: all member points in the ball.
    /// Repeated calls are identical.
    pub fn sample(&self, depth: u32) -> Vec<Point> {
        match &self.domain.kind {
            DomainKind::Box { lower, upper } => {
                let mut axes: Vec<Vec<f64>> = Vec::with_capacity(lower.len());
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    let c = self.center[i];
                    let a = (c - self.radius).max(*lo);
                    let b = (c + self.radius).min(*hi);
                    let steps = 1usize << (depth.min(24) + 1);
                    let mut axis: Vec<f64> = (0..=steps)
                        .map(|j| a + (b - a) * (j as f64) / (steps as f64))
                        .collect();
                    axis.push(c);
                    axis.sort_by(|x, y| x.partial_cmp(y).expect("finite coordinates"));
                    axis.dedup();
                    axes.push(axis);
                }
                let mut out = Vec::new();
                let mut idx = vec![0usize; axes.len()];
                'outer: loop {
                    out.push(idx.iter().enumerate().map(|(i, &j)| axes[i][j]).collect());
                    for i in (0..axes.len()).rev() {
                        idx[i] += 1;
                        if idx[i] < axes[i].len() {
                            continue 'outer;
                        }
                        idx[i] = 0;
                    }
                    break;
                }
                out
            }
            DomainKind::FiniteSet { points, .. } => points
                .iter()
                .filter(|p| self.contains(p))
                .cloned()
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Semidistance families on the codomain R^m
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SemidistanceKind {
    SupNorm,
    Euclidean,
    /// `|u_j - v_j|` for the given coordinate.
    Projection { axis: usize },
    /// `|w . (u - v)|` for a fixed weight vector.
    Linear { weights: Vec<f64> },
}

/// A finite indexed family of semidistances on `R^m`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SemidistanceFamily {
    pub dim: usize,
    pub members: Vec<SemidistanceKind>,
}

impl SemidistanceFamily {
    pub fn new(dim: usize, members: Vec<SemidistanceKind>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("codomain dimension must be >= 1".into()));
        }
        for m in &members {
            match m {
                SemidistanceKind::Projection { axis } if *axis >= dim => {
                    return Err(Error::InvalidSpec(format!(
                        "projection axis {axis} out of range for dimension {dim}"
                    )));
                }
                SemidistanceKind::Linear { weights } if weights.len() != dim => {
                    return Err(Error::InvalidSpec(
                        "linear-functional weights must match the codomain dimension".into(),
                    ));
                }
                _ => {}
            }
        }
        Ok(SemidistanceFamily { dim, members })
    }

    /// The default scalar family: `R^1` with the absolute value.
    pub fn scalar_abs() -> Self {
        SemidistanceFamily {
            dim: 1,
            members: vec![SemidistanceKind::SupNorm],
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let f: SemidistanceFamily = serde_json::from_str(json)?;
        SemidistanceFamily::new(f.dim, f.members)
    }

    /// Evaluate member `i` at a pair of codomain values.
    pub fn eval(&self, i: usize, u: &[f64], v: &[f64]) -> Result<f64> {
        let member = self.members.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.members.len(),
        })?;
        if u.len() != self.dim || v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: if u.len() != self.dim { u.len() } else { v.len() },
            });
        }
        Ok(match member {
            SemidistanceKind::SupNorm => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
            SemidistanceKind::Euclidean => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            SemidistanceKind::Projection { axis } => (u[*axis] - v[*axis]).abs(),
            SemidistanceKind::Linear { weights } => weights
                .iter()
                .zip(u.iter().zip(v))
                .map(|(w, (a, b))| w * (a - b))
                .sum::<f64>()
                .abs(),
        })
    }
}

// ---------------------------------------------------------------------------
// Evaluable functions and sequences
// ---------------------------------------------------------------------------

type Evaluator = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// An evaluable function from the domain into `R^m`.
///
/// Evaluators must be total on the domain and deterministic. An optional
/// Lipschitz certificate `d_i(f(x), f(y)) <= L * dist(x, y)` enables
/// rigorous two-sided sup brackets downstream.
#[derive(Clone)]
pub struct FnObject {
    pub name: String,
    pub dim: usize,
    pub lipschitz_bound: Option<f64>,
    eval: Evaluator,
}

impl FnObject {
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        FnObject {
            name: name.into(),
            dim,
            lipschitz_bound: None,
            eval: Arc::new(move |x| Ok(f(x))),
        }
    }

    pub fn new_fallible<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        FnObject {
            name: name.into(),
            dim,
            lipschitz_bound: None,
            eval: Arc::new(f),
        }
    }

    /// Scalar function of a one-dimensional domain.
    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, move |x| vec![f(x[0])])
    }

    pub fn constant(name: impl Into<String>, value: Vec<f64>) -> Self {
        let dim = value.len();
        Self::new(name, dim, move |_| value.clone()).with_lipschitz(0.0)
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_bound = Some(l);
        self
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = (self.eval)(x)?;
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v)
    }
}

impl fmt::Debug for FnObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObject")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz_bound", &self.lipschitz_bound)
            .finish()
    }
}

/// An indexed family `n -> f_n`, standing in for a filter on the function
/// space. The generator must be total for `0 <= n <= horizon`.
#[derive(Clone)]
pub struct FnSequence {
    pub name: String,
    pub horizon: usize,
    gen: Arc<dyn Fn(usize) -> FnObject + Send + Sync>,
}

impl FnSequence {
    pub fn new<G>(name: impl Into<String>, horizon: usize, g: G) -> Self
    where
        G: Fn(usize) -> FnObject + Send + Sync + 'static,
    {
        FnSequence {
            name: name.into(),
            horizon,
            gen: Arc::new(g),
        }
    }

    pub fn term(&self, n: usize) -> FnObject {
        debug_assert!(n <= self.horizon, "index beyond sequence horizon");
        (self.gen)(n)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }
}

impl fmt::Debug for FnSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSequence")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// A scalar-valued sequence of weight functions (the Abel-rule `eps_n`).
#[derive(Clone, Debug)]
pub struct ScalarSequence {
    pub terms: FnSequence,
}

impl ScalarSequence {
    pub fn new(terms: FnSequence) -> Self {
        ScalarSequence { terms }
    }

    pub fn value(&self, n: usize, x: &[f64]) -> Result<f64> {
        let v = self.terms.term(n).eval(x)?;
        if v.len() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: v.len(),
            });
        }
        Ok(v[0])
    }
}

/// A sequence of domain points `a_n`, with its designated limit point.
#[derive(Clone)]
pub struct PointSequence {
    pub name: String,
    pub horizon: usize,
    gen: Arc<dyn Fn(usize) -> Point + Send + Sync>,
}

impl PointSequence {
    pub fn new<G>(name: impl Into<String>, horizon: usize, g: G) -> Self
    where
        G: Fn(usize) -> Point + Send + Sync + 'static,
    {
        PointSequence {
            name: name.into(),
            horizon,
            gen: Arc::new(g),
        }
    }

    pub fn at(&self, n: usize) -> Point {
        (self.gen)(n)
    }
}

impl fmt::Debug for PointSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointSequence")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Probe sets
// ---------------------------------------------------------------------------

/// The finite set `A` of probe points at which the V-semidistance
/// concentrates its neighborhood conditions. Deduplicated; every point
/// must lie in the domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSet {
    points: Vec<Point>,
}

impl ProbeSet {
    pub fn new(domain: &DomainSpec, points: Vec<Point>) -> Result<Self> {
        let mut dedup: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !domain.contains(&p) {
                return Err(Error::PointOutsideDomain { point: p });
            }
            if !dedup.contains(&p) {
                dedup.push(p);
            }
        }
        Ok(ProbeSet { points: dedup })
    }

    /// Probe set from scalar coordinates on a one-dimensional domain.
    pub fn scalars(domain: &DomainSpec, coords: &[f64]) -> Result<Self> {
        Self::new(domain, coords.iter().map(|&c| vec![c]).collect())
    }

    pub fn empty() -> Self {
        ProbeSet { points: Vec::new() }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}
