//! Finite-subcover patching, oscillation and semicontinuity defects, and
//! the semi-local approximation condition.
//!
//! Patching follows the first-match construction over an ordered cover:
//! the patched function agrees with the k-th approximant on the k-th region
//! minus all earlier ones. Regions act as open sets here, so boundary ties
//! fall to later pieces.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{DomainSpec, FnObject, Point, ProbeSet, Region, SemidistanceFamily};
use crate::verdict::Verdict;
use crate::vmetric;

// ---------------------------------------------------------------------------
// Cover patching
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CoverPiece {
    pub region: Region,
    pub approximant: FnObject,
}

/// Index of the first piece whose open region contains `x`.
pub fn piece_index(pieces: &[CoverPiece], x: &[f64]) -> Option<usize> {
    pieces.iter().position(|p| p.region.contains_open(x))
}

/// Glue an ordered cover into one function: at each point the first piece
/// whose open region contains it wins. Points outside the union are
/// evaluation errors carrying the point.
pub fn patch(pieces: &[CoverPiece]) -> Result<FnObject> {
    if pieces.is_empty() {
        return Err(Error::InvalidSpec("patch requires at least one piece".into()));
    }
    let dim = pieces[0].approximant.dim;
    for p in pieces {
        if p.approximant.dim != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.approximant.dim,
            });
        }
    }
    let pieces: Arc<[CoverPiece]> = pieces.to_vec().into();
    Ok(FnObject::new_fallible("patch", dim, move |x| {
        match piece_index(&pieces, x) {
            Some(k) => pieces[k].approximant.eval(x),
            None => Err(Error::Eval {
                name: "patch".into(),
                point: x.to_vec(),
                reason: "point outside the cover union".into(),
            }),
        }
    }))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct PatchOpts {
    /// Sampling depth per piece region.
    pub depth: u32,
    /// Dead band around epsilon separating holds from inconclusive.
    pub margin: f64,
}

impl Default for PatchOpts {
    fn default() -> Self {
        PatchOpts {
            depth: 6,
            margin: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceRow {
    pub index: usize,
    pub center: Point,
    pub radius: f64,
    /// Sup of `d(approximant_k, f)` over the piece's own region sample.
    pub approx_defect: f64,
    /// Sup of `d(patch, f)` over the same sample, skipping points no open
    /// region claims.
    pub patched_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchReport {
    pub epsilon: f64,
    pub rows: Vec<PieceRow>,
    pub max_defect: f64,
    pub worst_point: Option<Point>,
    /// Sampled piece points not open-covered by any piece.
    pub uncovered: usize,
    pub verdict: Verdict,
}

/// Sample every piece's region and measure how far the patched function
/// strays from `f`. The sampled sup underestimates the true sup, so `fails`
/// is certain evidence while `holds` is at sampled resolution.
pub fn patch_defect(
    pieces: &[CoverPiece],
    f: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    epsilon: f64,
    opts: &PatchOpts,
) -> Result<PatchReport> {
    let patched = patch(pieces)?;
    let mut rows = Vec::with_capacity(pieces.len());
    let mut max_defect = 0.0f64;
    let mut worst_point = None;
    let mut uncovered = 0usize;
    for (index, piece) in pieces.iter().enumerate() {
        let mut approx_defect = 0.0f64;
        let mut patched_defect = 0.0f64;
        for x in piece.region.sample(opts.depth) {
            let fx = f.eval(&x)?;
            approx_defect =
                approx_defect.max(family.eval(member, &piece.approximant.eval(&x)?, &fx)?);
            if piece_index(pieces, &x).is_none() {
                uncovered += 1;
                continue;
            }
            let d = family.eval(member, &patched.eval(&x)?, &fx)?;
            if d > max_defect {
                max_defect = d;
                worst_point = Some(x.clone());
            }
            patched_defect = patched_defect.max(d);
        }
        rows.push(PieceRow {
            index,
            center: piece.region.center.clone(),
            radius: piece.region.radius,
            approx_defect,
            patched_defect,
        });
    }
    let verdict = if max_defect <= epsilon - opts.margin {
        Verdict::Holds
    } else if max_defect > epsilon + opts.margin {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(PatchReport {
        epsilon,
        rows,
        max_defect,
        worst_point,
        uncovered,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Oscillation defect
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct OscOpts {
    pub k_max: u32,
    /// Sampling depth per ball; mesh shrinks with the ball radius.
    pub base_depth: u32,
    pub tol_stall: f64,
    pub stall_span: u32,
}

impl Default for OscOpts {
    fn default() -> Self {
        OscOpts {
            k_max: 20,
            base_depth: 4,
            tol_stall: 1e-4,
            stall_span: 3,
        }
    }
}

/// Per-scale oscillation of one function about a point: sup over sampled
/// ball pairs of `d(f(u), f(v))`, clamped non-increasing across scales.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationProfile {
    pub point: Point,
    pub values: Vec<f64>,
    pub defect: f64,
    pub stalled: bool,
}

pub fn oscillation_defect(
    f: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    x: &[f64],
    opts: &OscOpts,
) -> Result<OscillationProfile> {
    let mut values: Vec<f64> = Vec::new();
    let mut stalled = false;
    let mut streak = 0u32;
    for k in 0..=opts.k_max {
        let region = domain.neighborhood(x, k)?;
        let samples = region.sample(opts.base_depth);
        let evals: Vec<Vec<f64>> = samples.iter().map(|p| f.eval(p)).collect::<Result<_>>()?;
        let mut osc = 0.0f64;
        for i in 0..evals.len() {
            for j in i + 1..evals.len() {
                osc = osc.max(family.eval(member, &evals[i], &evals[j])?);
            }
        }
        if let Some(prev) = values.last() {
            // Larger balls contain smaller ones; clamp out mesh artifacts.
            osc = osc.min(*prev);
            if (prev - osc).abs() < opts.tol_stall {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        values.push(osc);
        if opts.stall_span > 0 && streak >= opts.stall_span {
            stalled = true;
            break;
        }
    }
    let defect = *values.last().expect("at least one scale");
    Ok(OscillationProfile {
        point: x.to_vec(),
        values,
        defect,
        stalled,
    })
}

// ---------------------------------------------------------------------------
// Semicontinuity defect
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemicontinuityKind {
    Lower,
    Upper,
}

/// Defect of scalar semicontinuity at `x`: for the upper kind,
/// `max(0, limsup - f(x))` with the limsup estimated over shrinking
/// punctured balls; for the lower kind, `max(0, f(x) - liminf)`.
/// Zero means the sampled evidence is consistent with the semicontinuity.
pub fn semicontinuity_defect(
    f: &FnObject,
    domain: &DomainSpec,
    x: &[f64],
    kind: SemicontinuityKind,
    opts: &OscOpts,
) -> Result<f64> {
    if f.dim != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim,
        });
    }
    let fx = f.eval(x)?[0];
    // One-sided limit estimate: per-scale sup (resp. inf) over punctured
    // samples, clamped monotone across nested balls.
    let mut estimate: Option<f64> = None;
    let mut streak = 0u32;
    for k in 0..=opts.k_max {
        let region = domain.neighborhood(x, k)?;
        let mut level: Option<f64> = None;
        for p in region.sample(opts.base_depth) {
            if p == x {
                continue;
            }
            let v = f.eval(&p)?[0];
            level = Some(match (level, kind) {
                (None, _) => v,
                (Some(l), SemicontinuityKind::Upper) => l.max(v),
                (Some(l), SemicontinuityKind::Lower) => l.min(v),
            });
        }
        let Some(mut level) = level else { continue };
        if let Some(prev) = estimate {
            level = match kind {
                SemicontinuityKind::Upper => level.min(prev),
                SemicontinuityKind::Lower => level.max(prev),
            };
            if (prev - level).abs() < opts.tol_stall {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        estimate = Some(level);
        if opts.stall_span > 0 && streak >= opts.stall_span {
            break;
        }
    }
    let Some(estimate) = estimate else {
        // Isolated point: no punctured evidence, no defect.
        return Ok(0.0);
    };
    Ok(match kind {
        SemicontinuityKind::Upper => (estimate - fx).max(0.0),
        SemicontinuityKind::Lower => (fx - estimate).max(0.0),
    })
}

// ---------------------------------------------------------------------------
// Semi-local condition
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    In,
    Out,
    Unknown,
}

/// A property `P` of functions, given by a membership procedure and a local
/// approximant generator: for a target `f`, a region, and a tolerance, the
/// generator produces a member of `P` intended to track `f` on that region.
#[derive(Clone)]
pub struct PropertyOracle {
    pub name: String,
    pub membership: Arc<dyn Fn(&FnObject) -> Membership + Send + Sync>,
    pub generator: Arc<dyn Fn(&FnObject, &Region, f64) -> Result<FnObject> + Send + Sync>,
}

impl std::fmt::Debug for PropertyOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PropertyOracle")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl PropertyOracle {
    /// The class containing `f` itself; the generator echoes the target.
    pub fn reflexive(name: impl Into<String>) -> Self {
        PropertyOracle {
            name: name.into(),
            membership: Arc::new(|_| Membership::In),
            generator: Arc::new(|f, _, _| Ok(f.clone())),
        }
    }

    /// Continuous approximants, represented by the best constant on the
    /// region: the midrange of the sampled values. Its sup error is half
    /// the sampled oscillation, which no continuous function can beat on a
    /// ball straddling a jump.
    pub fn continuous_midrange(depth: u32) -> Self {
        PropertyOracle {
            name: "continuous".into(),
            membership: Arc::new(|_| Membership::Unknown),
            generator: Arc::new(move |f, region, _| {
                let dim = f.dim;
                let samples = region.sample(depth);
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for x in &samples {
                    for (j, v) in f.eval(x)?.iter().enumerate() {
                        lo[j] = lo[j].min(*v);
                        hi[j] = hi[j].max(*v);
                    }
                }
                if lo.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Generator("region sample is empty".into()));
                }
                let mid: Vec<f64> =
                    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                Ok(FnObject::constant("midrange", mid))
            }),
        }
    }

    /// Piecewise-constant approximants pinned to the target's value at the
    /// region center.
    pub fn local_constant() -> Self {
        PropertyOracle {
            name: "piecewise-constant".into(),
            membership: Arc::new(|_| Membership::Unknown),
            generator: Arc::new(|f, region, _| {
                Ok(FnObject::constant("local-constant", f.eval(&region.center)?))
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SemilocalRow {
    pub probe: Point,
    /// Smallest scale whose generated approximant met the bound.
    pub scale: Option<u32>,
    /// Best sup distance achieved over the scales tried.
    pub best_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemilocalReport {
    pub oracle: String,
    pub epsilon: f64,
    pub rows: Vec<SemilocalRow>,
    /// What a pass predicts: membership of `f` in the V-closure of the
    /// oracle's class.
    pub conclusion: &'static str,
    pub verdict: Verdict,
}

/// The semi-local condition at finite evidence: each probe must admit some
/// scale at which the oracle's approximant stays within the entourage
/// radius on the sampled ball. A pass predicts that `f` lies in the
/// V-closure of the class; exhausting every scale at a probe refutes the
/// condition there.
pub fn semilocal_condition(
    f: &FnObject,
    oracle: &PropertyOracle,
    family: &SemidistanceFamily,
    domain: &DomainSpec,
    probes: &ProbeSet,
    w: &vmetric::Entourage,
    opts: &vmetric::VOpts,
) -> Result<SemilocalReport> {
    let mut rows = Vec::with_capacity(probes.len());
    let mut all_found = true;
    let mut generator_failed = false;
    for a in probes.points() {
        let mut scale = None;
        let mut best = f64::INFINITY;
        for k in 0..=opts.k_max {
            let region = domain.neighborhood(a, k)?;
            let g = match (oracle.generator)(f, &region, w.radius) {
                Ok(g) => g,
                Err(_) => {
                    generator_failed = true;
                    break;
                }
            };
            let sup =
                vmetric::sup_over_region(f, &g, family, w.member, &region, opts.depth(k))?.value;
            best = best.min(sup);
            if sup <= w.radius {
                scale = Some(k);
                break;
            }
        }
        all_found &= scale.is_some();
        rows.push(SemilocalRow {
            probe: a.clone(),
            scale,
            best_defect: if best.is_finite() { best } else { 0.0 },
        });
    }
    let verdict = if generator_failed {
        Verdict::Inconclusive
    } else if all_found {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(SemilocalReport {
        oracle: oracle.name.clone(),
        epsilon: w.radius,
        rows,
        conclusion: "semi-local pass predicts membership in the V-closure of the class",
        verdict,
    })
}
