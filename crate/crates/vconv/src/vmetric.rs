//! The V-convergence semidistance `delta_{i,A}` and entourage membership,
//! by shrinking-scale sup estimation.
//!
//! For a probe point `a`, the single-point factor of the semidistance is the
//! limit over nested base neighborhoods of the sampled sup of
//! `d_i(f(x), g(x))`. The estimator walks the scales `k = 0, 1, ...`,
//! refining the sampling mesh with the ball, and clamps each recorded value
//! by its predecessor so the profile is non-increasing; clamping keeps every
//! recorded value a valid sampled lower bound of that scale's true sup.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DomainSpec, FnObject, Point, ProbeSet, Region, SemidistanceFamily};
use crate::verdict::Verdict;

/// An entourage of the codomain: the `(member, radius)` ball
/// `{(u,v) : d_i(u,v) <= radius}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Entourage {
    pub member: usize,
    pub radius: f64,
}

impl Entourage {
    pub fn new(member: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "entourage radius must be > 0, got {radius}"
            )));
        }
        Ok(Entourage { member, radius })
    }
}

/// Estimator options. `stall_span = 0` disables stall stopping and always
/// runs the full scale range; useful for profiles with flat plateaus that
/// drop at a later scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct VOpts {
    pub k_max: u32,
    pub tol_stall: f64,
    pub stall_span: u32,
    pub base_depth: u32,
    pub margin: f64,
}

impl Default for VOpts {
    fn default() -> Self {
        VOpts {
            k_max: 24,
            tol_stall: 1e-6,
            stall_span: 3,
            base_depth: 4,
            margin: 1e-6,
        }
    }
}

impl VOpts {
    pub fn with_base_depth(mut self, d: u32) -> Self {
        self.base_depth = d;
        self
    }

    pub fn without_stall(mut self) -> Self {
        self.stall_span = 0;
        self
    }

    /// Sampling depth per scale. The mesh `r_k / 2^depth` already shrinks
    /// with the ball, so the depth is scale-independent and the per-scale
    /// cost is constant.
    pub fn depth(&self, _k: u32) -> u32 {
        self.base_depth
    }
}

/// A sampled sup of `d_i(f(x), g(x))` over one region.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    /// Present iff both functions carry Lipschitz certificates:
    /// `value + (L_f + L_g) * mesh / 2` bounds the true sup.
    pub rigorous_upper: Option<f64>,
    pub depth: u32,
    pub samples: usize,
}

/// Per-probe shrinking-scale sup profile.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleProfile {
    pub probe: Point,
    pub estimates: Vec<SupEstimate>,
    pub delta_hat: f64,
    pub stalled: bool,
}

/// The `delta_{i,A}` estimate with per-probe profiles.
#[derive(Clone, Debug, Serialize)]
pub struct VDistanceReport {
    pub probes: Vec<Point>,
    pub member: usize,
    pub profiles: Vec<ScaleProfile>,
    pub delta: f64,
}

/// Max over the sampled region of `d_i(f(x), g(x))`.
pub fn sup_over_region(
    f: &FnObject,
    g: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    region: &Region,
    depth: u32,
) -> Result<SupEstimate> {
    let points = region.sample(depth);
    let mut value = 0.0f64;
    for x in &points {
        let fu = f.eval(x)?;
        let gv = g.eval(x)?;
        value = value.max(family.eval(member, &fu, &gv)?);
    }
    let rigorous_upper = match (f.lipschitz_bound, g.lipschitz_bound) {
        (Some(lf), Some(lg)) => Some(value + (lf + lg) * region.mesh(depth) / 2.0),
        _ => None,
    };
    Ok(SupEstimate {
        value,
        rigorous_upper,
        depth,
        samples: points.len(),
    })
}

/// The single-point factor `inf_V sup_{x in V} d_i(f(x), g(x))`, estimated
/// over the nested base balls about `a`.
pub fn point_v_semidistance(
    f: &FnObject,
    g: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    a: &[f64],
    opts: &VOpts,
) -> Result<ScaleProfile> {
    let mut estimates: Vec<SupEstimate> = Vec::new();
    let mut streak = 0u32;
    let mut stalled = false;
    for k in 0..=opts.k_max {
        let region = domain.neighborhood(a, k)?;
        let depth = opts.depth(k);
        let mut est = sup_over_region(f, g, family, member, &region, depth)?;
        if let Some(prev) = estimates.last() {
            // Clamp: the mathematical scale sequence is non-increasing, and
            // a previous sampled sup is still a sampled lower bound for the
            // larger ball.
            if est.value > prev.value {
                est.value = prev.value;
                if let Some(u) = est.rigorous_upper.as_mut() {
                    *u = est.value + (f.lipschitz_bound.unwrap_or(0.0)
                        + g.lipschitz_bound.unwrap_or(0.0))
                        * region.mesh(depth)
                        / 2.0;
                }
            }
            if opts.stall_span > 0 {
                if (prev.value - est.value).abs() < opts.tol_stall {
                    streak += 1;
                } else {
                    streak = 0;
                }
            }
        }
        estimates.push(est);
        if opts.stall_span > 0 && streak >= opts.stall_span {
            stalled = true;
            break;
        }
    }
    let delta_hat = estimates.last().map_or(0.0, |e| e.value);
    Ok(ScaleProfile {
        probe: a.to_vec(),
        estimates,
        delta_hat,
        stalled,
    })
}

/// The semidistance `delta_{i,A}(f, g)`: max over probes of the per-probe
/// shrinking-scale estimates. An empty probe set yields zero (the empty
/// entourage condition constrains nothing).
pub fn v_semidistance(
    f: &FnObject,
    g: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &VOpts,
) -> Result<VDistanceReport> {
    if member >= family.members.len() {
        return Err(Error::IndexOutOfRange {
            index: member,
            len: family.members.len(),
        });
    }
    let mut profiles = Vec::with_capacity(probes.len());
    let mut delta = 0.0f64;
    for a in probes.points() {
        let profile = point_v_semidistance(f, g, family, member, domain, a, opts)?;
        delta = delta.max(profile.delta_hat);
        profiles.push(profile);
    }
    Ok(VDistanceReport {
        probes: probes.points().to_vec(),
        member,
        profiles,
        delta,
    })
}

/// Sampled-evidence membership test for the entourage `U_{W,A}`.
///
/// Holds when the estimate clears the radius with margin; fails when at some
/// probe every checked scale exhibited a sampled point violating `W` beyond
/// the margin; inconclusive in the margin band.
pub fn entourage_test(
    f: &FnObject,
    g: &FnObject,
    family: &SemidistanceFamily,
    w: &Entourage,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &VOpts,
) -> Result<(Verdict, VDistanceReport)> {
    let report = v_semidistance(f, g, family, w.member, domain, probes, opts)?;
    let verdict = if report.delta <= w.radius - opts.margin {
        Verdict::Holds
    } else if report.delta > w.radius + opts.margin {
        // The clamped delta is the min over scales of raw sampled sups, so a
        // value above the radius certifies a violating sample at every scale.
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok((verdict, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (DomainSpec, SemidistanceFamily) {
        (
            DomainSpec::interval(0.0, 1.0).unwrap(),
            SemidistanceFamily::scalar_abs(),
        )
    }

    #[test]
    fn sup_of_identical_functions_is_zero() {
        let (d, fam) = setup();
        let f = FnObject::scalar("f", |x| x * x);
        let region = d.neighborhood(&[0.5], 0).unwrap();
        for depth in [0, 2, 5] {
            let est = sup_over_region(&f, &f, &fam, 0, &region, depth).unwrap();
            assert_eq!(est.value, 0.0);
        }
    }

    #[test]
    fn sup_of_monotone_function_hits_right_endpoint() {
        let (d, fam) = setup();
        let f = FnObject::scalar("id", |x| x);
        let g = FnObject::scalar("zero", |_| 0.0);
        let region = d.neighborhood(&[0.5], 0).unwrap();
        for depth in [0, 1, 4] {
            let est = sup_over_region(&f, &g, &fam, 0, &region, depth).unwrap();
            assert_eq!(est.value, 0.75);
        }
    }

    #[test]
    fn sup_matches_dense_grid_oracle() {
        // Oracle: brute-force max of |sin(10x)| over a 10^5-point grid.
        let (d, fam) = setup();
        let f = FnObject::scalar("sin10", |x| (10.0 * x).sin());
        let g = FnObject::scalar("zero", |_| 0.0);
        let mut oracle = 0.0f64;
        for j in 0..=100_000 {
            let x = j as f64 / 100_000.0;
            oracle = oracle.max((10.0 * x).sin().abs());
        }
        let region = d.whole_region();
        let est = sup_over_region(&f, &g, &fam, 0, &region, 6).unwrap();
        assert!((est.value - oracle).abs() < 1e-3, "{} vs {}", est.value, oracle);
    }

    #[test]
    fn rigorous_upper_requires_certificates() {
        let (d, fam) = setup();
        let f = FnObject::scalar("id", |x| x).with_lipschitz(1.0);
        let g = FnObject::scalar("zero", |_| 0.0);
        let region = d.neighborhood(&[0.5], 0).unwrap();
        assert!(sup_over_region(&f, &g, &fam, 0, &region, 2)
            .unwrap()
            .rigorous_upper
            .is_none());
        let g = g.with_lipschitz(0.0);
        let est = sup_over_region(&f, &g, &fam, 0, &region, 2).unwrap();
        let upper = est.rigorous_upper.unwrap();
        assert!(est.value <= upper);
        assert!((upper - (est.value + region.mesh(2) / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn continuous_pair_point_distance() {
        // Oracle: for continuous pairs the shrinking-ball limit equals the
        // pointwise distance, here |0.25 - 0.5| = 0.25.
        let (d, fam) = setup();
        let f = FnObject::scalar("sq", |x| x * x).with_lipschitz(2.0);
        let g = FnObject::scalar("id", |x| x).with_lipschitz(1.0);
        let profile =
            point_v_semidistance(&f, &g, &fam, 0, &d, &[0.5], &VOpts::default()).unwrap();
        assert!((profile.delta_hat - 0.25).abs() < 1e-3);
        assert!(profile.stalled);
    }

    #[test]
    fn indicator_near_boundary_point_stays_one() {
        // Every ball about 0 contains points of (0, 0.1), where the
        // indicator is 1; analytically the sup is 1 at every scale.
        let (d, fam) = setup();
        let f = FnObject::scalar("ind", |x| if x > 0.0 && x < 0.1 { 1.0 } else { 0.0 });
        let g = FnObject::scalar("zero", |_| 0.0);
        let profile =
            point_v_semidistance(&f, &g, &fam, 0, &d, &[0.0], &VOpts::default()).unwrap();
        assert_eq!(profile.delta_hat, 1.0);
    }

    #[test]
    fn identical_functions_all_scales_zero() {
        let (d, fam) = setup();
        let f = FnObject::scalar("f", |x| x.sin());
        let profile =
            point_v_semidistance(&f, &f, &fam, 0, &d, &[0.3], &VOpts::default()).unwrap();
        assert!(profile.estimates.iter().all(|e| e.value == 0.0));
        assert_eq!(profile.delta_hat, 0.0);
    }

    #[test]
    fn profile_is_non_increasing() {
        let (d, fam) = setup();
        let f = FnObject::scalar("bump", |x| (-(x - 0.3) * (x - 0.3) * 50.0).exp());
        let g = FnObject::scalar("zero", |_| 0.0);
        let profile =
            point_v_semidistance(&f, &g, &fam, 0, &d, &[0.6], &VOpts::default()).unwrap();
        for w in profile.estimates.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
    }

    #[test]
    fn empty_probe_set_yields_zero() {
        let (d, fam) = setup();
        let f = FnObject::scalar("id", |x| x);
        let g = FnObject::scalar("zero", |_| 0.0);
        let report =
            v_semidistance(&f, &g, &fam, 0, &d, &ProbeSet::empty(), &VOpts::default()).unwrap();
        assert_eq!(report.delta, 0.0);
        assert!(report.profiles.is_empty());
    }

    #[test]
    fn power_sequence_delta_pinned_at_one() {
        // sup of x^n over any left neighborhood of 1 is 1; a fine mesh near
        // the probe is needed for the sample sup to see it.
        let (d, fam) = setup();
        let opts = VOpts::default().with_base_depth(12).without_stall();
        let g = FnObject::scalar("pointwise-limit", |x| if x < 1.0 { 0.0 } else { 1.0 });
        let probes = ProbeSet::scalars(&d, &[1.0]).unwrap();
        for n in [1u32, 7, 50, 200] {
            let f = FnObject::scalar(format!("x^{n}"), move |x| x.powi(n as i32));
            let report = v_semidistance(&f, &g, &fam, 0, &d, &probes, &opts).unwrap();
            assert!(
                (report.delta - 1.0).abs() <= 0.05,
                "n={n}: delta={}",
                report.delta
            );
        }
    }

    #[test]
    fn report_delta_decomposes_over_probes() {
        let (d, fam) = setup();
        let f = FnObject::scalar("sq", |x| x * x).with_lipschitz(2.0);
        let g = FnObject::scalar("id", |x| x).with_lipschitz(1.0);
        let probes = ProbeSet::scalars(&d, &[0.2, 0.8]).unwrap();
        let report = v_semidistance(&f, &g, &fam, 0, &d, &probes, &VOpts::default()).unwrap();
        let max_hat = report
            .profiles
            .iter()
            .map(|p| p.delta_hat)
            .fold(0.0, f64::max);
        assert_eq!(report.delta, max_hat);
        // Continuous pair: delta equals the max pointwise gap.
        let oracle = (0.2f64 * 0.2 - 0.2).abs().max((0.8f64 * 0.8 - 0.8).abs());
        assert!((report.delta - oracle).abs() < 1e-3);
    }

    #[test]
    fn entourage_test_trinary() {
        let (d, fam) = setup();
        let probes = ProbeSet::scalars(&d, &[0.5]).unwrap();
        let f = FnObject::scalar("id", |x| x);
        let w = Entourage::new(0, 0.5).unwrap();
        let (v, _) = entourage_test(&f, &f, &fam, &w, &d, &probes, &VOpts::default()).unwrap();
        assert_eq!(v, Verdict::Holds);

        // x^n vs its pointwise limit at probe 1 violates W = (abs, 0.5).
        let opts = VOpts::default().with_base_depth(12).without_stall();
        let probes = ProbeSet::scalars(&d, &[1.0]).unwrap();
        let g = FnObject::scalar("pointwise-limit", |x| if x < 1.0 { 0.0 } else { 1.0 });
        let f = FnObject::scalar("x^8", |x| x.powi(8));
        let (v, report) = entourage_test(&f, &g, &fam, &w, &d, &probes, &opts).unwrap();
        assert_eq!(v, Verdict::Fails);
        assert!(report.delta > 0.9);

        // Continuous pair with max pointwise gap 0.1 under W = (abs, 0.2).
        let f = FnObject::scalar("shift", |x| x + 0.1).with_lipschitz(1.0);
        let g = FnObject::scalar("id", |x| x).with_lipschitz(1.0);
        let w = Entourage::new(0, 0.2).unwrap();
        let probes = ProbeSet::scalars(&d, &[0.2, 0.8]).unwrap();
        let (v, _) = entourage_test(&f, &g, &fam, &w, &d, &probes, &VOpts::default()).unwrap();
        assert_eq!(v, Verdict::Holds);
    }

    #[test]
    fn entourage_radius_must_be_positive() {
        assert!(Entourage::new(0, 0.0).is_err());
    }
}
