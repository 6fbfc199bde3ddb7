//! Built-in corpus of function families exercising the separation between
//! the convergence modes, the series rules, and the closure checks.
//!
//! Family constructors are pure: the same name and horizon always produce
//! evaluators with identical outputs.

use serde::Serialize;

use crate::convergence::SeqOpts;
use crate::error::{Error, Result};
use crate::space::{
    DomainSpec, FnObject, FnSequence, Point, PointSequence, ScalarSequence, SemidistanceFamily,
};
use crate::vmetric::VOpts;

pub const FAMILY_NAMES: &[&str] = &[
    "power-sequence",
    "moving-bump",
    "shrinking-indicator",
    "damped-oscillation",
    "damped-power-series",
    "dirichlet-kernel",
    "alternating",
    "step",
    "regulated-staircase",
];

/// Listing row for the `corpus` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub phenomena: &'static str,
}

/// A fully assembled family: domain, codomain semidistances, the sequence
/// or object under study, tuned estimator options, and default probes.
#[derive(Clone, Debug)]
pub struct Family {
    pub name: &'static str,
    pub domain: DomainSpec,
    pub family: SemidistanceFamily,
    pub member: usize,
    pub seq: Option<FnSequence>,
    /// Weight sequence for Abel summation, when the family carries one.
    pub weights: Option<ScalarSequence>,
    /// Candidate limit (the pointwise limit where one exists).
    pub limit: Option<FnObject>,
    /// Standalone exemplar for the closure checks.
    pub object: Option<FnObject>,
    pub default_probes: Vec<f64>,
    pub seq_opts: SeqOpts,
    /// Convergent point sequence for limit-interchange runs.
    pub point_seq: Option<PointSequence>,
    pub point_limit: Option<Point>,
}

pub fn corpus_families() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            name: "power-sequence",
            parameters: "horizon",
            phenomena: "x^n on [0,1]: pointwise holds, V pinned at 1 near the probe 1; \
                        interchange precondition fails along a_n = 1 - 1/n",
        },
        CorpusEntry {
            name: "moving-bump",
            parameters: "horizon",
            phenomena: "unit bump of radius 1/(2n) about 1/n: V holds at probe 0, \
                        locally-uniform fails at every fixed scale",
        },
        CorpusEntry {
            name: "shrinking-indicator",
            parameters: "horizon",
            phenomena: "indicator of (0, 1/n): pointwise zero limit, V stays at 1 at probe 0",
        },
        CorpusEntry {
            name: "damped-oscillation",
            parameters: "horizon",
            phenomena: "sin(nx)/n: uniform convergence, the whole mode chain holds",
        },
        CorpusEntry {
            name: "damped-power-series",
            parameters: "horizon",
            phenomena: "terms x^n/n^2: normal-rule hypotheses pass, partial sums V-converge",
        },
        CorpusEntry {
            name: "dirichlet-kernel",
            parameters: "horizon",
            phenomena: "terms sin(nx), weights 1/n on [0.5, 5.5]: Abel rule applies, \
                        limit (pi - x)/2",
        },
        CorpusEntry {
            name: "alternating",
            parameters: "horizon",
            phenomena: "terms (-1)^n, weights 1/(n+1): Abel rule, constant limit ln 2",
        },
        CorpusEntry {
            name: "step",
            parameters: "-",
            phenomena: "unit jump at 0.5: oscillation defect 1 at the jump, \
                        semi-local condition fails there for continuous approximants",
        },
        CorpusEntry {
            name: "regulated-staircase",
            parameters: "-",
            phenomena: "floor(4x)/4: piecewise-constant approximable away from the jumps",
        },
    ]
}

pub fn default_horizon(name: &str) -> usize {
    match name {
        "shrinking-indicator" => 100,
        "damped-power-series" => 400,
        "dirichlet-kernel" | "alternating" => 2000,
        _ => 200,
    }
}

fn unknown(name: &str) -> Error {
    Error::UnknownFamily {
        name: name.to_string(),
        available: FAMILY_NAMES.join(", "),
    }
}

fn unit_interval() -> DomainSpec {
    DomainSpec::interval(0.0, 1.0).expect("static domain")
}

fn bump(n: usize) -> FnObject {
    let n = n.max(1) as f64;
    let center = 1.0 / n;
    let radius = 0.5 / n;
    FnObject::scalar(format!("bump[{n}]"), move |x| {
        (1.0 - (x - center).abs() / radius).max(0.0)
    })
    .with_lipschitz(2.0 * n)
}

fn step_fn() -> FnObject {
    FnObject::scalar("step", |x| if x <= 0.5 { 1.0 } else { 0.0 })
}

fn staircase() -> FnObject {
    FnObject::scalar("staircase", |x| (4.0 * x).floor().min(4.0) / 4.0)
}

fn zero_limit() -> FnObject {
    FnObject::constant("zero", vec![0.0]).with_lipschitz(0.0)
}

/// Estimator tuning for profiles that plateau before dropping: run every
/// scale (no stall stop) with a mesh fine enough to see features of width
/// down to about 1/400 near the probes.
fn plateau_opts() -> SeqOpts {
    let mut o = SeqOpts::default();
    o.v = VOpts::default().with_base_depth(12).without_stall();
    o
}

/// Build the named family at the given horizon.
pub fn build(name: &str, horizon: usize) -> Result<Family> {
    let base = Family {
        name: "",
        domain: unit_interval(),
        family: SemidistanceFamily::scalar_abs(),
        member: 0,
        seq: None,
        weights: None,
        limit: None,
        object: None,
        default_probes: vec![],
        seq_opts: SeqOpts::default(),
        point_seq: None,
        point_limit: None,
    };
    let family = match name {
        "power-sequence" => Family {
            name: "power-sequence",
            seq: Some(FnSequence::new("power", horizon, |n| {
                FnObject::scalar(format!("x^{n}"), move |x: f64| x.powi(n as i32))
                    .with_lipschitz(n as f64)
            })),
            limit: Some(FnObject::scalar("pointwise-limit", |x| {
                if x < 1.0 {
                    0.0
                } else {
                    1.0
                }
            })),
            default_probes: vec![1.0],
            seq_opts: plateau_opts(),
            point_seq: Some(PointSequence::new("1-1/n", 100_000, |n| {
                vec![1.0 - 1.0 / n.max(1) as f64]
            })),
            point_limit: Some(vec![1.0]),
            ..base
        },
        "moving-bump" => Family {
            name: "moving-bump",
            seq: Some(FnSequence::new("bump", horizon, bump)),
            limit: Some(zero_limit()),
            default_probes: vec![0.0],
            seq_opts: plateau_opts(),
            point_seq: Some(PointSequence::new("1/n", 100_000, |n| {
                vec![1.0 / n.max(1) as f64]
            })),
            point_limit: Some(vec![0.0]),
            ..base
        },
        "shrinking-indicator" => Family {
            name: "shrinking-indicator",
            seq: Some(FnSequence::new("indicator", horizon, |n| {
                let hi = 1.0 / n.max(1) as f64;
                FnObject::scalar(format!("1_(0,{hi})"), move |x| {
                    if x > 0.0 && x < hi {
                        1.0
                    } else {
                        0.0
                    }
                })
            })),
            limit: Some(zero_limit()),
            default_probes: vec![0.0],
            seq_opts: plateau_opts(),
            ..base
        },
        "damped-oscillation" => Family {
            name: "damped-oscillation",
            seq: Some(FnSequence::new("damped", horizon, |n| {
                FnObject::scalar(format!("sin({n}x)/{n}"), move |x| {
                    if n == 0 {
                        0.0
                    } else {
                        (n as f64 * x).sin() / n as f64
                    }
                })
                .with_lipschitz(1.0)
            })),
            limit: Some(zero_limit()),
            default_probes: vec![0.3, 0.7],
            point_seq: Some(PointSequence::new("1/n", 100_000, |n| {
                vec![1.0 / n.max(1) as f64]
            })),
            point_limit: Some(vec![0.0]),
            ..base
        },
        "damped-power-series" => Family {
            name: "damped-power-series",
            seq: Some(FnSequence::new("damped-power", horizon, |n| {
                FnObject::scalar(format!("x^{n}/{n}^2"), move |x: f64| {
                    if n == 0 {
                        0.0
                    } else {
                        x.powi(n as i32) / (n * n) as f64
                    }
                })
            })),
            default_probes: vec![0.5, 0.9, 1.0],
            ..base
        },
        "dirichlet-kernel" => Family {
            name: "dirichlet-kernel",
            domain: DomainSpec::interval(0.5, 5.5)?,
            seq: Some(FnSequence::new("dirichlet", horizon, |n| {
                FnObject::scalar(format!("sin({n}x)"), move |x| (n as f64 * x).sin())
            })),
            weights: Some(ScalarSequence::new(FnSequence::new("1/n", horizon, |n| {
                let e = 1.0 / n.max(1) as f64;
                FnObject::scalar(format!("1/{}", n.max(1)), move |_| e)
            }))),
            default_probes: vec![1.0, 3.0, 5.0],
            ..base
        },
        "alternating" => Family {
            name: "alternating",
            seq: Some(FnSequence::new("alternating", horizon, |n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                FnObject::constant(format!("({sign})"), vec![sign]).with_lipschitz(0.0)
            })),
            weights: Some(ScalarSequence::new(FnSequence::new(
                "1/(n+1)",
                horizon,
                |n| {
                    let e = 1.0 / (n + 1) as f64;
                    FnObject::scalar(format!("1/{}", n + 1), move |_| e)
                },
            ))),
            default_probes: vec![0.5],
            ..base
        },
        "step" => Family {
            name: "step",
            object: Some(step_fn()),
            default_probes: vec![0.5],
            ..base
        },
        "regulated-staircase" => Family {
            name: "regulated-staircase",
            object: Some(staircase()),
            default_probes: vec![0.1, 0.6, 0.9],
            ..base
        },
        _ => return Err(unknown(name)),
    };
    Ok(family)
}

/// Single-object lookup: the n-th member of a sequence family, a closure
/// exemplar, or a parameterized primitive (`const:c`, `linear:a,b` meaning
/// `a + b*x`, `sine`).
pub fn lookup_object(name: &str, n: usize) -> Result<FnObject> {
    if let Some(v) = name.strip_prefix("const:") {
        let c: f64 = v
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad constant `{v}`")))?;
        return Ok(FnObject::constant(name.to_string(), vec![c]).with_lipschitz(0.0));
    }
    if let Some(v) = name.strip_prefix("linear:") {
        let parts: Vec<&str> = v.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidSpec(format!(
                "linear wants `linear:a,b`, got `{name}`"
            )));
        }
        let a: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad coefficient `{}`", parts[0])))?;
        let b: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad coefficient `{}`", parts[1])))?;
        return Ok(FnObject::scalar(name.to_string(), move |x| a + b * x).with_lipschitz(b.abs()));
    }
    match name {
        "sine" => Ok(FnObject::scalar("sine", |x: f64| x.sin()).with_lipschitz(1.0)),
        "step" => Ok(step_fn()),
        "regulated-staircase" => Ok(staircase()),
        _ => {
            let fam = build(name, default_horizon(name))?;
            match (fam.seq, fam.object) {
                (Some(seq), _) => Ok(seq.term(n)),
                (None, Some(obj)) => Ok(obj),
                _ => Err(unknown(name)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_lookup_is_cube_at_three() {
        let f = lookup_object("power-sequence", 3).unwrap();
        assert_eq!(f.eval(&[0.5]).unwrap(), vec![0.125]);
        assert_eq!(f.eval(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn moving_bump_geometry() {
        // n = 4: support radius 1/8 about 1/4, peak 1.
        let f = lookup_object("moving-bump", 4).unwrap();
        assert_eq!(f.eval(&[0.25]).unwrap(), vec![1.0]);
        assert_eq!(f.eval(&[0.25 - 0.125]).unwrap(), vec![0.0]);
        assert_eq!(f.eval(&[0.25 + 0.125]).unwrap(), vec![0.0]);
        assert!((f.eval(&[0.25 + 0.0625]).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_name_lists_available() {
        let err = build("no-such-family", 10).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("no-such-family"));
        assert!(msg.contains("power-sequence"));
        assert!(msg.contains("regulated-staircase"));
    }

    #[test]
    fn constructors_are_deterministic() {
        let a = build("damped-oscillation", 50).unwrap();
        let b = build("damped-oscillation", 50).unwrap();
        for n in [0usize, 1, 17, 50] {
            for x in [0.0, 0.33, 1.0] {
                assert_eq!(
                    a.seq.as_ref().unwrap().term(n).eval(&[x]).unwrap(),
                    b.seq.as_ref().unwrap().term(n).eval(&[x]).unwrap()
                );
            }
        }
    }

    #[test]
    fn listing_covers_required_families() {
        let listed: Vec<&str> = corpus_families().iter().map(|e| e.name).collect();
        for required in FAMILY_NAMES {
            assert!(listed.contains(required), "missing {required}");
        }
    }

    #[test]
    fn parameterized_primitives() {
        let c = lookup_object("const:2.5", 0).unwrap();
        assert_eq!(c.eval(&[0.7]).unwrap(), vec![2.5]);
        let l = lookup_object("linear:1.0,-2.0", 0).unwrap();
        assert_eq!(l.eval(&[0.25]).unwrap(), vec![0.5]);
        assert!(lookup_object("linear:1.0", 0).is_err());
        assert!(lookup_object("const:abc", 0).is_err());
    }

    #[test]
    fn dirichlet_domain_and_weights() {
        let fam = build("dirichlet-kernel", 100).unwrap();
        assert!(!fam.domain.contains(&[0.0]));
        assert!(fam.domain.contains(&[5.5]));
        let w = fam.weights.unwrap();
        assert_eq!(w.value(4, &[1.0]).unwrap(), 0.25);
    }
}
