//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `--nocapture` to see the lines for passing criteria.

use std::fs;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vconv::closure::{patch, patch_defect, piece_index, CoverPiece, PatchOpts};
use vconv::convergence::{
    self, classify, normal_series_test, v_cauchy_sequence, v_limit_test, SeqOpts, SeriesOpts,
};
use vconv::corpus;
use vconv::space::{DomainSpec, FnObject, ProbeSet, Region, SemidistanceFamily};
use vconv::verdict::Verdict;
use vconv::vmetric::{self, VOpts};

fn report(n: u32, name: &str, r: Result<(), String>) {
    match &r {
        Ok(()) => println!("acceptance {n} ({name}): PASS"),
        Err(e) => println!("acceptance {n} ({name}): FAIL: {e}"),
    }
    if let Err(e) = r {
        panic!("acceptance {n} ({name}) failed: {e}");
    }
}

fn ensure(cond: bool, msg: impl Fn() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit() -> (DomainSpec, SemidistanceFamily) {
    (
        DomainSpec::interval(0.0, 1.0).unwrap(),
        SemidistanceFamily::scalar_abs(),
    )
}

/// Smooth, Lipschitz-certified functions on [0,1].
fn smooth_pool() -> Vec<FnObject> {
    let mut pool = vec![
        FnObject::scalar("sin", |x: f64| x.sin()).with_lipschitz(1.0),
        FnObject::scalar("cos2x", |x: f64| (2.0 * x).cos()).with_lipschitz(2.0),
        FnObject::scalar("exp-neg", |x: f64| (-x).exp()).with_lipschitz(1.0),
    ];
    for (a, b, c) in [
        (0.0, 1.0, 0.0),
        (0.5, -1.0, 0.5),
        (-0.3, 0.2, 1.0),
        (1.0, 0.0, -2.0),
    ] {
        pool.push(
            FnObject::scalar(format!("q({a},{b},{c})"), move |x| a + b * x + c * x * x)
                .with_lipschitz(b.abs() + 2.0 * c.abs()),
        );
    }
    pool
}

/// Mixed pool including discontinuous corpus members.
fn mixed_pool() -> Vec<FnObject> {
    let mut pool = smooth_pool();
    for n in [2usize, 3, 5] {
        pool.push(corpus::lookup_object("power-sequence", n).unwrap());
        pool.push(corpus::lookup_object("moving-bump", n).unwrap());
    }
    pool.push(corpus::lookup_object("step", 0).unwrap());
    pool.push(corpus::lookup_object("regulated-staircase", 0).unwrap());
    pool
}

fn delta(
    f: &FnObject,
    g: &FnObject,
    domain: &DomainSpec,
    fam: &SemidistanceFamily,
    probes: &ProbeSet,
    opts: &VOpts,
) -> f64 {
    vmetric::v_semidistance(f, g, fam, 0, domain, probes, opts)
        .unwrap()
        .delta
}

#[test]
fn criterion_01_semidistance_laws() {
    let run = || -> Result<(), String> {
        let (d, fam) = unit();
        let probes = ProbeSet::scalars(&d, &[0.2, 0.8]).unwrap();
        let opts = VOpts::default();
        let pool = mixed_pool();

        for f in &pool {
            let dff = delta(f, f, &d, &fam, &probes, &opts);
            ensure(dff == 0.0, || format!("delta({},same)={dff}, want 0", f.name))?;
        }
        let mut pairs = 0usize;
        for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                let fg = delta(&pool[i], &pool[j], &d, &fam, &probes, &opts);
                let gf = delta(&pool[j], &pool[i], &d, &fam, &probes, &opts);
                ensure(fg == gf, || {
                    format!("asymmetry {} vs {}: {fg} != {gf}", pool[i].name, pool[j].name)
                })?;
                pairs += 1;
            }
        }
        ensure(pairs >= 50, || format!("only {pairs} pairs"))?;

        // Triangle inequality on triples of smooth functions; a tight stall
        // tolerance keeps each estimate within ~1e-8 of its limit.
        let tight = VOpts {
            tol_stall: 1e-8,
            ..VOpts::default()
        };
        let smooth = smooth_pool();
        let mut triples = 0usize;
        for i in 0..smooth.len() {
            for j in i + 1..smooth.len() {
                for k in j + 1..smooth.len() {
                    let fg = delta(&smooth[i], &smooth[j], &d, &fam, &probes, &tight);
                    let gh = delta(&smooth[j], &smooth[k], &d, &fam, &probes, &tight);
                    let fh = delta(&smooth[i], &smooth[k], &d, &fam, &probes, &tight);
                    ensure(fh <= fg + gh + 2e-6, || {
                        format!(
                            "triangle broken on ({},{},{}): {fh} > {fg} + {gh} + 2e-6",
                            smooth[i].name, smooth[j].name, smooth[k].name
                        )
                    })?;
                    triples += 1;
                }
            }
        }
        ensure(triples >= 20, || format!("only {triples} triples"))?;
        Ok(())
    };
    report(1, "semidistance laws", run());
}

#[test]
fn criterion_02_comparison_chain() {
    let run = || -> Result<(), String> {
        for name in [
            "power-sequence",
            "moving-bump",
            "shrinking-indicator",
            "damped-oscillation",
        ] {
            let f = corpus::build(name, corpus::default_horizon(name)).unwrap();
            let seq = f.seq.as_ref().unwrap();
            let limit = f.limit.as_ref().unwrap();
            let probes = ProbeSet::scalars(&f.domain, &f.default_probes).unwrap();
            let opts = f.seq_opts;
            for n in [1usize, 5, 20, 50] {
                let fnn = seq.term(n);
                let mut pointwise = 0.0f64;
                let mut ball_sup = 0.0f64;
                for a in probes.points() {
                    pointwise = pointwise.max(
                        f.family
                            .eval(0, &fnn.eval(a).unwrap(), &limit.eval(a).unwrap())
                            .unwrap(),
                    );
                    let region = f.domain.neighborhood(a, 0).unwrap();
                    ball_sup = ball_sup.max(
                        vmetric::sup_over_region(
                            &fnn, limit, &f.family, 0, &region, opts.v.base_depth,
                        )
                        .unwrap()
                        .value,
                    );
                }
                let dlt = delta(&fnn, limit, &f.domain, &f.family, &probes, &opts.v);
                ensure(pointwise <= dlt + 1e-6, || {
                    format!("{name} n={n}: pointwise {pointwise} > delta {dlt} + 1e-6")
                })?;
                ensure(dlt <= ball_sup + 1e-6, || {
                    format!("{name} n={n}: delta {dlt} > ball sup {ball_sup} + 1e-6")
                })?;
            }
            let verdicts =
                classify(seq, limit, &f.family, 0, &f.domain, &probes, &opts).unwrap();
            ensure(verdicts.chain_is_monotone(), || {
                format!("{name}: mode chain not monotone: {:?}", verdicts.chain())
            })?;
        }
        Ok(())
    };
    report(2, "comparison chain", run());
}

#[test]
fn criterion_03_continuous_pair_equality() {
    let run = || -> Result<(), String> {
        let (d, fam) = unit();
        let pool = smooth_pool();
        let probes = [0.1, 0.3, 0.5, 0.7, 0.9];
        let mut pairs = 0usize;
        for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                if pairs >= 20 {
                    break;
                }
                for &a in &probes {
                    let profile = vmetric::point_v_semidistance(
                        &pool[i],
                        &pool[j],
                        &fam,
                        0,
                        &d,
                        &[a],
                        &VOpts::default(),
                    )
                    .unwrap();
                    let want = fam
                        .eval(
                            0,
                            &pool[i].eval(&[a]).unwrap(),
                            &pool[j].eval(&[a]).unwrap(),
                        )
                        .unwrap();
                    ensure((profile.delta_hat - want).abs() <= 1e-3, || {
                        format!(
                            "({},{}) at {a}: delta {} vs pointwise {want}",
                            pool[i].name, pool[j].name, profile.delta_hat
                        )
                    })?;
                }
                pairs += 1;
            }
        }
        ensure(pairs >= 20, || format!("only {pairs} pairs"))?;
        Ok(())
    };
    report(3, "continuous-pair equality", run());
}

#[test]
fn criterion_04_closedness_separation() {
    let run = || -> Result<(), String> {
        // Power sequence: delta pinned at 1 for every n, V fails while
        // pointwise holds.
        let f = corpus::build("power-sequence", 200).unwrap();
        let probes = ProbeSet::scalars(&f.domain, &[1.0]).unwrap();
        let verdicts = classify(
            f.seq.as_ref().unwrap(),
            f.limit.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &probes,
            &f.seq_opts,
        )
        .unwrap();
        for (n, v) in verdicts.v.profile.iter().enumerate().skip(1) {
            ensure((v - 1.0).abs() <= 0.05, || {
                format!("power-sequence delta at n={n} is {v}, want 1 +- 0.05")
            })?;
        }
        ensure(
            verdicts.v.verdict == Verdict::Fails && verdicts.pointwise.verdict == Verdict::Holds,
            || format!("power-sequence chain: {:?}", verdicts.chain()),
        )?;

        let f = corpus::build("moving-bump", 200).unwrap();
        let probes = ProbeSet::scalars(&f.domain, &[0.0]).unwrap();
        let verdicts = classify(
            f.seq.as_ref().unwrap(),
            f.limit.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &probes,
            &f.seq_opts,
        )
        .unwrap();
        ensure(
            verdicts.v.verdict == Verdict::Holds
                && verdicts.locally_uniform.verdict == Verdict::Fails,
            || format!("moving-bump chain: {:?}", verdicts.chain()),
        )?;

        let f = corpus::build("shrinking-indicator", 100).unwrap();
        let probes = ProbeSet::scalars(&f.domain, &[0.0]).unwrap();
        let verdicts = classify(
            f.seq.as_ref().unwrap(),
            f.limit.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &probes,
            &f.seq_opts,
        )
        .unwrap();
        ensure(
            verdicts.pointwise.verdict == Verdict::Holds && verdicts.v.verdict == Verdict::Fails,
            || format!("shrinking-indicator chain: {:?}", verdicts.chain()),
        )?;
        Ok(())
    };
    report(4, "limit-function separation", run());
}

#[test]
fn criterion_05_criterion_coherence() {
    let run = || -> Result<(), String> {
        let eps = 0.1;
        for name in [
            "power-sequence",
            "moving-bump",
            "shrinking-indicator",
            "damped-oscillation",
        ] {
            let f = corpus::build(name, corpus::default_horizon(name)).unwrap();
            let seq = f.seq.as_ref().unwrap();
            let probes = ProbeSet::scalars(&f.domain, &f.default_probes).unwrap();
            let opts = SeqOpts {
                epsilon: eps / 2.0,
                ..f.seq_opts
            };
            let limit_holds = v_limit_test(
                seq,
                f.limit.as_ref().unwrap(),
                &f.family,
                0,
                &f.domain,
                &probes,
                &opts,
            )
            .unwrap()
            .verdict
            .holds();
            if !limit_holds {
                continue;
            }
            for a in probes.points() {
                let w =
                    v_cauchy_sequence(seq, &f.family, 0, &f.domain, a, eps, &f.seq_opts).unwrap();
                ensure(w.verdict.holds(), || {
                    format!("{name}: limit holds at {} but criterion verdict is {}", eps / 2.0, w.verdict)
                })?;
            }
        }

        // Refutation with a concrete witness on the power sequence.
        let f = corpus::build("power-sequence", 200).unwrap();
        let w = v_cauchy_sequence(
            f.seq.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &[1.0],
            0.4,
            &SeqOpts::default(),
        )
        .unwrap();
        ensure(w.verdict == Verdict::Fails, || {
            format!("power-sequence criterion verdict {}, want fails", w.verdict)
        })?;
        let witness = w.failure.ok_or("missing witness")?;
        ensure(witness.deviation > 0.4, || {
            format!("witness deviation {} <= 0.4", witness.deviation)
        })?;
        ensure(witness.x[0] >= 0.0 && witness.x[0] <= 1.0, || {
            format!("witness point {:?} outside domain", witness.x)
        })?;
        Ok(())
    };
    report(5, "criterion coherence", run());
}

#[test]
fn criterion_06_normal_rule() {
    let run = || -> Result<(), String> {
        let (d, fam) = unit();
        let probes = ProbeSet::scalars(&d, &[0.5, 0.9, 1.0]).unwrap();
        let terms = corpus::build("damped-power-series", 400).unwrap().seq.unwrap();
        let rep = normal_series_test(&terms, &fam, 0, &d, &probes, &SeriesOpts::default())
            .map_err(|e| e.to_string())?;
        ensure(rep.hypothesis_ok, || "damped series hypothesis rejected".into())?;
        let v_limit = rep.v_limit.as_ref().ok_or("missing limit check")?;
        ensure(v_limit.verdict.holds() && v_limit.epsilon == 1e-2, || {
            format!("partial sums verdict {} at eps {}", v_limit.verdict, v_limit.epsilon)
        })?;

        let undamped = corpus::build("power-sequence", 400).unwrap().seq.unwrap();
        let rep = normal_series_test(&undamped, &fam, 0, &d, &probes, &SeriesOpts::default())
            .map_err(|e| e.to_string())?;
        ensure(!rep.hypothesis_ok, || "undamped hypothesis accepted".into())?;
        ensure(
            rep.verdict == Verdict::Inconclusive && rep.v_limit.is_none(),
            || format!("undamped series claims a conclusion: {}", rep.verdict),
        )?;
        Ok(())
    };
    report(6, "normal series rule", run());
}

#[test]
fn criterion_07_abel_rule() {
    let run = || -> Result<(), String> {
        for name in ["dirichlet-kernel", "alternating"] {
            let f = corpus::build(name, 2000).unwrap();
            let probes = ProbeSet::scalars(&f.domain, &f.default_probes).unwrap();
            let rep = convergence::abel_series(
                f.seq.as_ref().unwrap(),
                f.weights.as_ref().unwrap(),
                &f.family,
                0,
                &f.domain,
                &probes,
                &convergence::AbelOpts::default(),
            )
            .map_err(|e| e.to_string())?;
            ensure(rep.identity_ok, || format!("{name}: summation identity broken"))?;
            for row in &rep.rows {
                ensure(row.max_rel_disagreement <= 1e-10, || {
                    format!("{name} at {:?}: relative disagreement {}", row.probe, row.max_rel_disagreement)
                })?;
            }
            if name == "dirichlet-kernel" {
                ensure(rep.verdict.holds(), || format!("{name} verdict {}", rep.verdict))?;
                for row in &rep.rows {
                    let x = row.probe[0];
                    let want = (std::f64::consts::PI - x) / 2.0;
                    ensure((row.value[0] - want).abs() <= 1e-2, || {
                        format!("{name} at {x}: value {} vs closed form {want}", row.value[0])
                    })?;
                    ensure(row.oscillation_defect <= 1e-2, || {
                        format!("{name} at {x}: oscillation defect {}", row.oscillation_defect)
                    })?;
                }
            }
        }
        Ok(())
    };
    report(7, "weighted series rule", run());
}

#[test]
fn criterion_08_interchange() {
    let run = || -> Result<(), String> {
        let f = corpus::build("moving-bump", 200).unwrap();
        let opts = convergence::InterchangeOpts {
            seq: f.seq_opts,
            ..convergence::InterchangeOpts::default()
        };
        let rep = convergence::interchange_check(
            f.seq.as_ref().unwrap(),
            f.limit.as_ref().unwrap(),
            f.point_seq.as_ref().unwrap(),
            f.point_limit.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        ensure(rep.discrepancy <= 1e-6 && rep.verdict.holds(), || {
            format!("moving-bump: discrepancy {}, verdict {}", rep.discrepancy, rep.verdict)
        })?;

        let f = corpus::build("power-sequence", 200).unwrap();
        let opts = convergence::InterchangeOpts {
            seq: f.seq_opts,
            ..convergence::InterchangeOpts::default()
        };
        let rep = convergence::interchange_check(
            f.seq.as_ref().unwrap(),
            f.limit.as_ref().unwrap(),
            f.point_seq.as_ref().unwrap(),
            f.point_limit.as_ref().unwrap(),
            &f.family,
            0,
            &f.domain,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        ensure(!rep.precondition.holds(), || "power-sequence precondition passed".into())?;
        ensure((rep.lhs[0] - 1.0).abs() <= 1e-3, || {
            format!("power-sequence LHS {} not within 1e-3 of 1", rep.lhs[0])
        })?;
        ensure(rep.rhs[0].abs() <= 1e-3, || {
            format!("power-sequence RHS {} not within 1e-3 of 0", rep.rhs[0])
        })?;
        Ok(())
    };
    report(8, "limit interchange", run());
}

#[test]
fn criterion_09_patching() {
    let run = || -> Result<(), String> {
        let (d, fam) = unit();
        let target = FnObject::scalar("sin", |x: f64| x.sin());
        let pieces: Vec<CoverPiece> = [0.1f64, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&c| CoverPiece {
                region: Region::ball(&d, vec![c], 0.15),
                approximant: FnObject::scalar(format!("taylor@{c}"), move |x| {
                    c.sin() + c.cos() * (x - c)
                }),
            })
            .collect();
        let rep = patch_defect(&pieces, &target, &fam, 0, 0.05, &PatchOpts::default())
            .map_err(|e| e.to_string())?;
        for row in &rep.rows {
            ensure(row.approx_defect <= 0.05, || {
                format!("piece {} defect {}", row.index, row.approx_defect)
            })?;
        }

        // Dense-grid sup of d(patch, target).
        let g = patch(&pieces).map_err(|e| e.to_string())?;
        let mut sup = 0.0f64;
        for i in 0..=10_000 {
            let x = [i as f64 / 10_000.0];
            let diff = (g.eval(&x).map_err(|e| e.to_string())?[0] - x[0].sin()).abs();
            sup = sup.max(diff);
        }
        ensure(sup <= 0.05, || format!("grid sup {sup} exceeds 0.05"))?;

        // First-match semantics, bitwise, on seeded random points.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..1.0)];
            let k = piece_index(&pieces, &x).ok_or_else(|| format!("{x:?} uncovered"))?;
            let got = g.eval(&x).map_err(|e| e.to_string())?[0];
            let want = pieces[k].approximant.eval(&x).map_err(|e| e.to_string())?[0];
            ensure(got.to_bits() == want.to_bits(), || {
                format!("patch at {x:?} is {got}, piece {k} gives {want}")
            })?;
        }
        Ok(())
    };
    report(9, "cover patching", run());
}

#[test]
fn criterion_10_cli_determinism() {
    let run = || -> Result<(), String> {
        let dir = std::env::temp_dir().join("vconv-acceptance");
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let cover = dir.join("cover.json");
        let pieces: Vec<serde_json::Value> = [0.1f64, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&c| {
                serde_json::json!({
                    "center": [c],
                    "radius": 0.15,
                    "approximant": format!("linear:{},{}", c.sin() - c * c.cos(), c.cos()),
                })
            })
            .collect();
        fs::write(&cover, serde_json::to_string(&pieces).unwrap()).map_err(|e| e.to_string())?;
        let cover = cover.to_str().unwrap().to_owned();

        let invocations: Vec<Vec<String>> = vec![
            vec!["vdist", "--family", "damped-oscillation", "--index", "40", "--probes", "0.3"],
            vec!["classify", "--family", "damped-oscillation", "--horizon", "60", "--probes", "0.3", "--eps", "0.05"],
            vec!["cauchy", "--family", "damped-oscillation", "--horizon", "60", "--probes", "0.3", "--eps", "0.1"],
            vec!["series", "--family", "damped-power-series", "--horizon", "80"],
            vec!["abel", "--family", "alternating", "--horizon", "200"],
            vec!["interchange", "--family", "moving-bump", "--horizon", "80"],
            vec!["patch", "--target", "sine", "--cover", &cover, "--eps", "0.05"],
            vec!["corpus"],
        ]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();

        for args in &invocations {
            let runs: Vec<_> = (0..2)
                .map(|_| {
                    Command::new(env!("CARGO_BIN_EXE_vconv"))
                        .args(args)
                        .output()
                        .expect("binary runs")
                })
                .collect();
            ensure(runs[0].status.code() == runs[1].status.code(), || {
                format!("{}: exit codes differ", args[0])
            })?;
            ensure(!runs[0].stdout.is_empty(), || {
                format!("{}: empty report", args[0])
            })?;
            ensure(runs[0].stdout == runs[1].stdout, || {
                format!("{}: reports differ between runs", args[0])
            })?;
            ensure(runs[0].status.code().map_or(false, |c| c <= 2), || {
                format!("{}: unexpected exit {:?}: {}", args[0], runs[0].status.code(),
                        String::from_utf8_lossy(&runs[0].stderr))
            })?;
        }
        Ok(())
    };
    report(10, "cli determinism", run());
}
