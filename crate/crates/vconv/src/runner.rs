//! Operation dispatch shared by the command-line binary and the C ABI:
//! a named operation plus a `RunConfig` in, a verdict plus a typed report
//! out.

use serde::Serialize;

use crate::closure::{self, CoverPiece, PatchOpts};
use crate::config::RunConfig;
use crate::convergence::{self, AbelOpts, CauchyWitness, InterchangeOpts, SeriesOpts};
use crate::corpus::{self, CorpusEntry, Family};
use crate::error::{Error, Result};
use crate::space::{ProbeSet, Region};
use crate::verdict::Verdict;
use crate::vmetric::{self, Entourage};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    VDist,
    Classify,
    Cauchy,
    Series,
    Abel,
    Interchange,
    Patch,
    Corpus,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::VDist => "vdist",
            Op::Classify => "classify",
            Op::Cauchy => "cauchy",
            Op::Series => "series",
            Op::Abel => "abel",
            Op::Interchange => "interchange",
            Op::Patch => "patch",
            Op::Corpus => "corpus",
        }
    }

    pub fn parse(name: &str) -> Option<Op> {
        Some(match name {
            "vdist" => Op::VDist,
            "classify" => Op::Classify,
            "cauchy" => Op::Cauchy,
            "series" => Op::Series,
            "abel" => Op::Abel,
            "interchange" => Op::Interchange,
            "patch" => Op::Patch,
            "corpus" => Op::Corpus,
            _ => return None,
        })
    }
}

/// Typed result of one operation.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum OpReport {
    VDist(vmetric::VDistanceReport),
    Classify(convergence::ConvergenceVerdict),
    Cauchy(Vec<CauchyWitness>),
    Series(convergence::SeriesReport),
    Abel(convergence::AbelReport),
    Interchange(convergence::InterchangeReport),
    Patch(closure::PatchReport),
    Corpus(Vec<CorpusEntry>),
}

fn family_for(cfg: &RunConfig) -> Result<Family> {
    let name = cfg
        .family
        .as_deref()
        .ok_or_else(|| Error::InvalidSpec("this operation needs --family".into()))?;
    let horizon = cfg.horizon.unwrap_or_else(|| corpus::default_horizon(name));
    corpus::build(name, horizon)
}

fn probes_for(cfg: &RunConfig, fam: &Family) -> Result<ProbeSet> {
    let coords: &[f64] = match &cfg.probes {
        Some(p) => p,
        None => &fam.default_probes,
    };
    if coords.is_empty() {
        return Err(Error::InvalidSpec("no probe points given".into()));
    }
    ProbeSet::scalars(&fam.domain, coords)
}

/// Run one operation. The verdict controls the process exit code; the
/// report carries the evidence.
pub fn run(op: Op, cfg: &RunConfig) -> Result<(Verdict, OpReport)> {
    cfg.validate()?;
    match op {
        Op::Corpus => Ok((Verdict::Holds, OpReport::Corpus(corpus::corpus_families()))),
        Op::VDist => {
            let fam = family_for(cfg)?;
            let seq = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let limit = fam
                .limit
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no limit", fam.name)))?;
            let f = seq.term(cfg.index.unwrap_or(seq.horizon));
            let probes = probes_for(cfg, &fam)?;
            let member = cfg.member.unwrap_or(fam.member);
            let vopts = cfg.v_opts(fam.seq_opts.v);
            match cfg.epsilon {
                Some(eps) => {
                    let w = Entourage::new(member, eps)?;
                    let (verdict, report) = vmetric::entourage_test(
                        &f, limit, &fam.family, &w, &fam.domain, &probes, &vopts,
                    )?;
                    Ok((verdict, OpReport::VDist(report)))
                }
                None => {
                    let report = vmetric::v_semidistance(
                        &f, limit, &fam.family, member, &fam.domain, &probes, &vopts,
                    )?;
                    Ok((Verdict::Holds, OpReport::VDist(report)))
                }
            }
        }
        Op::Classify => {
            let fam = family_for(cfg)?;
            let seq = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let limit = fam
                .limit
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no limit", fam.name)))?;
            let probes = probes_for(cfg, &fam)?;
            let member = cfg.member.unwrap_or(fam.member);
            let opts = cfg.seq_opts(fam.seq_opts);
            let report = convergence::classify(
                seq, limit, &fam.family, member, &fam.domain, &probes, &opts,
            )?;
            // Exit status follows the V mode; the full chain is in the report.
            let verdict = report.v.verdict;
            Ok((verdict, OpReport::Classify(report)))
        }
        Op::Cauchy => {
            let fam = family_for(cfg)?;
            let seq = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let probes = probes_for(cfg, &fam)?;
            let member = cfg.member.unwrap_or(fam.member);
            let opts = cfg.seq_opts(fam.seq_opts);
            let mut rows = Vec::new();
            let mut verdict = Verdict::Holds;
            for a in probes.points() {
                let w = convergence::v_cauchy_sequence(
                    seq,
                    &fam.family,
                    member,
                    &fam.domain,
                    a,
                    opts.epsilon,
                    &opts,
                )?;
                verdict = match (verdict, w.verdict) {
                    (_, Verdict::Fails) | (Verdict::Fails, _) => Verdict::Fails,
                    (_, Verdict::Inconclusive) | (Verdict::Inconclusive, _) => {
                        Verdict::Inconclusive
                    }
                    _ => Verdict::Holds,
                };
                rows.push(w);
            }
            Ok((verdict, OpReport::Cauchy(rows)))
        }
        Op::Series => {
            let fam = family_for(cfg)?;
            let terms = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let probes = probes_for(cfg, &fam)?;
            let member = cfg.member.unwrap_or(fam.member);
            let opts = SeriesOpts {
                seq: cfg.seq_opts(fam.seq_opts),
                ..SeriesOpts::default()
            };
            let report = convergence::normal_series_test(
                terms, &fam.family, member, &fam.domain, &probes, &opts,
            )?;
            let verdict = report.verdict;
            Ok((verdict, OpReport::Series(report)))
        }
        Op::Abel => {
            let fam = family_for(cfg)?;
            let terms = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let weights = fam.weights.as_ref().ok_or_else(|| {
                Error::InvalidSpec(format!("{} has no weight sequence", fam.name))
            })?;
            let probes = probes_for(cfg, &fam)?;
            let member = cfg.member.unwrap_or(fam.member);
            let report = convergence::abel_series(
                terms,
                weights,
                &fam.family,
                member,
                &fam.domain,
                &probes,
                &AbelOpts::default(),
            )?;
            let verdict = report.verdict;
            Ok((verdict, OpReport::Abel(report)))
        }
        Op::Interchange => {
            let fam = family_for(cfg)?;
            let seq = fam
                .seq
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no sequence", fam.name)))?;
            let g = fam
                .limit
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec(format!("{} has no limit", fam.name)))?;
            let a_seq = fam.point_seq.as_ref().ok_or_else(|| {
                Error::InvalidSpec(format!("{} has no point sequence", fam.name))
            })?;
            let a_limit = fam.point_limit.as_ref().ok_or_else(|| {
                Error::InvalidSpec(format!("{} has no point limit", fam.name))
            })?;
            let member = cfg.member.unwrap_or(fam.member);
            let opts = InterchangeOpts {
                seq: cfg.seq_opts(fam.seq_opts),
                ..InterchangeOpts::default()
            };
            let report = convergence::interchange_check(
                seq, g, a_seq, a_limit, &fam.family, member, &fam.domain, &opts,
            )?;
            let verdict = report.verdict;
            Ok((verdict, OpReport::Interchange(report)))
        }
        Op::Patch => {
            let target_name = cfg
                .target
                .as_deref()
                .ok_or_else(|| Error::InvalidSpec("patch needs a target object".into()))?;
            let target = corpus::lookup_object(target_name, cfg.index.unwrap_or(0))?;
            let specs = cfg
                .cover
                .as_ref()
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Error::InvalidSpec("patch needs a nonempty cover".into()))?;
            let fam = match cfg.family.as_deref() {
                Some(name) => corpus::build(name, corpus::default_horizon(name))?,
                None => corpus::build("step", 1)?,
            };
            let pieces: Vec<CoverPiece> = specs
                .iter()
                .map(|s| {
                    Ok(CoverPiece {
                        region: Region::ball(&fam.domain, s.center.clone(), s.radius),
                        approximant: corpus::lookup_object(&s.approximant, s.index)?,
                    })
                })
                .collect::<Result<_>>()?;
            let epsilon = cfg.epsilon.unwrap_or(0.05);
            let report = closure::patch_defect(
                &pieces,
                &target,
                &fam.family,
                cfg.member.unwrap_or(fam.member),
                epsilon,
                &PatchOpts::default(),
            )?;
            let verdict = report.verdict;
            Ok((verdict, OpReport::Patch(report)))
        }
    }
}
