//! Convergence-mode classification, the sequence form of the V-convergence
//! criterion, series rules (normal and Abel), and the limit-interchange
//! check.
//!
//! Every quantifier over infinitely many indices, points, or scales is
//! truncated at configured horizons, so verdicts are trinary and `holds`
//! always means "holds up to the horizon" with the evidence recorded.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::closure::{oscillation_defect, OscOpts};
use crate::error::{Error, Result};
use crate::space::{
    point_key, DomainSpec, FnObject, FnSequence, Point, PointSequence, ProbeSet, ScalarSequence,
    SemidistanceFamily,
};
use crate::vmetric::{self, VOpts};
use crate::verdict::Verdict;

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

/// Options for sequence-level checks.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SeqOpts {
    /// Tolerance for the convergence statements under test.
    pub epsilon: f64,
    /// Minimum trailing span a "holds" verdict must clear.
    pub min_tail: usize,
    /// Dead band around epsilon separating fails from inconclusive.
    pub margin: f64,
    /// Tail-window width used for stabilization and deviation estimates.
    pub tail_window: usize,
    /// How many consecutive indices past the candidate start the
    /// Cauchy-criterion search examines.
    pub probe_span: usize,
    /// Fixed scale used as the locally-uniform proxy ball.
    pub local_scale: u32,
    /// Sampling depth for whole-domain sup estimates.
    pub uniform_depth: u32,
    /// A tail window counts as stabilized when its spread is at most
    /// `stab_frac * epsilon` and it shows no one-sided drift.
    pub stab_frac: f64,
    /// Minimal total one-sided drift treated as evidence that a tail is
    /// still moving (guards against horizon-truncation artifacts).
    pub drift_tol: f64,
    pub v: VOpts,
}

impl Default for SeqOpts {
    fn default() -> Self {
        SeqOpts {
            epsilon: 1e-2,
            min_tail: 16,
            margin: 1e-6,
            tail_window: 16,
            probe_span: 8,
            local_scale: 0,
            uniform_depth: 10,
            stab_frac: 0.5,
            drift_tol: 1e-9,
            v: VOpts::default(),
        }
    }
}

impl SeqOpts {
    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    pub fn with_v(mut self, v: VOpts) -> Self {
        self.v = v;
        self
    }
}

// ---------------------------------------------------------------------------
// Tail verdicts over per-index profiles
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeqWitness {
    pub index: usize,
    pub value: f64,
}

/// Decide a trinary verdict from a per-index value profile: holds when the
/// values stay at or below epsilon from some index on (with at least
/// `min_tail` trailing confirmations), fails when the whole trailing window
/// stays above epsilon plus margin.
fn tail_verdict(
    values: &[f64],
    epsilon: f64,
    min_tail: usize,
    margin: f64,
) -> (Verdict, Option<usize>, Option<SeqWitness>) {
    let h = values.len().saturating_sub(1);
    // Smallest start index whose suffix is entirely within epsilon.
    let mut first_ok = values.len();
    for (i, v) in values.iter().enumerate().rev() {
        if *v <= epsilon {
            first_ok = i;
        } else {
            break;
        }
    }
    if first_ok + min_tail <= h {
        return (Verdict::Holds, Some(first_ok), None);
    }
    let window_start = h.saturating_sub(min_tail);
    let tail = &values[window_start..];
    if !tail.is_empty() && tail.iter().all(|v| *v > epsilon + margin) {
        let (off, val) = tail
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite profile"))
            .expect("nonempty tail");
        return (
            Verdict::Fails,
            None,
            Some(SeqWitness {
                index: window_start + off,
                value: *val,
            }),
        );
    }
    let witness = values
        .iter()
        .enumerate()
        .skip(window_start)
        .filter(|(_, v)| **v > epsilon)
        .map(|(i, v)| SeqWitness { index: i, value: *v })
        .last();
    (Verdict::Inconclusive, None, witness)
}

// ---------------------------------------------------------------------------
// Mode classification
// ---------------------------------------------------------------------------

/// One convergence mode's outcome, with its per-index profile.
#[derive(Clone, Debug, Serialize)]
pub struct ModeResult {
    pub verdict: Verdict,
    /// True when the verdict was forced to `holds` by a stronger mode in
    /// the comparison chain.
    pub coerced: bool,
    pub start_index: Option<usize>,
    pub witness: Option<SeqWitness>,
    pub profile: Vec<f64>,
}

/// Per-mode verdicts along the chain
/// uniform => locally-uniform => V => pointwise.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceVerdict {
    pub epsilon: f64,
    pub horizon: usize,
    pub uniform: ModeResult,
    pub locally_uniform: ModeResult,
    pub v: ModeResult,
    pub pointwise: ModeResult,
}

impl ConvergenceVerdict {
    /// Verdicts in strong-to-weak chain order.
    pub fn chain(&self) -> [Verdict; 4] {
        [
            self.uniform.verdict,
            self.locally_uniform.verdict,
            self.v.verdict,
            self.pointwise.verdict,
        ]
    }

    /// A stronger mode marked holds must force weaker modes to holds.
    pub fn chain_is_monotone(&self) -> bool {
        let c = self.chain();
        for i in 0..3 {
            if c[i].holds() && !c[i + 1].holds() {
                return false;
            }
        }
        true
    }
}

fn mode_result(values: Vec<f64>, opts: &SeqOpts) -> ModeResult {
    let (verdict, start_index, witness) =
        tail_verdict(&values, opts.epsilon, opts.min_tail, opts.margin);
    ModeResult {
        verdict,
        coerced: false,
        start_index,
        witness,
        profile: values,
    }
}

/// Classify the convergence of `seq` towards `limit` in the four modes:
/// pointwise on the probes, V on the probe set, locally uniform (fixed-scale
/// ball proxy), and uniform on a whole-domain sample.
pub fn classify(
    seq: &FnSequence,
    limit: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &SeqOpts,
) -> Result<ConvergenceVerdict> {
    let horizon = seq.horizon;
    if horizon < opts.min_tail {
        return Err(Error::InvalidSpec(format!(
            "horizon {horizon} shorter than min_tail {}",
            opts.min_tail
        )));
    }
    let limit_values: Vec<Vec<f64>> = probes
        .points()
        .iter()
        .map(|a| limit.eval(a))
        .collect::<Result<_>>()?;
    let local_regions: Vec<_> = probes
        .points()
        .iter()
        .map(|a| domain.neighborhood(a, opts.local_scale))
        .collect::<Result<Vec<_>>>()?;
    let whole = domain.whole_region();

    let mut pw = Vec::with_capacity(horizon + 1);
    let mut vv = Vec::with_capacity(horizon + 1);
    let mut lu = Vec::with_capacity(horizon + 1);
    let mut un = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let f_n = seq.term(n);
        let mut p_val = 0.0f64;
        for (a, lv) in probes.points().iter().zip(&limit_values) {
            p_val = p_val.max(family.eval(member, &f_n.eval(a)?, lv)?);
        }
        pw.push(p_val);

        vv.push(vmetric::v_semidistance(&f_n, limit, family, member, domain, probes, &opts.v)?.delta);

        let mut l_val = 0.0f64;
        for region in &local_regions {
            l_val = l_val.max(
                vmetric::sup_over_region(&f_n, limit, family, member, region, opts.v.base_depth)?
                    .value,
            );
        }
        lu.push(l_val);

        un.push(
            vmetric::sup_over_region(&f_n, limit, family, member, &whole, opts.uniform_depth)?
                .value,
        );
    }

    let mut uniform = mode_result(un, opts);
    let mut locally_uniform = mode_result(lu, opts);
    let mut v = mode_result(vv, opts);
    let mut pointwise = mode_result(pw, opts);

    // Coerce the chain monotone: a stronger mode that holds carries the
    // weaker modes with it.
    {
        let chain: [&mut ModeResult; 4] =
            [&mut uniform, &mut locally_uniform, &mut v, &mut pointwise];
        let mut force = false;
        for mode in chain {
            if force && !mode.verdict.holds() {
                mode.verdict = Verdict::Holds;
                mode.coerced = true;
            }
            force = force || mode.verdict.holds();
        }
    }

    Ok(ConvergenceVerdict {
        epsilon: opts.epsilon,
        horizon,
        uniform,
        locally_uniform,
        v,
        pointwise,
    })
}

// ---------------------------------------------------------------------------
// V-limit test
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct VLimitReport {
    pub verdict: Verdict,
    pub epsilon: f64,
    /// First index from which the delta profile stays within epsilon.
    pub start_index: Option<usize>,
    pub deltas: Vec<f64>,
    pub witness: Option<SeqWitness>,
}

/// Does `delta(f_n, candidate)` fall and stay within epsilon before the
/// horizon?
pub fn v_limit_test(
    seq: &FnSequence,
    candidate: &FnObject,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &SeqOpts,
) -> Result<VLimitReport> {
    let mut deltas = Vec::with_capacity(seq.horizon + 1);
    for n in 0..=seq.horizon {
        let f_n = seq.term(n);
        deltas
            .push(vmetric::v_semidistance(&f_n, candidate, family, member, domain, probes, &opts.v)?.delta);
    }
    let (verdict, start_index, witness) =
        tail_verdict(&deltas, opts.epsilon, opts.min_tail, opts.margin);
    Ok(VLimitReport {
        verdict,
        epsilon: opts.epsilon,
        start_index,
        deltas,
        witness,
    })
}

// ---------------------------------------------------------------------------
// Cauchy-style criterion for sequences
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleStatus {
    /// Every sampled point's observed tail stabilized within epsilon.
    Passed,
    /// Some sampled point deviates beyond epsilon for every admissible
    /// choice of the tail start.
    Refuted,
    /// The horizon does not resolve this scale: some tail is still moving.
    Unresolved,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointTail {
    pub x: Point,
    /// Chosen tail start: deviations are maximized over `[chosen_p, horizon]`.
    pub chosen_p: usize,
    pub tail_max: f64,
    pub stabilized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleCheck {
    pub scale: u32,
    pub status: ScaleStatus,
    pub worst: Option<PointTail>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexCheck {
    pub n: usize,
    pub outcome: Verdict,
    /// Scale whose ball witnessed the condition, when the index passed.
    pub chosen_scale: Option<u32>,
    pub scales: Vec<ScaleCheck>,
    /// Per-point tails at the passing scale.
    pub witnesses: Vec<PointTail>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyFailure {
    pub n: usize,
    pub x: Point,
    pub scale: u32,
    pub deviation: f64,
}

/// Full witness tree for the sequence criterion at one probe point.
#[derive(Clone, Debug, Serialize)]
pub struct CauchyWitness {
    pub probe: Point,
    pub epsilon: f64,
    pub verdict: Verdict,
    /// Chosen start index when the criterion holds.
    pub chosen_start: Option<usize>,
    pub checked: Vec<IndexCheck>,
    pub failure: Option<CauchyFailure>,
}

/// True when the window values drift monotonically in one direction by more
/// than `drift_tol` in total: the observed tail is still moving and the
/// horizon truncates it, so it must not count as settled evidence.
fn monotone_drift(vals: &[f64], drift_tol: f64) -> bool {
    let mut sign = 0i8;
    for w in vals.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            if sign < 0 {
                return false;
            }
            sign = 1;
        } else if d < 0.0 {
            if sign > 0 {
                return false;
            }
            sign = -1;
        }
    }
    if sign == 0 {
        return false;
    }
    (vals[vals.len() - 1] - vals[0]).abs() > drift_tol
}

struct CauchyScan<'a> {
    seq: &'a FnSequence,
    family: &'a SemidistanceFamily,
    member: usize,
    domain: &'a DomainSpec,
    probe: &'a [f64],
    epsilon: f64,
    opts: &'a SeqOpts,
    window_ps: Vec<usize>,
    /// Window evaluations `f_p(x)` keyed by point bits.
    tail_cache: HashMap<Vec<u64>, Vec<Vec<f64>>>,
}

impl CauchyScan<'_> {
    fn window_values(&mut self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let key = point_key(x);
        if !self.tail_cache.contains_key(&key) {
            let vals: Vec<Vec<f64>> = self
                .window_ps
                .iter()
                .map(|&p| self.seq.term(p).eval(x))
                .collect::<Result<_>>()?;
            self.tail_cache.insert(key.clone(), vals);
        }
        Ok(self.tail_cache[&key].clone())
    }

    fn check_index(&mut self, n: usize) -> Result<IndexCheck> {
        let f_n = self.seq.term(n);
        let mut scales = Vec::new();
        let chosen_p = self.window_ps[0];
        for k in 0..=self.opts.v.k_max {
            let region = self.domain.neighborhood(self.probe, k)?;
            let points = region.sample(self.opts.v.depth(k));
            let mut refuter: Option<PointTail> = None;
            let mut unstable = false;
            let mut witnesses = Vec::with_capacity(points.len());
            let mut worst: Option<PointTail> = None;
            for x in &points {
                let fx = f_n.eval(x)?;
                let tail = self.window_values(x)?;
                let mut devs = Vec::with_capacity(tail.len());
                for pv in &tail {
                    devs.push(self.family.eval(self.member, &fx, pv)?);
                }
                let dev = devs.iter().copied().fold(0.0, f64::max);
                let spread = dev - devs.iter().copied().fold(f64::INFINITY, f64::min);
                let stabilized = spread <= self.opts.stab_frac * self.epsilon
                    && !monotone_drift(&devs, self.opts.drift_tol);
                let tail_rec = PointTail {
                    x: x.clone(),
                    chosen_p,
                    tail_max: dev,
                    stabilized,
                };
                if dev > self.epsilon {
                    if refuter.as_ref().map_or(true, |r| dev > r.tail_max) {
                        refuter = Some(tail_rec.clone());
                    }
                } else if !stabilized {
                    unstable = true;
                }
                if worst.as_ref().map_or(true, |w| dev > w.tail_max) {
                    worst = Some(tail_rec.clone());
                }
                witnesses.push(tail_rec);
            }
            if let Some(r) = refuter {
                scales.push(ScaleCheck {
                    scale: k,
                    status: ScaleStatus::Refuted,
                    worst: Some(r),
                });
            } else if unstable {
                scales.push(ScaleCheck {
                    scale: k,
                    status: ScaleStatus::Unresolved,
                    worst,
                });
            } else {
                scales.push(ScaleCheck {
                    scale: k,
                    status: ScaleStatus::Passed,
                    worst,
                });
                return Ok(IndexCheck {
                    n,
                    outcome: Verdict::Holds,
                    chosen_scale: Some(k),
                    scales,
                    witnesses,
                });
            }
        }
        let refuted = scales
            .iter()
            .any(|s| s.status == ScaleStatus::Refuted);
        Ok(IndexCheck {
            n,
            outcome: if refuted {
                Verdict::Fails
            } else {
                Verdict::Inconclusive
            },
            chosen_scale: None,
            scales,
            witnesses: Vec::new(),
        })
    }
}

/// The sequence form of the convergence criterion at probe `a`:
/// there is an index `N` such that every `n >= N` admits a base ball about
/// `a` on which every sampled point's tail deviations
/// `d(f_n(x), f_p(x))`, `p` in the trailing window, stay within epsilon.
///
/// A scale only counts as decided when each sampled tail either refutes the
/// bound outright or has visibly stabilized; scales the horizon cannot
/// resolve are reported but decide nothing. The verdict fails only with a
/// concrete `(n, x)` whose deviation exceeds epsilon at every decided scale.
pub fn v_cauchy_sequence(
    seq: &FnSequence,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    a: &[f64],
    epsilon: f64,
    opts: &SeqOpts,
) -> Result<CauchyWitness> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidSpec(format!("epsilon must be > 0, got {epsilon}")));
    }
    let horizon = seq.horizon;
    let w = opts.tail_window.min(horizon);
    if horizon < w + opts.probe_span {
        return Err(Error::InvalidSpec(format!(
            "horizon {horizon} too short for tail window {w} plus span {}",
            opts.probe_span
        )));
    }
    let window_ps: Vec<usize> = (horizon - w..=horizon).collect();
    let mut scan = CauchyScan {
        seq,
        family,
        member,
        domain,
        probe: a,
        epsilon,
        opts,
        window_ps,
        tail_cache: HashMap::new(),
    };

    let n_last = horizon - w;
    let span = opts.probe_span.min(n_last);
    let mut memo: HashMap<usize, IndexCheck> = HashMap::new();
    let mut start = 0usize;
    let mut chosen: Option<usize> = None;
    while start + span <= n_last {
        let mut bad: Option<usize> = None;
        for n in start..=start + span {
            if !memo.contains_key(&n) {
                let check = scan.check_index(n)?;
                memo.insert(n, check);
            }
            if memo[&n].outcome != Verdict::Holds {
                bad = Some(n);
                break;
            }
        }
        match bad {
            None => {
                chosen = Some(start);
                break;
            }
            Some(b) => start = b + 1,
        }
    }

    if let Some(n0) = chosen {
        let checked: Vec<IndexCheck> = (n0..=n0 + span).map(|n| memo[&n].clone()).collect();
        return Ok(CauchyWitness {
            probe: a.to_vec(),
            epsilon,
            verdict: Verdict::Holds,
            chosen_start: Some(n0),
            checked,
            failure: None,
        });
    }

    // No admissible start: report the strongest refutation seen, if any.
    let mut failure: Option<CauchyFailure> = None;
    let mut failed_check: Option<&IndexCheck> = None;
    for check in memo.values() {
        if check.outcome != Verdict::Fails {
            continue;
        }
        for sc in &check.scales {
            if sc.status != ScaleStatus::Refuted {
                continue;
            }
            if let Some(wst) = &sc.worst {
                if failure
                    .as_ref()
                    .map_or(true, |f| wst.tail_max > f.deviation)
                {
                    failure = Some(CauchyFailure {
                        n: check.n,
                        x: wst.x.clone(),
                        scale: sc.scale,
                        deviation: wst.tail_max,
                    });
                    failed_check = Some(check);
                }
            }
        }
    }
    let verdict = if failure.is_some() {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(CauchyWitness {
        probe: a.to_vec(),
        epsilon,
        verdict,
        chosen_start: None,
        checked: failed_check.into_iter().cloned().collect(),
        failure,
    })
}

// ---------------------------------------------------------------------------
// Memoized partial sums
// ---------------------------------------------------------------------------

/// Sequence of partial sums `S_N = sum_{n<=N} f_n`, sharing a per-point
/// prefix cache across all indices so that evaluating the whole family at a
/// repeated sample point costs one pass over the terms.
pub fn partial_sums(terms: &FnSequence) -> FnSequence {
    let dim = terms.term(0).dim;
    let horizon = terms.horizon;
    let terms = terms.clone();
    let cache: Arc<Mutex<HashMap<Vec<u64>, Arc<Vec<Vec<f64>>>>>> =
        Arc::new(Mutex::new(HashMap::new()));
    let name = format!("partial-sums({})", terms.name);
    FnSequence::new(name.clone(), horizon, move |n| {
        let terms = terms.clone();
        let cache = cache.clone();
        FnObject::new_fallible(format!("{name}[{n}]"), dim, move |x| {
            let key = point_key(x);
            let prefix = {
                let mut guard = cache.lock().expect("prefix cache poisoned");
                if let Some(p) = guard.get(&key) {
                    p.clone()
                } else {
                    let mut acc = vec![0.0f64; dim];
                    let mut rows = Vec::with_capacity(horizon + 1);
                    for m in 0..=horizon {
                        let v = terms.term(m).eval(x)?;
                        for (a, b) in acc.iter_mut().zip(&v) {
                            *a += b;
                        }
                        rows.push(acc.clone());
                    }
                    let rows = Arc::new(rows);
                    guard.insert(key, rows.clone());
                    rows
                }
            };
            Ok(prefix[n].clone())
        })
    })
}

// ---------------------------------------------------------------------------
// Normal series rule
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SeriesOpts {
    /// Stabilization tolerance for the norm partial sums.
    pub stab_tol: f64,
    /// Continuity-defect tolerance on the stabilized limits.
    pub osc_tol: f64,
    pub tail_window: usize,
    pub seq: SeqOpts,
    pub osc: OscOpts,
}

impl Default for SeriesOpts {
    fn default() -> Self {
        SeriesOpts {
            stab_tol: 1e-3,
            osc_tol: 1e-2,
            tail_window: 16,
            seq: SeqOpts::default(),
            osc: OscOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesProbeRow {
    pub probe: Point,
    /// Trailing window of the partial sums of `||f_n(x)||`.
    pub norm_tail: Vec<f64>,
    pub norm_limit: f64,
    pub stabilized: bool,
    /// Continuity defect of the norm-series limit, when stabilized.
    pub oscillation_defect: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub horizon: usize,
    pub rows: Vec<SeriesProbeRow>,
    /// Both hypotheses of the normal rule: the norm series stabilizes at
    /// every probe and its limit looks continuous there.
    pub hypothesis_ok: bool,
    /// V-convergence of the vector partial sums towards the final partial
    /// sum; only evaluated when the hypotheses pass.
    pub v_limit: Option<VLimitReport>,
    pub verdict: Verdict,
}

/// Hypothesis checker and conclusion verifier for the normal series rule:
/// if `sum ||f_n||` converges pointwise to a continuous function, the vector
/// series V-converges to a continuous limit.
pub fn normal_series_test(
    terms: &FnSequence,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &SeriesOpts,
) -> Result<SeriesReport> {
    let horizon = terms.horizon;
    let dim = terms.term(0).dim;
    let zero = vec![0.0f64; dim];
    let w = opts.tail_window.min(horizon);

    // Memoized partial sums of ||f_n(x)|| as a scalar function of x.
    let norm_series = {
        let terms = terms.clone();
        let family = family.clone();
        let zero = zero.clone();
        let cache: Arc<Mutex<HashMap<Vec<u64>, f64>>> = Arc::new(Mutex::new(HashMap::new()));
        FnObject::new_fallible(format!("norm-series({})", terms.name), 1, move |x| {
            let key = point_key(x);
            if let Some(v) = cache.lock().expect("cache poisoned").get(&key) {
                return Ok(vec![*v]);
            }
            let mut acc = 0.0f64;
            for n in 0..=terms.horizon {
                acc += family.eval(member, &terms.term(n).eval(x)?, &zero)?;
            }
            cache.lock().expect("cache poisoned").insert(key, acc);
            Ok(vec![acc])
        })
    };

    let mut rows = Vec::with_capacity(probes.len());
    let mut hypothesis_ok = true;
    for a in probes.points() {
        let mut acc = 0.0f64;
        let mut partials = Vec::with_capacity(horizon + 1);
        for n in 0..=horizon {
            acc += family.eval(member, &terms.term(n).eval(a)?, &zero)?;
            partials.push(acc);
        }
        let tail = partials[horizon - w..].to_vec();
        let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().copied().fold(f64::INFINITY, f64::min);
        let stabilized = spread <= opts.stab_tol;
        let oscillation = if stabilized {
            let profile = oscillation_defect(
                &norm_series,
                &SemidistanceFamily::scalar_abs(),
                0,
                domain,
                a,
                &opts.osc,
            )?;
            Some(profile.defect)
        } else {
            None
        };
        hypothesis_ok &= stabilized && oscillation.map_or(false, |d| d <= opts.osc_tol);
        rows.push(SeriesProbeRow {
            probe: a.clone(),
            norm_tail: tail,
            norm_limit: acc,
            stabilized,
            oscillation_defect: oscillation,
        });
    }

    let (v_limit, verdict) = if hypothesis_ok {
        let sums = partial_sums(terms);
        let final_sum = sums.term(horizon);
        let report = v_limit_test(&sums, &final_sum, family, member, domain, probes, &opts.seq)?;
        let verdict = report.verdict;
        (Some(report), verdict)
    } else {
        // Hypothesis failure: the rule claims nothing.
        (None, Verdict::Inconclusive)
    };

    Ok(SeriesReport {
        horizon,
        rows,
        hypothesis_ok,
        v_limit,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Abel rule
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct AbelOpts {
    /// Relative agreement required between the direct and
    /// summation-by-parts evaluations (an algebraic identity).
    pub rel_tol: f64,
    /// Stabilization tolerance for `sum |eps_n - eps_{n-1}|`.
    pub stab_tol: f64,
    /// Stabilization tolerance for the evaluated series values.
    pub value_stab_tol: f64,
    /// Tail bound below which `eps_n` counts as vanishing.
    pub eps_zero_tol: f64,
    /// Growth factor separating bounded from growing partial sums.
    pub bound_growth: f64,
    /// Continuity-defect tolerance on evaluated limits.
    pub osc_tol: f64,
    pub tail_window: usize,
    /// Scale and depth of the ball sample used for the local boundedness
    /// check of the partial sums.
    pub ball_scale: u32,
    pub ball_depth: u32,
    pub osc: OscOpts,
}

impl Default for AbelOpts {
    fn default() -> Self {
        AbelOpts {
            rel_tol: 1e-10,
            stab_tol: 1e-3,
            value_stab_tol: 1e-2,
            eps_zero_tol: 1e-2,
            bound_growth: 1.1,
            osc_tol: 1e-2,
            tail_window: 16,
            ball_scale: 2,
            ball_depth: 4,
            osc: OscOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbelProbeRow {
    pub probe: Point,
    /// Estimated bound on `||sum_{k<=n} f_k||` near the probe.
    pub bound_estimate: f64,
    pub bounded: bool,
    /// Max of `|eps_n|` over the trailing window near the probe.
    pub eps_tail_max: f64,
    /// `sum |eps_n - eps_{n-1}|` at the horizon.
    pub eps_variation: f64,
    pub eps_variation_stabilized: bool,
    pub value: Vec<f64>,
    pub value_stabilized: bool,
    /// Max over all partial indices of the relative disagreement between
    /// direct and summation-by-parts evaluation.
    pub max_rel_disagreement: f64,
    pub oscillation_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbelReport {
    pub horizon: usize,
    pub rows: Vec<AbelProbeRow>,
    pub identity_ok: bool,
    pub hypothesis_ok: bool,
    pub verdict: Verdict,
}

/// The Abel rule as a hypothesis checker plus conclusion verifier: with
/// locally bounded partial sums and weights of vanishing, stably summable
/// variation, the weighted series converges to a continuous limit. The
/// series value is evaluated both directly and by summation by parts; the
/// two must agree to round-off.
pub fn abel_series(
    terms: &FnSequence,
    eps: &ScalarSequence,
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    probes: &ProbeSet,
    opts: &AbelOpts,
) -> Result<AbelReport> {
    let horizon = terms.horizon;
    if eps.terms.horizon != horizon {
        return Err(Error::HorizonMismatch {
            left: horizon,
            right: eps.terms.horizon,
        });
    }
    let dim = terms.term(0).dim;
    let zero = vec![0.0f64; dim];
    let w = opts.tail_window.min(horizon);

    // Weighted-series value as a function of x, for the continuity defect.
    let value_fn = {
        let terms = terms.clone();
        let eps = eps.clone();
        let cache: Arc<Mutex<HashMap<Vec<u64>, Vec<f64>>>> = Arc::new(Mutex::new(HashMap::new()));
        FnObject::new_fallible(format!("abel-series({})", terms.name), dim, move |x| {
            let key = point_key(x);
            if let Some(v) = cache.lock().expect("cache poisoned").get(&key) {
                return Ok(v.clone());
            }
            let mut acc = vec![0.0f64; dim];
            for n in 0..=terms.horizon {
                let fv = terms.term(n).eval(x)?;
                let e = eps.value(n, x)?;
                for (a, b) in acc.iter_mut().zip(&fv) {
                    *a += e * b;
                }
            }
            cache
                .lock()
                .expect("cache poisoned")
                .insert(key, acc.clone());
            Ok(acc)
        })
    };

    let mut rows = Vec::with_capacity(probes.len());
    let mut identity_ok = true;
    let mut hypothesis_ok = true;
    let mut conclusion_ok = true;
    for a in probes.points() {
        // Direct and summation-by-parts evaluation at the probe itself.
        let mut s = vec![0.0f64; dim]; // S_n = sum_{k<=n} f_k(a)
        let mut direct = vec![0.0f64; dim];
        let mut parts_acc = vec![0.0f64; dim]; // sum_{k<n} S_k (eps_k - eps_{k+1})
        let mut max_rel = 0.0f64;
        let mut eps_prev = eps.value(0, a)?;
        let mut eps_variation = 0.0f64;
        let mut value_tail: Vec<Vec<f64>> = Vec::new();
        for n in 0..=horizon {
            let fv = terms.term(n).eval(a)?;
            let e_n = eps.value(n, a)?;
            if n > 0 {
                eps_variation += (e_n - eps_prev).abs();
            }
            for (si, fi) in s.iter_mut().zip(&fv) {
                *si += fi;
            }
            for (di, fi) in direct.iter_mut().zip(&fv) {
                *di += e_n * fi;
            }
            // Abel summation: sum_{k<=n} eps_k f_k
            //   = S_n eps_n + sum_{k<n} S_k (eps_k - eps_{k+1}).
            let parts: Vec<f64> = s
                .iter()
                .zip(&parts_acc)
                .map(|(si, pa)| si * e_n + pa)
                .collect();
            let scale = direct
                .iter()
                .map(|v| v.abs())
                .fold(1.0f64, f64::max);
            let diff = direct
                .iter()
                .zip(&parts)
                .map(|(d, p)| (d - p).abs())
                .fold(0.0f64, f64::max);
            max_rel = max_rel.max(diff / scale);
            if n < horizon {
                let e_next = eps.value(n + 1, a)?;
                for (pa, si) in parts_acc.iter_mut().zip(&s) {
                    *pa += si * (e_n - e_next);
                }
            }
            if n + w >= horizon {
                value_tail.push(direct.clone());
            }
            eps_prev = e_n;
        }
        identity_ok &= max_rel <= opts.rel_tol;

        // Local boundedness of the partial sums near the probe.
        let ball = domain.neighborhood(a, opts.ball_scale)?;
        let mut ball_points = ball.sample(opts.ball_depth);
        ball_points.push(a.to_vec());
        let mut bound_half = 0.0f64;
        let mut bound_full = 0.0f64;
        let mut eps_tail_max = 0.0f64;
        let mut eps_var_tail: Vec<f64> = Vec::new();
        for x in &ball_points {
            let mut sx = vec![0.0f64; dim];
            let mut var = 0.0f64;
            let mut prev = eps.value(0, x)?;
            for n in 0..=horizon {
                let fv = terms.term(n).eval(x)?;
                for (si, fi) in sx.iter_mut().zip(&fv) {
                    *si += fi;
                }
                let norm = family.eval(member, &sx, &zero)?;
                if n <= horizon / 2 {
                    bound_half = bound_half.max(norm);
                }
                bound_full = bound_full.max(norm);
                let e_n = eps.value(n, x)?;
                if n > 0 {
                    var += (e_n - prev).abs();
                }
                if n + w >= horizon {
                    eps_tail_max = eps_tail_max.max(e_n.abs());
                    if x == a {
                        eps_var_tail.push(var);
                    }
                }
                prev = e_n;
            }
        }
        let bounded = bound_full <= opts.bound_growth * bound_half + 1e-9;
        let eps_var_spread = eps_var_tail
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            - eps_var_tail.iter().copied().fold(f64::INFINITY, f64::min);
        let eps_variation_stabilized = eps_var_spread <= opts.stab_tol;

        let value_spread = (0..dim)
            .map(|j| {
                value_tail
                    .iter()
                    .map(|v| v[j])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - value_tail.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        let value_stabilized = value_spread <= opts.value_stab_tol;

        let osc = oscillation_defect(&value_fn, family, member, domain, a, &opts.osc)?;

        hypothesis_ok &= bounded
            && eps_tail_max <= opts.eps_zero_tol
            && eps_variation_stabilized;
        conclusion_ok &= value_stabilized && osc.defect <= opts.osc_tol;

        rows.push(AbelProbeRow {
            probe: a.clone(),
            bound_estimate: bound_full,
            bounded,
            eps_tail_max,
            eps_variation,
            eps_variation_stabilized,
            value: direct,
            value_stabilized,
            max_rel_disagreement: max_rel,
            oscillation_defect: osc.defect,
        });
    }

    let verdict = if !identity_ok {
        Verdict::Fails
    } else if !hypothesis_ok {
        Verdict::Inconclusive
    } else if conclusion_ok {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(AbelReport {
        horizon,
        rows,
        identity_ok,
        hypothesis_ok,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Limit interchange
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct InterchangeOpts {
    /// Outer-limit horizon in `p`.
    pub p_horizon: usize,
    pub window: usize,
    /// Stabilization tolerance for tail-window limit estimates.
    pub tol_limit: f64,
    pub discrepancy_tol: f64,
    pub seq: SeqOpts,
}

impl Default for InterchangeOpts {
    fn default() -> Self {
        InterchangeOpts {
            p_horizon: 64,
            window: 16,
            tol_limit: 1e-3,
            discrepancy_tol: 1e-6,
            seq: SeqOpts::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InnerLimit {
    pub p: usize,
    pub value: Vec<f64>,
    pub stabilized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterchangeReport {
    /// V-convergence of the sequence towards `g` at the limit point; the
    /// interchange statement assumes it.
    pub precondition: Verdict,
    pub inner: Vec<InnerLimit>,
    pub lhs: Vec<f64>,
    pub lhs_stabilized: bool,
    pub rhs: Vec<f64>,
    pub rhs_stabilized: bool,
    pub discrepancy: f64,
    pub offending_p: Option<usize>,
    pub verdict: Verdict,
}

fn tail_mean_estimate(values: &[Vec<f64>], tol: f64) -> (Vec<f64>, bool) {
    let dim = values.first().map_or(0, |v| v.len());
    let mut mean = vec![0.0f64; dim];
    let mut stable = true;
    for j in 0..dim {
        let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        stable &= max - min <= tol;
        mean[j] = col.iter().sum::<f64>() / col.len() as f64;
    }
    (mean, stable)
}

/// Double-limit comparison along a convergent point sequence `a_n -> a`:
/// estimates `lim_p (lim_n f_p(a_n))` against `lim_n g(a_n)`.
pub fn interchange_check(
    seq: &FnSequence,
    g: &FnObject,
    a_seq: &PointSequence,
    a_limit: &[f64],
    family: &SemidistanceFamily,
    member: usize,
    domain: &DomainSpec,
    opts: &InterchangeOpts,
) -> Result<InterchangeReport> {
    let probes = ProbeSet::new(domain, vec![a_limit.to_vec()])?;
    let precondition = v_limit_test(seq, g, family, member, domain, &probes, &opts.seq)?.verdict;

    let n_hi = a_seq.horizon;
    let w = opts.window.min(n_hi);
    let tail_points: Vec<Point> = (n_hi - w..=n_hi).map(|n| a_seq.at(n)).collect();

    let p_hi = opts.p_horizon.min(seq.horizon);
    let pw = opts.window.min(p_hi);
    let mut inner = Vec::with_capacity(pw + 1);
    let mut offending_p = None;
    for p in p_hi - pw..=p_hi {
        let f_p = seq.term(p);
        let vals: Vec<Vec<f64>> = tail_points
            .iter()
            .map(|x| f_p.eval(x))
            .collect::<Result<_>>()?;
        let (value, stabilized) = tail_mean_estimate(&vals, opts.tol_limit);
        if !stabilized && offending_p.is_none() {
            offending_p = Some(p);
        }
        inner.push(InnerLimit {
            p,
            value,
            stabilized,
        });
    }
    let inner_values: Vec<Vec<f64>> = inner.iter().map(|i| i.value.clone()).collect();
    let (lhs, outer_stable) = tail_mean_estimate(&inner_values, opts.tol_limit);
    let lhs_stabilized = outer_stable && inner.iter().all(|i| i.stabilized);

    let g_vals: Vec<Vec<f64>> = tail_points
        .iter()
        .map(|x| g.eval(x))
        .collect::<Result<_>>()?;
    let (rhs, rhs_stabilized) = tail_mean_estimate(&g_vals, opts.tol_limit);

    let discrepancy = family.eval(member, &lhs, &rhs)?;

    let verdict = if !precondition.holds() {
        // Hypothesis violated: numbers above are descriptive only.
        Verdict::Inconclusive
    } else if !lhs_stabilized || !rhs_stabilized {
        Verdict::Inconclusive
    } else if discrepancy <= opts.discrepancy_tol {
        Verdict::Holds
    } else {
        Verdict::Fails
    };

    Ok(InterchangeReport {
        precondition,
        inner,
        lhs,
        lhs_stabilized,
        rhs,
        rhs_stabilized,
        discrepancy,
        offending_p,
        verdict,
    })
}
