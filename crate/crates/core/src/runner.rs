//! Drives a full run: streams the edges of an instance through the engine
//! under a policy, optionally checking per-step invariants, and assembles
//! the [`RunReport`].
//!
//! The check battery (`check: true`) asserts, per step:
//!
//! * **supermartingale** — exact E\[Φ\] over the candidate law ≤ current Φ;
//! * **argmin-dominance** — the deterministic choice ≤ that expectation;
//! * **phi-cap** — deterministic runs keep Φ ≤ n·(1+1e−9);
//! * **score-cap** — deterministic runs keep every z_i ≤ ln n (+1e−9);
//! * **prediction-agreement** — the decision-time Φ prediction matches the
//!   post-step incremental Φ;
//! * **phi-agreement** — incremental Φ matches a from-scratch recompute;
//! * **gain-bound** — once every node has completed phase ℓ ≥ 1, at least
//!   `2^{ℓ−1}` colors are fully used;
//! * **charging** — each ahead-counter `s_{iℓ}` stays below the total
//!   window-counter mass at phases ≤ ℓ−h;
//!
//! and at end of run: the degree partition `Σ_k (w+s) = deg`, the cumulative
//! counter bounds `Σ_{k≤ℓ} w ≤ 8h·ln(4e·n)·2^ℓ` and
//! `Σ_{k≤ℓ} s ≤ 16h·ln(4e·n)·2^ℓ` (for randomized runs these are asserted
//! only if Φ never exceeded n — the regime the bounds are proved in), and
//! the competitive verdict (enforced for deterministic runs).
//!
//! Violations surface as [`Error::Invariant`] carrying the step index and
//! check name; the CLI maps them to exit code 3.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{EngineState, StepEffect, TraceEntry};
use crate::model::{Color, InstanceSpec};
use crate::oracle::{competitive_check, exact_opt, DEFAULT_ORACLE_BUDGET};
use crate::policies::{
    det_decide, det_decide_exhaustive, rand_policy, GreedyState, PolicyKind,
};
use crate::potential::{ln_4en, tolerance, Potential};
use crate::report::{CheckSummary, RunReport};
use crate::{Error, Result};

/// Name of the random generator recorded in reports.
pub const RNG_NAME: &str = "chacha8";

/// How a run should be executed.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Assert the per-step invariant battery.
    pub check: bool,
    /// Cross-validate the classed argmin against the naive full scan.
    pub exhaustive: bool,
    /// Record a replayable trace.
    pub trace: bool,
    /// Edge budget for the exact offline oracle.
    pub oracle_budget: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: PolicyKind::Det,
            seed: 0,
            check: false,
            exhaustive: false,
            trace: false,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
        }
    }
}

/// A finished run: its report, the trace if recorded, and the final engine
/// state for engine-backed policies.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: Vec<TraceEntry>,
    pub engine: Option<EngineState>,
}

/// Tallies check evaluations and remembers whether Φ ever left [0, n].
struct Checker {
    counts: BTreeMap<&'static str, u64>,
    phi_stayed_capped: bool,
}

impl Checker {
    fn new() -> Self {
        Checker {
            counts: BTreeMap::new(),
            phi_stayed_capped: true,
        }
    }

    fn count(&mut self, name: &'static str) {
        *self.counts.entry(name).or_insert(0) += 1;
    }

    fn assert(
        &mut self,
        ok: bool,
        step: u64,
        name: &'static str,
        detail: impl FnOnce() -> String,
    ) -> Result<()> {
        self.count(name);
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant {
                step,
                check: name,
                detail: detail(),
            })
        }
    }

    fn summaries(&self, skipped: &[(&'static str, &str)]) -> Vec<CheckSummary> {
        let mut out: Vec<CheckSummary> = self
            .counts
            .iter()
            .map(|(&name, &steps)| CheckSummary::passed(name, steps))
            .collect();
        for &(name, why) in skipped {
            out.push(CheckSummary::skipped(name, why));
        }
        out
    }
}

/// Structural checks that hold for every policy and state.
fn check_step_structural(
    checker: &mut Checker,
    engine: &EngineState,
    effect: &StepEffect,
) -> Result<()> {
    let step = effect.step;

    // Completed phases force fully used colors: min completed phase ℓ ≥ 1
    // implies at least 2^{ℓ−1} of them.
    let min_completed = engine.min_completed_phase();
    if min_completed >= 1 {
        let need = 1u64 << (min_completed - 1);
        let have = engine.fully_used_count();
        checker.assert(have >= need, step, "gain-bound", || {
            format!("min completed phase {min_completed} needs ≥ {need} fully used colors, have {have}")
        })?;
    } else {
        checker.count("gain-bound");
    }

    // Each ahead-counter increment is charged to window counters at phases
    // ≤ ℓ−h; verify the inequality for the counters bumped this step.
    let h = i64::from(engine.params().window());
    for ne in effect.nodes.iter().filter(|ne| !ne.in_window) {
        let ell = i64::from(ne.pre_phase);
        let s_val = engine.node(ne.node).ahead_hits(ne.pre_phase);
        let bound = engine.window_total_upto(ell - h);
        checker.assert(s_val <= bound, step, "charging", || {
            format!(
                "node {} has s at phase {ell} = {s_val}, exceeding the window mass {bound} at phases ≤ {}",
                ne.node,
                ell - h
            )
        })?;
    }

    Ok(())
}

/// Degree partition: every node's counters split its degree exactly.
fn check_degree_partition(checker: &mut Checker, engine: &EngineState, step: u64) -> Result<()> {
    for (idx, node) in engine.nodes().iter().enumerate() {
        let w: u64 = node.window_hit_entries().map(|(_, v)| v).sum();
        let s: u64 = node.ahead_hit_entries().map(|(_, v)| v).sum();
        let deg = node.degree();
        checker.assert(w + s == deg, step, "degree-partition", || {
            format!(
                "node {}: window {w} + ahead {s} != degree {deg}",
                idx + 1
            )
        })?;
    }
    Ok(())
}

/// End-of-run cumulative counter bounds (window and ahead).
fn check_counter_bounds(checker: &mut Checker, engine: &EngineState, step: u64) -> Result<()> {
    let n = engine.n();
    let h = f64::from(engine.params().window());
    let bound_unit = h * ln_4en(n);
    for (idx, node) in engine.nodes().iter().enumerate() {
        let max_key = node
            .window_hit_entries()
            .map(|(k, _)| k)
            .chain(node.ahead_hit_entries().map(|(k, _)| k))
            .max();
        let Some(max_key) = max_key else { continue };
        let mut w_prefix = 0u64;
        let mut s_prefix = 0u64;
        for ell in 0..=max_key {
            w_prefix += node.window_hits(ell);
            s_prefix += node.ahead_hits(ell);
            let scale = (1u64 << ell) as f64;
            let w_bound = 8.0 * bound_unit * scale;
            let s_bound = 16.0 * bound_unit * scale;
            checker.assert(
                (w_prefix as f64) <= w_bound + tolerance(w_bound),
                step,
                "counter-window",
                || {
                    format!(
                        "node {}: Σ_{{k≤{ell}}} w = {w_prefix} exceeds 8h·ln(4e·n)·2^{ell} = {w_bound}",
                        idx + 1
                    )
                },
            )?;
            checker.assert(
                (s_prefix as f64) <= s_bound + tolerance(s_bound),
                step,
                "counter-ahead",
                || {
                    format!(
                        "node {}: Σ_{{k≤{ell}}} s = {s_prefix} exceeds 16h·ln(4e·n)·2^{ell} = {s_bound}",
                        idx + 1
                    )
                },
            )?;
        }
    }
    Ok(())
}

/// Full charging sweep over every ahead counter (not just this step's).
fn check_charging_everywhere(checker: &mut Checker, engine: &EngineState, step: u64) -> Result<()> {
    let h = i64::from(engine.params().window());
    for (idx, node) in engine.nodes().iter().enumerate() {
        let entries: Vec<(u32, u64)> = node.ahead_hit_entries().collect();
        for (ell, s_val) in entries {
            let bound = engine.window_total_upto(i64::from(ell) - h);
            checker.assert(s_val <= bound, step, "charging", || {
                format!(
                    "node {}: s at phase {ell} = {s_val} exceeds the window mass {bound} at phases ≤ {}",
                    idx + 1,
                    i64::from(ell) - h
                )
            })?;
        }
    }
    Ok(())
}

fn offline_and_verdict(
    instance: &InstanceSpec,
    gain: u64,
    budget: usize,
) -> Result<(crate::oracle::OfflineResult, crate::oracle::CompetitiveVerdict)> {
    let offline = exact_opt(instance, budget)?;
    let verdict = competitive_check(gain, instance.n(), &offline)?;
    Ok((offline, verdict))
}

/// Gain can never beat the offline optimum (nor δ(E)); violations are
/// implementation bugs, so they are hard errors regardless of flags.
fn check_gain_sanity(
    checker: &mut Checker,
    gain: u64,
    offline: &crate::oracle::OfflineResult,
    step: u64,
) -> Result<()> {
    checker.assert(gain <= offline.min_degree, step, "gain-vs-offline", || {
        format!("gain {gain} exceeds δ(E) = {}", offline.min_degree)
    })?;
    if offline.exact {
        checker.assert(gain <= offline.opt, step, "gain-vs-offline", || {
            format!("gain {gain} exceeds exact OPT = {}", offline.opt)
        })?;
    }
    Ok(())
}

/// Execute a run under the given options.
pub fn run(instance: &InstanceSpec, opts: &RunOptions) -> Result<RunOutput> {
    match opts.policy {
        PolicyKind::Replay => Err(Error::InvalidArgument(
            "the replay policy needs a recorded trace; use the replay entry point".into(),
        )),
        PolicyKind::Greedy => run_greedy(instance, opts),
        PolicyKind::Det | PolicyKind::Rand => run_engine(instance, opts),
    }
}

fn run_greedy(instance: &InstanceSpec, opts: &RunOptions) -> Result<RunOutput> {
    if opts.trace {
        return Err(Error::InvalidArgument(
            "trace recording requires an engine-backed policy (det or rand)".into(),
        ));
    }
    let started = Instant::now();
    let mut greedy = GreedyState::new(instance.n());
    for edge in instance.edges() {
        greedy.color_edge(edge)?;
    }
    let gain = greedy.gain();
    let (offline, competitive) = offline_and_verdict(instance, gain, opts.oracle_budget)?;
    let mut checker = Checker::new();
    check_gain_sanity(
        &mut checker,
        gain,
        &offline,
        instance.edges().len() as u64,
    )?;
    let report = RunReport {
        instance_digest: instance.digest(),
        n: instance.n(),
        edges: instance.edges().len() as u64,
        policy: opts.policy.to_string(),
        seed: None,
        rng: None,
        gain,
        min_degree: instance.min_degree(),
        min_completed_phase: None,
        max_phi: None,
        near_ties: None,
        steps: instance.edges().len() as u64,
        offline,
        competitive,
        checks: checker.summaries(&[]),
        wall_time_ms: started.elapsed().as_millis(),
    };
    Ok(RunOutput {
        report,
        trace: Vec::new(),
        engine: None,
    })
}

fn run_engine(instance: &InstanceSpec, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let det = opts.policy == PolicyKind::Det;
    let n = instance.n();
    let mut engine = EngineState::init(n)?;
    let mut potential = Potential::new(&engine)?;
    let mut scratch = if opts.check {
        Some(Potential::new(&engine)?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checker = Checker::new();
    let mut trace = Vec::new();
    let mut max_phi = potential.phi();
    let mut near_ties = 0u64;
    let phi_cap = f64::from(n) * (1.0 + 1e-9);
    let z_cap = f64::from(n).ln() + 1e-9;

    for (t, edge) in instance.edges().iter().enumerate() {
        let step = (t + 1) as u64;
        let phi_pre = potential.phi();
        let min_phase = engine.min_phase(edge)?;

        // Decide.
        let (kstar, color, predicted) = if det {
            let out = det_decide(&mut potential, &engine, edge)?;
            if opts.exhaustive {
                let slow = det_decide_exhaustive(&mut potential, &engine, edge)?;
                checker.assert(
                    slow.decision.kstar == out.decision.kstar
                        && slow.decision.color == out.decision.color
                        && slow.phi_after.to_bits() == out.phi_after.to_bits(),
                    step,
                    "exhaustive-differential",
                    || {
                        format!(
                            "classed argmin ({}, {}) vs naive scan ({}, {})",
                            out.decision.kstar,
                            out.decision.color,
                            slow.decision.kstar,
                            slow.decision.color
                        )
                    },
                )?;
            }
            if opts.check {
                checker.assert(
                    out.expected_phi <= phi_pre + tolerance(phi_pre),
                    step,
                    "supermartingale",
                    || format!("E[Φ] = {} exceeds Φ = {phi_pre}", out.expected_phi),
                )?;
                checker.assert(
                    out.phi_after <= out.expected_phi + tolerance(out.expected_phi),
                    step,
                    "argmin-dominance",
                    || {
                        format!(
                            "chosen Φ = {} exceeds the expectation {}",
                            out.phi_after, out.expected_phi
                        )
                    },
                )?;
            }
            if out.near_tie {
                near_ties += 1;
            }
            (out.decision.kstar, out.decision.color, out.phi_after)
        } else {
            let (kstar, color) = rand_policy(&engine, edge, &mut rng)?;
            let predicted = if opts.check {
                let ctx = potential.step_context(&engine, edge)?;
                checker.assert(
                    ctx.expected_phi() <= phi_pre + tolerance(phi_pre),
                    step,
                    "supermartingale",
                    || format!("E[Φ] = {} exceeds Φ = {phi_pre}", ctx.expected_phi()),
                )?;
                let pi = (kstar - min_phase) as usize;
                let mut holders = 0u128;
                for (pos, &v) in edge.iter().enumerate() {
                    if engine.node(v).has_color(color) {
                        holders |= 1u128 << pos;
                    }
                }
                ctx.phi_after_class(pi, holders)
            } else {
                f64::NAN
            };
            (kstar, color, predicted)
        };

        // Apply.
        let effect = engine.apply_color(edge, kstar, color)?;
        let phi = potential.advance(&engine, &effect)?;
        if phi > max_phi {
            max_phi = phi;
        }
        if phi > phi_cap {
            checker.phi_stayed_capped = false;
        }

        // Check.
        if det {
            checker.assert(phi <= phi_cap, step, "phi-cap", || {
                format!("Φ = {phi} exceeds n·(1+1e−9) = {phi_cap}")
            })?;
        }
        if opts.check {
            if det || predicted.is_finite() {
                checker.assert(
                    (predicted - phi).abs() <= tolerance(phi),
                    step,
                    "prediction-agreement",
                    || format!("decision-time prediction {predicted} vs advanced Φ {phi}"),
                )?;
            }
            let fresh = scratch
                .as_mut()
                .expect("scratch potential exists when checking")
                .recompute(&engine)?;
            checker.assert(
                (phi - fresh).abs() <= tolerance(fresh),
                step,
                "phi-agreement",
                || format!("incremental Φ {phi} vs scratch recompute {fresh}"),
            )?;
            if det {
                let mz = potential.max_z();
                checker.assert(mz <= z_cap, step, "score-cap", || {
                    format!("max z = {mz} exceeds ln n + 1e−9 = {z_cap}")
                })?;
            }
            check_step_structural(&mut checker, &engine, &effect)?;
            if step.is_multiple_of(256) {
                check_degree_partition(&mut checker, &engine, step)?;
            }
        }

        if opts.trace {
            trace.push(TraceEntry {
                step,
                edge: edge.clone(),
                min_phase,
                palette: kstar,
                color: color.get(),
                phi_after: phi,
            });
        }
    }

    // End of run.
    let final_step = instance.edges().len() as u64;
    let mut skipped: Vec<(&'static str, &str)> = Vec::new();
    if opts.check {
        check_degree_partition(&mut checker, &engine, final_step)?;
        check_charging_everywhere(&mut checker, &engine, final_step)?;
        if det || checker.phi_stayed_capped {
            check_counter_bounds(&mut checker, &engine, final_step)?;
        } else {
            let why = "Φ exceeded n during this randomized run; the counter bounds are proved only for capped runs";
            skipped.push(("counter-window", why));
            skipped.push(("counter-ahead", why));
        }
    }

    let gain = engine.fully_used_count();
    let (offline, competitive) = offline_and_verdict(instance, gain, opts.oracle_budget)?;
    check_gain_sanity(&mut checker, gain, &offline, final_step)?;
    if det && opts.check {
        checker.assert(competitive.holds, final_step, "competitive", || {
            format!(
                "gain {gain} below the δ(E) threshold {}",
                competitive.delta_threshold
            )
        })?;
        if let (Some(holds), Some(threshold)) = (competitive.opt_holds, competitive.opt_threshold) {
            checker.assert(holds, final_step, "competitive", || {
                format!("gain {gain} below the OPT threshold {threshold}")
            })?;
        }
    }

    let report = RunReport {
        instance_digest: instance.digest(),
        n,
        edges: instance.edges().len() as u64,
        policy: opts.policy.to_string(),
        seed: (!det).then_some(opts.seed),
        rng: (!det).then(|| RNG_NAME.to_string()),
        gain,
        min_degree: instance.min_degree(),
        min_completed_phase: Some(engine.min_completed_phase()),
        max_phi: Some(max_phi),
        near_ties: det.then_some(near_ties),
        steps: final_step,
        offline,
        competitive,
        checks: checker.summaries(&skipped),
        wall_time_ms: started.elapsed().as_millis(),
    };
    Ok(RunOutput {
        report,
        trace,
        engine: Some(engine),
    })
}

/// Re-drive a recorded trace against its instance, asserting that every
/// recorded quantity reproduces bit-exactly.
pub fn replay(
    instance: &InstanceSpec,
    trace: &[TraceEntry],
    check: bool,
    oracle_budget: usize,
) -> Result<RunOutput> {
    let started = Instant::now();
    if trace.len() != instance.edges().len() {
        return Err(Error::Replay(format!(
            "trace has {} entries but the instance has {} edges",
            trace.len(),
            instance.edges().len()
        )));
    }
    let mut engine = EngineState::init(instance.n())?;
    let mut potential = Potential::new(&engine)?;
    let mut scratch = if check {
        Some(Potential::new(&engine)?)
    } else {
        None
    };
    let mut checker = Checker::new();
    let mut max_phi = potential.phi();
    let mut out_trace = Vec::with_capacity(trace.len());

    for (t, entry) in trace.iter().enumerate() {
        let step = (t + 1) as u64;
        let edge = &instance.edges()[t];
        if entry.step != step {
            return Err(Error::Replay(format!(
                "entry {t} carries step {} (expected {step})",
                entry.step
            )));
        }
        if &entry.edge != edge {
            return Err(Error::Replay(format!(
                "step {step}: trace edge {:?} does not match instance edge {:?}",
                entry.edge, edge
            )));
        }
        let min_phase = engine.min_phase(edge)?;
        if entry.min_phase != min_phase {
            return Err(Error::Replay(format!(
                "step {step}: recorded pS = {} but the engine derives {min_phase}",
                entry.min_phase
            )));
        }
        let color = Color::new(entry.color)
            .map_err(|e| Error::Replay(format!("step {step}: {e}")))?;
        let effect = engine
            .apply_color(edge, entry.palette, color)
            .map_err(|e| Error::Replay(format!("step {step}: {e}")))?;
        let phi = potential.advance(&engine, &effect)?;
        if phi.to_bits() != entry.phi_after.to_bits() {
            return Err(Error::Replay(format!(
                "step {step}: recorded Φ = {} but the engine derives {phi}",
                entry.phi_after
            )));
        }
        if phi > max_phi {
            max_phi = phi;
        }
        if check {
            let fresh = scratch
                .as_mut()
                .expect("scratch potential exists when checking")
                .recompute(&engine)?;
            checker.assert(
                (phi - fresh).abs() <= tolerance(fresh),
                step,
                "phi-agreement",
                || format!("incremental Φ {phi} vs scratch recompute {fresh}"),
            )?;
            check_step_structural(&mut checker, &engine, &effect)?;
        }
        out_trace.push(entry.clone());
    }

    let final_step = trace.len() as u64;
    if check {
        check_degree_partition(&mut checker, &engine, final_step)?;
        check_charging_everywhere(&mut checker, &engine, final_step)?;
    }
    let gain = engine.fully_used_count();
    let (offline, competitive) = offline_and_verdict(instance, gain, oracle_budget)?;
    check_gain_sanity(&mut checker, gain, &offline, final_step)?;

    let report = RunReport {
        instance_digest: instance.digest(),
        n: instance.n(),
        edges: instance.edges().len() as u64,
        policy: PolicyKind::Replay.to_string(),
        seed: None,
        rng: None,
        gain,
        min_degree: instance.min_degree(),
        min_completed_phase: Some(engine.min_completed_phase()),
        max_phi: Some(max_phi),
        near_ties: None,
        steps: final_step,
        offline,
        competitive,
        checks: checker.summaries(&[]),
        wall_time_ms: started.elapsed().as_millis(),
    };
    Ok(RunOutput {
        report,
        trace: out_trace,
        engine: Some(engine),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_full, gen_planted, gen_starved, gen_uniform};

    fn det_opts() -> RunOptions {
        RunOptions {
            check: true,
            trace: true,
            ..RunOptions::default()
        }
    }

    #[test]
    fn det_on_planted_keeps_every_promise() {
        let inst = gen_planted(8, 6, 3).unwrap();
        let out = run(&inst, &det_opts()).unwrap();
        let r = &out.report;
        assert_eq!(r.policy, "det");
        assert!(r.max_phi.unwrap() <= 8.0 * (1.0 + 1e-9));
        assert!(r.competitive.holds);
        assert!(r.gain <= r.min_degree);
        assert_eq!(r.steps, inst.edges().len() as u64);
        assert!(r.checks.iter().all(|c| c.passed));
        assert_eq!(out.trace.len(), inst.edges().len());
    }

    #[test]
    fn det_report_is_deterministic() {
        let inst = gen_uniform(6, 60, 3, 9).unwrap();
        let a = run(&inst, &det_opts()).unwrap();
        let b = run(&inst, &det_opts()).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert_eq!(
            serde_json::to_string(&a.trace).unwrap(),
            serde_json::to_string(&b.trace).unwrap()
        );
    }

    #[test]
    fn rand_runs_reproduce_and_respect_structure() {
        let inst = gen_starved(5, 40, 0).unwrap();
        let opts = RunOptions {
            policy: PolicyKind::Rand,
            seed: 7,
            check: true,
            trace: true,
            ..RunOptions::default()
        };
        let a = run(&inst, &opts).unwrap();
        let b = run(&inst, &opts).unwrap();
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        assert_eq!(a.report.seed, Some(7));
        assert_eq!(a.report.rng.as_deref(), Some(RNG_NAME));
        assert_eq!(
            serde_json::to_string(&a.trace).unwrap(),
            serde_json::to_string(&b.trace).unwrap()
        );
        // A different seed almost surely takes a different path.
        let c = run(
            &inst,
            &RunOptions {
                seed: 8,
                ..opts.clone()
            },
        )
        .unwrap();
        assert_ne!(
            serde_json::to_string(&a.trace).unwrap(),
            serde_json::to_string(&c.trace).unwrap()
        );
    }

    #[test]
    fn empty_instance_runs_trivially() {
        let inst = gen_full(4, 0).unwrap();
        for policy in [PolicyKind::Det, PolicyKind::Rand, PolicyKind::Greedy] {
            let out = run(
                &inst,
                &RunOptions {
                    policy,
                    check: true,
                    ..RunOptions::default()
                },
            )
            .unwrap();
            assert_eq!(out.report.gain, 0);
            assert!(out.report.competitive.holds);
            if policy != PolicyKind::Greedy {
                assert_eq!(out.report.max_phi, Some(4.0));
            }
        }
    }

    #[test]
    fn greedy_rejects_trace_recording() {
        let inst = gen_full(3, 3).unwrap();
        let err = run(
            &inst,
            &RunOptions {
                policy: PolicyKind::Greedy,
                trace: true,
                ..RunOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn greedy_gain_matches_the_hand_rule() {
        let inst = InstanceSpec::new(2, vec![vec![1], vec![2], vec![1], vec![2]]).unwrap();
        let out = run(
            &inst,
            &RunOptions {
                policy: PolicyKind::Greedy,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(out.report.gain, 2);
        assert_eq!(out.report.max_phi, None);
        assert_eq!(out.report.min_completed_phase, None);
    }

    #[test]
    fn exhaustive_differential_agrees_on_a_small_run() {
        let inst = gen_planted(4, 4, 1).unwrap();
        let out = run(
            &inst,
            &RunOptions {
                exhaustive: true,
                check: true,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert!(out
            .report
            .checks
            .iter()
            .any(|c| c.name == "exhaustive-differential" && c.passed));
    }

    #[test]
    fn replay_reproduces_det_and_rand_runs() {
        let inst = gen_planted(6, 5, 2).unwrap();
        for policy in [PolicyKind::Det, PolicyKind::Rand] {
            let opts = RunOptions {
                policy,
                seed: 3,
                check: true,
                trace: true,
                ..RunOptions::default()
            };
            let original = run(&inst, &opts).unwrap();
            let replayed = replay(&inst, &original.trace, true, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!(original.report.equivalent_for_replay(&replayed.report));
            assert_eq!(replayed.report.policy, "replay");
            assert_eq!(
                serde_json::to_string(&original.trace).unwrap(),
                serde_json::to_string(&replayed.trace).unwrap()
            );
        }
    }

    #[test]
    fn replay_rejects_tampering() {
        let inst = gen_planted(4, 3, 5).unwrap();
        let original = run(&inst, &det_opts()).unwrap();

        // Wrong instance.
        let other = gen_planted(4, 3, 6).unwrap();
        assert!(matches!(
            replay(&other, &original.trace, false, DEFAULT_ORACLE_BUDGET),
            Err(Error::Replay(_))
        ));

        // Truncated trace.
        let mut short = original.trace.clone();
        short.pop();
        assert!(matches!(
            replay(&inst, &short, false, DEFAULT_ORACLE_BUDGET),
            Err(Error::Replay(_))
        ));

        // Tampered Φ.
        let mut bad_phi = original.trace.clone();
        bad_phi[0].phi_after += 1e-13;
        assert!(matches!(
            replay(&inst, &bad_phi, false, DEFAULT_ORACLE_BUDGET),
            Err(Error::Replay(_))
        ));

        // Tampered color (may hit palette validation or Φ mismatch; either
        // way it must surface as a replay error).
        let mut bad_color = original.trace.clone();
        bad_color[0].color ^= 1;
        assert!(replay(&inst, &bad_color, false, DEFAULT_ORACLE_BUDGET).is_err());
    }

    #[test]
    fn run_refuses_the_replay_policy() {
        let inst = gen_full(2, 1).unwrap();
        let err = run(
            &inst,
            &RunOptions {
                policy: PolicyKind::Replay,
                ..RunOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
