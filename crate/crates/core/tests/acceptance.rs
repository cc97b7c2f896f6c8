//! Acceptance gates: one test per criterion, each printing a PASS line with
//! the measured numbers once its assertions hold. The deterministic corpus
//! pass is computed once and shared.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dsc_core::policies::PolicyKind;
use dsc_core::runner::{replay, run, RunOptions};
use dsc_core::verify::{
    acceptance_corpus, check_claim1_sweep, check_claim2_random, check_coupon_collector,
    growth_probability_battery, oracle_battery, planted_oracle_battery, supermartingale_battery,
};
use dsc_core::{GeneratorSpec, RunReport};

struct CorpusPass {
    reports: Vec<RunReport>,
    elapsed: Duration,
}

static CORPUS: OnceLock<CorpusPass> = OnceLock::new();

/// Run the deterministic policy with the full checker battery over the whole
/// corpus. Any violated invariant aborts the run with an error, so a report
/// coming back at all certifies every per-step check of that run.
fn corpus_pass() -> &'static CorpusPass {
    CORPUS.get_or_init(|| {
        let corpus = acceptance_corpus().expect("corpus generation is deterministic");
        let started = Instant::now();
        let opts = RunOptions {
            check: true,
            ..RunOptions::default()
        };
        let reports = corpus
            .iter()
            .map(|inst| {
                run(inst, &opts)
                    .unwrap_or_else(|e| panic!("checked run failed on {}: {e}", inst.digest()))
                    .report
            })
            .collect();
        CorpusPass {
            reports,
            elapsed: started.elapsed(),
        }
    })
}

fn check_count(report: &RunReport, name: &str) -> u64 {
    report
        .checks
        .iter()
        .find(|c| c.name == name && !c.skipped)
        .unwrap_or_else(|| {
            panic!(
                "run {} is missing check {name:?} (checks: {:?})",
                report.instance_digest,
                report.checks.iter().map(|c| &c.name).collect::<Vec<_>>()
            )
        })
        .steps_checked
}

/// Like [`check_count`] for checks that only fire when their triggering
/// event occurs at all (lockstep instances never put a node ahead of the
/// window, so they have no charging events to check).
fn check_count_opt(report: &RunReport, name: &str) -> u64 {
    report
        .checks
        .iter()
        .find(|c| c.name == name && !c.skipped)
        .map_or(0, |c| c.steps_checked)
}

#[test]
fn c01_potential_stays_capped_on_the_corpus() {
    let pass = corpus_pass();
    let total_steps: u64 = pass.reports.iter().map(|r| r.steps).sum();
    assert!(
        pass.reports.len() >= 200,
        "corpus has only {} instances",
        pass.reports.len()
    );
    assert_eq!(pass.reports.iter().map(|r| r.n).min(), Some(2));
    assert_eq!(pass.reports.iter().map(|r| r.n).max(), Some(64));
    assert!(pass.reports.iter().any(|r| r.edges >= 10_000));
    assert!(
        pass.elapsed < Duration::from_secs(300),
        "corpus pass took {:?}",
        pass.elapsed
    );
    for report in &pass.reports {
        let cap = f64::from(report.n) * (1.0 + 1e-9);
        let max_phi = report.max_phi.expect("det runs track Φ");
        assert!(
            max_phi <= cap,
            "{}: max Φ = {max_phi} exceeds n(1+1e−9) = {cap}",
            report.instance_digest
        );
    }
    println!(
        "C01 PASS — Φ ≤ n(1+1e−9) on {} det runs ({} steps, {:?})",
        pass.reports.len(),
        total_steps,
        pass.elapsed
    );
}

#[test]
fn c02_expected_potential_never_grows() {
    let stats = supermartingale_battery(1_000).expect("expectation dominance");
    assert!(stats.states >= 1_000);
    assert!(stats.cross_checked >= 100);
    println!(
        "C02 PASS — E[Φ] ≤ Φ + 1e−9 on {} reachable states (n ≤ 16), {} cross-checked naively",
        stats.states, stats.cross_checked
    );
}

#[test]
fn c03_growth_probability_is_exact() {
    let triples = growth_probability_battery(100).expect("exact rational growth law");
    assert!(triples >= 100);
    println!(
        "C03 PASS — growth probability matched (2^p − c)/(h·2^p) exactly on {triples} triples"
    );
}

#[test]
fn c04_gain_bound_holds_every_step() {
    let pass = corpus_pass();
    let mut checked = 0u64;
    for report in &pass.reports {
        checked += check_count(report, "gain-bound");
        // End state once more, from the report itself.
        if let Some(ell) = report.min_completed_phase {
            if ell >= 1 {
                assert!(
                    report.gain >= 1u64 << (ell - 1),
                    "{}: completed phase {ell} with gain {}",
                    report.instance_digest,
                    report.gain
                );
            }
        }
    }
    let steps: u64 = pass.reports.iter().map(|r| r.steps).sum();
    assert!(checked >= steps, "gain bound checked {checked} < {steps} steps");
    println!("C04 PASS — gain ≥ 2^(ℓ−1) at every one of {checked} checked steps, zero violations");
}

#[test]
fn c05_competitive_bound_holds() {
    let pass = corpus_pass();
    let mut exact_cases = 0u64;
    for report in &pass.reports {
        assert!(
            report.competitive.holds,
            "{}: δ-form competitive bound failed",
            report.instance_digest
        );
        if report.offline.exact {
            assert_eq!(
                report.competitive.opt_holds,
                Some(true),
                "{}: OPT-form competitive bound failed",
                report.instance_digest
            );
            exact_cases += 1;
        }
    }
    println!(
        "C05 PASS — δ-form bound on all {} det runs, OPT-form on the {} with exact optima",
        pass.reports.len(),
        exact_cases
    );
}

#[test]
fn c06_counters_stay_bounded() {
    let pass = corpus_pass();
    let mut charging = 0u64;
    let mut window_bounds = 0u64;
    for report in &pass.reports {
        charging += check_count_opt(report, "charging");
        window_bounds += check_count(report, "counter-window");
        check_count(report, "counter-ahead");
        check_count(report, "degree-partition");
    }
    assert!(
        charging >= 1_000,
        "only {charging} charging events across the whole corpus"
    );
    println!(
        "C06 PASS — charging inequality at {charging} checkpoints, cumulative counter bounds at {window_bounds} (node, phase) pairs"
    );
}

#[test]
fn c07_analytic_claims_hold_numerically() {
    let harmonic = check_claim1_sweep(24, 1024).expect("harmonic gap sweep");
    assert_eq!(harmonic, 25 * 1024);
    let mixture = check_claim2_random(10_000, 0x00c1a1e5).expect("exponential mixture bound");
    assert!(mixture >= 10_000);
    println!(
        "C07 PASS — harmonic gap ≤ ln(4e·n) on {harmonic} (k, n) pairs; mixture bound on {mixture} triples (slack 1e−12)"
    );
}

#[test]
fn c08_oracle_differential_agrees() {
    let random_cases = oracle_battery(50, 0x0bace1e).expect("oracle differential");
    let planted_cases = planted_oracle_battery().expect("planted optima");
    assert_eq!(random_cases, 50);
    assert!(planted_cases >= 5);
    println!(
        "C08 PASS — branch-and-bound matched enumeration on {random_cases} random instances; {planted_cases} planted optima recovered"
    );
}

#[test]
fn c09_gather_cost_matches_simulation() {
    let mut details = Vec::new();
    for (k, m) in [(4u32, 10u64), (6, 50), (8, 200)] {
        let stats =
            check_coupon_collector(k, m, 10_000, 41 + u64::from(k)).expect("coupon collector");
        assert!(stats.within_three_se());
        details.push(format!(
            "(k={k}, m={m}): |{:.3} − {:.3}| ≤ 3·{:.3}",
            stats.mean, stats.expected, stats.std_error
        ));
    }
    println!("C09 PASS — {}", details.join("; "));
}

#[test]
fn c10_runs_are_reproducible() {
    let mut scenarios = 0u64;
    for (spec, policy, seed) in [
        ("planted:n=12,covers=8,seed=7", PolicyKind::Det, 0u64),
        ("uniform:n=10,m=300,size=3,seed=9", PolicyKind::Rand, 5),
    ] {
        let instance = spec.parse::<GeneratorSpec>().unwrap().generate().unwrap();
        let opts = RunOptions {
            policy,
            seed,
            trace: true,
            ..RunOptions::default()
        };
        let a = run(&instance, &opts).unwrap();
        let b = run(&instance, &opts).unwrap();
        assert_eq!(
            a.report.to_json().unwrap(),
            b.report.to_json().unwrap(),
            "{spec}: reports differ between identical runs"
        );
        assert_eq!(
            serde_json::to_string(&a.trace).unwrap(),
            serde_json::to_string(&b.trace).unwrap(),
            "{spec}: traces differ between identical runs"
        );
        let replayed = replay(&instance, &a.trace, true, opts.oracle_budget).unwrap();
        assert!(
            a.report.equivalent_for_replay(&replayed.report),
            "{spec}: replay did not reproduce the report"
        );
        scenarios += 1;
    }
    println!(
        "C10 PASS — byte-identical reports and traces on {scenarios} policy/instance pairs; replays reproduce them"
    );
}
