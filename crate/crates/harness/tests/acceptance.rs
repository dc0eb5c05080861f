//! One test per acceptance criterion. Each runs the experiment at its pinned
//! settings and writes a single `criterion N PASS|FAIL` line to stderr,
//! bypassing the test harness's output capture so the line always shows.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use seclend_harness::experiments::admissible_config;
use seclend_harness::spec::{
    AuctionParams, CounterParams, Example1Params, MultiroundParams, Noise, OracleParams, Order,
    PrivAucWelfareParams, TailParams, TruthfulnessParams,
};
use seclend_harness::table::format_float;
use seclend_harness::{execute, Experiment, ExperimentSpec, Format, Report};

const SEED: u64 = 20_240_601;

fn spec(experiment: Experiment, trials: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(experiment, SEED);
    spec.trials = Some(trials);
    spec
}

fn oracle_spec() -> ExperimentSpec {
    spec(
        Experiment::OracleEquivalence(OracleParams {
            max_clients: 3,
            max_supply: 5,
            max_demand: 4,
        }),
        500,
    )
}

fn tails_spec() -> ExperimentSpec {
    spec(
        Experiment::TailIdentity(TailParams { max_demand: 8 }),
        10_000,
    )
}

fn truthfulness_spec() -> ExperimentSpec {
    spec(
        Experiment::Truthfulness(TruthfulnessParams {
            max_clients: 3,
            max_supply: 5,
            max_demand: 4,
        }),
        200,
    )
}

fn auction_spec() -> ExperimentSpec {
    spec(
        Experiment::AuctionWelfare(AuctionParams {
            max_clients: 5,
            max_supply: 8,
            max_demand: 4,
            alpha_range: (0.02, 0.5),
        }),
        200,
    )
}

fn counter_spec() -> ExperimentSpec {
    spec(
        Experiment::CounterUsefulness(CounterParams {
            horizon: 1024,
            epsilon: 1.0,
            beta: 0.05,
            density: 0.5,
            monotone: false,
        }),
        1000,
    )
}

fn privauc_params() -> PrivAucWelfareParams {
    PrivAucWelfareParams {
        clients: 400,
        supply: 40,
        max_demand: 4,
        alpha: 0.05,
        rho: 0.25,
        beta: 0.05,
        epsilon: None,
        noise: Noise::Laplace,
        monotone: false,
    }
}

fn privauc_spec() -> ExperimentSpec {
    spec(Experiment::PrivaucWelfare(privauc_params()), 200)
}

fn example1_spec() -> ExperimentSpec {
    spec(Experiment::Example1(Example1Params { rounds: 100 }), 1000)
}

fn multiround_spec() -> ExperimentSpec {
    spec(
        Experiment::Multiround(MultiroundParams {
            clients: vec![100, 200, 400],
            supply: 10,
            max_demand: 4,
            alpha: 0.05,
            rho: 0.25,
            beta: 0.05,
            beta_prime: 0.05,
            rounds: 100,
            epsilon: None,
            order: Order::Shuffled,
        }),
        200,
    )
}

fn timed(spec: &ExperimentSpec) -> (Report, Duration) {
    let start = Instant::now();
    let report = execute(spec, false).expect("experiment runs");
    (report, start.elapsed())
}

/// Prints the criterion line and fails the test if any named check failed
/// or the run went over `limit`.
fn verdict(
    id: u32,
    title: &str,
    report: &Report,
    checks: &[&str],
    elapsed: Duration,
    limit: Option<Duration>,
) {
    let mut parts = Vec::new();
    let mut passed = true;
    for name in checks {
        let check = report
            .check(name)
            .unwrap_or_else(|| panic!("{} has no check named {name:?}", report.kind));
        passed &= check.passed();
        parts.push(format!(
            "{name}: observed {}; required {}",
            check.observed, check.required
        ));
    }
    let timing = match limit {
        Some(limit) => {
            passed &= elapsed <= limit;
            format!(
                "runtime {:.2} s (limit {} s)",
                elapsed.as_secs_f64(),
                limit.as_secs()
            )
        }
        None => format!("runtime {:.2} s", elapsed.as_secs_f64()),
    };
    let status = if passed { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {id} {status} {title}: {} | {timing}",
        parts.join(" | ")
    );
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(passed, "{line}\n{}", report.summary());
}

#[test]
fn criterion_01_greedy_matches_exhaustive_optimum() {
    let (report, elapsed) = timed(&oracle_spec());
    verdict(
        1,
        "greedy optimality",
        &report,
        &["greedy matches exhaustive optimum"],
        elapsed,
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn criterion_02_tail_sum_identity() {
    let (report, elapsed) = timed(&tails_spec());
    verdict(
        2,
        "tail-sum identity",
        &report,
        &["expected usage equals tail sum"],
        elapsed,
        Some(Duration::from_secs(5)),
    );
}

#[test]
fn criterion_03_one_shot_truthfulness() {
    let (report, elapsed) = timed(&truthfulness_spec());
    verdict(
        3,
        "one-shot truthfulness",
        &report,
        &["truthful report is a best response"],
        elapsed,
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_04_auction_bounds() {
    let (report, elapsed) = timed(&auction_spec());
    verdict(
        4,
        "auction bounds",
        &report,
        &[
            "rounds within V/alpha + 1",
            "welfare within alpha V / n of optimum",
            "approximate walrasian equilibrium",
        ],
        elapsed,
        Some(Duration::from_secs(60)),
    );
}

#[test]
fn criterion_05_counter_usefulness() {
    let (report, elapsed) = timed(&counter_spec());
    verdict(
        5,
        "counter usefulness",
        &report,
        &["counter error within E"],
        elapsed,
        Some(Duration::from_secs(30)),
    );
}

#[test]
fn criterion_06_privauc_feasibility_and_clearing() {
    let config = admissible_config(&privauc_params()).expect("an admissible budget exists");
    assert!(config.admissibility().admissible());
    let (report, elapsed) = timed(&privauc_spec());
    verdict(
        6,
        &format!(
            "private auction feasibility and clearing at epsilon {}",
            format_float(config.params().epsilon)
        ),
        &report,
        &[
            "allocation is feasible",
            "market clears to V - 4E when the counter is accurate",
        ],
        elapsed,
        Some(Duration::from_secs(300)),
    );
}

#[test]
fn criterion_07_privauc_welfare() {
    let (report, elapsed) = timed(&privauc_spec());
    verdict(
        7,
        "private auction welfare",
        &report,
        &["welfare per share above (1 - rho) OPT - rho"],
        elapsed,
        None,
    );
}

#[test]
fn criterion_08_withdrawal_example() {
    let (report, elapsed) = timed(&example1_spec());
    verdict(
        8,
        "two-client withdrawal example",
        &report,
        &[
            "deviant second client utility",
            "truthful second client mean utility",
        ],
        elapsed,
        None,
    );
}

#[test]
fn criterion_09_multi_round_mitigation() {
    let (report, elapsed) = timed(&multiround_spec());
    verdict(
        9,
        "multi-round mitigation",
        &report,
        &[
            "deviation advantage strictly decreases in n",
            "all-truthful lender utility above (1 - rho) sum OPT - rho T",
        ],
        elapsed,
        None,
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let runs = [
        (oracle_spec(), Format::Csv),
        (tails_spec(), Format::Jsonl),
        (truthfulness_spec(), Format::Csv),
        (auction_spec(), Format::Jsonl),
        (counter_spec(), Format::Csv),
        (privauc_spec(), Format::Jsonl),
        (example1_spec(), Format::Csv),
        (multiround_spec(), Format::Csv),
    ];
    let mut identical = 0;
    let mut compared = 0;
    let mut differing = Vec::new();
    for (base, format) in runs {
        let kind = base.experiment.kind();
        let outputs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let mut spec = base.clone();
                spec.out = Some(dir.path().to_path_buf());
                spec.format = format;
                let report = seclend_harness::experiments::run(&spec, true).unwrap();
                seclend_harness::write_outputs(&report, dir.path(), format).unwrap();
                files(dir.path())
            })
            .collect();
        assert!(!outputs[0].is_empty());
        for (a, b) in outputs[0].iter().zip(&outputs[1]) {
            compared += 1;
            if a == b {
                identical += 1;
            } else {
                differing.push(format!("{kind}/{}", a.0));
            }
        }
        if outputs[0].len() != outputs[1].len() {
            differing.push(format!("{kind}: file sets differ"));
        }
    }
    let passed = differing.is_empty();
    let line = format!(
        "criterion 10 {} determinism: observed {identical}/{compared} output files byte-identical across repeated runs; required all | runtime {:.2} s",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(passed, "{line}; differing: {differing:?}");
}
