//! `tlcl`: monitor MTL specifications, infer classifiers from
//! demonstrations, simulate and verify the classifier in the loop.
//!
//! Exit codes: 0 success (satisfied, verified), 1 negative verdict
//! (violated, falsified, failed condition), 2 error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use tlcl_core::closed_loop::{plot_data, ClosedLoop};
use tlcl_core::demos::{write_demo_set, DemonstrationSet};
use tlcl_core::fixtures::{late_obstacle_env, reach_avoid_demos, reach_avoid_scenario, REACH_AVOID_TOML};
use tlcl_core::inference::{check_conditions, infer, inference_report, Classifier, InferenceOptions};
use tlcl_core::io::write_atomic;
use tlcl_core::logic::{
    eval_boolean, eval_robust, necessary_length, parse_formula, required_horizon, Formula, Metric, PredicateMap,
};
use tlcl_core::scenario::{PredicateFile, Scenario, Tradeoff};
use tlcl_core::time::Bound;
use tlcl_core::trace::{load_trace, save_trace};
use tlcl_core::verifier::{falsify, verify_sampling, FalsifyOptions, Verdict, VerificationProblem};

#[derive(Parser)]
#[command(
    name = "tlcl",
    version,
    about = "MTL monitoring, classifier inference and closed-loop verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and print its syntax tree and horizons.
    Parse {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        preds: PredSource,
    },
    /// Evaluate a formula on a trace.
    Monitor {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        preds: PredSource,
        /// Print the robustness value as well.
        #[arg(long)]
        robust: bool,
        /// Evaluate at this row instead of the first.
        #[arg(long, default_value_t = 0)]
        at: usize,
    },
    /// Learn a classifier from demonstrations.
    Infer {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        demos: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// `equal` or `ratio:<lambda>`; defaults to the scenario's.
        #[arg(long)]
        tradeoff: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Perturbation samples for the condition checks.
        #[arg(long, default_value_t = 500)]
        condition_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the classifier in closed loop against one environment trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long)]
        env: PathBuf,
        /// Initial state as comma-separated values.
        #[arg(long)]
        x0: String,
        /// Number of steps; defaults to the scenario horizon.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sample and falsify the closed loop around the demonstrations.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        radius_scale: f64,
        /// Demonstration directory; defaults to the one recorded in the classifier.
        #[arg(long)]
        demos: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
    },
    /// Write the built-in reach-avoid scenario, scripted demonstrations and
    /// environment traces.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct PredSource {
    /// Predicate map file (`dim`, `metric`, `[[predicates]]`).
    #[arg(long)]
    pmap: Option<PathBuf>,
    /// Take predicates and metric from a scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl PredSource {
    fn load(&self) -> Result<Option<(PredicateMap, Metric)>> {
        Ok(match (&self.pmap, &self.scenario) {
            (Some(p), _) => Some(PredicateFile::load(p)?),
            (None, Some(s)) => {
                let s = Scenario::load(s)?;
                Some((s.predicates.clone(), s.spec_metric.clone()))
            }
            (None, None) => None,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Parse { formula, preds } => cmd_parse(&formula, &preds),
        Command::Monitor {
            formula,
            trace,
            preds,
            robust,
            at,
        } => cmd_monitor(&formula, &trace, &preds, robust, at),
        Command::Infer {
            scenario,
            demos,
            epsilon,
            tradeoff,
            out,
            condition_samples,
            seed,
        } => cmd_infer(
            &scenario,
            &demos,
            epsilon,
            tradeoff.as_deref(),
            &out,
            condition_samples,
            seed,
        ),
        Command::Simulate {
            scenario,
            classifier,
            env,
            x0,
            steps,
            out,
        } => cmd_simulate(&scenario, &classifier, &env, &x0, steps, &out),
        Command::Verify {
            scenario,
            classifier,
            samples,
            seed,
            radius_scale,
            demos,
            out,
            restarts,
            iters,
        } => cmd_verify(
            &scenario,
            &classifier,
            samples,
            seed,
            radius_scale,
            demos.as_deref(),
            &out,
            FalsifyOptions {
                restarts,
                iterations: iters,
            },
        ),
        Command::Fixture { out, count, seed } => cmd_fixture(&out, count, seed),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn dump_ast(f: &Formula, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let (label, kids): (String, Vec<&Formula>) = match f {
        Formula::True => ("True".into(), vec![]),
        Formula::False => ("False".into(), vec![]),
        Formula::Atom(a) => (format!("Atom {a}"), vec![]),
        Formula::Not(a) => ("Not".into(), vec![a]),
        Formula::And(a, b) => ("And".into(), vec![a, b]),
        Formula::Or(a, b) => ("Or".into(), vec![a, b]),
        Formula::Until(i, a, b) => (format!("Until {i}"), vec![a, b]),
        Formula::Since(i, a, b) => (format!("Since {i}"), vec![a, b]),
        Formula::Eventually(i, a) => (format!("Eventually {i}"), vec![a]),
        Formula::Always(i, a) => (format!("Always {i}"), vec![a]),
        Formula::Once(i, a) => (format!("Once {i}"), vec![a]),
        Formula::Historically(i, a) => (format!("Historically {i}"), vec![a]),
    };
    out.push_str(&format!("{pad}{label}\n"));
    for k in kids {
        dump_ast(k, depth + 1, out);
    }
}

fn parse_with(formula: &str, preds: &Option<(PredicateMap, Metric)>) -> Result<Formula> {
    Ok(match preds {
        Some((pmap, _)) => parse_formula(formula, pmap)?,
        None => tlcl_core::logic::parse(formula)?,
    })
}

fn cmd_parse(formula: &str, preds: &PredSource) -> Result<u8> {
    let preds = preds.load()?;
    let f = parse_with(formula, &preds)?;
    let mut out = String::new();
    dump_ast(&f, 0, &mut out);
    print!("{out}");
    println!("formula = {f}");
    if f.has_past() && f.has_future() {
        println!("horizon = mixed past and future operators");
    } else if f.has_past() {
        println!("necessary_length = {}", necessary_length(&f)?);
    } else {
        println!("horizon = {}", required_horizon(&f)?);
    }
    Ok(0)
}

fn cmd_monitor(formula: &str, trace: &Path, preds: &PredSource, robust: bool, at: usize) -> Result<u8> {
    let Some((pmap, metric)) = preds.load()? else {
        bail!("monitor needs --pmap or --scenario");
    };
    let f = parse_formula(formula, &pmap)?;
    let x = load_trace(trace)?;
    if at >= x.len() {
        bail!("--at {at} is beyond the trace ({} rows)", x.len());
    }
    let need = if f.has_past() && f.has_future() {
        None
    } else if f.has_past() {
        Some(("history", x.time(at) - x.time(0), necessary_length(&f)?))
    } else {
        Some(("horizon", x.time(x.len() - 1) - x.time(at), required_horizon(&f)?))
    };
    if let Some((what, span, need)) = need {
        if Bound::Finite(span) < need {
            eprintln!(
                "warning: trace {what} from row {at} is {span}, the formula needs {need}; evaluating with finite-trace semantics"
            );
        }
    }
    let holds = eval_boolean(&f, &x, at, &pmap, &metric)?;
    println!("verdict = {}", if holds { "satisfied" } else { "violated" });
    if robust {
        println!("robustness = {}", eval_robust(&f, &x, at, &pmap, &metric)?);
    }
    Ok(if holds { 0 } else { 1 })
}

fn cmd_infer(
    scenario: &Path,
    demos: &Path,
    epsilon: f64,
    tradeoff: Option<&str>,
    out: &Path,
    condition_samples: usize,
    seed: u64,
) -> Result<u8> {
    let sc = Scenario::load(scenario)?;
    let set = DemonstrationSet::load(demos, &sc)?;
    let mut opts = InferenceOptions::from_scenario(&sc);
    opts.epsilon = epsilon;
    if let Some(t) = tradeoff {
        opts.tradeoff = Tradeoff::parse(t)?;
    }
    let classifier = infer(&sc, &set, &demos.to_string_lossy(), &opts)?;
    classifier.save(out.join("classifier.toml"))?;
    write(&out.join("inference_report.toml"), &inference_report(&classifier))?;
    let conditions = check_conditions(&classifier, &set, &sc, condition_samples, seed, 0.99)?;
    write(&out.join("conditions.toml"), &conditions.to_toml())?;
    println!("delta_c = {}", classifier.radii.delta_c);
    println!("delta_e = {}", classifier.radii.delta_e);
    for l in &classifier.locations {
        for b in &l.branches {
            println!(
                "l{}: {} -> {:?} (margin {})",
                l.location,
                b.formula,
                b.input_value.as_slice(),
                b.margin
            );
        }
    }
    if !conditions.passed() {
        eprintln!("conditions failed at 0.99 of the certified radii; see conditions.toml");
        return Ok(1);
    }
    Ok(0)
}

fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let v = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{s}` in `{text}`"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(v))
}

fn cmd_simulate(
    scenario: &Path,
    classifier: &Path,
    env: &Path,
    x0: &str,
    steps: Option<usize>,
    out: &Path,
) -> Result<u8> {
    let sc = Scenario::load(scenario)?;
    let c = Classifier::load(classifier, &sc)?;
    let env = load_trace(env)?;
    let x0 = parse_vector(x0)?;
    if x0.len() != sc.state_dim() {
        bail!("--x0 has {} entries, the state has {}", x0.len(), sc.state_dim());
    }
    let inside = c
        .initial_states
        .iter()
        .any(|x| sc.state_metric.distance(x, &x0) < c.radii.delta_c);
    if !inside {
        eprintln!("warning: x0 is outside certified region (no demonstration start within delta_c)");
    }
    let cl = ClosedLoop::new(&sc, &c)?;
    let r = cl.simulate_env(&x0, &env, steps.unwrap_or(sc.horizon))?;
    save_trace(&r.agent, out.join("agent.csv"))?;
    save_trace(&r.q, out.join("q.csv"))?;
    if let Some(u) = r.input_trace(&sc)? {
        save_trace(&u, out.join("input.csv"))?;
    }
    write(&out.join("plot.csv"), &plot_data(&r, &sc)?)?;
    let report = format!(
        "verdict = \"{}\"\nrobustness = {}\nmin_decision_margin = {}\nlocations = {:?}\ninside_certified_region = {}\n",
        if r.satisfied { "satisfied" } else { "violated" },
        r.robustness,
        r.min_decision_margin(),
        r.run.locations(),
        inside
    );
    write(&out.join("simulation_report.toml"), &report)?;
    print!("{report}");
    Ok(if r.satisfied { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    scenario: &Path,
    classifier: &Path,
    samples: usize,
    seed: u64,
    scale: f64,
    demos: Option<&Path>,
    out: &Path,
    opts: FalsifyOptions,
) -> Result<u8> {
    let started = std::time::Instant::now();
    let sc = Scenario::load(scenario)?;
    let c = Classifier::load(classifier, &sc)?;
    let demos = demos.map_or_else(|| PathBuf::from(&c.demos), Path::to_path_buf);
    let set = DemonstrationSet::load(&demos, &sc)?;
    if set.digest != c.demo_digest {
        bail!(
            "demonstrations in {} are not the ones the classifier was trained on",
            demos.display()
        );
    }
    let problem = VerificationProblem::from_classifier(&c, &set, &sc, samples, seed, scale)?;
    if !problem.certified {
        eprintln!("warning: radius scale {scale} exceeds the certified radii; results are uncertified");
    }
    let report = verify_sampling(&problem, &c, &sc)?;
    let report = report.with_falsification(falsify(&problem, &c, &sc, opts)?);
    write(&out.join("verification_report.toml"), &report.to_toml())?;
    for (i, cex) in report.counterexamples.iter().enumerate() {
        save_trace(&cex.result.agent, out.join(format!("counterexample_{i}_agent.csv")))?;
        save_trace(&cex.result.q, out.join(format!("counterexample_{i}_q.csv")))?;
        save_trace(&cex.h, out.join(format!("counterexample_{i}_h.csv")))?;
    }
    println!("verdict = {}", report.verdict);
    println!("min_robustness = {}", report.min_robustness);
    println!("counterexamples = {}", report.counterexamples.len());
    eprintln!("wall time {:.2?}", started.elapsed());
    Ok(match report.verdict {
        Verdict::VerifiedSampled => 0,
        Verdict::Falsified | Verdict::Inconclusive => 1,
    })
}

fn cmd_fixture(out: &Path, count: usize, seed: u64) -> Result<u8> {
    let sc = reach_avoid_scenario();
    let raw = reach_avoid_demos(&sc, count, seed)?;
    write(&out.join("scenario.toml"), REACH_AVOID_TOML)?;
    write_demo_set(out.join("demos"), &raw)?;
    if let Some((_, env, _)) = raw.first() {
        save_trace(env, out.join("env_nominal.csv"))?;
    }
    save_trace(&late_obstacle_env(&sc), out.join("env_late.csv"))?;
    println!(
        "wrote scenario, {count} demonstrations and environments to {}",
        out.display()
    );
    Ok(0)
}
