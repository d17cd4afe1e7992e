use std::fmt::Write as _;
use std::path::Path;

use rankdep_core::ambiguity::GridSpec;
use rankdep_core::evaluator::ellsberg;
use rankdep_core::{
    ambiguity_aversion_check, c_min_bruteforce, dominance, is_more_ambiguity_averse, optimize,
    reduction_suite, step1_properties, AmbiguityIndex, AversionComparison, BatterySpec,
    CertaintyEquivalent, CheckReport, Comparison, Constraints, Distortion, Error, MeanRisk,
    OptimizeOptions, Preference, Prior, Relation, ResolvedPreference, Result, StochasticOrder,
    TracePoint, TwoStageVariable, UtilityFn,
};
use serde::Serialize;

use crate::args::{Cli, Command, Demo, Order, OutputFormat, PrefArgs, StateArgs};
use crate::scenario::{load_panel, load_variable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

/// A finished report and the exit code it warrants.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    preference: Option<ResolvedPreference>,
    result: &'a T,
}

fn finish<T: Serialize>(
    cli: &Cli,
    command: &str,
    pref: Option<&Preference>,
    result: &T,
    text: String,
    ok: bool,
) -> Outcome {
    let preference = pref.map(Preference::resolved);
    let output = match cli.output {
        OutputFormat::Json => {
            let report = Report {
                command,
                preference,
                result,
            };
            serde_json::to_string_pretty(&report).expect("reports contain plain data") + "\n"
        }
        OutputFormat::Text => {
            let mut out = String::new();
            if let Some(p) = preference {
                writeln!(
                    out,
                    "preference: utility={} distortion={} penalty={} ({} states)",
                    p.utility, p.distortion, p.penalty, p.states
                )
                .unwrap();
            }
            out + &text
        }
    };
    Outcome {
        code: if ok { EXIT_OK } else { EXIT_VIOLATION },
        output,
    }
}

fn preference(args: &PrefArgs, state_ids: &[String]) -> Result<Preference> {
    Preference::new(
        UtilityFn::parse(&args.utility)?,
        Distortion::parse(&args.distortion)?,
        AmbiguityIndex::parse(&args.penalty, state_ids)?,
        state_ids.to_vec(),
    )
}

fn state_ids(args: &StateArgs) -> Result<Vec<String>> {
    match (&args.scenario, &args.states) {
        (Some(path), _) => Ok(load_variable(path)?.state_ids().to_vec()),
        (None, Some(list)) => {
            let ids: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            if ids.iter().any(String::is_empty) {
                return Err(Error::Parse {
                    input: list.clone(),
                    reason: "empty state id".into(),
                });
            }
            Ok(ids)
        }
        (None, None) => Err(Error::Configuration(
            "state ids need --scenario or --states".into(),
        )),
    }
}

fn ce_text(ce: &CertaintyEquivalent) -> String {
    match ce {
        CertaintyEquivalent::Value { value } => value.to_string(),
        CertaintyEquivalent::Overflow { utility } => {
            format!("none (utility {utility} is outside the image of the utility)")
        }
    }
}

#[derive(Serialize)]
struct StateLine {
    state: String,
    inner_utils: f64,
    minimizer_weight: f64,
}

#[derive(Serialize)]
struct EvaluateResult {
    value_utils: f64,
    certainty_equivalent: CertaintyEquivalent,
    penalty_at_minimizer: f64,
    states: Vec<StateLine>,
}

fn evaluate(cli: &Cli, path: &Path, args: &PrefArgs, full: bool) -> Result<Outcome> {
    let v = load_variable(path)?;
    let pref = preference(args, v.state_ids())?;
    let e = pref.evaluate(&v)?;
    let result = EvaluateResult {
        value_utils: e.value_utils,
        certainty_equivalent: e.certainty_equivalent,
        penalty_at_minimizer: e.penalty_at_minimizer,
        states: v
            .state_ids()
            .iter()
            .zip(&e.per_state_utils)
            .zip(e.minimizer.weights())
            .map(|((s, &u), &q)| StateLine {
                state: s.clone(),
                inner_utils: u,
                minimizer_weight: q,
            })
            .collect(),
    };
    let mut text = String::new();
    writeln!(text, "value (utils): {}", result.value_utils).unwrap();
    writeln!(
        text,
        "certainty equivalent: {}",
        ce_text(&result.certainty_equivalent)
    )
    .unwrap();
    if full {
        writeln!(
            text,
            "penalty at minimizer: {}",
            result.penalty_at_minimizer
        )
        .unwrap();
        writeln!(text, "state\tinner_utils\tminimizer_weight").unwrap();
        for s in &result.states {
            writeln!(
                text,
                "{}\t{}\t{}",
                s.state, s.inner_utils, s.minimizer_weight
            )
            .unwrap();
        }
        Ok(finish(cli, "evaluate", Some(&pref), &result, text, true))
    } else {
        #[derive(Serialize)]
        struct CeResult {
            value_utils: f64,
            certainty_equivalent: CertaintyEquivalent,
        }
        let ce = CeResult {
            value_utils: result.value_utils,
            certainty_equivalent: result.certainty_equivalent,
        };
        Ok(finish(cli, "ce", Some(&pref), &ce, text, true))
    }
}

fn load_pair(a: &Path, b: &Path) -> Result<(TwoStageVariable, TwoStageVariable)> {
    let (v1, v2) = (load_variable(a)?, load_variable(b)?);
    if v1.state_ids() != v2.state_ids() {
        return Err(Error::Shape(format!(
            "{} and {} are defined on different state sets",
            a.display(),
            b.display()
        )));
    }
    Ok((v1, v2))
}

fn compare(cli: &Cli, a: &Path, b: &Path, args: &PrefArgs) -> Result<Outcome> {
    let (v1, v2) = load_pair(a, b)?;
    let pref = preference(args, v1.state_ids())?;
    #[derive(Serialize)]
    struct CompareResult {
        first_utils: f64,
        second_utils: f64,
        comparison: Comparison,
    }
    let result = CompareResult {
        first_utils: pref.evaluate(&v1)?.value_utils,
        second_utils: pref.evaluate(&v2)?.value_utils,
        comparison: pref.prefer(&v1, &v2)?,
    };
    let verdict = match result.comparison {
        Comparison::Preferred => "first preferred",
        Comparison::Dispreferred => "second preferred",
        Comparison::Indifferent => "indifferent",
    };
    let text = format!(
        "first (utils): {}\nsecond (utils): {}\n{verdict}\n",
        result.first_utils, result.second_utils
    );
    Ok(finish(cli, "compare", Some(&pref), &result, text, true))
}

fn dominance_cmd(
    cli: &Cli,
    a: &Path,
    b: &Path,
    order: Order,
    utility: Option<&str>,
    only: Option<&str>,
) -> Result<Outcome> {
    let (v1, v2) = load_pair(a, b)?;
    let order = match order {
        Order::Fsd => StochasticOrder::Fsd,
        Order::Ssd => StochasticOrder::Ssd,
        Order::PhiSsd => StochasticOrder::PhiSsd,
    };
    let phi = utility.map(UtilityFn::parse).transpose()?;
    let indices: Vec<usize> = match only {
        Some(id) => vec![v1.state_index(id)?],
        None => (0..v1.num_states()).collect(),
    };
    #[derive(Serialize)]
    struct StateRelation {
        state: String,
        relation: Relation,
        witness_t: Option<f64>,
    }
    #[derive(Serialize)]
    struct DominanceResult {
        order: StochasticOrder,
        utility: Option<String>,
        states: Vec<StateRelation>,
        dominates_in_every_state: bool,
    }
    let states = indices
        .into_iter()
        .map(|w| {
            let r = dominance(&v1.marginal_at(w), &v2.marginal_at(w), order, phi.as_ref())?;
            Ok(StateRelation {
                state: v1.state_ids()[w].clone(),
                relation: r.relation,
                witness_t: r.witness_t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = DominanceResult {
        order,
        utility: phi.as_ref().map(UtilityFn::spec),
        dominates_in_every_state: states
            .iter()
            .all(|s| matches!(s.relation, Relation::Dominates | Relation::Equal)),
        states,
    };
    let mut text = String::new();
    for s in &result.states {
        let witness = s
            .witness_t
            .map(|t| format!(" (fails at t = {t})"))
            .unwrap_or_default();
        writeln!(text, "{}\t{:?}{witness}", s.state, s.relation).unwrap();
    }
    writeln!(
        text,
        "dominates in every state: {}",
        result.dominates_in_every_state
    )
    .unwrap();
    Ok(finish(cli, "dominance", None, &result, text, true))
}

fn cmin(cli: &Cli, states: &StateArgs, penalty: &str, prior: &str, grid: &str) -> Result<Outcome> {
    let ids = state_ids(states)?;
    let c = AmbiguityIndex::parse(penalty, &ids)?;
    let q = Prior::parse(prior, &ids)?;
    let lattice = GridSpec::parse(grid)?;
    let recovered = c_min_bruteforce(|v| Ok(c.robust_min(v)?.value), &q, &lattice)?;
    let exact = c.penalty(&q).ok();
    #[derive(Serialize)]
    struct CminResult {
        penalty: String,
        prior: Vec<f64>,
        grid: String,
        c_min: f64,
        penalty_at_prior: Option<f64>,
        gap: Option<f64>,
    }
    let result = CminResult {
        penalty: c.spec(&ids),
        prior: q.weights().to_vec(),
        grid: grid.to_string(),
        c_min: recovered,
        penalty_at_prior: exact,
        gap: exact.map(|e| e - recovered),
    };
    let mut text = format!("c_min: {}\n", result.c_min);
    match (result.penalty_at_prior, result.gap) {
        (Some(p), Some(g)) => writeln!(text, "penalty at prior: {p}\ngap: {g}").unwrap(),
        _ => writeln!(text, "penalty at prior: not tabulated").unwrap(),
    }
    Ok(finish(cli, "cmin", None, &result, text, true))
}

fn render_check(out: &mut String, r: &CheckReport) {
    let status = if r.passed() { "PASS" } else { "FAIL" };
    writeln!(
        out,
        "{status}\t{}\tcases={} skipped={} violations={} max_error={:e}",
        r.name, r.cases, r.skipped, r.violations, r.max_error
    )
    .unwrap();
    for c in &r.counterexamples {
        writeln!(out, "\tcase {}: {}", c.case, c.detail).unwrap();
    }
}

fn battery(
    cli: &Cli,
    states: &StateArgs,
    args: &PrefArgs,
    cases: usize,
    penalty2: Option<&str>,
) -> Result<Outcome> {
    let ids = state_ids(states)?;
    let pref = preference(args, &ids)?;
    let spec = BatterySpec {
        cases,
        seed: cli.seed,
        ..BatterySpec::default()
    };
    #[derive(Serialize)]
    struct BatteryResult {
        seed: u64,
        reductions: Vec<CheckReport>,
        properties: Vec<CheckReport>,
        aversion: CheckReport,
        comparison: Option<AversionComparison>,
        violations: usize,
    }
    let comparison = penalty2
        .map(|p| {
            is_more_ambiguity_averse(&pref, &pref.with_c(AmbiguityIndex::parse(p, &ids)?)?, &spec)
        })
        .transpose()?;
    let reductions = reduction_suite(&pref, &spec)?;
    let properties = step1_properties(&pref, &spec)?;
    let aversion = ambiguity_aversion_check(&pref, &spec)?;
    let violations = reductions
        .iter()
        .chain(&properties)
        .chain(std::iter::once(&aversion))
        .map(|r| r.violations)
        .sum::<usize>()
        + comparison.as_ref().map_or(0, |c| usize::from(!c.agree));
    let result = BatteryResult {
        seed: cli.seed,
        reductions,
        properties,
        aversion,
        comparison,
        violations,
    };
    let mut text = String::new();
    for r in result
        .reductions
        .iter()
        .chain(&result.properties)
        .chain(std::iter::once(&result.aversion))
    {
        render_check(&mut text, r);
    }
    if let Some(c) = &result.comparison {
        let verdict = if c.agree { "PASS" } else { "FAIL" };
        writeln!(
            text,
            "{verdict}\tmore_ambiguity_averse\tstructural={} behavioral_counterexamples={}",
            c.more_averse, c.behavioral.violations
        )
        .unwrap();
    }
    writeln!(text, "violations: {}", result.violations).unwrap();
    let ok = result.violations == 0;
    Ok(finish(cli, "battery", Some(&pref), &result, text, ok))
}

#[allow(clippy::too_many_arguments)]
fn portfolio(
    cli: &Cli,
    path: &Path,
    args: &PrefArgs,
    mean_prior: &str,
    budget: usize,
    resolution: usize,
    trace: bool,
) -> Result<Outcome> {
    let panel = load_panel(path)?;
    let pref = preference(args, panel.state_ids())?;
    let p_mean = match mean_prior.trim() {
        "reference" => pref.c().zero_penalty_prior(),
        other => Prior::parse(other, panel.state_ids())?,
    };
    let options = OptimizeOptions {
        budget,
        resolution,
        ..OptimizeOptions::default()
    };
    let opt = optimize(
        &panel,
        &p_mean,
        &pref,
        &Constraints::long_only(panel.num_assets()),
        &options,
    )?;
    #[derive(Serialize)]
    struct PortfolioResult {
        assets: Vec<String>,
        weights: Vec<f64>,
        mean_prior: Vec<f64>,
        value: MeanRisk,
        evaluations: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<Vec<TracePoint>>,
    }
    let result = PortfolioResult {
        assets: panel.assets().to_vec(),
        weights: opt.weights.as_slice().to_vec(),
        mean_prior: p_mean.weights().to_vec(),
        value: opt.value,
        evaluations: opt.evaluations,
        trace: trace.then_some(opt.trace),
    };
    let mut text = String::new();
    for (a, w) in result.assets.iter().zip(&result.weights) {
        writeln!(text, "{a}\t{w}").unwrap();
    }
    writeln!(
        text,
        "mean: {}\nrisk: {}\nobjective: {}\nevaluations: {}",
        result.value.mean, result.value.risk, result.value.objective, result.evaluations
    )
    .unwrap();
    Ok(finish(cli, "portfolio", Some(&pref), &result, text, true))
}

fn demo(cli: &Cli, which: Demo) -> Result<Outcome> {
    match which {
        Demo::Ellsberg => {
            let report = ellsberg::ellsberg_demo()?;
            let pref = ellsberg::preference();
            let text = format!(
                "U(u) = {}\nU(v) = {}\nU(u+r) = {}\nU(v+r) = {}\nv preferred to u: {}\nu+r preferred to v+r: {}\n{}\n",
                report.u,
                report.v,
                report.u_plus_r,
                report.v_plus_r,
                report.v_preferred_to_u,
                report.reversal,
                if report.passed { "PASS" } else { "FAIL" }
            );
            let ok = report.passed;
            Ok(finish(cli, "demo ellsberg", Some(&pref), &report, text, ok))
        }
    }
}

/// Executes a parsed command line; errors are validation failures.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Evaluate { scenario, pref } => evaluate(cli, scenario, pref, true),
        Command::Ce { scenario, pref } => evaluate(cli, scenario, pref, false),
        Command::Compare {
            scenario,
            scenario2,
            pref,
        } => compare(cli, scenario, scenario2, pref),
        Command::Dominance {
            scenario,
            scenario2,
            order,
            utility,
            state,
        } => dominance_cmd(
            cli,
            scenario,
            scenario2,
            *order,
            utility.as_deref(),
            state.as_deref(),
        ),
        Command::Cmin {
            states,
            penalty,
            prior,
            grid,
        } => cmin(cli, states, penalty, prior, grid),
        Command::Battery {
            states,
            pref,
            cases,
            penalty2,
        } => battery(cli, states, pref, *cases, penalty2.as_deref()),
        Command::Portfolio {
            scenario,
            pref,
            mean_prior,
            budget,
            resolution,
            trace,
        } => portfolio(
            cli,
            scenario,
            pref,
            mean_prior,
            *budget,
            *resolution,
            *trace,
        ),
        Command::Demo { which } => demo(cli, *which),
    }
}
