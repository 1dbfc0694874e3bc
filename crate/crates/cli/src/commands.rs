use std::path::{Path, PathBuf};

use log::info;
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nspforge::bayes::{self, big_to_f64, NbModel, TrainingTable};
use nspforge::eval::{self, Aggregation, QualityReport};
use nspforge::io::{self, natural_sort, Granularity, ItemId};
use nspforge::learner::{self, DomainOptions, LearnedConstraints, NmfConfig, NmfPrediction, PartialMatrix};
use nspforge::mining::{self, AssociationRule, FrequentItemset, PatternSource, RuleShape, UtilityItemset};
use nspforge::rational::{format_rational, parse_rational};
use nspforge::solver::{self, BnbConfig, SearchStats, SlsConfig, SlsInit};
use nspforge::{Rational, Schedule, Sense, SolveResult, SolveStatus, WcspInstance};

use crate::args::*;
use crate::{CliError, Outcome};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Mine(MineCmd::Rules(a)) => mine_rules(a),
        Command::Mine(MineCmd::Huim(a)) => mine_huim(a),
        Command::Mine(MineCmd::Simulate(a)) => mine_simulate(a),
        Command::Bayes(BayesCmd::Train(a)) => bayes_train(a),
        Command::Bayes(BayesCmd::Predict(a)) => bayes_predict(a),
        Command::Bayes(BayesCmd::Simulate(a)) => bayes_simulate(a),
        Command::Solve(cmd) => solve(cmd),
        Command::Learn(LearnCmd::Csp(a)) => learn_csp(a),
        Command::Learn(LearnCmd::Nmf(a)) => learn_nmf(a),
        Command::Learn(LearnCmd::Bench(a)) => learn_bench(a),
        Command::Eval(EvalCmd::Fn(a)) => eval_fn(a),
        Command::Eval(EvalCmd::Report(a)) => eval_report(a),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_file<T>(path: &Path, parse: impl FnOnce(&str) -> nspforge::Result<T>) -> Result<T> {
    parse(&read(path)?).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn rational_arg(flag: &str, text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn outcome(value: &impl Serialize, summary: String) -> Result<Outcome> {
    let mut json = serde_json::to_string_pretty(value).expect("output types serialize");
    json.push('\n');
    Ok(Outcome {
        json,
        summary,
        infeasible: false,
    })
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

// ---- mining ----

#[derive(Serialize, Deserialize)]
struct RulesOutput {
    universe: Vec<String>,
    transactions: usize,
    min_support: u64,
    min_confidence: String,
    frequent: Vec<FrequentItemset>,
    rules: Vec<AssociationRule>,
}

fn mine_rules(a: RulesArgs) -> Result<Outcome> {
    let db = match (&a.input, &a.schedule) {
        (Some(path), _) => parse_file(path, io::parse_transactions)?,
        (None, Some(path)) => {
            let schedule = parse_file(path, io::parse_schedule_csv)?;
            let g = match a.granularity {
                GranularityArg::Day => Granularity::Day,
                GranularityArg::DayShift => Granularity::DayShift,
            };
            io::schedule_to_transactions(&schedule, g)
        }
        (None, None) => return Err(CliError::Usage("give --in or --schedule".into())),
    };
    let min_confidence = rational_arg("min-confidence", &a.min_confidence)?;
    let shape = match a.shape {
        ShapeArg::All => RuleShape::All,
        ShapeArg::Single => RuleShape::SingleConsequent,
        ShapeArg::PaperCompat => RuleShape::PaperCompat,
    };
    let frequent = mining::apriori(&db, a.min_support)?;
    let rules = mining::generate_rules(&frequent, min_confidence, shape)?;
    let summary = format!(
        "{} transactions, {} frequent itemsets, {} rules",
        db.len(),
        frequent.len(),
        rules.len()
    );
    for r in &rules {
        info!(
            "{:?} => {:?} (support {}, confidence {})",
            db.item_names(&r.antecedent),
            db.item_names(&r.consequent),
            r.support_count,
            format_rational(&r.confidence)
        );
    }
    outcome(
        &RulesOutput {
            universe: db.universe.clone(),
            transactions: db.len(),
            min_support: a.min_support,
            min_confidence: format_rational(&min_confidence),
            frequent,
            rules,
        },
        summary,
    )
}

#[derive(Serialize, Deserialize)]
struct HuimOutput {
    universe: Vec<String>,
    min_utility: String,
    phase1: Vec<UtilityItemset>,
    phase2: Vec<UtilityItemset>,
}

fn mine_huim(a: HuimArgs) -> Result<Outcome> {
    let (db, utilities) = parse_file(&a.input, io::parse_quantity_table)?;
    let min_utility = rational_arg("min-utility", &a.min_utility)?;
    let result = mining::two_phase(&db, &utilities, min_utility)?;
    let summary = format!(
        "{} phase I candidates, {} high-utility itemsets",
        result.phase1.len(),
        result.phase2.len()
    );
    outcome(
        &HuimOutput {
            universe: db.universe,
            min_utility: format_rational(&min_utility),
            phase1: result.phase1,
            phase2: result.phase2,
        },
        summary,
    )
}

/// Either output of `mine rules` or `mine huim`.
#[derive(Deserialize)]
struct MinedPatterns {
    universe: Vec<String>,
    #[serde(default)]
    rules: Option<Vec<AssociationRule>>,
    #[serde(default)]
    phase2: Option<Vec<UtilityItemset>>,
}

/// Item ids become nurse indices: the n-th name in natural order is nurse n.
fn nurse_index(universe: &[String]) -> Vec<ItemId> {
    let mut sorted = universe.to_vec();
    natural_sort(&mut sorted);
    universe
        .iter()
        .map(|name| sorted.iter().position(|s| s == name).expect("same names"))
        .collect()
}

fn remap(items: &mut [ItemId], to_nurse: &[ItemId]) {
    for i in items.iter_mut() {
        *i = to_nurse.get(*i).copied().unwrap_or(*i);
    }
    items.sort_unstable();
}

#[derive(Serialize)]
struct SimulateOutput {
    seed: u64,
    schedule: Schedule,
    warnings: Vec<mining::SimulationWarning>,
    firings: Vec<mining::Firing>,
}

fn mine_simulate(a: MineSimulateArgs) -> Result<Outcome> {
    let mut mined: MinedPatterns = read_json(&a.patterns)?;
    let instance = parse_file(&a.instance, io::parse_instance)?;
    let to_nurse = nurse_index(&mined.universe);
    let result = match (&mut mined.rules, &mut mined.phase2) {
        (Some(rules), _) => {
            for r in rules.iter_mut() {
                remap(&mut r.antecedent, &to_nurse);
                remap(&mut r.consequent, &to_nurse);
            }
            mining::simulate_schedule(PatternSource::Rules(rules), &instance, a.seed, a.max_iterations)?
        }
        (None, Some(sets)) => {
            for s in sets.iter_mut() {
                remap(&mut s.items, &to_nurse);
            }
            mining::simulate_schedule(PatternSource::Itemsets(sets), &instance, a.seed, a.max_iterations)?
        }
        (None, None) => {
            return Err(CliError::Usage(format!(
                "{} holds neither rules nor high-utility itemsets",
                a.patterns.display()
            )))
        }
    };
    if let Some(path) = &a.schedule_out {
        write(path, &io::write_schedule_csv(&result.schedule))?;
    }
    let summary = format!(
        "{} firings, {} warnings, {} assignments",
        result.firings.len(),
        result.warnings.len(),
        result.schedule.total_assignments()
    );
    outcome(
        &SimulateOutput {
            seed: a.seed,
            schedule: result.schedule,
            warnings: result.warnings,
            firings: result.firings,
        },
        summary,
    )
}

// ---- bayes ----

fn bayes_train(a: TrainArgs) -> Result<Outcome> {
    let table = parse_file(&a.input, io::parse_category_csv)?;
    let training = TrainingTable::from_table(&table, &a.target_col)?;
    let universe = if a.universe.is_empty() {
        training.value_universe()
    } else {
        a.universe
    };
    let model = bayes::nb_train(&training, &universe)?;
    let summary = format!(
        "trained on {} rows, {} features, {} labels",
        model.n_train,
        model.feature_names.len(),
        model.label_universe.len()
    );
    outcome(&model, summary)
}

#[derive(Serialize)]
struct Score {
    label: String,
    score: String,
    value: f64,
}

#[derive(Serialize)]
struct RowPrediction {
    row: String,
    label: String,
    scores: Vec<Score>,
}

#[derive(Serialize)]
struct PredictOutput {
    predictions: Vec<RowPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<QualityReport>,
}

fn bayes_predict(a: PredictArgs) -> Result<Outcome> {
    let model: NbModel = read_json(&a.model)?;
    let table = parse_file(&a.input, io::parse_category_csv)?;
    let predicted = bayes::nb_predict_table(&model, &table)?;
    let report = match &a.truth_col {
        Some(col) => {
            let c = table.column(col)?;
            let (preds, truth): (Vec<String>, Vec<String>) = predicted
                .iter()
                .zip(&table.cells)
                .filter_map(|((_, p), cells)| cells[c].clone().map(|t| (p.label.clone(), t)))
                .unzip();
            let evaluation = bayes::nb_evaluate(&preds, &truth)?;
            Some(QualityReport::new("naive-bayes").setting("truth", col).with_evaluation(&evaluation))
        }
        None => None,
    };
    let summary = match &report {
        Some(r) => format!(
            "{} predictions, accuracy {}",
            predicted.len(),
            r.accuracy.as_ref().map(format_rational).unwrap_or_default()
        ),
        None => format!("{} predictions", predicted.len()),
    };
    let predictions = predicted
        .into_iter()
        .map(|(row, p)| RowPrediction {
            row,
            scores: p
                .scores
                .iter()
                .map(|(label, s)| Score {
                    label: label.clone(),
                    score: s.to_string(),
                    value: big_to_f64(s),
                })
                .collect(),
            label: p.label,
        })
        .collect();
    outcome(&PredictOutput { predictions, report }, summary)
}

#[derive(Serialize, Deserialize)]
struct BayesSimulateOutput {
    seed: u64,
    history: usize,
    schedules: Vec<Schedule>,
}

fn read_schedules(paths: &[PathBuf]) -> Result<Vec<Schedule>> {
    paths.iter().map(|p| parse_file(p, io::parse_schedule_csv)).collect()
}

fn bayes_simulate(a: BayesSimulateArgs) -> Result<Outcome> {
    let history = read_schedules(&a.history)?;
    let schedules = bayes::bn_simulate(&history, a.count, a.seed)?;
    let summary = format!("{} schedules from {} in history", schedules.len(), history.len());
    outcome(
        &BayesSimulateOutput {
            seed: a.seed,
            history: history.len(),
            schedules,
        },
        summary,
    )
}

// ---- solve ----

#[derive(Serialize)]
struct AssignedPattern {
    nurse: usize,
    value: usize,
    pattern: String,
}

#[derive(Serialize)]
struct SolveReport {
    solver: &'static str,
    sense: Sense,
    status: SolveStatus,
    cost: Option<String>,
    optimal: bool,
    assignment: Option<Vec<AssignedPattern>>,
    alternatives: Vec<Vec<String>>,
    initial_cost: Option<String>,
    trace: Vec<String>,
    domain_sizes: Vec<usize>,
    stats: SearchStats,
}

fn patterns(wcsp: &WcspInstance, values: &[Option<usize>]) -> Vec<String> {
    values
        .iter()
        .map(|v| v.map(|j| wcsp.domain[j].to_string()).unwrap_or_default())
        .collect()
}

fn solve_report(solver: &'static str, sense: Sense, wcsp: &WcspInstance, r: &SolveResult) -> SolveReport {
    let assignment = r.assignment.as_ref().map(|a| {
        a.values
            .iter()
            .enumerate()
            .filter_map(|(nurse, v)| {
                v.map(|value| AssignedPattern {
                    nurse: nurse + 1,
                    value,
                    pattern: wcsp.domain[value].to_string(),
                })
            })
            .collect()
    });
    SolveReport {
        solver,
        sense,
        status: r.status,
        cost: r.assignment.as_ref().map(|_| format_rational(&r.cost)),
        optimal: r.optimal,
        assignment,
        alternatives: r.alternatives.iter().map(|a| patterns(wcsp, &a.values)).collect(),
        initial_cost: r.initial_cost.as_ref().map(format_rational),
        trace: r.trace.iter().map(format_rational).collect(),
        domain_sizes: wcsp.domain_sizes(),
        stats: r.stats,
    }
}

fn load_problem(a: &SolveArgs) -> Result<(WcspInstance, Sense)> {
    let mut wcsp = parse_file(&a.input, io::parse_wcsp)?;
    if a.nc {
        wcsp = solver::node_consistency(&wcsp);
    }
    if a.gac {
        wcsp = solver::gac_filter(&wcsp);
    }
    let sense = match a.sense {
        SenseArg::Min => Sense::Minimize,
        SenseArg::Max => Sense::Maximize,
    };
    Ok((wcsp, sense))
}

fn solve(cmd: SolveCmd) -> Result<Outcome> {
    let (name, wcsp, sense, result) = match cmd {
        SolveCmd::Bnb(a) => {
            let (wcsp, sense) = load_problem(&a.common)?;
            let config = BnbConfig {
                bounding: !a.no_bound,
                all_optima: a.all_optima,
                ..BnbConfig::default()
            };
            let r = solver::branch_and_bound(&wcsp, sense, config);
            ("bnb", wcsp, sense, r)
        }
        SolveCmd::Dfs(a) => {
            let (wcsp, sense) = load_problem(&a)?;
            let r = solver::dfs_first_feasible(&wcsp);
            ("dfs", wcsp, sense, r)
        }
        SolveCmd::Sls(a) => {
            let (wcsp, sense) = load_problem(&a.common)?;
            let config = SlsConfig {
                init: match a.init {
                    InitArg::Random => SlsInit::Random,
                    InitArg::Dfs => SlsInit::Dfs,
                    InitArg::DfsCp => SlsInit::DfsCp,
                },
                budget: a.budget,
                seed: a.seed,
                ..SlsConfig::default()
            };
            let r = solver::sls_solve(&wcsp, sense, &config);
            ("sls", wcsp, sense, r)
        }
    };
    let report = solve_report(name, sense, &wcsp, &result);
    let summary = match &report.cost {
        Some(c) => format!(
            "{name}: {:?}, cost {c}, {} nodes in {:.3?}",
            result.status, result.stats.nodes_expanded, result.stats.elapsed
        ),
        None => format!("{name}: {:?} after {} nodes", result.status, result.stats.nodes_expanded),
    };
    let mut out = outcome(&report, summary)?;
    out.infeasible = matches!(result.status, SolveStatus::Infeasible | SolveStatus::NoSolutionFound);
    Ok(out)
}

// ---- learn ----

#[derive(Serialize)]
struct CspOutput {
    learned: LearnedConstraints,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain_size: Option<usize>,
}

fn learn_csp(a: CspArgs) -> Result<Outcome> {
    let corpus = read_schedules(&a.input)?;
    let learned = learner::learn_csp(&corpus)?;
    let mut domain_size = None;
    if let Some(path) = &a.wcsp_out {
        let per_shift = a
            .costs
            .iter()
            .map(|c| rational_arg("costs", c))
            .collect::<Result<Vec<_>>>()?;
        let costs = vec![per_shift; learned.n];
        let options = DomainOptions {
            cap: a.domain_cap,
            streaming: a.streaming,
        };
        let wcsp = learner::constraints_to_wcsp(&learned, &costs, options)?;
        domain_size = Some(wcsp.domain.len());
        write(path, &io::serialize_wcsp(&wcsp))?;
    }
    let summary = format!(
        "learned from {} schedules: c2={} c3={} c4={} c5={}",
        corpus.len(),
        learned.c2_min_coverage,
        learned.c3_max_shifts_per_day,
        learned.c4_no_night_morning,
        learned.c5_max_shifts_per_week
    );
    outcome(&CspOutput { learned, domain_size }, summary)
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum PredictionOut {
    Filled { matrix: Vec<Vec<f64>>, distance: f64 },
    Rejected { distance: f64, threshold: f64 },
}

#[derive(Serialize)]
struct NmfOutput {
    rank: usize,
    seed: u64,
    restarts: usize,
    iterations: usize,
    converged: bool,
    final_error: f64,
    gate_threshold: f64,
    w: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    reconstruction: Vec<Vec<f64>>,
    error_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<PredictionOut>,
}

fn learn_nmf(a: NmfArgs) -> Result<Outcome> {
    let m = parse_file(&a.input, io::parse_matrix_csv)?;
    if m.known.iter().any(|k| !k) {
        return Err(CliError::Usage(format!(
            "{} has unknown cells; pass it with --partial",
            a.input.display()
        )));
    }
    let config = NmfConfig {
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.seed,
        restarts: a.restarts,
        gate_threshold: a.threshold,
        ..NmfConfig::new(a.rank)
    };
    let factors = learner::nmf_factorize(&m.values, &config)?;
    let prediction = match &a.partial {
        Some(path) => {
            let p = parse_file(path, io::parse_matrix_csv)?;
            let partial = PartialMatrix::new(p.values, p.known)?;
            Some(match learner::nmf_predict(&partial, &factors, &m.values)? {
                NmfPrediction::Filled { matrix, distance } => PredictionOut::Filled {
                    matrix: rows(&matrix),
                    distance,
                },
                NmfPrediction::Rejected { distance, threshold } => PredictionOut::Rejected { distance, threshold },
            })
        }
        None => None,
    };
    let mut summary = format!(
        "rank {} after {} iterations: error {:.6}",
        factors.rank,
        factors.iterations,
        factors.final_error()
    );
    match &prediction {
        Some(PredictionOut::Filled { distance, .. }) => summary += &format!(", completed (distance {distance:.3})"),
        Some(PredictionOut::Rejected { distance, threshold }) => {
            summary += &format!(", rejected (distance {distance:.3} > {threshold:.3})")
        }
        None => {}
    }
    outcome(
        &NmfOutput {
            rank: factors.rank,
            seed: a.seed,
            restarts: a.restarts,
            iterations: factors.iterations,
            converged: factors.converged,
            final_error: factors.final_error(),
            gate_threshold: factors.gate_threshold,
            w: rows(&factors.w),
            h: rows(&factors.h),
            reconstruction: rows(&factors.reconstruction()),
            error_trace: factors.error_trace.clone(),
            prediction,
        },
        summary,
    )
}

#[derive(Serialize)]
struct BenchOutput {
    seed: u64,
    rows: Vec<learner::BenchRow>,
    linear: bool,
}

fn learn_bench(a: BenchArgs) -> Result<Outcome> {
    let rows = learner::learning_benchmark(&a.sizes, a.seed)?;
    let linear = learner::scales_linearly(&rows, 2.0);
    let summary = rows
        .iter()
        .map(|r| format!("{} schedules: {:.3?}", r.size, r.duration))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        &BenchOutput {
            seed: a.seed,
            rows,
            linear,
        },
        summary,
    )
}

// ---- eval ----

fn eval_fn(a: FnArgs) -> Result<Outcome> {
    let m = parse_file(&a.a, io::parse_matrix_csv)?;
    let n = parse_file(&a.b, io::parse_matrix_csv)?;
    let mut report = QualityReport::new("frobenius")
        .setting("a", a.a.display())
        .setting("b", a.b.display());
    let d = eval::frobenius_distance(&m.values, &n.values)?;
    report.frobenius = Some(d);
    outcome(&report, format!("distance {d}"))
}

fn eval_report(a: ReportArgs) -> Result<Outcome> {
    let input = parse_file(&a.input, io::parse_schedule_csv)?;
    let generated = match a.generated.as_slice() {
        [one] if one.extension().is_some_and(|e| e == "json") => {
            read_json::<BayesSimulateOutput>(one)?.schedules
        }
        paths => read_schedules(paths)?,
    };
    let aggregation = match a.aggregation {
        AggregationArg::Mean => Aggregation::Mean,
        AggregationArg::Min => Aggregation::Min,
        AggregationArg::Max => Aggregation::Max,
    };
    let report = eval::compare_generated(&a.method, &input, &generated, aggregation)?
        .setting("generated", generated.len());
    let summary = format!(
        "{} against {} schedules: {:?}",
        a.method,
        generated.len(),
        report.frobenius
    );
    outcome(&report, summary)
}
