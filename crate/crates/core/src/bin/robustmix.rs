//! Batch front end: every subcommand reads files, writes files and a run
//! manifest next to its main output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use robustmix::analysis::{check_ratio, check_submodular, dual_certificate, SetFunctionSpec, SubmodularCheck};
use robustmix::evaluation::{
    export_tradeoffs, scalarize, score_per_pair, mean_metrics, split_scenarios, weight_grid, Metrics, Split, TradeoffRecord,
    Weights, DEFAULT_ALPHA,
};
use robustmix::instances::{gen_synthetic, incidence, sample_st_pairs, Graph, Instance, NoiseModel, Solution, SyntheticSpec};
use robustmix::mip_emit::{check_emitted, emit_model};
use robustmix::solvers::{auto_method, evaluate_wrp, solve, Method, SolveOptions};
use robustmix::tuning::{baseline_grid, evaluate_config, tune, ConfigSpace, TuneProblem};
use robustmix::uncertainty::{Mixture, MixtureSpec, ScenarioMatrix, SetKind, UncertaintySet};
use robustmix::Error;

#[derive(Parser, Debug)]
#[command(name = "robustmix", version, about = "Robust combinatorial optimization under mixtures of uncertainty sets")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "ROBUSTMIX_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic grid graph and scenario matrix.
    Gen(GenArgs),
    /// Sample s-t pairs at a minimum hop distance.
    Pairs(PairsArgs),
    /// Solve one mixture for one or many s-t pairs.
    Solve(SolveArgs),
    /// Score solutions against scenarios.
    Evaluate(EvaluateArgs),
    /// Evaluate the 41-point single-family grids.
    Baseline(BaselineArgs),
    /// Tune a mixture configuration by racing.
    Tune(TuneArgs),
    /// Write the mixed-integer model in LP format.
    EmitMip(EmitArgs),
    /// Run the randomized property suites.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest.
    Replay { manifest_file: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Noise {
    TwoBlock,
    Gaussian,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 6)]
    width: usize,
    #[arg(long, default_value_t = 6)]
    height: usize,
    #[arg(long, default_value_t = 40)]
    scenarios: usize,
    #[arg(long, value_enum, default_value_t = Noise::TwoBlock)]
    noise: Noise,
    /// Relative Gaussian noise per arc.
    #[arg(long, default_value_t = 0.15)]
    sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    inflate_a: f64,
    #[arg(long, default_value_t = 0.6)]
    inflate_b: f64,
    /// Half-width of the global congestion factor (gaussian noise).
    #[arg(long, default_value_t = 0.3)]
    spread: f64,
    #[arg(long)]
    out_graph: PathBuf,
    #[arg(long)]
    out_scenarios: PathBuf,
}

#[derive(Args, Debug)]
struct PairsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    min_hops: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    /// Build sets on the training part of a seeded split with this ratio
    /// instead of on all scenarios.
    #[arg(long)]
    train_ratio: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long, requires = "target", conflicts_with = "pairs")]
    source: Option<usize>,
    #[arg(long, requires = "source")]
    target: Option<usize>,
    /// CSV of `source,target` rows.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    method: String,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Seconds per pair for branch and bound.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    enum_cap: usize,
    #[arg(long, default_value_t = 1_000_000)]
    brute_cap: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Sample {
    All,
    In,
    Out,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Solutions file written by `solve`.
    #[arg(long)]
    solutions: PathBuf,
    #[arg(long, value_enum, default_value_t = Sample::All)]
    sample: Sample,
    /// Split ratio used with `--sample in|out`.
    #[arg(long, default_value_t = 0.75)]
    train_ratio: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Per-pair metrics CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum BaselineKind {
    Interval,
    Hull,
    Ellipsoid,
    All,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    train_ratio: f64,
    #[arg(long, default_value_t = 2_000)]
    node_cap: usize,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long = "type", value_enum, default_value_t = BaselineKind::All)]
    kind: BaselineKind,
    /// Also report the best grid point under these weights.
    #[arg(long)]
    weights: Option<String>,
    /// Trade-off CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, conflicts_with = "weight_grid", required_unless_present = "weight_grid")]
    weights: Option<String>,
    /// Sweep every weight triple on a grid with this step.
    #[arg(long)]
    weight_grid: Option<f64>,
    #[arg(long, default_value_t = 3)]
    max_parents: usize,
    #[arg(long, default_value_t = 20)]
    generation_size: usize,
    /// Comma-separated set types the tuner may use.
    #[arg(long, default_value = "interval,hull,ellipsoid")]
    types: String,
    /// Best mixture JSON; with `--weight-grid`, a directory.
    #[arg(long)]
    out: PathBuf,
    /// Evaluation trace CSV (single-weight runs).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmitArgs {
    #[arg(long)]
    mixture: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long, requires_all = ["source", "target"], conflicts_with = "selection")]
    graph: Option<PathBuf>,
    #[arg(long)]
    source: Option<usize>,
    #[arg(long)]
    target: Option<usize>,
    /// Cardinality instance `n,p` instead of a path.
    #[arg(long)]
    selection: Option<String>,
    /// Solve exactly, then re-read the file and check it at the optimum.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Serialize)]
enum Suite {
    Submodular,
    Ratio,
    Dual,
    All,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Ground-set size for the submodularity suite.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    command: String,
    argv: Vec<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: u64,
    params: serde_json::Value,
    version: String,
    wall_time_secs: f64,
}

enum Outcome {
    Done,
    /// Output written, but a budget stopped an exact method.
    Partial,
}

struct Run {
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    params: serde_json::Value,
    outcome: Outcome,
}

type CliResult<T> = Result<T, Error>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn with_path<T>(path: &Path, r: CliResult<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

fn load_graph(path: &Path) -> CliResult<Arc<Graph>> {
    Ok(Arc::new(with_path(path, Graph::parse(&read(path)?))?))
}

fn load_scenarios(path: &Path) -> CliResult<ScenarioMatrix> {
    with_path(path, ScenarioMatrix::parse_csv(&read(path)?))
}

fn load_pairs(path: &Path) -> CliResult<Vec<(usize, usize)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let pairs = reader.deserialize::<(usize, usize)>().collect::<Result<Vec<_>, _>>()?;
    Ok(pairs)
}

fn write_pairs(path: &Path, pairs: &[(usize, usize)]) -> CliResult<()> {
    let mut text = String::from("source,target\n");
    for (s, t) in pairs {
        writeln!(text, "{s},{t}").unwrap();
    }
    write(path, &text)
}

fn check_arcs(graph: &Graph, data: &ScenarioMatrix) -> CliResult<()> {
    if graph.num_arcs() != data.n() {
        return Err(Error::Invalid(format!("graph has {} arcs but scenarios have {} columns", graph.num_arcs(), data.n())));
    }
    Ok(())
}

fn training_data(data: &ScenarioMatrix, ratio: Option<f64>, seed: u64) -> CliResult<ScenarioMatrix> {
    match ratio {
        Some(r) => data.select(&split_scenarios(data.k(), r, seed)?.train),
        None => Ok(data.clone()),
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

fn cmd_gen(a: &GenArgs, seed: u64) -> CliResult<Run> {
    let noise = match a.noise {
        Noise::TwoBlock => NoiseModel::TwoBlock { inflate_a: a.inflate_a, inflate_b: a.inflate_b, sigma: a.sigma },
        Noise::Gaussian => NoiseModel::Gaussian { spread: a.spread, sigma: a.sigma },
    };
    let spec = SyntheticSpec { width: a.width, height: a.height, scenarios: a.scenarios, noise, seed };
    let (g, data) = gen_synthetic(&spec)?;
    write(&a.out_graph, &g.to_text())?;
    write(&a.out_scenarios, &data.to_csv())?;
    println!("nodes={} arcs={} scenarios={}", g.num_nodes(), g.num_arcs(), data.k());
    Ok(Run {
        command: "gen",
        inputs: vec![],
        outputs: vec![a.out_graph.clone(), a.out_scenarios.clone()],
        params: serde_json::to_value(spec).unwrap(),
        outcome: Outcome::Done,
    })
}

fn cmd_pairs(a: &PairsArgs, seed: u64) -> CliResult<Run> {
    let g = load_graph(&a.graph)?;
    let pairs = sample_st_pairs(&g, a.count, a.min_hops, seed)?;
    write_pairs(&a.out, &pairs)?;
    println!("pairs={}", pairs.len());
    Ok(Run {
        command: "pairs",
        inputs: vec![a.graph.clone()],
        outputs: vec![a.out.clone()],
        params: serde_json::json!({ "count": a.count, "min_hops": a.min_hops }),
        outcome: Outcome::Done,
    })
}

fn cmd_solve(a: &SolveArgs, seed: u64) -> CliResult<Run> {
    let g = load_graph(&a.data.graph)?;
    let data = load_scenarios(&a.data.scenarios)?;
    check_arcs(&g, &data)?;
    let spec = MixtureSpec::from_json(&read(&a.mixture)?)?;
    let mix = spec.build(&training_data(&data, a.data.train_ratio, seed)?)?;
    let method: Method = a.method.parse()?;
    let pairs = match (&a.pairs, a.source, a.target) {
        (Some(p), _, _) => load_pairs(p)?,
        (None, Some(s), Some(t)) => vec![(s, t)],
        _ => return Err(Error::Invalid("give --source and --target, or --pairs".into())),
    };
    let opts = SolveOptions {
        enum_cap: a.enum_cap,
        brute_cap: a.brute_cap,
        node_limit: a.node_limit,
        time_limit: a.time_limit.map(Duration::from_secs_f64),
        restarts: a.restarts,
        seed,
    };
    let resolved = if method == Method::Auto { auto_method(&mix, &opts) } else { method };
    let mut text = String::from("source,target,method,objective,optimal,arcs\n");
    let mut partial = false;
    for &(s, t) in &pairs {
        let inst = Instance::shortest_path(Arc::clone(&g), s, t)?;
        let r = solve(&inst, &mix, resolved, &opts)?;
        partial |= r.method == Method::Bnb && !r.optimal;
        let arcs: Vec<String> = r.solution.items().iter().map(usize::to_string).collect();
        writeln!(text, "{s},{t},{},{},{},{}", r.method, fmt6(r.objective), r.optimal, arcs.join(" ")).unwrap();
        println!("source={s} target={t} objective={} optimal={}", fmt6(r.objective), r.optimal);
    }
    write(&a.out, &text)?;
    Ok(Run {
        command: "solve",
        inputs: [&a.data.graph, &a.data.scenarios, &a.mixture].into_iter().cloned().chain(a.pairs.clone()).collect(),
        outputs: vec![a.out.clone()],
        params: serde_json::json!({
            "method": resolved.name(),
            "pairs": pairs.len(),
            "train_ratio": a.data.train_ratio,
            "node_limit": a.node_limit,
            "time_limit": a.time_limit,
            "enum_cap": a.enum_cap,
            "brute_cap": a.brute_cap,
            "restarts": a.restarts,
        }),
        outcome: if partial { Outcome::Partial } else { Outcome::Done },
    })
}

#[derive(Deserialize)]
struct SolutionRow {
    source: usize,
    target: usize,
    #[allow(dead_code)]
    method: String,
    #[allow(dead_code)]
    objective: f64,
    #[allow(dead_code)]
    optimal: bool,
    arcs: String,
}

fn cmd_evaluate(a: &EvaluateArgs, seed: u64) -> CliResult<Run> {
    let data = load_scenarios(&a.scenarios)?;
    let mut reader = csv::Reader::from_path(&a.solutions)?;
    let rows: Vec<SolutionRow> = reader.deserialize().collect::<Result<_, _>>()?;
    let mut sols = Vec::new();
    for r in &rows {
        let arcs: Vec<usize> = r
            .arcs
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Invalid(format!("bad arc index `{t}`"))))
            .collect::<CliResult<_>>()?;
        if let Some(&bad) = arcs.iter().find(|&&i| i >= data.n()) {
            return Err(Error::Invalid(format!("arc {bad} out of range for {} scenario columns", data.n())));
        }
        sols.push(Solution { x: incidence(data.n(), &arcs), value: 0.0 });
    }
    let pool = match a.sample {
        Sample::All => data,
        Sample::In | Sample::Out => {
            let Split { train, test } = split_scenarios(data.k(), a.train_ratio, seed)?;
            data.select(if matches!(a.sample, Sample::In) { &train } else { &test })?
        }
    };
    if sols.is_empty() {
        return Err(Error::Invalid("solutions file has no rows".into()));
    }
    let per_pair = score_per_pair(&sols, &pool, a.alpha)?;
    let mut text = String::from("source,target,avg,max,cvar\n");
    for (r, m) in rows.iter().zip(&per_pair) {
        writeln!(text, "{},{},{},{},{}", r.source, r.target, fmt6(m.avg), fmt6(m.max), fmt6(m.cvar)).unwrap();
    }
    write(&a.out, &text)?;
    println!("{}", mean_metrics(&per_pair));
    Ok(Run {
        command: "evaluate",
        inputs: vec![a.scenarios.clone(), a.solutions.clone()],
        outputs: vec![a.out.clone()],
        params: serde_json::json!({ "sample": a.sample, "train_ratio": a.train_ratio, "alpha": a.alpha }),
        outcome: Outcome::Done,
    })
}

struct Experiment {
    graph: Arc<Graph>,
    data: ScenarioMatrix,
    pairs: Vec<(usize, usize)>,
    split: Split,
}

fn load_experiment(a: &ExperimentArgs, seed: u64) -> CliResult<Experiment> {
    let graph = load_graph(&a.graph)?;
    let data = load_scenarios(&a.scenarios)?;
    check_arcs(&graph, &data)?;
    let pairs = load_pairs(&a.pairs)?;
    let split = split_scenarios(data.k(), a.train_ratio, seed)?;
    Ok(Experiment { graph, data, pairs, split })
}

impl Experiment {
    fn problem(&self, weights: Weights) -> TuneProblem<'_> {
        TuneProblem { graph: Arc::clone(&self.graph), pairs: &self.pairs, data: &self.data, split: &self.split, weights }
    }
}

fn cmd_baseline(a: &BaselineArgs, seed: u64) -> CliResult<Run> {
    let exp = load_experiment(&a.exp, seed)?;
    let weights = a.weights.as_deref().map(str::parse::<Weights>).transpose()?;
    let problem = exp.problem(weights.unwrap_or(Weights { avg: 1.0, max: 0.0, cvar: 0.0 }));
    let kinds: Vec<SetKind> = match a.kind {
        BaselineKind::Interval => vec![SetKind::Interval],
        BaselineKind::Hull => vec![SetKind::Hull],
        BaselineKind::Ellipsoid => vec![SetKind::Ellipsoid],
        BaselineKind::All => vec![SetKind::Interval, SetKind::Hull, SetKind::Ellipsoid],
    };
    let mut records = Vec::new();
    for kind in kinds {
        let grid = baseline_grid(kind, &problem, a.exp.node_cap)?;
        if let Some(w) = &weights {
            let best = grid
                .iter()
                .min_by(|x, y| scalarize(&x.out_sample, w).total_cmp(&scalarize(&y.out_sample, w)))
                .expect("41 points");
            println!("type={kind} best_lambda={} out_cost={}", fmt6(best.lambda), fmt6(scalarize(&best.out_sample, w)));
        }
        records.extend(grid.into_iter().map(|p| TradeoffRecord {
            label: format!("{kind}:{}", fmt6(p.lambda)),
            in_sample: p.in_sample,
            out_sample: p.out_sample,
        }));
    }
    let rows = export_tradeoffs(&records, &a.out)?;
    println!("rows={rows}");
    Ok(Run {
        command: "baseline",
        inputs: vec![a.exp.graph.clone(), a.exp.scenarios.clone(), a.exp.pairs.clone()],
        outputs: vec![a.out.clone()],
        params: serde_json::json!({
            "type": format!("{:?}", a.kind).to_lowercase(),
            "train_ratio": a.exp.train_ratio,
            "node_cap": a.exp.node_cap,
            "weights": weights,
        }),
        outcome: Outcome::Done,
    })
}

fn tune_line(w: &Weights, best: &MixtureSpec, cost: f64, out: &Metrics) -> String {
    format!("weights={w} in_cost={} out_cost={} mixture={}", fmt6(cost), fmt6(scalarize(out, w)), best.to_json())
}

fn cmd_tune(a: &TuneArgs, seed: u64) -> CliResult<Run> {
    let exp = load_experiment(&a.exp, seed)?;
    let types = a
        .types
        .split(',')
        .map(|t| t.trim().parse::<SetKind>().map(|k| (k, k.lambda_range())))
        .collect::<CliResult<Vec<_>>>()?;
    let space = ConfigSpace {
        max_parents: a.max_parents,
        types,
        budget: a.budget,
        generation_size: a.generation_size,
        node_cap: a.exp.node_cap,
        ..ConfigSpace::default()
    };
    println!("budget={}", a.budget);
    let mut outputs = Vec::new();
    let mut complete = true;
    if let Some(w) = &a.weights {
        let w: Weights = w.parse()?;
        let problem = exp.problem(w);
        let r = tune(&space, &problem, seed)?;
        complete = r.complete;
        write(&a.out, &format!("{}\n", r.best.to_json()))?;
        outputs.push(a.out.clone());
        if let Some(trace) = &a.trace {
            r.write_trace(trace)?;
            outputs.push(trace.clone());
        }
        let (_, _, out) = evaluate_config(&r.best, &problem, a.exp.node_cap)?;
        println!("{} complete={}", tune_line(&w, &r.best, r.best_cost, &out), r.complete);
    } else {
        let step = a.weight_grid.expect("clap requires weights or a grid");
        fs::create_dir_all(&a.out).map_err(|e| Error::Io { path: a.out.clone(), source: e })?;
        let mut sweep = String::from("index,w_avg,w_max,w_cvar,in_cost,out_cost,complete,mixture\n");
        for (k, w) in weight_grid(step)?.into_iter().enumerate() {
            let problem = exp.problem(w);
            let r = tune(&space, &problem, seed)?;
            complete &= r.complete;
            let path = a.out.join(format!("best_{k:02}.json"));
            write(&path, &format!("{}\n", r.best.to_json()))?;
            let trace = a.out.join(format!("trace_{k:02}.csv"));
            r.write_trace(&trace)?;
            outputs.extend([path, trace]);
            let (_, _, out) = evaluate_config(&r.best, &problem, a.exp.node_cap)?;
            println!("{}", tune_line(&w, &r.best, r.best_cost, &out));
            let mut rec = csv::Writer::from_writer(Vec::new());
            rec.write_record([
                k.to_string(),
                w.avg.to_string(),
                w.max.to_string(),
                w.cvar.to_string(),
                fmt6(r.best_cost),
                fmt6(scalarize(&out, &w)),
                r.complete.to_string(),
                r.best.to_json(),
            ])?;
            sweep.push_str(&String::from_utf8(rec.into_inner().expect("in-memory writer")).expect("utf-8"));
        }
        let path = a.out.join("sweep.csv");
        write(&path, &sweep)?;
        outputs.push(path);
    }
    Ok(Run {
        command: "tune",
        inputs: vec![a.exp.graph.clone(), a.exp.scenarios.clone(), a.exp.pairs.clone()],
        outputs,
        params: serde_json::json!({
            "budget": a.budget,
            "weights": a.weights,
            "weight_grid": a.weight_grid,
            "max_parents": a.max_parents,
            "generation_size": a.generation_size,
            "types": a.types,
            "train_ratio": a.exp.train_ratio,
            "node_cap": a.exp.node_cap,
        }),
        outcome: if complete { Outcome::Done } else { Outcome::Partial },
    })
}

fn cmd_emit(a: &EmitArgs, _seed: u64) -> CliResult<Run> {
    let data = load_scenarios(&a.scenarios)?;
    let mix = MixtureSpec::from_json(&read(&a.mixture)?)?.build(&data)?;
    let inst = match (&a.graph, &a.selection) {
        (Some(g), _) => {
            let g = load_graph(g)?;
            check_arcs(&g, &data)?;
            Instance::shortest_path(g, a.source.expect("clap"), a.target.expect("clap"))?
        }
        (None, Some(sel)) => {
            let parts: Vec<usize> = sel
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Invalid(format!("bad selection `{sel}`"))))
                .collect::<CliResult<_>>()?;
            let [n, p] = parts[..] else { return Err(Error::Invalid(format!("expected n,p, got `{sel}`"))) };
            Instance::selection(n, p)?
        }
        (None, None) => return Err(Error::Invalid("give --graph with --source/--target, or --selection".into())),
    };
    let stats = emit_model(&inst, &mix, &a.out)?;
    println!(
        "binary={} continuous={} constraints={} constant={}",
        stats.num_binary,
        stats.num_continuous,
        stats.num_constraints,
        fmt6(stats.objective_constant)
    );
    let mut outcome = Outcome::Done;
    if a.check {
        let r = solve(&inst, &mix, Method::Auto, &SolveOptions::default())?;
        let check = check_emitted(&inst, &mix, &r.solution.x, &a.out)?;
        println!(
            "check structure={} feasible={} objective_match={} objective={}",
            check.structure_ok,
            check.feasible,
            check.objective_match,
            fmt6(check.file_objective)
        );
        if !check.ok() {
            return Err(Error::Invalid("emitted model does not reproduce the mixture objective".into()));
        }
        if !r.optimal {
            outcome = Outcome::Partial;
        }
    }
    let mut inputs = vec![a.mixture.clone(), a.scenarios.clone()];
    inputs.extend(a.graph.clone());
    Ok(Run {
        command: "emit-mip",
        inputs,
        outputs: vec![a.out.clone()],
        params: serde_json::json!({ "source": a.source, "target": a.target, "selection": a.selection, "check": a.check }),
        outcome,
    })
}

fn random_budgeted(rng: &mut ChaCha8Rng, n: usize) -> Mixture {
    let comps = rng.random_range(1..=2);
    Mixture::from_pairs((0..comps).map(|_| {
        let lo: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.0..5.0)).collect();
        let gamma = rng.random_range(0..=n);
        (rng.random_range(0.1..1.0), UncertaintySet::budgeted(lo, hi, gamma).expect("valid bounds"))
    }))
    .expect("valid weights")
}

fn random_hulls(rng: &mut ChaCha8Rng, n: usize) -> Mixture {
    let comps = rng.random_range(1..=3);
    Mixture::from_pairs((0..comps).map(|_| {
        let k = rng.random_range(1..=4);
        let points = (0..k).map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        (rng.random_range(0.1..1.0), UncertaintySet::hull(points).expect("nonempty"))
    }))
    .expect("valid weights")
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> CliResult<(Run, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = String::new();
    let mut all_ok = true;
    let run = |s: Suite| a.suite == s || a.suite == Suite::All;

    if run(Suite::Submodular) {
        let mut failures = 0;
        for _ in 0..a.cases {
            let spec = SetFunctionSpec { n: a.n, mixture: random_budgeted(&mut rng, a.n) };
            if let SubmodularCheck::Violation { s, t } = check_submodular(&spec)? {
                failures += 1;
                writeln!(report, "submodular violation S={s:?} T={t:?}").unwrap();
            }
        }
        let square = |x: &[bool]| (x.iter().filter(|&&b| b).count() as f64).powi(2);
        let control = robustmix::analysis::check_submodular_fn(2, square)?;
        let control_ok = matches!(control, SubmodularCheck::Violation { .. });
        writeln!(report, "submodular cases={} violations={failures} control_detected={control_ok}", a.cases).unwrap();
        all_ok &= failures == 0 && control_ok;
    }
    if run(Suite::Ratio) {
        let (mut failures, mut worst) = (0, 1.0f64);
        for _ in 0..a.cases {
            let n = rng.random_range(2..=8);
            let p = rng.random_range(1..=n);
            let inst = Instance::selection(n, p)?;
            let r = check_ratio(&inst, &random_hulls(&mut rng, n), 1_000_000)?;
            worst = worst.max(r.ratio);
            failures += usize::from(!r.ok);
        }
        writeln!(report, "ratio cases={} failures={failures} max_ratio={}", a.cases, fmt6(worst)).unwrap();
        all_ok &= failures == 0;
    }
    if run(Suite::Dual) {
        let mut failures = 0;
        for _ in 0..a.cases {
            let n = rng.random_range(1..=10);
            let mix = random_budgeted(&mut rng, n);
            let x: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let cert = dual_certificate(&mix, &x)?;
            let ok = cert.is_feasible(&mix, &x) && (cert.objective - evaluate_wrp(&mix, &x)?).abs() <= 1e-9;
            failures += usize::from(!ok);
        }
        writeln!(report, "dual cases={} failures={failures}", a.cases).unwrap();
        all_ok &= failures == 0;
    }
    print!("{report}");
    let outputs = match &a.out {
        Some(p) => {
            write(p, &report)?;
            vec![p.clone()]
        }
        None => vec![],
    };
    let run = Run {
        command: "verify",
        inputs: vec![],
        outputs,
        params: serde_json::json!({ "suite": a.suite, "cases": a.cases, "n": a.n }),
        outcome: Outcome::Done,
    };
    Ok((run, all_ok))
}

fn manifest_path(cli_override: &Option<PathBuf>, run: &Run) -> Option<PathBuf> {
    cli_override.clone().or_else(|| {
        run.outputs.first().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 3,
        _ => 2,
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<u8> {
    if let Some(t) = cli.threads {
        // a second initialization (replay) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let start = Instant::now();
    let seed = cli.seed;
    let mut verified = true;
    let run = match &cli.command {
        Command::Gen(a) => cmd_gen(a, seed)?,
        Command::Pairs(a) => cmd_pairs(a, seed)?,
        Command::Solve(a) => cmd_solve(a, seed)?,
        Command::Evaluate(a) => cmd_evaluate(a, seed)?,
        Command::Baseline(a) => cmd_baseline(a, seed)?,
        Command::Tune(a) => cmd_tune(a, seed)?,
        Command::EmitMip(a) => cmd_emit(a, seed)?,
        Command::Verify(a) => {
            let (run, ok) = cmd_verify(a, seed)?;
            verified = ok;
            run
        }
        Command::Replay { manifest_file } => return replay(manifest_file),
    };
    if let Some(path) = manifest_path(&cli.manifest, &run) {
        let manifest = Manifest {
            command: run.command.to_string(),
            argv,
            inputs: run.inputs.clone(),
            outputs: run.outputs.clone(),
            seed,
            params: run.params.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: start.elapsed().as_secs_f64(),
        };
        write(&path, &format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
    }
    Ok(match run.outcome {
        _ if !verified => 1,
        Outcome::Done => 0,
        Outcome::Partial => 4,
    })
}

fn replay(path: &Path) -> CliResult<u8> {
    let manifest: Manifest = serde_json::from_str(&read(path)?)?;
    let mut args = vec!["robustmix".to_string()];
    args.extend(manifest.argv.iter().cloned());
    let mut cli = Cli::try_parse_from(&args).map_err(|e| Error::Invalid(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Error::Invalid("a manifest cannot replay another replay".into()));
    }
    cli.seed = manifest.seed;
    execute(cli, manifest.argv)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match execute(cli, argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("robustmix: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
