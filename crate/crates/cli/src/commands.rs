use std::fs;
use std::path::{Path, PathBuf};

use hopnet::harness::seed::{init_seed, sample_patterns, training_seed};
use hopnet::harness::{
    curve_area, extract_curve, load_grid, persist_curve, persist_grid, run_grid_with, CurveResult, Execution,
    ExperimentConfig, Format,
};
use hopnet::{
    energy, evolve, overlap, NetworkParams, Pattern, RuleKind, RuleSpec, Terminal,
    TrainReport,
};
use serde::{Deserialize, Serialize};

use crate::settings::{Resolved, Settings};
use crate::{CliError, CompareArgs, CurveArgs, GridArgs, RecallArgs, TrainArgs};

/// What `train` writes and `recall` reads.
#[derive(Serialize, Deserialize)]
pub struct NetworkFile {
    pub network: NetworkParams,
    pub rule: RuleSpec,
    pub patterns: Vec<Pattern>,
    pub report: TrainReport,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn execution(workers: Option<usize>) -> Execution {
    match workers {
        None => Execution::default(),
        Some(1) => Execution::Sequential,
        Some(workers) => Execution::Parallel { workers },
    }
}

fn announce<T: Serialize>(value: &T) {
    let json = serde_json::to_string_pretty(value).expect("configuration serializes");
    println!("resolved configuration:\n{json}");
}

#[derive(Serialize)]
struct TrainConfig<'a> {
    n: usize,
    p: usize,
    seed: u64,
    patterns: Option<&'a Path>,
    rule: &'a RuleSpec,
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let s = args.common.settings.layered(args.common.config.as_ref())?;
    let kind = s.rule.unwrap_or(RuleKind::Hebbian);
    let spec = s.rule_spec(kind);
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let master = s.seed.unwrap_or(0);

    let supplied: Option<Vec<Pattern>> = args.patterns.as_deref().map(read_json).transpose()?;
    let (n, p) = match &supplied {
        Some(pats) => {
            let n = pats.first().map(Pattern::len).ok_or_else(|| CliError::Usage("pattern file is empty".into()))?;
            (s.n.unwrap_or(n), pats.len())
        }
        None => {
            let p = s.p.ok_or_else(|| CliError::Usage("train needs --p or --patterns".into()))?.0;
            if p.start != p.end {
                return Err(CliError::Usage(format!("train takes a single pattern count, got {p}")));
            }
            (s.n.unwrap_or(32), p.start)
        }
    };
    if n == 0 {
        return Err(CliError::Usage("N must be positive".into()));
    }
    announce(&TrainConfig { n, p, seed: master, patterns: args.patterns.as_deref(), rule: &spec });

    let ts = training_seed(master, p, 0);
    let patterns = match supplied {
        Some(pats) => pats,
        None => sample_patterns(n, p, ts)?,
    };
    let (network, report) = hopnet::train(&spec, &patterns, n, init_seed(ts))?;
    if !network.is_finite() {
        return Err(CliError::Runtime("training produced non-finite weights".into()));
    }
    println!("min stability margin: {}", report.min_margin);
    println!("converged: {}", report.converged);
    println!("sweeps: {}", report.sweeps_used);
    write_json(&args.out, &NetworkFile { network, rule: spec, patterns, report })?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn terminal_name(t: Terminal) -> &'static str {
    match t {
        Terminal::FixedPoint => "fixed_point",
        Terminal::TwoCycle => "two_cycle",
        Terminal::MaxIters => "max_iters",
    }
}

pub fn recall(args: RecallArgs) -> Result<(), CliError> {
    let file: NetworkFile = read_json(&args.net)?;
    let target = file.patterns.get(args.pattern).ok_or_else(|| {
        CliError::Usage(format!("pattern {} out of range; the network stores {}", args.pattern, file.patterns.len()))
    })?;
    let start: Pattern = match &args.state {
        Some(path) => read_json(path)?,
        None => target.clone(),
    };
    if args.max_sweeps == 0 {
        return Err(CliError::Usage("max_sweeps must be at least 1".into()));
    }
    let probe = start.distort(args.flips, args.seed)?;
    let outcome = evolve(&file.network, &probe, args.mode.into(), args.max_sweeps)?;
    let m = overlap(&outcome.final_state, target)?;
    if args.dump {
        println!("initial: {probe}");
        println!("final:   {}", outcome.final_state);
    }
    println!("overlap: {m:?}");
    println!("iterations: {}", outcome.iterations);
    println!("terminal: {}", terminal_name(outcome.terminal));
    println!("energy: {:?}", energy(&file.network, &outcome.final_state)?);
    Ok(())
}

fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<hopnet::harness::GridResult, CliError> {
    Ok(run_grid_with(cfg, execution(workers))?)
}

pub fn grid(args: GridArgs) -> Result<(), CliError> {
    let s = args.common.settings.layered(args.common.config.as_ref())?;
    let resolved = s.resolve()?;
    announce(&resolved);
    let result = run(&resolved.experiment, resolved.workers)?;
    let format = args.format.unwrap_or_else(|| Format::from_path(&args.out));
    persist_grid(&result, &args.out, format)?;
    let curve = extract_curve(&result, resolved.experiment.epsilon)?;
    println!("trials: {}", result.records.len());
    println!("curve area: {}", curve_area(&curve));
    println!("wrote {}", args.out.display());
    Ok(())
}

fn print_curve(curve: &CurveResult) {
    println!("k\tp_eps");
    for (k, p) in &curve.points {
        println!("{k}\t{p}");
    }
    println!("curve area: {}", curve_area(curve));
}

pub fn curve(args: CurveArgs) -> Result<(), CliError> {
    let s = args.common.settings.layered(args.common.config.as_ref())?;
    let curve = match &args.grid {
        Some(path) => {
            let eps = s.epsilon()?;
            #[derive(Serialize)]
            struct FromGrid<'a> {
                grid: &'a Path,
                epsilon: f64,
            }
            announce(&FromGrid { grid: path, epsilon: eps });
            extract_curve(&load_grid(path)?, eps)?
        }
        None => {
            let resolved: Resolved = s.resolve()?;
            announce(&resolved);
            let result = run(&resolved.experiment, resolved.workers)?;
            extract_curve(&result, resolved.experiment.epsilon)?
        }
    };
    print_curve(&curve);
    if let Some(out) = &args.out {
        let format = args.format.unwrap_or_else(|| Format::from_path(out));
        persist_curve(&curve, out, format)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn compare(args: CompareArgs) -> Result<(), CliError> {
    let s: Settings = args.common.settings.layered(args.common.config.as_ref())?;
    if s.rule.is_some() {
        return Err(CliError::Usage("compare takes --rules, not --rule".into()));
    }
    let configs = args
        .rules
        .iter()
        .map(|&kind| s.experiment(kind))
        .collect::<Result<Vec<_>, _>>()?;
    #[derive(Serialize)]
    struct Comparison<'a> {
        experiments: &'a [ExperimentConfig],
        workers: Option<usize>,
    }
    announce(&Comparison { experiments: &configs, workers: s.workers });

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    let mut rows = Vec::new();
    for cfg in &configs {
        let result = run(cfg, s.workers)?;
        let curve = extract_curve(&result, cfg.epsilon)?;
        if let Some(dir) = &args.out {
            let path: PathBuf = dir.join(format!("{}.curve.{}", cfg.rule.kind, extension(args.format)));
            persist_curve(&curve, &path, args.format)?;
        }
        rows.push((cfg.rule.kind, curve_area(&curve)));
    }

    println!("{:<28} {:>8}", "rule", "area");
    for (kind, area) in &rows {
        println!("{:<28} {:>8}", kind.name(), area);
    }
    if let Some(dir) = &args.out {
        let mut table = String::from("rule,area\n");
        for (kind, area) in &rows {
            table.push_str(&format!("{},{}\n", kind.name(), area));
        }
        let path = dir.join("areas.csv");
        fs::write(&path, table).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
