use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use loadplan::harness::{plan_log_csv, write_reports, InitialPiles, RunRecord, ScenarioConfig};
use loadplan::heightfield::{read_hfld, write_csv, write_hfld};
use loadplan::io::write_atomic;
use loadplan::planner::Planner;
use loadplan::vturn::plan_v1;
use loadplan::worldmodel::optimize_action;
use loadplan::{Error, HeightField, Strategy, VTurnLut, WorldModel};

/// Look-ahead planning of wheel-loader loading cycles.
#[derive(Parser, Debug)]
#[command(name = "loadplan", version)]
struct Cli {
    /// Worker threads (defaults to the machine's parallelism).
    #[arg(long, global = true, env = "LOADPLAN_JOBS")]
    jobs: Option<usize>,
    /// Print the effective configuration and progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArg {
    /// Scenario JSON (built-in defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an initial pile and write it as HFLD (or CSV for a .csv path).
    GeneratePile {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute the V-turn lookup table and write it as VLUT.
    PrecomputeVturns {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one strategy on one pile and write its plan log.
    Plan {
        #[command(flatten)]
        config: ConfigArg,
        /// greedy, max_loading, nominal, tree or tree-d<N>.
        #[arg(long)]
        strategy: Option<String>,
        /// Search depth; `tree` with depth 1 is the greedy strategy.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cycles: Option<usize>,
        /// Initial pile (HFLD) instead of a generated one.
        #[arg(long)]
        heightfield: Option<PathBuf>,
        /// Precomputed V-turn table (VLUT).
        #[arg(long)]
        lut: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured seed, depth and strategy and write the reports.
    Experiment {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        heightfield: Option<PathBuf>,
        #[arg(long)]
        lut: Option<PathBuf>,
        #[arg(long)]
        cycles: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the parts of a single loading-cycle prediction.
    Profile {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lut: Option<PathBuf>,
        /// Mean budget for one prediction, in milliseconds.
        #[arg(long, default_value_t = 100.0)]
        budget_ms: f64,
    },
    /// Print the complete built-in configuration.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(arg: &ConfigArg) -> Result<ScenarioConfig, Failure> {
    match &arg.config {
        Some(p) => Ok(ScenarioConfig::load(p)?),
        None => Ok(ScenarioConfig::default()),
    }
}

fn show(verbose: bool, config: &ScenarioConfig) {
    if verbose {
        eprintln!("effective config:\n{}", config.to_json());
    }
}

fn lut_for(config: &ScenarioConfig, path: Option<&Path>, verbose: bool) -> Result<VTurnLut, Failure> {
    let lut = match path {
        Some(p) => VTurnLut::read(p)?,
        None => {
            let t = Instant::now();
            let lut = config.build_lut()?;
            if verbose {
                eprintln!("built V-turn table ({} nodes) in {:.1} s", lut.len(), t.elapsed().as_secs_f64());
            }
            lut
        }
    };
    config.check_lut(&lut)?;
    Ok(lut)
}

fn resolve_strategy(strategy: Option<&str>, depth: Option<usize>) -> Result<Strategy, Failure> {
    let usage = |m: String| Failure::Usage(m);
    match (strategy, depth) {
        (None | Some("tree"), Some(d)) if d >= 1 => Ok(Strategy::Tree { depth: d }),
        (Some("tree"), None) => Err(usage("--strategy tree needs --depth".into())),
        (None, None) => Ok(Strategy::Greedy),
        (_, Some(0)) => Err(usage("--depth must be at least 1".into())),
        (Some(s), d) => {
            let parsed = Strategy::parse(s).map_err(|e| usage(e.to_string()))?;
            match (parsed, d) {
                (_, None) | (Strategy::Greedy, Some(1)) => Ok(parsed),
                (Strategy::Tree { depth }, Some(d)) if depth == d => Ok(parsed),
                _ => Err(usage(format!("--depth conflicts with --strategy {s}"))),
            }
        }
        (None, Some(_)) => unreachable!(),
    }
}

fn override_cycles(config: &mut ScenarioConfig, cycles: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = cycles {
        config.cycles = n;
        config.depths.retain(|&d| d <= n);
        config.validate()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let verbose = cli.verbose;
    match cli.command {
        Command::DefaultConfig { out } => {
            let text = ScenarioConfig::default().to_json() + "\n";
            match out {
                Some(p) => write_atomic(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
        Command::GeneratePile { config, seed, out } => {
            let config = load_config(&config)?;
            show(verbose, &config);
            let field = config.initial_pile(seed)?;
            if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                write_csv(&out, &field)?;
            } else {
                write_hfld(&out, &field)?;
            }
            println!("wrote {} ({} x {}, volume {:.3} m3)", out.display(), field.nx(), field.ny(), field.volume());
        }
        Command::PrecomputeVturns { config, out } => {
            let config = load_config(&config)?;
            show(verbose, &config);
            let t = Instant::now();
            let lut = config.build_lut()?;
            lut.write(&out)?;
            println!(
                "wrote {} ({} nodes, {:.1} s)",
                out.display(),
                lut.len(),
                t.elapsed().as_secs_f64()
            );
        }
        Command::Plan {
            config,
            strategy,
            depth,
            seed,
            cycles,
            heightfield,
            lut,
            out,
        } => {
            let mut config = load_config(&config)?;
            override_cycles(&mut config, cycles)?;
            let strategy = resolve_strategy(strategy.as_deref(), depth)?;
            if let Strategy::Tree { depth } = strategy {
                if depth > config.cycles {
                    return Err(Failure::Usage(format!("depth {depth} exceeds {} cycles", config.cycles)));
                }
            }
            show(verbose, &config);
            let field: HeightField = match &heightfield {
                Some(p) => read_hfld(p)?,
                None => config.initial_pile(seed)?,
            };
            let lut = lut_for(&config, lut.as_deref(), verbose)?;
            let model = config.model()?;
            let planner = Planner::new(&model, &lut, config.normalization, config.planner)?;
            let outcome = planner.run(&field, strategy, config.cycles)?;
            let record = RunRecord::from_outcome(seed, &outcome);
            write_atomic(&out, plan_log_csv(&record).as_bytes())?;
            let t = &record.totals;
            println!(
                "{strategy}: {} cycles, {:.2} t, {:.1} s, {:.2} MJ, objective {:.4}, {} predictions ({:?})",
                t.cycles,
                t.mass / 1000.0,
                t.time,
                t.work / 1e6,
                t.objective,
                t.predictions,
                record.termination
            );
        }
        Command::Experiment {
            config,
            heightfield,
            lut,
            cycles,
            out,
        } => {
            let mut config = load_config(&config)?;
            override_cycles(&mut config, cycles)?;
            show(verbose, &config);
            let piles = match &heightfield {
                Some(p) => InitialPiles::Fixed(read_hfld(p)?),
                None => InitialPiles::Generated,
            };
            let lut = lut_for(&config, lut.as_deref(), verbose)?;
            let t = Instant::now();
            let result = loadplan::harness::run_experiment(&config, &lut, &piles)?;
            let files = write_reports(&result, &out)?;
            for w in &files.warnings {
                eprintln!("warning: {w}");
            }
            println!("{:<12} {:>6} {:>10} {:>10} {:>10} {:>10} {:>12}", "run", "seeds", "obj_mean", "mass_t", "time_s", "work_MJ", "predictions");
            for a in &result.aggregates {
                println!(
                    "{:<12} {:>6} {:>10.4} {:>10.2} {:>10.1} {:>10.2} {:>12.0}",
                    a.strategy.label(),
                    a.runs,
                    a.obj_mean,
                    a.mass_mean / 1000.0,
                    a.time_mean,
                    a.work_mean / 1e6,
                    a.predictions_mean
                );
            }
            println!("{} runs in {:.1} s, reports in {}", result.runs.len(), t.elapsed().as_secs_f64(), out.display());
        }
        Command::Profile {
            config,
            reps,
            seed,
            lut,
            budget_ms,
        } => {
            if reps == 0 {
                return Err(Failure::Usage("--reps must be at least 1".into()));
            }
            let config = load_config(&config)?;
            show(verbose, &config);
            let lut = lut_for(&config, lut.as_deref(), verbose)?;
            let mean = profile(&config, &lut, seed, reps)?;
            if mean > budget_ms {
                return Err(Failure::Runtime(Error::Planning(format!(
                    "mean prediction time {mean:.2} ms exceeds the {budget_ms} ms budget"
                ))));
            }
            println!("within budget ({mean:.2} ms <= {budget_ms} ms)");
        }
    }
    Ok(())
}

fn millis(f: impl FnOnce()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_secs_f64() * 1e3
}

fn summary(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let idx = ((samples.len() as f64 * 0.95).ceil() as usize).clamp(1, samples.len()) - 1;
    (mean, samples[idx])
}

/// Prints a timing table and returns the mean full-prediction time in ms.
fn profile(config: &ScenarioConfig, lut: &VTurnLut, seed: u64, reps: usize) -> Result<f64, Failure> {
    let field = config.initial_pile(seed)?;
    let model = config.model()?;
    let planner = Planner::new(&model, lut, config.normalization, config.planner)?;
    let cands = planner.listup(&field);
    if cands.is_empty() {
        return Err(Failure::Runtime(Error::Planning("no dig candidates on the initial pile".into())));
    }
    let names = [
        "cutout + encode",
        "performance (Psi)",
        "optimize_action",
        "predict_pile (Phi)",
        "plan_vturn (V1)",
        "LUT lookup x2",
        "prediction (Psi+opt+LUT+Phi)",
    ];
    let mut t: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); names.len()];
    for r in 0..reps {
        let c = &cands[r % cands.len()];
        let mut enc = None;
        t[0].push(millis(|| enc = Some(model.encode(&field, &c.pose))));
        let enc = enc.unwrap()?;
        t[1].push(millis(|| {
            std::hint::black_box(model.performance(&enc, &loadplan::LoadAction::NOMINAL));
        }));
        let mut best = None;
        t[2].push(millis(|| {
            best = Some(optimize_action(&model, &enc, &config.normalization, &config.planner.optimize))
        }));
        let action = best.unwrap().action;
        let mut pile = None;
        t[3].push(millis(|| pile = Some(model.predict_pile(&field, &c.pose, &action))));
        pile.unwrap()?;
        let mut path = None;
        t[4].push(millis(|| path = Some(plan_v1(&config.planner.dump, &c.pose.pose(), &config.vturn))));
        path.unwrap()?;
        let mut costs = None;
        t[5].push(millis(|| {
            costs = Some((lut.lookup(&c.pose.pose(), 4800.0), lut.lookup(&c.pose.pose(), 0.0)))
        }));
        let (a, b) = costs.unwrap();
        a?;
        b?;
        let mut pred = None;
        t[6].push(millis(|| {
            pred = Some(
                planner
                    .predict(&field, c, true)
                    .and_then(|p| model.predict_pile(&field, &c.pose, &p.action)),
            )
        }));
        pred.unwrap()?;
    }
    println!("{:<30} {:>10} {:>10}", "function", "mean_ms", "p95_ms");
    let mut total_mean = 0.0;
    for (name, samples) in names.iter().zip(t.iter_mut()) {
        let (mean, p95) = summary(samples);
        println!("{name:<30} {mean:>10.3} {p95:>10.3}");
        total_mean = mean;
    }
    println!("({reps} repetitions over {} candidates; V1 planning is precomputed in the LUT)", cands.len());
    Ok(total_mean)
}
