//! Command-line front end: scenario generation, rate precomputation, single
//! solves, demand sweeps against the always-on baseline, runtime scaling
//! measurements, and the randomized verification suites.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 infeasible demand,
//! 4 internal solver failure (including verification disagreements).

use clap::{Parser, Subcommand, ValueEnum};
use hetsaver_core::cutplane::CutPool;
use hetsaver_core::energy::{self, SolverParams};
use hetsaver_core::feasibility;
use hetsaver_core::patterns::{self, PatternSet, Strategy};
use hetsaver_core::rates::{build_rate_tensor, RateMode, RateTensor};
use hetsaver_core::scenario::{build_scenario, Scenario, ScenarioConfig};
use hetsaver_core::verify;
use hetsaver_core::{Engine, Error};
use serde::Deserialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "hetsaver",
    version,
    about = "Minimum-energy station activation and spectrum allocation planner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Cutplane,
    Direct,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Cutplane => Engine::CutPlane,
            EngineArg::Direct => Engine::Direct,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a scenario file from a config file (defaults when omitted).
    Gen {
        /// Scenario config JSON; the built-in default network when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute the link-rate tensor and store it in a binary cache.
    Rates {
        #[arg(long)]
        scenario: PathBuf,
        /// Pattern selection: all | reuse1 | preselect[:fam+fam+...]
        /// | random:COUNT:SEED | file:PATH
        #[arg(long, default_value = "preselect")]
        patterns: String,
        /// Monte Carlo fading samples per link; deterministic when omitted.
        #[arg(long)]
        samples: Option<usize>,
        /// Seed for the fading draws.
        #[arg(long, default_value_t = 1)]
        fading_seed: u64,
        /// Cache file to write (or reuse when it already matches).
        #[arg(long)]
        out: PathBuf,
        /// Also dump the tensor as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve one instance end to end and emit the result as JSON.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "preselect")]
        patterns: String,
        /// Uniform demand override, bit/s, applied to every test point.
        #[arg(long)]
        demand: Option<f64>,
        /// Per-test-point demand override: JSON map of id to bit/s.
        #[arg(long)]
        demand_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = EngineArg::Cutplane)]
        engine: EngineArg,
        /// Smoothing of the on/off power term.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Loads at or below this round to off.
        #[arg(long)]
        rho_off: Option<f64>,
        /// Rate-tensor cache to reuse or create.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Result JSON path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Demand sweep over schemes and repetitions, emitting plot-ready CSV.
    Sweep {
        /// Scenario or config JSON; repetitions re-draw with stepped seeds.
        #[arg(long)]
        scenario: PathBuf,
        /// Sweep spec JSON: demand grid, schemes, repetitions.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time both engines across pattern-set sizes at a fixed network.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated pattern counts, e.g. 64,512.
        #[arg(long)]
        counts: String,
        /// Which engine(s) to time.
        #[arg(long, default_value = "both")]
        engine: String,
        /// Uniform demand override, bit/s.
        #[arg(long)]
        demand: Option<f64>,
        /// Seed for the random pattern subsets.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized cross-check suites.
    Verify {
        /// Instances for the engine-equivalence and feasibility suites.
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Instances for the pattern-response suite.
        #[arg(long, default_value_t = 500)]
        inner_instances: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Cache(_)
        | Error::PatternCap { .. }
        | Error::Invariant { .. } => 2,
        Error::Infeasible(_) => 3,
        Error::Lp(_) | Error::Stall { .. } => 4,
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Gen { config, seed, out } => cmd_gen(config.as_deref(), seed, &out),
        Command::Rates { scenario, patterns, samples, fading_seed, out, csv } => {
            cmd_rates(&scenario, &patterns, samples, fading_seed, &out, csv.as_deref())
        }
        Command::Solve {
            scenario,
            patterns,
            demand,
            demand_file,
            engine,
            epsilon,
            rho_off,
            cache,
            out,
        } => cmd_solve(
            &scenario,
            &patterns,
            demand,
            demand_file.as_deref(),
            engine,
            epsilon,
            rho_off,
            cache.as_deref(),
            out.as_deref(),
        ),
        Command::Sweep { scenario, spec, out } => cmd_sweep(&scenario, &spec, &out),
        Command::Bench { scenario, counts, engine, demand, seed, out } => {
            cmd_bench(&scenario, &counts, &engine, demand, seed, out.as_deref())
        }
        Command::Verify { instances, inner_instances, seed } => {
            cmd_verify(instances, inner_instances, seed)
        }
    }
}

fn read_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

/// Parses the pattern-selection grammar against a concrete scenario.
fn parse_patterns(spec: &str, scenario: &Scenario) -> Result<PatternSet, Error> {
    let b_count = scenario.b_count();
    if spec == "all" {
        return patterns::enumerate_all(b_count);
    }
    if spec == "reuse1" {
        return patterns::reuse1(b_count);
    }
    if spec == "preselect" {
        return patterns::preselect(scenario, &patterns::standard_strategies());
    }
    if let Some(rest) = spec.strip_prefix("preselect:") {
        let mut strategies = Vec::new();
        for fam in rest.split('+') {
            strategies.push(parse_family(fam)?);
        }
        return patterns::preselect(scenario, &strategies);
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let (count, seed) = rest.split_once(':').ok_or_else(|| {
            Error::Config(format!("random pattern spec needs COUNT:SEED, got {rest:?}"))
        })?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::Config(format!("bad pattern count {count:?}")))?;
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Config(format!("bad pattern seed {seed:?}")))?;
        return verify::random_patterns(b_count, count, seed);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path)?;
        let set = PatternSet::from_json(&text)?;
        if set.b_count() != b_count {
            return Err(Error::Config(format!(
                "pattern file covers {} stations, scenario has {b_count}",
                set.b_count()
            )));
        }
        return Ok(set);
    }
    Err(Error::Config(format!(
        "unknown pattern spec {spec:?}; expected all, reuse1, preselect[:fams], \
         random:COUNT:SEED, or file:PATH"
    )))
}

fn parse_family(name: &str) -> Result<Strategy, Error> {
    if let Some(rest) = name.strip_prefix("random:") {
        let (count, seed) = rest
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("random family needs COUNT:SEED, got {rest:?}")))?;
        return Ok(Strategy::Random {
            count: count
                .parse()
                .map_err(|_| Error::Config(format!("bad random count {count:?}")))?,
            seed: seed
                .parse()
                .map_err(|_| Error::Config(format!("bad random seed {seed:?}")))?,
        });
    }
    match name {
        "all_on" => Ok(Strategy::AllOn),
        "leave_one_out" => Ok(Strategy::LeaveOneOut),
        "macros_only" => Ok(Strategy::MacrosOnly),
        "single_bs" => Ok(Strategy::SingleBs),
        "macro_with_local_picos" => Ok(Strategy::MacroWithLocalPicos),
        other => Err(Error::Config(format!("unknown pattern family {other:?}"))),
    }
}

fn write_or_stdout(path: Option<&Path>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            fs::write(p, content)?;
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<ExitCode, Error> {
    let mut config = match config {
        Some(p) => read_config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    let scenario = build_scenario(&config)?;
    fs::write(out, scenario.to_json()?)?;
    eprintln!(
        "wrote scenario with {} stations and {} test points to {}",
        scenario.b_count(),
        scenario.k_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn rate_mode(samples: Option<usize>, fading_seed: u64) -> RateMode {
    match samples {
        Some(n) => RateMode::MonteCarlo { samples: n, seed: fading_seed },
        None => RateMode::Deterministic,
    }
}

fn cmd_rates(
    scenario_path: &Path,
    pattern_spec: &str,
    samples: Option<usize>,
    fading_seed: u64,
    out: &Path,
    csv: Option<&Path>,
) -> Result<ExitCode, Error> {
    let scenario = load_scenario(scenario_path)?;
    let patterns = parse_patterns(pattern_spec, &scenario)?;
    let mode = rate_mode(samples, fading_seed);
    let started = Instant::now();
    let rates = RateTensor::load_or_build(out, &scenario, &patterns, &mode)?;
    eprintln!(
        "rate tensor {}x{}x{} ready in {:.1} ms at {}",
        rates.k_count(),
        rates.b_count(),
        rates.i_count(),
        started.elapsed().as_secs_f64() * 1e3,
        out.display()
    );
    if let Some(csv_path) = csv {
        let mut buf = Vec::new();
        rates.export_csv(&mut buf)?;
        fs::write(csv_path, buf)?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Applies demand overrides by rebuilding the scenario from its canonical
/// config; the layout and shadowing stay fixed because the seed is unchanged.
fn override_demands(
    scenario: &Scenario,
    uniform: Option<f64>,
    per_point: Option<&Path>,
) -> Result<Scenario, Error> {
    if uniform.is_none() && per_point.is_none() {
        return Ok(scenario.clone());
    }
    let mut config = scenario.to_config().clone();
    if let Some(d) = uniform {
        config.demand.uniform_bps = Some(d);
        config.demand.per_test_point = None;
    }
    if let Some(path) = per_point {
        let text = fs::read_to_string(path)?;
        let map: std::collections::BTreeMap<usize, f64> = serde_json::from_str(&text)?;
        config.demand.per_test_point = Some(map);
    }
    build_scenario(&config)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    scenario_path: &Path,
    pattern_spec: &str,
    demand: Option<f64>,
    demand_file: Option<&Path>,
    engine: EngineArg,
    epsilon: Option<f64>,
    rho_off: Option<f64>,
    cache: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let scenario = load_scenario(scenario_path)?;
    let scenario = override_demands(&scenario, demand, demand_file)?;
    let patterns = parse_patterns(pattern_spec, &scenario)?;
    let mode = RateMode::Deterministic;
    let rates = match cache {
        Some(path) => RateTensor::load_or_build(path, &scenario, &patterns, &mode)?,
        None => build_rate_tensor(&scenario, &patterns, &mode)?,
    };
    let mut params = SolverParams { engine: engine.into(), ..SolverParams::default() };
    if let Some(e) = epsilon {
        params.epsilon = e;
    }
    if let Some(r) = rho_off {
        params.rho_off = r;
    }
    let result = energy::minimize_energy(&scenario, &patterns, &rates, &params)?;
    let json = serde_json::to_string_pretty(&result).map_err(Error::Json)?;
    write_or_stdout(out, &(json + "\n"))?;
    if result.feasible {
        eprintln!(
            "feasible: {:.1} W over {} active stations, {} outer iterations",
            result.total_power_w,
            result.active_stations.len(),
            result.outer_iterations
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "infeasible: demand total {:.3e} bit/s exceeds balanced capacity {:.3e} bit/s",
            result.demands.iter().sum::<f64>(),
            result.balance_r_sum
        );
        Ok(ExitCode::from(3))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    /// Uniform per-point demand grid in bit/s; must be nonempty and ascending.
    demands_bps: Vec<f64>,
    schemes: Vec<SchemeSpec>,
    #[serde(default = "default_repetitions")]
    repetitions: usize,
    /// Monte Carlo fading samples; deterministic rates when omitted.
    #[serde(default)]
    rate_samples: Option<usize>,
    #[serde(default)]
    epsilon: Option<f64>,
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SchemeSpec {
    /// The always-on baseline: one pattern, direct LP.
    Reuse1,
    /// The pattern-coordinated scheme over a selectable pattern set.
    Proposed(String),
}

impl SchemeSpec {
    fn label(&self) -> &'static str {
        match self {
            SchemeSpec::Reuse1 => "reuse1",
            SchemeSpec::Proposed(_) => "proposed",
        }
    }
}

fn cmd_sweep(scenario_path: &Path, spec_path: &Path, out: &Path) -> Result<ExitCode, Error> {
    let base_config = read_config(scenario_path)?;
    let spec: SweepSpec =
        serde_json::from_str(&fs::read_to_string(spec_path)?).map_err(Error::Json)?;
    if spec.demands_bps.is_empty() {
        return Err(Error::Config("sweep demand grid is empty".to_string()));
    }
    if spec.demands_bps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sweep demand grid must be strictly ascending".to_string()));
    }
    if !spec.demands_bps.iter().all(|&d| d.is_finite() && d >= 0.0) {
        return Err(Error::Config("sweep demands must be finite and nonnegative".to_string()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::Config("sweep needs at least one scheme".to_string()));
    }
    if spec.repetitions == 0 {
        return Err(Error::Config("sweep needs at least one repetition".to_string()));
    }
    let mode = rate_mode(spec.rate_samples, 1);

    let mut csv = String::from("demand,scheme,total_power_W,feasible,iterations,wall_ms\n");
    for rep in 0..spec.repetitions {
        let mut config = base_config.clone();
        config.seed = base_config.seed.wrapping_add(rep as u64);
        config.demand.uniform_bps = Some(spec.demands_bps[0]);
        config.demand.per_test_point = None;
        let scenario = build_scenario(&config)?;

        for scheme in &spec.schemes {
            let (patterns, engine) = match scheme {
                SchemeSpec::Reuse1 => (patterns::reuse1(scenario.b_count())?, Engine::Direct),
                SchemeSpec::Proposed(p) => (parse_patterns(p, &scenario)?, Engine::CutPlane),
            };
            let rates = build_rate_tensor(&scenario, &patterns, &mode)?;
            let mut params = SolverParams { engine, ..SolverParams::default() };
            if let Some(e) = spec.epsilon {
                params.epsilon = e;
            }

            // The balanced-throughput LP only depends on the demand
            // proportions, which a uniform grid never changes, so one result
            // serves every level. The cut pool survives across levels too.
            let probe = vec![1.0; scenario.k_count()];
            let balance = feasibility::rate_balance(&rates, &probe, engine, &params.cutplane)?;
            let mut pool = CutPool::new();

            for &demand in &spec.demands_bps {
                let mut level_config = config.clone();
                level_config.demand.uniform_bps = Some(demand);
                let level_scenario = build_scenario(&level_config)?;
                let started = Instant::now();
                let result = energy::minimize_energy_warm(
                    &level_scenario,
                    &patterns,
                    &rates,
                    &params,
                    &balance,
                    &mut pool,
                )?;
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                csv.push_str(&format!(
                    "{},{},{},{},{},{:.3}\n",
                    demand,
                    scheme.label(),
                    result.total_power_w,
                    result.feasible,
                    result.outer_iterations,
                    wall_ms
                ));
            }
        }
    }
    fs::write(out, csv)?;
    eprintln!(
        "swept {} demand levels x {} schemes x {} repetitions into {}",
        spec.demands_bps.len(),
        spec.schemes.len(),
        spec.repetitions,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(
    scenario_path: &Path,
    counts: &str,
    engine: &str,
    demand: Option<f64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let scenario = load_scenario(scenario_path)?;
    let scenario = override_demands(&scenario, demand, None)?;
    let counts: Vec<usize> = counts
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad pattern count {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if counts.is_empty() {
        return Err(Error::Config("no pattern counts given".to_string()));
    }
    let engines: Vec<Engine> = match engine {
        "both" => vec![Engine::CutPlane, Engine::Direct],
        "cutplane" => vec![Engine::CutPlane],
        "direct" => vec![Engine::Direct],
        other => return Err(Error::Config(format!("unknown engine {other:?}"))),
    };

    let demands = scenario.demands();
    let mut csv = String::from("I,engine,wall_ms,iterations\n");
    for &count in &counts {
        let patterns = verify::random_patterns(scenario.b_count(), count, seed)?;
        let rates = build_rate_tensor(&scenario, &patterns, &RateMode::Deterministic)?;
        // Guard: the demands must be coverable, otherwise the timing would
        // measure failure paths. All subsets include the everything-on row,
        // so checking the current subset suffices.
        let balance = feasibility::rate_balance(
            &rates,
            &demands,
            Engine::CutPlane,
            &hetsaver_core::CutPlaneParams::default(),
        )?;
        if !feasibility::is_feasible(&balance, &demands) {
            return Err(Error::Infeasible(format!(
                "scenario demand is not servable with {count} patterns; lower --demand"
            )));
        }
        let weights = energy::mm_weights(&vec![1.0; scenario.b_count()], &scenario, 1e-3);
        for &eng in &engines {
            let mut pool = CutPool::new();
            let started = Instant::now();
            let sol = energy::solve_weighted_lp(
                &rates,
                &demands,
                &weights,
                eng,
                &hetsaver_core::CutPlaneParams::default(),
                &mut pool,
            )?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let name = match eng {
                Engine::CutPlane => "cutplane",
                Engine::Direct => "direct",
            };
            csv.push_str(&format!("{count},{name},{wall_ms:.3},{}\n", sol.iterations));
            eprintln!("I={count} {name}: {wall_ms:.1} ms, {} iterations", sol.iterations);
        }
    }
    write_or_stdout(out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(instances: usize, inner_instances: usize, seed: u64) -> Result<ExitCode, Error> {
    if instances == 0 && inner_instances == 0 {
        eprintln!("warning: zero instances requested; nothing was checked");
        println!("vacuous pass");
        return Ok(ExitCode::SUCCESS);
    }
    let reports = verify::run_all(instances, inner_instances, instances, seed)?;
    let mut all_ok = true;
    for report in &reports {
        println!("{}", report.summary());
        if report.instances == 0 {
            eprintln!("warning: suite {:?} ran zero instances", report.name);
        }
        for line in &report.failures {
            println!("  {line}");
        }
        if report.failure_count > report.failures.len() {
            println!(
                "  ... and {} more",
                report.failure_count - report.failures.len()
            );
        }
        all_ok &= report.passed();
    }
    if all_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: verification found disagreements");
        Ok(ExitCode::from(4))
    }
}
