//! Command-line front end for the quantile Kaczmarz toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime/IO error, 3 verification
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrk::corruption::{corrupt, generate_gaussian_system, load_system, save_system, CorruptionSpec};
use qrk::error::Error;
use qrk::harness::config::{model_from_name, strategy_from_name, ExperimentConfig, SystemSource};
use qrk::harness::{compare_methods, run_experiment, verify};
use qrk::solvers::{run_solver, SolverConfig, TraceOracle};
use qrk::spectral::{
    corollary_threshold, heuristic, spectral_summary, SpectralSummary, SubsetMethod,
};

#[derive(Parser)]
#[command(name = "qrk", version, about = "Quantile-based Random Kaczmarz for corrupted linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an uncorrupted random system and save it.
    Generate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output system file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Corrupt the right-hand side of a saved system.
    Corrupt {
        /// Input system file.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        beta: f64,
        /// random-gaussian | constant-offset | sign-flip | aligned-cluster
        #[arg(long, default_value = "random-gaussian")]
        model: String,
        /// Gaussian corruption scale (default 10 * ||b_true||_inf).
        #[arg(long)]
        scale: Option<f64>,
        /// Constant-offset value.
        #[arg(long, default_value_t = 10.0)]
        value: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on a saved system.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        /// uniform | quantile | sampled-quantile | motzkin | powered
        #[arg(long, default_value = "quantile")]
        strategy: String,
        #[arg(long, default_value_t = 0.85)]
        q: f64,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-iters", default_value_t = 10_000)]
        max_iters: usize,
        /// Stop once ||x_k - x_true|| falls below this (needs ground truth).
        #[arg(long = "stop-tol", default_value_t = 0.0)]
        stop_tol: f64,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Ignore the stored ground truth (trace carries NaN errors).
        #[arg(long, default_value_t = false)]
        blind: bool,
    },
    /// Print the spectral summary of a system at (q, beta).
    Spectral {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0.85)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// exact | sampled | greedy
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        directions: usize,
        /// Seed for the sampled/greedy estimators.
        #[arg(long = "spectral-seed", default_value_t = 0)]
        spectral_seed: u64,
        /// Also append one CSV row (with header if the file is new).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Truncated-Gaussian heuristic: mass, alpha, ratio, and the certified
    /// corruption threshold beta* for the given q.
    Heuristic {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },
    /// Evaluate the convergence condition for a system at (q, beta).
    CheckCondition {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        directions: usize,
        #[arg(long = "spectral-seed", default_value_t = 0)]
        spectral_seed: u64,
    },
    /// Run a batch experiment from a config file (plus flag overrides).
    Experiment(ConfigArgs),
    /// Compare selection methods on the same corrupted instances.
    Compare(ConfigArgs),
    /// Run the lemma/theorem verification suite.
    Verify(ConfigArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Saved system file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Comma list: uniform,quantile,sampled-quantile,motzkin,powered
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "stop-tol")]
    stop_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let (Some(m), Some(n)) = (self.m, self.n) {
            cfg.source = SystemSource::Generate { m, n };
        } else if self.m.is_some() || self.n.is_some() {
            return Err(Error::InvalidConfig("--m and --n must be given together".into()));
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(beta) = self.beta {
            cfg.beta = beta;
        }
        if let Some(t) = self.t {
            cfg.t = Some(t);
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(max_iters) = self.max_iters {
            cfg.max_iters = max_iters;
        }
        if let Some(stop_tol) = self.stop_tol {
            cfg.stop_tol = stop_tol;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        let m_hint = match cfg.source {
            SystemSource::Generate { m, .. } => Some(m),
            SystemSource::File(_) => None,
        };
        if let Some(raw) = &self.strategies {
            cfg.strategies = raw
                .split(',')
                .map(|s| strategy_from_name(s, cfg.q, cfg.t, cfg.p, m_hint))
                .collect::<Result<_, _>>()?;
        } else if self.q.is_some() || self.t.is_some() || self.p.is_some() {
            // re-resolve strategy parameters against the overridden values
            let names: Vec<String> =
                cfg.strategies.iter().map(|s| s.name().to_string()).collect();
            cfg.strategies = names
                .iter()
                .map(|s| strategy_from_name(s, cfg.q, cfg.t, cfg.p, m_hint))
                .collect::<Result<_, _>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SourceArgs {
    fn load(&self) -> Result<qrk::corruption::CorruptedSystem, Error> {
        match (&self.input, self.m, self.n) {
            (Some(path), None, None) => load_system(path),
            (None, Some(m), Some(n)) => generate_gaussian_system(m, n, self.seed),
            _ => Err(Error::InvalidConfig("give either --in or both --m and --n".into())),
        }
    }
}

fn subset_method(
    name: &str,
    trials: usize,
    directions: usize,
    seed: u64,
) -> Result<SubsetMethod, Error> {
    match name {
        "exact" => Ok(SubsetMethod::Exact),
        "sampled" => Ok(SubsetMethod::Sampled { trials, seed }),
        "greedy" => Ok(SubsetMethod::Greedy { directions, seed }),
        other => Err(Error::InvalidConfig(format!("unknown spectral method '{other}'"))),
    }
}

fn print_summary(s: &SpectralSummary) {
    println!("sigma_max = {}", s.sigma_max);
    println!("sigma_sub_min = {}", s.sigma_sub_min);
    println!("sigma_sub_min_method = {}", s.sigma_sub_min_method.as_str());
    println!("subset_size = {}", s.subset_size);
    match s.sigma_beta_max {
        Some(v) => println!("sigma_beta_max = {v}"),
        None => println!("sigma_beta_max = none"),
    }
    println!("condition_lhs = {}", s.condition_lhs);
    println!("condition_rhs = {}", s.condition_rhs);
    match s.rate_c {
        Some(c) => println!("rate_c = {c}"),
        None => println!("rate_c = none"),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Generate { m, n, seed, out } => {
            let sys = generate_gaussian_system(m, n, seed)?;
            save_system(&sys, &out)?;
            println!("generated m={m} n={n} seed={seed} -> {}", out.display());
        }
        Command::Corrupt { input, beta, model, scale, value, seed, out } => {
            let sys = load_system(&input)?;
            let spec =
                CorruptionSpec { beta, model: model_from_name(&model, scale, value)?, seed };
            let corrupted = corrupt(&sys, &spec)?;
            save_system(&corrupted, &out)?;
            println!(
                "corrupted {} entries of {} (beta={beta}, model={}) -> {}",
                corrupted.corrupt_set.len(),
                corrupted.m(),
                spec.model.name(),
                out.display()
            );
        }
        Command::Solve {
            input,
            strategy,
            q,
            t,
            p,
            seed,
            max_iters,
            stop_tol,
            trace,
            blind,
        } => {
            let sys = load_system(&input)?;
            let strat = strategy_from_name(&strategy, q, t, p, Some(sys.m()))?;
            let config = SolverConfig { strategy: strat, max_iters, stop_tol, seed, x0: None };
            let oracle = if blind { None } else { Some(TraceOracle::from_system(&sys)) };
            let result = run_solver(&sys.a, &sys.b_observed, &config, oracle)?;
            if let Some(path) = trace {
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                result.write_csv(&mut f)?;
            }
            println!(
                "strategy={} iterations={} final_err_sq={} status={}",
                strat.name(),
                result.iterations(),
                result.final_err_sq(),
                result.status.as_str()
            );
        }
        Command::Spectral {
            source,
            q,
            beta,
            method,
            trials,
            directions,
            spectral_seed,
            csv,
        } => {
            let sys = source.load()?;
            let method = subset_method(&method, trials, directions, spectral_seed)?;
            let summary = spectral_summary(sys.a.matrix(), q, beta, method)?;
            print_summary(&summary);
            if let Some(path) = csv {
                let new = !path.exists();
                let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
                use std::io::Write;
                if new {
                    writeln!(
                        f,
                        "sigma_max,sigma_sub_min,method,subset_size,sigma_beta_max,condition_lhs,condition_rhs,rate_c"
                    )?;
                }
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{}",
                    summary.sigma_max,
                    summary.sigma_sub_min,
                    summary.sigma_sub_min_method.as_str(),
                    summary.subset_size,
                    summary.sigma_beta_max.map_or("".into(), |v| v.to_string()),
                    summary.condition_lhs,
                    summary.condition_rhs,
                    summary.rate_c.map_or("".into(), |v| v.to_string()),
                )?;
            }
        }
        Command::Heuristic { q, beta } => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::MassOutOfRange(q));
            }
            if !(beta >= 0.0 && beta < q) {
                return Err(Error::ParameterDomain { q, beta });
            }
            let h = heuristic(q - beta)?;
            let beta_star = corollary_threshold(q)?;
            println!("mass = {}", h.mass);
            println!("alpha = {}", h.alpha);
            println!("ratio = {}", h.ratio);
            println!("beta_star = {beta_star}");
        }
        Command::CheckCondition {
            source,
            q,
            beta,
            method,
            trials,
            directions,
            spectral_seed,
        } => {
            let sys = source.load()?;
            let method = subset_method(&method, trials, directions, spectral_seed)?;
            let summary = spectral_summary(sys.a.matrix(), q, beta, method)?;
            print_summary(&summary);
            let certified = summary.rate_c.is_some()
                && summary.sigma_sub_min_method == qrk::spectral::SubsetEstimate::Exact;
            println!("condition_holds = {}", summary.rate_c.is_some());
            println!("certified = {certified}");
        }
        Command::Experiment(args) => {
            let config = args.resolve()?;
            let output = run_experiment(&config)?;
            match &config.out_dir {
                Some(dir) => println!(
                    "wrote {} runs to {}",
                    output.runs.len(),
                    dir.join("summary.csv").display()
                ),
                None => {
                    let mut buf = Vec::new();
                    qrk::harness::experiment::write_summary_csv(&mut buf, &output.runs)?;
                    print!("{}", String::from_utf8_lossy(&buf));
                }
            }
        }
        Command::Compare(args) => {
            let config = args.resolve()?;
            let table = compare_methods(&config)?;
            print!("{}", table.render());
        }
        Command::Verify(args) => {
            let config = args.resolve()?;
            let report = verify(&config)?;
            print!("{}", report.render());
            if !report.pass() {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

/// Usage errors exit 1, runtime errors 2 (verification failures return 3
/// from `run` directly).
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_)
        | Error::BetaOutOfRange(_)
        | Error::ParameterDomain { .. }
        | Error::MassOutOfRange(_)
        | Error::BadDimensions { .. }
        | Error::BadSubsetSize { .. }
        | Error::EmptyQuantile { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
