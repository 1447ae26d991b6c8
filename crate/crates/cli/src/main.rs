//! `ppsel`: simulate point patterns, fit sparse intensity models and run
//! selection studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ppsel::alds::build_alds_lp;
use ppsel::harness::{
    default_model_spec, named_window, parse_truth, run_study, simulate_replicate, study_truth, Process,
    StudyConfig, StudyResult,
};
use ppsel::io::{pattern_to_string, read_pattern, read_raster, write_text, Table};
use ppsel::likelihood::{mle, NewtonOptions};
use ppsel::simulate::{ThomasParams, RNG_ALGORITHM};
use ppsel::synthetic::bundled_covariates;
use ppsel::tuning::{adaptive_weights, bic, select_lambda_with_pilot, GridSpec, TuningOptions};
use ppsel::{
    build_scheme, fit_al, fit_alds, fit_mle, AlOptions, AldsProblem, CovariateField, Error, FitResult, Method,
    ModelSpec, PointPattern, QuadGrid, QuadratureScheme, Result, Window,
};

#[derive(Parser)]
#[command(name = "ppsel", version, about = "Sparse log-linear intensity estimation for spatial point patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Poisson or Thomas pattern from the study model.
    Simulate(SimulateArgs),
    /// Fit AL, ALDS or the MLE to a pattern.
    Fit(FitArgs),
    /// Write the BIC tuning path as CSV.
    Path(PathArgs),
    /// Run a Monte Carlo study from a key=value config file.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcessArg {
    Poisson,
    Thomas,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Al,
    Alds,
    Both,
    Mle,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Al => vec![Method::Al],
            MethodArg::Alds => vec![Method::Alds],
            MethodArg::Both => vec![Method::Al, Method::Alds],
            MethodArg::Mle => vec![Method::Mle],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "poisson")]
    process: ProcessArg,
    /// Parent intensity of the Thomas process.
    #[arg(long, default_value_t = 4e-4)]
    kappa: f64,
    /// Dispersal standard deviation of the Thomas process.
    #[arg(long, default_value_t = 15.0)]
    gamma: f64,
    /// D1, D2, D3 or x0,x1,y0,y1.
    #[arg(long, default_value = "D3")]
    window: String,
    /// Expected number of points (defaults to 150 per D1-sized area).
    #[arg(long)]
    mu: Option<f64>,
    /// Number of coefficients including the intercept.
    #[arg(long, default_value_t = 20)]
    p: usize,
    /// Nonzero coefficients as one-based index:value pairs.
    #[arg(long, default_value = "2:1,3:-1")]
    truth: String,
    /// Covariate rasters (defaults to the bundled synthetic set).
    #[arg(long = "raster")]
    rasters: Vec<PathBuf>,
    #[arg(long, default_value_t = 2024)]
    covariate_seed: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// RNG stream; patterns with distinct streams are independent.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Pattern CSV (`# window x0 x1 y0 y1` header, then `x,y`).
    #[arg(long)]
    pattern: PathBuf,
    /// Covariate rasters (defaults to the bundled synthetic set rescaled
    /// onto the pattern window).
    #[arg(long = "raster")]
    rasters: Vec<PathBuf>,
    #[arg(long, default_value_t = 2024)]
    covariate_seed: u64,
    /// Comma-separated covariate names (defaults to every raster).
    #[arg(long, conflicts_with = "p")]
    covariates: Option<String>,
    /// Interaction `a:b`; repeatable.
    #[arg(long = "interaction")]
    interactions: Vec<String>,
    /// Use the study model with `p` coefficients (mains, then interactions).
    #[arg(long)]
    p: Option<usize>,
    /// Standardize design columns before fitting.
    #[arg(long)]
    standardize: bool,
    /// Quadrature grid NXxNY (default scales with the pattern size).
    #[arg(long)]
    quad: Option<String>,
    /// Write the quadrature scheme to this CSV file.
    #[arg(long)]
    export_scheme: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Number of grid values, or a comma-separated list of lambdas.
    #[arg(long, default_value = "50")]
    grid: String,
    /// Smallest grid value as a fraction of lambda_max.
    #[arg(long, default_value_t = 1e-4)]
    grid_ratio: f64,
}

impl TuneArgs {
    fn options(&self) -> Result<TuningOptions> {
        let grid = if self.grid.contains(',') || self.grid.contains('.') || self.grid.contains('e') {
            let v = self
                .grid
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::InvalidArgument(format!("bad --grid `{}`", self.grid)))?;
            GridSpec::Explicit(v)
        } else {
            let n = self
                .grid
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad --grid `{}`", self.grid)))?;
            GridSpec::Auto {
                n,
                ratio: self.grid_ratio,
            }
        };
        Ok(TuningOptions {
            nu: self.nu,
            grid,
            ..TuningOptions::default()
        })
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    /// Fit at this lambda instead of tuning by BIC.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the ALDS linear program at the fitted lambda to this file.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Study config (flat key = value file).
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Report NA instead of wall times, making the output reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Write per-replicate records to this CSV file.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => write_text(text, path),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_window(s: &str) -> Result<Window> {
    if let Some(w) = named_window(s) {
        return Ok(w);
    }
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad window `{s}`")))?;
    match v[..] {
        [x0, x1, y0, y1] => Window::new(x0, x1, y0, y1),
        _ => Err(Error::InvalidArgument(format!("window `{s}` needs D1, D2, D3 or x0,x1,y0,y1"))),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let window = parse_window(&args.window)?;
    let process = match args.process {
        ProcessArg::Poisson => Process::Poisson,
        ProcessArg::Thomas => Process::Thomas(ThomasParams::new(args.kappa, args.gamma)?),
    };
    let defaults = StudyConfig::default();
    let config = StudyConfig {
        process,
        mu: args.mu.unwrap_or(150.0 * window.area() / (250.0 * 125.0)),
        window,
        p: args.p,
        truth: parse_truth(&args.truth)?,
        seed: args.seed,
        covariate_seed: args.covariate_seed,
        rasters: args.rasters,
        ..defaults
    };
    let (fields, spec, truth) = study_truth(&config)?;
    let pattern = simulate_replicate(&config, &spec, &fields, &truth, args.replicate)?;
    let mut meta = vec![
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
        ("seed".to_string(), args.seed.to_string()),
        ("replicate".to_string(), args.replicate.to_string()),
    ];
    match process {
        Process::Poisson => meta.push(("process".into(), "poisson".into())),
        Process::Thomas(t) => {
            meta.push(("process".into(), "thomas".into()));
            meta.push(("kappa".into(), t.kappa.to_string()));
            meta.push(("gamma".into(), t.gamma.to_string()));
        }
    }
    meta.push(("mu".into(), config.mu.to_string()));
    let beta: Vec<String> = truth.iter().map(|b| b.to_string()).collect();
    meta.push(("beta".into(), beta.join(" ")));
    emit(&pattern_to_string(&pattern, &meta), args.output.as_deref())
}

struct Prepared {
    scheme: QuadratureScheme,
    pilot: Vec<f64>,
}

fn load_fields(model: &ModelArgs, window: &Window) -> Result<Vec<CovariateField>> {
    if !model.rasters.is_empty() {
        return model.rasters.iter().map(read_raster).collect();
    }
    let base = named_window("D3").expect("built-in window");
    let fields = bundled_covariates(model.covariate_seed, &base)?;
    Ok(fields.iter().map(|f| f.rescaled_to(window)).collect())
}

fn model_spec(model: &ModelArgs, fields: &[CovariateField]) -> Result<ModelSpec> {
    let names: Vec<String> = fields.iter().map(|f| f.name().to_string()).collect();
    let mut spec = match (model.p, &model.covariates) {
        (Some(p), _) => default_model_spec(p, &names)?,
        (None, Some(list)) => ModelSpec::new(list.split(',').map(|t| t.trim()).filter(|t| !t.is_empty())),
        (None, None) => ModelSpec::new(names.iter().cloned()),
    };
    for inter in &model.interactions {
        let (a, b) = inter
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("interaction `{inter}` is not a:b")))?;
        spec = spec.with_interaction(a.trim(), b.trim());
    }
    Ok(spec.standardized(model.standardize))
}

fn prepare(model: &ModelArgs) -> Result<Prepared> {
    let pattern: PointPattern = read_pattern(&model.pattern)?;
    let fields = load_fields(model, pattern.window())?;
    let spec = model_spec(model, &fields)?;
    let grid = match &model.quad {
        Some(q) => QuadGrid::parse(q)?,
        None => QuadGrid::default_for(pattern.len()),
    };
    let scheme = build_scheme(&pattern, &spec, &fields, grid)?;
    if let Some(path) = &model.export_scheme {
        write_text(&scheme.to_table().to_csv(), path)?;
    }
    let pilot = mle(&scheme, None, NewtonOptions::default())?.beta;
    Ok(Prepared { scheme, pilot })
}

#[derive(Serialize)]
struct FitReport {
    method: Method,
    lambda: Option<f64>,
    bic: f64,
    loglik: f64,
    names: Vec<String>,
    beta: Vec<f64>,
    support: Vec<usize>,
    kkt_residual: f64,
    clamped: bool,
}

impl FitReport {
    fn new(fit: &FitResult, scheme: &QuadratureScheme) -> Result<Self> {
        Ok(FitReport {
            method: fit.method,
            lambda: fit.lambda,
            bic: bic(fit, scheme)?,
            loglik: fit.loglik,
            names: fit.coefficients.names.clone(),
            beta: fit.beta().to_vec(),
            support: fit.support.clone(),
            kkt_residual: fit.kkt_residual,
            clamped: fit.clamped,
        })
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let prep = prepare(&args.model)?;
    let scheme = &prep.scheme;
    let intercept = scheme.intercept();
    let opts = args.tune.options()?;
    let mut reports = Vec::new();
    for method in args.method.methods() {
        let (fit, lambda) = match (method, args.lambda) {
            (Method::Mle, _) => (fit_mle(scheme, NewtonOptions::default())?, None),
            (m, Some(lambda)) => {
                let w = adaptive_weights(&prep.pilot, opts.nu, lambda, intercept)?;
                let mut f = match m {
                    Method::Al => fit_al(scheme, &w, Some(&prep.pilot), AlOptions::default())?,
                    _ => fit_alds(scheme, &w, Some(&prep.pilot))?,
                };
                f.lambda = Some(lambda);
                (f, Some(lambda))
            }
            (m, None) => {
                let path = select_lambda_with_pilot(scheme, m, &prep.pilot, &opts)?;
                let lambda = path.selected_lambda();
                let mut f = path.selected_fit().clone();
                f.lambda = Some(lambda);
                (f, Some(lambda))
            }
        };
        if method == Method::Alds {
            if let (Some(path), Some(lambda)) = (&args.dump_lp, lambda) {
                let w = adaptive_weights(&prep.pilot, opts.nu, lambda, intercept)?;
                let problem = AldsProblem::from_scheme(scheme, w, &prep.pilot)?;
                write_text(&build_alds_lp(&problem)?.dump(), path)?;
            }
        }
        reports.push(FitReport::new(&fit, scheme)?);
    }
    if args.dump_lp.is_some() && !reports.iter().any(|r| r.method == Method::Alds) {
        return Err(Error::InvalidArgument("--dump-lp needs --method alds or both".into()));
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&reports).map_err(|e| Error::Internal(e.to_string()))? + "\n",
        Format::Csv => {
            let names = scheme.column_names().to_vec();
            let mut header = vec!["method".to_string(), "lambda".into(), "BIC".into(), "loglik".into()];
            header.extend(names);
            let mut t = Table::new(header);
            for r in &reports {
                let mut row = vec![
                    r.method.to_string(),
                    r.lambda.map_or_else(|| "NA".into(), |l| l.to_string()),
                    r.bic.to_string(),
                    r.loglik.to_string(),
                ];
                row.extend(r.beta.iter().map(|b| b.to_string()));
                t.push(row);
            }
            t.to_csv()
        }
    };
    emit(&text, args.output.as_deref())
}

fn path(args: PathArgs) -> Result<()> {
    if args.method == MethodArg::Mle {
        return Err(Error::InvalidArgument("`path` needs --method al, alds or both".into()));
    }
    let prep = prepare(&args.model)?;
    let opts = args.tune.options()?;
    let names = prep.scheme.column_names().to_vec();
    let mut out: Option<Table> = None;
    for method in args.method.methods() {
        let path = select_lambda_with_pilot(&prep.scheme, method, &prep.pilot, &opts)?;
        let t = path.to_table(&names);
        let table = out.get_or_insert_with(|| {
            let mut h = vec!["method".to_string(), "selected".to_string()];
            h.extend(t.header.iter().cloned());
            Table::new(h)
        });
        for (k, row) in t.rows.into_iter().enumerate() {
            let mut r = vec![method.to_string(), (k == path.selected).to_string()];
            r.extend(row);
            table.push(r);
        }
    }
    emit(&out.expect("at least one method").to_csv(), args.output.as_deref())
}

fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let mut config = StudyConfig::read(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(n) = args.replicates {
        config.replicates = n;
    }
    if let Some(m) = args.method {
        if m == MethodArg::Mle {
            return Err(Error::InvalidArgument("benchmark needs --method al, alds or both".into()));
        }
        config.methods = m.methods();
    }
    if args.no_timing {
        config.timing = false;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Internal(e.to_string()))?;
    let result: StudyResult = pool.install(|| run_study(&config))?;
    if let Some(path) = &args.records {
        write_text(&result.records_csv(), path)?;
    }
    emit(&result.to_table().to_csv(), args.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Path(a) => path(a),
        Command::Benchmark(a) => benchmark(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
