//! Selection metrics and the Monte Carlo study runner.
//!
//! A study simulates replicate patterns from a known sparse truth, tunes
//! each penalized method by BIC, and summarizes true/false positive rates,
//! RMSE and run time. Replicates run in parallel on independent RNG streams
//! and are reduced in replicate order, so results do not depend on the
//! number of worker threads.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::al::Method;
use crate::error::{Error, Result};
use crate::geometry::{CovariateField, ModelSpec, PointPattern, Window};
use crate::io::{read_raster, read_text, Table};
use crate::likelihood::{mle, NewtonOptions};
use crate::quadrature::{build_scheme, QuadGrid};
use crate::simulate::{sim_poisson, sim_thomas, tune_intercept, RngSpec, ThomasParams};
use crate::synthetic::bundled_covariates;
use crate::tuning::{select_lambda_with_pilot, GridSpec, TuningOptions};

/// True and false positive rates in percent. Indices are zero-based; the
/// intercept is excluded from both numerators and denominators.
pub fn tpr_fpr(selected: &[usize], truth: &[usize], p: usize, intercept: Option<usize>) -> Result<(f64, f64)> {
    let truth: BTreeSet<usize> = truth.iter().copied().filter(|j| Some(*j) != intercept).collect();
    if truth.is_empty() {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    let selected: BTreeSet<usize> = selected.iter().copied().filter(|j| Some(*j) != intercept).collect();
    let candidates = p - usize::from(intercept.is_some_and(|i| i < p));
    let negatives = candidates.saturating_sub(truth.len());
    let tp = selected.intersection(&truth).count() as f64;
    let fp = selected.difference(&truth).count() as f64;
    let tpr = 100.0 * tp / truth.len() as f64;
    let fpr = if negatives == 0 { 0.0 } else { 100.0 * fp / negatives as f64 };
    Ok((tpr, fpr))
}

/// Order-independent sum (values are added in sorted order).
fn sorted_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// `sqrt(sum_{j != intercept} mean_r (b^_rj - b_j)^2)`.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64], intercept: Option<usize>) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("RMSE needs at least one replicate".into()));
    }
    let n = estimates.len() as f64;
    let mut total = Vec::with_capacity(truth.len());
    for j in 0..truth.len() {
        if Some(j) == intercept {
            continue;
        }
        let mut sq = Vec::with_capacity(estimates.len());
        for est in estimates {
            if est.len() != truth.len() {
                return Err(Error::DimensionMismatch {
                    expected: truth.len(),
                    got: est.len(),
                });
            }
            sq.push((est[j] - truth[j]).powi(2));
        }
        total.push(sorted_sum(sq) / n);
    }
    Ok(sorted_sum(total).sqrt())
}

/// The `p - 1` non-intercept columns used by studies: the first covariates
/// by name, then pairwise interactions `(a, b)` with `a` before `b`.
pub fn default_model_spec(p: usize, names: &[String]) -> Result<ModelSpec> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("p = {p} must count the intercept and at least one covariate")));
    }
    let k = p - 1;
    let mains = k.min(names.len());
    let mut spec = ModelSpec::new(names[..mains].iter().cloned());
    let mut remaining = k - mains;
    'outer: for a in 0..names.len() {
        for b in a + 1..names.len() {
            if remaining == 0 {
                break 'outer;
            }
            spec = spec.with_interaction(names[a].clone(), names[b].clone());
            remaining -= 1;
        }
    }
    if remaining > 0 {
        return Err(Error::InvalidArgument(format!(
            "{} covariates cannot provide {k} columns",
            names.len()
        )));
    }
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    Poisson,
    Thomas(ThomasParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub setting: String,
    pub process: Process,
    pub window: Window,
    /// Target expected number of points.
    pub mu: f64,
    /// Number of coefficients including the intercept.
    pub p: usize,
    /// Nonzero true coefficients as `(zero-based index, value)`.
    pub truth: Vec<(usize, f64)>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    pub nu: f64,
    pub grid_n: usize,
    pub grid_ratio: f64,
    pub quad: Option<QuadGrid>,
    pub seed: u64,
    pub covariate_seed: u64,
    pub rasters: Vec<PathBuf>,
    pub timing: bool,
}

/// `[0, 250] x [0, 125]`, `[0, 500] x [0, 250]`, `[0, 1000] x [0, 500]`.
pub fn named_window(name: &str) -> Option<Window> {
    let (w, h) = match name.to_ascii_uppercase().as_str() {
        "D1" => (250.0, 125.0),
        "D2" => (500.0, 250.0),
        "D3" => (1000.0, 500.0),
        _ => return None,
    };
    Window::new(0.0, w, 0.0, h).ok()
}

fn default_mu(window: &Window) -> f64 {
    // 150 points on D1, scaling with area (600 on D2, 2400 on D3)
    150.0 * window.area() / (250.0 * 125.0)
}

impl Default for StudyConfig {
    fn default() -> Self {
        let window = named_window("D3").expect("built-in window");
        StudyConfig {
            setting: "poisson_D3_p20".into(),
            process: Process::Poisson,
            mu: default_mu(&window),
            window,
            p: 20,
            truth: vec![(1, 1.0), (2, -1.0)],
            replicates: 100,
            methods: vec![Method::Al, Method::Alds],
            nu: 1.0,
            grid_n: 50,
            grid_ratio: 1e-4,
            quad: None,
            seed: 1,
            covariate_seed: 2024,
            rasters: Vec::new(),
            timing: true,
        }
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "al" => Ok(vec![Method::Al]),
        "alds" => Ok(vec![Method::Alds]),
        "both" => Ok(vec![Method::Al, Method::Alds]),
        other => Err(Error::InvalidArgument(format!("unknown method `{other}` (expected al, alds or both)"))),
    }
}

/// Parses `2:1,3:-1` (one-based indices) into zero-based pairs.
pub fn parse_truth(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (j, v) = t
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("truth entry `{t}` is not index:value")))?;
            let j: usize = j
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad truth index `{j}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad truth value `{v}`")))?;
            if j < 2 {
                return Err(Error::InvalidArgument("truth indices start at 2 (index 1 is the intercept)".into()));
            }
            Ok((j - 1, v))
        })
        .collect()
}

impl StudyConfig {
    /// Parses a flat `key = value` file; `#` starts a comment.
    ///
    /// Keys: `setting`, `process` (poisson | thomas), `kappa`, `gamma`,
    /// `window` (D1 | D2 | D3 | `x0,x1,y0,y1`), `mu`, `p`, `truth`
    /// (`2:1,3:-1`), `replicates`, `methods` (al | alds | both), `nu`,
    /// `grid_n`, `grid_ratio`, `quad` (`NXxNY`), `seed`, `covariate_seed`,
    /// `rasters` (comma-separated paths), `timing` (true | false).
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = StudyConfig::default();
        let (mut process, mut kappa, mut gamma) = ("poisson".to_string(), 4e-4, 15.0);
        let (mut mu, mut setting) = (None, None);
        let mut window_name = "D3".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(path, format!("line {}: {m}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("`{key}` needs a number, got `{v}`")));
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` needs an integer, got `{v}`")));
            match key {
                "setting" => setting = Some(value.to_string()),
                "process" => process = value.to_ascii_lowercase(),
                "kappa" => kappa = num(value)?,
                "gamma" => gamma = num(value)?,
                "window" => {
                    window_name = value.to_string();
                    cfg.window = match named_window(value) {
                        Some(w) => w,
                        None => {
                            let v: Vec<f64> = value.split(',').map(|t| num(t.trim())).collect::<Result<_>>()?;
                            if v.len() != 4 {
                                return Err(err("window needs D1, D2, D3 or x0,x1,y0,y1".into()));
                            }
                            Window::new(v[0], v[1], v[2], v[3])?
                        }
                    };
                }
                "mu" => mu = Some(num(value)?),
                "p" => cfg.p = int(value)? as usize,
                "truth" => cfg.truth = parse_truth(value).map_err(|e| err(e.to_string()))?,
                "replicates" => cfg.replicates = int(value)? as usize,
                "methods" | "method" => cfg.methods = parse_methods(value).map_err(|e| err(e.to_string()))?,
                "nu" => cfg.nu = num(value)?,
                "grid_n" => cfg.grid_n = int(value)? as usize,
                "grid_ratio" => cfg.grid_ratio = num(value)?,
                "quad" => cfg.quad = Some(QuadGrid::parse(value).map_err(|e| err(e.to_string()))?),
                "seed" => cfg.seed = int(value)?,
                "covariate_seed" => cfg.covariate_seed = int(value)?,
                "rasters" => {
                    let base = path.parent().unwrap_or(Path::new(""));
                    cfg.rasters = value
                        .split(',')
                        .map(|t| t.trim())
                        .filter(|t| !t.is_empty())
                        .map(|t| base.join(t))
                        .collect();
                }
                "timing" => {
                    cfg.timing = value
                        .parse()
                        .map_err(|_| err(format!("`timing` needs true or false, got `{value}`")))?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.process = match process.as_str() {
            "poisson" => Process::Poisson,
            "thomas" => Process::Thomas(ThomasParams::new(kappa, gamma).map_err(|e| Error::parse(path, e.to_string()))?),
            other => return Err(Error::parse(path, format!("unknown process `{other}`"))),
        };
        cfg.mu = mu.unwrap_or_else(|| default_mu(&cfg.window));
        cfg.setting = setting.unwrap_or_else(|| {
            let proc = match cfg.process {
                Process::Poisson => "poisson".to_string(),
                Process::Thomas(t) => format!("thomas_g{}", t.gamma),
            };
            format!("{proc}_{window_name}_p{}", cfg.p)
        });
        cfg.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        StudyConfig::parse(&read_text(path)?, path)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu = {} must be positive", self.mu)));
        }
        if self.p < 2 {
            return Err(Error::InvalidArgument("p must be at least 2".into()));
        }
        if self.truth.is_empty() {
            return Err(Error::InvalidArgument("truth must name at least one nonzero coefficient".into()));
        }
        if let Some((j, _)) = self.truth.iter().find(|(j, _)| *j == 0 || *j >= self.p) {
            return Err(Error::InvalidArgument(format!("truth index {} is outside 2..={}", j + 1, self.p)));
        }
        if self.replicates == 0 || self.methods.is_empty() {
            return Err(Error::InvalidArgument("need at least one replicate and one method".into()));
        }
        if !(self.nu > 0.0) {
            return Err(Error::InvalidArgument("nu must be positive".into()));
        }
        Ok(())
    }

    /// Covariate rasters: user-supplied files, or the bundled synthetic set
    /// rescaled onto the study window.
    pub fn fields(&self) -> Result<Vec<CovariateField>> {
        if !self.rasters.is_empty() {
            return self.rasters.iter().map(read_raster).collect();
        }
        let base = named_window("D3").expect("built-in window");
        let fields = bundled_covariates(self.covariate_seed, &base)?;
        Ok(fields.iter().map(|f| f.rescaled_to(&self.window)).collect())
    }

    fn truth_vector(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.p];
        for &(j, v) in &self.truth {
            beta[j] = v;
        }
        beta
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub n_points: usize,
    /// Selected `lambda` and coefficients, or the failure message.
    pub outcome: std::result::Result<(f64, Vec<f64>), String>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub tpr: f64,
    pub fpr: f64,
    pub rmse: f64,
    pub mean_seconds: Option<f64>,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub setting: String,
    pub names: Vec<String>,
    pub truth: Vec<f64>,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<ReplicateRecord>,
    pub failed: usize,
    pub total: usize,
}

const SUMMARY_HEADER: [&str; 9] = [
    "setting", "TPR_AL", "TPR_ALDS", "FPR_AL", "FPR_ALDS", "RMSE_AL", "RMSE_ALDS", "Time_AL", "Time_ALDS",
];

impl StudyResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// One row laid out as `setting, TPR, FPR, RMSE, Time` per method.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(SUMMARY_HEADER);
        let cell = |m: Method, f: &dyn Fn(&MethodSummary) -> Option<f64>| {
            self.summary(m)
                .and_then(f)
                .map_or_else(|| "NA".to_string(), |v| v.to_string())
        };
        let mut row = vec![self.setting.clone()];
        for f in [
            &(|s: &MethodSummary| Some(s.tpr)) as &dyn Fn(&MethodSummary) -> Option<f64>,
            &|s: &MethodSummary| Some(s.fpr),
            &|s: &MethodSummary| Some(s.rmse),
            &|s: &MethodSummary| s.mean_seconds,
        ] {
            row.push(cell(Method::Al, f));
            row.push(cell(Method::Alds, f));
        }
        t.push(row);
        t
    }

    /// Per-replicate records with full-precision coefficients, preceded by
    /// `# setting`, `# truth` and `# total` header lines.
    pub fn records_csv(&self) -> String {
        let mut out = format!("# setting {}\n", self.setting);
        let truth: Vec<String> = self.truth.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("# truth {}\n", truth.join(" ")));
        out.push_str(&format!("# total {}\n", self.total));
        let mut header = vec!["replicate", "method", "status", "n_points", "lambda", "seconds"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        header.extend(self.names.iter().cloned());
        let mut t = Table::new(header);
        for r in &self.records {
            let mut row = vec![r.replicate.to_string(), r.method.tag().to_string()];
            match &r.outcome {
                Ok((lambda, beta)) => {
                    row.push("ok".into());
                    row.push(r.n_points.to_string());
                    row.push(lambda.to_string());
                    row.push(r.seconds.map_or_else(|| "NA".into(), |s| s.to_string()));
                    row.extend(beta.iter().map(|b| b.to_string()));
                }
                Err(msg) => {
                    row.push(format!("error: {}", msg.replace([',', '\n'], ";")));
                    row.push(r.n_points.to_string());
                    row.extend(std::iter::repeat("NA".to_string()).take(2 + self.names.len()));
                }
            }
            t.push(row);
        }
        out.push_str(&t.to_csv());
        out
    }

    /// Rebuilds a result from [`StudyResult::records_csv`] output.
    pub fn from_records_csv(text: &str, path: &Path) -> Result<StudyResult> {
        let mut setting = String::new();
        let mut truth = Vec::new();
        let mut total = 0;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = None;
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# setting ") {
                setting = rest.to_string();
            } else if let Some(rest) = line.strip_prefix("# truth ") {
                truth = rest
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, "bad truth line"))?;
            } else if let Some(rest) = line.strip_prefix("# total ") {
                total = rest.trim().parse().map_err(|_| Error::parse(path, "bad total line"))?;
            } else {
                header = Some(line);
                break;
            }
        }
        let header: Vec<&str> = header.ok_or_else(|| Error::parse(path, "missing header"))?.split(',').collect();
        let names: Vec<String> = header.iter().skip(6).map(|s| s.to_string()).collect();
        let mut records = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(Error::parse(path, format!("record has {} fields, expected {}", f.len(), header.len())));
            }
            let bad = |what: &str| Error::parse(path, format!("bad {what} in `{line}`"));
            let method = match f[1] {
                "AL" => Method::Al,
                "ALDS" => Method::Alds,
                "MLE" => Method::Mle,
                _ => return Err(bad("method")),
            };
            let replicate = f[0].parse().map_err(|_| bad("replicate"))?;
            let n_points = f[3].parse().map_err(|_| bad("n_points"))?;
            let (outcome, seconds) = if f[2] == "ok" {
                let lambda: f64 = f[4].parse().map_err(|_| bad("lambda"))?;
                let beta = f[6..]
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("coefficient"))?;
                let seconds = if f[5] == "NA" {
                    None
                } else {
                    Some(f[5].parse().map_err(|_| bad("seconds"))?)
                };
                (Ok((lambda, beta)), seconds)
            } else {
                (Err(f[2].trim_start_matches("error: ").to_string()), None)
            };
            records.push(ReplicateRecord {
                replicate,
                method,
                n_points,
                outcome,
                seconds,
            });
        }
        let mut methods: Vec<Method> = Vec::new();
        for r in &records {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        summarize(setting, names, truth, &methods, records, total, Some(0))
    }

    /// Fraction of successful replicates on which AL and ALDS selected the
    /// same support.
    pub fn support_agreement(&self) -> Option<f64> {
        let support = |b: &[f64]| -> Vec<usize> { (0..b.len()).filter(|&j| b[j] != 0.0).collect() };
        let mut same = 0usize;
        let mut n = 0usize;
        for r in self.records.iter().filter(|r| r.method == Method::Al) {
            let other = self
                .records
                .iter()
                .find(|o| o.method == Method::Alds && o.replicate == r.replicate)?;
            if let (Ok((_, a)), Ok((_, b))) = (&r.outcome, &other.outcome) {
                n += 1;
                if support(a) == support(b) {
                    same += 1;
                }
            }
        }
        (n > 0).then(|| same as f64 / n as f64)
    }
}

/// Aggregates records into per-method summaries. A replicate on which any
/// method failed is excluded for all methods.
pub fn summarize(
    setting: String,
    names: Vec<String>,
    truth: Vec<f64>,
    methods: &[Method],
    records: Vec<ReplicateRecord>,
    total: usize,
    intercept: Option<usize>,
) -> Result<StudyResult> {
    let failed_set: BTreeSet<usize> = records
        .iter()
        .filter(|r| r.outcome.is_err())
        .map(|r| r.replicate)
        .collect();
    let failed = failed_set.len();
    if failed * 10 > total {
        return Err(Error::StudyFailed { failed, total });
    }
    let true_support: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] != 0.0 && Some(j) != intercept).collect();
    let mut summaries = Vec::new();
    for &m in methods {
        let ok: Vec<&ReplicateRecord> = records
            .iter()
            .filter(|r| r.method == m && !failed_set.contains(&r.replicate))
            .collect();
        if ok.is_empty() {
            continue;
        }
        let mut tprs = Vec::new();
        let mut fprs = Vec::new();
        let mut estimates = Vec::new();
        let mut secs = Vec::new();
        for r in &ok {
            let (_, beta) = r.outcome.as_ref().expect("failed replicates are filtered");
            let sel: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
            let (t, f) = tpr_fpr(&sel, &true_support, truth.len(), intercept)?;
            tprs.push(t);
            fprs.push(f);
            estimates.push(beta.clone());
            secs.push(r.seconds);
        }
        let n = ok.len() as f64;
        let mean_seconds = if secs.iter().all(Option::is_some) {
            Some(sorted_sum(secs.into_iter().flatten().collect()) / n)
        } else {
            None
        };
        summaries.push(MethodSummary {
            method: m,
            tpr: sorted_sum(tprs) / n,
            fpr: sorted_sum(fprs) / n,
            rmse: rmse(&estimates, &truth, intercept)?,
            mean_seconds,
            replicates: ok.len(),
        });
    }
    Ok(StudyResult {
        setting,
        names,
        truth,
        summaries,
        records,
        failed,
        total,
    })
}

/// The study model: fields, default model spec and the true coefficients,
/// with the intercept tuned so the expected count is `config.mu`.
pub fn study_truth(config: &StudyConfig) -> Result<(Vec<CovariateField>, ModelSpec, Vec<f64>)> {
    config.validate()?;
    let fields = config.fields()?;
    let field_names: Vec<String> = fields.iter().map(|f| f.name().to_string()).collect();
    let spec = default_model_spec(config.p, &field_names)?;
    let mut truth = config.truth_vector();
    if let Some(i0) = spec.intercept_index() {
        truth[i0] = tune_intercept(&config.window, &spec, &fields, &truth, config.mu)?;
    }
    Ok((fields, spec, truth))
}

/// Pattern of replicate `r`, drawn on its own RNG stream.
pub fn simulate_replicate(
    config: &StudyConfig,
    spec: &ModelSpec,
    fields: &[CovariateField],
    truth: &[f64],
    r: u64,
) -> Result<PointPattern> {
    let rng = RngSpec::replicate(config.seed, r);
    match config.process {
        Process::Poisson => sim_poisson(&config.window, spec, fields, truth, rng),
        Process::Thomas(t) => sim_thomas(&config.window, spec, fields, truth, t, rng),
    }
}

/// Runs every replicate of `config` (in parallel on the current rayon pool).
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    let (fields, spec, truth) = study_truth(config)?;
    let intercept = spec.intercept_index();
    let tuning = TuningOptions {
        nu: config.nu,
        grid: GridSpec::Auto {
            n: config.grid_n,
            ratio: config.grid_ratio,
        },
        ..TuningOptions::default()
    };

    let records: Vec<Vec<ReplicateRecord>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, &spec, &fields, &truth, &tuning, r))
        .collect();
    let records: Vec<ReplicateRecord> = records.into_iter().flatten().collect();
    summarize(
        config.setting.clone(),
        spec.column_names(),
        truth,
        &config.methods,
        records,
        config.replicates,
        intercept,
    )
}

fn run_replicate(
    config: &StudyConfig,
    spec: &ModelSpec,
    fields: &[CovariateField],
    truth: &[f64],
    tuning: &TuningOptions,
    r: usize,
) -> Vec<ReplicateRecord> {
    let start = Instant::now();
    let prepared = (|| {
        let pattern = simulate_replicate(config, spec, fields, truth, r as u64)?;
        let grid = config.quad.unwrap_or_else(|| QuadGrid::default_for(pattern.len()));
        let scheme = build_scheme(&pattern, spec, fields, grid)?;
        let pilot = mle(&scheme, None, NewtonOptions::default())?.beta;
        Ok::<_, Error>((pattern.len(), scheme, pilot))
    })();
    let shared = start.elapsed().as_secs_f64();
    config
        .methods
        .iter()
        .map(|&method| {
            let (n_points, outcome, seconds) = match &prepared {
                Err(e) => (0, Err(e.to_string()), None),
                Ok((n, scheme, pilot)) => {
                    let t0 = Instant::now();
                    let out = select_lambda_with_pilot(scheme, method, pilot, tuning)
                        .map(|path| (path.selected_lambda(), path.selected_fit().beta().to_vec()))
                        .map_err(|e| e.to_string());
                    (*n, out, Some(shared + t0.elapsed().as_secs_f64()))
                }
            };
            ReplicateRecord {
                replicate: r,
                method,
                n_points,
                seconds: if config.timing && outcome.is_ok() { seconds } else { None },
                outcome,
            }
        })
        .collect()
}
