//! Command-line driver: a JSON study config in, CSV reports and a
//! `manifest.json` out.
//!
//! Exit status: 0 on success, 1 on a configuration or computation error,
//! 2 when a certified inequality is violated.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clark::{solve_nodes, SamplingGrid};
use crate::error::Error;
use crate::harness::{
    bernstein_check, certify_lp, corpus, lemma_checks, measure_pair_check, random_decaying_model_function,
    CorpusManifest,
};
use crate::inner::InnerFunctionSpec;
use crate::kernel::{sinc, SincKernelSpec};
use crate::reconstruct::{
    clark_reconstruct, model_oversample_reconstruct, pw_oversample_reconstruct, shannon_reconstruct, write_decay_csv,
    DecayRow, SampleSet, UniformSamples,
};
use crate::report::fmt_f64;
use crate::sieve::{
    d_mu, d_mu_theta, empirical_embedding_ratio, model_sieve_bound_from_norm, write_sieve_csv, MeasureSpec, SieveRow,
};

#[derive(Debug, Parser)]
#[command(name = "modelspace", version, about = "Sampling and large-sieve studies in model spaces")]
pub struct Args {
    /// JSON study configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Report directory; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Nodes,
    Reconstruct,
    Decay,
    Density,
    CertifySieve,
    CertifyBernstein,
    LemmaChecks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub command: Command,
    #[serde(default)]
    pub inner: Option<InnerFunctionSpec>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Command-specific scalars; which ones are required depends on the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub gamma: Option<f64>,
    pub n_min: Option<i64>,
    pub n_max: Option<i64>,
    pub deltas: Option<Vec<f64>>,
    pub ks: Option<Vec<usize>>,
    pub window: Option<usize>,
    pub method: Option<String>,
    pub methods: Option<Vec<String>>,
    #[serde(rename = "N")]
    pub order: Option<u32>,
    pub a: Option<f64>,
    /// Paley–Wiener band for the uniform-sampling methods.
    pub c: Option<f64>,
    /// Shift of the sinc test function `sinc(c (t - shift))`.
    pub shift: Option<f64>,
    pub m: Option<u32>,
    pub over_c: Option<f64>,
    pub ps: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Kernels per random test function, or pairs for `lemma-checks`.
    pub count: Option<usize>,
    /// Number of random test functions.
    pub size: Option<usize>,
    /// Vanishing moments of the random test functions.
    pub moments: Option<u32>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
}

/// Failure of a run, mapped to an exit status.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Compute(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Compute(e) => write!(f, "error: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Compute(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub config_sha256: String,
    pub files: Vec<String>,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusManifest>,
}

fn missing(command: &str, name: &str) -> RunError {
    RunError::Config(format!("command `{command}` requires params.{name}"))
}

impl StudyConfig {
    pub fn from_json(text: &str) -> RunResult<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn name(&self) -> &'static str {
        match self.command {
            Command::Nodes => "nodes",
            Command::Reconstruct => "reconstruct",
            Command::Decay => "decay",
            Command::Density => "density",
            Command::CertifySieve => "certify-sieve",
            Command::CertifyBernstein => "certify-bernstein",
            Command::LemmaChecks => "lemma-checks",
        }
    }

    fn inner(&self) -> RunResult<&InnerFunctionSpec> {
        self.inner
            .as_ref()
            .ok_or_else(|| RunError::Config(format!("command `{}` requires `inner`", self.name())))
    }

    fn measure(&self) -> RunResult<&MeasureSpec> {
        self.measure
            .as_ref()
            .ok_or_else(|| RunError::Config(format!("command `{}` requires `measure`", self.name())))
    }

    /// Checks that every parameter the command needs is present and in range.
    pub fn validate(&self) -> RunResult<()> {
        let p = &self.params;
        let cmd = self.name();
        let positive = |name: &str, v: &[f64]| -> RunResult<()> {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(RunError::Config(format!("params.{name} must be a nonempty list of positive numbers")));
            }
            Ok(())
        };
        let exponents = |v: &[f64]| -> RunResult<()> {
            if v.is_empty() || v.iter().any(|x| !(*x >= 1.0 && x.is_finite())) {
                return Err(RunError::Config("params.ps must be a nonempty list of exponents >= 1".into()));
            }
            Ok(())
        };
        match self.command {
            Command::Nodes => {
                self.inner()?;
                p.n_min.ok_or_else(|| missing(cmd, "n_min"))?;
                p.n_max.ok_or_else(|| missing(cmd, "n_max"))?;
            }
            Command::Reconstruct => {
                let m = p.method.as_deref().ok_or_else(|| missing(cmd, "method"))?;
                p.window.ok_or_else(|| missing(cmd, "window"))?;
                self.check_method(m)?;
            }
            Command::Decay => {
                let ms = p.methods.as_ref().ok_or_else(|| missing(cmd, "methods"))?;
                if ms.is_empty() {
                    return Err(RunError::Config("params.methods must not be empty".into()));
                }
                let ks = p.ks.as_ref().ok_or_else(|| missing(cmd, "ks"))?;
                if ks.is_empty() || ks.contains(&0) {
                    return Err(RunError::Config("params.ks must be a nonempty list of positive integers".into()));
                }
                for m in ms {
                    self.check_method(m)?;
                }
            }
            Command::Density => {
                self.measure()?;
                positive("deltas", p.deltas.as_deref().ok_or_else(|| missing(cmd, "deltas"))?)?;
            }
            Command::CertifySieve => {
                self.inner()?;
                self.measure()?;
                positive("deltas", p.deltas.as_deref().ok_or_else(|| missing(cmd, "deltas"))?)?;
                exponents(p.ps.as_deref().ok_or_else(|| missing(cmd, "ps"))?)?;
                p.seed.ok_or_else(|| missing(cmd, "seed"))?;
            }
            Command::CertifyBernstein => {
                self.inner()?;
                exponents(p.ps.as_deref().ok_or_else(|| missing(cmd, "ps"))?)?;
                p.seed.ok_or_else(|| missing(cmd, "seed"))?;
            }
            Command::LemmaChecks => {
                p.seed.ok_or_else(|| missing(cmd, "seed"))?;
                if self.measure.is_some() {
                    positive("deltas", p.deltas.as_deref().ok_or_else(|| missing(cmd, "deltas"))?)?;
                }
            }
        }
        if let (Some(lo), Some(hi)) = (p.x_min, p.x_max) {
            if !(lo < hi) {
                return Err(RunError::Config(format!("params.x_min = {lo} must be below params.x_max = {hi}")));
            }
        }
        Ok(())
    }

    fn check_method(&self, method: &str) -> RunResult<()> {
        let p = &self.params;
        let cmd = self.name();
        match method {
            "shannon" => {
                p.c.ok_or_else(|| missing(cmd, "c"))?;
            }
            "pw_oversample" => {
                p.c.ok_or_else(|| missing(cmd, "c"))?;
                p.order.ok_or_else(|| missing(cmd, "N"))?;
                p.a.ok_or_else(|| missing(cmd, "a"))?;
            }
            "clark" => {
                self.inner()?;
                p.seed.ok_or_else(|| missing(cmd, "seed"))?;
            }
            "model_oversample" => {
                self.inner()?;
                p.seed.ok_or_else(|| missing(cmd, "seed"))?;
                p.m.ok_or_else(|| missing(cmd, "m"))?;
                p.over_c.ok_or_else(|| missing(cmd, "over_c"))?;
            }
            other => {
                return Err(RunError::Config(format!(
                    "unknown method `{other}`; expected shannon, pw_oversample, clark or model_oversample"
                )))
            }
        }
        Ok(())
    }
}

/// Report writer that remembers the file names it produced.
struct Reports {
    dir: PathBuf,
    files: Vec<String>,
}

impl Reports {
    fn create(&mut self, name: &str) -> RunResult<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }
}

/// Runs a validated config, writing reports into `out`. Returns the
/// manifest, whose `violations` decides between exit 0 and 2.
pub fn run(cfg: &StudyConfig, config_text: &str, out: &Path) -> RunResult<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let mut reports = Reports {
        dir: out.to_path_buf(),
        files: Vec::new(),
    };
    let mut corpus_manifest = None;
    let violations = match cfg.command {
        Command::Nodes => run_nodes(cfg, &mut reports)?,
        Command::Reconstruct => run_reconstruct(cfg, &mut reports)?,
        Command::Decay => run_decay(cfg, &mut reports)?,
        Command::Density => run_density(cfg, &mut reports)?,
        Command::CertifySieve => run_certify_sieve(cfg, &mut reports, &mut corpus_manifest)?,
        Command::CertifyBernstein => run_certify_bernstein(cfg, &mut reports, &mut corpus_manifest)?,
        Command::LemmaChecks => run_lemma_checks(cfg, &mut reports)?,
    };
    let manifest = Manifest {
        command: cfg.command,
        config_sha256: Sha256::digest(config_text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
        files: reports.files.clone(),
        violations,
        corpus: corpus_manifest,
    };
    let mut w = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| RunError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(manifest)
}

fn run_nodes(cfg: &StudyConfig, reports: &mut Reports) -> RunResult<usize> {
    let p = &cfg.params;
    let grid = solve_nodes(cfg.inner()?, p.gamma.unwrap_or(0.0), p.n_min.unwrap(), p.n_max.unwrap())?;
    let mut w = reports.create("nodes.csv")?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    Ok(0)
}

/// Evaluation points `params.x_min ..= params.x_max` (default `[-1, 1]`,
/// 201 points).
fn eval_points(p: &Params) -> Vec<f64> {
    let lo = p.x_min.unwrap_or(-1.0);
    let hi = p.x_max.unwrap_or(1.0);
    let n = p.points.unwrap_or(201).max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

type Target = Box<dyn Fn(f64) -> Complex64 + Sync>;
type Approx = Box<dyn Fn(usize, f64) -> crate::error::Result<Complex64> + Sync>;

/// Test function and truncated reconstruction (indexed by window `K`) for
/// one method, with samples precomputed up to `k_max`.
fn method_study(cfg: &StudyConfig, method: &str, k_max: usize) -> RunResult<(Target, Approx)> {
    let p = &cfg.params;
    match method {
        "shannon" | "pw_oversample" => {
            let c = p.c.unwrap();
            let shift = p.shift.unwrap_or(0.5);
            let f = move |t: f64| Complex64::new(sinc(c * (t - shift)), 0.0);
            if method == "shannon" {
                let s = UniformSamples::from_fn(c, k_max, f)?;
                let approx = move |k: usize, x: f64| {
                    Ok(shannon_reconstruct(&truncate_uniform(&s, k)?, x))
                };
                Ok((Box::new(f), Box::new(approx)))
            } else {
                let kernel = SincKernelSpec::new(p.order.unwrap(), p.a.unwrap(), c)?;
                let s = UniformSamples::from_fn(kernel.total_band(), k_max, f)?;
                let approx = move |k: usize, x: f64| pw_oversample_reconstruct(&truncate_uniform(&s, k)?, &kernel, x);
                Ok((Box::new(f), Box::new(approx)))
            }
        }
        "clark" | "model_oversample" => {
            let inner = cfg.inner()?.clone();
            let g = random_decaying_model_function(
                &inner,
                p.count.unwrap_or(5),
                p.moments.unwrap_or(0),
                p.seed.unwrap(),
            )?;
            let gamma = p.gamma.unwrap_or(0.0);
            let g2 = g.clone();
            let f = move |x: f64| g2.value(x);
            if method == "clark" {
                let grid = centered_grid(&inner, gamma, k_max)?;
                let samples = SampleSet::from_fn(grid, |x| g.value(x));
                let approx = move |k: usize, x: f64| clark_reconstruct(&samples.window(0.0, k), &inner, x);
                Ok((Box::new(f), Box::new(approx)))
            } else {
                let (m, over_c) = (p.m.unwrap(), p.over_c.unwrap());
                let enlarged = inner.enlarge(over_c, &[])?;
                let grid = centered_grid(&enlarged, gamma, k_max)?;
                let samples = SampleSet::from_fn(grid, |x| g.value(x));
                let approx = move |k: usize, x: f64| {
                    model_oversample_reconstruct(&samples.window(0.0, k), &inner, over_c, m, x)
                };
                Ok((Box::new(f), Box::new(approx)))
            }
        }
        other => Err(RunError::Config(format!("unknown method `{other}`"))),
    }
}

fn truncate_uniform(s: &UniformSamples, k: usize) -> crate::error::Result<UniformSamples> {
    let k0 = s.half_window();
    let values: Vec<Complex64> = s.iter().skip(k0 - k.min(k0)).take(2 * k.min(k0) + 1).map(|(_, v)| v).collect();
    UniformSamples::new(s.b(), values)
}

/// Nodes reaching at least `k_max` indices beyond the node nearest 0.
fn centered_grid(spec: &InnerFunctionSpec, gamma: f64, k_max: usize) -> RunResult<SamplingGrid> {
    let reach = k_max as i64 + spec.total_multiplicity() as i64 + 2;
    let n0 = ((spec.phase_value(0.0) - gamma) / crate::inner::TWO_PI).round() as i64;
    Ok(solve_nodes(spec, gamma, n0 - reach, n0 + reach)?)
}

fn run_reconstruct(cfg: &StudyConfig, reports: &mut Reports) -> RunResult<usize> {
    let p = &cfg.params;
    let k = p.window.unwrap();
    if k == 0 {
        return Err(RunError::Config("params.window must be >= 1".into()));
    }
    let (f, approx) = method_study(cfg, p.method.as_deref().unwrap(), k)?;
    let xs = eval_points(p);
    let rows: Vec<(f64, Complex64, Complex64)> = xs
        .par_iter()
        .map(|&x| Ok((x, approx(k, x)?, f(x))))
        .collect::<crate::error::Result<_>>()?;
    let mut w = reports.create("reconstruct.csv")?;
    writeln!(w, "x,re,im,exact_re,exact_im,abs_error")?;
    for (x, v, e) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(e.re),
            fmt_f64(e.im),
            fmt_f64((v - e).norm())
        )?;
    }
    w.flush()?;
    Ok(0)
}

fn run_decay(cfg: &StudyConfig, reports: &mut Reports) -> RunResult<usize> {
    let p = &cfg.params;
    let ks = p.ks.clone().unwrap();
    let k_max = *ks.iter().max().unwrap();
    let xs = eval_points(p);
    let len = xs[xs.len() - 1] - xs[0];
    let mut table: Vec<(String, Vec<DecayRow>)> = Vec::new();
    for method in p.methods.as_ref().unwrap() {
        let (f, approx) = method_study(cfg, method, k_max)?;
        let mut rows = Vec::new();
        for &k in &ks {
            let errs: Vec<f64> = xs
                .par_iter()
                .map(|&x| Ok((approx(k, x)? - f(x)).norm()))
                .collect::<crate::error::Result<_>>()?;
            rows.push(DecayRow::from_errors(k, &errs, len));
        }
        let mut w = reports.create(&format!("decay_{method}.csv"))?;
        write_decay_csv(&rows, &mut w)?;
        w.flush()?;
        table.push((method.clone(), rows));
    }
    // side-by-side sup errors
    let mut w = reports.create("decay.csv")?;
    write!(w, "K")?;
    for (m, _) in &table {
        write!(w, ",{m}")?;
    }
    writeln!(w)?;
    for (i, k) in ks.iter().enumerate() {
        write!(w, "{k}")?;
        for (_, rows) in &table {
            write!(w, ",{}", fmt_f64(rows[i].sup_error))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(0)
}

fn run_density(cfg: &StudyConfig, reports: &mut Reports) -> RunResult<usize> {
    let measure = cfg.measure()?;
    let theta = cfg.inner.as_ref().filter(|s| s.c() > 0.0);
    let mut w = reports.create("density.csv")?;
    writeln!(w, "delta,D,witness_l,witness_r,D_theta,theta_witness_l,theta_witness_r")?;
    for &delta in cfg.params.deltas.as_ref().unwrap() {
        let d = d_mu(measure, delta)?;
        write!(w, "{},{},{},{}", fmt_f64(delta), fmt_f64(d.value), fmt_f64(d.witness.0), fmt_f64(d.witness.1))?;
        match theta {
            Some(spec) => {
                let t = d_mu_theta(measure, spec, delta)?;
                writeln!(w, ",{},{},{}", fmt_f64(t.value), fmt_f64(t.witness.0), fmt_f64(t.witness.1))?;
            }
            None => writeln!(w, ",,,")?,
        }
    }
    w.flush()?;
    Ok(0)
}

/// Relative slack allowed when comparing a measured quantity to its bound.
const CERT_TOL: f64 = 1e-9;

fn run_certify_sieve(
    cfg: &StudyConfig,
    reports: &mut Reports,
    manifest: &mut Option<CorpusManifest>,
) -> RunResult<usize> {
    let p = &cfg.params;
    let spec = cfg.inner()?;
    let measure = cfg.measure()?;
    let (seed, size, count, moments) = corpus_params(p);
    let fs = corpus(spec, size, count, moments, seed)?;
    *manifest = Some(CorpusManifest::new(spec, seed, size, count, moments));
    let theta_sup = spec.derivative_sup_norm();
    let mut violations = 0;
    for &pp in p.ps.as_ref().unwrap() {
        let ratios: Vec<f64> = fs
            .par_iter()
            .map(|f| empirical_embedding_ratio(&certify_lp(f, pp)?, measure, pp))
            .collect::<crate::error::Result<_>>()?;
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        let mut rows = Vec::new();
        for &delta in p.deltas.as_ref().unwrap() {
            let d = d_mu(measure, delta)?.value;
            let row = SieveRow {
                delta,
                d,
                bound: model_sieve_bound_from_norm(theta_sup, delta, d, pp),
                max_ratio,
            };
            if row.max_ratio > row.bound * (1.0 + CERT_TOL) {
                violations += 1;
            }
            rows.push(row);
        }
        let mut w = reports.create(&format!("certify_sieve_p{pp}.csv"))?;
        write_sieve_csv(&rows, &mut w)?;
        w.flush()?;
    }
    Ok(violations)
}

/// `(seed, size, count, moments)`; defaults give 20 functions of 10
/// kernels with 3 vanishing moments, so every `L^p`, `p >= 1`, is certified.
fn corpus_params(p: &Params) -> (u64, usize, usize, u32) {
    (
        p.seed.unwrap(),
        p.size.unwrap_or(20),
        p.count.unwrap_or(10),
        p.moments.unwrap_or(3),
    )
}

fn run_certify_bernstein(
    cfg: &StudyConfig,
    reports: &mut Reports,
    manifest: &mut Option<CorpusManifest>,
) -> RunResult<usize> {
    let p = &cfg.params;
    let spec = cfg.inner()?;
    let (seed, size, count, moments) = corpus_params(p);
    let fs = corpus(spec, size, count, moments, seed)?;
    *manifest = Some(CorpusManifest::new(spec, seed, size, count, moments));
    let mut w = reports.create("bernstein.csv")?;
    writeln!(w, "index,p,derivative_norm,bound,ratio")?;
    let mut violations = 0;
    for &pp in p.ps.as_ref().unwrap() {
        let res: Vec<(f64, f64)> = fs
            .par_iter()
            .map(|f| bernstein_check(f, pp))
            .collect::<crate::error::Result<_>>()?;
        for (i, (l, r)) in res.into_iter().enumerate() {
            if l > r * (1.0 + CERT_TOL) {
                violations += 1;
            }
            writeln!(w, "{i},{},{},{},{}", fmt_f64(pp), fmt_f64(l), fmt_f64(r), fmt_f64(l / r))?;
        }
    }
    w.flush()?;
    Ok(violations)
}

fn run_lemma_checks(cfg: &StudyConfig, reports: &mut Reports) -> RunResult<usize> {
    let p = &cfg.params;
    let rows = lemma_checks(p.count.unwrap_or(50), p.seed.unwrap())?;
    let mut violations = rows.iter().filter(|r| !r.holds()).count();
    let mut w = reports.create("lemma_checks.csv")?;
    writeln!(w, "check,a,b,delta,value,bound,margin")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},,{},{},{}",
            r.check,
            fmt_f64(r.a),
            fmt_f64(r.b),
            fmt_f64(r.value),
            fmt_f64(r.bound),
            fmt_f64(r.bound - r.value)
        )?;
    }
    if let Some(measure) = &cfg.measure {
        for &delta in p.deltas.as_ref().unwrap() {
            for r in rows.iter().filter(|r| r.check == "pair") {
                let (value, bound) = measure_pair_check(measure, r.a, r.b, delta)?;
                if value > bound {
                    violations += 1;
                }
                writeln!(
                    w,
                    "measure_pair,{},{},{},{},{},{}",
                    fmt_f64(r.a),
                    fmt_f64(r.b),
                    fmt_f64(delta),
                    fmt_f64(value),
                    fmt_f64(bound),
                    fmt_f64(bound - value)
                )?;
            }
        }
    }
    w.flush()?;
    Ok(violations)
}

/// Parses arguments, runs the study and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if args.threads > 0 {
        // only fails if a global pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global();
    }
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match StudyConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match run(&cfg, &text, &out) {
        Ok(m) if m.violations > 0 => {
            eprintln!("{} certified inequality violation(s); see {}", m.violations, out.display());
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
