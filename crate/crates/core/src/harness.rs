//! Synthetic instances, the benchmark driver and an independent optimality
//! oracle.
//!
//! The dictionaries are synthetic: every column shares a spike along one
//! random unit direction `u`, `a_j = √ρ u + √(1−ρ) g_j`, then gets
//! renormalized. This stands in for real image dictionaries, which are not
//! bundled; it reproduces high mutual coherence, not the spectrum of any
//! particular image set.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use ndarray::{s, Array1, Array2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, L1LeastSquares, DEFAULT_LAMBDA};
use crate::solvers::{solve, MuSchedule, Solution, SolverConfig, SolverKind, StepKind, TraceRow};

pub const SUPPORT_THRESHOLD: f64 = 1e-6;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(mut v: Array1<f64>) -> Array1<f64> {
    let n = linalg::norm2(v.view());
    if n > 0.0 {
        v /= n;
    }
    v
}

/// `m × n` dictionary with unit columns and pairwise inner products near `ρ`.
pub fn gen_correlated_dictionary(m: usize, n: usize, rho: f64, seed: u64) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("rho", format!("must lie in [0, 1), got {rho}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("m, n", "dictionary dimensions must be positive"));
    }
    let mut rng = rng_for(seed, 1);
    let u = unit(gaussian_vec(&mut rng, m));
    let mut a = Array2::zeros((m, n));
    for mut col in a.columns_mut() {
        let g = unit(gaussian_vec(&mut rng, m));
        let c = unit(linalg::lincomb(rho.sqrt(), &u, (1.0 - rho).sqrt(), &g));
        col.assign(&c);
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: L1LeastSquares,
    pub x_true: Array1<f64>,
    pub e_true: Array1<f64>,
}

/// Builds `b = A x_true + e_true + noise` from the spec's first instance seed.
pub fn gen_instance(spec: &ExperimentSpec) -> Result<Instance> {
    gen_instance_seeded(spec, spec.seed)
}

pub fn gen_instance_seeded(spec: &ExperimentSpec, seed: u64) -> Result<Instance> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let a = gen_correlated_dictionary(m, n, spec.rho, seed)?;
    let mut rng = rng_for(seed, 2);

    let mut x_true = Array1::zeros(n);
    for j in sample(&mut rng, n, spec.k_true.min(n)).iter() {
        x_true[j] = StandardNormal.sample(&mut rng);
    }
    let clean = a.dot(&x_true);
    let signal = if spec.k_true > 0 {
        (clean.dot(&clean) / m as f64).sqrt()
    } else {
        1.0
    };

    let n_corrupt = ((spec.corruption * m as f64).round() as usize).min(m);
    let mut e_true = Array1::zeros(m);
    for i in sample(&mut rng, m, n_corrupt).iter() {
        let v: f64 = StandardNormal.sample(&mut rng);
        e_true[i] = signal * v;
    }
    let noise = gaussian_vec(&mut rng, m) * spec.noise;
    let b = &clean + &e_true + &noise;
    let problem = L1LeastSquares::new(a, b, spec.lambda, spec.bucket)?;
    Ok(Instance { problem, x_true, e_true })
}

/// `max_j r_j` with `r_j = |∇f(x)_j + λ sgn(x_j)|` on `|x_j| > 1e-10` and
/// `max(0, |∇f(x)_j| − λ)` elsewhere.
pub fn subgradient_residual(problem: &L1LeastSquares, x: &Array1<f64>) -> Result<f64> {
    crate::error::check_len("subgradient_residual", problem.dim(), x.len())?;
    let grad = problem.smooth_grad(x);
    let lambda = problem.lambda();
    Ok(x.iter().zip(&grad).fold(0.0_f64, |acc, (&xj, &gj)| {
        let r = if xj.abs() > 1e-10 {
            (gj + lambda * xj.signum()).abs()
        } else {
            (gj.abs() - lambda).max(0.0)
        };
        acc.max(r)
    }))
}

/// Benchmark description read from a `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub m: usize,
    pub n: usize,
    pub rho: f64,
    pub k_true: usize,
    pub corruption: f64,
    pub noise: f64,
    pub seed: u64,
    pub lambda: f64,
    pub bucket: bool,
    pub reps: usize,
    /// Instances use seeds `seed, seed+1, …`.
    pub instances: usize,
    pub warmup: bool,
    /// Worker threads for independent (instance, solver, repetition) runs.
    pub threads: usize,
    pub solvers: Vec<(SolverKind, SolverConfig)>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            m: 400,
            n: 256,
            rho: 0.9,
            k_true: 10,
            corruption: 0.1,
            noise: 0.0,
            seed: 0,
            lambda: DEFAULT_LAMBDA,
            bucket: true,
            reps: 1,
            instances: 1,
            warmup: true,
            threads: 1,
            solvers: vec![
                (SolverKind::Fista, SolverConfig::default()),
                (SolverKind::Magma, SolverConfig::default()),
            ],
        }
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Spec {
        line,
        message: format!("cannot parse `{value}` for `{key}`"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(Error::Spec {
            line,
            message: format!("cannot parse `{value}` for `{key}` as a boolean"),
        }),
    }
}

/// Sets one solver option by its flag name. Returns `false` for keys that are
/// not solver options.
pub fn apply_config_key(config: &mut SolverConfig, key: &str, value: &str, line: usize) -> Result<bool> {
    match key {
        "eps" => config.eps = parse_num(line, key, value)?,
        "max_iters" | "T" => config.max_iters = parse_num(line, key, value)?,
        "kappa" => config.kappa = parse_num(line, key, value)?,
        "theta" => config.theta = parse_num(line, key, value)?,
        "Kd" | "kd" => config.kd = parse_num(line, key, value)?,
        "c" => config.armijo_c = parse_num(line, key, value)?,
        "tau" => config.tau = parse_num(line, key, value)?,
        "s0" => config.s0 = parse_num(line, key, value)?,
        "mu" => config.mu = MuSchedule::Fixed(parse_num(line, key, value)?),
        "zeta" => config.mu = MuSchedule::Theoretical { zeta: parse_num(line, key, value)? },
        "mu_H" | "mu_h" => config.mu_coarse = Some(parse_num(line, key, value)?),
        "coarse_tol" => config.coarse_tol = parse_num(line, key, value)?,
        "N_H" | "n_h" => config.coarse_max_iters = parse_num(line, key, value)?,
        "levels" => config.levels = Some(parse_num(line, key, value)?),
        _ => return Ok(false),
    }
    Ok(true)
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        let mut solver_names: Option<(usize, String)> = None;
        let mut global: Vec<(usize, String, String)> = Vec::new();
        let mut overrides: Vec<(usize, SolverKind, String, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Spec {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "m" => spec.m = parse_num(line, key, value)?,
                "n" => spec.n = parse_num(line, key, value)?,
                "rho" => spec.rho = parse_num(line, key, value)?,
                "k_true" => spec.k_true = parse_num(line, key, value)?,
                "corruption" => spec.corruption = parse_num(line, key, value)?,
                "noise" => spec.noise = parse_num(line, key, value)?,
                "seed" => spec.seed = parse_num(line, key, value)?,
                "lambda" => spec.lambda = parse_num(line, key, value)?,
                "bucket" => spec.bucket = parse_bool(line, key, value)?,
                "reps" => spec.reps = parse_num(line, key, value)?,
                "instances" => spec.instances = parse_num(line, key, value)?,
                "warmup" => spec.warmup = parse_bool(line, key, value)?,
                "threads" => spec.threads = parse_num(line, key, value)?,
                "solvers" => solver_names = Some((line, value.to_string())),
                _ => {
                    if let Some((prefix, sub)) = key.split_once('.') {
                        let kind = prefix.parse::<SolverKind>().map_err(|_| Error::Spec {
                            line,
                            message: format!("unknown solver prefix `{prefix}`"),
                        })?;
                        overrides.push((line, kind, sub.to_string(), value.to_string()));
                    } else {
                        global.push((line, key.to_string(), value.to_string()));
                    }
                }
            }
        }

        let mut base = SolverConfig::default();
        for (line, key, value) in &global {
            if !apply_config_key(&mut base, key, value, *line)? {
                return Err(Error::Spec {
                    line: *line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        if let Some((line, names)) = solver_names {
            let mut kinds = Vec::new();
            for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let kind = name.parse::<SolverKind>().map_err(|_| Error::Spec {
                    line,
                    message: format!("unknown solver `{name}`"),
                })?;
                kinds.push(kind);
            }
            if kinds.is_empty() {
                return Err(Error::Spec {
                    line,
                    message: "empty solver list".into(),
                });
            }
            spec.solvers = kinds.into_iter().map(|k| (k, base.clone())).collect();
        } else {
            for (_, cfg) in &mut spec.solvers {
                *cfg = base.clone();
            }
        }
        for (line, kind, key, value) in &overrides {
            let mut touched = false;
            for (k, cfg) in &mut spec.solvers {
                if k == kind {
                    if !apply_config_key(cfg, key, value, *line)? {
                        return Err(Error::Spec {
                            line: *line,
                            message: format!("unknown solver option `{key}`"),
                        });
                    }
                    touched = true;
                }
            }
            if !touched {
                return Err(Error::Spec {
                    line: *line,
                    message: format!("override for `{kind}`, which is not in the solver list"),
                });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::invalid("m, n", "dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", format!("must lie in [0, 1), got {}", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return Err(Error::invalid("corruption", format!("must lie in [0, 1], got {}", self.corruption)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise", format!("must be nonnegative, got {}", self.noise)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if self.reps == 0 || self.instances == 0 || self.threads == 0 {
            return Err(Error::invalid("reps, instances, threads", "must be positive"));
        }
        for (_, cfg) in &self.solvers {
            cfg.validate()?;
        }
        Ok(())
    }

    /// Canonical `key = value` rendering with every field resolved.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "m = {}", self.m);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "rho = {:?}", self.rho);
        let _ = writeln!(out, "k_true = {}", self.k_true);
        let _ = writeln!(out, "corruption = {:?}", self.corruption);
        let _ = writeln!(out, "noise = {:?}", self.noise);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "lambda = {:?}", self.lambda);
        let _ = writeln!(out, "bucket = {}", self.bucket);
        let _ = writeln!(out, "reps = {}", self.reps);
        let _ = writeln!(out, "instances = {}", self.instances);
        let names: Vec<_> = self.solvers.iter().map(|(k, _)| k.as_str()).collect();
        let _ = writeln!(out, "solvers = {}", names.join(","));
        for (kind, cfg) in &self.solvers {
            for (key, value) in config_entries(cfg) {
                let _ = writeln!(out, "{kind}.{key} = {value}");
            }
        }
        out
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Resolved solver options as `(flag, value)` pairs.
pub fn config_entries(cfg: &SolverConfig) -> BTreeMap<&'static str, String> {
    let mut map = BTreeMap::new();
    map.insert("eps", format!("{:?}", cfg.eps));
    map.insert("max_iters", cfg.max_iters.to_string());
    map.insert("kappa", format!("{:?}", cfg.kappa));
    map.insert("theta", format!("{:?}", cfg.theta));
    map.insert("Kd", cfg.kd.to_string());
    map.insert("c", format!("{:?}", cfg.armijo_c));
    map.insert("tau", format!("{:?}", cfg.tau));
    map.insert("s0", format!("{:?}", cfg.s0));
    match cfg.mu {
        MuSchedule::Fixed(mu) => map.insert("mu", format!("{mu:?}")),
        MuSchedule::Theoretical { zeta } => map.insert("zeta", format!("{zeta:?}")),
    };
    map.insert("mu_H", cfg.mu_coarse.map_or("fine".into(), |v| format!("{v:?}")));
    map.insert("coarse_tol", format!("{:?}", cfg.coarse_tol));
    map.insert("N_H", cfg.coarse_max_iters.to_string());
    map.insert("levels", cfg.levels.map_or("auto".into(), |v| v.to_string()));
    map
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub spec_hash: String,
    pub solver: SolverKind,
    pub instance: usize,
    pub rep: usize,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub grad_map_norm: f64,
    pub time_s: f64,
    /// ℓ1 norm of the signal block (the whole point outside bucket mode).
    pub l1_norm: f64,
    pub support: usize,
    pub subgradient_residual: f64,
    pub gradient_steps: usize,
    pub coarse_steps: usize,
    pub fallback_steps: usize,
    pub error: Option<String>,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    run: usize,
    spec_hash: String,
    solver: SolverKind,
    instance: usize,
    rep: usize,
    converged: bool,
    iterations: usize,
    objective: f64,
    grad_map_norm: f64,
    time_s: f64,
    l1_norm: f64,
    support: usize,
    subgradient_residual: f64,
    gradient_steps: usize,
    coarse_steps: usize,
    fallback_steps: usize,
    error: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceCsvRow {
    run: usize,
    k: usize,
    step_kind: StepKind,
    objective: f64,
    grad_map_norm: f64,
    eta: Option<f64>,
    alpha: Option<f64>,
    t: Option<f64>,
    s: Option<f64>,
    elapsed_ns: u64,
}

impl TraceCsvRow {
    fn new(run: usize, r: &TraceRow) -> Self {
        TraceCsvRow {
            run,
            k: r.k,
            step_kind: r.step_kind,
            objective: r.objective,
            grad_map_norm: r.grad_map_norm,
            eta: r.eta,
            alpha: r.alpha,
            t: r.t,
            s: r.s,
            elapsed_ns: r.elapsed_ns,
        }
    }

    fn into_row(self) -> TraceRow {
        TraceRow {
            k: self.k,
            step_kind: self.step_kind,
            objective: self.objective,
            grad_map_norm: self.grad_map_norm,
            eta: self.eta,
            alpha: self.alpha,
            t: self.t,
            s: self.s,
            elapsed_ns: self.elapsed_ns,
        }
    }
}

impl RunRecord {
    pub fn from_solution(spec_hash: &str, problem: &L1LeastSquares, instance: usize, rep: usize, sol: &Solution) -> Result<Self> {
        let atoms = problem.dictionary().atoms();
        let signal = sol.x.slice(s![..atoms]);
        Ok(RunRecord {
            spec_hash: spec_hash.to_string(),
            solver: sol.solver,
            instance,
            rep,
            converged: sol.converged,
            iterations: sol.iterations,
            objective: sol.objective,
            grad_map_norm: sol.grad_map_norm,
            time_s: sol.elapsed.as_secs_f64(),
            l1_norm: linalg::norm1(signal),
            support: signal.iter().filter(|v| v.abs() > SUPPORT_THRESHOLD).count(),
            subgradient_residual: subgradient_residual(problem, &sol.x)?,
            gradient_steps: sol.gradient_steps,
            coarse_steps: sol.coarse_steps,
            fallback_steps: sol.fallback_steps,
            error: None,
            trace: sol.trace.clone(),
        })
    }

    fn failed(spec_hash: &str, solver: SolverKind, instance: usize, rep: usize, err: &Error) -> Self {
        RunRecord {
            spec_hash: spec_hash.to_string(),
            solver,
            instance,
            rep,
            converged: false,
            iterations: 0,
            objective: f64::NAN,
            grad_map_norm: f64::NAN,
            time_s: 0.0,
            l1_norm: f64::NAN,
            support: 0,
            subgradient_residual: f64::NAN,
            gradient_steps: 0,
            coarse_steps: 0,
            fallback_steps: 0,
            error: Some(err.to_string()),
            trace: Vec::new(),
        }
    }
}

/// Writes one summary row per record and one trace row per iteration, joined
/// on the `run` column.
pub fn write_records<W1: Write, W2: Write>(records: &[RunRecord], summary: W1, traces: W2) -> Result<()> {
    let mut sw = csv::Writer::from_writer(summary);
    let mut tw = csv::Writer::from_writer(traces);
    for (run, r) in records.iter().enumerate() {
        sw.serialize(RecordRow {
            run,
            spec_hash: r.spec_hash.clone(),
            solver: r.solver,
            instance: r.instance,
            rep: r.rep,
            converged: r.converged,
            iterations: r.iterations,
            objective: r.objective,
            grad_map_norm: r.grad_map_norm,
            time_s: r.time_s,
            l1_norm: r.l1_norm,
            support: r.support,
            subgradient_residual: r.subgradient_residual,
            gradient_steps: r.gradient_steps,
            coarse_steps: r.coarse_steps,
            fallback_steps: r.fallback_steps,
            error: r.error.clone(),
        })?;
        for row in &r.trace {
            tw.serialize(TraceCsvRow::new(run, row))?;
        }
    }
    sw.flush()?;
    tw.flush()?;
    Ok(())
}

pub fn read_records<R1: Read, R2: Read>(summary: R1, traces: R2) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for row in csv::Reader::from_reader(summary).deserialize() {
        let row: RecordRow = row?;
        if row.run != records.len() {
            return Err(Error::invalid("run", format!("expected run {} but found {}", records.len(), row.run)));
        }
        records.push(RunRecord {
            spec_hash: row.spec_hash,
            solver: row.solver,
            instance: row.instance,
            rep: row.rep,
            converged: row.converged,
            iterations: row.iterations,
            objective: row.objective,
            grad_map_norm: row.grad_map_norm,
            time_s: row.time_s,
            l1_norm: row.l1_norm,
            support: row.support,
            subgradient_residual: row.subgradient_residual,
            gradient_steps: row.gradient_steps,
            coarse_steps: row.coarse_steps,
            fallback_steps: row.fallback_steps,
            error: row.error,
            trace: Vec::new(),
        });
    }
    for row in csv::Reader::from_reader(traces).deserialize() {
        let row: TraceCsvRow = row?;
        let run = row.run;
        let rec = records
            .get_mut(run)
            .ok_or_else(|| Error::invalid("run", format!("trace row references unknown run {run}")))?;
        rec.trace.push(row.into_row());
    }
    Ok(records)
}

/// Writes a single trace as CSV.
pub fn write_trace<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Starting point for repetition `rep` of an instance, shared by all solvers.
pub fn starting_point(dim: usize, seed: u64, rep: usize) -> Array1<f64> {
    let mut rng = rng_for(seed, 100 + rep as u64);
    gaussian_vec(&mut rng, dim)
}

struct Job {
    instance: usize,
    rep: usize,
    solver: usize,
}

/// Runs every configured solver on every (instance, repetition) pair.
///
/// Records come back ordered by instance, then repetition, then solver list
/// position. A failing run yields a record with `error` set.
pub fn run_compare(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let hash = spec.hash();
    let mut instances = Vec::with_capacity(spec.instances);
    for i in 0..spec.instances {
        instances.push(gen_instance_seeded(spec, spec.seed.wrapping_add(i as u64))?);
    }

    if spec.warmup {
        for inst in &instances {
            let x0 = starting_point(inst.problem.dim(), spec.seed, 0);
            for (kind, cfg) in &spec.solvers {
                let _ = solve(*kind, &inst.problem, &x0, cfg);
            }
        }
    }

    let mut jobs = Vec::new();
    for instance in 0..spec.instances {
        for rep in 0..spec.reps {
            for solver in 0..spec.solvers.len() {
                jobs.push(Job { instance, rep, solver });
            }
        }
    }

    let run_job = |job: &Job| -> RunRecord {
        let inst = &instances[job.instance];
        let (kind, cfg) = &spec.solvers[job.solver];
        let seed = spec.seed.wrapping_add(job.instance as u64);
        let x0 = starting_point(inst.problem.dim(), seed, job.rep);
        solve(*kind, &inst.problem, &x0, cfg)
            .and_then(|sol| RunRecord::from_solution(&hash, &inst.problem, job.instance, job.rep, &sol))
            .unwrap_or_else(|e| RunRecord::failed(&hash, *kind, job.instance, job.rep, &e))
    };

    if spec.threads <= 1 {
        return Ok(jobs.iter().map(run_job).collect());
    }
    let mut slots: Vec<Option<RunRecord>> = vec![None; jobs.len()];
    let chunk = jobs.len().div_ceil(spec.threads);
    std::thread::scope(|scope| {
        for (job_chunk, slot_chunk) in jobs.chunks(chunk).zip(slots.chunks_mut(chunk)) {
            let run_job = &run_job;
            scope.spawn(move || {
                for (job, slot) in job_chunk.iter().zip(slot_chunk.iter_mut()) {
                    *slot = Some(run_job(job));
                }
            });
        }
    });
    Ok(slots.into_iter().map(|r| r.expect("every job ran")).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSummary {
    pub solver: SolverKind,
    pub runs: usize,
    pub converged: usize,
    pub mean_time: Duration,
    pub mean_iterations: f64,
}

/// Per-solver means over the successful records, in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<SolverSummary> {
    let mut order: Vec<SolverKind> = Vec::new();
    for r in records {
        if !order.contains(&r.solver) {
            order.push(r.solver);
        }
    }
    order
        .into_iter()
        .map(|solver| {
            let ok: Vec<_> = records.iter().filter(|r| r.solver == solver && r.error.is_none()).collect();
            let runs = ok.len();
            let denom = runs.max(1) as f64;
            SolverSummary {
                solver,
                runs,
                converged: ok.iter().filter(|r| r.converged).count(),
                mean_time: Duration::from_secs_f64(ok.iter().map(|r| r.time_s).sum::<f64>() / denom),
                mean_iterations: ok.iter().map(|r| r.iterations as f64).sum::<f64>() / denom,
            }
        })
        .collect()
}
