use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use hydra_core::engine::{
    self, empty_trace_csv, AslIndexing, BetaSource, Execution, Protocol, RunConfig,
};
use hydra_core::matrix::{read_matrix_market, read_vector, write_vector};
use hydra_core::{
    CoordReg, KnownOptimum, LossKind, Partition, Problem64, SeparableReg64, SparseMatrix64,
    StepsizeInfo64,
};

use hydra_core::scalar::format_number;

use crate::analyze::{load_partition, sigma_prime_mode, SigmaOptions, SigmaPrimeChoice};
use crate::config::read_pairs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegChoice {
    Zero,
    L1,
    L2,
}

/// `auto`, `double-beta1` or a number `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    Auto,
    DoubleBeta1,
    Value(f64),
}

impl FromStr for BetaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(BetaChoice::Auto),
            "double-beta1" => Ok(BetaChoice::DoubleBeta1),
            _ => match s.parse::<f64>() {
                Ok(v) if v >= 1.0 && v.is_finite() => Ok(BetaChoice::Value(v)),
                Ok(v) => Err(format!("beta must be a finite number >= 1, got {v}")),
                Err(_) => Err(format!(
                    "expected auto, double-beta1 or a number, got '{s}'"
                )),
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance manifest written by `generate`; supplies paths, lambda and L*.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Matrix Market file [default: from the manifest].
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Labels / targets, one per line [default: from the manifest].
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// sl, ll or hl.
    #[arg(long, default_value = "sl")]
    pub loss: LossKind,
    #[arg(long, value_enum, default_value_t = RegChoice::L1)]
    pub reg: RegChoice,
    /// Uniform regularization weight [default: from the manifest].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-coordinate weights, one per line.
    #[arg(long, conflicts_with = "lambda")]
    pub lambda_file: Option<PathBuf>,
    /// Number of nodes for a contiguous partition.
    #[arg(long)]
    pub c: Option<usize>,
    #[arg(long)]
    pub partition_file: Option<PathBuf>,
    /// ra (reduce-all) or asl (asynchronous ring).
    #[arg(long, default_value = "ra")]
    pub protocol: Protocol,
    /// lockstep (simulated clock) or threaded (one thread per node).
    #[arg(long, default_value = "lockstep")]
    pub execution: Execution,
    /// Ring update indexing: overlapped or immediate.
    #[arg(long, default_value = "overlapped")]
    pub asl_indexing: AslIndexing,
    /// Coordinates updated per node per iteration.
    #[arg(long)]
    pub tau: usize,
    /// auto, double-beta1 or a number >= 1.
    #[arg(long, default_value = "auto")]
    pub beta: BetaChoice,
    #[command(flatten)]
    pub sigma: SigmaOptions,
    #[arg(long, default_value_t = 1000)]
    pub iters: u64,
    #[arg(long, default_value_t = 1)]
    pub eval_every: u64,
    /// Stop once L(x) - L* falls to this value (needs L*).
    #[arg(long)]
    pub target_gap: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run once per seed; traces get a `_seed<k>` suffix.
    #[arg(long, value_delimiter = ',')]
    pub seed_list: Vec<u64>,
    /// Trace CSV path.
    #[arg(long, default_value = "trace.csv")]
    pub out: PathBuf,
    /// Write the final iterate here.
    #[arg(long)]
    pub x_out: Option<PathBuf>,
}

struct Manifest {
    dir: PathBuf,
    values: HashMap<String, String>,
}

impl Manifest {
    fn read(path: &Path) -> Result<Self> {
        let values = read_pairs(path)?
            .into_iter()
            .map(|(k, v)| (k.replace('-', "_"), v))
            .collect();
        let dir = path.parent().map_or_else(PathBuf::new, Path::to_path_buf);
        Ok(Self { dir, values })
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(|v| self.dir.join(v))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .with_context(|| format!("manifest {key}='{v}' is not a number"))
            })
            .transpose()
    }
}

fn required(
    explicit: &Option<PathBuf>,
    manifest: Option<&Manifest>,
    key: &str,
    flag: &str,
) -> Result<PathBuf> {
    explicit
        .clone()
        .or_else(|| manifest.and_then(|m| m.path(key)))
        .ok_or_else(|| anyhow!("missing --{flag} (and no manifest entry '{key}')"))
}

fn regularizer(args: &SolveArgs, d: usize, manifest: Option<&Manifest>) -> Result<SeparableReg64> {
    if args.reg == RegChoice::Zero {
        return Ok(SeparableReg64::zero(d));
    }
    let wrap = |l: f64| match args.reg {
        RegChoice::L1 => CoordReg::L1(l),
        _ => CoordReg::L2(l),
    };
    if let Some(file) = &args.lambda_file {
        let ls: Vec<f64> = read_vector(file)?;
        if ls.len() != d {
            bail!(
                "{} holds {} weights, expected {d}",
                file.display(),
                ls.len()
            );
        }
        return Ok(SeparableReg64::per_coordinate(
            ls.into_iter().map(wrap).collect(),
        )?);
    }
    let lambda = match args.lambda {
        Some(l) => l,
        None => manifest
            .map(|m| m.number("lambda"))
            .transpose()?
            .flatten()
            .ok_or_else(|| anyhow!("--lambda is required for --reg {:?}", args.reg))?,
    };
    Ok(SeparableReg64::uniform(wrap(lambda), d)?)
}

fn resolve_beta(args: &SolveArgs, a: &SparseMatrix64, p: &Partition) -> Result<(f64, BetaSource)> {
    let (choice, source) = match args.beta {
        BetaChoice::Value(v) => return Ok((v, BetaSource::User)),
        BetaChoice::DoubleBeta1 => (SigmaPrimeChoice::Skip, BetaSource::DoubleBeta1),
        BetaChoice::Auto => (SigmaPrimeChoice::Bound, BetaSource::Auto),
    };
    let info = StepsizeInfo64::compute(
        a,
        p,
        args.tau,
        args.sigma.mode(),
        sigma_prime_mode(choice, 0),
    )?;
    for note in &info.notes {
        eprintln!("note: {note}");
    }
    Ok((info.beta, source))
}

fn trace_path(out: &Path, seed: u64, many: bool) -> PathBuf {
    if !many {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    let name = match out.extension() {
        Some(ext) => format!("{stem}_seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}_seed{seed}"),
    };
    out.with_file_name(name)
}

pub fn run(args: &SolveArgs) -> Result<()> {
    let manifest = args.manifest.as_deref().map(Manifest::read).transpose()?;
    let m = manifest.as_ref();
    let a: SparseMatrix64 = read_matrix_market(required(&args.matrix, m, "matrix", "matrix")?)?;
    let y: Vec<f64> = read_vector(required(&args.labels, m, "labels", "labels")?)?;
    let d = a.n_cols();
    let reg = regularizer(args, d, m)?;

    let mut problem = Problem64::new(a.clone(), y, args.loss, reg)?;
    if let Some(value) = m.map(|m| m.number("optimal_value")).transpose()?.flatten() {
        let x = m
            .and_then(|m| m.path("xstar"))
            .map(read_vector)
            .transpose()?;
        problem = problem.with_optimum(KnownOptimum { x, value })?;
    }
    let has_optimum = problem.optimal_value().is_some();
    if args.target_gap.is_some() && !has_optimum {
        bail!("--target-gap needs L* from a manifest");
    }

    let p = load_partition(d, args.c, args.partition_file.as_deref())?;
    let (beta, source) = resolve_beta(args, &a, &p)?;

    let seeds = if args.seed_list.is_empty() {
        vec![args.seed]
    } else {
        args.seed_list.clone()
    };
    let many = seeds.len() > 1;
    for seed in seeds {
        let out = trace_path(&args.out, seed, many);
        let mut cfg = RunConfig::new(args.tau, beta, source);
        cfg.protocol = args.protocol;
        cfg.execution = args.execution;
        cfg.asl_indexing = args.asl_indexing;
        cfg.max_iters = args.iters;
        cfg.eval_every = args.eval_every;
        cfg.seed = seed;
        cfg.target_gap = args.target_gap;
        cfg.validate(&p)?;

        if args.iters == 0 {
            let text = empty_trace_csv(seed, beta, source, args.protocol, has_optimum);
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "seed={seed} beta={beta} beta_source={source} iterations=0 trace={}",
                out.display()
            );
            continue;
        }

        let trace =
            engine::run(&problem, &p, &cfg).with_context(|| format!("run with seed {seed}"))?;
        trace.write_csv(&out)?;
        if let Some(x_out) = &args.x_out {
            write_vector(trace_path(x_out, seed, many), &trace.final_x)?;
        }
        let last = trace.last();
        let gap = last
            .gap
            .map_or_else(String::new, |g| format!(" gap={}", format_number(g)));
        println!(
            "seed={seed} beta={beta} beta_source={source} iterations={} loss={}{gap} msgs_sent={} stop={:?} trace={}",
            trace.iterations,
            format_number(last.loss),
            last.messages_sent,
            trace.stop,
            out.display()
        );
    }
    Ok(())
}
