use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use hydra_core::generator::{gen_lasso_certified, GeneratorSpec};
use hydra_core::matrix::{write_matrix_market, write_partition, write_vector};
use hydra_core::scalar::format_number;
use hydra_core::Partition;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of nodes / diagonal blocks.
    #[arg(long, default_value_t = 4)]
    pub c: usize,
    /// Columns per block.
    #[arg(long, default_value_t = 64)]
    pub s: usize,
    /// Rows per local block [default: s + s/4 + 1].
    #[arg(long)]
    pub local_rows: Option<usize>,
    /// Rows of the coupling band [default: max(s/2, 1)].
    #[arg(long)]
    pub global_rows: Option<usize>,
    /// Nonzeros per local row [default: min(s, 8)].
    #[arg(long)]
    pub nnz_local: Option<usize>,
    /// Nonzeros per coupling row [default: min(c s, 16)].
    #[arg(long)]
    pub nnz_global: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Nonzeros of the optimum [default: max(1, c s / 10)].
    #[arg(long)]
    pub support: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenerateArgs {
    fn spec(&self) -> GeneratorSpec {
        let d = self.c * self.s;
        GeneratorSpec {
            c: self.c,
            local_rows: self.local_rows.unwrap_or(self.s + self.s / 4 + 1),
            global_rows: self.global_rows.unwrap_or((self.s / 2).max(1)),
            s: self.s,
            nnz_local: self.nnz_local.unwrap_or(self.s.min(8)),
            nnz_global: self.nnz_global.unwrap_or(d.min(16)),
            lambda: self.lambda,
            support: self.support.unwrap_or((d / 10).max(1)),
            seed: self.seed,
        }
    }
}

pub fn run(args: &GenerateArgs) -> Result<()> {
    let spec = args.spec();
    let inst = gen_lasso_certified(&spec)?;
    let report = inst.certificate()?;
    if !report.passes() {
        bail!("generated instance failed its certificate: {report:?}");
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let dir = &args.out;
    write_matrix_market(dir.join("A.mtx"), &inst.a)?;
    write_vector(dir.join("y.txt"), &inst.y)?;
    write_vector(dir.join("xstar.txt"), &inst.x_star)?;
    write_partition(
        dir.join("partition.txt"),
        &Partition::contiguous(spec.dim(), spec.c)?,
    )?;

    let mut m = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(m, "{k}={v}").unwrap();
    kv("seed", &inst.seed);
    kv("attempt", &inst.attempt);
    kv("c", &spec.c);
    kv("s", &spec.s);
    kv("d", &spec.dim());
    kv("n", &spec.n_rows());
    kv("local_rows", &spec.local_rows);
    kv("global_rows", &spec.global_rows);
    kv("nnz_local", &spec.nnz_local);
    kv("nnz_global", &spec.nnz_global);
    kv("nnz", &inst.a.nnz());
    kv("support", &spec.support);
    kv("loss", &"sl");
    kv("reg", &"l1");
    kv("lambda", &format_number(inst.lambda));
    kv("optimal_value", &format_number(inst.optimal_value));
    kv(
        "max_dual_violation",
        &format_number(report.max_dual_violation),
    );
    kv(
        "max_support_error",
        &format_number(report.max_support_error),
    );
    kv(
        "objective_rel_error",
        &format_number(report.objective_rel_error),
    );
    kv("matrix", &"A.mtx");
    kv("labels", &"y.txt");
    kv("xstar", &"xstar.txt");
    kv("partition", &"partition.txt");
    let path = dir.join(MANIFEST);
    fs::write(&path, m).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {} (d={}, n={}, nnz={}, seed={}, optimal_value={})",
        dir.display(),
        spec.dim(),
        spec.n_rows(),
        inst.a.nnz(),
        inst.seed,
        inst.optimal_value
    );
    Ok(())
}
