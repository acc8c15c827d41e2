use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hydra_core::eso::{beta_star, PowerIterOptions, SigmaMode, SigmaPrimeMode, DENSE_ORACLE_LIMIT};
use hydra_core::matrix::{read_matrix_market, read_partition};
use hydra_core::{Partition, SparseMatrix64, StepsizeInfo64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaChoice {
    /// Power iteration on `Q`.
    Power,
    /// The bound `sigma <= omega`.
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SigmaPrimeChoice {
    /// The bound `sigma' <= omega'`.
    Bound,
    /// Dense generalized eigenvalue (small instances only).
    Exact,
    /// `beta = 2 beta1*`, no `sigma'` needed (tau >= 2).
    Skip,
}

/// Options shared by `analyze` and the automatic stepsize of `solve`.
#[derive(Debug, Clone, Args)]
pub struct SigmaOptions {
    #[arg(long, value_enum, default_value_t = SigmaChoice::Power)]
    pub sigma: SigmaChoice,
    /// Relative stopping tolerance of the power iteration.
    #[arg(long, default_value_t = 1e-6)]
    pub sigma_tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub sigma_max_iter: usize,
    /// Seed of the power-iteration start vector.
    #[arg(long, default_value_t = 0)]
    pub sigma_seed: u64,
}

impl SigmaOptions {
    pub fn mode(&self) -> SigmaMode {
        match self.sigma {
            SigmaChoice::Omega => SigmaMode::OmegaBound,
            SigmaChoice::Power => SigmaMode::PowerIteration(PowerIterOptions {
                tol: self.sigma_tol,
                max_iter: self.sigma_max_iter,
                seed: self.sigma_seed,
            }),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Matrix Market file.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Number of nodes for a contiguous partition.
    #[arg(long)]
    pub c: Option<usize>,
    /// One node id per coordinate; overrides the contiguous partition.
    #[arg(long)]
    pub partition_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub tau: usize,
    #[command(flatten)]
    pub sigma: SigmaOptions,
    #[arg(long, value_enum, default_value_t = SigmaPrimeChoice::Bound)]
    pub sigma_prime: SigmaPrimeChoice,
    /// Largest `d` for the dense `sigma'` computation.
    #[arg(long, default_value_t = DENSE_ORACLE_LIMIT)]
    pub dense_limit: usize,
    /// Write the key=value report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the report as a one-row CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write `d beta1*/(c tau)` and `d 2 beta1*/(c tau)` against sigma for the grids below.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Dimension for the curve [default: columns of --matrix].
    #[arg(long)]
    pub curve_d: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub curve_c: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub curve_tau: Vec<usize>,
    /// Sigma grid [default: 25 geometric points in [1, d]].
    #[arg(long, value_delimiter = ',')]
    pub curve_sigma: Vec<f64>,
}

pub fn load_partition(d: usize, c: Option<usize>, file: Option<&Path>) -> Result<Partition> {
    let p = match file {
        Some(f) => read_partition(f, c)?,
        None => Partition::contiguous(d, c.unwrap_or(1))?,
    };
    if p.dim() != d {
        bail!("partition covers {} coordinates, matrix has {d}", p.dim());
    }
    Ok(p)
}

pub fn sigma_prime_mode(choice: SigmaPrimeChoice, limit: usize) -> SigmaPrimeMode {
    match choice {
        SigmaPrimeChoice::Bound => SigmaPrimeMode::OmegaPrimeBound,
        SigmaPrimeChoice::Exact => SigmaPrimeMode::Exact { limit },
        SigmaPrimeChoice::Skip => SigmaPrimeMode::SkipDoubling,
    }
}

pub fn beta_source_label(choice: SigmaPrimeChoice) -> &'static str {
    match choice {
        SigmaPrimeChoice::Skip => "double-beta1",
        _ => "auto",
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Rows of `d beta1*/(c tau)` (and its doubled version for `tau >= 2`) over the grids.
pub fn curve_csv(d: usize, cs: &[usize], taus: &[usize], sigmas: &[f64]) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# d={d}").unwrap();
    writeln!(out, "# beta_source=formula").unwrap();
    out.push_str("c,tau,s,sigma,beta1,d_beta1_over_ctau,d_2beta1_over_ctau\n");
    for &c in cs {
        if c == 0 || !d.is_multiple_of(c) {
            bail!("curve: c = {c} does not divide d = {d}");
        }
        let s = d / c;
        for &tau in taus {
            if tau == 0 || tau > s {
                writeln!(out, "# skipped c={c} tau={tau}: needs 1 <= tau <= s = {s}").unwrap();
                continue;
            }
            for &sigma in sigmas {
                if !(1.0..=d as f64).contains(&sigma) {
                    bail!("curve: sigma = {sigma} outside [1, d]");
                }
                let b1 = beta_star(tau, s, sigma, 1.0).beta1;
                let scale = d as f64 / (c * tau) as f64;
                let doubled = if tau >= 2 {
                    (scale * 2.0 * b1).to_string()
                } else {
                    String::new()
                };
                writeln!(out, "{c},{tau},{s},{sigma},{b1},{},{doubled}", scale * b1).unwrap();
            }
        }
    }
    Ok(out)
}

fn default_sigma_grid(d: usize) -> Vec<f64> {
    const POINTS: usize = 25;
    let top = (d as f64).ln();
    (0..POINTS)
        .map(|k| {
            (top * k as f64 / (POINTS - 1) as f64)
                .exp()
                .clamp(1.0, d as f64)
        })
        .collect()
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    if args.matrix.is_none() && args.curve.is_none() {
        bail!("nothing to do: pass --matrix and/or --curve");
    }
    let mut matrix_d = None;
    if let Some(path) = &args.matrix {
        let a: SparseMatrix64 = read_matrix_market(path)?;
        matrix_d = Some(a.n_cols());
        let p = load_partition(a.n_cols(), args.c, args.partition_file.as_deref())?;
        let info = StepsizeInfo64::compute(
            &a,
            &p,
            args.tau,
            args.sigma.mode(),
            sigma_prime_mode(args.sigma_prime, args.dense_limit),
        )?;
        let provenance = format!(
            "seed={}\nbeta_source={}\n",
            args.sigma.sigma_seed,
            beta_source_label(args.sigma_prime)
        );
        let report = format!(
            "d={}\nn={}\n{}{provenance}",
            a.n_cols(),
            a.n_rows(),
            info.to_report()
        );
        write_or_print(args.report.as_deref(), &report)?;
        if let Some(csv) = &args.csv {
            let text = format!(
                "# seed={}\n# beta_source={}\n{}",
                args.sigma.sigma_seed,
                beta_source_label(args.sigma_prime),
                info.to_csv()
            );
            fs::write(csv, text).with_context(|| format!("writing {}", csv.display()))?;
        }
    }
    if let Some(path) = &args.curve {
        let Some(d) = args.curve_d.or(matrix_d) else {
            bail!("--curve needs --curve-d or --matrix");
        };
        let sigmas = if args.curve_sigma.is_empty() {
            default_sigma_grid(d)
        } else {
            args.curve_sigma.clone()
        };
        let text = curve_csv(d, &args.curve_c, &args.curve_tau, &sigmas)?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rows_follow_the_closed_form() {
        let text = curve_csv(12, &[1, 3], &[1, 2], &[1.0, 4.0]).unwrap();
        let rows: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert_eq!(rows.len(), 8);
        // c = 1, tau = 2, s = 12, sigma = 4: beta1 = 1 + 3/11
        let row: Vec<&str> = rows[3].split(',').collect();
        let b1 = 1.0 + 3.0 / 11.0;
        assert_eq!(row[..4], ["1", "2", "12", "4"]);
        assert!((row[5].parse::<f64>().unwrap() - 6.0 * b1).abs() < 1e-12);
        assert!((row[6].parse::<f64>().unwrap() - 12.0 * b1).abs() < 1e-12);
        // tau = 1 has no doubled value
        assert!(rows[0].ends_with(','));
    }

    #[test]
    fn curve_rejects_bad_grids() {
        assert!(curve_csv(12, &[5], &[1], &[1.0]).is_err());
        assert!(curve_csv(12, &[3], &[5], &[1.0])
            .unwrap()
            .contains("# skipped c=3 tau=5"));
        assert!(curve_csv(12, &[3], &[1], &[13.0]).is_err());
    }

    #[test]
    fn default_grid_spans_one_to_d() {
        let g = default_sigma_grid(1000);
        assert_eq!(g.first(), Some(&1.0));
        assert!((g.last().unwrap() - 1000.0).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
