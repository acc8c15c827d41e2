//! `key=value` config files, spliced into the argument list so command-line flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const SUBCOMMANDS: [&str; 3] = ["generate", "analyze", "solve"];

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            bail!("{origin}:{}: expected key=value, got '{t}'", idx + 1);
        };
        let k = k.trim();
        if k.is_empty() {
            bail!("{origin}:{}: empty key", idx + 1);
        }
        out.push((k.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_pairs(&text, &path.display().to_string())
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Inserts `--key value` pairs from the config file right after the subcommand name.
/// Clap keeps the last occurrence of a flag, so explicit flags override the file.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let pairs = read_pairs(Path::new(&path))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (k, v) in pairs {
        if k == "config" {
            bail!("config files cannot include other config files");
        }
        match v.as_str() {
            "true" => injected.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                injected.push(format!("--{k}").into());
                injected.push(v.into());
            }
        }
    }
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map_or(args.len(), |p| p + 1);
    let mut out = args[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_skip_comments_and_normalise_keys() {
        let p = parse_pairs("# c\n\nmax_iters = 5\nloss=sl\n", "t").unwrap();
        assert_eq!(
            p,
            vec![
                ("max-iters".into(), "5".into()),
                ("loss".into(), "sl".into())
            ]
        );
        assert!(parse_pairs("novalue\n", "t").is_err());
    }

    #[test]
    fn config_values_precede_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "tau=3\nthreaded=true\nquiet=false\n").unwrap();
        let args: Vec<OsString> = [
            "hydra",
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--tau",
            "5",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let out: Vec<String> = expand_args(args)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(&out[..5], &["hydra", "solve", "--tau", "3", "--threaded"]);
        assert_eq!(out.last().unwrap(), "5");
    }
}
