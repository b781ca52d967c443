//! `key = value` run files spliced into the argument list.
//!
//! Each key becomes `--key value` right after the subcommand name, so any
//! flag repeated on the command line overrides the file. `true` turns a
//! key into a bare switch and `false` drops it.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};

const SUBCOMMANDS: &[&str] = &["prepare", "train", "eval", "score", "export", "inspect-weights"];

/// Converts file contents into flag tokens.
pub fn parse(text: &str, origin: &Path) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", origin.display(), n + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("{}:{}: bad key {key:?}", origin.display(), n + 1);
        }
        match value.trim() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> anyhow::Result<Option<OsString>> {
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return match args.get(i + 1) {
                Some(p) => Ok(Some(p.clone())),
                None => bail!("--config needs a file"),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(p.into()));
        }
    }
    Ok(None)
}

/// Returns `args` with the contents of any `--config` file inserted after
/// the subcommand.
pub fn expand_args(mut args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let extra = parse(&text, path)?;
    let Some(pos) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    args.splice(pos + 1..pos + 1, extra.into_iter().map(OsString::from));
    Ok(args)
}
