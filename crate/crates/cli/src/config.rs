//! `--config FILE` support: a TOML file whose tables mirror the subcommands
//! (`[genflows]`, `[eval.retrieval]`, ...). Keys become flags and are only
//! added when the command line does not already set them.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Split off `--config FILE` / `--config=FILE` from argv.
pub fn take_config_flag(args: &mut Vec<OsString>) -> Result<Option<OsString>> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file");
            }
            let v = args.remove(i + 1);
            args.remove(i);
            return Ok(Some(v));
        }
        if let Some(v) = a.strip_prefix("--config=") {
            args.remove(i);
            return Ok(Some(v.into()));
        }
        i += 1;
    }
    Ok(None)
}

fn scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(n) => n.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => bail!("unsupported config value {other}"),
    })
}

fn has_flag(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&format!("{flag}="))
    })
}

/// Leading positional words of argv: the subcommand path.
fn command_path(args: &[OsString]) -> Vec<String> {
    args.iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .take_while(|a| !a.starts_with('-'))
        .collect()
}

pub fn inject(args: &mut Vec<OsString>, table: &toml::Table) -> Result<()> {
    let path = command_path(args);
    let mut node = table;
    for word in &path {
        match node.get(word) {
            Some(toml::Value::Table(t)) => node = t,
            _ => return Ok(()),
        }
    }
    let mut extra = Vec::new();
    for (key, value) in node {
        if matches!(value, toml::Value::Table(_)) {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if has_flag(args, &flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone().into());
                    extra.push(scalar(item)?.into());
                }
            }
            v => {
                extra.push(flag.into());
                extra.push(scalar(v)?.into());
            }
        }
    }
    args.extend(extra);
    Ok(())
}

pub fn load(path: &Path) -> Result<toml::Table> {
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    raw.parse::<toml::Table>().with_context(|| format!("parsing config {}", path.display()))
}
