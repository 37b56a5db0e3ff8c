//! `key=value` config files. Keys are long flag names; each line is turned
//! into flags placed before the command-line arguments, so flags win.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, Parser};

use crate::{Cli, Failure};

fn known_keys() -> BTreeSet<String> {
    Cli::command()
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|k| k != "config" && k != "help" && k != "version")
        .collect()
}

/// Flags equivalent to the config file at `path`.
pub fn config_flags(path: &Path) -> Result<Vec<OsString>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let keys = known_keys();
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        let key = key.trim().replace('_', "-");
        if !keys.contains(&key) {
            return Err(Failure::usage(format!("{}:{}: unknown key '{key}'", path.display(), i + 1)));
        }
        flags.push(OsString::from(format!("--{key}")));
        flags.push(OsString::from(value.trim()));
    }
    Ok(flags)
}

fn parse(args: &[OsString]) -> Result<Cli, Failure> {
    Cli::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { 2 } else { 0 };
        if code == 0 {
            // --help and --version
            let _ = e.print();
            std::process::exit(0);
        }
        Failure {
            code,
            message: e.render().to_string().trim_start_matches("error: ").trim_end().to_string(),
        }
    })
}

/// Parses `args`, then reparses with the config file's flags ahead of the
/// user's own.
pub fn parse_with_config(args: Vec<OsString>) -> Result<Cli, Failure> {
    let first = parse(&args)?;
    let Some(path) = first.opts.config.clone() else {
        return Ok(first);
    };
    let name = first.command.name();
    let mut merged: Vec<OsString> = vec![args[0].clone(), OsString::from(name)];
    merged.extend(config_flags(&path)?);
    let mut skipped = false;
    for a in &args[1..] {
        if !skipped && a == name {
            skipped = true;
            continue;
        }
        merged.push(a.clone());
    }
    parse(&merged)
}
