//! `key=value` config files, merged into argv so explicit flags win.

use std::path::Path;

use anyhow::{Context, Result};
use clap::{ArgAction, Command};

use crate::UsageError;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(UsageError(format!("config line {}: expected key=value", n + 1)).into());
        };
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

/// Inserts config entries as flags right after the subcommand named by
/// `path`, so that any flag on the command line overrides them.
pub fn merge(cmd: &Command, argv: &[String], path: &[String], entries: &[(String, String)]) -> Result<Vec<String>> {
    let mut leaf = cmd.clone();
    leaf.build();
    let root_args: Vec<clap::Arg> = leaf.get_arguments().cloned().collect();
    for name in path {
        leaf = leaf
            .find_subcommand(name)
            .cloned()
            .ok_or_else(|| UsageError(format!("unknown subcommand {name}")))?;
    }
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = leaf
            .get_arguments()
            .chain(root_args.iter())
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| UsageError(format!("unknown config key {key:?}")))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                other => return Err(UsageError(format!("config key {key}: expected true or false, got {other:?}")).into()),
            },
            _ => injected.push(format!("--{key}={value}")),
        }
    }

    // Position just after the last subcommand token.
    let mut at = 1;
    for name in path {
        at += argv[at..]
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| UsageError(format!("subcommand {name} not found in arguments")))?;
        at += 1;
    }
    let mut merged = argv[..at].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&argv[at..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let got = parse("# header\ntau_min = 0.02\n\ndelta=0.3 # inline\n").unwrap();
        assert_eq!(got, vec![("tau-min".into(), "0.02".into()), ("delta".into(), "0.3".into())]);
        assert!(parse("nonsense\n").is_err());
    }
}
