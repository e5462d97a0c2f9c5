//! `key = value` config files merged into the command line.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};

/// Finds `--config PATH` (or `--config=PATH`) in `args`.
fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().map(|a| a.to_string_lossy());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(|s| s.into_owned());
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_owned());
        }
    }
    None
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", no + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", no + 1);
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

/// Appends config entries as flags, skipping any the command line already sets.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let given: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut merged = args;
    for (key, value) in parse(&text)? {
        let flag = format!("--{key}");
        if given.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value.as_str() {
            "true" => merged.push(flag.into()),
            "false" => {}
            _ => merged.push(format!("{flag}={value}").into()),
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# run\nfroude = 3\n t_end=5 # short\n\n").unwrap();
        assert_eq!(p, vec![("froude".into(), "3".into()), ("t-end".into(), "5".into())]);
        assert!(parse("froude 3").is_err());
    }
}
