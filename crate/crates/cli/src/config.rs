//! `key = value` config files. Each key names a long flag of the subcommand;
//! entries are spliced in ahead of the real flags so that the command line
//! wins over the file, and the file wins over built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", idx + 1))?;
        let key = key.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key {key:?}", idx + 1));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Finds `--config PATH` or `--config=PATH`.
fn config_path(args: &[OsString]) -> Result<Option<OsString>, String> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            return iter
                .next()
                .cloned()
                .map(Some)
                .ok_or_else(|| "--config requires a path".to_string());
        }
        if let Some(path) = text.strip_prefix("--config=") {
            return Ok(Some(path.into()));
        }
    }
    Ok(None)
}

/// `argv` with the config file's entries inserted right after the subcommand.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    if argv.len() < 2 {
        return Ok(argv);
    }
    let Some(path) = config_path(&argv[2..])? else {
        return Ok(argv);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let mut merged: Vec<OsString> = argv[..2].to_vec();
    for (key, value) in parse_config(&text)? {
        merged.push(format!("--{key}").into());
        merged.push(value.into());
    }
    merged.extend(argv[2..].iter().cloned());
    Ok(merged)
}
