use crate::error::{Error, Result};

/// Turns a flat `key = value` file into `--key value` arguments.
///
/// Blank lines and lines starting with `#` are skipped. Keys use the flag
/// spelling without dashes (`m-list`, `eps-abs`; underscores also accepted).
pub fn parse_config(text: &str) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Malformed(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(Error::Malformed(format!("config line {}: bad key", lineno + 1)));
        }
        args.push(format!("--{key}"));
        args.push(value.trim().to_string());
    }
    Ok(args)
}
