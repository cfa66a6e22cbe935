//! `--config file.json`: keys become flags placed ahead of the command
//! line ones, so explicit flags override them.

use std::ffi::OsString;
use std::fs;

use serde_json::Value;

use crate::CliError;

/// Splits `--config PATH` / `--config=PATH` out of `args`.
fn take_config(args: &mut Vec<OsString>) -> Result<Option<OsString>, CliError> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Validation("--config needs a path".into()));
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            found = Some(OsString::from(path));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

fn scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Object(_) => Ok(v.to_string()),
        _ => Err(CliError::Validation(format!(
            "config key `{key}`: unsupported value {v}"
        ))),
    }
}

/// Flags for one config entry. `true` for a bare switch becomes the switch
/// alone and `false` drops it.
fn flags_for(key: &str, v: &Value, switches: &[&str]) -> Result<Vec<OsString>, CliError> {
    let flag = format!("--{}", key.replace('_', "-"));
    let name = &flag[2..];
    if switches.contains(&name) {
        return match v {
            Value::Bool(true) => Ok(vec![flag.into()]),
            Value::Bool(false) => Ok(vec![]),
            _ => Err(CliError::Validation(format!(
                "config key `{key}` must be true or false"
            ))),
        };
    }
    let value = match v {
        Value::Array(items) => {
            if key.replace('_', "-") == "p-table" {
                items
                    .iter()
                    .map(|pt| match pt.as_array().map(Vec::as_slice) {
                        Some([w, p]) => Ok(format!("{}:{}", scalar(key, w)?, scalar(key, p)?)),
                        _ => Err(CliError::Validation(format!(
                            "config key `{key}`: knots are [w, p] pairs"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",")
            } else {
                items
                    .iter()
                    .map(|x| scalar(key, x))
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",")
            }
        }
        other => scalar(key, other)?,
    };
    Ok(vec![flag.into(), value.into()])
}

/// Returns `args` with any config file expanded in place of `--config`.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = take_config(&mut args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::Validation(format!(
            "config: cannot read {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config: {}: {e}", path.to_string_lossy())))?;
    let Value::Object(map) = json else {
        return Err(CliError::Validation(
            "config: top level must be an object".into(),
        ));
    };
    let mut injected = Vec::new();
    for (key, v) in &map {
        injected.extend(flags_for(key, v, &["mc"])?);
    }
    // Right after the subcommand name.
    let at = args.len().min(2);
    args.splice(at..at, injected);
    Ok(args)
}
