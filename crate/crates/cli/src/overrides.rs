//! Dotted-path config overrides applied on the parsed TOML document before
//! deserialization, so `--override train.total_steps=4096` edits exactly
//! one field.

use crate::CliError;
use gridfetch_core::ExperimentConfig;
use std::path::Path;

/// Reads, overrides, parses and validates an experiment config.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| CliError::Usage(format!("config {} is not valid TOML: {e}", path.display())))?;
    for entry in overrides {
        apply_override(&mut value, entry)?;
    }
    let config: ExperimentConfig = value
        .try_into()
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), CliError> {
    let Some((path, raw)) = entry.split_once('=') else {
        return Err(CliError::Usage(format!(
            "override {entry:?} is not of the form path=value"
        )));
    };
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Usage(format!("override path {path:?} is malformed")));
    }
    let mut node = root;
    for segment in &segments[..segments.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("override path {path:?} crosses a non-table")))?
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| CliError::Usage(format!("override path {path:?} crosses a non-table")))?;
    table.insert(segments[segments.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

/// Interprets the value with TOML literal syntax, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    let trimmed = raw.trim();
    if let Ok(v) = trimmed.parse::<i64>() {
        return toml::Value::Integer(v);
    }
    if let Ok(v) = trimmed.parse::<f64>() {
        return toml::Value::Float(v);
    }
    if let Ok(v) = trimmed.parse::<bool>() {
        return toml::Value::Boolean(v);
    }
    if trimmed.starts_with('[') {
        if let Ok(toml::Value::Table(t)) = format!("v = {trimmed}").parse::<toml::Value>() {
            if let Some(v) = t.get("v") {
                return v.clone();
            }
        }
    }
    toml::Value::String(trimmed.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_edits_nested_field() {
        let mut value: toml::Value = "mode = \"enhanced\"\n[train]\ntotal_steps = 100\n"
            .parse()
            .unwrap();
        apply_override(&mut value, "train.total_steps=4096").unwrap();
        assert_eq!(
            value["train"]["total_steps"],
            toml::Value::Integer(4096)
        );
    }

    #[test]
    fn override_parses_floats_bools_and_lists() {
        let mut value: toml::Value = "x = 1\n".parse().unwrap();
        apply_override(&mut value, "perception.p_detect=0.5").unwrap();
        apply_override(&mut value, "train.normalize_advantages=false").unwrap();
        apply_override(&mut value, "seeds=[1,2,3]").unwrap();
        assert_eq!(value["perception"]["p_detect"], toml::Value::Float(0.5));
        assert_eq!(
            value["train"]["normalize_advantages"],
            toml::Value::Boolean(false)
        );
        assert_eq!(value["seeds"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn malformed_override_is_a_usage_error() {
        let mut value: toml::Value = "x = 1\n".parse().unwrap();
        assert!(apply_override(&mut value, "no-equals-sign").is_err());
        assert!(apply_override(&mut value, "a..b=1").is_err());
    }
}
