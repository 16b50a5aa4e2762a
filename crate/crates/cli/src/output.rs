//! Model loading, state references and result writing.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rg_core::io::{format_sig17, model_from_json, records_from_json};
use rg_core::model::{validate_model, EigenstateRecord, ModelParams};
use serde_json::value::RawValue;

use crate::args::Common;
use crate::exit::{CliError, CliResult, IO, VALIDATION};

pub const DEFAULT_MODEL: &str = include_str!("default_model.json");

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Loads and validates the model named by `--model`, or the built-in one.
pub fn load_model(common: &Common) -> CliResult<ModelParams> {
    let model = match &common.model {
        Some(path) => model_from_json(&read_text(path)?).map_err(|e| CliError::io(path, e))?,
        None => model_from_json(DEFAULT_MODEL)?,
    };
    let report = validate_model(&model);
    if !report.is_valid() {
        return Err(CliError::new(
            VALIDATION,
            format!("invalid model: {}", report.messages().join("; ")),
        ));
    }
    Ok(model)
}

/// A `FILE#INDEX` reference into a state document.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRef {
    pub path: PathBuf,
    pub index: usize,
}

impl StateRef {
    pub fn parse(text: &str) -> CliResult<Self> {
        let (path, index) = text.rsplit_once('#').ok_or_else(|| {
            CliError::new(IO, format!("state reference {text:?} is not FILE#INDEX"))
        })?;
        let index = index
            .parse()
            .map_err(|_| CliError::new(IO, format!("bad index in state reference {text:?}")))?;
        Ok(StateRef {
            path: PathBuf::from(path),
            index,
        })
    }

    pub fn label(&self) -> String {
        format!("{}#{}", self.path.display(), self.index)
    }

    pub fn load(&self, l: usize) -> CliResult<EigenstateRecord> {
        let records =
            records_from_json(&read_text(&self.path)?).map_err(|e| CliError::io(&self.path, e))?;
        let count = records.len();
        let record = records.into_iter().nth(self.index).ok_or_else(|| {
            CliError::new(
                IO,
                format!(
                    "{}: index {} out of range ({count} records)",
                    self.path.display(),
                    self.index
                ),
            )
        })?;
        if record.lambdas.len() != l {
            return Err(CliError::new(
                VALIDATION,
                format!(
                    "{}: record has {} levels, model has {l}",
                    self.label(),
                    record.lambdas.len()
                ),
            ));
        }
        Ok(record)
    }
}

/// Parses `RE` or `RE:IM` items separated by commas.
pub fn parse_complex_list(text: &str) -> CliResult<Vec<Complex64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let bad = || CliError::new(VALIDATION, format!("cannot parse {item:?} as RE or RE:IM"));
            let (re, im) = match item.split_once(':') {
                Some((re, im)) => (
                    re.trim().parse().map_err(|_| bad())?,
                    im.trim().parse().map_err(|_| bad())?,
                ),
                None => (item.parse().map_err(|_| bad())?, 0.0),
            };
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Writes to `--out`, or to standard output.
pub fn emit(common: &Common, text: &str) -> CliResult<()> {
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A float with 17 significant digits, or an empty field when not finite.
pub fn sig(x: f64) -> String {
    format_sig17(x).unwrap_or_default()
}

/// A float as a raw JSON number with 17 significant digits, `null` when not finite.
pub fn json_num(x: f64) -> Box<RawValue> {
    RawValue::from_string(format_sig17(x).unwrap_or_else(|_| "null".into()))
        .expect("formatted float is valid JSON")
}

pub fn json_text<T: serde::Serialize>(value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(IO, e))?;
    text.push('\n');
    Ok(text)
}

pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::new(IO, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::new(IO, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::new(IO, e))?;
    String::from_utf8(bytes).map_err(|e| CliError::new(IO, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_refs() {
        assert_eq!(
            StateRef::parse("a/b.json#3").unwrap(),
            StateRef {
                path: "a/b.json".into(),
                index: 3
            }
        );
        assert!(StateRef::parse("a.json").is_err());
        assert!(StateRef::parse("a.json#x").is_err());
    }

    #[test]
    fn complex_lists() {
        let v = parse_complex_list("0.5, 1.2:-0.3,-2").unwrap();
        assert_eq!(
            v,
            vec![
                Complex64::new(0.5, 0.0),
                Complex64::new(1.2, -0.3),
                Complex64::new(-2.0, 0.0)
            ]
        );
        assert!(parse_complex_list("").unwrap().is_empty());
        assert_eq!(parse_complex_list("1:x").unwrap_err().code, VALIDATION);
    }

    #[test]
    fn default_model_is_valid() {
        assert!(validate_model(&model_from_json(DEFAULT_MODEL).unwrap()).is_valid());
    }
}
