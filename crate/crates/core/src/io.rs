//! JSON documents for models and solved states.
//!
//! Model: `{"kind": "rational"|"hyperbolic", "g": …, "epsilon": […]}`.
//! States: an array of `{"n", "lambda", "rapidities"?, "seed_occupation", "residual", "converged"?}`
//! with rapidities as `[re, im]` pairs. Every float is written with 17 significant
//! digits, so documents round-trip bit for bit.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::model::{
    EigenstateRecord, LambdaSet, ModelKind, ModelParams, OccupationState, SpectralSet,
};

/// `x` with 17 significant digits in scientific notation; fails on non-finite values.
pub fn format_sig17(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Precondition(format!(
            "cannot write non-finite value {x}"
        )));
    }
    Ok(format!("{x:.16e}"))
}

fn raw(x: f64) -> std::result::Result<Box<RawValue>, String> {
    let text = format_sig17(x).map_err(|e| e.to_string())?;
    RawValue::from_string(text).map_err(|e| e.to_string())
}

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    raw(*x).map_err(serde::ser::Error::custom)?.serialize(s)
}

fn sig17_seq<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let items = xs
        .iter()
        .map(|&x| raw(x))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(serde::ser::Error::custom)?;
    items.serialize(s)
}

fn sig17_pairs<S: Serializer>(
    xs: &Option<Vec<[f64; 2]>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let pairs = xs.as_ref().expect("skipped when absent");
    let items = pairs
        .iter()
        .map(|[re, im]| Ok([raw(*re)?, raw(*im)?]))
        .collect::<std::result::Result<Vec<_>, String>>()
        .map_err(serde::ser::Error::custom)?;
    items.serialize(s)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    kind: ModelKind,
    #[serde(serialize_with = "sig17")]
    g: f64,
    #[serde(serialize_with = "sig17_seq")]
    epsilon: Vec<f64>,
}

fn converged_default() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    n: usize,
    #[serde(serialize_with = "sig17_seq")]
    lambda: Vec<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "sig17_pairs"
    )]
    rapidities: Option<Vec<[f64; 2]>>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "sig17_pairs"
    )]
    dual_rapidities: Option<Vec<[f64; 2]>>,
    seed_occupation: String,
    #[serde(serialize_with = "sig17")]
    residual: f64,
    #[serde(default = "converged_default")]
    converged: bool,
}

fn parse_error(err: serde_json::Error) -> Error {
    Error::Parse {
        location: format!("line {} column {}", err.line(), err.column()),
        message: err.to_string(),
    }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(parse_error)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Precondition(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn model_to_json(model: &ModelParams) -> Result<String> {
    to_json(&ModelDoc {
        kind: model.kind,
        g: model.g,
        epsilon: model.epsilons.clone(),
    })
}

/// Parses a model document. The result is not validated; see [`crate::model::validate_model`].
pub fn model_from_json(text: &str) -> Result<ModelParams> {
    let doc: ModelDoc = from_json(text)?;
    Ok(ModelParams::new(doc.kind, doc.g, doc.epsilon))
}

fn pairs(set: &SpectralSet) -> Vec<[f64; 2]> {
    set.values.iter().map(|z| [z.re, z.im]).collect()
}

fn record_doc(r: &EigenstateRecord, dual: Option<&SpectralSet>) -> RecordDoc {
    RecordDoc {
        n: r.n,
        lambda: r.lambdas.lambdas.clone(),
        rapidities: r.rapidities.as_ref().map(pairs),
        dual_rapidities: dual.map(pairs),
        seed_occupation: r.seed_occupation.to_bitstring(r.lambdas.len()),
        residual: r.residual_norm,
        converged: r.converged,
    }
}

pub fn records_to_json(records: &[EigenstateRecord]) -> Result<String> {
    to_json(
        &records
            .iter()
            .map(|r| record_doc(r, None))
            .collect::<Vec<_>>(),
    )
}

/// As [`records_to_json`], with each record's dual rapidities in a `dual_rapidities` field.
pub fn records_with_duals_to_json(
    records: &[EigenstateRecord],
    duals: &[SpectralSet],
) -> Result<String> {
    if records.len() != duals.len() {
        return Err(Error::Precondition(format!(
            "{} records but {} dual sets",
            records.len(),
            duals.len()
        )));
    }
    to_json(
        &records
            .iter()
            .zip(duals)
            .map(|(r, d)| record_doc(r, Some(d)))
            .collect::<Vec<_>>(),
    )
}

fn record_from_doc(k: usize, doc: RecordDoc) -> Result<EigenstateRecord> {
    let field_error = |field: &str, message: String| Error::Parse {
        location: format!("record {k}, field {field}"),
        message,
    };
    let l = doc.lambda.len();
    if doc.seed_occupation.len() != l {
        return Err(field_error(
            "seed_occupation",
            format!("{} bits for {l} levels", doc.seed_occupation.len()),
        ));
    }
    let seed = OccupationState::from_bitstring(&doc.seed_occupation)
        .map_err(|e| field_error("seed_occupation", e.to_string()))?;
    if seed.len() != doc.n {
        return Err(field_error(
            "seed_occupation",
            format!("{} bits set but n = {}", seed.len(), doc.n),
        ));
    }
    if doc.n > l {
        return Err(field_error("n", format!("n = {} exceeds L = {l}", doc.n)));
    }
    let rapidities = match doc.rapidities {
        Some(pairs) if pairs.len() != doc.n => {
            return Err(field_error(
                "rapidities",
                format!("{} rapidities but n = {}", pairs.len(), doc.n),
            ));
        }
        Some(pairs) => Some(SpectralSet::on_shell(
            pairs
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )),
        None => None,
    };
    Ok(EigenstateRecord {
        n: doc.n,
        lambdas: LambdaSet::new(doc.lambda, doc.n),
        rapidities,
        seed_occupation: seed,
        residual_norm: doc.residual,
        converged: doc.converged,
    })
}

pub fn records_from_json(text: &str) -> Result<Vec<EigenstateRecord>> {
    let docs: Vec<RecordDoc> = from_json(text)?;
    docs.into_iter()
        .enumerate()
        .map(|(k, d)| record_from_doc(k, d))
        .collect()
}
