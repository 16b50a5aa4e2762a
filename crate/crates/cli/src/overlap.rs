//! `rg overlap`: one inner product by one or every method.

use num_complex::Complex64;
use rg_core::model::{EigenstateRecord, ModelParams, OccupationState, SpectralSet};
use rg_core::overlap::{
    max_pairwise_deviation, oracle_norm, overlap, overlap_scale, Ket, Method, OverlapRequest,
};
use rg_core::solvers::attach_rapidities;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::args::{Common, Format, MethodChoice, OverlapArgs};
use crate::exit::{CliError, CliResult, VALIDATION};
use crate::output::{
    csv_text, emit, json_num, json_text, load_model, parse_complex_list, sig, StateRef,
};

#[derive(Serialize)]
struct Row {
    bra_id: String,
    ket_id: String,
    method: &'static str,
    value_re: Box<RawValue>,
    value_im: Box<RawValue>,
    rcond: Box<RawValue>,
}

#[derive(Serialize)]
struct Report {
    results: Vec<Row>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_deviation: Option<Box<RawValue>>,
}

fn methods(choice: MethodChoice) -> Vec<Method> {
    match choice {
        MethodChoice::All => Method::ALL.to_vec(),
        MethodChoice::Slavnov => vec![Method::Slavnov],
        MethodChoice::Detj => vec![Method::DetJ],
        MethodChoice::Detk => vec![Method::DetK],
        MethodChoice::Oracle => vec![Method::Oracle],
    }
}

fn load_state(model: &ModelParams, reference: &StateRef) -> CliResult<EigenstateRecord> {
    let mut record = reference.load(model.len())?;
    attach_rapidities(model, &mut record)?;
    Ok(record)
}

fn ket(model: &ModelParams, args: &OverlapArgs) -> CliResult<(String, Ket)> {
    if let Some(text) = &args.ket {
        let reference = StateRef::parse(text)?;
        let record = load_state(model, &reference)?;
        return Ok((
            reference.label(),
            Ket::Rapidities(record.rapidities()?.clone()),
        ));
    }
    if let Some(text) = &args.ket_rapidities {
        return Ok((
            format!("rapidities:{text}"),
            Ket::Rapidities(SpectralSet::off_shell(parse_complex_list(text)?)),
        ));
    }
    if let Some(bits) = &args.ket_occ {
        if bits.len() != model.len() {
            return Err(CliError::new(
                VALIDATION,
                format!(
                    "--ket-occ has {} bits for {} levels",
                    bits.len(),
                    model.len()
                ),
            ));
        }
        let occ =
            OccupationState::from_bitstring(bits).map_err(|e| CliError::new(VALIDATION, e))?;
        return Ok((format!("occ:{bits}"), Ket::Occupation(occ)));
    }
    Err(CliError::new(
        VALIDATION,
        "one of --ket, --ket-rapidities or --ket-occ is required",
    ))
}

fn ket_norm(model: &ModelParams, ket: &Ket) -> CliResult<f64> {
    Ok(match ket {
        Ket::Rapidities(w) => oracle_norm(model, w)?,
        _ => 1.0,
    })
}

pub fn run(common: &Common, args: &OverlapArgs) -> CliResult<()> {
    let model = load_model(common)?;
    let bra_ref = StateRef::parse(&args.bra)?;
    let bra = load_state(&model, &bra_ref)?;
    let (ket_id, ket) = ket(&model, args)?;

    let mut values: Vec<(Method, Complex64, f64)> = Vec::new();
    for method in methods(args.method) {
        let request = OverlapRequest {
            model: &model,
            bra: &bra,
            ket: ket.clone(),
            method,
        };
        let result = overlap(&request)?;
        values.push((method, result.value, result.condition_estimate));
    }

    let max_deviation = if args.method == MethodChoice::All {
        let reference = values
            .iter()
            .find(|(m, _, _)| *m == Method::Oracle)
            .map_or(values[0].1, |v| v.1);
        let scale = overlap_scale(
            reference,
            oracle_norm(&model, bra.rapidities()?)?,
            ket_norm(&model, &ket)?,
        );
        let zs: Vec<Complex64> = values.iter().map(|v| v.1).collect();
        Some(max_pairwise_deviation(&zs, scale.max(f64::MIN_POSITIVE)))
    } else {
        None
    };

    let bra_id = bra_ref.label();
    let text = match common.format {
        Format::Json => json_text(&Report {
            results: values
                .iter()
                .map(|&(method, z, rc)| Row {
                    bra_id: bra_id.clone(),
                    ket_id: ket_id.clone(),
                    method: method.name(),
                    value_re: json_num(z.re),
                    value_im: json_num(z.im),
                    rcond: json_num(rc),
                })
                .collect(),
            max_deviation: max_deviation.map(json_num),
        })?,
        Format::Csv => {
            let header: Vec<String> = [
                "bra_id",
                "ket_id",
                "method",
                "value_re",
                "value_im",
                "rcond",
                "max_deviation",
            ]
            .map(String::from)
            .to_vec();
            let rows: Vec<Vec<String>> = values
                .iter()
                .map(|&(method, z, rc)| {
                    vec![
                        bra_id.clone(),
                        ket_id.clone(),
                        method.name().to_string(),
                        sig(z.re),
                        sig(z.im),
                        sig(rc),
                        max_deviation.map(sig).unwrap_or_default(),
                    ]
                })
                .collect();
            csv_text(&header, &rows)?
        }
    };
    emit(common, &text)
}
