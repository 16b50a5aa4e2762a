//! `rg solve`: every eigenstate of one sector.

use rg_core::io::{records_to_json, records_with_duals_to_json};
use rg_core::model::{EigenstateRecord, ModelParams, OccupationState};
use rg_core::solvers::{
    attach_rapidities, dual_rapidities, solve_bethe_all, solve_evb_all, solve_evb_seed,
    SolveOptions,
};

use crate::args::{Common, Format, SolveArgs, SolveMethod};
use crate::exit::{CliError, CliResult, CONVERGENCE, VALIDATION};
use crate::output::{csv_text, emit, load_model, sig};

pub fn run(common: &Common, args: &SolveArgs) -> CliResult<()> {
    let model = load_model(common)?;
    if args.n > model.len() {
        return Err(CliError::new(
            VALIDATION,
            format!("N = {} exceeds L = {}", args.n, model.len()),
        ));
    }
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(CliError::new(
            VALIDATION,
            format!("--tol must be positive, got {}", common.tol),
        ));
    }
    let opts = SolveOptions {
        newton_tol: common.tol,
        ..SolveOptions::default()
    };
    let mut records = solve(&model, args, &opts)?;

    if args.with_rapidities || args.duals {
        for r in &mut records {
            attach_rapidities(&model, r)?;
        }
    }
    let duals = if args.duals {
        Some(
            records
                .iter()
                .map(|r| dual_rapidities(&model, r))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };

    let text = match common.format {
        Format::Json => match &duals {
            Some(d) => records_with_duals_to_json(&records, d)?,
            None => records_to_json(&records)?,
        },
        Format::Csv => records_csv(&model, &records)?,
    };
    emit(common, &text)
}

fn solve(
    model: &ModelParams,
    args: &SolveArgs,
    opts: &SolveOptions,
) -> CliResult<Vec<EigenstateRecord>> {
    let outcome = match args.method {
        SolveMethod::Evb => solve_evb_all(model, args.n, opts),
        SolveMethod::Bethe => solve_bethe_all(model, args.n, opts),
    };
    let err = match outcome {
        Ok(records) => return Ok(records),
        Err(e) => CliError::from(e),
    };
    if err.code != CONVERGENCE {
        return Err(err);
    }
    let l = model.len();
    let failed: Vec<String> = OccupationState::all(l, args.n)
        .into_iter()
        .filter(|occ| !matches!(solve_evb_seed(model, occ, opts), Ok(r) if r.converged))
        .map(|occ| occ.to_bitstring(l))
        .collect();
    if failed.is_empty() {
        Err(err)
    } else {
        Err(CliError::new(
            CONVERGENCE,
            format!("{}; failed seeds: {}", err.message, failed.join(" ")),
        ))
    }
}

fn records_csv(model: &ModelParams, records: &[EigenstateRecord]) -> CliResult<String> {
    let l = model.len();
    let n = records.first().map_or(0, |r| r.n);
    let with_rapidities = records.iter().all(|r| r.rapidities.is_some()) && !records.is_empty();
    let mut header: Vec<String> = ["index", "n", "seed_occupation", "converged", "residual"]
        .map(String::from)
        .to_vec();
    header.extend((0..l).map(|i| format!("lambda_{i}")));
    if with_rapidities {
        for a in 0..n {
            header.push(format!("v{a}_re"));
            header.push(format!("v{a}_im"));
        }
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut row = vec![
                k.to_string(),
                r.n.to_string(),
                r.seed_occupation.to_bitstring(l),
                r.converged.to_string(),
                sig(r.residual_norm),
            ];
            row.extend(r.lambdas.lambdas.iter().map(|&x| sig(x)));
            if let Some(v) = r.rapidities.as_ref().filter(|_| with_rapidities) {
                for z in &v.values {
                    row.push(sig(z.re));
                    row.push(sig(z.im));
                }
            }
            row
        })
        .collect();
    csv_text(&header, &rows)
}
