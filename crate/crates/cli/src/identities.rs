//! `rg identities`: both sides of each Cauchy identity on one node set.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rg_core::cauchy::{
    borchardt_permanent, cauchy_det_closed_form, cauchy_inverse, cauchy_matrix, check_hadamard3,
    check_matrix_det_lemma, check_sylvester_mixed, CauchyPair, IdentityCheck,
};
use rg_core::linalg::{det_lu, permanent_ryser, CMatrix};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::args::{Common, Format, IdentitiesArgs};
use crate::exit::CliResult;
use crate::output::{csv_text, emit, json_num, json_text, parse_complex_list, sig};

#[derive(Serialize)]
struct Row {
    identity: &'static str,
    lhs_re: Box<RawValue>,
    lhs_im: Box<RawValue>,
    rhs_re: Box<RawValue>,
    rhs_im: Box<RawValue>,
    rel_diff: Box<RawValue>,
}

/// Random nodes in `[−(count+1), count+1]`, pairwise at least 0.05 apart and away from zero.
fn random_nodes(rng: &mut ChaCha8Rng, count: usize, taken: &[Complex64]) -> Vec<Complex64> {
    let width = 1.0 + count as f64;
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    while out.len() < count {
        let z = Complex64::new(rng.gen_range(-width..width), 0.0);
        if z.norm() >= 0.05 && taken.iter().chain(&out).all(|w| (z - w).norm() >= 0.05) {
            out.push(z);
        }
    }
    out
}

pub fn run(common: &Common, args: &IdentitiesArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let eps = match &args.eps {
        Some(text) => parse_complex_list(text)?,
        None => random_nodes(&mut rng, args.m, &[]),
    };
    let xs = match &args.xs {
        Some(text) => parse_complex_list(text)?,
        None => random_nodes(&mut rng, args.n, &eps),
    };
    let pair = CauchyPair::new(eps, xs);
    let square = pair.is_square();

    let mut checks: Vec<(&'static str, IdentityCheck)> = Vec::new();
    if square {
        let cm = cauchy_matrix(&pair)?;
        let residual = (&cm * cauchy_inverse(&pair)? - CMatrix::identity(pair.n(), pair.n()))
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        checks.push((
            "inverse",
            IdentityCheck {
                lhs: Complex64::new(1.0 + residual, 0.0),
                rhs: Complex64::new(1.0, 0.0),
            },
        ));
        checks.push((
            "closed-form-det",
            IdentityCheck {
                lhs: cauchy_det_closed_form(&pair)?,
                rhs: det_lu(&cm),
            },
        ));
        checks.push((
            "borchardt-permanent",
            IdentityCheck {
                lhs: borchardt_permanent(&pair)?,
                rhs: permanent_ryser(&cm),
            },
        ));
        checks.push(("hadamard3", check_hadamard3(&pair)?));
    }
    checks.push(("sylvester-mixed", check_sylvester_mixed(&pair)?));
    if pair.m() >= pair.n() && pair.eps.iter().chain(&pair.xs).all(|z| z.norm() > 0.0) {
        checks.push((
            "det-lemma",
            check_matrix_det_lemma(&pair, Complex64::new(args.big_g, 0.0))?,
        ));
    }

    let text = match common.format {
        Format::Json => json_text(
            &checks
                .iter()
                .map(|(name, c)| Row {
                    identity: name,
                    lhs_re: json_num(c.lhs.re),
                    lhs_im: json_num(c.lhs.im),
                    rhs_re: json_num(c.rhs.re),
                    rhs_im: json_num(c.rhs.im),
                    rel_diff: json_num(c.rel_diff()),
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Csv => {
            let header: Vec<String> = [
                "identity", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_diff",
            ]
            .map(String::from)
            .to_vec();
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|(name, c)| {
                    vec![
                        name.to_string(),
                        sig(c.lhs.re),
                        sig(c.lhs.im),
                        sig(c.rhs.re),
                        sig(c.rhs.im),
                        sig(c.rel_diff()),
                    ]
                })
                .collect();
            csv_text(&header, &rows)?
        }
    };
    emit(common, &text)
}
