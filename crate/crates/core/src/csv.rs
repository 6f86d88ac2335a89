//! Diagnostics CSV.

use std::fmt::Write;

use crate::diagnostics::DiagnosticsRecord;

pub const HEADER: [&str; 16] = [
    "t",
    "rossby",
    "g",
    "grad_u_int",
    "dz_ell_max",
    "bound_14rho",
    "dz_lambda_max",
    "bound_9rho",
    "c_g",
    "weber_rel",
    "cauchy_rel",
    "factorization_abs",
    "d2_rel",
    "energy",
    "enstrophy",
    "reset_flag",
];

/// 17 significant digits: round-trips every `f64`.
fn cell(out: &mut String, x: f64) {
    if x == 0.0 {
        out.push('0');
    } else {
        write!(out, "{x:.16e}").unwrap();
    }
}

pub fn row(r: &DiagnosticsRecord) -> String {
    let mut s = String::with_capacity(16 * 24);
    let vals = [
        r.t,
        r.rossby,
        r.g,
        r.grad_u_int,
        r.dz_ell_max,
        r.bound_14rho,
        r.dz_lambda_max,
        r.bound_9rho,
        r.c_g,
        r.residuals.weber_rel,
        r.residuals.cauchy_rel,
        r.residuals.factorization_abs,
        r.residuals.d2_rel,
        r.energy,
        r.enstrophy,
    ];
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        cell(&mut s, *v);
    }
    s.push_str(if r.reset { ",1" } else { ",0" });
    s
}

pub fn emit_diagnostics(records: &[DiagnosticsRecord]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&row(r));
        out.push('\n');
    }
    out
}
