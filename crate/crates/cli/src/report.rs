//! Structured reports and replayable witness claims.
//!
//! Every command emits a `Report` carrying the command echo, the canonical
//! problem document with its digest, the verdict/outcome payload, and the
//! witness claims extracted from it. `verify-witness` reloads the problem
//! from the report alone and replays each claim against freshly computed
//! quantities. Reports are deterministic given the same input and budgets,
//! byte for byte, except for the `timings_ms` block.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mso::certify::FormCondition;
use mso::fields::{pairing, VectorField};
use mso::schroedinger::{quadratic_form, ScalarPotential};

use crate::problem::{LoadedProblem, ProblemFile};

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub input_digest: String,
    pub problem: serde_json::Value,
    pub payload: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn tool_version() -> String {
    format!("mso {}", env!("CARGO_PKG_VERSION"))
}

pub fn digest_of(problem: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(problem).expect("canonical problem serializes");
    let hash = Sha256::digest(&bytes);
    format!("sha256:{}", hex_string(&hash))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A self-contained, replayable witness statement. Tolerances are part of
/// the claim, so the verifier needs nothing beyond the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessClaim {
    /// `ψ ≠ 0` and `‖𝓜ψ‖ ≤ residual_tol · ‖ψ‖`.
    Kernel {
        field: VectorField,
        residual_tol: f64,
    },
    /// `q_V(h) < 0` for the potential of the stated form condition,
    /// reproducing `value` within `value_tol`.
    FormNegative {
        field: VectorField,
        value: f64,
        value_tol: f64,
        condition: FormCondition,
    },
    /// `‖𝓜ψ‖ ≤ residual_tol · ‖ψ‖` and `|⟨ψ, rhs⟩| > pairing_rtol · ‖rhs‖`.
    Obstruction {
        field: VectorField,
        rhs: String,
        residual_tol: f64,
        pairing_rtol: f64,
    },
}

pub struct ReplayOutcome {
    pub description: String,
    pub ok: bool,
}

/// Replays one claim against the reconstructed problem.
pub fn replay_claim(problem: &LoadedProblem, claim: &WitnessClaim) -> anyhow::Result<ReplayOutcome> {
    match claim {
        WitnessClaim::Kernel { field, residual_tol } => {
            let norm = field.norm_l2();
            let residual = problem.operator.apply_supported(field)?.norm_l2();
            let ok = norm > 0.0 && residual <= residual_tol * norm;
            Ok(ReplayOutcome {
                description: format!(
                    "kernel witness: ‖𝓜ψ‖ = {residual:.3e} against bound {:.3e}·‖ψ‖ (‖ψ‖ = {norm:.6})",
                    residual_tol
                ),
                ok,
            })
        }
        WitnessClaim::FormNegative {
            field,
            value,
            value_tol,
            condition,
        } => {
            let op = &problem.operator;
            let mut map = BTreeMap::new();
            for x in field.support() {
                let v = match condition {
                    FormCondition::WMin => op.w_min_at(x)?,
                    FormCondition::NegWMaxMinusTwoDeg => {
                        -op.w_max_at(x)? - 2.0 * op.graph().degree(x)?
                    }
                };
                map.insert(x.clone(), v);
            }
            let v = ScalarPotential::from_map(map, 0.0);
            let q = quadratic_form(op.graph(), &v, field)?;
            let ok = q < 0.0 && (q - value).abs() <= *value_tol;
            Ok(ReplayOutcome {
                description: format!(
                    "negative form witness: q(h) = {q:.6e}, claimed {value:.6e} ± {value_tol:.1e}"
                ),
                ok,
            })
        }
        WitnessClaim::Obstruction {
            field,
            rhs,
            residual_tol,
            pairing_rtol,
        } => {
            let f = problem
                .fields
                .get(rhs)
                .with_context(|| format!("rhs field {rhs:?} not present in the problem"))?;
            let norm = field.norm_l2();
            let residual = problem.operator.apply_supported(field)?.norm_l2();
            let p = pairing(field, f)?;
            let ok = norm > 0.0
                && residual <= residual_tol * norm
                && p.norm() > pairing_rtol * f.norm_l2();
            Ok(ReplayOutcome {
                description: format!(
                    "obstruction witness: ‖𝓜ψ‖ = {residual:.3e}, |⟨ψ, {rhs}⟩| = {:.6e} vs floor {:.3e}",
                    p.norm(),
                    pairing_rtol * f.norm_l2()
                ),
                ok,
            })
        }
    }
}

/// Extracts the claims block from a report payload.
pub fn claims_of(report: &Report) -> anyhow::Result<Vec<WitnessClaim>> {
    match report.payload.get("witness_claims") {
        None => Ok(Vec::new()),
        Some(v) => serde_json::from_value(v.clone()).context("malformed witness_claims block"),
    }
}

/// Rebuilds the loaded problem from the report's embedded document and
/// checks the digest.
pub fn problem_of(report: &Report) -> anyhow::Result<LoadedProblem> {
    let digest = digest_of(&report.problem);
    if digest != report.input_digest {
        bail!(
            "input digest mismatch: report says {}, recomputed {digest}",
            report.input_digest
        );
    }
    let file: ProblemFile =
        serde_json::from_value(report.problem.clone()).context("embedded problem document")?;
    LoadedProblem::from_file(file)
}
