//! Command implementations. Each returns the process exit code together
//! with the report it printed; exit codes are a stable contract:
//!
//! | command        | 0          | 2                  | 3               | 1            |
//! |----------------|------------|--------------------|-----------------|--------------|
//! | certify        | Certified  | Refuted            | Undecided       | input error  |
//! | solve          | Solved     | GloballyObstructed | BudgetExhausted | input error  |
//! | verify-witness | replayed   | replay failed      | —               | no witness   |

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context};
use serde_json::json;

use mso::certify::{
    max_principle_analyze, surjectivity_certificate, CertificateBudgets, FormStatus,
    MaxPrincipleOutcome, SurjectivityVerdict, FORM_EIG_TOL, WITNESS_RESIDUAL_TOL,
};
use mso::graph::{ComponentProbe, VertexId};
use mso::solve::{windowed_solve, SolveOutcome, SolveRequest, OBSTRUCTION_RTOL};

use crate::problem::LoadedProblem;
use crate::report::{
    claims_of, digest_of, problem_of, replay_claim, tool_version, Report, WitnessClaim,
};

pub struct CommandResult {
    pub report: Report,
    pub exit_code: i32,
    pub text: String,
}

fn make_report(
    command: &str,
    parameters: serde_json::Value,
    problem: &LoadedProblem,
    payload: serde_json::Value,
    timings_ms: BTreeMap<String, f64>,
) -> Report {
    let problem_json = problem.canonical_json();
    Report {
        tool: tool_version(),
        command: command.to_string(),
        parameters,
        input_digest: digest_of(&problem_json),
        problem: problem_json,
        payload,
        timings_ms,
    }
}

fn validate_region(problem: &LoadedProblem, center: &VertexId, radius: usize) -> anyhow::Result<()> {
    let region = problem.graph.ball(center, radius)?;
    let violations = problem.operator.validate_on(&region)?;
    if !violations.is_empty() {
        let mut lines = String::new();
        for v in &violations {
            lines.push_str(&format!("  {v:?}\n"));
        }
        bail!("bundle data failed validation on the probed region:\n{lines}");
    }
    Ok(())
}

fn parse_center(problem: &LoadedProblem, center: &Option<String>) -> anyhow::Result<VertexId> {
    let c = match center {
        Some(token) => VertexId::parse(token),
        None => problem.base_vertex.clone(),
    };
    if !problem.graph.contains(&c) {
        bail!("center vertex {c} is not in the graph");
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

pub fn certify(
    problem: LoadedProblem,
    center: Option<String>,
    budgets: CertificateBudgets,
) -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let center = parse_center(&problem, &center)?;
    validate_region(
        &problem,
        &center,
        budgets.form_radius.max(budgets.kernel_radius) + 1,
    )?;
    let verdict = surjectivity_certificate(&problem.operator, &center, &budgets)?;
    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;

    let mut claims = Vec::new();
    match &verdict {
        SurjectivityVerdict::Refuted(e) => claims.push(WitnessClaim::Kernel {
            field: e.witness.field.clone(),
            residual_tol: WITNESS_RESIDUAL_TOL,
        }),
        SurjectivityVerdict::Undecided(e) => {
            for (condition, probe) in &e.form_attempts {
                if let FormStatus::Refuted { witness, value, .. } = &probe.status {
                    claims.push(WitnessClaim::FormNegative {
                        field: witness.clone(),
                        value: *value,
                        value_tol: FORM_EIG_TOL,
                        condition: *condition,
                    });
                }
            }
        }
        SurjectivityVerdict::Certified(_) => {}
    }

    let exit_code = match &verdict {
        SurjectivityVerdict::Certified(_) => 0,
        SurjectivityVerdict::Refuted(_) => 2,
        SurjectivityVerdict::Undecided(_) => 3,
    };
    let text = certify_text(&problem, &center, &budgets, &verdict);
    let payload = json!({
        "status": verdict.status_name(),
        "verdict": verdict,
        "witness_claims": claims,
    });
    let report = make_report(
        "certify",
        json!({
            "center": center.to_string(),
            "form_radius": budgets.form_radius,
            "component_budget": budgets.component_budget,
            "kernel_radius": budgets.kernel_radius,
        }),
        &problem,
        payload,
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code,
        text,
    })
}

fn certify_text(
    problem: &LoadedProblem,
    center: &VertexId,
    budgets: &CertificateBudgets,
    verdict: &SurjectivityVerdict,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "certify {} (center {center}, form radius {}, component budget {}, kernel radius {})\n",
        problem.graph.description(),
        budgets.form_radius,
        budgets.component_budget,
        budgets.kernel_radius
    ));
    match verdict {
        SurjectivityVerdict::Certified(e) => {
            out.push_str("verdict: Certified\n");
            out.push_str(&format!("  local finiteness: {}\n", e.local_finiteness));
            out.push_str(&format!(
                "  components: {} within budget {}, asserted infinite: {} => accepted\n",
                match e.components.outcome {
                    ComponentProbe::Finite(n) => format!("finite ({n})"),
                    ComponentProbe::ExceedsBudget => "budget exceeded".to_string(),
                },
                e.components.budget,
                e.components.asserted_infinite
            ));
            let name = match e.form_condition {
                mso::certify::FormCondition::WMin => "q_{W_min}",
                mso::certify::FormCondition::NegWMaxMinusTwoDeg => "q_{-W_max-2deg}",
            };
            out.push_str(&format!(
                "  form: {name} nonnegative pointwise on the probed ball (evidence tier)\n"
            ));
            out.push_str(&format!(
                "  kernel search at radius {} found nothing\n",
                e.kernel_search_radius
            ));
        }
        SurjectivityVerdict::Refuted(e) => {
            out.push_str("verdict: Refuted\n");
            out.push_str(&format!(
                "  kernel witness on {} vertices, ‖𝓜ψ‖ = {:.3e}, smallest singular value {:.3e}\n",
                e.witness.field.support_size(),
                e.witness.residual,
                e.witness.smin
            ));
            out.push_str(&format!("  route: {:?}\n", e.route));
        }
        SurjectivityVerdict::Undecided(e) => {
            out.push_str("verdict: Undecided\n");
            out.push_str(&format!("  {}\n", e.reason));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

pub fn solve(
    problem: LoadedProblem,
    rhs_name: String,
    center: Option<String>,
    window_radius: usize,
    max_radius: usize,
    tol: f64,
) -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let center = parse_center(&problem, &center)?;
    let rhs = problem
        .fields
        .get(&rhs_name)
        .with_context(|| format!("rhs field {rhs_name:?} is not defined in the problem file"))?
        .clone();
    validate_region(&problem, &center, max_radius.max(window_radius) + 1)?;
    let window = problem.graph.ball(&center, window_radius)?;
    let req = SolveRequest::new(problem.operator.clone(), rhs, window)
        .with_center(center.clone())
        .with_r_max(max_radius)
        .with_tol(tol);
    let outcome = windowed_solve(&req)?;
    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;

    let mut claims = Vec::new();
    if let SolveOutcome::GloballyObstructed { kernel_witness, .. } = &outcome {
        claims.push(WitnessClaim::Obstruction {
            field: kernel_witness.clone(),
            rhs: rhs_name.clone(),
            residual_tol: WITNESS_RESIDUAL_TOL,
            pairing_rtol: OBSTRUCTION_RTOL,
        });
    }
    let exit_code = match &outcome {
        SolveOutcome::Solved { .. } => 0,
        SolveOutcome::GloballyObstructed { .. } => 2,
        SolveOutcome::BudgetExhausted { .. } => 3,
    };

    let mut text = format!(
        "solve {} for rhs {rhs_name:?} on the window of radius {window_radius} around {center}\n",
        problem.graph.description()
    );
    match &outcome {
        SolveOutcome::Solved {
            g,
            radius_used,
            residual,
        } => text.push_str(&format!(
            "outcome: Solved at radius {radius_used}, residual {residual:.3e}, support size {}\n",
            g.support_size()
        )),
        SolveOutcome::GloballyObstructed {
            kernel_witness,
            pairing_value,
        } => text.push_str(&format!(
            "outcome: GloballyObstructed — kernel field on {} vertices pairs to {:.6e}; \
             no solution exists on any window containing its support\n",
            kernel_witness.support_size(),
            pairing_value.norm()
        )),
        SolveOutcome::BudgetExhausted {
            best_residual,
            radius_reached,
        } => text.push_str(&format!(
            "outcome: BudgetExhausted at radius {radius_reached}, best residual {best_residual:.3e}\n"
        )),
    }

    let payload = json!({
        "status": outcome.status_name(),
        "outcome": outcome,
        "witness_claims": claims,
    });
    let report = make_report(
        "solve",
        json!({
            "rhs": rhs_name,
            "center": center.to_string(),
            "window_radius": window_radius,
            "max_radius": max_radius,
            "tol": tol,
        }),
        &problem,
        payload,
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code,
        text,
    })
}

// ---------------------------------------------------------------------------
// max-principle
// ---------------------------------------------------------------------------

pub fn max_principle(
    problem: LoadedProblem,
    vertices: Vec<String>,
    center: Option<String>,
    radius: Option<usize>,
) -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let v = problem.scalar_potential()?;
    let targets: Vec<VertexId> = if !vertices.is_empty() {
        vertices.iter().map(|t| VertexId::parse(t)).collect()
    } else {
        let center = parse_center(&problem, &center)?;
        problem
            .graph
            .ball(&center, radius.unwrap_or(2))?
            .into_iter()
            .collect()
    };

    let mut rows = Vec::new();
    let mut text = format!(
        "maximum principle audit of {} ({} vertices)\n",
        problem.graph.description(),
        targets.len()
    );
    text.push_str("vertex          deg        V(x)       outcome\n");
    for x in &targets {
        let outcome = max_principle_analyze(&problem.graph, &v, x)?;
        let deg = problem.graph.degree(x)?;
        let vx = v.value(x);
        let token = format!("{x}");
        match &outcome {
            MaxPrincipleOutcome::Holds {
                nonnegative_potential,
                strongly_negative_potential,
            } => {
                let why = if *nonnegative_potential {
                    "V(x) >= 0"
                } else {
                    debug_assert!(strongly_negative_potential);
                    "V(x) + 2deg(x) <= 0"
                };
                text.push_str(&format!("{token:<15} {deg:<10.4} {vx:<10.4} holds ({why})\n"));
            }
            MaxPrincipleOutcome::Fails { beta, residual, .. } => {
                text.push_str(&format!(
                    "{token:<15} {deg:<10.4} {vx:<10.4} FAILS (beta = {beta:.6}, residual {residual:.1e})\n"
                ));
            }
        }
        rows.push(json!({
            "vertex": x.to_string(),
            "degree": deg,
            "potential": vx,
            "outcome": outcome,
        }));
    }
    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;

    let report = make_report(
        "max-principle",
        json!({
            "vertices": targets.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        }),
        &problem,
        json!({ "table": rows }),
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code: 0,
        text,
    })
}

// ---------------------------------------------------------------------------
// verify-witness
// ---------------------------------------------------------------------------

pub fn verify_witness(report_text: &str) -> anyhow::Result<(i32, String)> {
    let report: Report = serde_json::from_str(report_text).context("parsing report file")?;
    let claims = claims_of(&report)?;
    if claims.is_empty() {
        bail!("report contains no witness claims");
    }
    let problem = problem_of(&report)?;
    let mut text = format!(
        "replaying {} witness claim(s) from a {} report\n",
        claims.len(),
        report.command
    );
    let mut all_ok = true;
    for claim in &claims {
        let outcome = replay_claim(&problem, claim)?;
        all_ok &= outcome.ok;
        text.push_str(&format!(
            "  [{}] {}\n",
            if outcome.ok { "ok" } else { "FAILED" },
            outcome.description
        ));
    }
    Ok((if all_ok { 0 } else { 2 }, text))
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

pub fn demo(name: &str) -> anyhow::Result<CommandResult> {
    match name {
        "finite-component" => demo_finite_component(),
        "infinite-star" => demo_infinite_star(),
        "hexagram" => demo_hexagram(),
        other => bail!("unknown demo {other:?} (try finite-component, infinite-star, hexagram)"),
    }
}

fn demo_problem(graph_json: serde_json::Value) -> anyhow::Result<LoadedProblem> {
    LoadedProblem::from_json(&graph_json.to_string())
}

fn demo_finite_component() -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let problem = demo_problem(json!({
        "format": 1,
        "graph": {"generator": "cycle", "params": {"len": 6}},
        "fields": {"delta": {"0": [[1.0, 0.0]]}}
    }))?;

    let verdict = surjectivity_certificate(
        &problem.operator,
        &VertexId::Int(0),
        &CertificateBudgets::default(),
    )?;
    let window = problem.graph.ball(&VertexId::Int(0), 3)?;
    let outcome = windowed_solve(&SolveRequest::new(
        problem.operator.clone(),
        problem.fields["delta"].clone(),
        window,
    ))?;

    let mut text = String::from(
        "finite components obstruct surjectivity: on the 6-cycle the constant\n\
         functions are finitely supported kernel fields of the Laplacian.\n",
    );
    text.push_str(&format!("  certify: {}\n", verdict.status_name()));
    if let SolveOutcome::GloballyObstructed { pairing_value, .. } = &outcome {
        text.push_str(&format!(
            "  solve 𝓛g = δ_0: GloballyObstructed, ⟨ψ, δ_0⟩ = {:.6} ≠ 0\n",
            pairing_value.norm()
        ));
    }

    let mut claims = Vec::new();
    if let SurjectivityVerdict::Refuted(e) = &verdict {
        claims.push(WitnessClaim::Kernel {
            field: e.witness.field.clone(),
            residual_tol: WITNESS_RESIDUAL_TOL,
        });
    }
    if let SolveOutcome::GloballyObstructed { kernel_witness, .. } = &outcome {
        claims.push(WitnessClaim::Obstruction {
            field: kernel_witness.clone(),
            rhs: "delta".to_string(),
            residual_tol: WITNESS_RESIDUAL_TOL,
            pairing_rtol: OBSTRUCTION_RTOL,
        });
    }

    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;
    let payload = json!({
        "demo": "finite-component",
        "verdict": verdict,
        "solve": outcome,
        "witness_claims": claims,
    });
    let report = make_report(
        "demo",
        json!({"name": "finite-component"}),
        &problem,
        payload,
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code: 0,
        text,
    })
}

fn demo_infinite_star() -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let mut sections = Vec::new();
    let mut text = String::from(
        "without local finiteness surjectivity fails: the image of the star\n\
         Laplacian is exactly the zero-sum fields. On each finite truncation\n\
         the defect f(0) + Σ f(n) decides solvability.\n",
    );
    let mut last_problem = None;
    for truncation in [5usize, 10, 20] {
        let problem = demo_problem(json!({
            "format": 1,
            "graph": {"generator": "infinite_star", "params": {"truncation": truncation}},
            "fields": {
                "delta": {"0": [[1.0, 0.0]]},
                "balanced": {"0": [[-1.0, 0.0]], "1": [[1.0, 0.0]]}
            }
        }))?;
        let window = problem.graph.ball(&VertexId::Int(0), 1)?;
        let mut entries = Vec::new();
        for name in ["delta", "balanced"] {
            let f = problem.fields[name].clone();
            let defect = mso::gallery::star_image_defect(&f, truncation)?;
            let outcome = windowed_solve(
                &SolveRequest::new(problem.operator.clone(), f, window.clone())
                    .with_center(VertexId::Int(0)),
            )?;
            text.push_str(&format!(
                "  N = {truncation:>2}, {name:<9} defect {defect:.3} → {}\n",
                outcome.status_name()
            ));
            entries.push(json!({
                "field": name,
                "defect": defect,
                "status": outcome.status_name(),
            }));
        }
        sections.push(json!({"truncation": truncation, "cases": entries}));
        last_problem = Some(problem);
    }
    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;
    let problem = last_problem.unwrap();
    let report = make_report(
        "demo",
        json!({"name": "infinite-star"}),
        &problem,
        json!({"demo": "infinite-star", "truncations": sections}),
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code: 0,
        text,
    })
}

fn demo_hexagram() -> anyhow::Result<CommandResult> {
    let t0 = Instant::now();
    let problem = demo_problem(json!({
        "format": 1,
        "graph": {"generator": "hexagram_glued_ray", "params": {}},
        "potential": {"constant": -6.0}
    }))?;

    let phi = mso::gallery::hexagram_eigenfunction();
    let zero_potential = demo_problem(json!({
        "format": 1,
        "graph": {"generator": "hexagram_glued_ray", "params": {}}
    }))?;
    let eigen_defect = zero_potential
        .operator
        .apply_supported(&phi)?
        .sub(&phi.scale(num_complex::Complex64::new(6.0, 0.0)))?
        .norm_sup();

    let verdict = surjectivity_certificate(
        &problem.operator,
        &VertexId::tag("a", 1),
        &CertificateBudgets::default(),
    )?;
    let overlap = match &verdict {
        SurjectivityVerdict::Refuted(e) => mso::fields::overlap(&e.witness.field, &phi)?,
        _ => 0.0,
    };

    let mut text = String::from(
        "the hexagram carries a finitely supported eigenfunction at eigenvalue 6\n\
         (alternating on the inner cycle, zero outside), even after gluing an\n\
         infinite ray, so 𝓛 − 6 is not surjective despite infinite components.\n",
    );
    text.push_str(&format!(
        "  eigen-relation defect ‖𝓛ψ − 6ψ‖∞ = {eigen_defect:.3e}\n"
    ));
    text.push_str(&format!(
        "  certify 𝓛_{{-6}}: {} (witness overlap with the eigenfunction: {overlap:.6})\n",
        verdict.status_name()
    ));

    let mut claims = Vec::new();
    if let SurjectivityVerdict::Refuted(e) = &verdict {
        claims.push(WitnessClaim::Kernel {
            field: e.witness.field.clone(),
            residual_tol: WITNESS_RESIDUAL_TOL,
        });
    }
    let compute_ms = t0.elapsed().as_secs_f64() * 1e3;
    let payload = json!({
        "demo": "hexagram",
        "eigen_defect": eigen_defect,
        "verdict": verdict,
        "witness_overlap": overlap,
        "witness_claims": claims,
    });
    let report = make_report(
        "demo",
        json!({"name": "hexagram"}),
        &problem,
        payload,
        BTreeMap::from([("compute_ms".to_string(), compute_ms)]),
    );
    Ok(CommandResult {
        report,
        exit_code: 0,
        text,
    })
}
