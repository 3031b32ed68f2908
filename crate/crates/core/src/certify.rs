//! Surjectivity certificates and refutations.
//!
//! The operator `𝓜` is surjective exactly when its restriction to finitely
//! supported fields is injective, so a nonzero finitely supported field
//! annihilated by `𝓜` refutes surjectivity outright. The positive
//! direction is certified through three conditions: local finiteness (by
//! construction of the neighbor oracle), infinite connected components
//! (probed, with the generator's assertion as supporting evidence), and
//! nonnegativity of one of the two scalar forms `q_{W_min}`,
//! `q_{−W_max − 2·deg}` (a pointwise fast path on the probed region, plus
//! an eigenvalue falsifier on growing balls).
//!
//! Verdicts always carry their evidence tier: a `Certified` never silently
//! claims more than what was actually checked at desk scale.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::graph::{ComponentProbe, GraphOracle, VertexId};
use crate::linalg;
use crate::par;
use crate::schroedinger::{form_matrix, quadratic_form, MagneticOperator, ScalarPotential};

/// A kernel candidate is accepted when the smallest singular value of the
/// full local system falls below this absolute threshold. Robust rank
/// decisions for systems up to ~10³ unknowns in double precision.
pub const KERNEL_SVD_TOL: f64 = 1e-10;

/// Every reported witness replays with `‖𝓜ψ‖ ≤ WITNESS_RESIDUAL_TOL · ‖ψ‖`.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-9;

/// A form matrix refutes nonnegativity when its smallest eigenvalue is
/// below `−FORM_EIG_TOL`.
pub const FORM_EIG_TOL: f64 = 1e-10;

/// Residual bound for the constructed maximum-principle witness.
pub const MAX_PRINCIPLE_RESIDUAL_TOL: f64 = 1e-12;

/// Threshold separating "zero" from "nonzero" entries in the zero-energy
/// support check.
pub const ZERO_ENERGY_SUPPORT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Block layout and system assembly
// ---------------------------------------------------------------------------

/// Ordered vertices with fiber offsets into a flat coordinate vector.
/// Row and column indices of every assembled system come from here, in the
/// canonical vertex order, so the linear algebra is deterministic.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    vertices: Vec<VertexId>,
    offsets: Vec<usize>,
    index: BTreeMap<VertexId, usize>,
    total: usize,
}

impl BlockLayout {
    pub(crate) fn new(m: &MagneticOperator, vertices: &BTreeSet<VertexId>) -> Self {
        let vertices: Vec<VertexId> = vertices.iter().cloned().collect();
        let mut offsets = Vec::with_capacity(vertices.len());
        let mut total = 0;
        for v in &vertices {
            offsets.push(total);
            total += m.bundle().dim(v);
        }
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        BlockLayout {
            vertices,
            offsets,
            index,
            total,
        }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn block_of(&self, x: &VertexId) -> Option<(usize, usize)> {
        self.index.get(x).map(|&i| {
            let start = self.offsets[i];
            let end = if i + 1 < self.offsets.len() {
                self.offsets[i + 1]
            } else {
                self.total
            };
            (start, end - start)
        })
    }

    /// Reassembles a field from flat coordinates, pruning exact zeros.
    pub fn field_from_coords(&self, coords: &DVector<Complex64>) -> VectorField {
        let mut f = VectorField::zero();
        for (i, x) in self.vertices.iter().enumerate() {
            let start = self.offsets[i];
            let end = if i + 1 < self.offsets.len() {
                self.offsets[i + 1]
            } else {
                self.total
            };
            f.insert(x.clone(), coords.rows(start, end - start).into_owned());
        }
        f
    }
}

/// Assembles the rows of `𝓜` for the given equation vertices against the
/// given unknown vertices. The row at `x` is
/// `(deg(x)·I + W(x))·φ(x) − Σ_y b(x,y)·Φ_xy·φ(y)` with the full degree,
/// so a row is exact even when some neighbors lie outside the unknowns.
///
/// The operator is local, so each row block touches at most `1 + deg`
/// column blocks; those small blocks are built (in parallel when asked)
/// and scattered into the zero-initialized system.
pub(crate) fn assemble_rows(
    m: &MagneticOperator,
    equations: &BlockLayout,
    unknowns: &BlockLayout,
    parallel: bool,
) -> Result<DMatrix<Complex64>> {
    type RowBlocks = Vec<(usize, DMatrix<Complex64>)>;
    let build_row = |i: usize| -> Result<RowBlocks> {
        let x = &equations.vertices[i];
        let dx = m.bundle().dim(x);
        let mut blocks = Vec::new();
        let neighbors = m.graph().neighbors(x)?;
        let deg: f64 = neighbors.iter().map(|(_, w)| w).sum();
        if let Some((c0, dim)) = unknowns.block_of(x) {
            if dim != dx {
                return Err(Error::DimensionMismatch {
                    vertex: x.clone(),
                    expected: dx,
                    got: dim,
                });
            }
            let w = m.endo().matrix(x, dx)?;
            let diag = w + DMatrix::<Complex64>::identity(dx, dx).scale(deg);
            blocks.push((c0, diag));
        }
        for (y, b) in &neighbors {
            if let Some((c0, dy)) = unknowns.block_of(y) {
                let phi = m.connection().matrix(x, y, dx, m.bundle().dim(y))?;
                if phi.ncols() != dy {
                    return Err(Error::DimensionMismatch {
                        vertex: y.clone(),
                        expected: dy,
                        got: phi.ncols(),
                    });
                }
                blocks.push((c0, (-phi).scale(*b)));
            }
        }
        Ok(blocks)
    };

    let indices: Vec<usize> = (0..equations.vertices.len()).collect();
    let rows = if parallel {
        par::map_collect(indices, build_row)
    } else {
        par::map_collect_seq(indices, build_row)
    };

    let mut a = DMatrix::<Complex64>::zeros(equations.total, unknowns.total);
    for (i, row) in rows.into_iter().enumerate() {
        let r0 = equations.offsets[i];
        for (c0, block) in row? {
            // The diagonal block and a neighbor block can share columns
            // only if the graph had a self-loop, which axiom (b0) forbids;
            // still, accumulate rather than overwrite.
            let mut view = a.view_mut((r0, c0), block.shape());
            view += &block;
        }
    }
    Ok(a)
}

/// The full local system for a kernel search over `support`: unknowns are
/// the fiber coordinates over `support`, equations run over
/// `ball(support, 1)` — every row a field supported in `support` can touch.
/// Returns the matrix with its row and column layouts.
pub fn kernel_system(
    m: &MagneticOperator,
    support: &BTreeSet<VertexId>,
) -> Result<(DMatrix<Complex64>, BlockLayout, BlockLayout)> {
    kernel_system_impl(m, support, true)
}

/// Sequential reference implementation of [`kernel_system`].
pub fn kernel_system_seq(
    m: &MagneticOperator,
    support: &BTreeSet<VertexId>,
) -> Result<(DMatrix<Complex64>, BlockLayout, BlockLayout)> {
    kernel_system_impl(m, support, false)
}

fn kernel_system_impl(
    m: &MagneticOperator,
    support: &BTreeSet<VertexId>,
    parallel: bool,
) -> Result<(DMatrix<Complex64>, BlockLayout, BlockLayout)> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let hull = m.graph().ball_of_set(support.iter().cloned(), 1)?;
    let equations = BlockLayout::new(m, &hull);
    let unknowns = BlockLayout::new(m, support);
    let a = assemble_rows(m, &equations, &unknowns, parallel)?;
    Ok((a, equations, unknowns))
}

/// A replayable refutation: a unit-norm finitely supported field with
/// `‖𝓜ψ‖` below the witness tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelWitness {
    pub field: VectorField,
    /// Smallest singular value of the local system.
    pub smin: f64,
    /// `‖𝓜ψ‖₂`, recomputed through `apply_supported` after extraction.
    pub residual: f64,
}

/// Searches for a finitely supported kernel field of `𝓜` with support in
/// `support`. Because the assembled system contains every row such a field
/// can touch, a returned witness is a genuine kernel element of `𝓜`, not
/// merely of a truncation. `None` is a quantitative statement: every field
/// supported in `support` satisfies `‖𝓜φ‖ ≥ KERNEL_SVD_TOL · ‖φ‖`.
pub fn kernel_search(
    m: &MagneticOperator,
    support: &BTreeSet<VertexId>,
) -> Result<Option<KernelWitness>> {
    kernel_search_impl(m, support, true)
}

pub(crate) fn kernel_search_impl(
    m: &MagneticOperator,
    support: &BTreeSet<VertexId>,
    parallel: bool,
) -> Result<Option<KernelWitness>> {
    let (a, _equations, unknowns) = kernel_system_impl(m, support, parallel)?;
    debug_assert!(a.nrows() >= a.ncols(), "kernel systems are tall");
    let (smin, coords) = linalg::smallest_singular_pair(&a);
    if smin >= KERNEL_SVD_TOL {
        return Ok(None);
    }
    let field = unknowns.field_from_coords(&coords);
    let residual = m.apply_supported(&field)?.norm_l2();
    Ok(Some(KernelWitness {
        field,
        smin,
        residual,
    }))
}

// ---------------------------------------------------------------------------
// Form nonnegativity probe
// ---------------------------------------------------------------------------

/// Which of the two scalar forms in the certification theorem was probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormCondition {
    /// `q_{W_min}`.
    WMin,
    /// `q_{−W_max − 2·deg}`.
    NegWMaxMinusTwoDeg,
}

/// Evidence tier of a nonnegativity probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FormStatus {
    /// `v ≥ 0` held pointwise on the whole probed ball, so the form is a
    /// sum of nonnegative terms there — the strong tier.
    CertifiedPointwise { radius: usize },
    /// No negative direction was found on any ball up to this radius.
    NotRefutedUpTo { radius: usize },
    /// A finitely supported `h` with `q_V(h) < 0`; the value is recomputed
    /// independently of the eigensolver that found the direction.
    Refuted {
        witness: VectorField,
        value: f64,
        radius: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormProbeResult {
    pub status: FormStatus,
    /// Radii whose form matrices went through the eigenvalue check
    /// (empty when the pointwise fast path decided).
    pub checked_radii: Vec<usize>,
}

impl FormProbeResult {
    pub fn is_certified(&self) -> bool {
        matches!(self.status, FormStatus::CertifiedPointwise { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self.status, FormStatus::Refuted { .. })
    }
}

/// Probes nonnegativity of `q_V` on finitely supported functions by
/// exhaustion: `q_V ≥ 0` on all of them iff the form matrix of every finite
/// ball is positive semidefinite. Fast path first: if `v ≥ 0` on every
/// vertex of `ball(center, r_max)`, nonnegativity over fields supported in
/// that region holds term by term and the strong tier is reported without
/// touching an eigensolver. Otherwise the balls `r = 0..r_max` are checked
/// (concurrently under the `parallel` feature) and the smallest refuted
/// radius wins, deterministically.
pub fn form_nonnegativity_probe(
    graph: &GraphOracle,
    v: &ScalarPotential,
    center: &VertexId,
    r_max: usize,
) -> Result<FormProbeResult> {
    let full_ball = graph.ball(center, r_max)?;
    if full_ball.iter().all(|x| v.value(x) >= 0.0) {
        return Ok(FormProbeResult {
            status: FormStatus::CertifiedPointwise { radius: r_max },
            checked_radii: Vec::new(),
        });
    }

    // Nested balls, computed once.
    let mut balls: Vec<Vec<VertexId>> = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        balls.push(graph.ball(center, r)?.into_iter().collect());
    }

    let check = |r: usize| -> Result<Option<(f64, DVector<f64>)>> {
        let q = form_matrix(graph, v, &balls[r])?;
        let (ev, vec) = linalg::symmetric_min_eigenpair(&q);
        Ok(if ev < -FORM_EIG_TOL { Some((ev, vec)) } else { None })
    };
    let radii: Vec<usize> = (0..=r_max).collect();
    let outcomes = par::map_collect(radii.clone(), check);

    for (r, outcome) in outcomes.into_iter().enumerate() {
        if let Some((_, vec)) = outcome? {
            let witness = VectorField::scalar_real(
                balls[r]
                    .iter()
                    .cloned()
                    .zip(vec.iter().copied())
                    .collect::<Vec<_>>(),
            );
            let value = quadratic_form(graph, v, &witness)?;
            debug_assert!(value < 0.0, "refutation witness must recompute negative");
            return Ok(FormProbeResult {
                status: FormStatus::Refuted {
                    witness,
                    value,
                    radius: r,
                },
                checked_radii: (0..=r).collect(),
            });
        }
    }
    Ok(FormProbeResult {
        status: FormStatus::NotRefutedUpTo { radius: r_max },
        checked_radii: radii,
    })
}

// ---------------------------------------------------------------------------
// Surjectivity certificate
// ---------------------------------------------------------------------------

/// Search budgets for the certificate pipeline.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertificateBudgets {
    pub form_radius: usize,
    pub component_budget: usize,
    pub kernel_radius: usize,
}

impl Default for CertificateBudgets {
    fn default() -> Self {
        CertificateBudgets {
            form_radius: 6,
            component_budget: 512,
            kernel_radius: 4,
        }
    }
}

/// What the component probe established, together with the generator's
/// assertion. The pair (budget exceeded, asserted infinite) is the accepted
/// desk-scale evidence for "all connected components are infinite".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentEvidence {
    pub outcome: ComponentProbe,
    pub budget: usize,
    pub asserted_infinite: bool,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RefutationRoute {
    KernelSearch { radius: usize },
    FiniteComponent { size: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifiedEvidence {
    /// Always "by construction": neighbor oracles return finite lists.
    pub local_finiteness: String,
    pub components: ComponentEvidence,
    pub form_condition: FormCondition,
    pub form: FormProbeResult,
    /// Radius of the kernel search that found nothing.
    pub kernel_search_radius: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefutedEvidence {
    pub witness: KernelWitness,
    pub route: RefutationRoute,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UndecidedEvidence {
    pub kernel_search_radius: usize,
    pub components: ComponentEvidence,
    pub form_attempts: Vec<(FormCondition, FormProbeResult)>,
    pub reason: String,
}

/// The structured verdict of the certificate pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SurjectivityVerdict {
    Certified(CertifiedEvidence),
    Refuted(RefutedEvidence),
    Undecided(UndecidedEvidence),
}

impl SurjectivityVerdict {
    pub fn status_name(&self) -> &'static str {
        match self {
            SurjectivityVerdict::Certified(_) => "Certified",
            SurjectivityVerdict::Refuted(_) => "Refuted",
            SurjectivityVerdict::Undecided(_) => "Undecided",
        }
    }
}

/// Runs the certificate pipeline around `center`:
///
/// 1. kernel search over `ball(center, kernel_radius)` — a witness refutes;
/// 2. component probe — a finite component triggers a kernel search over
///    the whole component (indicator-type kernels exist when `W ≡ 0`);
///    without a witness the failed condition leaves the verdict undecided;
/// 3. form probes for `q_{W_min}`, then `q_{−W_max − 2·deg}`; a pointwise
///    certification combined with accepted component evidence certifies.
///    `q_{W_min}` is reported when both conditions would hold.
pub fn surjectivity_certificate(
    m: &MagneticOperator,
    center: &VertexId,
    budgets: &CertificateBudgets,
) -> Result<SurjectivityVerdict> {
    let graph = m.graph();

    let support = graph.ball(center, budgets.kernel_radius)?;
    if let Some(witness) = kernel_search(m, &support)? {
        return Ok(SurjectivityVerdict::Refuted(RefutedEvidence {
            witness,
            route: RefutationRoute::KernelSearch {
                radius: budgets.kernel_radius,
            },
        }));
    }

    let component = graph.component_within(center, budgets.component_budget)?;
    let components = ComponentEvidence {
        outcome: match &component {
            Some(set) => ComponentProbe::Finite(set.len()),
            None => ComponentProbe::ExceedsBudget,
        },
        budget: budgets.component_budget,
        asserted_infinite: graph.infinite_components_asserted(),
        accepted: component.is_none() && graph.infinite_components_asserted(),
    };

    if let Some(set) = component {
        let size = set.len();
        if let Some(witness) = kernel_search(m, &set)? {
            return Ok(SurjectivityVerdict::Refuted(RefutedEvidence {
                witness,
                route: RefutationRoute::FiniteComponent { size },
            }));
        }
        return Ok(SurjectivityVerdict::Undecided(UndecidedEvidence {
            kernel_search_radius: budgets.kernel_radius,
            components,
            form_attempts: Vec::new(),
            reason: format!(
                "the component of {center} is finite ({size} vertices), which fails \
                 the infinite-components condition, and no kernel witness was found on it"
            ),
        }));
    }

    // Scalar potentials for the two form conditions, materialized on the
    // probed region (the forms only read them there).
    let region = graph.ball(center, budgets.form_radius)?;
    let mut wmin_map = BTreeMap::new();
    let mut neg_map = BTreeMap::new();
    for x in &region {
        wmin_map.insert(x.clone(), m.w_min_at(x)?);
        neg_map.insert(
            x.clone(),
            -m.w_max_at(x)? - 2.0 * graph.degree(x)?,
        );
    }

    let mut attempts = Vec::new();
    for (condition, map) in [
        (FormCondition::WMin, wmin_map),
        (FormCondition::NegWMaxMinusTwoDeg, neg_map),
    ] {
        let v = ScalarPotential::from_map(map, 0.0);
        let probe = form_nonnegativity_probe(graph, &v, center, budgets.form_radius)?;
        if probe.is_certified() && components.accepted {
            return Ok(SurjectivityVerdict::Certified(CertifiedEvidence {
                local_finiteness: "by construction: neighbor oracles return finite lists"
                    .to_string(),
                components,
                form_condition: condition,
                form: probe,
                kernel_search_radius: budgets.kernel_radius,
            }));
        }
        attempts.push((condition, probe));
    }

    let reason = if !components.accepted {
        "component evidence was not accepted (budget not exceeded or infiniteness not asserted)"
            .to_string()
    } else {
        "neither form condition was certified pointwise on the probed region".to_string()
    };
    Ok(SurjectivityVerdict::Undecided(UndecidedEvidence {
        kernel_search_radius: budgets.kernel_radius,
        components,
        form_attempts: attempts,
        reason,
    }))
}

// ---------------------------------------------------------------------------
// Maximum principle (scalar case, radius-1 balls)
// ---------------------------------------------------------------------------

/// Outcome of the pointwise maximum-principle test for `𝓛_V` at a vertex.
/// The principle holds at `x` iff `V(x) ≥ 0` or `V(x) + 2·deg(x) ≤ 0`;
/// otherwise the explicit field `f_β` (1 at `x`, `β` on its neighbors)
/// satisfies `𝓛_V f_β(x) = 0` while peaking strictly at `x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MaxPrincipleOutcome {
    Holds {
        nonnegative_potential: bool,
        strongly_negative_potential: bool,
    },
    Fails {
        beta: f64,
        witness: VectorField,
        residual: f64,
    },
}

pub fn max_principle_analyze(
    graph: &GraphOracle,
    v: &ScalarPotential,
    x: &VertexId,
) -> Result<MaxPrincipleOutcome> {
    let vx = v.value(x);
    let deg = graph.degree(x)?;
    let nonnegative_potential = vx >= 0.0;
    let strongly_negative_potential = vx + 2.0 * deg <= 0.0;
    if nonnegative_potential || strongly_negative_potential {
        return Ok(MaxPrincipleOutcome::Holds {
            nonnegative_potential,
            strongly_negative_potential,
        });
    }
    if deg == 0.0 {
        // deg = 0 forces V(x) ≥ 0 or V(x) ≤ 0, one of which always holds.
        unreachable!("isolated vertex cannot violate the maximum principle");
    }
    let beta = (vx + deg) / deg;
    let mut entries = vec![(x.clone(), 1.0)];
    for (y, _) in graph.neighbors(x)? {
        entries.push((y, beta));
    }
    let witness = VectorField::scalar_real(entries);
    let op = MagneticOperator::scalar_laplacian(graph.clone(), v.clone());
    let residual = op.apply_at(&witness, x)?[0].norm();
    assert!(
        residual <= MAX_PRINCIPLE_RESIDUAL_TOL,
        "constructed witness must satisfy the zero-row identity"
    );
    assert!(beta.abs() < 1.0, "violating range forces |beta| < 1");
    Ok(MaxPrincipleOutcome::Fails {
        beta,
        witness,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Zero-energy support check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroEnergyOutcome {
    /// `{|h| > tol}` is closed under taking neighbors, as it must be for a
    /// zero-energy function of a nonnegative form.
    Consistent,
    /// An edge from the support to a zero vertex.
    Violation { inside: VertexId, outside: VertexId },
}

/// Verifies that the nonzero set of a zero-energy function is a union of
/// connected components, by checking neighbor closure (up to `budget`
/// support vertices). Precondition: `|q_V(h)| ≤ tol · ‖h‖²` — and the form
/// must not be refuted near `supp h`, which is the caller's obligation.
pub fn zero_energy_component_check(
    graph: &GraphOracle,
    v: &ScalarPotential,
    h: &VectorField,
    budget: usize,
) -> Result<ZeroEnergyOutcome> {
    let q = quadratic_form(graph, v, h)?;
    let scale = h.norm_l2().powi(2);
    if q.abs() > ZERO_ENERGY_SUPPORT_TOL * scale.max(1e-300) {
        return Err(Error::PreconditionViolated(format!(
            "q_V(h) = {q:.6e} is not zero relative to ‖h‖² = {scale:.6e}"
        )));
    }
    let support: Vec<&VertexId> = h
        .iter()
        .filter(|(_, vec)| vec.norm() > ZERO_ENERGY_SUPPORT_TOL)
        .map(|(x, _)| x)
        .collect();
    for x in support.into_iter().take(budget) {
        for (y, _) in graph.neighbors(x)? {
            let hy = h.get(&y).map(|v| v.norm()).unwrap_or(0.0);
            if hy <= ZERO_ENERGY_SUPPORT_TOL {
                return Ok(ZeroEnergyOutcome::Violation {
                    inside: x.clone(),
                    outside: y,
                });
            }
        }
    }
    Ok(ZeroEnergyOutcome::Consistent)
}
