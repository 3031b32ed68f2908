//! The magnetic Schrödinger operator
//! `𝓜f(x) = Σ_y b(x,y)(f(x) − Φ_xy f(y)) + W(x) f(x)`,
//! scalar Laplacians with potential, the quadratic forms `q_V`, and the two
//! identities the certification pipeline leans on: symmetry of the pairing
//! under `𝓜` and domination of the energy by the scalar form at `W_min`.
//!
//! Application is defined for finitely supported fields, where every row is
//! a finite sum and the result is again finitely supported with support
//! growing by at most one hop.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bundle::{Connection, Endomorphism, HermitianBundle, Violation};
use crate::error::{Error, Result};
use crate::fields::{pairing, VectorField};
use crate::graph::{GraphOracle, VertexId};
use crate::par;

/// A real potential `V: X → ℝ`, default zero.
#[derive(Clone)]
pub struct ScalarPotential {
    value_fn: Arc<dyn Fn(&VertexId) -> f64 + Send + Sync>,
}

impl Default for ScalarPotential {
    fn default() -> Self {
        ScalarPotential::zero()
    }
}

impl ScalarPotential {
    pub fn zero() -> Self {
        ScalarPotential::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        ScalarPotential {
            value_fn: Arc::new(move |_| c),
        }
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&VertexId) -> f64 + Send + Sync + 'static,
    {
        ScalarPotential {
            value_fn: Arc::new(f),
        }
    }

    /// Values from a map, `default` elsewhere.
    pub fn from_map(map: BTreeMap<VertexId, f64>, default: f64) -> Self {
        ScalarPotential::from_fn(move |x| map.get(x).copied().unwrap_or(default))
    }

    pub fn value(&self, x: &VertexId) -> f64 {
        (self.value_fn)(x)
    }
}

/// The operator triple `(b, Φ, W)` bound to a graph.
///
/// Immutable and cheap to clone; all applications are pure, so evaluation
/// at different vertices may run concurrently.
#[derive(Clone)]
pub struct MagneticOperator {
    graph: GraphOracle,
    bundle: HermitianBundle,
    connection: Connection,
    endo: Endomorphism,
}

impl MagneticOperator {
    pub fn new(
        graph: GraphOracle,
        bundle: HermitianBundle,
        connection: Connection,
        endo: Endomorphism,
    ) -> Self {
        MagneticOperator {
            graph,
            bundle,
            connection,
            endo,
        }
    }

    /// The graph Laplacian plus potential `V`: trivial line bundle,
    /// identity connection, `W(x) = [V(x)]`.
    pub fn scalar_laplacian(graph: GraphOracle, v: ScalarPotential) -> Self {
        MagneticOperator::new(
            graph,
            HermitianBundle::trivial(),
            Connection::identity(),
            Endomorphism::from_real_fn(move |x| v.value(x)),
        )
    }

    pub fn graph(&self) -> &GraphOracle {
        &self.graph
    }

    pub fn bundle(&self) -> &HermitianBundle {
        &self.bundle
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn endo(&self) -> &Endomorphism {
        &self.endo
    }

    /// Smallest eigenvalue of `W(x)`.
    pub fn w_min_at(&self, x: &VertexId) -> Result<f64> {
        self.endo.w_min(x, self.bundle.dim(x))
    }

    /// Largest eigenvalue of `W(x)`.
    pub fn w_max_at(&self, x: &VertexId) -> Result<f64> {
        self.endo.w_max(x, self.bundle.dim(x))
    }

    /// Validates bundle, connection, and endomorphism on a vertex set.
    pub fn validate_on(
        &self,
        vertices: &std::collections::BTreeSet<VertexId>,
    ) -> Result<Vec<Violation>> {
        crate::bundle::validate(&self.graph, &self.bundle, &self.connection, &self.endo, vertices)
    }

    /// The fiber vector `𝓜f(x)`, an exact finite sum over `neighbors(x)`.
    pub fn apply_at(&self, f: &VectorField, x: &VertexId) -> Result<DVector<Complex64>> {
        let dx = self.bundle.dim(x);
        let fx = match f.get(x) {
            Some(v) => {
                if v.len() != dx {
                    return Err(Error::DimensionMismatch {
                        vertex: x.clone(),
                        expected: dx,
                        got: v.len(),
                    });
                }
                v.clone()
            }
            None => DVector::zeros(dx),
        };
        let w = self.endo.matrix(x, dx)?;
        let mut out = &w * &fx;
        for (y, b) in self.graph.neighbors(x)? {
            out.axpy(Complex64::new(b, 0.0), &fx, Complex64::new(1.0, 0.0));
            if let Some(fy) = f.get(&y) {
                let dy = self.bundle.dim(&y);
                if fy.len() != dy {
                    return Err(Error::DimensionMismatch {
                        vertex: y.clone(),
                        expected: dy,
                        got: fy.len(),
                    });
                }
                let phi = self.connection.matrix(x, &y, dx, dy)?;
                out -= (&phi * fy).scale(b);
            }
        }
        Ok(out)
    }

    fn apply_on_vertices(
        &self,
        f: &VectorField,
        vertices: Vec<VertexId>,
        parallel: bool,
    ) -> Result<VectorField> {
        let eval = |x: VertexId| -> Result<(VertexId, DVector<Complex64>)> {
            let v = self.apply_at(f, &x)?;
            Ok((x, v))
        };
        let rows = if parallel {
            par::map_collect(vertices, eval)
        } else {
            par::map_collect_seq(vertices, eval)
        };
        let mut out = VectorField::zero();
        for row in rows {
            let (x, v) = row?;
            out.insert(x, v);
        }
        Ok(out)
    }

    /// The finitely supported field `𝓜f`, with
    /// `supp(𝓜f) ⊆ ball(supp f, 1)` and zero vectors pruned.
    ///
    /// Rows are evaluated through the parallel fan-out when the `parallel`
    /// feature is enabled; results are identical either way.
    pub fn apply_supported(&self, f: &VectorField) -> Result<VectorField> {
        let verts = self.graph.ball_of_set(f.support().cloned(), 1)?;
        self.apply_on_vertices(f, verts.into_iter().collect(), true)
    }

    /// Sequential reference implementation of [`apply_supported`].
    ///
    /// [`apply_supported`]: MagneticOperator::apply_supported
    pub fn apply_supported_seq(&self, f: &VectorField) -> Result<VectorField> {
        let verts = self.graph.ball_of_set(f.support().cloned(), 1)?;
        self.apply_on_vertices(f, verts.into_iter().collect(), false)
    }

    /// The operator `(b, −Φ, −W − 2·deg·I)`, whose action is the exact
    /// negation of this operator's action on every finitely supported
    /// field.
    pub fn negated(&self) -> Self {
        let graph = self.graph.clone();
        let bundle = self.bundle.clone();
        let endo = self.endo.clone();
        let negated_endo = Endomorphism::from_fn(move |x| {
            let dim = bundle.dim(x);
            let base = match endo.raw(x) {
                Some(m) => {
                    if m.nrows() != dim || m.ncols() != dim {
                        // Malformed entry: hand it through unchanged so the
                        // usual dimension checks fire on application.
                        return Some(m);
                    }
                    m
                }
                None => DMatrix::zeros(dim, dim),
            };
            let deg = match graph.neighbors(x) {
                Ok(n) => n.iter().map(|(_, w)| w).sum::<f64>(),
                Err(_) => return None,
            };
            let shift = DMatrix::<Complex64>::identity(dim, dim).scale(2.0 * deg);
            Some(-base - shift)
        });
        MagneticOperator::new(
            self.graph.clone(),
            self.bundle.clone(),
            self.connection.negated(),
            negated_endo,
        )
    }
}

/// The quadratic form
/// `q_V(h) = ½ Σ_{x,y} b(x,y)|h(x) − h(y)|² + Σ_x V(x)|h(x)|²`
/// for a finitely supported scalar field `h`.
///
/// Each edge with at least one endpoint in the support is visited exactly
/// once (the ½ cancels against double counting), so the cost is
/// `O(|supp h| · maxdeg)`.
pub fn quadratic_form(graph: &GraphOracle, v: &ScalarPotential, h: &VectorField) -> Result<f64> {
    if let Some(x) = h.iter().find(|(_, vec)| vec.len() != 1).map(|(x, _)| x) {
        return Err(Error::NonScalarFiber(x.clone()));
    }
    let mut edge_sum = 0.0;
    let mut pot_sum = 0.0;
    for (x, hx) in h.iter() {
        let hx = hx[0];
        for (y, b) in graph.neighbors(x)? {
            match h.get(&y) {
                Some(hy) => {
                    // Both endpoints in the support: count once, from the
                    // smaller endpoint.
                    if *x < y {
                        edge_sum += b * (hx - hy[0]).norm_sqr();
                    }
                }
                None => edge_sum += b * hx.norm_sqr(),
            }
        }
        pot_sum += v.value(x) * hx.norm_sqr();
    }
    Ok(edge_sum + pot_sum)
}

/// The symmetric matrix `Q` of `q_V` on the span of deltas over `k`:
/// diagonal `deg(x) + V(x)` (full degree, edges leaving `k` included),
/// off-diagonal `−b(x,y)`. Satisfies `hᵀQh = q_V(h)` for every `h`
/// supported in `k`.
pub fn form_matrix(
    graph: &GraphOracle,
    v: &ScalarPotential,
    k: &[VertexId],
) -> Result<DMatrix<f64>> {
    let index: BTreeMap<&VertexId, usize> = k.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let n = k.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for (i, x) in k.iter().enumerate() {
        let mut deg = 0.0;
        for (y, b) in graph.neighbors(x)? {
            deg += b;
            if let Some(&j) = index.get(&y) {
                q[(i, j)] = -b;
            }
        }
        q[(i, i)] = deg + v.value(x);
    }
    Ok(q)
}

/// `|(φ, 𝓜ψ) − (𝓜φ, ψ)|` — zero in exact arithmetic for every valid
/// operator (Green symmetry), so the returned defect is pure roundoff.
pub fn green_symmetry_defect(
    m: &MagneticOperator,
    phi: &VectorField,
    psi: &VectorField,
) -> Result<f64> {
    let lhs = pairing(phi, &m.apply_supported(psi)?)?;
    let rhs = pairing(&m.apply_supported(phi)?, psi)?;
    Ok((lhs - rhs).norm())
}

/// `(φ, 𝓜φ) − q_{W_min}(|φ|)`, nonnegative up to roundoff for every valid
/// operator (Kato domination).
pub fn domination_defect(m: &MagneticOperator, phi: &VectorField) -> Result<f64> {
    let energy = pairing(phi, &m.apply_supported(phi)?)?.re;
    let abs = phi.abs_field();
    let mut wmin = BTreeMap::new();
    for x in phi.support() {
        wmin.insert(x.clone(), m.w_min_at(x)?);
    }
    let v = ScalarPotential::from_map(wmin, 0.0);
    let form = quadratic_form(m.graph(), &v, &abs)?;
    Ok(energy - form)
}
