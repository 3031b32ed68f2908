//! Hermitian vector bundles: fiber dimensions, unitary connections, and
//! Hermitian endomorphisms with their extreme eigenvalues.
//!
//! Fibers carry the standard complex dot product (conjugate-linear in the
//! first slot). Connections are stored only on edges; `phi(x, y)` maps the
//! fiber over `y` into the fiber over `x` and must be unitary with
//! `phi(y, x) = phi(x, y)†`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphOracle, VertexId};
use crate::linalg;

/// Tolerance for the unitarity / compatibility / Hermiticity checks.
/// Matches double-precision eigensolver accuracy at fiber dims ≤ 16.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Per-vertex fiber dimensions of a Hermitian vector bundle.
#[derive(Clone)]
pub struct HermitianBundle {
    dim_fn: Arc<dyn Fn(&VertexId) -> usize + Send + Sync>,
}

impl HermitianBundle {
    /// The trivial line bundle: every fiber is ℂ.
    pub fn trivial() -> Self {
        HermitianBundle::constant(1)
    }

    /// Constant fiber dimension `d ≥ 1`.
    pub fn constant(d: usize) -> Self {
        assert!(d >= 1, "fiber dimension must be >= 1");
        HermitianBundle {
            dim_fn: Arc::new(move |_| d),
        }
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&VertexId) -> usize + Send + Sync + 'static,
    {
        HermitianBundle { dim_fn: Arc::new(f) }
    }

    /// Dimensions from a map, `default` elsewhere.
    pub fn from_map(map: BTreeMap<VertexId, usize>, default: usize) -> Self {
        assert!(default >= 1, "fiber dimension must be >= 1");
        HermitianBundle::from_fn(move |x| map.get(x).copied().unwrap_or(default))
    }

    pub fn dim(&self, x: &VertexId) -> usize {
        (self.dim_fn)(x)
    }
}

type EdgeFn = dyn Fn(&VertexId, &VertexId) -> Option<DMatrix<Complex64>> + Send + Sync;

/// A unitary connection. `None` from the inner function means the identity
/// on the (shared) fiber of the edge; the default connection is identity
/// everywhere.
#[derive(Clone)]
pub struct Connection {
    edge_fn: Arc<EdgeFn>,
    negated: bool,
}

impl Connection {
    /// The identity connection.
    pub fn identity() -> Self {
        Connection {
            edge_fn: Arc::new(|_, _| None),
            negated: false,
        }
    }

    /// Wraps a function returning `Some(matrix)` for edges with a
    /// non-identity transport and `None` for identity.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&VertexId, &VertexId) -> Option<DMatrix<Complex64>> + Send + Sync + 'static,
    {
        Connection {
            edge_fn: Arc::new(f),
            negated: false,
        }
    }

    /// Builds a connection from explicitly stored directed entries. For any
    /// stored `(x, y) → m` the reverse direction falls back to `m†` when it
    /// is not stored itself, so the compatibility invariant holds by
    /// construction for unitary `m`.
    pub fn from_edge_map(map: BTreeMap<(VertexId, VertexId), DMatrix<Complex64>>) -> Self {
        let map = Arc::new(map);
        Connection::from_fn(move |x, y| {
            if let Some(m) = map.get(&(x.clone(), y.clone())) {
                return Some(m.clone());
            }
            map.get(&(y.clone(), x.clone())).map(|m| m.adjoint())
        })
    }

    /// Materializes `phi(x, y)` with the expected shape
    /// `fiber_dim(x) × fiber_dim(y)`.
    pub fn matrix(&self, x: &VertexId, y: &VertexId, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
        let m = match (self.edge_fn)(x, y) {
            Some(m) => {
                if m.nrows() != rows || m.ncols() != cols {
                    return Err(Error::DimensionMismatch {
                        vertex: y.clone(),
                        expected: rows * cols,
                        got: m.nrows() * m.ncols(),
                    });
                }
                m
            }
            None => {
                if rows != cols {
                    return Err(Error::DimensionMismatch {
                        vertex: y.clone(),
                        expected: rows,
                        got: cols,
                    });
                }
                DMatrix::identity(rows, cols)
            }
        };
        Ok(if self.negated { -m } else { m })
    }

    /// The connection `−Φ`. Stays unitary and compatible; applying twice
    /// returns the original exactly.
    pub fn negated(&self) -> Self {
        Connection {
            edge_fn: self.edge_fn.clone(),
            negated: !self.negated,
        }
    }
}

type VertexMatrixFn = dyn Fn(&VertexId) -> Option<DMatrix<Complex64>> + Send + Sync;

/// A Hermitian bundle endomorphism `W`. `None` from the inner function
/// means the zero map; the default endomorphism is zero everywhere.
#[derive(Clone)]
pub struct Endomorphism {
    vertex_fn: Arc<VertexMatrixFn>,
}

impl Endomorphism {
    pub fn zero() -> Self {
        Endomorphism {
            vertex_fn: Arc::new(|_| None),
        }
    }

    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&VertexId) -> Option<DMatrix<Complex64>> + Send + Sync + 'static,
    {
        Endomorphism {
            vertex_fn: Arc::new(f),
        }
    }

    pub fn from_map(map: BTreeMap<VertexId, DMatrix<Complex64>>) -> Self {
        let map = Arc::new(map);
        Endomorphism::from_fn(move |x| map.get(x).cloned())
    }

    /// A real multiplication operator: `W(x) = v(x)·I`.
    pub fn from_real_fn<F>(v: F) -> Self
    where
        F: Fn(&VertexId) -> f64 + Send + Sync + 'static,
    {
        // Scalar entries are emitted as 1×1 blocks; bundles with larger
        // fibers should scale the identity themselves via from_fn.
        Endomorphism::from_fn(move |x| {
            Some(DMatrix::from_element(1, 1, Complex64::new(v(x), 0.0)))
        })
    }

    pub(crate) fn raw(&self, x: &VertexId) -> Option<DMatrix<Complex64>> {
        (self.vertex_fn)(x)
    }

    /// Materializes `W(x)` with the expected square shape `dim × dim`.
    pub fn matrix(&self, x: &VertexId, dim: usize) -> Result<DMatrix<Complex64>> {
        match (self.vertex_fn)(x) {
            None => Ok(DMatrix::zeros(dim, dim)),
            Some(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        vertex: x.clone(),
                        expected: dim,
                        got: m.nrows().max(m.ncols()),
                    });
                }
                Ok(m)
            }
        }
    }

    fn checked_hermitian(&self, x: &VertexId, dim: usize) -> Result<DMatrix<Complex64>> {
        let m = self.matrix(x, dim)?;
        let defect = linalg::hermitian_defect(&m);
        if defect > VALIDATION_TOL {
            return Err(Error::NonHermitian {
                vertex: x.clone(),
                defect,
            });
        }
        Ok(m)
    }

    /// Smallest eigenvalue of `W(x)`.
    pub fn w_min(&self, x: &VertexId, dim: usize) -> Result<f64> {
        let m = self.checked_hermitian(x, dim)?;
        if dim == 1 {
            return Ok(m[(0, 0)].re);
        }
        Ok(linalg::hermitian_eigenvalues(&m)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// Largest eigenvalue of `W(x)`.
    pub fn w_max(&self, x: &VertexId, dim: usize) -> Result<f64> {
        let m = self.checked_hermitian(x, dim)?;
        if dim == 1 {
            return Ok(m[(0, 0)].re);
        }
        Ok(linalg::hermitian_eigenvalues(&m)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// A single validation failure. Violations are data, not errors: `validate`
/// reports all of them instead of stopping at the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    Unitarity { x: VertexId, y: VertexId, defect: f64 },
    Compatibility { x: VertexId, y: VertexId, defect: f64 },
    Hermiticity { x: VertexId, defect: f64 },
    FiberDimension { x: VertexId, y: VertexId },
    ConnectionShape { x: VertexId, y: VertexId },
    EndomorphismShape { x: VertexId },
}

/// Checks unitarity, compatibility, Hermiticity, and dimension matching on
/// every vertex of `vertices` and every edge incident to it (including
/// edges leaving the set, which operator evaluation also touches).
pub fn validate(
    graph: &GraphOracle,
    bundle: &HermitianBundle,
    connection: &Connection,
    endo: &Endomorphism,
    vertices: &std::collections::BTreeSet<VertexId>,
) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    for x in vertices {
        let dx = bundle.dim(x);
        match endo.matrix(x, dx) {
            Err(_) => out.push(Violation::EndomorphismShape { x: x.clone() }),
            Ok(m) => {
                let defect = linalg::hermitian_defect(&m);
                if defect > VALIDATION_TOL {
                    out.push(Violation::Hermiticity {
                        x: x.clone(),
                        defect,
                    });
                }
            }
        }
        for (y, _) in graph.neighbors(x)? {
            // Each edge inside the set is reported once, from its smaller
            // endpoint; edges leaving the set are reported from inside.
            if vertices.contains(&y) && y < *x {
                continue;
            }
            let dy = bundle.dim(&y);
            if dx != dy {
                out.push(Violation::FiberDimension {
                    x: x.clone(),
                    y: y.clone(),
                });
                continue;
            }
            let fwd = connection.matrix(x, &y, dx, dy);
            let bwd = connection.matrix(&y, x, dy, dx);
            match (fwd, bwd) {
                (Ok(fwd), Ok(bwd)) => {
                    let defect = linalg::unitarity_defect(&fwd);
                    if defect > VALIDATION_TOL {
                        out.push(Violation::Unitarity {
                            x: x.clone(),
                            y: y.clone(),
                            defect,
                        });
                    }
                    let compat = (&bwd - fwd.adjoint()).map(|z| z.norm()).max();
                    if compat > VALIDATION_TOL {
                        out.push(Violation::Compatibility {
                            x: x.clone(),
                            y: y.clone(),
                            defect: compat,
                        });
                    }
                }
                _ => out.push(Violation::ConnectionShape {
                    x: x.clone(),
                    y: y.clone(),
                }),
            }
        }
    }
    Ok(out)
}
