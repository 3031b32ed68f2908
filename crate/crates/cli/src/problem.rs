//! The JSON problem-file format and its loader.
//!
//! A problem file (format 1) bundles a graph (generator or explicit edge
//! list), an optional Hermitian bundle with connection and endomorphism or
//! a scalar potential shortcut, and named vector fields:
//!
//! ```json
//! {
//!   "format": 1,
//!   "graph": {"generator": "hexagram_glued_ray", "params": {}},
//!   "potential": {"constant": -6.0, "values": {}},
//!   "fields": {"rhs": {"a_1": [[1.0, 0.0]]}}
//! }
//! ```
//!
//! Explicit graphs list each undirected edge once (`"edges": [[u, v, w]]`);
//! the loader mirrors them. Complex numbers are `[re, im]` pairs (a bare
//! number is read as purely real), matrices are nested row-major arrays,
//! and vertex tokens are integers, `(i,j)` pairs, names, or `name_k` tags.
//! The `potential` stanza is the scalar shortcut and is mutually exclusive
//! with `bundle`, `connection`, and `endomorphism`.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use mso::bundle::{Connection, Endomorphism, HermitianBundle};
use mso::fields::VectorField;
use mso::gallery::GeneratorSpec;
use mso::graph::{GraphOracle, VertexId};
use mso::schroedinger::{MagneticOperator, ScalarPotential};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: u32,
    pub graph: GraphStanza,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<BundleStanza>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<ConnectionStanza>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endomorphism: Option<BTreeMap<VertexId, MatrixRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialStanza>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, VectorField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphStanza {
    Generator {
        generator: String,
        #[serde(default)]
        params: serde_json::Value,
    },
    Explicit {
        vertices: Vec<VertexId>,
        #[serde(default)]
        edges: Vec<(VertexId, VertexId, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleStanza {
    #[serde(default)]
    pub dims: BTreeMap<VertexId, usize>,
    #[serde(default = "default_dim")]
    pub default: usize,
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionStanza {
    pub edges: Vec<ConnectionEntry>,
}

/// `Φ_{u,v} = matrix`, shape `dim(u) × dim(v)`; the reverse direction
/// defaults to the adjoint when not listed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionEntry {
    pub u: VertexId,
    pub v: VertexId,
    pub matrix: MatrixRepr,
}

/// Scalar potential: `v(x) = values[x]`, falling back to `constant`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialStanza {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub values: BTreeMap<VertexId, f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Parts(f64, f64),
}

impl From<ComplexEntry> for Complex64 {
    fn from(e: ComplexEntry) -> Self {
        match e {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Parts(re, im) => Complex64::new(re, im),
        }
    }
}

/// A complex matrix as nested row-major arrays of `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRepr(pub Vec<Vec<ComplexEntry>>);

impl MatrixRepr {
    pub fn to_matrix(&self) -> anyhow::Result<DMatrix<Complex64>> {
        let rows = self.0.len();
        if rows == 0 {
            bail!("matrix has no rows");
        }
        let cols = self.0[0].len();
        if cols == 0 || self.0.iter().any(|r| r.len() != cols) {
            bail!("matrix rows must be nonempty and of equal length");
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| self.0[i][j].into()))
    }
}

/// A fully constructed problem: the oracle, the operator, named fields,
/// and the scalar-vs-bundle classification.
pub struct LoadedProblem {
    pub file: ProblemFile,
    pub graph: GraphOracle,
    pub operator: MagneticOperator,
    pub fields: BTreeMap<String, VectorField>,
    pub base_vertex: VertexId,
    pub potential: Option<ScalarPotential>,
    pub is_scalar: bool,
}

fn generator_from_stanza(name: &str, params: &serde_json::Value) -> anyhow::Result<GeneratorSpec> {
    #[derive(Deserialize)]
    struct LenParam {
        len: usize,
    }
    #[derive(Deserialize)]
    struct StarParams {
        truncation: usize,
        #[serde(default = "default_rate")]
        rate: f64,
    }
    fn default_rate() -> f64 {
        0.5
    }
    #[derive(Deserialize)]
    struct SideStanza {
        generator: String,
        #[serde(default)]
        params: serde_json::Value,
    }
    #[derive(Deserialize)]
    struct UnionParams {
        left: SideStanza,
        right: SideStanza,
    }

    let no_params = |spec: GeneratorSpec| -> anyhow::Result<GeneratorSpec> {
        if params.is_null() || params.as_object().is_some_and(|o| o.is_empty()) {
            Ok(spec)
        } else {
            bail!("generator {name} takes no parameters")
        }
    };

    match name {
        "lattice_z" => no_params(GeneratorSpec::LatticeZ),
        "lattice_z2" => no_params(GeneratorSpec::LatticeZ2),
        "ray" => no_params(GeneratorSpec::Ray),
        "binary_tree" => no_params(GeneratorSpec::BinaryTree),
        "hexagram" => no_params(GeneratorSpec::Hexagram),
        "hexagram_glued_ray" => no_params(GeneratorSpec::HexagramGluedRay),
        "cycle" => {
            let p: LenParam = serde_json::from_value(params.clone())
                .context("cycle expects params {\"len\": n}")?;
            Ok(GeneratorSpec::Cycle { len: p.len })
        }
        "path" => {
            let p: LenParam = serde_json::from_value(params.clone())
                .context("path expects params {\"len\": n}")?;
            Ok(GeneratorSpec::Path { len: p.len })
        }
        "infinite_star" => {
            let p: StarParams = serde_json::from_value(params.clone())
                .context("infinite_star expects params {\"truncation\": n, \"rate\": r}")?;
            Ok(GeneratorSpec::InfiniteStar {
                truncation: p.truncation,
                rate: p.rate,
            })
        }
        "disjoint_union" => {
            let p: UnionParams = serde_json::from_value(params.clone()).context(
                "disjoint_union expects params {\"left\": {...}, \"right\": {...}}",
            )?;
            let left = generator_from_stanza(&p.left.generator, &p.left.params)?;
            let right = generator_from_stanza(&p.right.generator, &p.right.params)?;
            Ok(GeneratorSpec::DisjointUnion(Box::new(left), Box::new(right)))
        }
        other => bail!("unknown generator {other:?}"),
    }
}

impl LoadedProblem {
    pub fn from_json(text: &str) -> anyhow::Result<LoadedProblem> {
        let file: ProblemFile = serde_json::from_str(text).context("parsing problem file")?;
        LoadedProblem::from_file(file)
    }

    pub fn from_file(file: ProblemFile) -> anyhow::Result<LoadedProblem> {
        if file.format != FORMAT_VERSION {
            bail!("unsupported format {} (expected {FORMAT_VERSION})", file.format);
        }

        let (graph, base_vertex) = match &file.graph {
            GraphStanza::Generator { generator, params } => {
                let spec = generator_from_stanza(generator, params)?;
                (spec.make_graph()?, spec.base_vertex())
            }
            GraphStanza::Explicit { vertices, edges } => {
                if vertices.is_empty() {
                    bail!("explicit graph needs at least one vertex");
                }
                let g = GraphOracle::finite(
                    "explicit graph",
                    vertices.iter().cloned(),
                    edges.iter().cloned(),
                )?;
                (g, vertices.iter().min().unwrap().clone())
            }
        };

        let scalar_shortcut = file.potential.is_some();
        if scalar_shortcut
            && (file.bundle.is_some() || file.connection.is_some() || file.endomorphism.is_some())
        {
            bail!("the scalar `potential` shortcut excludes bundle/connection/endomorphism");
        }

        let is_scalar = scalar_shortcut
            || (file.bundle.is_none() && file.connection.is_none() && file.endomorphism.is_none());

        let (operator, potential) = if scalar_shortcut {
            let stanza = file.potential.clone().unwrap();
            for x in stanza.values.keys() {
                if !graph.contains(x) {
                    bail!("potential references unknown vertex {x}");
                }
            }
            let v = ScalarPotential::from_map(
                stanza.values.into_iter().collect(),
                stanza.constant,
            );
            (
                MagneticOperator::scalar_laplacian(graph.clone(), v.clone()),
                Some(v),
            )
        } else {
            let bundle = match &file.bundle {
                None => HermitianBundle::trivial(),
                Some(stanza) => {
                    if stanza.default < 1 || stanza.dims.values().any(|d| *d < 1) {
                        bail!("fiber dimensions must be >= 1");
                    }
                    for x in stanza.dims.keys() {
                        if !graph.contains(x) {
                            bail!("bundle dims reference unknown vertex {x}");
                        }
                    }
                    HermitianBundle::from_map(
                        stanza.dims.clone().into_iter().collect(),
                        stanza.default,
                    )
                }
            };

            let connection = match &file.connection {
                None => Connection::identity(),
                Some(stanza) => {
                    let mut map = BTreeMap::new();
                    for entry in &stanza.edges {
                        let m = entry.matrix.to_matrix()?;
                        let du = bundle.dim(&entry.u);
                        let dv = bundle.dim(&entry.v);
                        if m.nrows() != du || m.ncols() != dv {
                            bail!(
                                "connection on ({}, {}) has shape {}×{}, expected {du}×{dv}",
                                entry.u,
                                entry.v,
                                m.nrows(),
                                m.ncols()
                            );
                        }
                        let adjacent = graph
                            .neighbors(&entry.u)
                            .with_context(|| format!("connection references {}", entry.u))?
                            .iter()
                            .any(|(y, _)| y == &entry.v);
                        if !adjacent {
                            bail!(
                                "connection entry ({}, {}) is not an edge of the graph",
                                entry.u,
                                entry.v
                            );
                        }
                        if map
                            .insert((entry.u.clone(), entry.v.clone()), m)
                            .is_some()
                        {
                            bail!("duplicate connection entry ({}, {})", entry.u, entry.v);
                        }
                    }
                    Connection::from_edge_map(map)
                }
            };

            let endo = match &file.endomorphism {
                None => Endomorphism::zero(),
                Some(entries) => {
                    let mut map = BTreeMap::new();
                    for (x, repr) in entries {
                        if !graph.contains(x) {
                            bail!("endomorphism references unknown vertex {x}");
                        }
                        let m = repr.to_matrix()?;
                        let d = bundle.dim(x);
                        if m.nrows() != d || m.ncols() != d {
                            bail!(
                                "endomorphism at {x} has shape {}×{}, expected {d}×{d}",
                                m.nrows(),
                                m.ncols()
                            );
                        }
                        map.insert(x.clone(), m);
                    }
                    Endomorphism::from_map(map)
                }
            };

            (
                MagneticOperator::new(graph.clone(), bundle, connection, endo),
                None,
            )
        };

        let mut fields = BTreeMap::new();
        for (name, field) in &file.fields {
            for (x, vec) in field.iter() {
                if !graph.contains(x) {
                    bail!("field {name:?} references unknown vertex {x}");
                }
                let d = operator.bundle().dim(x);
                if vec.len() != d {
                    bail!(
                        "field {name:?} at {x} has dimension {}, expected {d}",
                        vec.len()
                    );
                }
            }
            fields.insert(name.clone(), field.clone());
        }

        Ok(LoadedProblem {
            file,
            graph,
            operator,
            fields,
            base_vertex,
            potential,
            is_scalar,
        })
    }

    /// The potential used for scalar analyses; zero when the problem did
    /// not declare one (only legal for scalar problems).
    pub fn scalar_potential(&self) -> anyhow::Result<ScalarPotential> {
        if !self.is_scalar {
            bail!("not a scalar problem: bundle/connection/endomorphism present");
        }
        Ok(self.potential.clone().unwrap_or_default())
    }

    /// Canonical JSON of the problem (sorted keys), used for the digest and
    /// the report echo.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.file).expect("problem files serialize")
    }
}
