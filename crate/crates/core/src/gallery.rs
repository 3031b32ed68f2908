//! Built-in graph generators and canonical objects: integer lattices, rays,
//! trees, cycles and paths, the summable-weight star (exposed through finite
//! truncations), and the hexagram graph carrying a finitely supported
//! eigenfunction at eigenvalue 6, optionally glued to an infinite ray.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::graph::{GraphOracle, VertexId};

/// A named generator with its parameters.
///
/// Infinite generators assert infinite components; finite ones do not. The
/// star is special: the full graph is not locally finite, so only finite
/// truncations are representable, and those carry a truncation marker
/// instead of the assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    /// ℤ with unit weights.
    LatticeZ,
    /// ℤ² with unit weights.
    LatticeZ2,
    /// The half-line 0 ∼ 1 ∼ 2 ∼ ⋯ with unit weights.
    Ray,
    /// The infinite binary tree, heap-indexed from root 1.
    BinaryTree,
    /// Center 0 joined to n = 1..=truncation with weight rate^n
    /// (summable for 0 < rate < 1). A finite shadow of the star whose full
    /// version is not locally finite.
    InfiniteStar { truncation: usize, rate: f64 },
    /// Twelve vertices: the cycle a_1 ∼ ⋯ ∼ a_6 ∼ a_1 plus outer vertices
    /// b_j ∼ a_j, b_j ∼ a_{j+1 (mod 6)}, unit weights.
    Hexagram,
    /// The hexagram with an infinite ray o ∼ 1 ∼ 2 ∼ ⋯ glued at b_1 ∼ o.
    HexagramGluedRay,
    /// The cycle on `len ≥ 3` vertices.
    Cycle { len: usize },
    /// The path on `len ≥ 1` vertices (a single isolated vertex for 1).
    Path { len: usize },
    /// Disjoint union of two integer-token generators; tokens become
    /// `(0, k)` on the left and `(1, k)` on the right.
    DisjointUnion(Box<GeneratorSpec>, Box<GeneratorSpec>),
}

fn hex_index(i: i64) -> i64 {
    (i - 1).rem_euclid(6) + 1
}

fn hexagram_neighbors(x: &VertexId) -> Option<Vec<(VertexId, f64)>> {
    match x {
        VertexId::Tag(t, i) if t == "a" && (1..=6).contains(i) => Some(vec![
            (VertexId::tag("a", hex_index(i - 1)), 1.0),
            (VertexId::tag("a", hex_index(i + 1)), 1.0),
            (VertexId::tag("b", hex_index(i - 1)), 1.0),
            (VertexId::tag("b", *i), 1.0),
        ]),
        VertexId::Tag(t, j) if t == "b" && (1..=6).contains(j) => Some(vec![
            (VertexId::tag("a", *j), 1.0),
            (VertexId::tag("a", hex_index(j + 1)), 1.0),
        ]),
        _ => None,
    }
}

/// True for generators whose every vertex token is a plain integer; these
/// are the ones a disjoint union can relabel losslessly.
fn integer_tokens(spec: &GeneratorSpec) -> bool {
    matches!(
        spec,
        GeneratorSpec::LatticeZ
            | GeneratorSpec::Ray
            | GeneratorSpec::BinaryTree
            | GeneratorSpec::InfiniteStar { .. }
            | GeneratorSpec::Cycle { .. }
            | GeneratorSpec::Path { .. }
    )
}

impl GeneratorSpec {
    /// Instantiates the generator as a neighbor oracle.
    pub fn make_graph(&self) -> Result<GraphOracle> {
        match self {
            GeneratorSpec::LatticeZ => Ok(GraphOracle::from_fn("lattice_z", true, |x| match x {
                VertexId::Int(k) => Some(vec![
                    (VertexId::Int(k - 1), 1.0),
                    (VertexId::Int(k + 1), 1.0),
                ]),
                _ => None,
            })),
            GeneratorSpec::LatticeZ2 => {
                Ok(GraphOracle::from_fn("lattice_z2", true, |x| match x {
                    VertexId::Pair(i, j) => Some(vec![
                        (VertexId::Pair(i - 1, *j), 1.0),
                        (VertexId::Pair(i + 1, *j), 1.0),
                        (VertexId::Pair(*i, j - 1), 1.0),
                        (VertexId::Pair(*i, j + 1), 1.0),
                    ]),
                    _ => None,
                }))
            }
            GeneratorSpec::Ray => Ok(GraphOracle::from_fn("ray", true, |x| match x {
                VertexId::Int(0) => Some(vec![(VertexId::Int(1), 1.0)]),
                VertexId::Int(k) if *k > 0 => Some(vec![
                    (VertexId::Int(k - 1), 1.0),
                    (VertexId::Int(k + 1), 1.0),
                ]),
                _ => None,
            })),
            GeneratorSpec::BinaryTree => {
                Ok(GraphOracle::from_fn("binary_tree", true, |x| match x {
                    VertexId::Int(1) => Some(vec![
                        (VertexId::Int(2), 1.0),
                        (VertexId::Int(3), 1.0),
                    ]),
                    VertexId::Int(k) if *k > 1 => Some(vec![
                        (VertexId::Int(k / 2), 1.0),
                        (VertexId::Int(2 * k), 1.0),
                        (VertexId::Int(2 * k + 1), 1.0),
                    ]),
                    _ => None,
                }))
            }
            GeneratorSpec::InfiniteStar { truncation, rate } => {
                if *truncation < 1 {
                    return Err(Error::InvalidParams(
                        "star truncation must be >= 1".to_string(),
                    ));
                }
                if !(*rate > 0.0 && *rate < 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "star weight rate must lie in (0, 1), got {rate}"
                    )));
                }
                let n = *truncation as i64;
                let rate = *rate;
                Ok(GraphOracle::from_fn(
                    &format!("infinite_star (truncated at {truncation})"),
                    false,
                    move |x| match x {
                        VertexId::Int(0) => Some(
                            (1..=n)
                                .map(|k| (VertexId::Int(k), rate.powi(k as i32)))
                                .collect(),
                        ),
                        VertexId::Int(k) if (1..=n).contains(k) => {
                            Some(vec![(VertexId::Int(0), rate.powi(*k as i32))])
                        }
                        _ => None,
                    },
                )
                .with_truncation(*truncation))
            }
            GeneratorSpec::Hexagram => {
                Ok(GraphOracle::from_fn("hexagram", false, hexagram_neighbors))
            }
            GeneratorSpec::HexagramGluedRay => Ok(GraphOracle::from_fn(
                "hexagram_glued_ray",
                true,
                |x| match x {
                    VertexId::Tag(t, 1) if t == "b" => {
                        let mut n = hexagram_neighbors(x)?;
                        n.push((VertexId::name("o"), 1.0));
                        Some(n)
                    }
                    VertexId::Tag(..) => hexagram_neighbors(x),
                    VertexId::Name(o) if o == "o" => Some(vec![
                        (VertexId::tag("b", 1), 1.0),
                        (VertexId::Int(1), 1.0),
                    ]),
                    VertexId::Int(1) => Some(vec![
                        (VertexId::name("o"), 1.0),
                        (VertexId::Int(2), 1.0),
                    ]),
                    VertexId::Int(k) if *k > 1 => Some(vec![
                        (VertexId::Int(k - 1), 1.0),
                        (VertexId::Int(k + 1), 1.0),
                    ]),
                    _ => None,
                },
            )),
            GeneratorSpec::Cycle { len } => {
                if *len < 3 {
                    return Err(Error::InvalidParams(format!(
                        "cycle length must be >= 3, got {len}"
                    )));
                }
                let n = *len as i64;
                Ok(GraphOracle::from_fn(
                    &format!("cycle({len})"),
                    false,
                    move |x| match x {
                        VertexId::Int(k) if (0..n).contains(k) => Some(vec![
                            (VertexId::Int((k - 1).rem_euclid(n)), 1.0),
                            (VertexId::Int((k + 1).rem_euclid(n)), 1.0),
                        ]),
                        _ => None,
                    },
                ))
            }
            GeneratorSpec::Path { len } => {
                if *len < 1 {
                    return Err(Error::InvalidParams("path length must be >= 1".to_string()));
                }
                let n = *len as i64;
                Ok(GraphOracle::from_fn(
                    &format!("path({len})"),
                    false,
                    move |x| match x {
                        VertexId::Int(k) if (0..n).contains(k) => {
                            let mut out = Vec::new();
                            if *k > 0 {
                                out.push((VertexId::Int(k - 1), 1.0));
                            }
                            if *k < n - 1 {
                                out.push((VertexId::Int(k + 1), 1.0));
                            }
                            Some(out)
                        }
                        _ => None,
                    },
                ))
            }
            GeneratorSpec::DisjointUnion(left, right) => {
                if !integer_tokens(left) || !integer_tokens(right) {
                    return Err(Error::InvalidParams(
                        "disjoint_union requires integer-token generators on both sides"
                            .to_string(),
                    ));
                }
                let lg = left.make_graph()?;
                let rg = right.make_graph()?;
                let asserted = lg.infinite_components_asserted()
                    && rg.infinite_components_asserted();
                let description = format!(
                    "disjoint_union({}, {})",
                    lg.description(),
                    rg.description()
                );
                Ok(GraphOracle::from_fn(&description, asserted, move |x| {
                    let (side, inner, k) = match x {
                        VertexId::Pair(0, k) => (0, &lg, *k),
                        VertexId::Pair(1, k) => (1, &rg, *k),
                        _ => return None,
                    };
                    inner.neighbors(&VertexId::Int(k)).ok().map(|ns| {
                        ns.into_iter()
                            .map(|(y, w)| match y {
                                VertexId::Int(m) => (VertexId::Pair(side, m), w),
                                other => unreachable!(
                                    "integer-token generator produced {other}"
                                ),
                            })
                            .collect()
                    })
                }))
            }
        }
    }

    /// A canonical vertex of the generated graph, used as the default
    /// center for certificates and demos.
    pub fn base_vertex(&self) -> VertexId {
        match self {
            GeneratorSpec::LatticeZ
            | GeneratorSpec::Ray
            | GeneratorSpec::InfiniteStar { .. }
            | GeneratorSpec::Cycle { .. }
            | GeneratorSpec::Path { .. } => VertexId::Int(0),
            GeneratorSpec::BinaryTree => VertexId::Int(1),
            GeneratorSpec::LatticeZ2 => VertexId::Pair(0, 0),
            GeneratorSpec::Hexagram | GeneratorSpec::HexagramGluedRay => VertexId::tag("a", 1),
            GeneratorSpec::DisjointUnion(left, _) => match left.base_vertex() {
                VertexId::Int(k) => VertexId::Pair(0, k),
                other => other,
            },
        }
    }
}

/// The finitely supported eigenfunction of the hexagram Laplacian at
/// eigenvalue 6: `φ(a_i) = (−1)^i`, zero on the outer vertices, and zero on
/// the glued ray. Works unchanged on both hexagram generators.
pub fn hexagram_eigenfunction() -> VectorField {
    VectorField::scalar((1..=6).map(|i| {
        (
            VertexId::tag("a", i),
            Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0),
        )
    }))
}

/// Zero-sum defect `|f(0) + Σ_{n=1}^{N} f(n)|` of a scalar field on the
/// star truncated at `N`. On the truncated star, `𝓛g = f` is solvable
/// exactly when this vanishes — the finite shadow of the image
/// characterization of the full star.
pub fn star_image_defect(f: &VectorField, truncation: usize) -> Result<f64> {
    let n = truncation as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, _) in f.iter() {
        match x {
            VertexId::Int(k) if (0..=n).contains(k) => sum += f.value(x)?,
            _ => return Err(Error::SupportOutsideStar(x.clone())),
        }
    }
    Ok(sum.norm())
}
