//! Finitely supported vector fields, dual pairings, and the seminorms `p_K`.
//!
//! A field assigns to each vertex a complex vector in that vertex's fiber;
//! vertices absent from the map carry the zero vector. Inner products are
//! the standard complex dot product, conjugate-linear in the first slot.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Serde helper: a complex number as `[re, im]` (a bare number is accepted
/// on input and read as purely real).
pub mod complex_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        z: &Complex64,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Complex64, D::Error> {
        Ok(ComplexRepr::deserialize(d)?.into())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum ComplexRepr {
    Real(f64),
    Parts(f64, f64),
}

impl From<ComplexRepr> for Complex64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Real(re) => Complex64::new(re, 0.0),
            ComplexRepr::Parts(re, im) => Complex64::new(re, im),
        }
    }
}

/// A finitely supported vector field. Zero vectors are pruned on insertion,
/// so the stored key set is exactly the support.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorField {
    entries: BTreeMap<VertexId, DVector<Complex64>>,
}

impl VectorField {
    pub fn zero() -> Self {
        VectorField::default()
    }

    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (VertexId, DVector<Complex64>)>,
    {
        let mut f = VectorField::zero();
        for (x, v) in entries {
            f.insert(x, v);
        }
        f
    }

    /// Builds a scalar (fiber dimension 1) field from complex values.
    pub fn scalar<I>(values: I) -> Self
    where
        I: IntoIterator<Item = (VertexId, Complex64)>,
    {
        VectorField::from_entries(
            values
                .into_iter()
                .map(|(x, z)| (x, DVector::from_element(1, z))),
        )
    }

    /// Builds a scalar field from real values.
    pub fn scalar_real<I>(values: I) -> Self
    where
        I: IntoIterator<Item = (VertexId, f64)>,
    {
        VectorField::scalar(
            values
                .into_iter()
                .map(|(x, t)| (x, Complex64::new(t, 0.0))),
        )
    }

    /// The delta field carrying `v` at `x` and zero elsewhere.
    pub fn delta(x: VertexId, v: DVector<Complex64>) -> Self {
        VectorField::from_entries([(x, v)])
    }

    /// The scalar delta field with value 1 at `x`.
    pub fn scalar_delta(x: VertexId) -> Self {
        VectorField::scalar([(x, Complex64::new(1.0, 0.0))])
    }

    /// Inserts a vector, pruning exact zeros so support queries stay exact.
    pub fn insert(&mut self, x: VertexId, v: DVector<Complex64>) {
        if v.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            self.entries.remove(&x);
        } else {
            self.entries.insert(x, v);
        }
    }

    pub fn get(&self, x: &VertexId) -> Option<&DVector<Complex64>> {
        self.entries.get(x)
    }

    /// Scalar value at `x`; zero off the support.
    ///
    /// Errors with `NonScalarFiber` if the stored vector has length > 1.
    pub fn value(&self, x: &VertexId) -> Result<Complex64> {
        match self.entries.get(x) {
            None => Ok(Complex64::new(0.0, 0.0)),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(Error::NonScalarFiber(x.clone())),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &DVector<Complex64>)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &VertexId> {
        self.entries.keys()
    }

    pub fn support_set(&self) -> BTreeSet<VertexId> {
        self.entries.keys().cloned().collect()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when every stored fiber vector has length 1.
    pub fn is_scalar(&self) -> bool {
        self.entries.values().all(|v| v.len() == 1)
    }

    /// `|f|(x) = ‖f(x)‖` on the support; vertices with zero vectors do not
    /// appear (support is preserved exactly).
    pub fn pointwise_norm(&self) -> BTreeMap<VertexId, f64> {
        self.entries
            .iter()
            .map(|(x, v)| (x.clone(), v.norm()))
            .collect()
    }

    /// `|f|` as a scalar field (used on the domination side of Kato).
    pub fn abs_field(&self) -> VectorField {
        VectorField::scalar_real(self.entries.iter().map(|(x, v)| (x.clone(), v.norm())))
    }

    /// ℓ² norm `(Σ_x ‖f(x)‖²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        self.entries
            .values()
            .map(|v| v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Sup norm `max_x ‖f(x)‖`.
    pub fn norm_sup(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, z: Complex64) -> VectorField {
        VectorField::from_entries(self.entries.iter().map(|(x, v)| (x.clone(), v * z)))
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        let mut out = self.clone();
        for (x, v) in &other.entries {
            let sum = match out.entries.get(x) {
                Some(u) => {
                    if u.len() != v.len() {
                        return Err(Error::DimensionMismatch {
                            vertex: x.clone(),
                            expected: u.len(),
                            got: v.len(),
                        });
                    }
                    u + v
                }
                None => v.clone(),
            };
            out.insert(x.clone(), sum);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }
}

/// Dual pairing `(φ, f) = Σ_x ⟨φ(x), f(x)⟩_x`, conjugate-linear in `φ`.
/// The sum runs over the (finite) intersection of the supports.
pub fn pairing(phi: &VectorField, f: &VectorField) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, pv) in phi.iter() {
        if let Some(fv) = f.get(x) {
            if pv.len() != fv.len() {
                return Err(Error::DimensionMismatch {
                    vertex: x.clone(),
                    expected: pv.len(),
                    got: fv.len(),
                });
            }
            acc += pv.dotc(fv);
        }
    }
    Ok(acc)
}

/// Seminorm `p_K(f) = Σ_{x ∈ K} ‖f(x)‖`.
pub fn seminorm_pk(f: &VectorField, k: &BTreeSet<VertexId>) -> f64 {
    k.iter()
        .filter_map(|x| f.get(x).map(|v| v.norm()))
        .sum()
}

/// Normalized overlap `|⟨a, b⟩| / (‖a‖·‖b‖)`: alignment of two fields after
/// phase adjustment. Zero when either field vanishes.
pub fn overlap(a: &VectorField, b: &VectorField) -> Result<f64> {
    let na = a.norm_l2();
    let nb = b.norm_l2();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(pairing(a, b)?.norm() / (na * nb))
}

impl Serialize for VectorField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (x, v) in &self.entries {
            let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
            map.serialize_entry(&x.to_string(), &pairs)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for VectorField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, Vec<ComplexRepr>>::deserialize(d)?;
        Ok(VectorField::from_entries(raw.into_iter().map(|(k, v)| {
            (
                VertexId::parse(&k),
                DVector::from_iterator(v.len(), v.into_iter().map(Complex64::from)),
            )
        })))
    }
}
