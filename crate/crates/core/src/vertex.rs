//! Local four-point vertex V_{ν₁ν₂ν₃ν₄} over the orbitals (s, p_x, p_y).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Band;

/// The eight symmetry classes allowed by the point group and time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    Ssss,
    Xxxx,
    Ssxx,
    Sxsx,
    Xssx,
    Xxyy,
    Xyxy,
    Yxxy,
}

const S: usize = 0;
const X: usize = 1;
const Y: usize = 2;

impl VertexClass {
    pub const ALL: [VertexClass; 8] = [
        VertexClass::Ssss,
        VertexClass::Xxxx,
        VertexClass::Ssxx,
        VertexClass::Sxsx,
        VertexClass::Xssx,
        VertexClass::Xxyy,
        VertexClass::Xyxy,
        VertexClass::Yxxy,
    ];

    /// Orbital index tuples belonging to the class.
    pub fn members(self) -> &'static [[usize; 4]] {
        match self {
            VertexClass::Ssss => &[[S, S, S, S]],
            VertexClass::Xxxx => &[[X, X, X, X], [Y, Y, Y, Y]],
            VertexClass::Ssxx => &[[S, S, X, X], [S, S, Y, Y], [X, X, S, S], [Y, Y, S, S]],
            VertexClass::Sxsx => &[[S, X, S, X], [S, Y, S, Y], [X, S, X, S], [Y, S, Y, S]],
            VertexClass::Xssx => &[[X, S, S, X], [Y, S, S, Y], [S, X, X, S], [S, Y, Y, S]],
            VertexClass::Xxyy => &[[X, X, Y, Y], [Y, Y, X, X]],
            VertexClass::Xyxy => &[[X, Y, X, Y], [Y, X, Y, X]],
            VertexClass::Yxxy => &[[Y, X, X, Y], [X, Y, Y, X]],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VertexClass::Ssss => "ssss",
            VertexClass::Xxxx => "xxxx",
            VertexClass::Ssxx => "ssxx",
            VertexClass::Sxsx => "sxsx",
            VertexClass::Xssx => "xssx",
            VertexClass::Xxyy => "xxyy",
            VertexClass::Xyxy => "xyxy",
            VertexClass::Yxxy => "yxxy",
        }
    }

    /// Class containing the index tuple, if any.
    pub fn of(indices: [usize; 4]) -> Option<VertexClass> {
        VertexClass::ALL.into_iter().find(|c| c.members().contains(&indices))
    }
}

impl fmt::Display for VertexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn flat(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 3 + b) * 3 + c) * 3 + d
}

/// Full 3⁴ real vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexTensor {
    #[serde(with = "serde_array81")]
    pub v: [f64; 81],
}

mod serde_array81 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; 81], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 81], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"81 entries"))
    }
}

impl Default for VertexTensor {
    fn default() -> Self {
        Self::zeros()
    }
}

impl VertexTensor {
    pub fn zeros() -> Self {
        VertexTensor { v: [0.0; 81] }
    }

    /// Builds a vertex from class values ordered as [`VertexClass::ALL`].
    pub fn from_classes(values: [f64; 8]) -> Self {
        let mut out = Self::zeros();
        for (class, value) in VertexClass::ALL.into_iter().zip(values) {
            out.set_class(class, value);
        }
        out
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.v[flat(a, b, c, d)]
    }

    pub fn at(&self, b: [Band; 4]) -> f64 {
        self.get(b[0].index(), b[1].index(), b[2].index(), b[3].index())
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, value: f64) {
        self.v[flat(a, b, c, d)] = value;
    }

    pub fn set_class(&mut self, class: VertexClass, value: f64) {
        for m in class.members() {
            self.set(m[0], m[1], m[2], m[3], value);
        }
    }

    /// Class average.
    pub fn class(&self, class: VertexClass) -> f64 {
        let members = class.members();
        members.iter().map(|m| self.get(m[0], m[1], m[2], m[3])).sum::<f64>() / members.len() as f64
    }

    /// Reduced view ordered as [`VertexClass::ALL`].
    pub fn classes(&self) -> [f64; 8] {
        VertexClass::ALL.map(|c| self.class(c))
    }

    /// Orthogonal projection onto the 8-class subspace.
    pub fn project(&self) -> Self {
        Self::from_classes(self.classes())
    }

    /// max |V − P(V)|.
    pub fn leakage(&self) -> f64 {
        let p = self.project();
        self.v.iter().zip(p.v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Entry of largest magnitude, reported by its class name.
    pub fn dominant_class(&self) -> VertexClass {
        let classes = self.classes();
        let mut best = 0;
        for i in 1..8 {
            if classes[i].abs() > classes[best].abs() {
                best = i;
            }
        }
        VertexClass::ALL[best]
    }

    /// Spinful vertex Γ_{1234} = V_{1234} δ_{α₁α₄} δ_{α₂α₃} − V_{2134} δ_{α₁α₃} δ_{α₂α₄}.
    ///
    /// Indices are spin-orbitals (band, spin) with spin 0 = ↑, 1 = ↓.
    pub fn gamma(&self, i: [(usize, usize); 4]) -> f64 {
        let [(n1, a1), (n2, a2), (n3, a3), (n4, a4)] = i;
        let mut out = 0.0;
        if a1 == a4 && a2 == a3 {
            out += self.get(n1, n2, n3, n4);
        }
        if a1 == a3 && a2 == a4 {
            out -= self.get(n2, n1, n3, n4);
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        VertexTensor {
            v: self.v.map(|x| x * factor),
        }
    }

    pub fn axpy(&mut self, factor: f64, other: &VertexTensor) {
        for (a, b) in self.v.iter_mut().zip(other.v.iter()) {
            *a += factor * b;
        }
    }
}
