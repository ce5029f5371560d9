//! Electron-hole pairing channels B_{j_s, m_s, m_l; q}.
//!
//! A channel operator is a fermion bilinear Σ M_{ab} ψ†_a ψ_b over the six
//! spin-orbitals a = (ν, σ). It is stored as the 6×6 coefficient matrix M
//! in the orbital basis (s, p_x, p_y) ⊗ (↑, ↓); symmetry operations act on
//! that matrix in the angular-momentum basis q ∈ {+1, 0, -1}. All phase
//! conventions of the crate live in this module.

use std::fmt;

use nalgebra::{Matrix3, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::Band;
use crate::{Error, Result};

/// Coefficient matrix of a bilinear over the six spin-orbitals.
pub type PairMatrix = SMatrix<Complex64, 6, 6>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const ALL: [Spin; 2] = [Spin::Up, Spin::Down];

    /// Twice the projection, 2σ ∈ {+1, -1}.
    pub fn two_m(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    /// i^{2σ}
    fn i_pow_two_m(self) -> Complex64 {
        match self {
            Spin::Up => I,
            Spin::Down => -I,
        }
    }
}

/// Spin-orbital index a = 2ν + σ.
pub fn mode_index(band: Band, spin: Spin) -> usize {
    2 * band.index() + spin.index()
}

/// ½ ⊗ ½ Clebsch-Gordan coefficient ⟨½ m1; ½ m2 | j m⟩ (Condon-Shortley).
pub fn clebsch_gordan_half_half(m1: Spin, m2: Spin, j: u8, m: i8) -> f64 {
    if (m1.two_m() + m2.two_m()) != 2 * m as i32 || j > 1 || (m as i32).abs() > j as i32 {
        return 0.0;
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match (j, m1, m2) {
        (1, Spin::Up, Spin::Up) | (1, Spin::Down, Spin::Down) => 1.0,
        (1, _, _) => r,
        (0, Spin::Up, Spin::Down) => r,
        (0, Spin::Down, Spin::Up) => -r,
        _ => 0.0,
    }
}

/// Quantum numbers of a pairing operator ψ†_{q} ψ_{q+m_l} coupled to spin (j_s, m_s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelLabel {
    pub j_s: u8,
    pub m_s: i8,
    pub m_l: i8,
    pub q: i8,
}

impl ChannelLabel {
    pub fn new(j_s: u8, m_s: i8, m_l: i8, q: i8) -> Result<Self> {
        let label = ChannelLabel { j_s, m_s, m_l, q };
        label.validate()?;
        Ok(label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_s > 1 || (self.m_s as i32).abs() > self.j_s as i32 {
            return Err(Error::InvalidParameter(format!(
                "spin quantum numbers out of range in {self}"
            )));
        }
        if !(-1..=1).contains(&self.q) || !(-1..=1).contains(&(self.q + self.m_l)) {
            return Err(Error::InvalidParameter(format!(
                "q and q + m_l must lie in {{-1, 0, 1}} for {self}"
            )));
        }
        Ok(())
    }

    /// All 36 valid labels, ordered by (j_s, m_s, m_l, q).
    pub fn all() -> Vec<ChannelLabel> {
        let mut out = Vec::with_capacity(36);
        for (j_s, m_range) in [(0u8, 0i8..=0), (1, -1..=1)] {
            for m_s in m_range {
                for m_l in -2i8..=2 {
                    for q in -1i8..=1 {
                        let label = ChannelLabel { j_s, m_s, m_l, q };
                        if label.validate().is_ok() {
                            out.push(label);
                        }
                    }
                }
            }
        }
        out
    }

    /// B† = sign · B_{j_s, -m_s, -m_l; q + m_l} with sign = (-1)^{m_l + m_s + 1}.
    pub fn hermitian_conjugate(&self) -> (ChannelLabel, f64) {
        let partner = ChannelLabel {
            j_s: self.j_s,
            m_s: -self.m_s,
            m_l: -self.m_l,
            q: self.q + self.m_l,
        };
        let sign = if (self.m_l as i32 + self.m_s as i32 + 1).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        (partner, sign)
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B[{},{},{};{}]", self.j_s, self.m_s, self.m_l, self.q)
    }
}

/// Basis change T_{qν} from (s, p_x, p_y) to angular momentum q = (+1, 0, -1):
/// ψ_± = ∓(ψ_x ± iψ_y)/√2, ψ_0 = ψ_s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalTransform {
    pub matrix: Matrix3<Complex64>,
}

impl Default for OrbitalTransform {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let matrix = Matrix3::new(
            ZERO, -r * ONE,  -r * I,
            ONE,   ZERO,      ZERO,
            ZERO,  r * ONE,  -r * I,
        );
        OrbitalTransform { matrix }
    }
}

impl OrbitalTransform {
    /// Row of the matrix holding angular momentum q.
    pub fn row(q: i8) -> usize {
        (1 - q as i32) as usize
    }

    pub fn element(&self, q: i8, band: Band) -> Complex64 {
        self.matrix[(Self::row(q), band.index())]
    }

    /// T ⊗ 1_spin acting on the six spin-orbitals.
    pub fn spin_orbital(&self) -> PairMatrix {
        let mut out = PairMatrix::zeros();
        for r in 0..3 {
            for c in 0..3 {
                for s in 0..2 {
                    out[(2 * r + s, 2 * c + s)] = self.matrix[(r, c)];
                }
            }
        }
        out
    }
}

/// U_{νσ, ν'σ'} = (-1)^{q+1} i^{2σ} C(-σ, σ' | j_s m_s) T*_{qν} T_{q+m_l, ν'}.
pub fn channel_projector(label: ChannelLabel) -> Result<PairMatrix> {
    label.validate()?;
    let t = OrbitalTransform::default();
    let sign = if (label.q as i32 + 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let mut out = PairMatrix::zeros();
    for nu in Band::ALL {
        for nup in Band::ALL {
            let orbital = t.element(label.q, nu).conj() * t.element(label.q + label.m_l, nup);
            if orbital == ZERO {
                continue;
            }
            for s in Spin::ALL {
                for sp in Spin::ALL {
                    let cg = clebsch_gordan_half_half(s.flip(), sp, label.j_s, label.m_s);
                    if cg != 0.0 {
                        out[(mode_index(nu, s), mode_index(nup, sp))] = sign * cg * s.i_pow_two_m() * orbital;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A normalized superposition Σ w_i B_i of channel operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCombination {
    pub name: String,
    pub terms: Vec<(ChannelLabel, Complex64)>,
}

impl ChannelCombination {
    /// Builds a combination, normalizing the weights to Σ|w|² = 1.
    pub fn new(name: impl Into<String>, terms: Vec<(ChannelLabel, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("empty channel combination".into()));
        }
        for (label, _) in &terms {
            label.validate()?;
        }
        let norm = terms.iter().map(|(_, w)| w.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("channel weights must be non-zero".into()));
        }
        let terms = terms.into_iter().map(|(l, w)| (l, w / norm)).collect();
        Ok(ChannelCombination {
            name: name.into(),
            terms,
        })
    }

    pub fn single(label: ChannelLabel) -> Result<Self> {
        Self::new(label.to_string(), vec![(label, ONE)])
    }

    /// (B_a + sign B_b)/√2
    pub fn pair(name: impl Into<String>, a: ChannelLabel, b: ChannelLabel, sign: f64) -> Result<Self> {
        Self::new(name, vec![(a, ONE), (b, sign * ONE)])
    }

    /// Ô_{m_s} = (B_{1,m_s,-1;0} - B_{1,m_s,-1;1})/√2, the time-reversal even,
    /// parity-odd spin-orbit intertwined channel.
    pub fn spin_orbit(m_s: i8) -> Self {
        Self::pair(
            "so",
            ChannelLabel { j_s: 1, m_s, m_l: -1, q: 0 },
            ChannelLabel { j_s: 1, m_s, m_l: -1, q: 1 },
            -1.0,
        )
        .expect("valid labels")
    }

    /// (B_{1,m_s,-1;0} + B_{1,m_s,-1;1})/√2, the time-reversal odd partner of Ô.
    pub fn spin_orbit_trs_odd(m_s: i8) -> Self {
        Self::pair(
            "so_trs_odd",
            ChannelLabel { j_s: 1, m_s, m_l: -1, q: 0 },
            ChannelLabel { j_s: 1, m_s, m_l: -1, q: 1 },
            1.0,
        )
        .expect("valid labels")
    }

    /// (B_{0,0,1;0} - B_{0,0,1;-1})/√2, a time-reversal odd parity-odd singlet.
    pub fn singlet_trs_odd() -> Self {
        Self::pair(
            "singlet_trs_odd",
            ChannelLabel { j_s: 0, m_s: 0, m_l: 1, q: 0 },
            ChannelLabel { j_s: 0, m_s: 0, m_l: 1, q: -1 },
            -1.0,
        )
        .expect("valid labels")
    }

    /// Ô'_{m_s} = (B_{1,m_s,0;1} - B_{1,m_s,0;-1})/√2, parity even.
    pub fn spin_orbit_parity_even(m_s: i8) -> Self {
        Self::pair(
            "so_parity_even",
            ChannelLabel { j_s: 1, m_s, m_l: 0, q: 1 },
            ChannelLabel { j_s: 1, m_s, m_l: 0, q: -1 },
            -1.0,
        )
        .expect("valid labels")
    }

    /// Parses a channel name: `so`, `so_trs_odd`, `singlet_trs_odd`,
    /// `so_parity_even` (optionally suffixed `:m_s`), or a single label
    /// `B:j_s,m_s,m_l,q`.
    pub fn from_name(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix("B:") {
            let nums: Vec<i8> = rest
                .split(',')
                .map(|s| s.trim().parse::<i8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse channel label '{name}'")))?;
            if nums.len() != 4 || nums[0] < 0 {
                return Err(Error::InvalidParameter(format!(
                    "channel label '{name}' needs four integers j_s,m_s,m_l,q"
                )));
            }
            let label = ChannelLabel::new(nums[0] as u8, nums[1], nums[2], nums[3])?;
            let mut combo = Self::single(label)?;
            combo.name = name.to_string();
            return Ok(combo);
        }
        let (base, m_s) = match name.split_once(':') {
            Some((b, m)) => (
                b,
                m.parse::<i8>()
                    .map_err(|_| Error::InvalidParameter(format!("bad m_s in channel '{name}'")))?,
            ),
            None => (name, 1),
        };
        if !(-1..=1).contains(&m_s) {
            return Err(Error::InvalidParameter(format!("m_s out of range in channel '{name}'")));
        }
        let mut combo = match base {
            "so" => Self::spin_orbit(m_s),
            "so_trs_odd" => Self::spin_orbit_trs_odd(m_s),
            "so_parity_even" => Self::spin_orbit_parity_even(m_s),
            "singlet_trs_odd" => Self::singlet_trs_odd(),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown channel '{name}' (expected so, so_trs_odd, singlet_trs_odd, \
                     so_parity_even or B:j,m,ml,q)"
                )))
            }
        };
        combo.name = name.to_string();
        Ok(combo)
    }

    /// Coefficient matrix Σ w_i U_i of the combined operator.
    pub fn matrix(&self) -> PairMatrix {
        self.terms.iter().fold(PairMatrix::zeros(), |acc, (label, w)| {
            acc + channel_projector(*label).expect("validated label") * *w
        })
    }

    pub fn formula(&self) -> String {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        if self.terms.len() == 1 {
            return self.terms[0].0.to_string();
        }
        if self.terms.len() == 2
            && (self.terms[0].1 - r).norm() < 1e-12
            && (self.terms[1].1.norm() - r).abs() < 1e-12
            && self.terms[1].1.im.abs() < 1e-12
        {
            let sign = if self.terms[1].1.re > 0.0 { '+' } else { '-' };
            return format!("({} {} {})/sqrt2", self.terms[0].0, sign, self.terms[1].0);
        }
        self.terms
            .iter()
            .map(|(l, w)| format!("({:+.6}{:+.6}i){}", w.re, w.im, l))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Su2Class {
    Singlet,
    Triplet,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrsClass {
    Even,
    Odd,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetrySignature {
    pub su2: Su2Class,
    pub parity: Parity,
    pub trs: TrsClass,
}

impl fmt::Display for Su2Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Su2Class::Singlet => "singlet",
            Su2Class::Triplet => "triplet",
            Su2Class::Mixed => "mixed",
        })
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        })
    }
}

impl fmt::Display for TrsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrsClass::Even => "even",
            TrsClass::Odd => "odd",
            TrsClass::Mixed => "mixed",
        })
    }
}

/// Symmetry representations acting on bilinears in the angular-momentum basis.
pub mod rep {
    use super::*;

    /// Index of (q, σ) in the angular-momentum spin-orbital basis.
    pub fn angular_index(q: i8, spin: Spin) -> usize {
        2 * OrbitalTransform::row(q) + spin.index()
    }

    /// M ↦ T M T†: the coefficient matrix in the (q, σ) basis.
    pub fn to_angular_basis(m: &PairMatrix) -> PairMatrix {
        let t = OrbitalTransform::default().spin_orbital();
        t * m * t.adjoint()
    }

    /// Single-particle matrix W with T ψ_a T⁻¹ = Σ_b W_ab ψ_b, where
    /// T ψ_{qσ} T⁻¹ = i^{-2σ} (-1)^q ψ_{-q,-σ}.
    pub fn time_reversal() -> PairMatrix {
        let mut w = PairMatrix::zeros();
        for q in -1i8..=1 {
            for s in Spin::ALL {
                let phase = s.i_pow_two_m().conj() * if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                w[(angular_index(q, s), angular_index(-q, s.flip()))] = phase;
            }
        }
        w
    }

    /// Antiunitary image of a bilinear: M ↦ W† M* W.
    pub fn apply_time_reversal(m_angular: &PairMatrix) -> PairMatrix {
        let w = time_reversal();
        w.adjoint() * m_angular.map(|z| z.conj()) * w
    }

    /// P ψ_{qσ} P† = (-1)^q ψ_{qσ}.
    pub fn parity() -> PairMatrix {
        let mut d = PairMatrix::zeros();
        for q in -1i8..=1 {
            for s in Spin::ALL {
                d[(angular_index(q, s), angular_index(q, s))] = if q.rem_euclid(2) == 0 { ONE } else { -ONE };
            }
        }
        d
    }

    /// R_θ ψ_{qσ} R_θ† = e^{iqθ} ψ_{qσ}.
    pub fn rotation(theta: f64) -> PairMatrix {
        let mut d = PairMatrix::zeros();
        for q in -1i8..=1 {
            for s in Spin::ALL {
                d[(angular_index(q, s), angular_index(q, s))] = Complex64::from_polar(1.0, q as f64 * theta);
            }
        }
        d
    }

    /// Unitary image D† M D of a bilinear under a mode transformation D.
    pub fn apply_unitary(d: &PairMatrix, m: &PairMatrix) -> PairMatrix {
        d.adjoint() * m * d
    }

    /// Spin-½ generators S_x, S_y, S_z on the six spin-orbitals (basis independent).
    pub fn spin_generators() -> [PairMatrix; 3] {
        let half = 0.5;
        let mut out = [PairMatrix::zeros(); 3];
        for o in 0..3 {
            let (u, d) = (2 * o, 2 * o + 1);
            out[0][(u, d)] = half * ONE;
            out[0][(d, u)] = half * ONE;
            out[1][(u, d)] = -half * I;
            out[1][(d, u)] = half * I;
            out[2][(u, u)] = half * ONE;
            out[2][(d, d)] = -half * ONE;
        }
        out
    }

    /// Σ_a [S_a, [S_a, M]], which equals j(j+1) M for a rank-j spin tensor.
    pub fn spin_casimir(m: &PairMatrix) -> PairMatrix {
        spin_generators().iter().fold(PairMatrix::zeros(), |acc, s| {
            let inner = s * m - m * s;
            acc + (s * inner - inner * s)
        })
    }
}

fn classify(m: &PairMatrix, image: &PairMatrix, reference: &PairMatrix) -> Option<bool> {
    let scale = m.norm().max(1e-300);
    let tol = 1e-10 * scale;
    if (image - reference).norm() < tol {
        Some(true)
    } else if (image + reference).norm() < tol {
        Some(false)
    } else {
        None
    }
}

/// Computes (SU(2), parity, TRS) of a combination by applying the symmetry
/// representations to its coefficient matrix.
///
/// TRS is judged through the Hermitian observables hO + h*O†: these are all
/// even (odd) exactly when T O T⁻¹ = +O† (−O†), independently of h.
pub fn symmetry_signature(combo: &ChannelCombination) -> SymmetrySignature {
    let m = rep::to_angular_basis(&combo.matrix());
    let scale = m.norm().max(1e-300);

    let casimir = rep::spin_casimir(&m);
    let su2 = if casimir.norm() < 1e-10 * scale {
        Su2Class::Singlet
    } else if (casimir - m * Complex64::new(2.0, 0.0)).norm() < 1e-10 * scale {
        Su2Class::Triplet
    } else {
        Su2Class::Mixed
    };

    let parity_image = rep::apply_unitary(&rep::parity(), &m);
    let parity = match classify(&m, &parity_image, &m) {
        Some(true) => Parity::Even,
        Some(false) => Parity::Odd,
        None => Parity::Mixed,
    };

    let trs_image = rep::apply_time_reversal(&m);
    let trs = match classify(&m, &trs_image, &m.adjoint()) {
        Some(true) => TrsClass::Even,
        Some(false) => TrsClass::Odd,
        None => TrsClass::Mixed,
    };

    SymmetrySignature { su2, parity, trs }
}

/// One operator of the symmetry table with its computed signature.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    /// Row heading (j_s, m_s, m_l); m_s is shown symbolically for triplets.
    pub heading: String,
    pub combination: ChannelCombination,
    pub signature: SymmetrySignature,
}

/// The twelve operators classified in the symmetry table (triplets at m_s = `m_s`).
pub fn symmetry_table(m_s: i8) -> Vec<TableRow> {
    let l = |j_s: u8, m_s: i8, m_l: i8, q: i8| ChannelLabel { j_s, m_s, m_l, q };
    let pair = |a, b, sign| ChannelCombination::pair("", a, b, sign).expect("valid labels");
    let single = |a| ChannelCombination::single(a).expect("valid label");
    let m = m_s;
    let rows: Vec<(&str, ChannelCombination)> = vec![
        ("0,0,0", single(l(0, 0, 0, 0))),
        ("0,0,0", pair(l(0, 0, 0, 1), l(0, 0, 0, -1), 1.0)),
        ("0,0,0", pair(l(0, 0, 0, 1), l(0, 0, 0, -1), -1.0)),
        ("0,0,1", pair(l(0, 0, 1, 0), l(0, 0, 1, -1), 1.0)),
        ("0,0,1", pair(l(0, 0, 1, 0), l(0, 0, 1, -1), -1.0)),
        ("0,0,2", single(l(0, 0, 2, -1))),
        ("1,m_s,0", single(l(1, m, 0, 0))),
        ("1,m_s,0", pair(l(1, m, 0, 1), l(1, m, 0, -1), 1.0)),
        ("1,m_s,0", pair(l(1, m, 0, 1), l(1, m, 0, -1), -1.0)),
        ("1,m_s,1", pair(l(1, m, 1, 0), l(1, m, 1, -1), 1.0)),
        ("1,m_s,1", pair(l(1, m, 1, 0), l(1, m, 1, -1), -1.0)),
        ("1,m_s,2", single(l(1, m, 2, -1))),
    ];
    rows.into_iter()
        .map(|(heading, mut combination)| {
            combination.name = combination.formula();
            let signature = symmetry_signature(&combination);
            TableRow {
                heading: heading.to_string(),
                combination,
                signature,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn label(j: u8, m: i8, ml: i8, q: i8) -> ChannelLabel {
        ChannelLabel::new(j, m, ml, q).unwrap()
    }

    #[test]
    fn clebsch_gordan_examples() {
        assert!((clebsch_gordan_half_half(Spin::Up, Spin::Down, 0, 0) - R).abs() < 1e-15);
        assert_eq!(clebsch_gordan_half_half(Spin::Up, Spin::Up, 1, 1), 1.0);
        assert!((clebsch_gordan_half_half(Spin::Up, Spin::Down, 1, 0) - R).abs() < 1e-15);
        assert!((clebsch_gordan_half_half(Spin::Down, Spin::Up, 0, 0) + R).abs() < 1e-15);
        assert_eq!(clebsch_gordan_half_half(Spin::Up, Spin::Up, 1, 0), 0.0);
        assert_eq!(clebsch_gordan_half_half(Spin::Up, Spin::Up, 0, 1), 0.0);
        assert_eq!(clebsch_gordan_half_half(Spin::Up, Spin::Down, 2, 0), 0.0);
    }

    #[test]
    fn clebsch_gordan_orthonormal() {
        let states = [(0u8, 0i8), (1, -1), (1, 0), (1, 1)];
        for &(j1, m1) in &states {
            for &(j2, m2) in &states {
                let mut dot = 0.0;
                for a in Spin::ALL {
                    for b in Spin::ALL {
                        dot += clebsch_gordan_half_half(a, b, j1, m1) * clebsch_gordan_half_half(a, b, j2, m2);
                    }
                }
                let expected = if (j1, m1) == (j2, m2) { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orbital_transform_is_unitary() {
        let t = OrbitalTransform::default().matrix;
        let prod = t * t.adjoint();
        assert!((prod - Matrix3::identity()).norm() < 1e-14);
        // ψ_+ = -(ψ_x + iψ_y)/√2
        assert!((t[(0, 1)] + R).norm() < 1e-15 && (t[(0, 2)] + I * R).norm() < 1e-15);
    }

    #[test]
    fn labels_enumerate_36() {
        let all = ChannelLabel::all();
        assert_eq!(all.len(), 36);
        assert!(ChannelLabel::new(1, 0, 1, 1).is_err());
        assert!(ChannelLabel::new(0, 1, 0, 0).is_err());
        assert!(channel_projector(ChannelLabel { j_s: 1, m_s: 0, m_l: 2, q: 0 }).is_err());
    }

    #[test]
    fn projectors_form_orthonormal_basis() {
        let all: Vec<PairMatrix> = ChannelLabel::all().into_iter().map(|l| channel_projector(l).unwrap()).collect();
        for (a, ma) in all.iter().enumerate() {
            for (b, mb) in all.iter().enumerate() {
                let dot: Complex64 = ma.iter().zip(mb.iter()).map(|(x, y)| x.conj() * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).norm() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn density_channel_is_pure_s() {
        let u = channel_projector(label(0, 0, 0, 0)).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                if a >= 2 || b >= 2 {
                    assert_eq!(u[(a, b)], ZERO);
                }
            }
        }
        // (-1)^{q+1} i^{2σ} C(-σ,σ|00): both diagonal s entries equal +i/√2.
        assert!((u[(0, 0)] - I * R).norm() < 1e-15);
        assert!((u[(1, 1)] - I * R).norm() < 1e-15);
    }

    #[test]
    fn triplet_plus_channel_expansion() {
        // B_{1,+1,-1;0} = -Σ i^{2σ} C(-σ,σ'|1,1) ψ†_{sσ} ψ_{-1,σ'}; only σ = ↓, σ' = ↑ survives,
        // giving -(-i) ψ†_{s↓} ψ_{-1↑} with ψ_{-1} = (ψ_x - iψ_y)/√2.
        let u = channel_projector(label(1, 1, -1, 0)).unwrap();
        let s_dn = mode_index(Band::S, Spin::Down);
        let x_up = mode_index(Band::Px, Spin::Up);
        let y_up = mode_index(Band::Py, Spin::Up);
        assert!((u[(s_dn, x_up)] - I * R).norm() < 1e-15);
        assert!((u[(s_dn, y_up)] - I * (-I) * R).norm() < 1e-15);
        let nonzero = u.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    /// 6-mode Fock space with Jordan-Wigner annihilators.
    struct Fock {
        annihilators: Vec<DMatrix<Complex64>>,
    }

    impl Fock {
        fn new() -> Self {
            let dim = 64;
            let annihilators = (0..6)
                .map(|mode| {
                    let mut c = DMatrix::<Complex64>::zeros(dim, dim);
                    for state in 0..dim {
                        if state & (1 << mode) != 0 {
                            let target = state ^ (1 << mode);
                            let parity = (state & ((1 << mode) - 1)).count_ones();
                            c[(target, state)] = if parity % 2 == 0 { ONE } else { -ONE };
                        }
                    }
                    c
                })
                .collect();
            Fock { annihilators }
        }

        fn bilinear(&self, m: &PairMatrix) -> DMatrix<Complex64> {
            let mut op = DMatrix::<Complex64>::zeros(64, 64);
            for a in 0..6 {
                for b in 0..6 {
                    if m[(a, b)] != ZERO {
                        op += (self.annihilators[a].adjoint() * &self.annihilators[b]) * m[(a, b)];
                    }
                }
            }
            op
        }
    }

    #[test]
    fn hermitian_conjugate_matches_fock_space_oracle() {
        let fock = Fock::new();
        for l in ChannelLabel::all() {
            let b = fock.bilinear(&channel_projector(l).unwrap());
            let (partner, sign) = l.hermitian_conjugate();
            partner.validate().unwrap();
            let rhs = fock.bilinear(&channel_projector(partner).unwrap()) * Complex64::new(sign, 0.0);
            assert!((b.adjoint() - rhs).norm() < 1e-12, "{l}");
        }
    }

    #[test]
    fn hermitian_conjugate_examples() {
        assert_eq!(label(0, 0, 0, 0).hermitian_conjugate(), (label(0, 0, 0, 0), -1.0));
        // (-1)^{m_l + m_s + 1} = (-1)^{-1 + 1 + 1} = -1
        assert_eq!(label(1, 1, -1, 0).hermitian_conjugate(), (label(1, -1, 1, -1), -1.0));
        for l in ChannelLabel::all() {
            let (p, s1) = l.hermitian_conjugate();
            let (back, s2) = p.hermitian_conjugate();
            assert_eq!(back, l);
            assert_eq!(s1 * s2, 1.0);
        }
    }

    #[test]
    fn time_reversal_squares_to_identity_on_bilinears() {
        for l in ChannelLabel::all() {
            let m = rep::to_angular_basis(&channel_projector(l).unwrap());
            let twice = rep::apply_time_reversal(&rep::apply_time_reversal(&m));
            assert!((twice - m).norm() < 1e-12);
        }
        // On single fermions T² = -1.
        let w = rep::time_reversal();
        let ww = w * w.map(|z| z.conj());
        assert!((ww + PairMatrix::identity()).norm() < 1e-14);
    }

    #[test]
    fn time_reversal_matches_label_rule() {
        // T B_{j,m,ml;q} T⁻¹ = (-1)^{j+1} (-1)^{ml+m} B_{j,-m,-ml;-q}
        for l in ChannelLabel::all() {
            let m = rep::to_angular_basis(&channel_projector(l).unwrap());
            let image = rep::apply_time_reversal(&m);
            let target = ChannelLabel { j_s: l.j_s, m_s: -l.m_s, m_l: -l.m_l, q: -l.q };
            let exponent = l.j_s as i32 + 1 + l.m_l as i32 + l.m_s as i32;
            let sign = if exponent.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let expected = rep::to_angular_basis(&channel_projector(target).unwrap()) * Complex64::new(sign, 0.0);
            assert!((image - expected).norm() < 1e-12, "{l}");
        }
    }

    #[test]
    fn rotation_covariance() {
        for theta in [std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            let d = rep::rotation(theta);
            for l in ChannelLabel::all() {
                let m = rep::to_angular_basis(&channel_projector(l).unwrap());
                let image = rep::apply_unitary(&d, &m);
                let phase = Complex64::from_polar(1.0, l.m_l as f64 * theta);
                assert!((image - m * phase).norm() < 1e-12, "{l} θ={theta}");
            }
        }
    }

    #[test]
    fn signatures_of_named_channels() {
        for m in -1..=1 {
            let sig = symmetry_signature(&ChannelCombination::spin_orbit(m));
            assert_eq!(sig, SymmetrySignature { su2: Su2Class::Triplet, parity: Parity::Odd, trs: TrsClass::Even });
            let sig = symmetry_signature(&ChannelCombination::spin_orbit_trs_odd(m));
            assert_eq!(sig, SymmetrySignature { su2: Su2Class::Triplet, parity: Parity::Odd, trs: TrsClass::Odd });
            let sig = symmetry_signature(&ChannelCombination::spin_orbit_parity_even(m));
            assert_eq!(sig, SymmetrySignature { su2: Su2Class::Triplet, parity: Parity::Even, trs: TrsClass::Even });
        }
        let sig = symmetry_signature(&ChannelCombination::single(label(0, 0, 0, 0)).unwrap());
        assert_eq!(sig, SymmetrySignature { su2: Su2Class::Singlet, parity: Parity::Even, trs: TrsClass::Even });
        let sig = symmetry_signature(&ChannelCombination::singlet_trs_odd());
        assert_eq!(sig, SymmetrySignature { su2: Su2Class::Singlet, parity: Parity::Odd, trs: TrsClass::Odd });
    }

    #[test]
    fn mixed_combinations_are_flagged() {
        let combo = ChannelCombination::pair("mix", label(0, 0, 0, 0), label(1, 0, 1, 0), 1.0).unwrap();
        let sig = symmetry_signature(&combo);
        assert_eq!(sig.su2, Su2Class::Mixed);
        assert_eq!(sig.parity, Parity::Mixed);
        let combo = ChannelCombination::new(
            "phase",
            vec![(label(1, 1, -1, 0), ONE), (label(1, 1, -1, 1), I)],
        )
        .unwrap();
        assert_eq!(symmetry_signature(&combo).trs, TrsClass::Mixed);
    }

    #[test]
    fn combination_normalization_and_parsing() {
        let c = ChannelCombination::new("x", vec![(label(0, 0, 0, 0), Complex64::new(3.0, 0.0)), (label(0, 0, 0, 1), Complex64::new(0.0, 4.0))]).unwrap();
        let norm: f64 = c.terms.iter().map(|(_, w)| w.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        assert!(ChannelCombination::new("e", vec![]).is_err());
        assert_eq!(ChannelCombination::from_name("so").unwrap().terms, ChannelCombination::spin_orbit(1).terms);
        assert_eq!(ChannelCombination::from_name("so:-1").unwrap().terms, ChannelCombination::spin_orbit(-1).terms);
        assert_eq!(ChannelCombination::from_name("B:1,0,-1,0").unwrap().terms.len(), 1);
        assert!(ChannelCombination::from_name("B:1,0,2,0").is_err());
        assert!(ChannelCombination::from_name("bogus").is_err());
        assert_eq!(ChannelCombination::spin_orbit(1).formula(), "(B[1,1,-1;0] - B[1,1,-1;1])/sqrt2");
    }
}
