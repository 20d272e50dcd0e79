//! Dense statevector kernel.
//!
//! Qubit `i` is bit `i` of the amplitude index. Shifted bond terms are applied
//! directly: ZZ terms multiply each amplitude by `z_i z_j`, XX terms mix the
//! two amplitudes related by flipping both bits. Superpositions created this
//! way are kept in full, no amplitude is ever truncated.

use num_complex::Complex64;

use crate::model::{BondTerm, PauliFlavor, DENSE_LIMIT};
use crate::{Error, Result};

/// Single-qubit gate, `gate[row][col]`.
pub type Gate = [[Complex64; 2]; 2];

const UNITARY_TOL: f64 = 1e-12;

pub mod gates {
    use super::Gate;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    pub fn identity() -> Gate {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        [[one, zero], [zero, one]]
    }

    pub fn hadamard() -> Gate {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        [[h, h], [h, -h]]
    }

    pub fn t() -> Gate {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        [[one, zero], [zero, Complex64::from_polar(1.0, FRAC_PI_4)]]
    }

    /// `a * b`.
    pub fn mul(a: &Gate, b: &Gate) -> Gate {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        out
    }

    /// Hadamard followed by T, the default basis rotation.
    pub fn t_hadamard() -> Gate {
        mul(&t(), &hadamard())
    }

    /// `H T H`, the fourth root of X up to a phase.
    pub fn x_quarter() -> Gate {
        mul(&hadamard(), &t_hadamard())
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_deviation(u: &Gate) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let dot = u[0][r].conj() * u[0][c] + u[1][r].conj() * u[1][c];
                let expected = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).norm());
            }
        }
        worst
    }
}

/// Per-site unitaries, validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRotations(Vec<Gate>);

impl SiteRotations {
    pub fn new(gates: Vec<Gate>) -> Result<Self> {
        for (site, g) in gates.iter().enumerate() {
            let deviation = gates::unitarity_deviation(g);
            if deviation > UNITARY_TOL {
                return Err(Error::NonUnitary { site, deviation });
            }
        }
        Ok(SiteRotations(gates))
    }

    pub fn gates(&self) -> &[Gate] {
        &self.0
    }
}

/// The product basis in which configurations are labeled.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    /// Computational basis.
    ZProduct,
    /// `|alpha> = U_0|b_0> (x) U_1|b_1> (x) ...`.
    Rotated(SiteRotations),
}

impl BasisChoice {
    pub fn rotated(gates: Vec<Gate>) -> Result<Self> {
        Ok(BasisChoice::Rotated(SiteRotations::new(gates)?))
    }

    pub fn uniform(n_sites: usize, gate: Gate) -> Result<Self> {
        Self::rotated(vec![gate; n_sites])
    }

    /// `T H` on every site.
    pub fn t_hadamard(n_sites: usize) -> Self {
        Self::uniform(n_sites, gates::t_hadamard()).expect("T H is unitary")
    }

    /// `H T H` on site 0, computational basis elsewhere.
    ///
    /// `T H` on a single site is sign-free on two sites; this rotation is not.
    pub fn x_quarter_site0(n_sites: usize) -> Self {
        let mut g = vec![gates::identity(); n_sites];
        g[0] = gates::x_quarter();
        Self::rotated(g).expect("H T H is unitary")
    }

    pub fn check_sites(&self, n_sites: usize) -> Result<()> {
        match self {
            BasisChoice::ZProduct => Ok(()),
            BasisChoice::Rotated(r) if r.0.len() == n_sites => Ok(()),
            BasisChoice::Rotated(r) => Err(Error::BasisSize {
                expected: n_sites,
                got: r.0.len(),
            }),
        }
    }
}

/// The Z-eigenstate pattern underlying a basis state; bit `i` is site `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisLabel {
    bits: usize,
    len: usize,
}

impl BasisLabel {
    pub fn new(bits: usize, len: usize) -> Self {
        assert!(len < usize::BITS as usize);
        BasisLabel {
            bits: bits & ((1usize << len) - 1),
            len,
        }
    }

    /// From a string such as `"01"`, where character `i` is site `i`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut bits = 0;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return None,
            }
        }
        Some(BasisLabel::new(bits, s.chars().count()))
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, site: usize) -> bool {
        self.bits >> site & 1 == 1
    }

    pub fn flipped(&self, site: usize) -> Self {
        BasisLabel::new(self.bits ^ (1 << site), self.len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(amplitudes.len(), 1 << n_qubits);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies `coupling * (shift * I + sign * O_b)` in place.
    pub fn apply_term_in_place(&mut self, term: &BondTerm) {
        debug_assert!(term.site < self.n_qubits && term.partner < self.n_qubits);
        let c = term.coupling;
        let s = term.shift;
        let g = term.sign_f64();
        let mask = term.mask();
        match term.flavor {
            PauliFlavor::ZZ => {
                let aligned = c * (s + g);
                let opposed = c * (s - g);
                for (k, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if (k & mask).count_ones().is_multiple_of(2) {
                        aligned
                    } else {
                        opposed
                    };
                }
            }
            PauliFlavor::XX => {
                let low = mask & mask.wrapping_neg();
                for k in 0..self.amplitudes.len() {
                    // visit each pair once, from the member with the lowest masked bit clear
                    if k & low != 0 {
                        continue;
                    }
                    let j = k ^ mask;
                    let a = self.amplitudes[k];
                    let b = self.amplitudes[j];
                    self.amplitudes[k] = (a * s + b * g) * c;
                    self.amplitudes[j] = (b * s + a * g) * c;
                }
            }
        }
    }
}

/// Prepares `(x)_i U_i |bit_i>`.
pub fn prepare(label: BasisLabel, basis: &BasisChoice) -> Result<StateVector> {
    let n = label.len();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            sites: n,
            limit: DENSE_LIMIT,
        });
    }
    basis.check_sites(n)?;
    match basis {
        BasisChoice::ZProduct => Ok(StateVector::basis_state(n, label.bits())),
        BasisChoice::Rotated(rot) => {
            let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
            // build the product from the highest qubit down so qubit 0 ends up as bit 0
            for site in (0..n).rev() {
                let g = &rot.gates()[site];
                let b = usize::from(label.bit(site));
                let column = [g[0][b], g[1][b]];
                amplitudes = amplitudes
                    .iter()
                    .flat_map(|&hi| [hi * column[0], hi * column[1]])
                    .collect();
            }
            Ok(StateVector::from_amplitudes(n, amplitudes))
        }
    }
}

pub fn apply_term(state: &StateVector, term: &BondTerm) -> StateVector {
    let mut out = state.clone();
    out.apply_term_in_place(term);
    out
}

/// `<alpha| H_{b_n} ... H_{b_1} |alpha>`, with `string[0]` applied first.
pub fn string_matrix_element(
    label: BasisLabel,
    basis: &BasisChoice,
    string: &[BondTerm],
) -> Result<Complex64> {
    let bra = prepare(label, basis)?;
    Ok(matrix_element_prepared(&bra, string))
}

/// Same as [`string_matrix_element`] for an already prepared `|alpha>`.
pub fn matrix_element_prepared(alpha: &StateVector, string: &[BondTerm]) -> Complex64 {
    if string.is_empty() {
        // prepared states are normalized
        return Complex64::new(1.0, 0.0);
    }
    let mut ket = alpha.clone();
    for term in string {
        ket.apply_term_in_place(term);
    }
    alpha.inner(&ket)
}
