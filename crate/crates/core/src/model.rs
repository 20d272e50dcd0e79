//! The antiferromagnetic anisotropic XY chain with shifted bond terms.
//!
//! The Hamiltonian on a periodic ring of `N` sites is
//!
//! ```text
//! H = sum_i Z_i Z_{i+1} + delta * sum_i X_i X_{i+1}
//!   = -sum_i (M_z - Z_i Z_{i+1}) - delta * sum_i (M_x - X_i X_{i+1}) + (M_z + delta M_x) N
//! ```
//!
//! Each bracket is one [`BondTerm`]: `coupling * (shift + sign * O_b)` with
//! `sign = -1` for both flavors. The sampler works with the sum of terms,
//! i.e. `offset - H`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest chain handled by dense vectors and matrices.
pub const DENSE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliFlavor {
    ZZ,
    XX,
}

/// One shifted term `coupling * (shift * I + sign * P_site P_partner)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondTerm {
    pub site: usize,
    pub partner: usize,
    pub flavor: PauliFlavor,
    pub coupling: f64,
    pub shift: f64,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl BondTerm {
    /// Term on the periodic bond `(site, site + 1 mod n_sites)`.
    pub fn on_ring(
        n_sites: usize,
        site: usize,
        flavor: PauliFlavor,
        coupling: f64,
        shift: f64,
        sign: i8,
    ) -> Self {
        BondTerm {
            site,
            partner: (site + 1) % n_sites,
            flavor,
            coupling,
            shift,
            sign,
        }
    }

    /// Antiferromagnetic term with unit coupling, the building block used in most tests.
    pub fn antiferro(n_sites: usize, site: usize, flavor: PauliFlavor, shift: f64) -> Self {
        Self::on_ring(n_sites, site, flavor, 1.0, shift, -1)
    }

    pub fn sign_f64(&self) -> f64 {
        f64::from(self.sign)
    }

    /// Unordered site pair.
    pub fn sites(&self) -> (usize, usize) {
        if self.site <= self.partner {
            (self.site, self.partner)
        } else {
            (self.partner, self.site)
        }
    }

    pub fn same_bond(&self, other: &BondTerm) -> bool {
        self.sites() == other.sites()
    }

    /// Bit mask of the two sites this term touches.
    pub fn mask(&self) -> usize {
        (1 << self.site) | (1 << self.partner)
    }

    /// Operator norm of the term, `coupling * (shift + 1)`.
    pub fn norm_bound(&self) -> f64 {
        self.coupling * (self.shift + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_sites: usize,
    pub delta: f64,
    pub m_x: f64,
    pub m_z: f64,
    pub beta: f64,
}

impl ModelSpec {
    pub fn new(n_sites: usize, delta: f64, m_x: f64, m_z: f64, beta: f64) -> Result<Self> {
        let spec = ModelSpec {
            n_sites,
            delta,
            m_x,
            m_z,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidModel(format!(
                "chain needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidModel(format!(
                "anisotropy must lie in [0, 1], got {} (use the Z/X relabeling for larger values)",
                self.delta
            )));
        }
        if !(self.m_x > 0.0 && self.m_x.is_finite()) || !(self.m_z > 0.0 && self.m_z.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "shift constants must be positive, got m_x={} m_z={}",
                self.m_x, self.m_z
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "inverse temperature must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// `(M_z + delta * M_x) * N`, the constant added back after shifting.
    pub fn energy_offset(&self) -> f64 {
        (self.m_z + self.delta * self.m_x) * self.n_sites as f64
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// All `2N` shifted terms: `N` ZZ bonds followed by `N` XX bonds.
///
/// At `delta = 0` the XX terms are still emitted, with zero coupling; use
/// [`active_terms`] for anything that samples from the term list.
pub fn build_terms(spec: &ModelSpec) -> Result<Vec<BondTerm>> {
    spec.validate()?;
    let n = spec.n_sites;
    let zz = (0..n).map(|i| BondTerm::on_ring(n, i, PauliFlavor::ZZ, 1.0, spec.m_z, -1));
    let xx = (0..n).map(|i| BondTerm::on_ring(n, i, PauliFlavor::XX, spec.delta, spec.m_x, -1));
    Ok(zz.chain(xx).collect())
}

/// Terms with nonzero coupling, i.e. the proposal set of the sampler.
pub fn active_terms(spec: &ModelSpec) -> Result<Vec<BondTerm>> {
    Ok(build_terms(spec)?
        .into_iter()
        .filter(|t| t.coupling > 0.0)
        .collect())
}

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] += value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// Unshifted `H = sum ZZ + delta * sum XX` with periodic boundaries.
pub fn dense_hamiltonian(spec: &ModelSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    dense_hamiltonian_with_couplings(spec.n_sites, 1.0, spec.delta)
}

/// `j_zz * sum Z_i Z_{i+1} + j_xx * sum X_i X_{i+1}` on a ring, for arbitrary
/// couplings. Used for the `delta -> 1/delta` relabeling, which is outside
/// the range accepted by [`ModelSpec`].
pub fn dense_hamiltonian_with_couplings(n_sites: usize, j_zz: f64, j_xx: f64) -> Result<DenseMatrix> {
    if n_sites > DENSE_LIMIT {
        return Err(Error::TooLarge {
            sites: n_sites,
            limit: DENSE_LIMIT,
        });
    }
    if n_sites < 2 {
        return Err(Error::InvalidModel(format!(
            "chain needs at least 2 sites, got {n_sites}"
        )));
    }
    let dim = 1usize << n_sites;
    let mut h = DenseMatrix::zeros(dim);
    for i in 0..n_sites {
        let mask = (1 << i) | (1 << ((i + 1) % n_sites));
        for state in 0..dim {
            let parity = (state & mask).count_ones() % 2;
            let zz = if parity == 0 { 1.0 } else { -1.0 };
            h.add(state, state, j_zz * zz);
            if j_xx != 0.0 {
                h.add(state ^ mask, state, j_xx);
            }
        }
    }
    Ok(h)
}
