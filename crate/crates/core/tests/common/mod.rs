//! Dense-matrix oracles built from Kronecker products, independent of the
//! bit-manipulation kernels in the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use qcsse::model::{BondTerm, PauliFlavor};
use qcsse::sampler::RngStream;
use qcsse::statevec::{BasisChoice, BasisLabel, Gate};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn gate_matrix(g: &Gate) -> CMat {
    CMat::from_fn(2, 2, |r, col| g[r][col])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

/// `op` on `site` of an `n`-qubit register where qubit `q` is bit `q` of the
/// index, so the highest qubit is the leftmost Kronecker factor.
pub fn on_site(n: usize, site: usize, op: &CMat) -> CMat {
    let mut out = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let factor = if q == site { op.clone() } else { CMat::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

pub fn pauli_pair(n: usize, flavor: PauliFlavor, a: usize, b: usize) -> CMat {
    let p = match flavor {
        PauliFlavor::ZZ => pauli_z(),
        PauliFlavor::XX => pauli_x(),
    };
    on_site(n, a, &p) * on_site(n, b, &p)
}

pub fn term_matrix(n: usize, t: &BondTerm) -> CMat {
    let dim = 1 << n;
    (CMat::identity(dim, dim) * c(t.shift) + pauli_pair(n, t.flavor, t.site, t.partner) * c(t.sign as f64))
        * c(t.coupling)
}

/// `H_{b_n} ... H_{b_1}` with `string[0]` acting first.
pub fn string_matrix(n: usize, string: &[BondTerm]) -> CMat {
    let dim = 1 << n;
    string
        .iter()
        .fold(CMat::identity(dim, dim), |acc, t| term_matrix(n, t) * acc)
}

pub fn basis_vector(label: BasisLabel, basis: &BasisChoice) -> CVec {
    let n = label.len();
    let mut out = CVec::from_element(1, c(1.0));
    for q in (0..n).rev() {
        let b = usize::from(label.bit(q));
        let col = match basis {
            BasisChoice::ZProduct => {
                let mut v = CVec::zeros(2);
                v[b] = c(1.0);
                v
            }
            BasisChoice::Rotated(r) => {
                let g = &r.gates()[q];
                CVec::from_vec(vec![g[0][b], g[1][b]])
            }
        };
        out = out.kronecker(&col);
    }
    out
}

pub fn element(label: BasisLabel, basis: &BasisChoice, string: &[BondTerm]) -> Complex64 {
    let v = basis_vector(label, basis);
    let m = string_matrix(label.len(), string);
    (v.adjoint() * m * &v)[(0, 0)]
}

/// `beta^n / n! * Re <alpha| product |alpha>` from dense matrices, no contraction.
pub fn dense_weight(beta: f64, label: BasisLabel, basis: &BasisChoice, string: &[BondTerm]) -> f64 {
    let mut f = 1.0;
    for k in 1..=string.len() {
        f *= beta / k as f64;
    }
    f * element(label, basis, string).re
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn random_string(rng: &mut RngStream, n: usize, len: usize, shifts: &[f64]) -> Vec<BondTerm> {
    (0..len)
        .map(|_| qcsse::oracle::random_term(rng, n, shifts))
        .collect()
}

pub type ConfigKey = (usize, Vec<usize>);

/// All configurations with `n <= n_cap`, keyed by label bits and string.
pub fn enumerate_configurations(
    sampler: &qcsse::sampler::Sampler,
    n_cap: usize,
) -> std::collections::HashMap<ConfigKey, qcsse::sampler::Configuration> {
    let n_sites = sampler.model().n_sites;
    let t = sampler.terms().len();
    let mut strings: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = strings.clone();
    for _ in 0..n_cap {
        frontier = frontier
            .iter()
            .flat_map(|s| {
                (0..t).map(move |k| {
                    let mut s = s.clone();
                    s.push(k);
                    s
                })
            })
            .collect();
        strings.extend(frontier.iter().cloned());
    }
    let mut out = std::collections::HashMap::new();
    for bits in 0..1usize << n_sites {
        for s in &strings {
            let config = sampler.configuration(BasisLabel::new(bits, n_sites), s.clone());
            out.insert((bits, s.clone()), config);
        }
    }
    out
}

/// Largest violation of detailed balance and of stationarity of `|W|` under
/// one update kind, relative to the larger side. Stationarity is checked only
/// where every predecessor lies inside the enumerated set.
pub fn balance_violation(
    sampler: &qcsse::sampler::Sampler,
    kind: qcsse::sampler::UpdateKind,
    n_cap: usize,
) -> (f64, f64) {
    use std::collections::HashMap;
    let configs = enumerate_configurations(sampler, n_cap);
    let mut transitions: HashMap<(ConfigKey, ConfigKey), f64> = HashMap::new();
    let mut inflow: HashMap<ConfigKey, f64> = HashMap::new();
    for (key, from) in &configs {
        let pi = from.weight().abs();
        if pi == 0.0 {
            continue;
        }
        let mut stay = 1.0;
        for (p, mv) in sampler.moves(kind, from) {
            let Some(to) = sampler.candidate(from, mv) else { continue };
            let a = p * sampler.acceptance(from, &to, mv);
            stay -= a;
            let to_key = (to.alpha().bits(), to.string().to_vec());
            *transitions.entry((key.clone(), to_key.clone())).or_default() += a;
            *inflow.entry(to_key).or_default() += pi * a;
        }
        *inflow.entry(key.clone()).or_default() += pi * stay;
    }

    let mut balance: f64 = 0.0;
    for ((a, b), t_ab) in &transitions {
        let (Some(ca), Some(cb)) = (configs.get(a), configs.get(b)) else { continue };
        let t_ba = transitions.get(&(b.clone(), a.clone())).copied().unwrap_or(0.0);
        let lhs = ca.weight().abs() * t_ab;
        let rhs = cb.weight().abs() * t_ba;
        balance = balance.max((lhs - rhs).abs() / lhs.max(rhs).max(f64::MIN_POSITIVE));
    }
    let interior = match kind {
        qcsse::sampler::UpdateKind::InsertRemove => n_cap.saturating_sub(1),
        _ => n_cap,
    };
    let mut stationary: f64 = 0.0;
    for (key, c) in &configs {
        let pi = c.weight().abs();
        if key.1.len() > interior || pi == 0.0 {
            continue;
        }
        let flow = inflow.get(key).copied().unwrap_or(0.0);
        stationary = stationary.max((flow - pi).abs() / pi);
    }
    (balance, stationary)
}
