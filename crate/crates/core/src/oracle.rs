//! Independent reference computations.
//!
//! [`ancilla_weight`] evaluates a configuration weight on the composite
//! `(N + n)`-qubit register: one ancilla per operator prepared in
//! `sqrt(M/(M+1))|0> + sqrt(1/(M+1))|1>`, each operator applied as a unitary
//! controlled by its ancilla. It shares no code with the fast path in
//! [`crate::sampler`].
//!
//! [`brute_force_partition`] sums `W` and `|W|` over every configuration up
//! to a cutoff order, with a rigorous bound on the neglected tail.

use num_complex::Complex64;

use crate::contraction::contract;
use crate::model::{active_terms, BondTerm, ModelSpec, PauliFlavor};
use crate::sampler::{boltzmann_factor, string_weight, RngStream};
use crate::statevec::{apply_term, prepare, BasisChoice, BasisLabel, Gate, StateVector};
use crate::{Error, Result};

/// Largest composite register emulated by [`ancilla_weight`].
pub const ANCILLA_QUBIT_LIMIT: usize = 16;

/// Enumeration budget for [`brute_force_partition`], in visited configurations.
pub const ENUMERATION_LIMIT: f64 = 2e8;

fn system_column(basis: &BasisChoice, site: usize, bit: bool) -> [Complex64; 2] {
    let b = usize::from(bit);
    match basis {
        BasisChoice::ZProduct => {
            let mut col = [Complex64::new(0.0, 0.0); 2];
            col[b] = Complex64::new(1.0, 0.0);
            col
        }
        BasisChoice::Rotated(r) => {
            let g = &r.gates()[site];
            [g[0][b], g[1][b]]
        }
    }
}

fn pauli(flavor: PauliFlavor) -> Gate {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    match flavor {
        PauliFlavor::ZZ => [[l, o], [o, -l]],
        PauliFlavor::XX => [[o, l], [l, o]],
    }
}

fn apply_controlled(amps: &mut [Complex64], control: usize, target: usize, gate: &Gate) {
    let c = 1 << control;
    let t = 1 << target;
    for k in 0..amps.len() {
        if k & c == 0 || k & t != 0 {
            continue;
        }
        let (a0, a1) = (amps[k], amps[k | t]);
        amps[k] = gate[0][0] * a0 + gate[0][1] * a1;
        amps[k | t] = gate[1][0] * a0 + gate[1][1] * a1;
    }
}

/// Configuration weight evaluated through the ancilla construction.
pub fn ancilla_weight(
    beta: f64,
    alpha: BasisLabel,
    basis: &BasisChoice,
    string: &[BondTerm],
) -> Result<f64> {
    let n_sys = alpha.len();
    let total = n_sys + string.len();
    if total > ANCILLA_QUBIT_LIMIT {
        return Err(Error::TooLarge {
            sites: total,
            limit: ANCILLA_QUBIT_LIMIT,
        });
    }
    basis.check_sites(n_sys)?;

    let mut columns: Vec<[Complex64; 2]> = (0..n_sys)
        .map(|site| system_column(basis, site, alpha.bit(site)))
        .collect();
    for term in string {
        let m = term.shift;
        columns.push([
            Complex64::new((m / (m + 1.0)).sqrt(), 0.0),
            Complex64::new((1.0 / (m + 1.0)).sqrt(), 0.0),
        ]);
    }
    let psi: Vec<Complex64> = (0..1usize << total)
        .map(|k| {
            columns
                .iter()
                .enumerate()
                .map(|(q, col)| col[k >> q & 1])
                .product()
        })
        .collect();

    let mut out = psi.clone();
    for (i, term) in string.iter().enumerate() {
        let ancilla = n_sys + i;
        let p = pauli(term.flavor);
        apply_controlled(&mut out, ancilla, term.site, &p);
        apply_controlled(&mut out, ancilla, term.partner, &p);
        if term.sign < 0 {
            let bit = 1 << ancilla;
            out.iter_mut()
                .enumerate()
                .filter(|(k, _)| k & bit != 0)
                .for_each(|(_, a)| *a = -*a);
        }
    }
    let overlap: Complex64 = psi.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
    let scale: f64 = string
        .iter()
        .map(|t| (t.shift + 1.0) * t.coupling.abs())
        .product();
    Ok(boltzmann_factor(beta, string.len()) * scale * overlap.re)
}

/// Exact sums over all configurations with `n <= n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSums {
    /// `sum W`.
    pub z: f64,
    /// `sum |W|`.
    pub z_abs: f64,
    /// Upper bound on `sum |W|` over the omitted orders `n > n_max`.
    pub tail_bound: f64,
    pub n_max: usize,
}

impl PartitionSums {
    pub fn average_sign(&self) -> f64 {
        self.z / self.z_abs
    }
}

/// `2^N sum_{n > n_max} (beta L)^n / n!` with `L` the summed term norms.
pub fn tail_bound(model: &ModelSpec, n_max: usize) -> Result<f64> {
    let total_norm: f64 = active_terms(model)?.iter().map(BondTerm::norm_bound).sum();
    let x = model.beta * total_norm;
    let mut term = boltzmann_factor(x, n_max + 1);
    let mut sum = 0.0;
    let mut k = n_max + 1;
    while term > 0.0 && (term > sum * 1e-17 || (k as f64) < x) {
        sum += term;
        k += 1;
        term *= x / k as f64;
    }
    Ok(sum * (1u64 << model.n_sites) as f64)
}

/// Smallest cutoff whose tail bound is below `target`.
pub fn cutoff_for_tail(model: &ModelSpec, target: f64) -> Result<usize> {
    let mut n_max = 0;
    while tail_bound(model, n_max)? >= target {
        n_max += 1;
    }
    Ok(n_max)
}

/// Distinct operators among the active terms with their multiplicities.
/// On a two-site ring both bonds of a flavor are the same operator.
fn operator_classes(terms: &[BondTerm]) -> Vec<(BondTerm, f64)> {
    let mut classes: Vec<(BondTerm, f64)> = Vec::new();
    for t in terms {
        match classes.iter_mut().find(|(c, _)| {
            c.flavor == t.flavor
                && c.same_bond(t)
                && c.sign == t.sign
                && c.coupling == t.coupling
                && c.shift == t.shift
        }) {
            Some((_, m)) => *m += 1.0,
            None => classes.push((*t, 1.0)),
        }
    }
    classes
}

struct Enumeration<'a> {
    classes: &'a [(BondTerm, f64)],
    factors: Vec<f64>,
    n_max: usize,
    z: f64,
    z_abs: f64,
}

impl Enumeration<'_> {
    fn visit(&mut self, bra: &StateVector, ket: &StateVector, depth: usize, multiplicity: f64) {
        let w = self.factors[depth] * multiplicity * bra.inner(ket).re;
        self.z += w;
        self.z_abs += w.abs();
        if depth == self.n_max {
            return;
        }
        for &(op, m) in self.classes {
            let next = apply_term(ket, &op);
            self.visit(bra, &next, depth + 1, multiplicity * m);
        }
    }
}

/// Sums `W` and `|W|` over all `(alpha, string)` with `n <= n_max`.
pub fn brute_force_partition(
    model: &ModelSpec,
    basis: &BasisChoice,
    n_max: usize,
) -> Result<PartitionSums> {
    model.validate()?;
    basis.check_sites(model.n_sites)?;
    let terms = active_terms(model)?;
    let classes = operator_classes(&terms);
    let d = classes.len() as f64;
    let nodes = (1u64 << model.n_sites) as f64 * (0..=n_max).map(|k| d.powi(k as i32)).sum::<f64>();
    if nodes > ENUMERATION_LIMIT {
        return Err(Error::Infeasible { nodes });
    }
    let mut en = Enumeration {
        classes: &classes,
        factors: (0..=n_max).map(|k| boltzmann_factor(model.beta, k)).collect(),
        n_max,
        z: 0.0,
        z_abs: 0.0,
    };
    for bits in 0..1usize << model.n_sites {
        let alpha = prepare(BasisLabel::new(bits, model.n_sites), basis)?;
        en.visit(&alpha, &alpha, 0, 1.0);
    }
    Ok(PartitionSums {
        z: en.z,
        z_abs: en.z_abs,
        tail_bound: tail_bound(model, n_max)?,
        n_max,
    })
}

/// Row-major matrix of `H_{b_n} ... H_{b_1}` built column by column.
pub fn string_operator(n_sites: usize, string: &[BondTerm]) -> Vec<Complex64> {
    let dim = 1 << n_sites;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        let mut v = StateVector::basis_state(n_sites, col);
        for t in string {
            v.apply_term_in_place(t);
        }
        for (row, a) in v.amplitudes().iter().enumerate() {
            out[row * dim + col] = *a;
        }
    }
    out
}

/// Random term on a ring of `n_sites` with shift drawn from `shifts`.
pub fn random_term(rng: &mut RngStream, n_sites: usize, shifts: &[f64]) -> BondTerm {
    let flavor = if rng.coin() {
        PauliFlavor::ZZ
    } else {
        PauliFlavor::XX
    };
    let shift = shifts[rng.index(shifts.len())];
    let coupling = [1.0, 0.5, 0.8][rng.index(3)];
    BondTerm::on_ring(n_sites, rng.index(n_sites), flavor, coupling, shift, -1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub cases: usize,
    pub max_deviation: f64,
    /// Total operators before and after contraction (contraction checks only).
    pub terms_before: usize,
    pub terms_after: usize,
}

/// Compares `prefactor * contracted` against the original product as dense
/// operators on random strings (`N <= 4`, length `<= 8`, mixed shifts).
pub fn check_contraction(cases: usize, seed: u64) -> CheckReport {
    let mut rng = RngStream::new(seed);
    let shifts = [1.0, 1.0, 0.5, 2.0, 3.0];
    let mut report = CheckReport {
        cases,
        max_deviation: 0.0,
        terms_before: 0,
        terms_after: 0,
    };
    for _ in 0..cases {
        let n_sites = 2 + rng.index(3);
        let len = rng.index(9);
        let string: Vec<BondTerm> = (0..len).map(|_| random_term(&mut rng, n_sites, &shifts)).collect();
        let c = contract(&string);
        let original = string_operator(n_sites, &string);
        let reduced = string_operator(n_sites, &c.terms);
        let dev = original
            .iter()
            .zip(&reduced)
            .map(|(a, b)| (a - b * c.prefactor).norm())
            .fold(0.0, f64::max);
        report.max_deviation = report.max_deviation.max(dev);
        report.terms_before += string.len();
        report.terms_after += c.terms.len();
    }
    report
}

/// Compares the fast weight against [`ancilla_weight`] on random
/// configurations with `N + n <= 12`, in both bases.
pub fn check_ancilla(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = RngStream::new(seed);
    let mut report = CheckReport {
        cases,
        max_deviation: 0.0,
        terms_before: 0,
        terms_after: 0,
    };
    for case in 0..cases {
        let n_sites = 2 + rng.index(3);
        let len = rng.index(12 - n_sites + 1);
        let beta = 0.25 + rng.uniform();
        let basis = if case % 2 == 0 {
            BasisChoice::ZProduct
        } else {
            BasisChoice::t_hadamard(n_sites)
        };
        let string: Vec<BondTerm> = (0..len)
            .map(|_| random_term(&mut rng, n_sites, &[0.1, 0.5, 1.0, 1.0, 2.5]))
            .collect();
        let alpha = BasisLabel::new(rng.index(1 << n_sites), n_sites);
        let fast = string_weight(beta, alpha, &basis, &string)?;
        let slow = ancilla_weight(beta, alpha, &basis, &string)?;
        let dev = (fast - slow).abs() / slow.abs().max(1.0);
        report.max_deviation = report.max_deviation.max(dev);
    }
    Ok(report)
}
