//! Exact compression of shifted-term products.
//!
//! With `P`, `Q` Pauli strings squaring to the identity and `s` a sign:
//!
//! ```text
//! (M1 + s P)(M2 + s P) = (M1 + M2) ((M1 M2 + 1)/(M1 + M2) + s P)
//! (1 + s P)(M + s' Q)(1 + s P) = 2M (1 + s P)            if PQ = -QP
//! ```
//!
//! The first rule merges two terms on the same bond, the second removes a
//! term that anticommutes with two unit-shift neighbours. Terms are moved
//! past commuting neighbours to make either rule applicable. Every rewrite is
//! an operator identity, so `prefactor * product(terms)` always equals the
//! original product.

use crate::model::BondTerm;

const UNIT_SHIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractedString {
    pub prefactor: f64,
    pub terms: Vec<BondTerm>,
}

fn shared_sites(a: &BondTerm, b: &BondTerm) -> u32 {
    (a.mask() & b.mask()).count_ones()
}

/// Whether the Pauli parts of two terms commute.
///
/// Two-site strings of different flavor anticommute exactly when they share
/// one site; everything else commutes.
pub fn commute_adjacent(a: &BondTerm, b: &BondTerm) -> bool {
    a.flavor == b.flavor || shared_sites(a, b) != 1
}

fn same_operator(a: &BondTerm, b: &BondTerm) -> bool {
    a.flavor == b.flavor && a.sign == b.sign && a.same_bond(b)
}

/// Merges two terms with the same Pauli part into `factor * merged`, where
/// `merged` has unit coupling. Returns `None` if bond, flavor or sign differ.
pub fn merge_same_bond(a: &BondTerm, b: &BondTerm) -> Option<(f64, BondTerm)> {
    if !same_operator(a, b) {
        return None;
    }
    let total = a.shift + b.shift;
    let merged = BondTerm {
        coupling: 1.0,
        shift: (a.shift * b.shift + 1.0) / total,
        ..*a
    };
    Some((a.coupling * b.coupling * total, merged))
}

fn is_unit_shift(t: &BondTerm) -> bool {
    (t.shift - 1.0).abs() <= UNIT_SHIFT_TOL
}

/// Eliminates `mid` from `left * mid * right` when the outer terms are the
/// same unit-shift term and `mid` anticommutes with it.
///
/// For shifts other than one the product leaves a remainder proportional to
/// `mid`'s Pauli string, so no single-term rewrite exists and `None` is
/// returned.
pub fn sandwich_eliminate(
    left: &BondTerm,
    mid: &BondTerm,
    right: &BondTerm,
) -> Option<(f64, BondTerm)> {
    if !same_operator(left, right) || !is_unit_shift(left) || !is_unit_shift(right) {
        return None;
    }
    if commute_adjacent(left, mid) {
        return None;
    }
    let factor = left.coupling * right.coupling * mid.coupling * 2.0 * mid.shift;
    let survivor = BondTerm {
        coupling: 1.0,
        shift: 1.0,
        ..*left
    };
    Some((factor, survivor))
}

/// Index `j > from` of the first term matching `pred` that can be moved left
/// to position `from` by commuting past everything in `terms[from..j]`.
fn find_movable(terms: &[BondTerm], from: usize, pred: impl Fn(&BondTerm) -> bool) -> Option<usize> {
    (from..terms.len()).find(|&j| {
        pred(&terms[j]) && terms[from..j].iter().all(|t| commute_adjacent(t, &terms[j]))
    })
}

fn rewrite_once(terms: &mut Vec<BondTerm>) -> Option<f64> {
    for i in 0..terms.len() {
        let head = terms[i];
        if let Some(j) = find_movable(terms, i + 1, |t| same_operator(&head, t)) {
            let (factor, merged) = merge_same_bond(&head, &terms[j]).expect("same operator");
            terms.remove(j);
            terms[i] = merged;
            return Some(factor);
        }
        if i + 1 < terms.len() && is_unit_shift(&head) && !commute_adjacent(&head, &terms[i + 1]) {
            let pred = |t: &BondTerm| same_operator(&head, t) && is_unit_shift(t);
            if let Some(j) = find_movable(terms, i + 2, pred) {
                let (factor, survivor) = sandwich_eliminate(&head, &terms[i + 1], &terms[j])
                    .expect("sandwich preconditions checked");
                terms.remove(j);
                terms.remove(i + 1);
                terms[i] = survivor;
                return Some(factor);
            }
        }
    }
    None
}

/// Rewrites `string` until no rule applies.
///
/// Couplings are folded into the prefactor, so every returned term has unit
/// coupling. A zero coupling anywhere makes the prefactor zero.
pub fn contract(string: &[BondTerm]) -> ContractedString {
    let mut prefactor: f64 = string.iter().map(|t| t.coupling).product();
    let mut terms: Vec<BondTerm> = string
        .iter()
        .map(|t| BondTerm { coupling: 1.0, ..*t })
        .collect();
    while let Some(factor) = rewrite_once(&mut terms) {
        prefactor *= factor;
    }
    ContractedString { prefactor, terms }
}
