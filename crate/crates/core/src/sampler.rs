//! Metropolis sampling of SSE configurations `(n, string, alpha)`.
//!
//! The chain samples `|W(C)|` with
//!
//! ```text
//! W(C) = beta^n / n! * Re <alpha| H_{b_n} ... H_{b_1} |alpha>
//! ```
//!
//! and records `sgn W(C)` for reweighting. Each update kind is a discrete
//! proposal distribution over [`Move`]s plus a Metropolis acceptance. The
//! same move tables drive both random stepping and exact enumeration of the
//! transition matrix, so detailed balance can be checked directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contraction::contract;
use crate::estimators::RunAccumulators;
use crate::model::{active_terms, BondTerm, ModelSpec};
use crate::statevec::{matrix_element_prepared, prepare, BasisChoice, BasisLabel};
use crate::{Error, Result};

/// Weights below this fraction of the product of term norms are exact zeros
/// polluted by rounding and are treated as zero.
pub const ZERO_WEIGHT_TOL: f64 = 1e-12;

/// `beta^n / n!`.
pub fn boltzmann_factor(beta: f64, n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * beta / k as f64)
}

/// Configuration weight of an explicit term string, contraction pre-pass included.
pub fn string_weight(
    beta: f64,
    alpha: BasisLabel,
    basis: &BasisChoice,
    string: &[BondTerm],
) -> Result<f64> {
    let psi = prepare(alpha, basis)?;
    let contracted = contract(string);
    let element = contracted.prefactor * matrix_element_prepared(&psi, &contracted.terms).re;
    let bound: f64 = string.iter().map(BondTerm::norm_bound).product();
    if element.abs() <= ZERO_WEIGHT_TOL * bound {
        return Ok(0.0);
    }
    Ok(boltzmann_factor(beta, string.len()) * element)
}

/// Seeded random stream. Chains derived from one master seed use distinct
/// ChaCha streams, so they are independent and individually reproducible.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::for_chain(seed, 0)
    }

    pub fn for_chain(seed: u64, chain: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain);
        RngStream {
            seed,
            stream: chain,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    alpha: BasisLabel,
    /// Indices into the sampler's active term list; `string[0]` acts first.
    string: Vec<usize>,
    weight: f64,
}

impl Configuration {
    pub fn alpha(&self) -> BasisLabel {
        self.alpha
    }

    pub fn string(&self) -> &[usize] {
        &self.string
    }

    pub fn order(&self) -> usize {
        self.string.len()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn sign(&self) -> i8 {
        if self.weight < 0.0 {
            -1
        } else {
            1
        }
    }
}

/// Number of proposals of one update kind per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Count {
    Fixed(usize),
    /// One per site.
    Sites,
    /// One per operator in the current string.
    Order,
}

impl Count {
    fn resolve(self, n_sites: usize, order: usize) -> usize {
        match self {
            Count::Fixed(k) => k,
            Count::Sites => n_sites,
            Count::Order => order,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub alpha: Count,
    pub replace: Count,
    pub insert_remove: Count,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            alpha: Count::Sites,
            replace: Count::Order,
            insert_remove: Count::Sites,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        for c in [self.alpha, self.replace, self.insert_remove] {
            if c == Count::Fixed(0) {
                return Err(Error::Config("sweep plan counts must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Alpha,
    Replace,
    InsertRemove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    FlipBit(usize),
    Replace { pos: usize, term: usize },
    Insert { slot: usize, term: usize },
    Remove { pos: usize },
    /// Proposal that is rejected outright: the idle label proposal, and removal
    /// or replacement at `n = 0`. The idle label proposal keeps a sweep of `N`
    /// flips from conserving label parity when `N` is even.
    Stay,
}

/// One measurement emitted per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub sign: i8,
    pub order: usize,
}

#[derive(Debug, Clone)]
pub struct Sampler {
    model: ModelSpec,
    basis: BasisChoice,
    terms: Vec<BondTerm>,
    plan: SweepPlan,
}

impl Sampler {
    pub fn new(model: ModelSpec, basis: BasisChoice, plan: SweepPlan) -> Result<Self> {
        model.validate()?;
        plan.validate()?;
        basis.check_sites(model.n_sites)?;
        let terms = active_terms(&model)?;
        Ok(Sampler {
            model,
            basis,
            terms,
            plan,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn basis(&self) -> &BasisChoice {
        &self.basis
    }

    /// The proposal set: terms with nonzero coupling.
    pub fn terms(&self) -> &[BondTerm] {
        &self.terms
    }

    pub fn weight(&self, alpha: BasisLabel, string: &[usize]) -> f64 {
        let terms: Vec<BondTerm> = string.iter().map(|&i| self.terms[i]).collect();
        string_weight(self.model.beta, alpha, &self.basis, &terms)
            .expect("basis validated at construction")
    }

    pub fn configuration(&self, alpha: BasisLabel, string: Vec<usize>) -> Configuration {
        let weight = self.weight(alpha, &string);
        Configuration {
            alpha,
            string,
            weight,
        }
    }

    /// Empty string with a random label; weight 1.
    pub fn initial(&self, rng: &mut RngStream) -> Configuration {
        let n = self.model.n_sites;
        let alpha = BasisLabel::new(rng.index(1 << n), n);
        self.configuration(alpha, Vec::new())
    }

    /// Full proposal distribution of one update kind from `config`.
    pub fn moves(&self, kind: UpdateKind, config: &Configuration) -> Vec<(f64, Move)> {
        let n_sites = self.model.n_sites;
        let n = config.order();
        let t = self.terms.len();
        match kind {
            UpdateKind::Alpha => {
                let p = 1.0 / (n_sites + 1) as f64;
                let mut out: Vec<(f64, Move)> = (0..n_sites).map(|s| (p, Move::FlipBit(s))).collect();
                out.push((p, Move::Stay));
                out
            }
            UpdateKind::Replace if n == 0 => vec![(1.0, Move::Stay)],
            UpdateKind::Replace => {
                let p = 1.0 / (n * t) as f64;
                (0..n)
                    .flat_map(|pos| (0..t).map(move |term| (p, Move::Replace { pos, term })))
                    .collect()
            }
            UpdateKind::InsertRemove => {
                let p_insert = 0.5 / ((n + 1) * t) as f64;
                let mut out: Vec<(f64, Move)> = (0..=n)
                    .flat_map(|slot| (0..t).map(move |term| (p_insert, Move::Insert { slot, term })))
                    .collect();
                if n == 0 {
                    out.push((0.5, Move::Stay));
                } else {
                    out.extend((0..n).map(|pos| (0.5 / n as f64, Move::Remove { pos })));
                }
                out
            }
        }
    }

    fn propose(&self, kind: UpdateKind, config: &Configuration, rng: &mut RngStream) -> Move {
        let n = config.order();
        let t = self.terms.len();
        match kind {
            UpdateKind::Alpha => {
                let site = rng.index(self.model.n_sites + 1);
                if site == self.model.n_sites {
                    Move::Stay
                } else {
                    Move::FlipBit(site)
                }
            }
            UpdateKind::Replace if n == 0 => Move::Stay,
            UpdateKind::Replace => Move::Replace {
                pos: rng.index(n),
                term: rng.index(t),
            },
            UpdateKind::InsertRemove => {
                if rng.coin() {
                    Move::Insert {
                        slot: rng.index(n + 1),
                        term: rng.index(t),
                    }
                } else if n == 0 {
                    Move::Stay
                } else {
                    Move::Remove { pos: rng.index(n) }
                }
            }
        }
    }

    /// The configuration a move leads to, with its weight, or `None` for [`Move::Stay`].
    pub fn candidate(&self, config: &Configuration, mv: Move) -> Option<Configuration> {
        let mut alpha = config.alpha;
        let mut string = config.string.clone();
        match mv {
            Move::Stay => return None,
            Move::FlipBit(site) => alpha = alpha.flipped(site),
            Move::Replace { pos, term } => string[pos] = term,
            Move::Insert { slot, term } => string.insert(slot, term),
            Move::Remove { pos } => {
                string.remove(pos);
            }
        }
        Some(self.configuration(alpha, string))
    }

    /// Metropolis acceptance of `mv` from `from` to `to`.
    ///
    /// Insertion picks one of `n + 1` slots and one of `t` terms, removal one
    /// of `n + 1` operators, so the proposal ratio is `t` for insertion and
    /// `1 / t` for removal. The `beta / (n + 1)` factor sits inside the weights.
    pub fn acceptance(&self, from: &Configuration, to: &Configuration, mv: Move) -> f64 {
        if to.weight == 0.0 {
            return 0.0;
        }
        let t = self.terms.len() as f64;
        let ratio = to.weight.abs() / from.weight.abs();
        let proposal = match mv {
            Move::Insert { .. } => t,
            Move::Remove { .. } => 1.0 / t,
            _ => 1.0,
        };
        (ratio * proposal).min(1.0)
    }

    fn step(&self, kind: UpdateKind, config: &mut Configuration, rng: &mut RngStream) {
        let mv = self.propose(kind, config, rng);
        if let Some(next) = self.candidate(config, mv) {
            let p = self.acceptance(config, &next, mv);
            if p >= 1.0 || rng.uniform() < p {
                *config = next;
            }
        }
    }

    pub fn update_alpha(&self, config: &mut Configuration, rng: &mut RngStream) {
        self.step(UpdateKind::Alpha, config, rng);
    }

    /// Replaces one operator; does nothing at `n = 0`.
    pub fn update_string_fixed_n(&self, config: &mut Configuration, rng: &mut RngStream) {
        self.step(UpdateKind::Replace, config, rng);
    }

    pub fn update_insert_remove(&self, config: &mut Configuration, rng: &mut RngStream) {
        self.step(UpdateKind::InsertRemove, config, rng);
    }

    pub fn sweep(&self, config: &mut Configuration, rng: &mut RngStream) -> Sample {
        let n_sites = self.model.n_sites;
        for _ in 0..self.plan.alpha.resolve(n_sites, config.order()) {
            self.update_alpha(config, rng);
        }
        for _ in 0..self.plan.replace.resolve(n_sites, config.order()) {
            self.update_string_fixed_n(config, rng);
        }
        for _ in 0..self.plan.insert_remove.resolve(n_sites, config.order()) {
            self.update_insert_remove(config, rng);
        }
        Sample {
            sign: config.sign(),
            order: config.order(),
        }
    }

    /// Runs one chain: `warmup` discarded sweeps, then `measure` recorded ones.
    pub fn run_chain(
        &self,
        rng: &mut RngStream,
        warmup: u64,
        measure: u64,
        bins: usize,
    ) -> RunAccumulators {
        let mut config = self.initial(rng);
        for _ in 0..warmup {
            self.sweep(&mut config, rng);
        }
        let mut acc = RunAccumulators::new(measure, bins);
        for _ in 0..measure {
            acc.push(self.sweep(&mut config, rng));
        }
        acc
    }
}
