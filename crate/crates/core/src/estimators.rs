//! Sign-reweighted estimators with binning and jackknife errors.
//!
//! Samples are drawn from `|W|`; an observable is estimated as
//! `<O sgn> / <sgn>`. Errors are one standard error, computed from bins that
//! partition each chain's samples in order.

use serde::{Deserialize, Serialize};

use crate::model::ModelSpec;
use crate::sampler::Sample;
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 20;

/// Exact integer sums over one bin.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSums {
    pub count: u64,
    pub sign: i64,
    pub order: u64,
    pub signed_order: i64,
    pub order_sq: u64,
}

impl BinSums {
    fn push(&mut self, s: Sample) {
        let sign = i64::from(s.sign);
        self.count += 1;
        self.sign += sign;
        self.order += s.order as u64;
        self.signed_order += sign * s.order as i64;
        self.order_sq += (s.order * s.order) as u64;
    }

    fn merge(&mut self, other: &BinSums) {
        self.count += other.count;
        self.sign += other.sign;
        self.order += other.order;
        self.signed_order += other.signed_order;
        self.order_sq += other.order_sq;
    }
}

/// Streaming sums for one or more chains.
///
/// A fresh accumulator expects a known number of samples and spreads them over
/// `bins` consecutive bins. [`merge`](Self::merge) concatenates bin lists, so
/// merged accumulators are meant for estimation, not further pushing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAccumulators {
    expected: u64,
    totals: BinSums,
    bins: Vec<BinSums>,
    max_order: usize,
}

impl RunAccumulators {
    pub fn new(expected_samples: u64, bins: usize) -> Self {
        assert!(bins > 0);
        RunAccumulators {
            expected: expected_samples.max(1),
            totals: BinSums::default(),
            bins: vec![BinSums::default(); bins],
            max_order: 0,
        }
    }

    pub fn push(&mut self, sample: Sample) {
        let n_bins = self.bins.len() as u64;
        let index = (self.totals.count * n_bins / self.expected).min(n_bins - 1);
        self.bins[index as usize].push(sample);
        self.totals.push(sample);
        self.max_order = self.max_order.max(sample.order);
    }

    pub fn merge(mut self, other: &RunAccumulators) -> RunAccumulators {
        self.expected += other.expected;
        self.totals.merge(&other.totals);
        self.bins.extend_from_slice(&other.bins);
        self.max_order = self.max_order.max(other.max_order);
        self
    }

    pub fn count(&self) -> u64 {
        self.totals.count
    }

    pub fn totals(&self) -> &BinSums {
        &self.totals
    }

    pub fn bins(&self) -> &[BinSums] {
        &self.bins
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn filled_bins(&self) -> Result<Vec<BinSums>> {
        if self.totals.count < self.bins.len() as u64 {
            return Err(Error::TooFewSamples {
                samples: self.totals.count,
                bins: self.bins.len(),
            });
        }
        Ok(self.bins.iter().copied().filter(|b| b.count > 0).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// One standard error.
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reliability {
    Reliable,
    /// `|<sgn>|` is within three standard errors of zero.
    Unreliable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: Estimate,
    /// Sign-reweighted `<n>`.
    pub mean_order: Estimate,
    pub average_sign: Estimate,
    pub reliability: Reliability,
}

/// Standard error of the mean of per-bin means.
fn bin_mean_stderr(bins: &[BinSums], per_bin: impl Fn(&BinSums) -> f64) -> f64 {
    let k = bins.len();
    if k < 2 {
        return 0.0;
    }
    let means: Vec<f64> = bins.iter().map(|b| per_bin(b) / b.count as f64).collect();
    let mean = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Jackknife standard error of `sum(num) / sum(den)` over bins.
fn jackknife_ratio_stderr(
    bins: &[BinSums],
    num: impl Fn(&BinSums) -> f64,
    den: impl Fn(&BinSums) -> f64,
) -> f64 {
    let k = bins.len();
    if k < 2 {
        return 0.0;
    }
    let total_num: f64 = bins.iter().map(&num).sum();
    let total_den: f64 = bins.iter().map(&den).sum();
    let loo: Vec<f64> = bins
        .iter()
        .map(|b| (total_num - num(b)) / (total_den - den(b)))
        .collect();
    let mean = loo.iter().sum::<f64>() / k as f64;
    let var = loo.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (k - 1) as f64 / k as f64;
    var.sqrt()
}

pub fn average_sign(acc: &RunAccumulators) -> Result<Estimate> {
    let bins = acc.filled_bins()?;
    let t = acc.totals();
    Ok(Estimate {
        value: t.sign as f64 / t.count as f64,
        stderr: bin_mean_stderr(&bins, |b| b.sign as f64),
    })
}

/// Plain `<n>` over the `|W|` ensemble, without sign reweighting.
pub fn raw_mean_order(acc: &RunAccumulators) -> Result<Estimate> {
    let bins = acc.filled_bins()?;
    let t = acc.totals();
    Ok(Estimate {
        value: t.order as f64 / t.count as f64,
        stderr: bin_mean_stderr(&bins, |b| b.order as f64),
    })
}

/// Standard deviation of `n` in the `|W|` ensemble, i.e. the width of the
/// order distribution rather than the error of its mean.
pub fn order_fluctuation(acc: &RunAccumulators) -> Result<f64> {
    acc.filled_bins()?;
    let t = acc.totals();
    let c = t.count as f64;
    let mean = t.order as f64 / c;
    Ok((t.order_sq as f64 / c - mean * mean).max(0.0).sqrt())
}

/// `E = -<n>/beta + offset` with `<n> = sum(n sgn) / sum(sgn)`.
///
/// A vanishing sign does not fail; the result is returned with
/// [`Reliability::Unreliable`] and whatever numbers the ratio produced.
pub fn energy(acc: &RunAccumulators, model: &ModelSpec) -> Result<EnergyEstimate> {
    let sign = average_sign(acc)?;
    let bins = acc.filled_bins()?;
    let t = acc.totals();
    let reliability = if sign.value.abs() < 3.0 * sign.stderr || t.sign == 0 {
        Reliability::Unreliable
    } else {
        Reliability::Reliable
    };
    let order = t.signed_order as f64 / t.sign as f64;
    let order_err = jackknife_ratio_stderr(&bins, |b| b.signed_order as f64, |b| b.sign as f64);
    Ok(EnergyEstimate {
        energy: Estimate {
            value: -order / model.beta + model.energy_offset(),
            stderr: order_err / model.beta,
        },
        mean_order: Estimate {
            value: order,
            stderr: order_err,
        },
        average_sign: sign,
        reliability,
    })
}

/// `|stderr / reference| * 100`.
pub fn percent_error(_value: f64, stderr: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((stderr / reference).abs() * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc_from(samples: &[(i8, usize)], bins: usize) -> RunAccumulators {
        let mut acc = RunAccumulators::new(samples.len() as u64, bins);
        for &(sign, order) in samples {
            acc.push(Sample { sign, order });
        }
        acc
    }

    #[test]
    fn all_positive_sign() {
        let acc = acc_from(&vec![(1, 3); 100], 20);
        assert_eq!(average_sign(&acc).unwrap(), Estimate { value: 1.0, stderr: 0.0 });
    }

    #[test]
    fn alternating_sign() {
        let samples: Vec<_> = (0..100).map(|i| (if i % 2 == 0 { 1 } else { -1 }, 1)).collect();
        assert_eq!(average_sign(&acc_from(&samples, 20)).unwrap().value, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let acc = acc_from(&[(1, 0); 5], 20);
        assert!(matches!(average_sign(&acc), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn bins_partition_in_order() {
        let samples: Vec<_> = (0..45).map(|i| (1, i)).collect();
        let acc = acc_from(&samples, 20);
        let counts: Vec<u64> = acc.bins().iter().map(|b| b.count).collect();
        assert_eq!(counts.iter().sum::<u64>(), 45);
        assert!(counts.iter().all(|&c| c == 2 || c == 3));
        // bin order follows sample order
        let means: Vec<f64> = acc.bins().iter().map(|b| b.order as f64 / b.count as f64).collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sign_free_energy_is_plain_average() {
        let model = ModelSpec::new(3, 1.0, 1.0, 1.0, 0.5).unwrap();
        let samples: Vec<_> = (0..200).map(|i| (1, 3 + i % 7)).collect();
        let acc = acc_from(&samples, 20);
        let e = energy(&acc, &model).unwrap();
        let mean_n = acc.totals().order as f64 / acc.count() as f64;
        assert_eq!(e.energy.value, -mean_n / model.beta + model.energy_offset());
        assert_eq!(e.reliability, Reliability::Reliable);
    }

    #[test]
    fn vanishing_sign_is_flagged() {
        let model = ModelSpec::new(3, 1.0, 1.0, 1.0, 0.5).unwrap();
        let mut samples: Vec<_> = (0..400).map(|i| (if i % 2 == 0 { 1 } else { -1 }, 4)).collect();
        samples.push((1, 4));
        let acc = acc_from(&samples, 20);
        let e = energy(&acc, &model).unwrap();
        assert_eq!(e.reliability, Reliability::Unreliable);
    }

    #[test]
    fn fluctuation_of_constant_order_is_zero() {
        let acc = acc_from(&vec![(1, 5); 40], 20);
        assert_eq!(order_fluctuation(&acc).unwrap(), 0.0);
        let acc = acc_from(&(0..40).map(|i| (1, 2 * (i % 2))).collect::<Vec<_>>(), 20);
        assert!((order_fluctuation(&acc).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percent_error_values() {
        assert!((percent_error(-5.0, 0.1, -5.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(percent_error(3.0, 0.0, 7.0).unwrap(), 0.0);
        assert!(percent_error(1.0, 0.2, 1.0).unwrap() > percent_error(1.0, 0.1, 1.0).unwrap());
        assert!(matches!(percent_error(1.0, 0.1, 0.0), Err(Error::ZeroReference)));
    }

    #[test]
    fn merge_is_commutative_on_estimates() {
        let a = acc_from(&(0..100).map(|i| (if i % 5 == 0 { -1 } else { 1 }, i % 9)).collect::<Vec<_>>(), 20);
        let b = acc_from(&(0..60).map(|i| (1, 2 + i % 4)).collect::<Vec<_>>(), 20);
        let model = ModelSpec::new(2, 1.0, 1.0, 1.0, 1.0).unwrap();
        let ab = energy(&a.clone().merge(&b), &model).unwrap();
        let ba = energy(&b.clone().merge(&a), &model).unwrap();
        assert_eq!(ab.energy.value, ba.energy.value);
        assert!((ab.energy.stderr - ba.energy.stderr).abs() < 1e-14);
        assert_eq!(a.clone().merge(&b).totals(), b.clone().merge(&a).totals());
    }
}
