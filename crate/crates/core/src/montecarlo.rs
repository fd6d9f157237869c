//! Error margins of the merit functions under Gaussian 1-RDM noise.
//!
//! Every entry of the ideal 1-RDM of a characteristic state is perturbed by
//! an independent Gaussian of width `σ`: the real diagonal and both the real
//! and imaginary parts of each upper-triangle entry, closed Hermitian. For
//! the EPR state `γ₆₆ = 0` sits on the physical boundary and its perturbation
//! is folded to `|N(0, σ²)|`.
//!
//! Sample `k` always consumes the same standard normals, drawn from stream `k`
//! of a ChaCha8 generator keyed by the seed, so results do not depend on the
//! thread count and the violation probability of one seed is a deterministic
//! function of `σ` (common random numbers for the bisection).

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{one_rdm, OneRdm};
use crate::gates::Target;
use crate::linalg::{eigvalsh_desc, fmt_num, C64};
use crate::polytope::Merit;

/// Bisection steps on `[0, 0.5]`; `0.5 / 2¹² ≈ 1.2·10⁻⁴`.
pub const BISECTION_STEPS: usize = 12;
pub const SIGMA_MAX: f64 = 0.5;
pub const DEFAULT_CONFIDENCE: f64 = 0.999;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub base: Target,
    pub sigma: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma {} must be non-negative", self.sigma)));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Whether `merit` is the facet the `base` state is expected to violate.
pub fn is_characteristic_pairing(base: Target, merit: Merit) -> bool {
    merit.paired_base() == base
}

/// Noise-free 1-RDM of a characteristic state.
pub fn base_rdm(base: Target) -> DMatrix<C64> {
    one_rdm(&base.state()).expect("characteristic states are normalized").into_matrix()
}

/// Standard normals of one sample: `d` diagonal, then `(re, im)` per upper entry.
struct Draws(Vec<f64>);

impl Draws {
    fn new(d: usize, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let count = d + d * (d - 1);
        Draws((0..count).map(|_| StandardNormal.sample(&mut rng)).collect())
    }

    fn perturb(&self, base: Target, gamma: &DMatrix<C64>, sigma: f64) -> DMatrix<C64> {
        let d = gamma.nrows();
        let mut g = gamma.clone();
        let mut k = 0;
        for i in 0..d {
            let mut z = self.0[k];
            k += 1;
            if base == Target::Epr && i == d - 1 {
                z = z.abs();
            }
            g[(i, i)].re += sigma * z;
        }
        for i in 0..d {
            for j in i + 1..d {
                let dz = C64::new(sigma * self.0[k], sigma * self.0[k + 1]);
                k += 2;
                g[(i, j)] += dz;
                g[(j, i)] = g[(i, j)].conj();
            }
        }
        g
    }
}

/// Sample number `index` of the perturbed ensemble.
pub fn sample_perturbed_rdm(spec: &PerturbationSpec, index: u64) -> Result<OneRdm> {
    spec.validate()?;
    let gamma = base_rdm(spec.base);
    let draws = Draws::new(gamma.nrows(), spec.seed, index);
    OneRdm::from_matrix(draws.perturb(spec.base, &gamma, spec.sigma))
}

/// Counts over one ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub n_samples: usize,
    pub violations: usize,
    /// Samples whose spectrum leaves `[0, 1]`.
    pub out_of_range: usize,
    pub probability: f64,
}

fn merit_samples(spec: &PerturbationSpec, merit: Merit) -> Vec<(f64, bool)> {
    let gamma = base_rdm(spec.base);
    (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let g = Draws::new(gamma.nrows(), spec.seed, k).perturb(spec.base, &gamma, spec.sigma);
            let lambda = eigvalsh_desc(&g);
            let outside = lambda.iter().any(|&l| !(0.0..=1.0).contains(&l));
            (merit.of(&lambda), outside)
        })
        .collect()
}

pub fn violation_stats(base: Target, merit: Merit, sigma: f64, n_samples: usize, seed: u64) -> Result<ViolationStats> {
    let spec = PerturbationSpec { base, sigma, n_samples, seed };
    spec.validate()?;
    let samples = merit_samples(&spec, merit);
    let violations = samples.iter().filter(|(f, _)| *f < 0.0).count();
    let out_of_range = samples.iter().filter(|(_, o)| *o).count();
    Ok(ViolationStats { n_samples, violations, out_of_range, probability: violations as f64 / n_samples as f64 })
}

/// Fraction of perturbed samples with a negative merit value.
pub fn violation_probability(base: Target, merit: Merit, sigma: f64, n_samples: usize, seed: u64) -> Result<f64> {
    Ok(violation_stats(base, merit, sigma, n_samples, seed)?.probability)
}

/// JSON summary of a threshold search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSummary {
    pub base: Target,
    pub merit: Merit,
    pub sigma_star: f64,
    pub confidence: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Violation probability at `sigma_star`.
    pub probability: f64,
    /// False for base/merit combinations the error analysis does not cover.
    pub characteristic_pairing: bool,
}

/// Largest `σ ∈ [0, 0.5]` whose violation probability is still at least
/// `confidence`, by bisection with common random numbers.
pub fn max_tolerated_sigma(
    base: Target,
    merit: Merit,
    confidence: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ThresholdSummary> {
    if !(confidence > 0.5 && confidence < 1.0) {
        return Err(Error::InvalidInput(format!("confidence {confidence} outside (0.5, 1)")));
    }
    let prob = |sigma: f64| violation_probability(base, merit, sigma, n_samples, seed);
    let summary = |sigma_star: f64, probability: f64| ThresholdSummary {
        base,
        merit,
        sigma_star,
        confidence,
        n_samples,
        seed,
        probability,
        characteristic_pairing: is_characteristic_pairing(base, merit),
    };

    let p_lo = prob(0.0)?;
    if p_lo < confidence {
        return Ok(summary(0.0, p_lo));
    }
    let p_hi = prob(SIGMA_MAX)?;
    if p_hi >= confidence {
        return Ok(summary(SIGMA_MAX, p_hi));
    }
    let (mut lo, mut hi, mut p_at_lo) = (0.0, SIGMA_MAX, p_lo);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let p = prob(mid)?;
        if p >= confidence {
            lo = mid;
            p_at_lo = p;
        } else {
            hi = mid;
        }
    }
    Ok(summary(lo, p_at_lo))
}

/// Equal-width histogram of merit values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `F,count` rows with the bin centre in the first column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "F,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            let centre = 0.5 * (self.edges[k] + self.edges[k + 1]);
            writeln!(out, "{},{c}", fmt_num(centre))?;
        }
        Ok(())
    }
}

/// Merit values of every sample of an ensemble, in sample order.
pub fn merit_distribution(spec: &PerturbationSpec, merit: Merit) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(merit_samples(spec, merit).into_iter().map(|(f, _)| f).collect())
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 || values.is_empty() {
        return Err(Error::InvalidInput("histogram needs samples and at least one bin".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1e-12;
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}
