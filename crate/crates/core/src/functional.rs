//! The fermionic quantum functional: the largest Shannon entropy of `λ/N`
//! over an entanglement polytope.
//!
//! The pairing equalities are eliminated by an orthonormal parametrization
//! `λ = x₀ + B z` of the affine hull, after which the concave entropy is
//! maximized by projected gradient ascent from a grid of starting points.
//! Projection onto the remaining half-spaces uses Dykstra's algorithm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::OccupationVector;
use crate::polytope::{PolytopeSpec, Sense};

/// Entries of a probability vector must sum to one within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-9;
/// Floor applied to `λ̄_i` inside the logarithm of the gradient.
pub const LOG_CLAMP: f64 = 1e-12;

const GRID_PER_AXIS: usize = 9;
const MAX_ITERATIONS: usize = 2000;
const MIN_STEP: f64 = 1e-12;
const DYKSTRA_SWEEPS: usize = 500;
const FEASIBILITY_TOL: f64 = 1e-9;

/// `−Σ p_i ln p_i` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    if let Some(bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("entry {bad} is not a probability")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
    }
    Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    /// Nats.
    pub value: f64,
    pub argmax: OccupationVector,
}

/// JSON report `{polytope, E, argmax}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub polytope: String,
    #[serde(rename = "E")]
    pub e: f64,
    pub argmax: Vec<f64>,
}

impl FunctionalReport {
    pub fn new(spec: &PolytopeSpec, value: &EntropyValue) -> Self {
        Self { polytope: spec.label.clone(), e: value.value, argmax: value.argmax.as_slice().to_vec() }
    }
}

/// Half-space `a·z ≤ b` in reduced coordinates.
#[derive(Clone, Debug)]
struct HalfSpace {
    a: DVector<f64>,
    b: f64,
    norm_sq: f64,
}

/// Affine chart `λ = x₀ + B z` of the equality set together with the
/// half-spaces expressed in `z`.
struct Chart {
    x0: DVector<f64>,
    basis: DMatrix<f64>,
    halves: Vec<HalfSpace>,
    particles: f64,
}

impl Chart {
    fn new(spec: &PolytopeSpec) -> Result<Self> {
        let d = spec.dim;
        let eqs: Vec<_> = spec.equalities().collect();
        let (x0, basis) = if eqs.is_empty() {
            (DVector::from_element(d, 0.5), DMatrix::identity(d, d))
        } else {
            let a = DMatrix::from_fn(eqs.len(), d, |r, c| eqs[r].coefficients[c]);
            let b = DVector::from_fn(eqs.len(), |r, _| eqs[r].bound);
            let svd = a.clone().svd(true, true);
            let x0 = svd.solve(&b, 1e-12).map_err(|e| Error::Infeasible(e.to_string()))?;
            if (&a * &x0 - &b).norm() > FEASIBILITY_TOL {
                return Err(Error::Infeasible(format!("{}: equalities are inconsistent", spec.label)));
            }
            let gram = a.transpose() * &a;
            let eig = SymmetricEigen::new(gram);
            let scale = eig.eigenvalues.amax().max(1.0);
            let null: Vec<DVector<f64>> = (0..d)
                .filter(|&k| eig.eigenvalues[k].abs() <= 1e-10 * scale)
                .map(|k| eig.eigenvectors.column(k).into_owned())
                .collect();
            let mut basis = if null.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&null) };
            basis.apply(|v| {
                if v.abs() < 1e-12 {
                    *v = 0.0
                }
            });
            (x0, basis)
        };

        let ones = DVector::from_element(d, 1.0);
        if (basis.transpose() * &ones).amax() > 1e-9 {
            return Err(Error::Unsupported(format!("{}: particle number is not fixed by the equalities", spec.label)));
        }
        let particles = x0.sum();
        if !(particles > 0.0) {
            return Err(Error::Infeasible(format!("{}: occupations sum to {particles}", spec.label)));
        }

        let mut halves = Vec::new();
        let mut fixed_violation = 0.0f64;
        let mut push = |coeffs: &DVector<f64>, bound: f64| {
            let a = basis.transpose() * coeffs;
            let b = bound - coeffs.dot(&x0);
            let norm_sq = a.norm_squared();
            // constant on the affine hull: either always or never satisfied
            if norm_sq < 1e-20 {
                fixed_violation = fixed_violation.max(-b);
            } else {
                halves.push(HalfSpace { a, b, norm_sq });
            }
        };
        for q in spec.half_spaces() {
            let c = DVector::from_vec(q.coefficients.clone());
            match q.sense {
                Sense::Le => push(&c, q.bound),
                Sense::Ge => push(&(-c), -q.bound),
                Sense::Eq => unreachable!("filtered"),
            }
        }
        // implicit box 0 ≤ λ_i ≤ 1
        for i in 0..d {
            let e = DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 });
            push(&e, 1.0);
            push(&(-e), 0.0);
        }
        if fixed_violation > FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!("{}: empty polytope", spec.label)));
        }
        Ok(Self { x0, basis, halves, particles })
    }

    fn lambda(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.x0 + &self.basis * z
    }

    fn violation(&self, z: &DVector<f64>) -> f64 {
        self.halves.iter().map(|h| h.a.dot(z) - h.b).fold(0.0, f64::max)
    }

    /// Euclidean projection onto the intersection of the half-spaces.
    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut x = z.clone();
        if self.violation(&x) <= 0.0 {
            return x;
        }
        let mut corrections = vec![DVector::zeros(z.len()); self.halves.len()];
        for _ in 0..DYKSTRA_SWEEPS {
            let before = x.clone();
            for (h, p) in self.halves.iter().zip(corrections.iter_mut()) {
                let y = &x + &*p;
                let excess = h.a.dot(&y) - h.b;
                let next = if excess > 0.0 { &y - &h.a * (excess / h.norm_sq) } else { y.clone() };
                *p = &y - &next;
                x = next;
            }
            if (&x - &before).amax() < 1e-15 {
                break;
            }
        }
        x
    }

    fn entropy(&self, z: &DVector<f64>) -> f64 {
        let n = self.particles;
        self.lambda(z)
            .iter()
            .map(|&l| (l / n).max(0.0))
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }

    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let n = self.particles;
        let g = self.lambda(z).map(|l| -((l / n).max(LOG_CLAMP).ln() + 1.0) / n);
        self.basis.transpose() * g
    }

    fn ascend(&self, seed: DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let mut z = self.project(&seed);
        if self.violation(&z) > FEASIBILITY_TOL {
            return None;
        }
        let mut value = self.entropy(&z);
        let mut step = 1.0;
        for _ in 0..MAX_ITERATIONS {
            let g = self.gradient(&z);
            // backtracking on the projected step (Armijo condition)
            let accepted = loop {
                let next = self.project(&(&z + &g * step));
                let next_value = self.entropy(&next);
                if next_value >= value + 1e-4 * g.dot(&(&next - &z)) {
                    break Some((next, next_value));
                }
                step *= 0.5;
                if step < MIN_STEP {
                    break None;
                }
            };
            let Some((next, next_value)) = accepted else { break };
            let moved = (&next - &z).amax();
            z = next;
            value = next_value;
            step = (step * 2.0).min(1.0);
            if moved < 1e-13 {
                break;
            }
        }
        Some((value, z))
    }

    /// `GRID_PER_AXIS` points per reduced axis spanning the polytope's
    /// bounding box, or a box that contains every feasible `z` when the
    /// vertices are not available.
    fn seeds(&self, spec: &PolytopeSpec) -> Vec<DVector<f64>> {
        let k = self.basis.ncols();
        let vertices: Vec<DVector<f64>> = spec
            .vertices()
            .into_iter()
            .map(|v| self.basis.transpose() * (DVector::from_vec(v) - &self.x0))
            .collect();
        let (lo, hi) = if vertices.is_empty() {
            let r = (self.x0.len() as f64).sqrt() + self.x0.norm();
            (DVector::from_element(k, -r), DVector::from_element(k, r))
        } else {
            let lo = DVector::from_fn(k, |i, _| vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min));
            let hi = DVector::from_fn(k, |i, _| vertices.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max));
            (lo, hi)
        };
        let per_axis = if k <= 3 { GRID_PER_AXIS } else { (729f64.powf(1.0 / k as f64).floor() as usize).max(2) };
        let total = per_axis.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                DVector::from_fn(k, |i, _| {
                    let t = idx % per_axis;
                    idx /= per_axis;
                    lo[i] + (hi[i] - lo[i]) * t as f64 / (per_axis - 1) as f64
                })
            })
            .collect()
    }
}

/// Maximum of `H(λ/N)` over `spec`, with `N` the fixed occupation sum.
pub fn quantum_functional(spec: &PolytopeSpec) -> Result<EntropyValue> {
    let chart = Chart::new(spec)?;
    let infeasible = || Error::Infeasible(format!("{}: empty polytope", spec.label));

    let (value, z) = if chart.basis.ncols() == 0 {
        let z = DVector::zeros(0);
        if chart.violation(&z) > FEASIBILITY_TOL {
            return Err(infeasible());
        }
        (chart.entropy(&z), z)
    } else {
        chart
            .seeds(spec)
            .into_par_iter()
            .filter_map(|s| chart.ascend(s))
            .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
            .ok_or_else(infeasible)?
    };
    let lambda: Vec<f64> = chart.lambda(&z).iter().copied().collect();
    Ok(EntropyValue { value, argmax: OccupationVector::from_unsorted(lambda) })
}
