//! Simulated 1-RDM tomography from site-occupation measurements.
//!
//! Only occupation numbers are observable. A diagonal entry `γ_ii` is the
//! mean of `n̂_i`. For an off-diagonal `γ_ij = x + iy` with `i < j`, mode `i`
//! is first carried next to `j` by swaps `R_{k,k+1}(π)`, `k = i..j−2`, which
//! map `a_i†` onto `a_{j−1}†` without a sign. Then
//!
//! - `R_{j−1,j}(π/2)` gives `⟨n̂_j⟩ − ⟨n̂_{j−1}⟩ = 2x`,
//! - `P_{j−1,j}(π/2)` followed by `R_{j−1,j}(π/2)` gives `⟨n̂_j⟩ − ⟨n̂_{j−1}⟩ = 2y`.
//!
//! Every setting re-prepares the state, so a full reconstruction needs `d`
//! diagonal and `d(d−1)` off-diagonal settings, `d²` in total.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::MixedState;
use crate::error::{Error, Result};
use crate::fock::{occupied, OneRdm, PureState, Sector};
use crate::gates::{apply_protocol, gate_matrix, GateOp, Protocol};
use crate::linalg::C64;

/// Default shots per setting.
pub const DEFAULT_SHOTS: u64 = 100_000;

/// States that can be measured in the occupation basis.
pub trait Measurable: Sync {
    fn sector(&self) -> &Sector;
    /// Probability of each sector basis state.
    fn populations(&self) -> Vec<f64>;
    fn transformed(&self, p: &Protocol) -> Result<Self>
    where
        Self: Sized;
}

impl Measurable for PureState {
    fn sector(&self) -> &Sector {
        PureState::sector(self)
    }

    fn populations(&self) -> Vec<f64> {
        let n2 = self.norm().powi(2);
        self.amplitudes().iter().map(|a| a.norm_sqr() / n2).collect()
    }

    fn transformed(&self, p: &Protocol) -> Result<Self> {
        apply_protocol(self, p)
    }
}

impl Measurable for MixedState {
    fn sector(&self) -> &Sector {
        MixedState::sector(self)
    }

    fn populations(&self) -> Vec<f64> {
        MixedState::populations(self)
    }

    fn transformed(&self, p: &Protocol) -> Result<Self> {
        p.validate(self.modes())?;
        let mut out = self.clone();
        for g in &p.gates {
            out.conjugate_by(&gate_matrix(self.sector(), g)?);
        }
        Ok(out)
    }
}

/// Outcome of `M` projective occupation measurements of one site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub site: usize,
    pub shots: u64,
    pub ones: u64,
    pub estimate: f64,
    /// `√(p̂(1 − p̂)/M)`, never above `1/√(4M)`.
    pub sigma: f64,
}

impl ShotResult {
    fn new(site: usize, shots: u64, ones: u64) -> Self {
        let estimate = ones as f64 / shots as f64;
        let sigma = (estimate * (1.0 - estimate) / shots as f64).sqrt();
        Self { site, shots, ones, estimate, sigma }
    }
}

fn mean_occupation(sector: &Sector, populations: &[f64], site: usize) -> f64 {
    let d = sector.modes();
    sector
        .states()
        .iter()
        .zip(populations)
        .filter(|(&bits, _)| occupied(bits, d, site))
        .map(|(_, p)| p)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidInput("at least one shot per setting is required".into()));
    }
    Ok(())
}

fn setting_rng(seed: u64, setting: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(setting);
    rng
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("probability clamped to [0, 1]").sample(rng)
}

/// `ones ~ Binomial(M, ⟨n̂_site⟩)`.
pub fn simulate_occupation_counts<S: Measurable>(state: &S, site: usize, shots: u64, seed: u64) -> Result<ShotResult> {
    check_shots(shots)?;
    let sector = state.sector();
    if site >= sector.modes() {
        return Err(Error::InvalidInput(format!("site {site} out of range for d = {}", sector.modes())));
    }
    let p = mean_occupation(sector, &state.populations(), site);
    let ones = binomial(shots, p, &mut setting_rng(seed, 0));
    Ok(ShotResult::new(site, shots, ones))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imag,
}

/// Gate sequence mapping `Re γ_ij` or `Im γ_ij` onto the occupations of
/// sites `j − 1` and `j`. Requires `i < j`.
pub fn readout_sequence_offdiag(i: usize, j: usize, part: Part) -> Result<Protocol> {
    if i >= j {
        return Err(Error::InvalidInput(format!("off-diagonal readout needs i < j, got ({i}, {j})")));
    }
    let mut gates: Vec<GateOp> = (i..j - 1).map(|k| GateOp::rotation(k, k + 1, PI)).collect();
    if part == Part::Imag {
        gates.push(GateOp::phase(j - 1, j, FRAC_PI_2));
    }
    gates.push(GateOp::rotation(j - 1, j, FRAC_PI_2));
    let tag = match part {
        Part::Real => "re",
        Part::Imag => "im",
    };
    Ok(Protocol::new(format!("{tag}({},{})", i + 1, j + 1), gates))
}

/// Pair 1-RDM after `b_i = (a_i + a_j)/√2`, `b_j = (a_i − a_j)/√2`, for
/// `[[α, x+iy], [x−iy, β]]`.
pub fn gamma_b(alpha: f64, beta: f64, x: f64, y: f64) -> [[C64; 2]; 2] {
    let h = 0.5;
    [
        [C64::new(h * (alpha + beta + 2.0 * x), 0.0), C64::new(h * (alpha - beta), -y)],
        [C64::new(h * (alpha - beta), y), C64::new(h * (alpha + beta - 2.0 * x), 0.0)],
    ]
}

/// Pair 1-RDM after `c_i = (a_i + i a_j)/√2`, `c_j = (a_i − i a_j)/√2`.
pub fn gamma_c(alpha: f64, beta: f64, x: f64, y: f64) -> [[C64; 2]; 2] {
    let h = 0.5;
    [
        [C64::new(h * (alpha + beta - 2.0 * y), 0.0), C64::new(h * (alpha - beta), -x)],
        [C64::new(h * (alpha - beta), x), C64::new(h * (alpha + beta + 2.0 * y), 0.0)],
    ]
}

/// Reconstructed 1-RDM. `sigma[(i, j)]` is the standard error of `γ_ij`;
/// off the diagonal it combines the real and imaginary parts in quadrature.
#[derive(Clone, Debug, PartialEq)]
pub struct RdmEstimate {
    pub matrix: DMatrix<C64>,
    pub sigma: DMatrix<f64>,
    /// `None` for the infinite-shot reconstruction.
    pub shots_per_setting: Option<u64>,
    pub settings: usize,
}

#[derive(Serialize, Deserialize)]
struct RdmEstimateJson {
    matrix_re: Vec<Vec<f64>>,
    matrix_im: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    m: Option<u64>,
    settings: usize,
}

impl RdmEstimate {
    pub fn to_one_rdm(&self) -> Result<OneRdm> {
        OneRdm::from_matrix(self.matrix.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let rows = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..self.matrix.nrows()).map(|i| (0..self.matrix.ncols()).map(|j| f(i, j)).collect()).collect()
        };
        let json = RdmEstimateJson {
            matrix_re: rows(&|i, j| self.matrix[(i, j)].re),
            matrix_im: rows(&|i, j| self.matrix[(i, j)].im),
            sigma: rows(&|i, j| self.sigma[(i, j)]),
            m: self.shots_per_setting,
            settings: self.settings,
        };
        Ok(serde_json::to_string_pretty(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: RdmEstimateJson = serde_json::from_str(text)?;
        let d = j.matrix_re.len();
        let ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|r| r.len() == d);
        if !(ok(&j.matrix_re) && ok(&j.matrix_im) && ok(&j.sigma)) {
            return Err(Error::InvalidDimension("RDM estimate rows must form square matrices".into()));
        }
        Ok(Self {
            matrix: DMatrix::from_fn(d, d, |r, c| C64::new(j.matrix_re[r][c], j.matrix_im[r][c])),
            sigma: DMatrix::from_fn(d, d, |r, c| j.sigma[r][c]),
            shots_per_setting: j.m,
            settings: j.settings,
        })
    }
}

/// One measurement setting of the reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Setting {
    Diagonal(usize),
    Off(usize, usize, Part),
}

/// Diagonal settings first, then `(re, im)` for each `i < j`.
fn settings(d: usize) -> Vec<Setting> {
    let mut out: Vec<Setting> = (0..d).map(Setting::Diagonal).collect();
    for i in 0..d {
        for j in i + 1..d {
            out.push(Setting::Off(i, j, Part::Real));
            out.push(Setting::Off(i, j, Part::Imag));
        }
    }
    out
}

/// Number of settings for a full reconstruction of a `d`-mode 1-RDM.
pub fn setting_count(d: usize) -> usize {
    settings(d).len()
}

/// Estimate and standard error of the quantity a setting targets.
fn measure<S: Measurable>(state: &S, setting: Setting, shots: Option<u64>, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    match setting {
        Setting::Diagonal(site) => {
            let p = mean_occupation(state.sector(), &state.populations(), site);
            Ok(match shots {
                None => (p, 0.0),
                Some(m) => {
                    let r = ShotResult::new(site, m, binomial(m, p, rng));
                    (r.estimate, r.sigma)
                }
            })
        }
        Setting::Off(i, j, part) => {
            let moved = state.transformed(&readout_sequence_offdiag(i, j, part)?)?;
            let sector = moved.sector();
            let d = sector.modes();
            // joint outcome probabilities of (n_{j-1}, n_j): 00, 10, 01, 11
            let mut joint = [0.0f64; 4];
            for (&bits, p) in sector.states().iter().zip(moved.populations()) {
                let k = occupied(bits, d, j - 1) as usize + 2 * occupied(bits, d, j) as usize;
                joint[k] += p;
            }
            let half_diff = |probs: &[f64; 4]| 0.5 * (probs[2] - probs[1]);
            Ok(match shots {
                None => (half_diff(&joint), 0.0),
                Some(m) => {
                    let counts = multinomial(m, &joint, rng);
                    let freq = counts.map(|c| c as f64 / m as f64);
                    let mean = freq[2] - freq[1];
                    let var = (freq[2] + freq[1] - mean * mean).max(0.0);
                    (0.5 * mean, 0.5 * (var / m as f64).sqrt())
                }
            })
        }
    }
}

/// Sequential-binomial multinomial draw.
fn multinomial<R: Rng>(n: u64, probs: &[f64; 4], rng: &mut R) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let p = if mass > 0.0 { probs[k].max(0.0) / mass } else { 0.0 };
        out[k] = binomial(remaining, p, rng);
        remaining -= out[k];
        mass -= probs[k].max(0.0);
    }
    out[3] = remaining;
    out
}

fn reconstruct<S: Measurable>(state: &S, shots: Option<u64>, seed: u64) -> Result<RdmEstimate> {
    let d = state.sector().modes();
    let list = settings(d);
    let results: Vec<(f64, f64)> = list
        .par_iter()
        .enumerate()
        .map(|(k, &s)| measure(state, s, shots, &mut setting_rng(seed, k as u64)))
        .collect::<Result<_>>()?;

    let mut matrix = DMatrix::<C64>::zeros(d, d);
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    for (&s, &(value, err)) in list.iter().zip(&results) {
        match s {
            Setting::Diagonal(i) => {
                matrix[(i, i)] = C64::new(value, 0.0);
                sigma[(i, i)] = err;
            }
            Setting::Off(i, j, Part::Real) => {
                matrix[(i, j)].re = value;
                matrix[(j, i)].re = value;
                sigma[(i, j)] = err;
            }
            Setting::Off(i, j, Part::Imag) => {
                matrix[(i, j)].im = value;
                matrix[(j, i)].im = -value;
                let total = sigma[(i, j)].hypot(err);
                sigma[(i, j)] = total;
                sigma[(j, i)] = total;
            }
        }
    }
    Ok(RdmEstimate { matrix, sigma, shots_per_setting: shots, settings: list.len() })
}

/// Shot-sampled reconstruction with `M` shots per setting.
pub fn reconstruct_one_rdm<S: Measurable>(state: &S, shots: u64, seed: u64) -> Result<RdmEstimate> {
    check_shots(shots)?;
    reconstruct(state, Some(shots), seed)
}

/// Same settings, with exact expectation values in place of shot averages.
pub fn reconstruct_one_rdm_exact<S: Measurable>(state: &S) -> Result<RdmEstimate> {
    reconstruct(state, None, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{natural_occupations, one_rdm, random_pure_state};
    use crate::gates::Target;

    #[test]
    fn eigenstate_counts_are_deterministic() {
        let slater = Target::Slater.state();
        let r = simulate_occupation_counts(&slater, 0, 1000, 7).unwrap();
        assert_eq!((r.ones, r.sigma), (1000, 0.0));
        let epr = simulate_occupation_counts(&Target::Epr.state(), 5, 1000, 7).unwrap();
        assert_eq!(epr.ones, 0);
    }

    #[test]
    fn ghz_site_is_half_filled() {
        let m = 100_000;
        let r = simulate_occupation_counts(&Target::Ghz.state(), 0, m, 11).unwrap();
        assert!((r.estimate - 0.5).abs() < 3.0 / (4.0 * m as f64).sqrt());
        assert!(r.sigma <= 1.0 / (4.0 * m as f64).sqrt() + 1e-15);
        assert_eq!(r, simulate_occupation_counts(&Target::Ghz.state(), 0, m, 11).unwrap());
    }

    #[test]
    fn readout_sequences() {
        let adj = readout_sequence_offdiag(2, 3, Part::Real).unwrap();
        assert_eq!(adj.gates, vec![GateOp::rotation(2, 3, FRAC_PI_2)]);
        let far = readout_sequence_offdiag(0, 5, Part::Real).unwrap();
        assert_eq!(far.gates.len(), 5);
        assert_eq!(far.gates[3], GateOp::rotation(3, 4, PI));
        assert_eq!(far.gates[4], GateOp::rotation(4, 5, FRAC_PI_2));
        assert!(readout_sequence_offdiag(2, 2, Part::Imag).is_err());
    }

    #[test]
    fn gamma_b_example() {
        let g = gamma_b(0.5, 0.5, 0.5, 0.0);
        assert_eq!((g[0][0].re, g[1][1].re), (1.0, 0.0));
        let c = gamma_c(0.3, 0.5, 0.1, 0.2);
        assert!((c[0][0].re - 0.2).abs() < 1e-15 && (c[1][1].re - 0.6).abs() < 1e-15);
    }

    #[test]
    fn imaginary_readout_diagonals() {
        let psi = random_pure_state(6, 3, 5).unwrap();
        let g = one_rdm(&psi).unwrap();
        let (i, j) = (1, 4);
        let (a, b, y) = (g.entry(i, i).re, g.entry(j, j).re, g.entry(i, j).im);
        let moved = apply_protocol(&psi, &readout_sequence_offdiag(i, j, Part::Imag).unwrap()).unwrap();
        let pops = moved.populations();
        let n_lo = mean_occupation(moved.sector(), &pops, j - 1);
        let n_hi = mean_occupation(moved.sector(), &pops, j);
        assert!((n_lo - (a + b - 2.0 * y) / 2.0).abs() < 1e-12);
        assert!((n_hi - (a + b + 2.0 * y) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_reconstruction_matches_rdm() {
        for seed in 0..5 {
            let psi = random_pure_state(6, 3, seed).unwrap();
            let est = reconstruct_one_rdm_exact(&psi).unwrap();
            let diff = (&est.matrix - one_rdm(&psi).unwrap().matrix()).camax();
            assert!(diff < 1e-12, "seed {seed}: {diff:e}");
            assert_eq!(est.settings, 36);
        }
    }

    #[test]
    fn mixed_states_reconstruct_too() {
        let rho = MixedState::mixture(&[(0.7, &Target::W.state()), (0.3, &Target::Ghz.state())]).unwrap();
        let est = reconstruct_one_rdm_exact(&rho).unwrap();
        assert!((&est.matrix - rho.one_rdm().matrix()).camax() < 1e-12);
    }

    #[test]
    fn sampled_ghz_spectrum() {
        let est = reconstruct_one_rdm(&Target::Ghz.state(), 100_000, 3).unwrap();
        let (lam, _) = natural_occupations(&est.to_one_rdm().unwrap()).unwrap();
        assert!(lam.max_abs_diff(&[0.5; 6]) < 0.01, "{lam:?}");
        let back = RdmEstimate::from_json(&est.to_json().unwrap()).unwrap();
        assert_eq!(back, est);
    }
}
