//! Density operators on a fixed-N sector.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fock::{one_rdm_of_density, OneRdm, PureState, Sector};
use crate::linalg::{eigvalsh_desc, hermiticity_defect, C64};

#[derive(Clone, Debug)]
pub struct MixedState {
    sector: Arc<Sector>,
    matrix: DMatrix<C64>,
}

impl MixedState {
    /// Checks shape, Hermiticity (`1e-12`), unit trace (`1e-12`) and a
    /// spectrum bounded below by `-1e-10`.
    pub fn new(sector: Arc<Sector>, matrix: DMatrix<C64>) -> Result<Self> {
        let state = Self::new_unchecked(sector, matrix)?;
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn new_unchecked(sector: Arc<Sector>, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = sector.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "{}x{} matrix for a sector of dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { sector, matrix })
    }

    pub fn validate(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.matrix);
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!("density matrix not Hermitian ({defect:e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("density matrix trace {tr}")));
        }
        let min = eigvalsh_desc(&self.matrix).last().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidInput(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self { sector: state.sector().clone(), matrix: state.density_matrix() }
    }

    pub fn maximally_mixed(sector: Arc<Sector>) -> Self {
        let dim = sector.dim();
        let matrix = DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Self { sector, matrix }
    }

    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|` for normalized weights.
    pub fn mixture(terms: &[(f64, &PureState)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
        let sector = first.sector().clone();
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if terms.iter().any(|(w, _)| *w < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidInput("mixture weights must be non-negative".into()));
        }
        let dim = sector.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (w, s) in terms {
            first.check_same_sector(s)?;
            matrix += s.density_matrix() * C64::new(w / total, 0.0);
        }
        Ok(Self { sector, matrix })
    }

    pub fn sector(&self) -> &Arc<Sector> {
        &self.sector
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn modes(&self) -> usize {
        self.sector.modes()
    }

    pub fn particles(&self) -> usize {
        self.sector.particles()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized target.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        if !self.sector.same_as(target.sector()) {
            return Err(Error::SectorMismatch(format!(
                "state (d={}, N={}) vs target (d={}, N={})",
                self.modes(),
                self.particles(),
                target.modes(),
                target.particles()
            )));
        }
        let v = target.amplitudes() / C64::new(target.norm(), 0.0);
        Ok(v.dotc(&(&self.matrix * &v)).re)
    }

    pub fn one_rdm(&self) -> OneRdm {
        OneRdm::from_matrix(one_rdm_of_density(&self.sector, &self.matrix)).expect("square by construction")
    }

    pub fn spectrum(&self) -> Vec<f64> {
        eigvalsh_desc(&self.matrix)
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.spectrum()[0]
    }

    /// Occupation-basis populations `ρ_ss`.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&mut self, u: &DMatrix<C64>) {
        self.matrix = u * &self.matrix * u.adjoint();
    }
}

/// `A A† / Tr(A A†)` for a `dim × rank` matrix of standard complex Gaussians.
pub fn random_mixed_state_with<R: Rng + ?Sized>(sector: Arc<Sector>, rank: usize, rng: &mut R) -> MixedState {
    let factor = random_factor(sector.dim(), rank.max(1), rng);
    let mut matrix = &factor * factor.adjoint();
    let tr = matrix.trace().re;
    matrix.unscale_mut(tr);
    MixedState { sector, matrix }
}

pub(crate) fn random_factor<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

pub(crate) fn random_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::random_pure_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_state_has_unit_purity_and_fidelity() {
        let s = random_pure_state(6, 3, 4).unwrap();
        let rho = MixedState::from_pure(&s);
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_overlap_is_inverse_dimension() {
        let sector = Sector::new(6, 3).unwrap();
        let rho = MixedState::maximally_mixed(sector);
        let s = random_pure_state(6, 3, 2).unwrap();
        assert!((rho.fidelity(&s).unwrap() - 1.0 / 20.0).abs() < 1e-14);
    }

    #[test]
    fn two_state_mixtures() {
        let a = PureState::basis("111000").unwrap();
        let b = PureState::basis("110100").unwrap();
        let half = MixedState::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!((half.purity() - 0.5).abs() < 1e-15);
        let eps = 0.06;
        let skew = MixedState::mixture(&[(1.0 - eps, &a), (eps, &b)]).unwrap();
        assert!((skew.purity() - 0.8872).abs() < 1e-12);
    }

    #[test]
    fn sector_mismatch_is_reported() {
        let rho = MixedState::from_pure(&PureState::basis("111000").unwrap());
        let other = PureState::basis("110000").unwrap();
        assert!(matches!(rho.fidelity(&other), Err(Error::SectorMismatch(_))));
    }

    #[test]
    fn random_mixed_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for rank in [1, 3, 20] {
            let rho = random_mixed_state_with(Sector::new(6, 3).unwrap(), rank, &mut rng);
            rho.validate().unwrap();
            rho.one_rdm().validate(3, 1e-10).unwrap();
        }
    }
}
