//! Property tests for the structural invariants.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use extpauli::density::random_mixed_state_with;
use extpauli::fock::{binomial, occupations_of, wedge_embed, Ladder, PureState, Sector};
use extpauli::gates::{build_protocol, gate_matrix, GateOp, Target};
use extpauli::linalg::{eigvalsh_desc, C64};
use extpauli::montecarlo::violation_probability;
use extpauli::noise::{default_pairs, evolve_noisy_protocol, purity_lower_bound, NoiseParams};
use extpauli::polytope::{
    check_m_fermion, check_pure_bd_within, check_weakened, class_polytope_for, random_near_pure_state, Merit,
};
use extpauli::tomography::reconstruct_one_rdm;

fn amplitudes(len: usize) -> impl Strategy<Value = DVector<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
}

fn state(d: usize, n: usize, amps: DVector<C64>) -> PureState {
    PureState::new(Sector::new(d, n).unwrap(), amps).unwrap().normalized().unwrap()
}

proptest! {
    #[test]
    fn creation_operators_anticommute(amps in amplitudes(binomial(6, 2)), i in 0usize..6, j in 0usize..6) {
        prop_assume!(i != j);
        let s = state(6, 2, amps);
        let ij = s.apply_ladder(i, Ladder::Creation).unwrap().apply_ladder(j, Ladder::Creation).unwrap();
        let ji = s.apply_ladder(j, Ladder::Creation).unwrap().apply_ladder(i, Ladder::Creation).unwrap();
        prop_assert!((ij.amplitudes() + ji.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn pure_states_obey_borland_dennis(amps in amplitudes(binomial(6, 3))) {
        let l = occupations_of(&state(6, 3, amps)).unwrap();
        prop_assert!(l.as_slice().iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        prop_assert!((l.sum() - 3.0).abs() < 1e-12);
        let (report, ok) = check_pure_bd_within(&l, 1e-9).unwrap();
        prop_assert!(ok, "{report:?}");
    }

    #[test]
    fn two_fermion_spectra_are_pairwise_degenerate(amps in amplitudes(binomial(6, 2))) {
        let l = occupations_of(&state(6, 2, amps)).unwrap();
        for p in l.as_slice().chunks(2) {
            prop_assert!((p[0] - p[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn wedged_states_are_m_fermion(amps in amplitudes(binomial(6, 2)), v in amplitudes(6)) {
        let psi = state(6, 2, amps);
        let b: Vec<C64> = v.iter().copied().collect();
        let Ok(wedged) = wedge_embed(&psi, &[b]) else { return Ok(()) };
        let l = occupations_of(&wedged).unwrap();
        prop_assert!(check_m_fermion(l.as_slice(), 3, 6, 2).unwrap());
    }

    #[test]
    fn gates_are_unitary_and_conserve_number(angle in -7.0f64..7.0, n in 1usize..6, kind in 0usize..3) {
        let sector = Sector::new(6, n).unwrap();
        let gate = match kind {
            0 => GateOp::rotation(0, 4, angle),
            1 => GateOp::controlled(2, 1, 5, angle),
            _ => GateOp::phase(3, 0, angle),
        };
        let u = gate_matrix(&sector, &gate).unwrap();
        let defect = (u.adjoint() * &u - nalgebra::DMatrix::<C64>::identity(u.nrows(), u.ncols())).norm();
        prop_assert!(defect < 1e-12);
    }

    #[test]
    fn near_pure_states_obey_weakened_bounds(eps in 0.0f64..0.5, rank in 1usize..6, seed in any::<u64>()) {
        let rho = random_near_pure_state(eps, rank, seed).unwrap();
        let l = eigvalsh_desc(rho.one_rdm().matrix());
        prop_assert!(check_weakened(&l, eps).unwrap().member);
    }

    #[test]
    fn weakened_check_reduces_and_grows(raw in prop::collection::vec(0.0f64..1.0, 6), e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let mut l = raw;
        l.sort_by(|a, b| b.total_cmp(a));
        let pure = l[0] + l[1] - l[2] <= 1.0 + 1e-9 && l[0] + l[1] + l[3] <= 2.0 + 1e-9;
        prop_assert_eq!(check_weakened(&l, 0.0).unwrap().member, pure);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        if check_weakened(&l, lo).unwrap().member {
            prop_assert!(check_weakened(&l, hi).unwrap().member);
        }
    }

    #[test]
    fn class_polytopes_nest(weights in prop::collection::vec(0.0f64..1.0, 1..8), pick in 0usize..3) {
        let inner = class_polytope_for(Target::ALL[pick]);
        let outer = class_polytope_for(Target::ALL[pick + 1]);
        let verts = inner.vertices();
        let total: f64 = weights.iter().take(verts.len()).sum();
        prop_assume!(total > 1e-6);
        let mut point = vec![0.0; 6];
        for (w, v) in weights.iter().zip(&verts) {
            for (p, x) in point.iter_mut().zip(v) {
                *p += w / total * x;
            }
        }
        prop_assert!(inner.contains(&point));
        prop_assert!(outer.contains(&point));
    }

    #[test]
    fn purity_bound_never_exceeds_purity(seed in any::<u64>(), rank in 1usize..21) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_mixed_state_with(Sector::new(6, 3).unwrap(), rank, &mut rng);
        prop_assert!(purity_lower_bound(&rho, &default_pairs(6)).unwrap() <= rho.purity() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dephasing_never_raises_purity(rate in 1e4f64..1e9, pick in 1usize..4) {
        let p = extpauli::noise::with_default_durations(&build_protocol(Target::ALL[pick]));
        let params = NoiseParams { dephasing_rate: rate, ..NoiseParams::noiseless() };
        let (traj, rho) = evolve_noisy_protocol(&p, &params, 2e-12).unwrap();
        prop_assert!(traj.purity.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_sigma_is_bounded_by_shot_count(amps in amplitudes(binomial(6, 3)), shots in 10u64..5000, seed in any::<u64>()) {
        let est = reconstruct_one_rdm(&state(6, 3, amps), shots, seed).unwrap();
        let cap = 1.0 / (4.0 * shots as f64).sqrt();
        prop_assert!((0..6).all(|i| est.sigma[(i, i)] <= cap + 1e-15));
    }
}

#[test]
fn violation_probability_falls_with_sigma() {
    let n = 100_000;
    for (base, merit) in [(Target::Epr, Merit::FSlater), (Target::W, Merit::FEpr), (Target::Ghz, Merit::FW)] {
        let p: Vec<f64> = (0..=8).map(|k| violation_probability(base, merit, 0.025 * k as f64, n, 3).unwrap()).collect();
        for w in p.windows(2) {
            let noise = 2.0 * (w[0] * (1.0 - w[0]) / n as f64).sqrt();
            assert!(w[1] <= w[0] + noise + 1e-12, "{base}: {p:?}");
        }
    }
}
