//! Cross-checks against independent brute-force constructions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use extpauli::fock::{one_rdm, random_pure_state, Ladder, PureState, Sector};
use extpauli::functional::quantum_functional;
use extpauli::gates::{dynamic_phase, gate_matrix, GateOp, PulseSpec, Target};
use extpauli::linalg::{eigvalsh_desc, C64};
use extpauli::polytope::class_polytope_for;

/// Annihilators on the full 2^d Fock space as Kronecker products
/// `Z ⊗ … ⊗ Z ⊗ σ ⊗ 1 ⊗ … ⊗ 1`, mode 0 leftmost (most significant).
fn dense_annihilators(d: usize) -> Vec<DMatrix<C64>> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let id = DMatrix::<C64>::identity(2, 2);
    let z = DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]);
    // basis (|0⟩, |1⟩); σ = |0⟩⟨1|
    let sigma = DMatrix::from_row_slice(2, 2, &[zero, one, zero, zero]);
    (0..d)
        .map(|m| {
            (0..d).fold(DMatrix::<C64>::identity(1, 1), |acc, k| {
                let f = if k < m { &z } else if k == m { &sigma } else { &id };
                acc.kronecker(f)
            })
        })
        .collect()
}

/// Restriction of a full Fock-space operator to a fixed-N sector.
fn restrict(op: &DMatrix<C64>, sector: &Sector) -> DMatrix<C64> {
    let s = sector.states();
    DMatrix::from_fn(s.len(), s.len(), |r, c| op[(s[r] as usize, s[c] as usize)])
}

fn embed(state: &PureState) -> DVector<C64> {
    let d = state.modes();
    let mut v = DVector::zeros(1 << d);
    for (k, &bits) in state.sector().states().iter().enumerate() {
        v[bits as usize] = state.amplitudes()[k];
    }
    v
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn ladder_operators_match_tensor_product_construction() {
    let d = 4;
    let a = dense_annihilators(d);
    for n in 1..d {
        let state = random_pure_state(d, n, 40 + n as u64).unwrap();
        let v = embed(&state);
        for (m, am) in a.iter().enumerate() {
            let down = embed(&state.apply_ladder(m, Ladder::Annihilation).unwrap());
            assert!((&down - am * &v).norm() < 1e-13);
            let up = embed(&state.apply_ladder(m, Ladder::Creation).unwrap());
            assert!((&up - am.adjoint() * &v).norm() < 1e-13);
        }
    }
}

#[test]
fn one_rdm_matches_dense_expectation_values() {
    for (d, n) in [(4, 2), (5, 2), (6, 3), (6, 2), (6, 4)] {
        let a = dense_annihilators(d);
        let state = random_pure_state(d, n, (10 * d + n) as u64).unwrap();
        let v = embed(&state);
        let oracle = DMatrix::from_fn(d, d, |i, j| (v.adjoint() * a[j].adjoint() * &a[i] * &v)[(0, 0)]);
        assert!(max_diff(one_rdm(&state).unwrap().matrix(), &oracle) < 1e-12, "d={d} N={n}");
    }
}

#[test]
fn spectrum_matches_real_embedding() {
    // A Hermitian H = A + iB has the spectrum of [[A, −B], [B, A]], each value twice.
    for seed in 0..20 {
        let gamma = one_rdm(&random_pure_state(6, 3, 900 + seed).unwrap()).unwrap().into_matrix();
        let d = gamma.nrows();
        let real = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
            let z = gamma[(r % d, c % d)];
            match (r < d, c < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let mut doubled: Vec<f64> = real.symmetric_eigen().eigenvalues.iter().copied().collect();
        doubled.sort_by(|x, y| y.total_cmp(x));
        let ours = eigvalsh_desc(&gamma);
        for (k, l) in ours.iter().enumerate() {
            assert!((l - doubled[2 * k]).abs() < 1e-12 && (l - doubled[2 * k + 1]).abs() < 1e-12);
        }
    }
}

fn hop(a: &[DMatrix<C64>], i: usize, j: usize) -> DMatrix<C64> {
    a[j].adjoint() * &a[i] - a[i].adjoint() * &a[j]
}

#[test]
fn gates_match_dense_matrix_exponentials() {
    let d = 6;
    let a = dense_annihilators(d);
    let num = |m: usize| a[m].adjoint() * &a[m];
    let sector = Sector::new(d, 2).unwrap();
    let half = |x: f64| C64::new(x / 2.0, 0.0);

    let cases: Vec<(GateOp, DMatrix<C64>)> = vec![
        (GateOp::rotation(0, 5, PI), hop(&a, 0, 5) * half(PI)),
        (GateOp::rotation(1, 4, 0.7), hop(&a, 1, 4) * half(0.7)),
        (GateOp::controlled(2, 0, 3, 1.3), num(2) * hop(&a, 0, 3) * half(1.3)),
        (GateOp::phase(1, 3, 0.9), (num(1) - num(3)) * C64::new(0.0, -0.45)),
    ];
    for (gate, generator) in cases {
        let oracle = restrict(&generator, &sector).exp();
        let ours = gate_matrix(&sector, &gate).unwrap();
        assert!(max_diff(&ours, &oracle) < 1e-12, "{gate:?}");
    }

    // R₁₆(π) moves the particle past every occupied mode in between.
    let r16 = GateOp::rotation(0, 5, PI);
    let dense = restrict(&(hop(&a, 0, 5) * half(PI)), &sector).exp();
    for bits in ["100001", "110000", "101000", "100100"] {
        let s = PureState::basis(bits).unwrap();
        let got = extpauli::gates::apply_gate(&s, &r16).unwrap();
        let want = &dense * s.amplitudes();
        assert!((got.amplitudes() - want).norm() < 1e-12, "{bits}");
    }
}

/// Entropy of `λ/3` with `λ = (l1, l2, l3, 1−l3, 1−l2, 1−l1)`.
fn paired_entropy(l: [f64; 3]) -> f64 {
    let full = [l[0], l[1], l[2], 1.0 - l[2], 1.0 - l[1], 1.0 - l[0]];
    full.iter().map(|&x| x / 3.0).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

fn in_class(t: Target, l: [f64; 3]) -> bool {
    let tol = 1e-12;
    let [l1, l2, l3] = l;
    let frame = l1 <= 1.0 + tol && l1 + tol >= l2 && l2 + tol >= l3 && l3 + tol >= 0.5;
    frame
        && match t {
            Target::Slater => l3 >= 1.0 - tol,
            Target::Epr => l1 >= 1.0 - tol && (l2 - l3).abs() <= tol,
            Target::W => l1 + l2 - l3 <= 1.0 + tol && l1 + l2 + l3 + tol >= 2.0,
            Target::Ghz => l1 + l2 - l3 <= 1.0 + tol,
        }
}

/// Best grid point of step `h` inside `[lo, hi]³`.
fn grid_max(t: Target, lo: [f64; 3], hi: [f64; 3], h: f64) -> Option<(f64, [f64; 3])> {
    let axis = |k: usize| {
        let n = ((hi[k] - lo[k]) / h).round() as usize;
        (0..=n).map(move |s| (lo[k] + s as f64 * h).clamp(0.5, 1.0))
    };
    let mut best: Option<(f64, [f64; 3])> = None;
    for l1 in axis(0) {
        for l2 in axis(1) {
            for l3 in axis(2) {
                let l = [l1, l2, l3];
                if in_class(t, l) {
                    let e = paired_entropy(l);
                    if best.is_none_or(|(b, _)| e > b) {
                        best = Some((e, l));
                    }
                }
            }
        }
    }
    best
}

#[test]
fn functional_matches_grid_search() {
    for t in Target::ALL {
        // Coarse pass, then a 1e-3 grid around the coarse winner. Grid
        // points on the EPR edge need l2 = l3 exactly, so both passes
        // share the 1e-3 lattice anchored at ½.
        let (_, coarse) = grid_max(t, [0.5; 3], [1.0; 3], 0.01).unwrap();
        let lo = coarse.map(|x| (x - 0.02).max(0.5));
        let hi = coarse.map(|x| (x + 0.02).min(1.0));
        let lo = lo.map(|x| 0.5 + ((x - 0.5) / 1e-3).round() * 1e-3);
        let (fine, _) = grid_max(t, lo, hi, 1e-3).unwrap();
        let ours = quantum_functional(&class_polytope_for(t)).unwrap().value;
        assert!(ours + 1e-12 >= fine, "{t}: optimizer {ours} below grid {fine}");
        assert!(ours - fine <= 1e-4, "{t}: optimizer {ours} vs grid {fine}");
    }
}

#[test]
fn dynamic_phase_matches_fine_trapezoid() {
    let cases: [(f64, f64, f64, f64, f64); 3] = [(2e9, 1.5e9, 0.2e-9, 3e9, 1.2e-9), (5e8, 5e8, 0.5e-9, 0.0, 3e-9), (1e10, 0.0, 0.05e-9, 2e10, 0.4e-9)];
    for (p0, p1, w, delta, t_total) in cases {
        let f = |t: f64| {
            let g = (-((t - t_total / 2.0) / w).powi(2) / 2.0).exp();
            ((p0 * g).powi(2) + (p1 * g).powi(2) + (delta / 2.0).powi(2)).sqrt() - delta / 2.0
        };
        let n = 1_000_000;
        let h = t_total / n as f64;
        let inner: f64 = (1..n).map(|k| f(k as f64 * h)).sum();
        let oracle = -h * (inner + 0.5 * (f(0.0) + f(t_total)));
        let ours = dynamic_phase(&PulseSpec::gaussian(p0, p1, w, delta, t_total)).unwrap();
        assert!((ours - oracle).abs() <= 1e-8 * oracle.abs(), "{ours} vs {oracle}");
    }
}

#[test]
fn detuning_sweep_spans_a_full_turn() {
    // Long constant pulse: Λ₂ runs monotonically from −T·√2·Ω at Δ = 0 towards 0.
    let (omega, t_total) = (1e9, 20e-9);
    let phases: Vec<f64> =
        (0..=40).map(|k| dynamic_phase(&PulseSpec::constant(omega, omega, k as f64 * 1e9, t_total)).unwrap()).collect();
    assert!(phases.windows(2).all(|w| w[1] >= w[0]));
    assert!(phases.last().unwrap() - phases[0] >= 2.0 * PI);
}
