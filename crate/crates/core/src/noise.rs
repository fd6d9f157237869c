//! Open-system evolution of the preparation protocols.
//!
//! The only decoherence channel acting on the sector is pure dephasing in the
//! site-occupation basis: over a step `Δt` the coherence between basis states
//! `s` and `t` is multiplied by `exp(−γ Δt · h(s, t) / 2)`, with `h` the
//! Hamming distance of the occupation patterns. This is a product of
//! independent single-mode phase-flip channels, and a single delocalized
//! particle `(|10⟩ + |01⟩)/√2` loses its coherence at rate `γ`.
//!
//! Gates are Trotterized: each gate of duration `T` is split into `n` equal
//! slices `g(φ/n)` interleaved with the channel for `T/n`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::density::MixedState;
use crate::error::{Error, Result};
use crate::fock::{OccupationVector, PureState, Sector};
use crate::gates::{gate_matrix, invert_protocol, GateKind, Protocol, Target};
use crate::linalg::{eigvalsh_desc, fmt_num, C64};
use crate::polytope::{check_weakened, WeakenedReport};

/// Pure dephasing rate at 4 K, 1/s.
pub const REFERENCE_DEPHASING_RATE: f64 = 1.66e5;
/// Upper estimate of the spontaneous emission rate, 1/s.
pub const REFERENCE_EMISSION_RATE: f64 = 7.79388e8;
/// Error margin used for the weakened Borland-Dennis check along trajectories.
pub const DEFAULT_MARGIN: f64 = 0.06;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Site-basis pure dephasing rate, 1/s.
    pub dephasing_rate: f64,
    /// Extra decay rate of the coherences of the driven pair, applied only
    /// while a gate acts on it. Zero disables it.
    #[serde(default)]
    pub emission_rate: f64,
    #[serde(default)]
    pub temperature_tag: String,
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self { dephasing_rate: 0.0, emission_rate: 0.0, temperature_tag: "ideal".into() }
    }

    /// Measured dephasing at 4 K, emission knob off.
    pub fn device_4k() -> Self {
        Self { dephasing_rate: REFERENCE_DEPHASING_RATE, emission_rate: 0.0, temperature_tag: "4K".into() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("dephasing_rate", self.dephasing_rate), ("emission_rate", self.emission_rate)] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} = {r} must be a non-negative rate")));
            }
        }
        Ok(())
    }
}

/// Default physical gate times, seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDurations {
    pub rotation: f64,
    pub controlled: f64,
    pub phase: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        Self { rotation: 20e-12, controlled: 60e-12, phase: 20e-12 }
    }
}

impl GateDurations {
    /// Fills in durations for gates that have none.
    pub fn apply(&self, p: &Protocol) -> Protocol {
        let gates = p
            .gates
            .iter()
            .map(|g| match g.duration_s {
                Some(_) => *g,
                None => g.with_duration(match g.kind {
                    GateKind::Rotation { .. } => self.rotation,
                    GateKind::ControlledRotation { .. } => self.controlled,
                    GateKind::Phase { .. } => self.phase,
                }),
            })
            .collect();
        Protocol::new(p.label.clone(), gates)
    }
}

/// Per-step record of a noisy run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Overlap with the noiseless state at the same instant.
    pub fidelity: Vec<f64>,
    pub purity: Vec<f64>,
    pub lambda: Vec<OccupationVector>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub margin_ok: Vec<bool>,
    pub margin: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn record(&mut self, t: f64, rho: &MixedState, ideal: &PureState) -> Result<()> {
        let lambda = OccupationVector::from_unsorted(eigvalsh_desc(rho.one_rdm().matrix()));
        let l = lambda.as_slice();
        // F1, F2 and the margin are only defined for three fermions in six modes
        let (f1, f2, ok) = if l.len() == 6 {
            (l[0] + l[1] - l[2], l[0] + l[1] + l[3], check_weakened(l, self.margin)?.member)
        } else {
            (f64::NAN, f64::NAN, false)
        };
        self.times.push(t);
        self.fidelity.push(rho.fidelity(ideal)?);
        self.purity.push(rho.purity());
        self.f1.push(f1);
        self.f2.push(f2);
        self.margin_ok.push(ok);
        self.lambda.push(lambda);
        Ok(())
    }

    /// `time_s,fidelity,purity,lambda1..lambdaD,F1,F2,margin_ok`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.lambda.first().map_or(6, |l| l.len());
        let lambdas: Vec<String> = (1..=d).map(|k| format!("lambda{k}")).collect();
        writeln!(out, "time_s,fidelity,purity,{},F1,F2,margin_ok", lambdas.join(","))?;
        for k in 0..self.len() {
            let l: Vec<String> = self.lambda[k].as_slice().iter().map(|&x| fmt_num(x)).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_num(self.times[k]),
                fmt_num(self.fidelity[k]),
                fmt_num(self.purity[k]),
                l.join(","),
                fmt_num(self.f1[k]),
                fmt_num(self.f2[k]),
                self.margin_ok[k]
            )?;
        }
        Ok(())
    }
}

/// Step size, idle time after the last gate and margin for the trajectory.
#[derive(Clone, Debug)]
pub struct EvolutionOptions {
    pub dt: f64,
    pub hold: f64,
    pub margin: f64,
}

impl EvolutionOptions {
    pub fn new(dt: f64) -> Self {
        Self { dt, hold: 0.0, margin: DEFAULT_MARGIN }
    }
}

/// Largest admissible step for a protocol: a tenth of its shortest gate.
pub fn max_step(p: &Protocol) -> Result<f64> {
    let mut shortest = f64::INFINITY;
    for g in &p.gates {
        let t = g
            .duration_s
            .ok_or_else(|| Error::InvalidInput(format!("{g} has no duration; see GateDurations::apply")))?;
        if t > 0.0 {
            shortest = shortest.min(t);
        }
    }
    Ok(shortest / 10.0)
}

struct Channel {
    hamming: DMatrix<f64>,
    sector: Arc<Sector>,
}

impl Channel {
    fn new(sector: Arc<Sector>) -> Self {
        let s = sector.states();
        let hamming = DMatrix::from_fn(s.len(), s.len(), |a, b| (s[a] ^ s[b]).count_ones() as f64);
        Self { hamming, sector }
    }

    /// Coherence damping for one step; `driven` adds the emission knob on a pair.
    fn apply(&self, rho: &mut DMatrix<C64>, params: &NoiseParams, dt: f64, driven: Option<(usize, usize)>) {
        let d = self.sector.modes();
        let pair_mask = driven.map(|(i, j)| (1u32 << (d - 1 - i)) | (1u32 << (d - 1 - j)));
        let states = self.sector.states();
        let n = rho.nrows();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let mut rate = params.dephasing_rate * self.hamming[(a, b)] / 2.0;
                if let Some(mask) = pair_mask {
                    if (states[a] ^ states[b]) & mask != 0 {
                        rate += params.emission_rate;
                    }
                }
                if rate > 0.0 {
                    rho[(a, b)] *= (-rate * dt).exp();
                }
            }
        }
    }
}

/// Noisy run from `|101010⟩`. Requires every gate to carry a duration and
/// `0 < dt ≤ min duration / 10`.
pub fn evolve_noisy_protocol(p: &Protocol, params: &NoiseParams, dt: f64) -> Result<(Trajectory, MixedState)> {
    evolve_noisy_protocol_with(&Target::Slater.state(), p, params, &EvolutionOptions::new(dt))
}

pub fn evolve_noisy_protocol_with(
    initial: &PureState,
    p: &Protocol,
    params: &NoiseParams,
    opts: &EvolutionOptions,
) -> Result<(Trajectory, MixedState)> {
    let rho = MixedState::from_pure(initial);
    evolve_mixed(rho, initial.clone(), p, params, opts)
}

fn evolve_mixed(
    mut rho: MixedState,
    mut ideal: PureState,
    p: &Protocol,
    params: &NoiseParams,
    opts: &EvolutionOptions,
) -> Result<(Trajectory, MixedState)> {
    params.validate()?;
    p.validate(rho.modes())?;
    let limit = max_step(p)?;
    if !(opts.dt > 0.0 && opts.dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::StepSize(format!("dt = {:e} s must lie in (0, {limit:e}]", opts.dt)));
    }
    if !(opts.hold.is_finite() && opts.hold >= 0.0) {
        return Err(Error::InvalidInput(format!("hold time {} must be non-negative", opts.hold)));
    }
    let sector = rho.sector().clone();
    let channel = Channel::new(sector.clone());
    let mut traj = Trajectory { margin: opts.margin, ..Default::default() };
    let mut t = 0.0;
    traj.record(t, &rho, &ideal)?;

    for g in &p.gates {
        let total = g.duration_s.expect("checked by max_step");
        let steps = ((total / opts.dt) - 1e-9).ceil().max(1.0) as usize;
        let slice = g.scaled(1.0 / steps as f64);
        let u = gate_matrix(&sector, &slice)?;
        let h = total / steps as f64;
        for _ in 0..steps {
            rho.conjugate_by(&u);
            channel.apply(rho.matrix_mut(), params, h, Some(g.pair()));
            *ideal.amplitudes_mut() = &u * ideal.amplitudes();
            t += h;
            traj.record(t, &rho, &ideal)?;
        }
    }

    if opts.hold > 0.0 {
        let steps = (opts.hold / opts.dt).ceil().max(1.0) as usize;
        let h = opts.hold / steps as f64;
        for _ in 0..steps {
            channel.apply(rho.matrix_mut(), params, h, None);
            t += h;
            traj.record(t, &rho, &ideal)?;
        }
    }
    Ok((traj, rho))
}

pub fn fidelity(rho: &MixedState, target: &PureState) -> Result<f64> {
    rho.fidelity(target)
}

pub fn purity(rho: &MixedState) -> f64 {
    rho.purity()
}

/// Result of running a protocol forward and then backward.
#[derive(Clone, Debug)]
pub struct EchoOutcome {
    pub state: MixedState,
    /// Overlap with `|101010⟩`.
    pub fidelity: f64,
    pub forward: MixedState,
}

/// Forward protocol, then its inverse, under the same noise; the step is a
/// tenth of the shortest gate.
pub fn loschmidt_echo(p: &Protocol, params: &NoiseParams) -> Result<EchoOutcome> {
    let dt = max_step(p)?;
    loschmidt_echo_with(p, params, dt)
}

pub fn loschmidt_echo_with(p: &Protocol, params: &NoiseParams, dt: f64) -> Result<EchoOutcome> {
    let slater = Target::Slater.state();
    let opts = EvolutionOptions::new(dt);
    let (_, forward) = evolve_noisy_protocol_with(&slater, p, params, &opts)?;
    let ideal_mid = crate::gates::apply_protocol(&slater, p)?;
    let (_, state) = evolve_mixed(forward.clone(), ideal_mid, &invert_protocol(p), params, &opts)?;
    let fidelity = state.fidelity(&slater)?;
    Ok(EchoOutcome { state, fidelity, forward })
}

/// `Σ_k ‖λ⃗ᵏ‖² − (K − 1)` where `λ⃗ᵏ` is the spectrum of the 2×2 block of
/// the 1-RDM on pair `k` and `K` the number of pairs. Never exceeds `Tr ρ²`.
pub fn purity_lower_bound(rho: &MixedState, pairs: &[(usize, usize)]) -> Result<f64> {
    let d = rho.modes();
    let mut seen = vec![false; d];
    for &(a, b) in pairs {
        for m in [a, b] {
            if m >= d || seen[m] || a == b {
                return Err(Error::InvalidPartition(format!("{pairs:?} over {d} modes")));
            }
            seen[m] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidPartition(format!("{pairs:?} leaves modes uncovered")));
    }
    let gamma = rho.one_rdm();
    let g = gamma.matrix();
    let total: f64 = pairs
        .iter()
        .map(|&(a, b)| {
            let block = DMatrix::from_row_slice(2, 2, &[g[(a, a)], g[(a, b)], g[(b, a)], g[(b, b)]]);
            eigvalsh_desc(&block).iter().map(|l| l * l).sum::<f64>()
        })
        .sum();
    Ok(total - (pairs.len() as f64 - 1.0))
}

/// The pairing `{1,2},{3,4},{5,6}`.
pub fn default_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d / 2).map(|k| (2 * k, 2 * k + 1)).collect()
}

/// Weakened Borland-Dennis check with `ε = 1 − (largest eigenvalue of ρ)`.
pub fn weakened_from_state(rho: &MixedState) -> Result<WeakenedReport> {
    let epsilon = (1.0 - rho.largest_eigenvalue()).clamp(0.0, 1.0);
    let lambda = eigvalsh_desc(rho.one_rdm().matrix());
    check_weakened(&lambda, epsilon)
}

/// Every gate of `p` with the default duration for its kind.
pub fn with_default_durations(p: &Protocol) -> Protocol {
    GateDurations::default().apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{apply_protocol, build_protocol, GateOp};

    fn hold_single_pair(gamma: f64, t: f64) -> Result<f64> {
        let pair = PureState::from_real_terms(&[("10", 1.0), ("01", 1.0)])?;
        let p = Protocol::new("hold", vec![GateOp::phase(0, 1, 0.0).with_duration(t)]);
        let params = NoiseParams { dephasing_rate: gamma, emission_rate: 0.0, temperature_tag: String::new() };
        let (_, rho) = evolve_noisy_protocol_with(&pair, &p, &params, &EvolutionOptions::new(t / 10.0))?;
        Ok(rho.purity())
    }

    fn timed(t: Target) -> Protocol {
        with_default_durations(&build_protocol(t))
    }

    #[test]
    fn noiseless_runs_match_pure_evolution() {
        for t in Target::ALL {
            let p = timed(t);
            let dt = max_step(&p).unwrap_or(1e-12);
            if p.gates.is_empty() {
                continue;
            }
            let (traj, rho) = evolve_noisy_protocol(&p, &NoiseParams::noiseless(), dt).unwrap();
            let pure = apply_protocol(&Target::Slater.state(), &p).unwrap();
            assert!((rho.fidelity(&pure).unwrap() - 1.0).abs() < 1e-10);
            assert!((rho.purity() - 1.0).abs() < 1e-10);
            assert!(traj.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn dephasing_reduces_purity_monotonically() {
        let (traj, _) = evolve_noisy_protocol(&timed(Target::Ghz), &NoiseParams::device_4k(), 2e-12).unwrap();
        assert!(traj.purity.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        assert!(traj.margin_ok.iter().all(|&ok| ok));
    }

    #[test]
    fn coarse_step_is_rejected() {
        let r = evolve_noisy_protocol(&timed(Target::Epr), &NoiseParams::device_4k(), 5e-12);
        assert!(matches!(r, Err(Error::StepSize(_))));
        let untimed = evolve_noisy_protocol(&build_protocol(Target::Epr), &NoiseParams::device_4k(), 1e-12);
        assert!(matches!(untimed, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn single_pair_dephases_to_half() {
        assert!((hold_single_pair(1e6, 1e-3).unwrap() - 0.5).abs() < 1e-12);
        let t: f64 = 1e-6;
        let expected = 0.5 + 0.5 * (-2e6 * t).exp();
        assert!((hold_single_pair(1e6, t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn fully_decohered_epr_has_half_fidelity() {
        let p = Protocol::new("hold", vec![GateOp::phase(0, 1, 0.0).with_duration(1.0)]);
        let params = NoiseParams { dephasing_rate: 1e3, ..NoiseParams::noiseless() };
        let opts = EvolutionOptions::new(0.1);
        let (_, rho) = evolve_noisy_protocol_with(&Target::Epr.state(), &p, &params, &opts).unwrap();
        assert!((rho.fidelity(&Target::Epr.state()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn purity_bound_examples() {
        let slater = MixedState::from_pure(&Target::Slater.state());
        assert!((purity_lower_bound(&slater, &default_pairs(6)).unwrap() - 1.0).abs() < 1e-14);
        let ghz = MixedState::from_pure(&Target::Ghz.state());
        let dephased = MixedState::mixture(&[
            (0.5, &PureState::basis("101010").unwrap()),
            (0.5, &PureState::basis("010101").unwrap()),
        ])
        .unwrap();
        assert!((purity_lower_bound(&dephased, &default_pairs(6)).unwrap() + 0.5).abs() < 1e-14);
        assert!(purity_lower_bound(&ghz, &default_pairs(6)).unwrap() <= 1.0 + 1e-12);
        assert!(matches!(purity_lower_bound(&ghz, &[(0, 1), (1, 2), (4, 5)]), Err(Error::InvalidPartition(_))));
        assert!(matches!(purity_lower_bound(&ghz, &[(0, 1), (2, 3)]), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn noiseless_echo_returns_home() {
        for t in [Target::Epr, Target::W, Target::Ghz] {
            let e = loschmidt_echo(&timed(t), &NoiseParams::noiseless()).unwrap();
            assert!(e.fidelity > 1.0 - 1e-10);
        }
    }

    #[test]
    fn echo_is_worse_than_forward() {
        for t in [Target::Epr, Target::W, Target::Ghz] {
            let p = timed(t);
            let e = loschmidt_echo(&p, &NoiseParams::device_4k()).unwrap();
            let ideal = apply_protocol(&Target::Slater.state(), &p).unwrap();
            assert!(e.fidelity < e.forward.fidelity(&ideal).unwrap());
        }
    }

    #[test]
    fn trajectory_csv_columns() {
        let (traj, _) = evolve_noisy_protocol(&timed(Target::Epr), &NoiseParams::device_4k(), 2e-12).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "time_s,fidelity,purity,lambda1,lambda2,lambda3,lambda4,lambda5,lambda6,F1,F2,margin_ok");
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
