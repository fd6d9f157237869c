//! Number-conserving one-body gates on fixed-N sectors.
//!
//! A rotation `R_ij(φ)` is `exp((φ/2)(a_j† a_i − a_i† a_j))`, which on an
//! isolated pair reduces to
//!
//! ```text
//! R|1_i 0_j⟩ = cos(φ/2)|1_i 0_j⟩ + sin(φ/2)|0_i 1_j⟩
//! R|0_i 1_j⟩ = cos(φ/2)|0_i 1_j⟩ − sin(φ/2)|1_i 0_j⟩
//! ```
//!
//! and picks up the fermionic string sign of the modes between `i` and `j`
//! otherwise. Controlled rotations act as `P_k R_ij(φ) + (1 − P_k)` with `P_k`
//! the occupation projector of the control mode. `Phase(i, j, θ)` multiplies
//! `|1_i 0_j⟩` by `e^{−iθ/2}` and `|0_i 1_j⟩` by `e^{+iθ/2}`.

mod protocol;
mod pulse;

pub use protocol::{apply_protocol, build_protocol, invert_protocol, protocol_trace, w_angle, Protocol, Target};
pub use pulse::{dynamic_phase, PulseSpec};

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{hop, occupied, PureState, Sector};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    Rotation { i: usize, j: usize, angle: f64 },
    ControlledRotation { control: usize, i: usize, j: usize, angle: f64 },
    Phase { i: usize, j: usize, angle: f64 },
}

/// Sites are printed 1-based: `R12(φ)`, `C2_34(φ)`, `P12(θ)`.
impl std::fmt::Display for GateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            GateKind::Rotation { i, j, angle } => write!(f, "R{}{}({angle:.4})", i + 1, j + 1),
            GateKind::ControlledRotation { control, i, j, angle } => {
                write!(f, "C{}_{}{}({angle:.4})", control + 1, i + 1, j + 1)
            }
            GateKind::Phase { i, j, angle } => write!(f, "P{}{}({angle:.4})", i + 1, j + 1),
        }
    }
}

/// A gate plus an optional physical duration used by the noise model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub duration_s: Option<f64>,
}

impl GateOp {
    pub fn rotation(i: usize, j: usize, angle: f64) -> Self {
        Self { kind: GateKind::Rotation { i, j, angle }, duration_s: None }
    }

    pub fn controlled(control: usize, i: usize, j: usize, angle: f64) -> Self {
        Self { kind: GateKind::ControlledRotation { control, i, j, angle }, duration_s: None }
    }

    pub fn phase(i: usize, j: usize, angle: f64) -> Self {
        Self { kind: GateKind::Phase { i, j, angle }, duration_s: None }
    }

    pub fn with_duration(mut self, seconds: f64) -> Self {
        self.duration_s = Some(seconds);
        self
    }

    pub fn angle(&self) -> f64 {
        match self.kind {
            GateKind::Rotation { angle, .. }
            | GateKind::ControlledRotation { angle, .. }
            | GateKind::Phase { angle, .. } => angle,
        }
    }

    /// The acted-on mode pair `(i, j)`.
    pub fn pair(&self) -> (usize, usize) {
        match self.kind {
            GateKind::Rotation { i, j, .. }
            | GateKind::ControlledRotation { i, j, .. }
            | GateKind::Phase { i, j, .. } => (i, j),
        }
    }

    /// Same gate with the angle multiplied by `factor`. Since every gate is the
    /// exponential of a fixed generator, `g.scaled(1/n)` applied `n` times is `g`.
    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match self.kind {
            GateKind::Rotation { i, j, angle } => GateKind::Rotation { i, j, angle: angle * factor },
            GateKind::ControlledRotation { control, i, j, angle } => {
                GateKind::ControlledRotation { control, i, j, angle: angle * factor }
            }
            GateKind::Phase { i, j, angle } => GateKind::Phase { i, j, angle: angle * factor },
        };
        Self { kind, duration_s: self.duration_s }
    }

    pub fn inverse(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let (i, j) = self.pair();
        if i >= d || j >= d {
            return Err(Error::InvalidGate(format!("{self}: site out of range for d = {d}")));
        }
        if i == j {
            return Err(Error::InvalidGate(format!("{self}: sites must differ")));
        }
        if let GateKind::ControlledRotation { control, .. } = self.kind {
            if control >= d || control == i || control == j {
                return Err(Error::InvalidGate(format!("{self}: bad control site")));
            }
        }
        if !self.angle().is_finite() {
            return Err(Error::InvalidGate(format!("{self}: angle not finite")));
        }
        if let Some(t) = self.duration_s {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidGate(format!("{self}: bad duration {t}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GateOp {
    /// Site labels are printed 1-based, e.g. `R12(1.5708)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Rotation { i, j, angle } => write!(f, "R{}{}({angle:.4})", i + 1, j + 1),
            GateKind::ControlledRotation { control, i, j, angle } => {
                write!(f, "C^{}_{}{}({angle:.4})", control + 1, i + 1, j + 1)
            }
            GateKind::Phase { i, j, angle } => write!(f, "P{}{}({angle:.4})", i + 1, j + 1),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    #[serde(rename = "type")]
    kind: String,
    sites: Vec<usize>,
    angle_rad: f64,
    duration_s: Option<f64>,
}

impl Serialize for GateOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, sites) = match self.kind {
            GateKind::Rotation { i, j, .. } => ("rotation", vec![i, j]),
            GateKind::ControlledRotation { control, i, j, .. } => ("controlled_rotation", vec![control, i, j]),
            GateKind::Phase { i, j, .. } => ("phase", vec![i, j]),
        };
        GateJson { kind: kind.into(), sites, angle_rad: self.angle(), duration_s: self.duration_s }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GateOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GateJson::deserialize(d)?;
        let angle = raw.angle_rad;
        let kind = match (raw.kind.as_str(), raw.sites.as_slice()) {
            ("rotation", &[i, j]) => GateKind::Rotation { i, j, angle },
            ("controlled_rotation", &[control, i, j]) => GateKind::ControlledRotation { control, i, j, angle },
            ("phase", &[i, j]) => GateKind::Phase { i, j, angle },
            (k, s) => return Err(D::Error::custom(format!("bad gate `{k}` with sites {s:?}"))),
        };
        Ok(GateOp { kind, duration_s: raw.duration_s })
    }
}

/// One 2×2 block of a gate: amplitudes at `(low, high)` where `low` has the
/// particle on `i` and `high` on `j`; `sign` is `⟨high|a_j† a_i|low⟩`.
struct PairBlock {
    low: usize,
    high: usize,
    sign: f64,
}

fn pair_blocks(sector: &Sector, gate: &GateOp) -> Vec<PairBlock> {
    let d = sector.modes();
    let (i, j) = gate.pair();
    let control = match gate.kind {
        GateKind::ControlledRotation { control, .. } => Some(control),
        _ => None,
    };
    let mut blocks = Vec::new();
    for (low, &bits) in sector.states().iter().enumerate() {
        if !occupied(bits, d, i) || occupied(bits, d, j) {
            continue;
        }
        if let Some(k) = control {
            if !occupied(bits, d, k) {
                continue;
            }
        }
        let (t_bits, sign) = hop(bits, d, i, j).expect("i occupied, j empty");
        let high = sector.index_of(t_bits).expect("hop stays in sector");
        blocks.push(PairBlock { low, high, sign });
    }
    blocks
}

/// The 2×2 action `[[a, b], [c, e]]` on `(low, high)` amplitudes of a block.
fn block_matrix(gate: &GateOp, sign: f64) -> [[C64; 2]; 2] {
    match gate.kind {
        GateKind::Rotation { angle, .. } | GateKind::ControlledRotation { angle, .. } => {
            let (s, c) = (angle / 2.0).sin_cos();
            [
                [C64::new(c, 0.0), C64::new(-sign * s, 0.0)],
                [C64::new(sign * s, 0.0), C64::new(c, 0.0)],
            ]
        }
        GateKind::Phase { angle, .. } => [
            [C64::from_polar(1.0, -angle / 2.0), C64::default()],
            [C64::default(), C64::from_polar(1.0, angle / 2.0)],
        ],
    }
}

/// Applies one gate to a pure state.
pub fn apply_gate(state: &PureState, gate: &GateOp) -> Result<PureState> {
    gate.validate(state.modes())?;
    let mut out = state.clone();
    let amps = out.amplitudes_mut();
    for block in pair_blocks(state.sector(), gate) {
        let m = block_matrix(gate, block.sign);
        let (lo, hi) = (amps[block.low], amps[block.high]);
        amps[block.low] = m[0][0] * lo + m[0][1] * hi;
        amps[block.high] = m[1][0] * lo + m[1][1] * hi;
    }
    Ok(out)
}

/// Dense unitary of a gate on a sector.
pub fn gate_matrix(sector: &Sector, gate: &GateOp) -> Result<DMatrix<C64>> {
    gate.validate(sector.modes())?;
    let mut u = DMatrix::<C64>::identity(sector.dim(), sector.dim());
    for block in pair_blocks(sector, gate) {
        let m = block_matrix(gate, block.sign);
        u[(block.low, block.low)] = m[0][0];
        u[(block.low, block.high)] = m[0][1];
        u[(block.high, block.low)] = m[1][0];
        u[(block.high, block.high)] = m[1][1];
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn half_rotation_on_slater() {
        let slater = PureState::basis("101010").unwrap();
        let out = apply_gate(&slater, &GateOp::rotation(0, 1, PI / 2.0)).unwrap();
        let expected = PureState::from_real_terms(&[("101010", 1.0), ("011010", 1.0)]).unwrap();
        assert!((out.fidelity(&expected).unwrap() - 1.0).abs() < 1e-14);
        assert!((out.amplitude("011010").unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn zero_rotation_is_identity() {
        let s = crate::fock::random_pure_state(6, 3, 9).unwrap();
        let out = apply_gate(&s, &GateOp::rotation(1, 4, 0.0)).unwrap();
        assert!((out.amplitudes() - s.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn pair_action_matches_definition() {
        let r = GateOp::rotation(2, 3, 0.7);
        let (s, c) = 0.35f64.sin_cos();
        let out = apply_gate(&PureState::basis("000100").unwrap(), &r).unwrap();
        assert!((out.amplitude("000100").unwrap().re - c).abs() < 1e-15);
        assert!((out.amplitude("001000").unwrap().re + s).abs() < 1e-15);
        // 00 and 11 on the pair are untouched
        let out = apply_gate(&PureState::basis("001100").unwrap(), &r).unwrap();
        assert!((out.amplitude("001100").unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn double_swap_is_minus_one_on_pair() {
        let sector = Sector::new(2, 1).unwrap();
        let u = gate_matrix(&sector, &GateOp::rotation(0, 1, PI)).unwrap();
        let uu = &u * &u;
        assert!((uu + DMatrix::<C64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn controlled_rotation_respects_control() {
        let g = GateOp::controlled(1, 2, 3, PI);
        let idle = apply_gate(&PureState::basis("101010").unwrap(), &g).unwrap();
        assert!((idle.amplitude("101010").unwrap().re - 1.0).abs() < 1e-15);
        let active = apply_gate(&PureState::basis("011010").unwrap(), &g).unwrap();
        assert!((active.amplitude("010110").unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_gate_is_symmetric_z_rotation() {
        let g = GateOp::phase(0, 1, PI / 2.0);
        let out = apply_gate(&PureState::from_real_terms(&[("10", 1.0), ("01", 1.0)]).unwrap(), &g).unwrap();
        let a = out.amplitude("10").unwrap();
        let b = out.amplitude("01").unwrap();
        assert!((a - C64::from_polar(FRAC_1_SQRT_2, -PI / 4.0)).norm() < 1e-15);
        assert!((b - C64::from_polar(FRAC_1_SQRT_2, PI / 4.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_gates() {
        let s = PureState::basis("101010").unwrap();
        assert!(matches!(apply_gate(&s, &GateOp::rotation(0, 6, 1.0)), Err(Error::InvalidGate(_))));
        assert!(matches!(apply_gate(&s, &GateOp::rotation(2, 2, 1.0)), Err(Error::InvalidGate(_))));
        assert!(matches!(apply_gate(&s, &GateOp::controlled(2, 2, 3, 1.0)), Err(Error::InvalidGate(_))));
        assert!(matches!(apply_gate(&s, &GateOp::rotation(0, 1, f64::NAN)), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn gate_json_round_trip() {
        let g = GateOp::controlled(1, 2, 3, PI).with_duration(60e-12);
        let v = serde_json::to_value(g).unwrap();
        assert_eq!(v["type"], "controlled_rotation");
        assert_eq!(v["sites"], serde_json::json!([1, 2, 3]));
        let back: GateOp = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}
