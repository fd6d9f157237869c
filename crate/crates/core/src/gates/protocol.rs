use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{apply_gate, GateOp};
use crate::error::{Error, Result};
use crate::fock::PureState;

/// The four characteristically entangled Borland-Dennis states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Slater,
    Epr,
    W,
    Ghz,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Slater, Target::Epr, Target::W, Target::Ghz];

    /// Second-quantized form of the state, as tabulated.
    pub fn state(self) -> PureState {
        let terms: &[(&str, f64)] = match self {
            Target::Slater => &[("101010", 1.0)],
            Target::Epr => &[("101010", 1.0), ("010110", 1.0)],
            Target::W => &[("101010", 1.0), ("010110", 1.0), ("011001", 1.0)],
            Target::Ghz => &[("101010", 1.0), ("010101", 1.0)],
        };
        PureState::from_real_terms(terms).expect("static states are valid")
    }

    /// Natural occupation numbers of the state.
    pub fn occupations(self) -> [f64; 6] {
        let (t, h) = (2.0 / 3.0, 1.0 / 3.0);
        match self {
            Target::Slater => [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            Target::Epr => [1.0, 0.5, 0.5, 0.5, 0.5, 0.0],
            Target::W => [t, t, t, h, h, h],
            Target::Ghz => [0.5; 6],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Slater => "slater",
            Target::Epr => "epr",
            Target::W => "w",
            Target::Ghz => "ghz",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slater" => Ok(Target::Slater),
            "epr" => Ok(Target::Epr),
            "w" => Ok(Target::W),
            "ghz" => Ok(Target::Ghz),
            _ => Err(Error::UnknownLabel(s.into())),
        }
    }
}

/// An ordered gate list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub label: String,
    pub gates: Vec<GateOp>,
}

impl Protocol {
    pub fn new(label: impl Into<String>, gates: Vec<GateOp>) -> Self {
        Self { label: label.into(), gates }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.gates.iter().try_for_each(|g| g.validate(d))
    }

    /// Total duration, treating missing durations as zero.
    pub fn duration(&self) -> f64 {
        self.gates.iter().filter_map(|g| g.duration_s).sum()
    }
}

/// Rotation angle taking `|10⟩` to `(|10⟩ + √2|01⟩)/√3`.
///
/// The rotation convention uses half angles, so this is `2·arcsin(√(2/3))`.
pub fn w_angle() -> f64 {
    2.0 * (2.0f64 / 3.0).sqrt().asin()
}

/// Gate sequence preparing `target` from `|101010⟩`.
pub fn build_protocol(target: Target) -> Protocol {
    let gates = match target {
        Target::Slater => vec![],
        Target::Epr => vec![GateOp::rotation(0, 1, FRAC_PI_2), GateOp::controlled(1, 2, 3, PI)],
        Target::Ghz => vec![
            GateOp::rotation(0, 1, FRAC_PI_2),
            GateOp::controlled(1, 2, 3, PI),
            GateOp::controlled(3, 4, 5, PI),
        ],
        Target::W => vec![
            GateOp::rotation(0, 1, w_angle()),
            GateOp::controlled(1, 2, 3, FRAC_PI_2),
            GateOp::controlled(3, 4, 5, PI),
            GateOp::controlled(1, 2, 3, PI),
            GateOp::rotation(0, 1, PI),
        ],
    };
    Protocol::new(target.name(), gates)
}

/// Reversed gate list with negated angles.
pub fn invert_protocol(p: &Protocol) -> Protocol {
    Protocol::new(format!("{}^-1", p.label), p.gates.iter().rev().map(GateOp::inverse).collect())
}

pub fn apply_protocol(state: &PureState, p: &Protocol) -> Result<PureState> {
    p.gates.iter().try_fold(state.clone(), |s, g| apply_gate(&s, g))
}

/// The input followed by the state after each gate.
pub fn protocol_trace(state: &PureState, p: &Protocol) -> Result<Vec<PureState>> {
    let mut out = Vec::with_capacity(p.gates.len() + 1);
    out.push(state.clone());
    for g in &p.gates {
        let next = apply_gate(out.last().expect("non-empty"), g)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::occupations_of;

    #[test]
    fn epr_and_ghz_protocols_hit_their_targets() {
        let slater = Target::Slater.state();
        for t in [Target::Epr, Target::Ghz] {
            let out = apply_protocol(&slater, &build_protocol(t)).unwrap();
            assert!((out.fidelity(&t.state()).unwrap() - 1.0).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn w_first_step() {
        let p = build_protocol(Target::W);
        let s1 = apply_gate(&Target::Slater.state(), &p.gates[0]).unwrap();
        let expected = PureState::from_real_terms(&[("101010", 1.0), ("011010", 2f64.sqrt())]).unwrap();
        assert!((s1.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn targets_have_tabulated_occupations() {
        for t in Target::ALL {
            let out = apply_protocol(&Target::Slater.state(), &build_protocol(t)).unwrap();
            let lam = occupations_of(&out).unwrap();
            assert!(lam.max_abs_diff(&t.occupations()) < 1e-12, "{t}");
        }
    }

    #[test]
    fn inverse_of_single_rotation() {
        let p = Protocol::new("r", vec![GateOp::rotation(0, 1, FRAC_PI_2)]);
        let inv = invert_protocol(&p);
        assert_eq!(inv.gates, vec![GateOp::rotation(0, 1, -FRAC_PI_2)]);
    }

    #[test]
    fn echo_returns_to_slater() {
        let slater = Target::Slater.state();
        for t in Target::ALL {
            let p = build_protocol(t);
            let fwd = apply_protocol(&slater, &p).unwrap();
            let back = apply_protocol(&fwd, &invert_protocol(&p)).unwrap();
            assert!((back.fidelity(&slater).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn target_labels_parse() {
        assert_eq!("GHZ".parse::<Target>().unwrap(), Target::Ghz);
        assert!(matches!("bell".parse::<Target>(), Err(Error::UnknownLabel(_))));
    }
}
