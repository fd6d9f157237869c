//! Runs the three preparation protocols from `|101010⟩` and prints every
//! intermediate state with its natural occupation numbers.

use extpauli::fock::occupations_of;
use extpauli::gates::{build_protocol, protocol_trace, Target};

fn main() -> extpauli::Result<()> {
    for target in [Target::Epr, Target::Ghz, Target::W] {
        let protocol = build_protocol(target);
        let trace = protocol_trace(&Target::Slater.state(), &protocol)?;
        println!("== {target}");
        for (k, state) in trace.iter().enumerate() {
            let gate = if k == 0 { "start".to_string() } else { protocol.gates[k - 1].kind.to_string() };
            let terms: Vec<String> = state
                .sector()
                .states()
                .iter()
                .zip(state.amplitudes().iter())
                .filter(|(_, a)| a.norm() > 1e-12)
                .map(|(bits, a)| format!("{:+.4}|{:06b}⟩", a.re, bits))
                .collect();
            let lambda = occupations_of(state)?;
            println!("{gate:<14} {:<56} λ = {:.4?}", terms.join(" "), lambda.as_slice());
        }
    }
    Ok(())
}
