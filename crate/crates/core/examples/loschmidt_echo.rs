//! Forward protocol followed by its inverse; the return fidelity and the
//! pairwise purity bound estimate how mixed the prepared state was.

use extpauli::gates::{build_protocol, Target};
use extpauli::noise::{default_pairs, loschmidt_echo, purity_lower_bound, with_default_durations, NoiseParams};

fn main() -> extpauli::Result<()> {
    let noise = NoiseParams { dephasing_rate: 1e9, ..NoiseParams::device_4k() };
    println!("dephasing rate {:.2e} 1/s", noise.dephasing_rate);
    for t in [Target::Epr, Target::W, Target::Ghz] {
        let echo = loschmidt_echo(&with_default_durations(&build_protocol(t)), &noise)?;
        let bound = purity_lower_bound(&echo.state, &default_pairs(6))?;
        println!(
            "{t:<4} return fidelity {:.6}  echo purity {:.6}  pair bound {:.6}  prepared purity {:.6}",
            echo.fidelity,
            echo.state.purity(),
            bound,
            echo.forward.purity()
        );
    }
    Ok(())
}
