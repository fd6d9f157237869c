//! Dephasing during state preparation: fidelity, purity and the weakened
//! margin along the trajectory, written as CSV to stdout.

use extpauli::gates::{build_protocol, Target};
use extpauli::noise::{evolve_noisy_protocol, max_step, weakened_from_state, with_default_durations, NoiseParams};

fn main() -> extpauli::Result<()> {
    let target = std::env::args().nth(1).map_or(Ok(Target::W), |s| s.parse())?;
    let protocol = with_default_durations(&build_protocol(target));
    let (trajectory, rho) = evolve_noisy_protocol(&protocol, &NoiseParams::device_4k(), max_step(&protocol)?)?;
    trajectory.write_csv(std::io::stdout().lock())?;

    let report = weakened_from_state(&rho)?;
    eprintln!(
        "{target}: final fidelity {:.6}, purity {:.6}, weakened BD holds with ε = {:.2e}: {}",
        trajectory.fidelity.last().unwrap(),
        rho.purity(),
        report.epsilon,
        report.member
    );
    Ok(())
}
