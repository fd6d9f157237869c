//! Largest Gaussian 1-RDM noise under which each characteristic state still
//! violates its facet with 99.9% probability.

use extpauli::gates::Target;
use extpauli::montecarlo::max_tolerated_sigma;
use extpauli::polytope::Merit;

fn main() -> extpauli::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    for (base, merit) in [(Target::Epr, Merit::FSlater), (Target::W, Merit::FEpr), (Target::Ghz, Merit::FW)] {
        let s = max_tolerated_sigma(base, merit, 0.999, samples, 2024)?;
        println!("{base:<4} {merit:<9} σ* = {:.4}  P(violation) = {:.4}", s.sigma_star, s.probability);
    }
    Ok(())
}
