//! Weakened Borland-Dennis inequalities for slightly mixed states: the
//! explicit saturating spectrum and a stochastic search for the extremum.

use extpauli::polytope::{check_weakened, hill_climb_extremal, Objective};

fn main() -> extpauli::Result<()> {
    for eps in [0.01, 0.06, 0.1] {
        let explicit = check_weakened(&[1.0, 1.0, 1.0 - eps, eps, 0.0, 0.0], eps)?;
        println!("ε = {eps}: explicit state slacks ({:.1e}, {:.1e})", explicit.slack_f1, explicit.slack_f2);
        for obj in [Objective::F1, Objective::F2] {
            let run = hill_climb_extremal(eps, obj, 1, 20_000)?;
            println!(
                "  {obj:?}: reached {:.8} of ceiling {:.8} after {} accepted steps",
                run.value,
                obj.ceiling(eps),
                run.accepted
            );
        }
    }
    Ok(())
}
