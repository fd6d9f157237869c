//! Shot-based 1-RDM reconstruction from occupation measurements after
//! the readout rotations, compared with the exact 1-RDM.

use extpauli::fock::one_rdm;
use extpauli::gates::Target;
use extpauli::linalg::eigvalsh_desc;
use extpauli::tomography::{reconstruct_one_rdm, setting_count};

fn main() -> extpauli::Result<()> {
    println!("{} measurement settings for d = 6", setting_count(6));
    for shots in [1_000, 10_000, 100_000] {
        for t in [Target::W, Target::Ghz] {
            let est = reconstruct_one_rdm(&t.state(), shots, 42)?;
            let exact = one_rdm(&t.state())?;
            let err = (&est.matrix - exact.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            let lambda = eigvalsh_desc(&est.matrix);
            println!("M = {shots:>6} {t:<4} max|Δγ| = {err:.4}  λ = {lambda:.3?}");
        }
    }
    Ok(())
}
