//! Maximum entropy of `λ/N` over each class polytope.

use extpauli::functional::quantum_functional;
use extpauli::gates::Target;
use extpauli::polytope::class_polytope_for;

fn main() -> extpauli::Result<()> {
    let closed = [3f64.ln(), 108f64.ln() / 3.0, 2.0 * 13.5f64.ln() / 3.0, 6f64.ln()];
    for (t, exact) in Target::ALL.into_iter().zip(closed) {
        let e = quantum_functional(&class_polytope_for(t))?;
        println!("{t:<7} E = {:.6} (closed form {exact:.6})  argmax = {:.4?}", e.value, e.argmax.as_slice());
    }
    Ok(())
}
