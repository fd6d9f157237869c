//! Merit report and class-polytope membership for the characteristic
//! states and for a random pure state.

use extpauli::fock::{occupations_of, random_pure_state};
use extpauli::gates::Target;
use extpauli::polytope::{check_m_fermion, check_pure_bd, class_polytope_for};

fn main() -> extpauli::Result<()> {
    let mut cases: Vec<(String, Vec<f64>)> =
        Target::ALL.iter().map(|t| (t.to_string(), t.occupations().to_vec())).collect();
    let random = occupations_of(&random_pure_state(6, 3, 7)?)?;
    cases.push(("random".into(), random.as_slice().to_vec()));

    println!("{:<8} {:>9} {:>9} {:>9}  slater  epr    w      ghz", "state", "F_Slater", "F_EPR", "F_W");
    for (name, lambda) in &cases {
        let (report, pure_ok) = check_pure_bd(&extpauli::fock::OccupationVector::from_sorted(lambda.clone())?)?;
        assert!(pure_ok);
        let member: Vec<String> =
            Target::ALL.iter().map(|t| format!("{:<6}", class_polytope_for(*t).contains(lambda))).collect();
        println!(
            "{name:<8} {:>9.4} {:>9.4} {:>9.4}  {}",
            report.f_slater,
            report.f_epr,
            report.f_w,
            member.join(" ")
        );
    }

    // A Slater determinant wedged onto a 2-fermion state keeps one occupation at 1.
    let epr = Target::Epr.occupations();
    println!("EPR is 2-fermion entangled: {}", check_m_fermion(&epr, 3, 6, 2)?);
    println!("GHZ is 2-fermion entangled: {}", check_m_fermion(&Target::Ghz.occupations(), 3, 6, 2)?);
    Ok(())
}
