//! The polynomial system behind the exponent table, and its verifier.
//! A two-component root exists up to order 3, which is why two atoms in one
//! cell use exponent 4.

use mixrates::losses::{
    polynomial_system_residuals, rbar, verify_polynomial_system_solution,
    PolynomialSystemCandidate, RBarTable,
};

fn main() -> mixrates::Result<()> {
    let table = RBarTable::default();
    for k in 2..=3 {
        println!("exponent for a cell of {k} atoms: {}", rbar(k, &table)?);
    }

    // a = (1, -1), b = (-1/2, -1/2), c = (1, 1) solves orders 1 to 3 exactly
    let cand = PolynomialSystemCandidate::new(vec![1.0, -1.0], vec![-0.5, -0.5], vec![1.0, 1.0], 3);
    let res = polynomial_system_residuals(&cand);
    println!("residuals {res:?}");
    println!("verified: {}", verify_polynomial_system_solution(&cand));

    let trivial = PolynomialSystemCandidate::new(vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0], 3);
    println!(
        "all-zero locations verified: {}",
        verify_polynomial_system_solution(&trivial)
    );
    Ok(())
}
