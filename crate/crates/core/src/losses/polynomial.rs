//! The polynomial system whose nontrivial solvability defines `r̄(k')`:
//!
//! ```text
//! Σ_j c_j² Σ_{n₁ + 2n₂ = α} a_j^{n₁} b_j^{n₂} / (n₁! n₂!) = 0,   α = 1, …, r
//! ```
//!
//! `r̄(k')` is the smallest `r` for which no nontrivial solution exists.
//! Deciding that is out of reach numerically; this module checks the other
//! direction, that a given candidate is a nontrivial solution.

/// Largest equation residual accepted as a solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Candidate `(a_j, b_j, c_j)_{j=1..k'}` for the system of order `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSystemCandidate {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

impl PolynomialSystemCandidate {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, order: usize) -> Self {
        Self { a, b, c, order }
    }

    pub fn num_components(&self) -> usize {
        self.c.len()
    }

    /// All `c_j` non-zero and at least one `a_j` non-zero.
    pub fn is_nontrivial(&self) -> bool {
        self.c.iter().all(|&c| c != 0.0) && self.a.iter().any(|&a| a != 0.0)
    }

    fn is_well_formed(&self) -> bool {
        let k = self.c.len();
        self.a.len() == k && self.b.len() == k
    }
}

/// Residuals of equations `α = 1..=order`, in order.
pub fn polynomial_system_residuals(cand: &PolynomialSystemCandidate) -> Vec<f64> {
    (1..=cand.order)
        .map(|alpha| {
            cand.a
                .iter()
                .zip(&cand.b)
                .zip(&cand.c)
                .map(|((&a, &b), &c)| c * c * inner_sum(a, b, alpha))
                .sum()
        })
        .collect()
}

/// `Σ_{n₁ + 2n₂ = α} a^{n₁} b^{n₂} / (n₁! n₂!)`
fn inner_sum(a: f64, b: f64, alpha: usize) -> f64 {
    (0..=alpha / 2)
        .map(|n2| {
            let n1 = alpha - 2 * n2;
            a.powi(n1 as i32) * b.powi(n2 as i32) / (factorial(n1) * factorial(n2))
        })
        .sum()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// True iff the candidate is nontrivial and every residual is within
/// [`RESIDUAL_TOLERANCE`]. Malformed candidates (order 0, fewer than two
/// components, ragged vectors) are rejected.
pub fn verify_polynomial_system_solution(cand: &PolynomialSystemCandidate) -> bool {
    if cand.order < 1 || cand.num_components() < 2 || !cand.is_well_formed() {
        return false;
    }
    cand.is_nontrivial()
        && polynomial_system_residuals(cand)
            .iter()
            .all(|r| r.abs() <= RESIDUAL_TOLERANCE)
}
