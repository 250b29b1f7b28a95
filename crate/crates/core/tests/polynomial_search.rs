//! Random-restart root search for the two-component polynomial system. The
//! normalization `Σ c_j² = 1`, `Σ a_j² = 1` is appended so that roots are
//! bounded away from the trivial ones.

use mixrates::losses::{
    polynomial_system_residuals, verify_polynomial_system_solution, PolynomialSystemCandidate,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn candidate(z: &DVector<f64>, order: usize) -> PolynomialSystemCandidate {
    PolynomialSystemCandidate::new(vec![z[0], z[1]], vec![z[2], z[3]], vec![z[4], z[5]], order)
}

fn residual(z: &DVector<f64>, order: usize) -> DVector<f64> {
    let mut r = polynomial_system_residuals(&candidate(z, order));
    r.push(z[4] * z[4] + z[5] * z[5] - 1.0);
    r.push(z[0] * z[0] + z[1] * z[1] - 1.0);
    DVector::from_vec(r)
}

/// Gauss-Newton with a finite-difference Jacobian and pseudo-inverse steps.
fn solve(mut z: DVector<f64>, order: usize) -> (DVector<f64>, f64) {
    let h = 1e-7;
    for _ in 0..200 {
        let f = residual(&z, order);
        if f.amax() < 1e-14 {
            break;
        }
        let mut jac = DMatrix::zeros(f.len(), z.len());
        for c in 0..z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[c] += h;
            zm[c] -= h;
            jac.set_column(
                c,
                &((residual(&zp, order) - residual(&zm, order)) / (2.0 * h)),
            );
        }
        let step = jac.svd(true, true).solve(&f, 1e-12).expect("svd solve");
        z -= step;
    }
    let f = residual(&z, order);
    (z, f.amax())
}

fn search(order: usize, restarts: usize, seed: u64) -> Vec<(DVector<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..restarts)
        .map(|_| {
            solve(
                DVector::from_fn(6, |_, _| rng.random_range(-1.5..1.5)),
                order,
            )
        })
        .collect()
}

#[test]
fn order_three_has_nontrivial_roots() {
    let roots = search(3, 50, 5);
    let verified: Vec<_> = roots
        .iter()
        .filter(|(z, _)| verify_polynomial_system_solution(&candidate(z, 3)))
        .filter(|(z, _)| z[4].abs() > 0.05 && z[5].abs() > 0.05)
        .collect();
    assert!(!verified.is_empty(), "no root found in 50 restarts");
    let (z, res) = verified[0];
    assert!(*res <= 1e-10, "{res}");
    // α = 1 forces the a_j, weighted by c_j², to balance
    assert!((z[4] * z[4] * z[0] + z[5] * z[5] * z[1]).abs() <= 1e-10);
}

#[test]
fn order_four_roots_are_degenerate() {
    // r̄(2) = 4: restarts still converge, but only by sending one c_j to 0,
    // i.e. towards a trivial root.
    for (z, res) in search(4, 50, 6) {
        let c_min = z[4].abs().min(z[5].abs());
        assert!(
            res > 1e-6 || c_min < 1e-6,
            "root with c = ({}, {}), residual {res}",
            z[4],
            z[5]
        );
    }
}
