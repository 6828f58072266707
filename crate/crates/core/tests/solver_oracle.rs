//! Random-instance validation of the SDP solver against brute-force
//! oracles, plus eigensolver cross-checks.

mod common;

use common::{charpoly_eigenvalues, random_lmi, seeded_rng};
use rand::Rng;
use shadowhull::sdp::{self, SymMatrix};
use shadowhull::tolerances::SOLVER_TOL;

#[test]
fn random_lmis_match_grid_oracle() {
    let mut rng = seeded_rng(42);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let inst = random_lmi(&mut rng);
        let oracle = inst.grid_optimum();
        let sol = sdp::solve(&inst.to_sdp(), SOLVER_TOL);
        assert_eq!(
            sol.status,
            sdp::Status::Optimal,
            "case {case}: {:?}",
            sol.warnings
        );
        let err = (sol.objective - oracle).abs();
        worst = worst.max(err);
        assert!(
            err <= 1e-4,
            "case {case} (k={}): sdp {} vs oracle {} (err {err:.2e})",
            inst.k,
            sol.objective,
            oracle
        );
        // weak duality on every optimal solution
        assert!(sol.objective >= sol.dual_objective - 1e-6);
    }
    println!("worst objective error over 50 random instances: {worst:.3e}");
}

#[test]
fn eigmin_matches_charpoly_roots() {
    let mut rng = seeded_rng(7);
    for _ in 0..40 {
        for k in [2usize, 3] {
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..k).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let m = SymMatrix::from_rows(&rows).unwrap();
            let roots = charpoly_eigenvalues(&m);
            let (lam, vec) = sdp::eigmin(&m);
            assert!(
                (lam - roots[0]).abs() <= 1e-9,
                "eigmin {lam} vs charpoly root {}",
                roots[0]
            );
            // residual of the eigenpair
            let md = m.to_dmatrix();
            let v = nalgebra::DVector::from_column_slice(&vec);
            let res = (&md * &v - v.scale(lam)).amax();
            assert!(res <= 1e-8, "eigenpair residual {res}");
        }
    }
}
