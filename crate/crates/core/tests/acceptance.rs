//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Run with
//! `cargo test -p shadowhull --test acceptance -- --nocapture`.

mod common;

use shadowhull::bundled;
use shadowhull::obstruct::{self, ObstructionVerdict};
use shadowhull::pencil::{MatrixPencil, PencilQmOutcome, PolarOutcome};
use shadowhull::poly::{parse_expr, CoeffMode, Monomial, Point, Polynomial, Rule, RuleSet, Scalar};
use shadowhull::relax::{
    self, replay, MembershipOutcome, SemialgebraicSet, SupportOutcome,
};
use shadowhull::sdp::{self, SymMatrix};
use shadowhull::tolerances::SOLVER_TOL;

fn xy() -> Vec<String> {
    vec!["X".into(), "Y".into()]
}

fn expr(src: &str, vars: &[String]) -> Polynomial {
    parse_expr(src, vars, CoeffMode::Exact).expect("fixed expression")
}

fn rat_point(coords: &[(i64, i64)]) -> Point {
    Point::new(
        coords
            .iter()
            .map(|&(n, d)| Scalar::from_ratio(n, d, CoeffMode::Exact))
            .collect(),
    )
    .unwrap()
}

fn pass(line: &str) {
    println!("PASS  {line}");
}

fn support_value(s: Result<SupportOutcome, relax::RelaxError>) -> f64 {
    match s.expect("support query well formed") {
        SupportOutcome::Value(v) => v,
        SupportOutcome::Unbounded => f64::INFINITY,
        SupportOutcome::Inaccurate(msg) => panic!("support inaccurate: {msg}"),
    }
}

/// Criterion 1: exact certificate replays. The tangent-line identity
/// in exact arithmetic for a in {1/2, 1} and with an adjoined square
/// root for a = 3/4; the trigonometric two-disk certificate reduces to
/// zero modulo s^2 -> 1 - c^2; the half-turn specialization holds
/// exactly.
#[test]
fn criterion_1_exact_certificate_replays() {
    let vars = xy();
    for (num, den) in [(1i64, 1i64), (1, 2)] {
        let a = Scalar::from_ratio(num, den, CoeffMode::Exact);
        let x_minus_a = Polynomial::variable(vars.clone(), CoeffMode::Exact, 0)
            .sub(&Polynomial::constant(vars.clone(), a.clone()))
            .unwrap();
        let sq = x_minus_a.pow(2);
        let coef = a
            .mul(&Scalar::from_integer(2, CoeffMode::Exact))
            .sub(&Scalar::one(CoeffMode::Exact));
        let lhs = sq
            .scale(&coef)
            .unwrap()
            .add(&expr("Y - X^3", &vars))
            .unwrap()
            .add(&sq.mul(&expr("X + 1", &vars)).unwrap())
            .unwrap();
        let a2 = a.mul(&a);
        let a3 = a2.mul(&a);
        let mut rhs = expr("Y", &vars);
        rhs.add_term(
            Monomial::variable(2, 0),
            a2.mul(&Scalar::from_integer(-3, CoeffMode::Exact)),
        );
        rhs.add_term(
            Monomial::constant(2),
            a3.mul(&Scalar::from_integer(2, CoeffMode::Exact)),
        );
        let diff = lhs.sub(&rhs).unwrap();
        assert!(diff.is_zero(), "a = {num}/{den}: residual {diff}");
    }

    // a = 3/4 with an adjoined symbol t, t^2 -> 1/2
    let vars3: Vec<String> = vec!["X".into(), "Y".into(), "t".into()];
    let rules = RuleSet::new(
        vec![Rule {
            var: 2,
            power: 2,
            replacement: expr("1/2", &vars3),
        }],
        &vars3,
        CoeffMode::Exact,
    )
    .unwrap();
    let lhs = expr("(t (X - 3/4))^2 + (Y - X^3) + (X - 3/4)^2 (X + 1)", &vars3);
    let rhs = expr("Y - 27/16 X + 27/32", &vars3);
    let reduced = rules.reduce(&lhs.sub(&rhs).unwrap()).unwrap();
    assert!(reduced.is_zero(), "adjoined-root residual {reduced}");

    // trigonometric certificate, symbolic in X, Y, c, s
    let vars4: Vec<String> = vec!["X".into(), "Y".into(), "c".into(), "s".into()];
    let rules = RuleSet::new(
        vec![Rule {
            var: 3,
            power: 2,
            replacement: expr("1 - c^2", &vars4),
        }],
        &vars4,
        CoeffMode::Exact,
    )
    .unwrap();
    let p4 = expr("-X^4 - Y^4 - 2 X^2 Y^2 + 4 X^2", &vars4);
    let lhs = expr("(8 - 8c)(1 - c - c X - s Y)", &vars4);
    let rhs = p4
        .add(&expr("(X^2 + Y^2 - 2 + 2c)^2", &vars4))
        .unwrap()
        .add(&expr("4 (1 - c)(Y - s)^2", &vars4))
        .unwrap()
        .add(&expr("-4 c (X - c + 1)^2", &vars4))
        .unwrap();
    let reduced = rules.reduce(&lhs.sub(&rhs).unwrap()).unwrap();
    assert!(reduced.is_zero(), "trig-certificate residual {reduced}");

    // half-turn specialization
    let p = expr("-X^4 - Y^4 - 2 X^2 Y^2 + 4 X^2", &vars);
    let rhs = p
        .add(&expr("(X^2 + Y^2 - 4)^2", &vars))
        .unwrap()
        .add(&expr("8 Y^2", &vars))
        .unwrap()
        .add(&expr("4 (X + 2)^2", &vars))
        .unwrap();
    let diff = expr("16 (2 + X)", &vars).sub(&rhs).unwrap();
    assert!(diff.is_zero(), "half-turn residual {diff}");

    pass("criterion 1: exact certificate replays, zero residual in exact arithmetic");
}

/// Criterion 2: the first relaxation of the counterexample set.
#[test]
fn criterion_2_counterexample_reproduction() {
    let set = bundled::counterexample_set(CoeffMode::Exact);

    let v = relax::lasserre_point_member(&set, 1, &rat_point(&[(1, 3), (0, 1)])).unwrap();
    assert!(v.is_in(), "(1/3, 0) must be In: {v:?}");

    let v = relax::lasserre_point_member(&set, 1, &rat_point(&[(2, 5), (0, 1)])).unwrap();
    assert!(v.is_out(), "(0.4, 0) must be Out: {v:?}");
    assert!(v.margin >= 0.01, "margin {} must be at least 0.01", v.margin);
    let sep = v.separator.as_ref().expect("Out carries a separator");
    assert!(
        relax::qm_member_is_feasible(&set, 1, sep),
        "separator must re-verify as a quadratic-module element"
    );

    let s = support_value(relax::lasserre_support(&set, 1, &[-1.0, 0.0]));
    assert!((s - 1.0).abs() <= 1e-5, "support toward -x: {s}");
    let s = support_value(relax::lasserre_support(&set, 1, &[0.0, -1.0]));
    assert!(s.abs() <= 1e-6, "support toward -y: {s}");

    pass("criterion 2: counterexample set membership, margin, separator, supports");
}

/// Criterion 3: the second relaxation of the two-disk set matches the
/// hull supports.
#[test]
fn criterion_3_two_disks_supports() {
    let set = bundled::two_disks_set(CoeffMode::Exact);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cases = [
        ([1.0, 0.0], 2.0),
        ([0.0, 1.0], 1.0),
        ([h, h], 1.0 + h),
    ];
    for (u, expected) in cases {
        let s = support_value(relax::lasserre_support(&set, 2, &u));
        assert!(
            (s - expected).abs() <= 1e-4,
            "direction {u:?}: {s} vs {expected}"
        );
    }
    pass("criterion 3: two-disk hull supports at degree 2 within 1e-4");
}

/// Criterion 4: obstruction suite and strict containment.
#[test]
fn criterion_4_obstructions() {
    let cusp = bundled::cusp_set(CoeffMode::Exact);
    let r = obstruct::singular_point_obstruction(&cusp, &rat_point(&[(0, 1), (0, 1)])).unwrap();
    assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "cusp: {r:?}");

    let vars = xy();
    let nonexposed = SemialgebraicSet::new(
        ["Y", "1 - Y", "X + 1", "Y^2 - X^3"]
            .iter()
            .map(|s| expr(s, &vars))
            .collect(),
    )
    .unwrap();
    let r = obstruct::nonexposed_face_check(
        &nonexposed,
        &rat_point(&[(0, 1), (0, 1)]),
        &rat_point(&[(-1, 2), (0, 1)]),
    )
    .unwrap();
    assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "cubic edge: {r:?}");

    let square = SemialgebraicSet::new(
        ["1 - X", "1 + X", "1 - Y", "1 + Y"]
            .iter()
            .map(|s| expr(s, &vars))
            .collect(),
    )
    .unwrap();
    let r = obstruct::nonexposed_face_check(
        &square,
        &rat_point(&[(1, 1), (1, 1)]),
        &rat_point(&[(1, 1), (0, 1)]),
    )
    .unwrap();
    assert_eq!(r.verdict, ObstructionVerdict::NotObstructed, "square: {r:?}");

    // the hull of the cusp set has support 0 toward -x; every
    // relaxation stays strictly larger
    for d in [1u32, 2] {
        let s = support_value(relax::lasserre_support(&cusp, d, &[-1.0, 0.0]));
        assert!(
            s > 1e-6,
            "degree {d}: relaxation support toward -x is {s}, expected > 1e-6"
        );
    }
    pass("criterion 4: obstruction verdicts and strict containment of the cusp hull");
}

/// Criterion 5: theta bodies.
#[test]
fn criterion_5_theta_bodies() {
    let circle = bundled::circle_ideal(CoeffMode::Exact);
    for u in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        let s = support_value(relax::theta_support(&circle, 1, &u));
        assert!((s - 1.0).abs() <= 1e-5, "circle direction {u:?}: {s}");
    }
    let v = relax::theta_point_member(&circle, 1, &Point::from_f64s(&[1.05, 0.0])).unwrap();
    assert!(v.is_out(), "{v:?}");
    assert!(v.margin >= 0.04, "margin {}", v.margin);

    let sphere_cyl = bundled::sphere_cylinder_ideal(CoeffMode::Exact);
    let s = support_value(relax::theta_support(&sphere_cyl, 1, &[1.0, 0.0, 0.0]));
    assert!((s - 2.0).abs() <= 1e-4, "curve support toward +x: {s}");

    let zitrus = bundled::zitrus_ideal(CoeffMode::Exact);
    let r = obstruct::convex_singular_check(
        &zitrus,
        &rat_point(&[(0, 1), (1, 1), (0, 1)]),
        &rat_point(&[(0, 1), (0, 1), (0, 1)]),
        false,
    )
    .unwrap();
    assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "zitrus: {r:?}");

    let r = obstruct::convex_singular_check(
        &sphere_cyl,
        &rat_point(&[(2, 1), (0, 1), (0, 1)]),
        &rat_point(&[(0, 1), (0, 1), (0, 1)]),
        false,
    )
    .unwrap();
    assert_eq!(r.verdict, ObstructionVerdict::WitnessInvalid, "curve: {r:?}");

    pass("criterion 5: theta supports, separation margin, convex-singularity verdicts");
}

/// Criterion 6: the bundled 4x4 pencil.
#[test]
fn criterion_6_pencil_suite() {
    let two = bundled::two_disks_pencil();
    let cases = [([1.5, 0.5], true), ([2.0, 0.0], true), ([2.05, 0.0], false)];
    for (x, inside) in cases {
        let v = two.projection_member(&x, 1e-7, 1e3).unwrap();
        assert_eq!(v.is_in(), inside, "projection at {x:?}: {v:?}");
        let v = two.closure_member(&x).unwrap();
        assert_eq!(v.is_in(), inside, "closure at {x:?}: {v:?}");
    }

    let disk = {
        let a = SymMatrix::identity(2);
        let bx = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let by = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        MatrixPencil::new(a, vec![bx, by], vec![]).unwrap()
    };
    let vars = xy();
    for src in ["2 + X", "3 + X"] {
        assert!(
            matches!(
                disk.polar_member(&expr(src, &vars)).unwrap(),
                PolarOutcome::Feasible(_)
            ),
            "{src} must be in the polar"
        );
    }
    assert!(
        matches!(
            disk.polar_member(&expr("1 - 2X", &vars)).unwrap(),
            PolarOutcome::Infeasible(_)
        ),
        "1 - 2X must be outside the polar"
    );

    for src in ["3 + X", "2 + X"] {
        match two.qm_member(0, &expr(src, &vars)).unwrap() {
            PencilQmOutcome::Feasible(cert) => {
                assert!(cert.residual <= 1e-6, "{src}: residual {}", cert.residual)
            }
            other => panic!("{src} must be feasible at degree 0: {other:?}"),
        }
    }
    for d in 0..=2 {
        assert!(
            matches!(
                two.qm_member(d, &expr("X + Y - 10", &vars)).unwrap(),
                PencilQmOutcome::Infeasible(_)
            ),
            "X + Y - 10 must be infeasible at degree {d}"
        );
    }
    pass("criterion 6: pencil projection/closure/polar/cone verdicts");
}

/// Criterion 7: solver versus brute-force oracles.
#[test]
fn criterion_7_solver_oracle() {
    let mut rng = common::seeded_rng(42);
    for case in 0..50 {
        let inst = common::random_lmi(&mut rng);
        let oracle = inst.grid_optimum();
        let sol = sdp::solve(&inst.to_sdp(), SOLVER_TOL);
        assert_eq!(sol.status, sdp::Status::Optimal, "case {case}");
        assert!(
            (sol.objective - oracle).abs() <= 1e-4,
            "case {case}: {} vs {}",
            sol.objective,
            oracle
        );
    }

    // min x with [[1, x], [x, 1]] PSD equals -1
    let isq2 = std::f64::consts::FRAC_1_SQRT_2;
    let prob = sdp::SDPProblem {
        block_dims: vec![2],
        n_free: 1,
        objective: vec![0.0, 0.0, 0.0, 1.0],
        constraints: vec![
            sdp::Constraint {
                coeffs: vec![1.0, 0.0, 0.0, 0.0],
                rhs: 1.0,
            },
            sdp::Constraint {
                coeffs: vec![0.0, 0.0, 1.0, 0.0],
                rhs: 1.0,
            },
            sdp::Constraint {
                coeffs: vec![0.0, isq2, 0.0, -1.0],
                rhs: 0.0,
            },
        ],
        sense: sdp::Sense::Minimize,
    };
    let sol = sdp::solve(&prob, SOLVER_TOL);
    assert_eq!(sol.status, sdp::Status::Optimal);
    assert!((sol.objective + 1.0).abs() <= 1e-7, "{}", sol.objective);

    // infeasibility certificates verify
    let sq2 = std::f64::consts::SQRT_2;
    let infeasible = sdp::SDPProblem {
        block_dims: vec![2],
        n_free: 0,
        objective: vec![],
        constraints: vec![
            sdp::Constraint {
                coeffs: vec![1.0, 0.0, 0.0],
                rhs: 1.0,
            },
            sdp::Constraint {
                coeffs: vec![0.0, 0.0, 1.0],
                rhs: 1.0,
            },
            sdp::Constraint {
                coeffs: vec![0.0, sq2, 0.0],
                rhs: 1.5 * sq2,
            },
        ],
        sense: sdp::Sense::Feasibility,
    };
    let sol = sdp::solve(&infeasible, SOLVER_TOL);
    assert_eq!(sol.status, sdp::Status::Infeasible);
    let cert = sol.infeasibility.expect("certificate");
    let (b_dot, psd, free) = cert.verify(&infeasible);
    assert!(b_dot > 0.0, "Farkas objective {b_dot}");
    assert!(
        psd <= 1e-6 * b_dot.max(1.0),
        "PSD violation {psd} vs objective {b_dot}"
    );
    assert!(free <= 1e-6);

    pass("criterion 7: 50 random oracles within 1e-4, min-x regression, verified certificates");
}

/// Criterion 8: hierarchy properties on the bundled sets for degrees
/// 1..3: support monotonicity, the sampled-sandwich bound, and exact
/// replay of the certificates backing each support value.
#[test]
fn criterion_8_hierarchy_properties() {
    let sets = [
        ("counterexample", bundled::counterexample_set(CoeffMode::Exact)),
        ("cusp", bundled::cusp_set(CoeffMode::Exact)),
        ("two disks", bundled::two_disks_set(CoeffMode::Exact)),
    ];
    let dirs = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [0.6, 0.8],
        [-0.8, 0.6],
    ];
    for (name, set) in &sets {
        let samples = sample_set_points(set);
        assert!(!samples.is_empty(), "{name}: sampling found no points");
        for u in dirs {
            let mut previous = f64::INFINITY;
            for d in 1..=3u32 {
                let value = match relax::lasserre_support(set, d, &u).unwrap() {
                    SupportOutcome::Value(v) => v,
                    SupportOutcome::Unbounded => f64::INFINITY,
                    SupportOutcome::Inaccurate(m) => {
                        panic!("{name} degree {d} direction {u:?}: {m}")
                    }
                };
                // monotone in d
                assert!(
                    value <= previous + 1e-6,
                    "{name} {u:?}: support rose from {previous} to {value} at degree {d}"
                );
                previous = value;
                // contains the sampled set
                let sampled = samples
                    .iter()
                    .map(|x| u[0] * x[0] + u[1] * x[1])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    value >= sampled - 1e-6,
                    "{name} {u:?} degree {d}: support {value} below sampled {sampled}"
                );
                // replay the certificate for a slightly shifted target
                if value.is_finite() {
                    let mut target = Polynomial::zero(set.vars().to_vec(), CoeffMode::Float);
                    target.add_term(
                        Monomial::constant(2),
                        Scalar::Float(value + 1e-3),
                    );
                    target.add_term(Monomial::variable(2, 0), Scalar::Float(-u[0]));
                    target.add_term(Monomial::variable(2, 1), Scalar::Float(-u[1]));
                    match relax::qm_member(set, d, &target).unwrap() {
                        MembershipOutcome::Feasible(cert) => {
                            let report = replay::replay_qm(set, &cert, &target).unwrap();
                            assert!(
                                report.residual <= 1e-6,
                                "{name} {u:?} degree {d}: replay residual {}",
                                report.residual
                            );
                            assert!(report.gram_eigmin >= -1e-9);
                        }
                        other => panic!(
                            "{name} {u:?} degree {d}: shifted support target must be feasible: {other:?}"
                        ),
                    }
                }
            }
        }
    }
    pass("criterion 8: monotonicity, sandwich, and exact replays for degrees 1..3");
}

/// Grid sample of a planar set, used as the independent side of the
/// sandwich bound.
fn sample_set_points(set: &SemialgebraicSet) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let n = 60;
    for i in 0..=n {
        for j in 0..=n {
            let x = [
                -2.0 + 4.0 * i as f64 / n as f64,
                -2.0 + 4.0 * j as f64 / n as f64,
            ];
            if set
                .inequalities()
                .iter()
                .all(|p| p.evaluate_f64(&x) >= 0.0)
            {
                out.push(x);
            }
        }
    }
    out
}
