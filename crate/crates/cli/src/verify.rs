//! The bundled reproduction suite: exact-arithmetic certificate
//! identities first, then the semidefinite regressions on the bundled
//! sets, ideals, and pencils. Prints one pass/fail line per item.

use shadowhull::bundled;
use shadowhull::obstruct::{self, ObstructionVerdict};
use shadowhull::pencil::{PencilQmOutcome, PolarOutcome};
use shadowhull::poly::{parse_expr, CoeffMode, Point, Polynomial, Rule, RuleSet, Scalar};
use shadowhull::relax::{self, MembershipOutcome, SemialgebraicSet};
use shadowhull::sdp::SymMatrix;

struct Suite {
    results: Vec<(String, Result<(), String>)>,
    json: bool,
}

impl Suite {
    fn check(&mut self, name: &str, outcome: Result<(), String>) {
        if !self.json {
            match &outcome {
                Ok(()) => println!("PASS  {name}"),
                Err(e) => println!("FAIL  {name}: {e}"),
            }
        }
        self.results.push((name.to_string(), outcome));
    }
}

fn expr(src: &str, vars: &[String]) -> Polynomial {
    parse_expr(src, vars, CoeffMode::Exact).expect("fixed expression parses")
}

fn xy() -> Vec<String> {
    vec!["X".into(), "Y".into()]
}

fn exact_zero(diff: &Polynomial) -> Result<(), String> {
    if diff.is_zero() {
        Ok(())
    } else {
        Err(format!("nonzero residual {diff}"))
    }
}

/// Tangent-line certificate at parameter `a`:
/// `(2a-1)(X-a)^2 + (Y - X^3) + (X-a)^2 (X+1) = Y - 3a^2 X + 2a^3`.
fn tangent_identity(num: i64, den: i64) -> Result<(), String> {
    let vars = xy();
    let a = Scalar::from_ratio(num, den, CoeffMode::Exact);
    let x = Polynomial::variable(vars.clone(), CoeffMode::Exact, 0);
    let x_minus_a = x
        .sub(&Polynomial::constant(vars.clone(), a.clone()))
        .unwrap();
    let sq = x_minus_a.pow(2);
    let two_a_minus_1 = a
        .mul(&Scalar::from_integer(2, CoeffMode::Exact))
        .sub(&Scalar::one(CoeffMode::Exact));
    let lhs = sq
        .scale(&two_a_minus_1)
        .unwrap()
        .add(&expr("Y - X^3", &vars))
        .unwrap()
        .add(&sq.mul(&expr("X + 1", &vars)).unwrap())
        .unwrap();
    // Y - 3 a^2 X + 2 a^3
    let a2 = a.mul(&a);
    let a3 = a2.mul(&a);
    let mut rhs = expr("Y", &vars);
    rhs.add_term(
        shadowhull::poly::Monomial::variable(2, 0),
        a2.mul(&Scalar::from_integer(-3, CoeffMode::Exact)),
    );
    rhs.add_term(
        shadowhull::poly::Monomial::constant(2),
        a3.mul(&Scalar::from_integer(2, CoeffMode::Exact)),
    );
    exact_zero(&lhs.sub(&rhs).unwrap())
}

/// Same certificate at `a = 3/4`, with the square root of `2a - 1`
/// adjoined as a symbol `t` satisfying `t^2 -> 1/2`.
fn tangent_identity_adjoined() -> Result<(), String> {
    let vars: Vec<String> = vec!["X".into(), "Y".into(), "t".into()];
    let rules = RuleSet::new(
        vec![Rule {
            var: 2,
            power: 2,
            replacement: expr("1/2", &vars),
        }],
        &vars,
        CoeffMode::Exact,
    )
    .map_err(|e| e.to_string())?;
    let lhs = expr("(t (X - 3/4))^2 + (Y - X^3) + (X - 3/4)^2 (X + 1)", &vars);
    let rhs = expr("Y - 27/16 X + 27/32", &vars);
    let reduced = rules.reduce(&lhs.sub(&rhs).unwrap()).map_err(|e| e.to_string())?;
    exact_zero(&reduced)
}

/// The two-disk tangency certificate as an identity in `X, Y, c, s`
/// modulo `s^2 -> 1 - c^2`.
fn trig_certificate_identity() -> Result<(), String> {
    let vars: Vec<String> = vec!["X".into(), "Y".into(), "c".into(), "s".into()];
    let rules = RuleSet::new(
        vec![Rule {
            var: 3,
            power: 2,
            replacement: expr("1 - c^2", &vars),
        }],
        &vars,
        CoeffMode::Exact,
    )
    .map_err(|e| e.to_string())?;
    let p = expr("-X^4 - Y^4 - 2 X^2 Y^2 + 4 X^2", &vars);
    let lhs = expr("(8 - 8c)(1 - c - c X - s Y)", &vars);
    let rhs = p
        .add(&expr("(X^2 + Y^2 - 2 + 2c)^2", &vars))
        .unwrap()
        .add(&expr("4 (1 - c) (Y - s)^2", &vars))
        .unwrap()
        .add(&expr("-4 c (X - c + 1)^2", &vars))
        .unwrap();
    let reduced = rules.reduce(&lhs.sub(&rhs).unwrap()).map_err(|e| e.to_string())?;
    exact_zero(&reduced)
}

/// The half-turn specialization of the two-disk certificate:
/// `16 (2 + X) = p + (X^2 + Y^2 - 4)^2 + 8 Y^2 + 4 (X + 2)^2`.
fn half_turn_specialization() -> Result<(), String> {
    let vars = xy();
    let p = expr("-X^4 - Y^4 - 2 X^2 Y^2 + 4 X^2", &vars);
    let rhs = p
        .add(&expr("(X^2 + Y^2 - 4)^2", &vars))
        .unwrap()
        .add(&expr("8 Y^2", &vars))
        .unwrap()
        .add(&expr("4 (X + 2)^2", &vars))
        .unwrap();
    exact_zero(&expr("16 (2 + X)", &vars).sub(&rhs).unwrap())
}

fn near(value: f64, target: f64, tol: f64) -> Result<(), String> {
    if (value - target).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{value} vs {target} (tol {tol})"))
    }
}

fn support_check(
    s: Result<relax::SupportOutcome, relax::RelaxError>,
    target: f64,
    tol: f64,
) -> Result<(), String> {
    match s {
        Ok(relax::SupportOutcome::Value(v)) => near(v, target, tol),
        other => Err(format!("{other:?}")),
    }
}

/// Unit-disk pencil `[[1+X, Y], [Y, 1-X]]`.
fn disk_pencil() -> shadowhull::pencil::MatrixPencil {
    let a = SymMatrix::identity(2);
    let bx = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    let by = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    shadowhull::pencil::MatrixPencil::new(a, vec![bx, by], vec![]).unwrap()
}

fn square_set() -> SemialgebraicSet {
    let vars = xy();
    SemialgebraicSet::new(
        ["1 - X", "1 + X", "1 - Y", "1 + Y"]
            .iter()
            .map(|s| expr(s, &vars))
            .collect(),
    )
    .unwrap()
}

fn nonexposed_set() -> SemialgebraicSet {
    let vars = xy();
    SemialgebraicSet::new(
        ["Y", "1 - Y", "X + 1", "Y^2 - X^3"]
            .iter()
            .map(|s| expr(s, &vars))
            .collect(),
    )
    .unwrap()
}

fn rational_point(coords: &[(i64, i64)]) -> Point {
    Point::new(
        coords
            .iter()
            .map(|&(n, d)| Scalar::from_ratio(n, d, CoeffMode::Exact))
            .collect(),
    )
    .unwrap()
}

pub fn run_suite(json: bool) -> u8 {
    let mut suite = Suite {
        results: Vec::new(),
        json,
    };

    // exact certificate identities
    suite.check("tangent identity at a = 1", tangent_identity(1, 1));
    suite.check("tangent identity at a = 1/2", tangent_identity(1, 2));
    suite.check(
        "tangent identity at a = 3/4 with adjoined root",
        tangent_identity_adjoined(),
    );
    suite.check("two-disk trig certificate identity", trig_certificate_identity());
    suite.check("half-turn specialization", half_turn_specialization());

    // relaxation regressions on the bundled counterexample set
    let cex = bundled::counterexample_set(CoeffMode::Exact);
    suite.check("counterexample: (1/3, 0) in first relaxation", {
        match relax::lasserre_point_member(&cex, 1, &rational_point(&[(1, 3), (0, 1)])) {
            Ok(v) if v.is_in() => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    suite.check(
        "counterexample: (2/5, 0) separated with a re-verified certificate",
        match relax::lasserre_point_member(&cex, 1, &rational_point(&[(2, 5), (0, 1)])) {
            Ok(v) if v.is_out() => {
                if v.margin < 0.01 {
                    Err(format!("margin {} below 0.01", v.margin))
                } else {
                    let sep = v.separator.as_ref().expect("separator present");
                    if relax::qm_member_is_feasible(&cex, 1, sep) {
                        Ok(())
                    } else {
                        Err("separator failed re-verification".into())
                    }
                }
            }
            other => Err(format!("{other:?}")),
        },
    );
    suite.check(
        "counterexample: support 1 toward -x",
        support_check(relax::lasserre_support(&cex, 1, &[-1.0, 0.0]), 1.0, 1e-5),
    );
    suite.check(
        "counterexample: support 0 toward -y",
        support_check(relax::lasserre_support(&cex, 1, &[0.0, -1.0]), 0.0, 1e-6),
    );
    suite.check("counterexample: tangent line in QM at degree 1", {
        match relax::qm_member(&cex, 1, &expr("Y - 3X + 2", &xy())) {
            Ok(MembershipOutcome::Feasible(cert)) if cert.residual <= 1e-7 => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });

    // two disks: the second relaxation is exactly the hull
    let disks = bundled::two_disks_set(CoeffMode::Exact);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    suite.check(
        "two disks: support 2 toward +x at degree 2",
        support_check(relax::lasserre_support(&disks, 2, &[1.0, 0.0]), 2.0, 1e-4),
    );
    suite.check(
        "two disks: support 1 toward +y at degree 2",
        support_check(relax::lasserre_support(&disks, 2, &[0.0, 1.0]), 1.0, 1e-4),
    );
    suite.check(
        "two disks: diagonal support 1 + sqrt(2)/2 at degree 2",
        support_check(
            relax::lasserre_support(&disks, 2, &[h, h]),
            1.0 + h,
            1e-4,
        ),
    );

    // theta bodies
    let circle = bundled::circle_ideal(CoeffMode::Exact);
    for (u, name) in [
        ([1.0, 0.0], "+x"),
        ([-1.0, 0.0], "-x"),
        ([0.0, 1.0], "+y"),
        ([0.0, -1.0], "-y"),
    ] {
        suite.check(
            &format!("circle: theta support 1 toward {name}"),
            support_check(relax::theta_support(&circle, 1, &u), 1.0, 1e-5),
        );
    }
    suite.check("circle: (1.05, 0) separated with margin >= 0.04", {
        match relax::theta_point_member(&circle, 1, &Point::from_f64s(&[1.05, 0.0])) {
            Ok(v) if v.is_out() && v.margin >= 0.04 => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    let sphere_cyl = bundled::sphere_cylinder_ideal(CoeffMode::Exact);
    suite.check(
        "sphere-cylinder curve: theta support 2 toward +x at degree 1",
        support_check(
            relax::theta_support(&sphere_cyl, 1, &[1.0, 0.0, 0.0]),
            2.0,
            1e-4,
        ),
    );
    suite.check("sphere-cylinder curve: (2, 0, 0) inside at degree 1", {
        match relax::theta_point_member(&sphere_cyl, 1, &Point::from_f64s(&[2.0, 0.0, 0.0])) {
            Ok(v) if v.is_in() => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });

    // obstruction detectors
    let cusp = bundled::cusp_set(CoeffMode::Exact);
    suite.check("cusp: singular obstruction at the origin", {
        match obstruct::singular_point_obstruction(&cusp, &rational_point(&[(0, 1), (0, 1)])) {
            Ok(r) if r.verdict == ObstructionVerdict::Obstructed => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    suite.check("cubic-edge set: non-exposed face obstruction", {
        match obstruct::nonexposed_face_check(
            &nonexposed_set(),
            &rational_point(&[(0, 1), (0, 1)]),
            &rational_point(&[(-1, 2), (0, 1)]),
        ) {
            Ok(r) if r.verdict == ObstructionVerdict::Obstructed => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    suite.check("square: vertex is exposed (no obstruction)", {
        match obstruct::nonexposed_face_check(
            &square_set(),
            &rational_point(&[(1, 1), (1, 1)]),
            &rational_point(&[(1, 1), (0, 1)]),
        ) {
            Ok(r) if r.verdict == ObstructionVerdict::NotObstructed => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    let zitrus = bundled::zitrus_ideal(CoeffMode::Exact);
    suite.check("zitrus: convex-singular point at (0, 1, 0)", {
        match obstruct::convex_singular_check(
            &zitrus,
            &rational_point(&[(0, 1), (1, 1), (0, 1)]),
            &rational_point(&[(0, 1), (0, 1), (0, 1)]),
            false,
        ) {
            Ok(r) if r.verdict == ObstructionVerdict::Obstructed => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });
    suite.check("sphere-cylinder curve: (2, 0, 0) witness invalid", {
        match obstruct::convex_singular_check(
            &sphere_cyl,
            &rational_point(&[(2, 1), (0, 1), (0, 1)]),
            &rational_point(&[(0, 1), (0, 1), (0, 1)]),
            false,
        ) {
            Ok(r) if r.verdict == ObstructionVerdict::WitnessInvalid => Ok(()),
            other => Err(format!("{other:?}")),
        }
    });

    // pencil regressions
    let two = bundled::two_disks_pencil();
    for (x, expect_in, name) in [
        ([1.5, 0.5], true, "(1.5, 0.5) inside"),
        ([2.0, 0.0], true, "(2, 0) boundary inside"),
        ([2.05, 0.0], false, "(2.05, 0) outside"),
    ] {
        suite.check(&format!("two-disk pencil projection: {name}"), {
            match two.projection_member(&x, 1e-7, 1e3) {
                Ok(v) if v.is_in() == expect_in && !matches!(v.kind, relax::VerdictKind::Inaccurate) => {
                    Ok(())
                }
                other => Err(format!("{other:?}")),
            }
        });
        suite.check(&format!("two-disk pencil closure: {name}"), {
            match two.closure_member(&x) {
                Ok(v) if v.is_in() == expect_in && !matches!(v.kind, relax::VerdictKind::Inaccurate) => {
                    Ok(())
                }
                other => Err(format!("{other:?}")),
            }
        });
    }
    let disk = disk_pencil();
    for (src, feasible) in [("2 + X", true), ("3 + X", true), ("1 - 2X", false)] {
        suite.check(&format!("disk pencil polar: {src}"), {
            match disk.polar_member(&expr(src, &xy())) {
                Ok(PolarOutcome::Feasible(_)) if feasible => Ok(()),
                Ok(PolarOutcome::Infeasible(_)) if !feasible => Ok(()),
                other => Err(format!("{other:?}")),
            }
        });
    }
    for src in ["3 + X", "2 + X"] {
        suite.check(&format!("two-disk pencil cone: {src} at degree 0"), {
            match two.qm_member(0, &expr(src, &xy())) {
                Ok(PencilQmOutcome::Feasible(cert)) if cert.residual <= 1e-6 => Ok(()),
                other => Err(format!("{other:?}")),
            }
        });
    }
    for d in 0..=2 {
        suite.check(&format!("two-disk pencil cone: X + Y - 10 infeasible at degree {d}"), {
            match two.qm_member(d, &expr("X + Y - 10", &xy())) {
                Ok(PencilQmOutcome::Infeasible(_)) => Ok(()),
                other => Err(format!("{other:?}")),
            }
        });
    }

    let failed: Vec<&(String, Result<(), String>)> = suite
        .results
        .iter()
        .filter(|(_, r)| r.is_err())
        .collect();
    if json {
        let items: Vec<serde_json::Value> = suite
            .results
            .iter()
            .map(|(name, r)| {
                serde_json::json!({
                    "name": name,
                    "pass": r.is_ok(),
                    "detail": r.as_ref().err().cloned().unwrap_or_default(),
                })
            })
            .collect();
        println!(
            "{}",
            serde_json::json!({
                "command": "verify-paper",
                "total": suite.results.len(),
                "failed": failed.len(),
                "checks": items,
            })
        );
    } else {
        println!(
            "{} checks, {} failed",
            suite.results.len(),
            failed.len()
        );
    }
    u8::from(!failed.is_empty())
}
