//! Detectors for the geometric obstructions that keep relaxation
//! hierarchies from closing at any finite degree.
//!
//! Each check examines gradients of active constraints (or ideal
//! generators) at a boundary point. In exact coefficient mode the
//! verdicts are exact and reproducible bit for bit; float mode uses a
//! 1e-9 activity tolerance. Hypotheses that the checks cannot verify
//! (like "the point lies on the relative boundary of the convex hull")
//! are echoed in the report as caller-asserted rather than silently
//! assumed, so an `Obstructed` verdict states exactly what was proven.

use serde::Serialize;

use crate::poly::{CoeffMode, Point, Polynomial, Scalar};
use crate::relax::{IdealSpec, RelaxError, SemialgebraicSet};
use crate::tolerances::{ACTIVE_TOL, LINE_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObstructionVerdict {
    /// Every checked condition of the obstruction holds.
    Obstructed,
    /// Some checked condition fails, so this criterion proves nothing.
    NotObstructed,
    /// A precondition (like a nonempty relative interior on the line)
    /// does not hold; the criterion does not apply.
    NotApplicable,
    /// The supplied witness point fails the tangency condition.
    WitnessInvalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HypothesisStatus {
    Verified,
    Asserted,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypothesisStatus,
    pub detail: String,
}

/// One row of the gradient table: which constraint, its gradient at
/// the base point, and the inner product tested.
#[derive(Debug, Clone, Serialize)]
pub struct GradientEntry {
    pub index: usize,
    pub gradient: Vec<Scalar>,
    pub inner_product: Scalar,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub verdict: ObstructionVerdict,
    pub active: Vec<usize>,
    pub gradients: Vec<GradientEntry>,
    pub hypotheses: Vec<Hypothesis>,
    pub caveats: Vec<String>,
}

fn scalar_is_zero(v: &Scalar) -> bool {
    match v {
        Scalar::Rational(_) => v.is_zero(),
        Scalar::Float(f) => f.abs() <= ACTIVE_TOL,
    }
}

fn scalar_nonneg(v: &Scalar) -> bool {
    match v {
        Scalar::Rational(_) => v.signum() >= 0,
        Scalar::Float(f) => *f >= -ACTIVE_TOL,
    }
}

fn dot(grad: &[Scalar], dir: &[Scalar]) -> Scalar {
    let mut acc = Scalar::zero(grad[0].mode());
    for (g, d) in grad.iter().zip(dir) {
        acc = acc.add(&g.mul(d));
    }
    acc
}

/// Converts inputs to one common mode: exact stays exact only when
/// everything is exact.
fn common_mode(set_mode: CoeffMode, points: &[&Point]) -> CoeffMode {
    let mut mode = set_mode;
    for p in points {
        if p.coords.iter().any(|c| c.mode() == CoeffMode::Float) {
            mode = CoeffMode::Float;
        }
    }
    mode
}

fn point_in_mode(p: &Point, mode: CoeffMode) -> Vec<Scalar> {
    p.coords
        .iter()
        .map(|c| match (c, mode) {
            (Scalar::Rational(_), CoeffMode::Float) => Scalar::Float(c.to_f64()),
            _ => c.clone(),
        })
        .collect()
}

fn poly_in_mode(p: &Polynomial, mode: CoeffMode) -> Polynomial {
    match mode {
        CoeffMode::Float => p.to_float(),
        CoeffMode::Exact => p.clone(),
    }
}

fn check_point_in_set(
    set: &SemialgebraicSet,
    coords: &[Scalar],
    mode: CoeffMode,
    what: &str,
) -> Result<Vec<usize>, RelaxError> {
    let point = Point::new(coords.to_vec()).map_err(RelaxError::Poly)?;
    let mut active = Vec::new();
    for (i, p) in set.inequalities().iter().enumerate() {
        let v = poly_in_mode(p, mode)
            .evaluate(&point)
            .map_err(RelaxError::Poly)?;
        if !scalar_nonneg(&v) {
            return Err(RelaxError::Input(format!(
                "{what} is not in the set: inequality {i} evaluates to {v}"
            )));
        }
        if scalar_is_zero(&v) {
            active.push(i);
        }
    }
    Ok(active)
}

/// Line criterion: if the set meets the line `a + t dir` in a segment
/// with nonempty relative interior, `a` lies on the relative boundary
/// of the hull restricted to the line (caller-asserted), and every
/// active gradient at `a` is orthogonal to the line, then every
/// Lasserre relaxation strictly contains the hull.
pub fn line_obstruction(
    set: &SemialgebraicSet,
    a: &Point,
    dir: &Point,
    box_r: f64,
) -> Result<ObstructionReport, RelaxError> {
    if a.arity() != set.arity() || dir.arity() != set.arity() {
        return Err(RelaxError::Input("point/direction arity mismatch".into()));
    }
    if dir.coords.iter().all(|c| c.is_zero()) {
        return Err(RelaxError::Input("direction must be nonzero".into()));
    }
    if !(box_r > 0.0) {
        return Err(RelaxError::Input("box radius must be positive".into()));
    }
    let mode = common_mode(set.mode(), &[a, dir]);
    let a_coords = point_in_mode(a, mode);
    let dir_coords = point_in_mode(dir, mode);
    let active = check_point_in_set(set, &a_coords, mode, "base point")?;

    let mut hypotheses = Vec::new();
    let mut caveats = Vec::new();

    // interior probe along the line, in floats. The relative interior
    // of the 1-dimensional slice is governed by the constraints that
    // do not vanish identically on the line, so those are required to
    // be strictly positive at some sample while identically-vanishing
    // ones only need to stay nonnegative.
    let a_f: Vec<f64> = a_coords.iter().map(Scalar::to_f64).collect();
    let d_f: Vec<f64> = dir_coords.iter().map(Scalar::to_f64).collect();
    let sample = |k: usize| -> Vec<f64> {
        let t = -box_r + 2.0 * box_r * k as f64 / (LINE_SAMPLES - 1) as f64;
        a_f.iter().zip(&d_f).map(|(ai, di)| ai + t * di).collect()
    };
    let vanishing: Vec<bool> = set
        .inequalities()
        .iter()
        .map(|p| {
            (0..LINE_SAMPLES).all(|k| p.evaluate_f64(&sample(k)).abs() <= ACTIVE_TOL)
        })
        .collect();
    let mut interior_witness = None;
    for k in 0..LINE_SAMPLES {
        let x = sample(k);
        let ok = set.inequalities().iter().zip(&vanishing).all(|(p, &vz)| {
            let v = p.evaluate_f64(&x);
            if vz {
                v >= -ACTIVE_TOL
            } else {
                v > ACTIVE_TOL
            }
        });
        if ok {
            let t = -box_r + 2.0 * box_r * k as f64 / (LINE_SAMPLES - 1) as f64;
            interior_witness = Some(t);
            break;
        }
    }
    match interior_witness {
        Some(t) => hypotheses.push(Hypothesis {
            name: "set meets the line with nonempty relative interior".into(),
            status: HypothesisStatus::Verified,
            detail: format!("strictly feasible sample at parameter t = {t}"),
        }),
        None => hypotheses.push(Hypothesis {
            name: "set meets the line with nonempty relative interior".into(),
            status: HypothesisStatus::Failed,
            detail: format!("no strictly feasible sample among {LINE_SAMPLES} points in [-{box_r}, {box_r}]"),
        }),
    }
    hypotheses.push(Hypothesis {
        name: "base point on the relative boundary of the hull restricted to the line".into(),
        status: HypothesisStatus::Asserted,
        detail: "not computable here; asserted by the caller".into(),
    });
    if mode == CoeffMode::Float {
        caveats.push("float mode: activity and orthogonality tested at 1e-9".into());
    }

    let mut gradients = Vec::new();
    let mut all_orthogonal = true;
    let dir_point = Point::new(dir_coords.clone()).map_err(RelaxError::Poly)?;
    let a_point = Point::new(a_coords.clone()).map_err(RelaxError::Poly)?;
    for &i in &active {
        let grad: Vec<Scalar> = poly_in_mode(&set.inequalities()[i], mode)
            .gradient()
            .iter()
            .map(|g| g.evaluate(&a_point).expect("arity checked"))
            .collect();
        let ip = dot(&grad, &dir_point.coords);
        if !scalar_is_zero(&ip) {
            all_orthogonal = false;
        }
        gradients.push(GradientEntry {
            index: i,
            gradient: grad,
            inner_product: ip,
        });
    }
    hypotheses.push(Hypothesis {
        name: "active gradients orthogonal to the line".into(),
        status: if all_orthogonal {
            HypothesisStatus::Verified
        } else {
            HypothesisStatus::Failed
        },
        detail: format!("{} active constraints checked", active.len()),
    });

    let verdict = if interior_witness.is_none() {
        ObstructionVerdict::NotApplicable
    } else if all_orthogonal {
        ObstructionVerdict::Obstructed
    } else {
        ObstructionVerdict::NotObstructed
    };
    Ok(ObstructionReport {
        verdict,
        active,
        gradients,
        hypotheses,
        caveats,
    })
}

/// Singularity criterion: if every active constraint at `a` has a
/// vanishing gradient (and `a` lies on the hull boundary,
/// caller-asserted), every Lasserre relaxation strictly contains the
/// hull.
pub fn singular_point_obstruction(
    set: &SemialgebraicSet,
    a: &Point,
) -> Result<ObstructionReport, RelaxError> {
    if a.arity() != set.arity() {
        return Err(RelaxError::Input("point arity mismatch".into()));
    }
    let mode = common_mode(set.mode(), &[a]);
    let a_coords = point_in_mode(a, mode);
    let active = check_point_in_set(set, &a_coords, mode, "base point")?;
    let a_point = Point::new(a_coords).map_err(RelaxError::Poly)?;

    let mut hypotheses = vec![Hypothesis {
        name: "base point on the boundary of the convex hull".into(),
        status: HypothesisStatus::Asserted,
        detail: "not computable here; asserted by the caller".into(),
    }];
    let mut caveats = Vec::new();
    if mode == CoeffMode::Float {
        caveats.push("float mode: activity and vanishing tested at 1e-9".into());
    }
    if active.is_empty() {
        hypotheses.push(Hypothesis {
            name: "some constraint is active at the base point".into(),
            status: HypothesisStatus::Failed,
            detail: "no active constraints: the point is interior to the set".into(),
        });
        return Ok(ObstructionReport {
            verdict: ObstructionVerdict::NotApplicable,
            active,
            gradients: Vec::new(),
            hypotheses,
            caveats,
        });
    }

    let mut gradients = Vec::new();
    let mut all_singular = true;
    for &i in &active {
        let grad: Vec<Scalar> = poly_in_mode(&set.inequalities()[i], mode)
            .gradient()
            .iter()
            .map(|g| g.evaluate(&a_point).expect("arity checked"))
            .collect();
        if !grad.iter().all(scalar_is_zero) {
            all_singular = false;
        }
        let zero = Scalar::zero(mode);
        gradients.push(GradientEntry {
            index: i,
            gradient: grad,
            inner_product: zero,
        });
    }
    hypotheses.push(Hypothesis {
        name: "every active constraint is singular at the base point".into(),
        status: if all_singular {
            HypothesisStatus::Verified
        } else {
            HypothesisStatus::Failed
        },
        detail: format!("{} active constraints checked", active.len()),
    });
    Ok(ObstructionReport {
        verdict: if all_singular {
            ObstructionVerdict::Obstructed
        } else {
            ObstructionVerdict::NotObstructed
        },
        active,
        gradients,
        hypotheses,
        caveats,
    })
}

/// Non-exposed-face reduction: builds the line through `a` (relative
/// interior of the candidate face) and `b` (relative interior of the
/// containing face) and delegates to the line criterion. The sampling
/// box is sized in units of `b - a`, covering the segment and its
/// extensions.
pub fn nonexposed_face_check(
    set: &SemialgebraicSet,
    a: &Point,
    b: &Point,
) -> Result<ObstructionReport, RelaxError> {
    if a == b {
        return Err(RelaxError::Input(
            "face points must be distinct to span a line".into(),
        ));
    }
    let mode = common_mode(set.mode(), &[a, b]);
    let a_coords = point_in_mode(a, mode);
    let b_coords = point_in_mode(b, mode);
    check_point_in_set(set, &b_coords, mode, "second point")?;
    let dir: Vec<Scalar> = b_coords
        .iter()
        .zip(&a_coords)
        .map(|(bi, ai)| bi.sub(ai))
        .collect();
    let a_pt = Point::new(a_coords).map_err(RelaxError::Poly)?;
    let d_pt = Point::new(dir).map_err(RelaxError::Poly)?;
    line_obstruction(set, &a_pt, &d_pt, 2.0)
}

/// Tangency verifier for theta bodies: with `p` on the variety (and,
/// caller-asserted, on the hull boundary) and `q` a relative-interior
/// witness, `Obstructed` means `q - p` is orthogonal to every
/// generator gradient at `p`, placing `q` in the tangent space; the
/// theta hierarchy then never closes. A nonzero inner product
/// invalidates the witness rather than refuting the obstruction.
pub fn convex_singular_check(
    ideal: &IdealSpec,
    p: &Point,
    q: &Point,
    generators_real_radical: bool,
) -> Result<ObstructionReport, RelaxError> {
    if p.arity() != ideal.arity() || q.arity() != ideal.arity() {
        return Err(RelaxError::Input("point arity mismatch".into()));
    }
    let mode = common_mode(ideal.mode(), &[p, q]);
    let p_coords = point_in_mode(p, mode);
    let q_coords = point_in_mode(q, mode);
    let p_point = Point::new(p_coords.clone()).map_err(RelaxError::Poly)?;

    for (j, g) in ideal.generators().iter().enumerate() {
        let v = poly_in_mode(g, mode)
            .evaluate(&p_point)
            .map_err(RelaxError::Poly)?;
        if !scalar_is_zero(&v) {
            return Err(RelaxError::Input(format!(
                "point is not on the variety: generator {j} evaluates to {v}"
            )));
        }
    }

    let mut hypotheses = vec![
        Hypothesis {
            name: "witness in the relative interior of the hull".into(),
            status: HypothesisStatus::Asserted,
            detail: "not computable here; asserted by the caller".into(),
        },
        Hypothesis {
            name: "base point on the boundary of the hull".into(),
            status: HypothesisStatus::Asserted,
            detail: "not computable here; asserted by the caller".into(),
        },
    ];
    let mut caveats = Vec::new();
    if !generators_real_radical {
        caveats.push(
            "tangent space computed from the supplied generators; if they do not generate \
             the real radical, the true tangent space may be smaller"
                .into(),
        );
    }
    if mode == CoeffMode::Float {
        caveats.push("float mode: vanishing tested at 1e-9".into());
    }

    let diff: Vec<Scalar> = q_coords
        .iter()
        .zip(&p_coords)
        .map(|(qi, pi)| qi.sub(pi))
        .collect();
    let mut gradients = Vec::new();
    let mut all_orthogonal = true;
    for (j, g) in ideal.generators().iter().enumerate() {
        let grad: Vec<Scalar> = poly_in_mode(g, mode)
            .gradient()
            .iter()
            .map(|gg| gg.evaluate(&p_point).expect("arity checked"))
            .collect();
        let ip = dot(&grad, &diff);
        if !scalar_is_zero(&ip) {
            all_orthogonal = false;
        }
        gradients.push(GradientEntry {
            index: j,
            gradient: grad,
            inner_product: ip,
        });
    }
    hypotheses.push(Hypothesis {
        name: "witness direction orthogonal to all generator gradients".into(),
        status: if all_orthogonal {
            HypothesisStatus::Verified
        } else {
            HypothesisStatus::Failed
        },
        detail: format!("{} generators checked", ideal.generators().len()),
    });
    Ok(ObstructionReport {
        verdict: if all_orthogonal {
            ObstructionVerdict::Obstructed
        } else {
            ObstructionVerdict::WitnessInvalid
        },
        active: Vec::new(),
        gradients,
        hypotheses,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_expr;

    fn xy() -> Vec<String> {
        vec!["X".into(), "Y".into()]
    }

    fn pt(coords: &[(i64, i64)]) -> Point {
        Point::new(
            coords
                .iter()
                .map(|&(n, d)| Scalar::from_ratio(n, d, CoeffMode::Exact))
                .collect(),
        )
        .unwrap()
    }

    fn cusp() -> SemialgebraicSet {
        SemialgebraicSet::new(vec![
            parse_expr("-X^4 + X^3 - Y^2", &xy(), CoeffMode::Exact).unwrap()
        ])
        .unwrap()
    }

    fn nonexposed_set() -> SemialgebraicSet {
        SemialgebraicSet::new(
            ["Y", "1 - Y", "X + 1", "Y^2 - X^3"]
                .iter()
                .map(|s| parse_expr(s, &xy(), CoeffMode::Exact).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cusp_line_obstruction() {
        let r = line_obstruction(&cusp(), &pt(&[(0, 1), (0, 1)]), &pt(&[(1, 1), (0, 1)]), 2.0)
            .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "{r:?}");
    }

    #[test]
    fn nonexposed_set_line_obstruction() {
        let r = line_obstruction(
            &nonexposed_set(),
            &pt(&[(0, 1), (0, 1)]),
            &pt(&[(1, 1), (0, 1)]),
            2.0,
        )
        .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "{r:?}");
    }

    #[test]
    fn tangent_line_to_circle_not_applicable() {
        let circle = SemialgebraicSet::new(vec![
            parse_expr("1 - X^2 - Y^2", &xy(), CoeffMode::Exact).unwrap()
        ])
        .unwrap();
        let r = line_obstruction(&circle, &pt(&[(1, 1), (0, 1)]), &pt(&[(0, 1), (1, 1)]), 2.0)
            .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::NotApplicable, "{r:?}");
    }

    #[test]
    fn singularity_verdicts() {
        let r = singular_point_obstruction(&cusp(), &pt(&[(0, 1), (0, 1)])).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed);

        let r = singular_point_obstruction(&cusp(), &pt(&[(1, 1), (0, 1)])).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::NotObstructed);
        assert_eq!(r.gradients[0].gradient[0], Scalar::from_integer(-1, CoeffMode::Exact));

        let two_disks = SemialgebraicSet::new(vec![parse_expr(
            "-X^4 - Y^4 - 2X^2 Y^2 + 4X^2",
            &xy(),
            CoeffMode::Exact,
        )
        .unwrap()])
        .unwrap();
        let r = singular_point_obstruction(&two_disks, &pt(&[(1, 1), (1, 1)])).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::NotObstructed);
        assert_eq!(
            r.gradients[0].gradient,
            vec![
                Scalar::zero(CoeffMode::Exact),
                Scalar::from_integer(-8, CoeffMode::Exact)
            ]
        );
    }

    #[test]
    fn outside_point_rejected() {
        assert!(singular_point_obstruction(&cusp(), &pt(&[(2, 1), (0, 1)])).is_err());
    }

    #[test]
    fn nonexposed_face_examples() {
        let r = nonexposed_face_check(&nonexposed_set(), &pt(&[(0, 1), (0, 1)]), &pt(&[(-1, 2), (0, 1)]))
            .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "{r:?}");

        let square = SemialgebraicSet::new(
            ["1 - X", "1 + X", "1 - Y", "1 + Y"]
                .iter()
                .map(|s| parse_expr(s, &xy(), CoeffMode::Exact).unwrap())
                .collect(),
        )
        .unwrap();
        let r = nonexposed_face_check(&square, &pt(&[(1, 1), (1, 1)]), &pt(&[(1, 1), (0, 1)]))
            .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::NotObstructed, "{r:?}");

        let r = nonexposed_face_check(&cusp(), &pt(&[(0, 1), (0, 1)]), &pt(&[(1, 2), (0, 1)]))
            .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "{r:?}");
    }

    #[test]
    fn convex_singular_examples() {
        let xyz: Vec<String> = vec!["X".into(), "Y".into(), "Z".into()];
        let zitrus = IdealSpec::new(vec![parse_expr(
            "X^2 + Z^2 + Y^6 - 3Y^4 + 3Y^2 - 1",
            &xyz,
            CoeffMode::Exact,
        )
        .unwrap()])
        .unwrap();
        let p = pt(&[(0, 1), (1, 1), (0, 1)]);
        let q = pt(&[(0, 1), (0, 1), (0, 1)]);
        let r = convex_singular_check(&zitrus, &p, &q, false).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed, "{r:?}");
        assert!(!r.caveats.is_empty());

        let sphere_cyl = IdealSpec::new(vec![
            parse_expr("X^2 + Y^2 + Z^2 - 4", &xyz, CoeffMode::Exact).unwrap(),
            parse_expr("X^2 - 2X + Y^2", &xyz, CoeffMode::Exact).unwrap(),
        ])
        .unwrap();
        let p = pt(&[(2, 1), (0, 1), (0, 1)]);
        let q = pt(&[(0, 1), (0, 1), (0, 1)]);
        let r = convex_singular_check(&sphere_cyl, &p, &q, false).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::WitnessInvalid, "{r:?}");
        // (q - p) . grad(sphere) = (-2, 0, 0) . (4, 0, 0) = -8
        assert_eq!(
            r.gradients[0].inner_product,
            Scalar::from_integer(-8, CoeffMode::Exact)
        );

        let circle2 = IdealSpec::new(vec![
            parse_expr("X^2 + Y^2 - 1", &xy(), CoeffMode::Exact).unwrap()
        ])
        .unwrap();
        let r = convex_singular_check(
            &circle2,
            &pt(&[(1, 1), (0, 1)]),
            &pt(&[(0, 1), (0, 1)]),
            true,
        )
        .unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::WitnessInvalid);
        assert!(r.caveats.is_empty());
    }

    #[test]
    fn exact_mode_determinism() {
        let a = pt(&[(0, 1), (0, 1)]);
        let d = pt(&[(1, 1), (0, 1)]);
        let r1 = line_obstruction(&nonexposed_set(), &a, &d, 2.0).unwrap();
        let r2 = line_obstruction(&nonexposed_set(), &a, &d, 2.0).unwrap();
        assert_eq!(format!("{r1:?}"), format!("{r2:?}"));
    }
}
