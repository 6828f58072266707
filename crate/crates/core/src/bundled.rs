//! Bundled example documents: the canonical inputs used by the
//! verification suite and handy as CLI starting points. The same files
//! live under `data/` in this crate.

use crate::poly::CoeffMode;
use crate::relax::{IdealDoc, IdealSpec, RelaxError, SemialgebraicSet, SetDoc};
use crate::pencil::{MatrixPencil, PencilDoc};

/// Polyhedral-plus-cubic set whose first relaxation is the hull of the
/// set together with one extra point on the x-axis.
pub const COUNTEREXAMPLE_JSON: &str = include_str!("../data/counterexample.json");
/// Cusp region `-x^4 + x^3 - y^2 >= 0`, singular at the origin.
pub const CUSP_JSON: &str = include_str!("../data/cusp.json");
/// Union of two unit disks centered at (-1, 0) and (1, 0).
pub const TWO_DISKS_JSON: &str = include_str!("../data/twodisks.json");
/// Unit circle as an ideal.
pub const CIRCLE_JSON: &str = include_str!("../data/circle.json");
/// Compact sextic surface with a singular point on its hull boundary.
pub const ZITRUS_JSON: &str = include_str!("../data/zitrus.json");
/// Sphere-cylinder intersection curve with a non-convex-singular
/// singularity at (2, 0, 0).
pub const SPHERE_CYLINDER_JSON: &str = include_str!("../data/sphere_cylinder.json");
/// 4x4 pencil whose shadow is the convex hull of the two disks.
pub const TWO_DISKS_PENCIL_JSON: &str = include_str!("../data/twodisks_pencil.json");

fn set_from(json: &str, mode: CoeffMode) -> Result<SemialgebraicSet, RelaxError> {
    let doc: SetDoc =
        serde_json::from_str(json).map_err(|e| RelaxError::Input(format!("bundled set: {e}")))?;
    SemialgebraicSet::from_doc(&doc, mode)
}

fn ideal_from(json: &str, mode: CoeffMode) -> Result<IdealSpec, RelaxError> {
    let doc: IdealDoc =
        serde_json::from_str(json).map_err(|e| RelaxError::Input(format!("bundled ideal: {e}")))?;
    IdealSpec::from_doc(&doc, mode)
}

pub fn counterexample_set(mode: CoeffMode) -> SemialgebraicSet {
    set_from(COUNTEREXAMPLE_JSON, mode).expect("bundled document is valid")
}

pub fn cusp_set(mode: CoeffMode) -> SemialgebraicSet {
    set_from(CUSP_JSON, mode).expect("bundled document is valid")
}

pub fn two_disks_set(mode: CoeffMode) -> SemialgebraicSet {
    set_from(TWO_DISKS_JSON, mode).expect("bundled document is valid")
}

pub fn circle_ideal(mode: CoeffMode) -> IdealSpec {
    ideal_from(CIRCLE_JSON, mode).expect("bundled document is valid")
}

pub fn zitrus_ideal(mode: CoeffMode) -> IdealSpec {
    ideal_from(ZITRUS_JSON, mode).expect("bundled document is valid")
}

pub fn sphere_cylinder_ideal(mode: CoeffMode) -> IdealSpec {
    ideal_from(SPHERE_CYLINDER_JSON, mode).expect("bundled document is valid")
}

pub fn two_disks_pencil() -> MatrixPencil {
    let doc: PencilDoc =
        serde_json::from_str(TWO_DISKS_PENCIL_JSON).expect("bundled document parses");
    MatrixPencil::from_doc(&doc).expect("bundled document is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Point;

    #[test]
    fn documents_load_and_round_trip() {
        let set = counterexample_set(CoeffMode::Exact);
        assert_eq!(set.inequalities().len(), 4);
        assert_eq!(set.max_degree(), 3);
        let doc = set.to_doc();
        let again = SemialgebraicSet::from_doc(&doc, CoeffMode::Exact).unwrap();
        assert_eq!(
            format!("{:?}", again.inequalities()),
            format!("{:?}", set.inequalities())
        );

        assert_eq!(cusp_set(CoeffMode::Exact).max_degree(), 4);
        assert_eq!(two_disks_set(CoeffMode::Exact).max_degree(), 4);
        assert_eq!(circle_ideal(CoeffMode::Exact).generators().len(), 1);
        assert_eq!(zitrus_ideal(CoeffMode::Exact).generators()[0].degree(), 6);
        assert_eq!(sphere_cylinder_ideal(CoeffMode::Exact).generators().len(), 2);
    }

    #[test]
    fn pencil_matches_the_two_disk_shadow() {
        let p = two_disks_pencil();
        assert_eq!(p.dim(), 4);
        assert_eq!((p.nx(), p.ny()), (2, 1));
        let (inside, lam) = p.member(&[2.0, 0.0], &[1.0]);
        assert!(inside && lam.abs() < 1e-12);
        // a disk point lies in the shadow and in the polynomial set;
        // a hull point between the disks lies only in the shadow
        let (inside, _) = p.member(&[1.0, 0.5], &[1.0]);
        assert!(inside);
        let set = two_disks_set(CoeffMode::Exact);
        let v = set.inequalities()[0]
            .to_float()
            .evaluate(&Point::from_f64s(&[1.0, 0.5]))
            .unwrap();
        assert!(v.to_f64() > 0.0);
        let (between, _) = p.member(&[0.0, 0.5], &[0.0]);
        assert!(between);
        let v = set.inequalities()[0]
            .to_float()
            .evaluate(&Point::from_f64s(&[0.0, 0.5]))
            .unwrap();
        assert!(v.to_f64() < 0.0);
    }
}
