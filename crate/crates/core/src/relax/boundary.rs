//! Batch support sweeps over direction fans, for boundary sampling of
//! planar relaxations.
//!
//! Each direction is an independent SDP solve, so the sweep is
//! data-parallel; with the `parallel` feature (default) it runs on
//! rayon, and `support_profile_seq` is the sequential fallback used
//! for comparison benchmarks. Output order is by direction index
//! regardless of execution order, so results are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{lasserre_support, theta_support, IdealSpec, RelaxError, SemialgebraicSet, SupportOutcome};

/// One row of a boundary sweep.
#[derive(Debug, Clone)]
pub struct SupportSample {
    pub theta: f64,
    pub ux: f64,
    pub uy: f64,
    pub support: SupportOutcome,
}

/// What a sweep queries: a Lasserre relaxation or a theta body.
#[derive(Debug, Clone, Copy)]
pub enum SweepTarget<'a> {
    Set(&'a SemialgebraicSet),
    Ideal(&'a IdealSpec),
}

impl<'a> SweepTarget<'a> {
    fn arity(&self) -> usize {
        match self {
            SweepTarget::Set(s) => s.arity(),
            SweepTarget::Ideal(i) => i.arity(),
        }
    }

    fn support(&self, d: u32, u: &[f64]) -> Result<SupportOutcome, RelaxError> {
        match self {
            SweepTarget::Set(s) => lasserre_support(s, d, u),
            SweepTarget::Ideal(i) => theta_support(i, d, u),
        }
    }
}

fn directions(n_dirs: usize) -> Vec<(f64, f64, f64)> {
    (0..n_dirs)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n_dirs as f64;
            (theta, theta.cos(), theta.sin())
        })
        .collect()
}

fn solve_one(target: &SweepTarget<'_>, d: u32, dir: (f64, f64, f64)) -> SupportSample {
    let (theta, ux, uy) = dir;
    let support = target
        .support(d, &[ux, uy])
        .unwrap_or_else(|e| SupportOutcome::Inaccurate(e.to_string()));
    SupportSample {
        theta,
        ux,
        uy,
        support,
    }
}

/// Support values for `n_dirs` equally spaced directions of the plane.
/// Requires ambient dimension 2. Runs in parallel when the `parallel`
/// feature is enabled.
pub fn support_profile(
    target: SweepTarget<'_>,
    d: u32,
    n_dirs: usize,
) -> Result<Vec<SupportSample>, RelaxError> {
    if target.arity() != 2 {
        return Err(RelaxError::Input(
            "boundary sweeps require ambient dimension 2".into(),
        ));
    }
    let dirs = directions(n_dirs);
    #[cfg(feature = "parallel")]
    {
        Ok(dirs
            .par_iter()
            .map(|&dir| solve_one(&target, d, dir))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(dirs
            .iter()
            .map(|&dir| solve_one(&target, d, dir))
            .collect())
    }
}

/// Sequential sweep, always available; same results as
/// [`support_profile`].
pub fn support_profile_seq(
    target: SweepTarget<'_>,
    d: u32,
    n_dirs: usize,
) -> Result<Vec<SupportSample>, RelaxError> {
    if target.arity() != 2 {
        return Err(RelaxError::Input(
            "boundary sweeps require ambient dimension 2".into(),
        ));
    }
    Ok(directions(n_dirs)
        .iter()
        .map(|&dir| solve_one(&target, d, dir))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{parse_expr, CoeffMode};

    #[test]
    fn parallel_and_sequential_agree() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let disk = SemialgebraicSet::new(vec![
            parse_expr("1 - X^2 - Y^2", &vars, CoeffMode::Exact).unwrap(),
        ])
        .unwrap();
        let a = support_profile(SweepTarget::Set(&disk), 1, 8).unwrap();
        let b = support_profile_seq(SweepTarget::Set(&disk), 1, 8).unwrap();
        assert_eq!(a.len(), 8);
        for (sa, sb) in a.iter().zip(&b) {
            let va = sa.support.value().expect("value");
            let vb = sb.support.value().expect("value");
            assert_eq!(va, vb, "same code path must give identical values");
            // unit disk: support is 1 in every direction
            assert!((va - 1.0).abs() <= 1e-5);
        }
    }

    #[test]
    fn zero_directions_gives_empty_profile() {
        let vars: Vec<String> = vec!["X".into(), "Y".into()];
        let disk = SemialgebraicSet::new(vec![
            parse_expr("1 - X^2 - Y^2", &vars, CoeffMode::Exact).unwrap(),
        ])
        .unwrap();
        assert!(support_profile(SweepTarget::Set(&disk), 1, 0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn dimension_guard() {
        let vars: Vec<String> = vec!["X".into(), "Y".into(), "Z".into()];
        let ball = SemialgebraicSet::new(vec![parse_expr(
            "1 - X^2 - Y^2 - Z^2",
            &vars,
            CoeffMode::Exact,
        )
        .unwrap()])
        .unwrap();
        assert!(support_profile(SweepTarget::Set(&ball), 1, 4).is_err());
    }
}
