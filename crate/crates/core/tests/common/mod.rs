//! Shared test oracles: random spectrahedron instances solved by grid
//! refinement plus eigenvalue checks, independent of the
//! interior-point path they validate.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shadowhull::sdp::{svec, svec_len, Constraint, SDPProblem, Sense, SymMatrix};

pub const BOX: f64 = 3.0;

/// A random linear matrix inequality `F0 + x1 F1 + x2 F2 >= 0` with a
/// strictly feasible origin, optimized over the box `|x_i| <= BOX`.
pub struct RandomLmi {
    pub k: usize,
    pub f0: SymMatrix,
    pub f1: SymMatrix,
    pub f2: SymMatrix,
    pub c: [f64; 2],
}

pub fn random_lmi(rng: &mut ChaCha8Rng) -> RandomLmi {
    let k = rng.gen_range(2..=4);
    let mut rand_sym = |scale: f64| {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.gen_range(-scale..scale)).collect())
            .collect();
        SymMatrix::from_rows(&rows).unwrap()
    };
    let r = rand_sym(1.0);
    // F0 = R R^T / k + I/2 is strictly positive definite
    let rd = r.to_dmatrix();
    let f0 = SymMatrix::from_dmatrix(&(&rd * rd.transpose() / k as f64));
    let mut f0 = f0;
    for i in 0..k {
        let v = f0.entry(i, i) + 0.5;
        f0.set(i, i, v);
    }
    let f1 = rand_sym(1.0);
    let f2 = rand_sym(1.0);
    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    RandomLmi {
        k,
        f0,
        f1,
        f2,
        c: [ang.cos(), ang.sin()],
    }
}

impl RandomLmi {
    pub fn matrix_at(&self, x: [f64; 2]) -> SymMatrix {
        let mut m = self.f0.clone();
        for i in 0..self.k {
            for j in i..self.k {
                let v = m.entry(i, j) + x[0] * self.f1.entry(i, j) + x[1] * self.f2.entry(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn feasible(&self, x: [f64; 2]) -> bool {
        x[0].abs() <= BOX
            && x[1].abs() <= BOX
            && shadowhull::sdp::eigmin(&self.matrix_at(x)).0 >= 0.0
    }

    pub fn objective(&self, x: [f64; 2]) -> f64 {
        self.c[0] * x[0] + self.c[1] * x[1]
    }

    /// Brute-force optimum: rotate coordinates so the objective is
    /// `-norm * t`, then bisect on the support level `t`, testing
    /// nonemptiness of the level slice `{s : s v + t u feasible}` by a
    /// dense scan inside a tracked bracket. For a convex set the
    /// segment from a strictly interior point to the optimizer meets
    /// every intermediate slice, so the expanding bracket never loses
    /// the optimizer while the slices thin out near a corner.
    pub fn grid_optimum(&self) -> f64 {
        let norm = (self.c[0] * self.c[0] + self.c[1] * self.c[1]).sqrt();
        let u = [-self.c[0] / norm, -self.c[1] / norm];
        let v = [-u[1], u[0]];
        let reach = BOX * std::f64::consts::SQRT_2 + 0.1;
        let point = |s: f64, t: f64| [s * v[0] + t * u[0], s * v[1] + t * u[1]];

        let scan = |t: f64, lo: f64, hi: f64| -> Option<(f64, f64)> {
            let n = 6000;
            let mut first = f64::NAN;
            let mut last = f64::NAN;
            for i in 0..=n {
                let s = lo + (hi - lo) * i as f64 / n as f64;
                if self.feasible(point(s, t)) {
                    if first.is_nan() {
                        first = s;
                    }
                    last = s;
                }
            }
            (!first.is_nan()).then_some((first, last))
        };

        // origin is strictly feasible, so t = 0 is attainable
        let mut t_lo = 0.0_f64;
        let mut t_hi = reach;
        let mut bracket = (-reach, reach);
        for _ in 0..55 {
            let t = 0.5 * (t_lo + t_hi);
            let gap = t_hi - t_lo;
            let len = (bracket.1 - bracket.0).max(1e-9);
            let pad = len.max(50.0 * gap);
            let lo = (bracket.0 - pad).max(-reach);
            let hi = (bracket.1 + pad).min(reach);
            match scan(t, lo, hi) {
                Some((a, b)) => {
                    t_lo = t;
                    bracket = (a, b);
                }
                None => t_hi = t,
            }
        }
        -norm * t_lo
    }

    /// The same instance as a block SDP with two free variables.
    pub fn to_sdp(&self) -> SDPProblem {
        let k = self.k;
        let dims = vec![k, 1, 1, 1, 1];
        let ns: usize = dims.iter().map(|&d| svec_len(d)).sum();
        let width = ns + 2;
        let f1v = svec(&self.f1);
        let f2v = svec(&self.f2);
        let f0v = svec(&self.f0);
        let mut constraints = Vec::new();
        // S_main - x1 F1 - x2 F2 = F0, one row per svec coordinate
        for t in 0..svec_len(k) {
            let mut coeffs = vec![0.0; width];
            coeffs[t] = 1.0;
            coeffs[ns] = -f1v[t];
            coeffs[ns + 1] = -f2v[t];
            constraints.push(Constraint {
                coeffs,
                rhs: f0v[t],
            });
        }
        // box blocks: BOX - x1, BOX + x1, BOX - x2, BOX + x2
        let signs = [(0usize, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)];
        for (slot, (var, sign)) in signs.iter().enumerate() {
            let mut coeffs = vec![0.0; width];
            coeffs[svec_len(k) + slot] = 1.0;
            coeffs[ns + var] = *sign;
            constraints.push(Constraint { coeffs, rhs: BOX });
        }
        let mut objective = vec![0.0; width];
        objective[ns] = self.c[0];
        objective[ns + 1] = self.c[1];
        SDPProblem {
            block_dims: dims,
            n_free: 2,
            objective,
            constraints,
            sense: Sense::Minimize,
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Roots of the characteristic polynomial of a symmetric matrix,
/// dimension 2 or 3, by closed-form / trigonometric formulas.
pub fn charpoly_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    match m.dim() {
        2 => {
            let (a, b, d) = (m.entry(0, 0), m.entry(0, 1), m.entry(1, 1));
            let tr = a + d;
            let det = a * d - b * b;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            vec![tr / 2.0 - disc, tr / 2.0 + disc]
        }
        3 => {
            // trigonometric solution for symmetric 3x3
            let (a, b, c) = (m.entry(0, 0), m.entry(0, 1), m.entry(0, 2));
            let (d, e, f) = (m.entry(1, 1), m.entry(1, 2), m.entry(2, 2));
            let p1 = b * b + c * c + e * e;
            if p1 == 0.0 {
                let mut v = vec![a, d, f];
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                return v;
            }
            let q = (a + d + f) / 3.0;
            let p2 = (a - q).powi(2) + (d - q).powi(2) + (f - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let bm = [
                [(a - q) / p, b / p, c / p],
                [b / p, (d - q) / p, e / p],
                [c / p, e / p, (f - q) / p],
            ];
            let det_b = bm[0][0] * (bm[1][1] * bm[2][2] - bm[1][2] * bm[2][1])
                - bm[0][1] * (bm[1][0] * bm[2][2] - bm[1][2] * bm[2][0])
                + bm[0][2] * (bm[1][0] * bm[2][1] - bm[1][1] * bm[2][0]);
            let r = (det_b / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e2 = 3.0 * q - e1 - e3;
            let mut v = vec![e1, e2, e3];
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            v
        }
        other => panic!("charpoly oracle only covers dimensions 2 and 3, got {other}"),
    }
}
