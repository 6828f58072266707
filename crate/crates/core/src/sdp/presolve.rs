//! Constraint-row preprocessing: scaling, dependence elimination, and
//! inconsistency detection with a Farkas combination.

use super::SDPProblem;

pub(crate) struct Presolved {
    /// Indices of kept (independent) original rows, in order.
    pub kept: Vec<usize>,
    /// Scale factor applied to each kept row (row was divided by it).
    pub scales: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub warnings: Vec<String>,
}

pub(crate) enum PresolveOutcome {
    Reduced(Presolved),
    /// The equality system alone is inconsistent; the ray is a Farkas
    /// combination over original rows with `y^T A = 0`, `y . b > 0`.
    Inconsistent { ray: Vec<f64> },
}

const RANK_TOL: f64 = 1e-9;
const INCONSISTENT_TOL: f64 = 1e-8;

pub(crate) fn presolve(prob: &SDPProblem) -> PresolveOutcome {
    let w = prob.width();
    let m = prob.constraints.len();
    let mut kept: Vec<usize> = Vec::new();
    let mut scales: Vec<f64> = Vec::new();
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();

    // orthonormalized kept rows, plus each basis vector's expansion in
    // kept-row coordinates (for Farkas combinations)
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut q_in_kept: Vec<Vec<f64>> = Vec::new();

    // rows that are pure roundoff noise relative to the problem scale
    // must go before per-row normalization blows them up
    let global_scale = prob
        .constraints
        .iter()
        .flat_map(|c| c.coeffs.iter().chain(std::iter::once(&c.rhs)))
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);

    for i in 0..m {
        let row = &prob.constraints[i];
        let coeff_max = row
            .coeffs
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        if coeff_max.max(row.rhs.abs()) <= 1e-13 * global_scale {
            warnings.push(format!("dropped negligible constraint row {i}"));
            continue;
        }
        let scale = coeff_max.max(row.rhs.abs());
        let ai: Vec<f64> = row.coeffs.iter().map(|v| v / scale).collect();
        let bi = row.rhs / scale;

        // residual of ai against the kept-row span
        let mut res = ai.clone();
        let mut proj = vec![0.0; kept.len()];
        for (j, qj) in q.iter().enumerate() {
            let c: f64 = res.iter().zip(qj).map(|(x, y)| x * y).sum();
            for (r, qv) in res.iter_mut().zip(qj) {
                *r -= c * qv;
            }
            for (p, e) in proj.iter_mut().zip(&q_in_kept[j]) {
                *p += c * e;
            }
        }
        // second orthogonalization pass for numerical safety
        for (j, qj) in q.iter().enumerate() {
            let c: f64 = res.iter().zip(qj).map(|(x, y)| x * y).sum();
            for (r, qv) in res.iter_mut().zip(qj) {
                *r -= c * qv;
            }
            for (p, e) in proj.iter_mut().zip(&q_in_kept[j]) {
                *p += c * e;
            }
        }
        let res_norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ai_norm = ai.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);

        if res_norm > RANK_TOL * ai_norm.max(1.0) {
            // independent: keep
            for r in res.iter_mut() {
                *r /= res_norm;
            }
            // expansion of the new q in kept rows: (ai - sum proj_k a_k)/res_norm
            let mut expansion = proj.iter().map(|p| -p / res_norm).collect::<Vec<f64>>();
            expansion.push(1.0 / res_norm);
            kept.push(i);
            scales.push(scale);
            a.push(ai);
            b.push(bi);
            q.push(res);
            q_in_kept.push(expansion);
        } else {
            // dependent: ai ~ sum_k proj_k * a_kept_k; check rhs consistency
            let predicted: f64 = proj.iter().zip(&b).map(|(p, bk)| p * bk).sum();
            if (bi - predicted).abs() > INCONSISTENT_TOL * (1.0 + bi.abs()) {
                // Farkas ray over original rows: e_i - sum proj_k e_kept_k,
                // descaled, sign-normalized so y . b > 0
                let mut ray = vec![0.0; m];
                ray[i] = 1.0 / scale;
                for (p, (&ki, sk)) in proj.iter().zip(kept.iter().zip(&scales)) {
                    ray[ki] = -p / sk;
                }
                let bdot: f64 = ray
                    .iter()
                    .zip(&prob.constraints)
                    .map(|(y, c)| y * c.rhs)
                    .sum();
                if bdot < 0.0 {
                    for y in ray.iter_mut() {
                        *y = -*y;
                    }
                }
                return PresolveOutcome::Inconsistent { ray };
            }
            warnings.push(format!("dropped dependent constraint row {i}"));
        }
    }
    let _ = w;
    PresolveOutcome::Reduced(Presolved {
        kept,
        scales,
        a,
        b,
        warnings,
    })
}

impl Presolved {
    /// Maps a dual vector on kept scaled rows back to original rows
    /// (zero on dropped rows, descaled).
    pub fn expand_dual(&self, y: &[f64], m_original: usize) -> Vec<f64> {
        let mut out = vec![0.0; m_original];
        for ((&ki, &sk), &yi) in self.kept.iter().zip(&self.scales).zip(y) {
            out[ki] = yi / sk;
        }
        out
    }

}
