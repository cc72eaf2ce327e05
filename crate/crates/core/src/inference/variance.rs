use nalgebra::DMatrix;

use crate::draws::PosteriorDraws;
use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

/// Ratio of the Gibbs-estimated marginal precision-adjusted variance to the
/// variational variance: `sigma_k^2 / vb_s2[k]` with
/// `sigma_k^2 = 1 / [Sigma^{-1}]_kk` and `Sigma` the sample covariance of the
/// draws.
pub fn variance_ratio(gibbs: &PosteriorDraws, vb_s2: &[f64]) -> Result<Vec<f64>> {
    let d = gibbs.dim();
    if vb_s2.len() != d {
        return Err(Error::invalid("variational variances do not match the draw dimension"));
    }
    if vb_s2.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("variational variances must be positive"));
    }
    let n = gibbs.n_draws();
    if n < 10 * d {
        return Err(Error::invalid(format!("need at least {} draws, got {n}", 10 * d)));
    }
    let means = gibbs.column_means();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in gibbs.rows() {
        for a in 0..d {
            let da = row[a] - means[a];
            for b in a..d {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = cov.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::SingularMatrix { condition });
    }
    let precision = cov.try_inverse().ok_or(Error::SingularMatrix { condition })?;
    Ok((0..d).map(|k| (1.0 / precision[(k, k)]) / vb_s2[k]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draws::DrawSource;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn draws(rows: Vec<Vec<f64>>) -> PosteriorDraws {
        let d = rows[0].len();
        let rows = rows.into_iter().enumerate().collect();
        PosteriorDraws::new(d, DrawSource::Gibbs, 0, rows, Vec::new()).unwrap()
    }

    #[test]
    fn matched_diagonal_normal_gives_unit_ratios() {
        let vars: [f64; 3] = [0.5, 2.0, 0.01];
        let mut r = rng::seeded(1);
        let rows = (0..10_000)
            .map(|_| {
                vars.iter()
                    .map(|v| {
                        let z: f64 = StandardNormal.sample(&mut r);
                        v.sqrt() * z
                    })
                    .collect()
            })
            .collect();
        let ratio = variance_ratio(&draws(rows), &vars).unwrap();
        for q in ratio {
            assert!((q - 1.0).abs() < 0.05, "{q}");
        }
    }

    #[test]
    fn correlated_pair_closed_form() {
        // Exact sample covariance [[1, .9], [.9, 1]] from four symmetric points.
        let a = (0.95f64).sqrt();
        let b = (0.05f64).sqrt();
        let rows = [vec![a, a], vec![-a, -a], vec![b, -b], vec![-b, b]];
        let mut rep = Vec::new();
        for _ in 0..5 {
            rep.extend(rows.iter().cloned());
        }
        // Scale so the unbiased covariance is exactly the target.
        let n = rep.len() as f64;
        let f = ((n - 1.0) / (n / 2.0)).sqrt();
        let rep: Vec<Vec<f64>> = rep.into_iter().map(|r| r.iter().map(|v| v * f).collect()).collect();
        let ratio = variance_ratio(&draws(rep), &[1.0, 1.0]).unwrap();
        for q in ratio {
            assert!((q - 0.19).abs() < 1e-12, "{q}");
        }
    }

    #[test]
    fn singular_covariance_is_reported() {
        let rows = (0..40).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(variance_ratio(&draws(rows), &[1.0, 1.0]), Err(Error::SingularMatrix { .. })));
    }
}
