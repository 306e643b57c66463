//! Canonical correlation analysis by whitening and SVD.

use crate::error::{Error, Result};
use crate::linalg::{svd, sym_power, Matrix};
use crate::signal::Recording;

/// Ridge added to each covariance diagonal entry, relative to that entry.
pub const RIDGE_REL: f64 = 1e-8;
/// Absolute ridge floor relative to the average variance, for flat channels.
const RIDGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CcaResult {
    /// p x d projection weights for the first dataset.
    pub wx: Matrix,
    /// q x d projection weights for the second dataset.
    pub wy: Matrix,
    /// Canonical correlations, nonincreasing, in [0, 1].
    pub correlations: Vec<f64>,
    /// Canonical variates of the first dataset, one series per pair.
    pub sources: Vec<Vec<f64>>,
    pub x_mean: Vec<f64>,
    /// Maps sources back to the (centered) first dataset when `d == p`.
    back_projection: Option<Matrix>,
}

impl CcaResult {
    /// Reconstructs the first dataset from (possibly edited) sources.
    pub fn back_project(&self, sources: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let b = self.back_projection.as_ref().ok_or_else(|| {
            Error::ShapeMismatch("back-projection needs at least as many y channels as x channels".into())
        })?;
        if sources.len() != b.cols() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} source series, got {}",
                b.cols(),
                sources.len()
            )));
        }
        let n = sources.first().map_or(0, Vec::len);
        Ok((0..b.rows())
            .map(|i| {
                let mut out = vec![self.x_mean[i]; n];
                for (k, s) in sources.iter().enumerate() {
                    let w = b[(i, k)];
                    if w == 0.0 {
                        continue;
                    }
                    for (o, v) in out.iter_mut().zip(s) {
                        *o += w * v;
                    }
                }
                out
            })
            .collect())
    }
}

pub fn cca(x: &Recording, y: &Recording) -> Result<CcaResult> {
    let xs: Vec<Vec<f64>> = x.channels().iter().map(|c| c.samples().to_vec()).collect();
    let ys: Vec<Vec<f64>> = y.channels().iter().map(|c| c.samples().to_vec()).collect();
    cca_series(&xs, &ys)
}

fn center(series: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let means: Vec<f64> = series.iter().map(|s| crate::signal::mean(s)).collect();
    let centered = series
        .iter()
        .zip(&means)
        .map(|(s, m)| s.iter().map(|v| v - m).collect())
        .collect();
    (centered, means)
}

fn cross_cov(a: &[Vec<f64>], b: &[Vec<f64>], n: usize) -> Matrix {
    Matrix::from_fn(a.len(), b.len(), |i, j| {
        a[i].iter().zip(&b[j]).map(|(u, v)| u * v).sum::<f64>() / n as f64
    })
}

fn ridged_inv_sqrt(c: &mut Matrix, label: &str) -> Result<(Matrix, Matrix)> {
    let p = c.rows();
    let floor = RIDGE_FLOOR * c.trace() / p as f64;
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::NumericDegeneracy(format!("{label} covariance has zero trace")));
    }
    for i in 0..p {
        c[(i, i)] += RIDGE_REL * c[(i, i)] + floor;
    }
    let inv = sym_power(c, -0.5, 0.0)
        .ok_or_else(|| Error::NumericDegeneracy(format!("{label} covariance is singular after ridge")))?;
    let sqrt = sym_power(c, 0.5, 0.0)
        .ok_or_else(|| Error::NumericDegeneracy(format!("{label} covariance is singular after ridge")))?;
    Ok((inv, sqrt))
}

/// CCA on channel-major series (`x[i]` is channel `i`).
pub fn cca_series(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<CcaResult> {
    let (p, q) = (x.len(), y.len());
    if p == 0 || q == 0 {
        return Err(Error::invalid("CCA needs at least one channel on each side"));
    }
    let n = x[0].len();
    if x.iter().chain(y).any(|s| s.len() != n) {
        return Err(Error::ShapeMismatch("CCA inputs must share one sample count".into()));
    }
    if n <= p.max(q) {
        return Err(Error::invalid(format!(
            "CCA needs more samples ({n}) than channels ({})",
            p.max(q)
        )));
    }
    let (xc, x_mean) = center(x);
    let (yc, _) = center(y);
    let mut cxx = cross_cov(&xc, &xc, n);
    let mut cyy = cross_cov(&yc, &yc, n);
    let cxy = cross_cov(&xc, &yc, n);
    let (cxx_is, cxx_s) = ridged_inv_sqrt(&mut cxx, "x")?;
    let (cyy_is, _) = ridged_inv_sqrt(&mut cyy, "y")?;

    let m = cxx_is.matmul(&cxy).matmul(&cyy_is);
    let d = svd(&m);
    let wx = cxx_is.matmul(&d.u);
    let wy = cyy_is.matmul(&d.v);
    let correlations: Vec<f64> = d.s.iter().map(|&s| s.clamp(0.0, 1.0)).collect();
    let k = correlations.len();
    let sources = (0..k)
        .map(|c| {
            let mut s = vec![0.0; n];
            for (i, xi) in xc.iter().enumerate() {
                let w = wx[(i, c)];
                for (o, v) in s.iter_mut().zip(xi) {
                    *o += w * v;
                }
            }
            s
        })
        .collect();
    let back_projection = (k == p).then(|| cxx_s.matmul(&d.u));
    Ok(CcaResult {
        wx,
        wy,
        correlations,
        sources,
        x_mean,
        back_projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(ch: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..ch)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn identical_sets_correlate_perfectly() {
        let x = noise(2, 500, 1);
        let r = cca_series(&x, &x).unwrap();
        for c in &r.correlations {
            assert!((c - 1.0).abs() < 1e-6, "{c}");
        }
        let permuted = vec![x[1].clone(), x[0].clone()];
        let r = cca_series(&x, &permuted).unwrap();
        for c in &r.correlations {
            assert!((c - 1.0).abs() < 1e-6, "{c}");
        }
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let r = cca_series(&noise(2, 10_000, 2), &noise(2, 10_000, 3)).unwrap();
        assert!(r.correlations.iter().all(|&c| c < 0.1), "{:?}", r.correlations);
        assert!(r.correlations.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sources_have_unit_variance_and_back_project() {
        let x = noise(3, 2000, 4);
        let mut y = noise(3, 2000, 5);
        for (yi, xi) in y.iter_mut().zip(&x) {
            for (a, b) in yi.iter_mut().zip(xi) {
                *a += 0.5 * b;
            }
        }
        let r = cca_series(&x, &y).unwrap();
        for s in &r.sources {
            let v = crate::signal::power(s);
            assert!((v - 1.0).abs() < 1e-6);
        }
        let back = r.back_project(&r.sources).unwrap();
        for (a, b) in back.iter().flatten().zip(x.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_invariance() {
        let x = noise(2, 3000, 6);
        let mut y = noise(2, 3000, 7);
        for (a, b) in y[0].iter_mut().zip(&x[1]) {
            *a += b;
        }
        let base = cca_series(&x, &y).unwrap();
        let mut xs = x.clone();
        xs[0].iter_mut().for_each(|v| *v *= 250.0);
        let scaled = cca_series(&xs, &y).unwrap();
        for (a, b) in base.correlations.iter().zip(&scaled.correlations) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let zeros = vec![vec![0.0; 100]; 2];
        assert!(matches!(cca_series(&zeros, &noise(2, 100, 1)), Err(Error::NumericDegeneracy(_))));
        assert!(cca_series(&noise(3, 3, 1), &noise(3, 3, 2)).is_err());
        assert!(cca_series(&noise(2, 10, 1), &noise(2, 11, 2)).is_err());
    }
}
