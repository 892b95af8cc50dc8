//! Gaussian summaries of embedding sets and the Fréchet distance.

use nalgebra::{DMatrix, DVector};

use super::MetricError;

/// Added to both covariance diagonals when the matrix square root is
/// numerically unstable.
const COV_EPSILON: f64 = 1e-6;

/// Eigenvalues this far below zero (relative to the largest) mean the
/// product matrix was not numerically PSD and regularization kicks in.
const PSD_TOLERANCE: f64 = 1e-8;

/// A multivariate normal fitted to an embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    /// Sample covariance (n-1 denominator), symmetric PSD up to the
    /// regularization epsilon.
    pub cov: DMatrix<f64>,
    pub n: usize,
}

impl GaussianSummary {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// True when too few samples back the covariance (n <= dim); the
    /// Fréchet distance is still defined but the fit is rank-deficient.
    pub fn degenerate(&self) -> bool {
        self.n <= self.dim()
    }
}

/// Mergeable sufficient statistics (count, sum, outer-product sum), so
/// embedding extraction can proceed in parallel shards.
#[derive(Debug, Clone)]
pub struct EmbeddingAccumulator {
    n: usize,
    sum: DVector<f64>,
    outer: DMatrix<f64>,
}

impl EmbeddingAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            sum: DVector::zeros(dim),
            outer: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn push(&mut self, embedding: &[f32]) {
        assert_eq!(embedding.len(), self.dim(), "embedding dimension changed");
        let v = DVector::from_iterator(embedding.len(), embedding.iter().map(|&x| x as f64));
        self.sum += &v;
        self.outer += &v * v.transpose();
        self.n += 1;
    }

    /// Associative merge of two shards.
    pub fn merge(&mut self, other: &EmbeddingAccumulator) {
        assert_eq!(self.dim(), other.dim(), "accumulator dimensions differ");
        self.n += other.n;
        self.sum += &other.sum;
        self.outer += &other.outer;
    }

    pub fn fit(&self) -> Result<GaussianSummary, MetricError> {
        if self.n == 0 {
            return Err(MetricError::EmptySet);
        }
        let n = self.n as f64;
        let mean = &self.sum / n;
        let cov = if self.n == 1 {
            DMatrix::zeros(self.dim(), self.dim())
        } else {
            let mut cov = (&self.outer - (&self.sum * self.sum.transpose()) / n) / (n - 1.0);
            // Exact symmetry despite accumulation roundoff.
            cov = (&cov + cov.transpose()) / 2.0;
            cov
        };
        Ok(GaussianSummary {
            mean,
            cov,
            n: self.n,
        })
    }
}

/// Fits a Gaussian to an embedding set (sample covariance, n-1).
pub fn fit_gaussian(embeddings: &[Vec<f32>]) -> Result<GaussianSummary, MetricError> {
    let Some(first) = embeddings.first() else {
        return Err(MetricError::EmptySet);
    };
    let mut acc = EmbeddingAccumulator::new(first.len());
    for e in embeddings {
        acc.push(e);
    }
    acc.fit()
}

/// Fréchet distance between two Gaussians:
/// `||mu1 - mu2||^2 + Tr(C1 + C2 - 2 (C1 C2)^(1/2))`.
///
/// The trace term is computed through symmetric eigendecompositions:
/// `Tr((C1 C2)^(1/2)) = Tr((S C2 S)^(1/2))` with `S = C1^(1/2)`. When the
/// inner matrix is not numerically PSD, both covariances are regularized
/// with `COV_EPSILON` on the diagonal and the computation retries once.
pub fn frechet_distance(g1: &GaussianSummary, g2: &GaussianSummary) -> Result<f64, MetricError> {
    if g1.dim() != g2.dim() {
        return Err(MetricError::DimensionMismatch {
            a: g1.dim(),
            b: g2.dim(),
        });
    }
    let mean_term = (&g1.mean - &g2.mean).norm_squared();
    let trace_term = match trace_sqrt_product(&g1.cov, &g2.cov) {
        Some(t) => t,
        None => {
            let eye = DMatrix::identity(g1.dim(), g1.dim());
            let c1 = &g1.cov + &eye * COV_EPSILON;
            let c2 = &g2.cov + &eye * COV_EPSILON;
            trace_sqrt_product(&c1, &c2).ok_or(MetricError::SqrtFailure)?
        }
    };
    let value = mean_term + g1.cov.trace() + g2.cov.trace() - 2.0 * trace_term;
    // Negative values within numerical tolerance of zero collapse to zero.
    if value < 0.0 && value > -1e-6 {
        Ok(0.0)
    } else {
        Ok(value)
    }
}

/// `Tr((C1 C2)^(1/2))` via the symmetric route; None when the spectrum is
/// too far from PSD.
fn trace_sqrt_product(c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> Option<f64> {
    let root = sqrt_psd(c1)?;
    let mut inner = &root * c2 * &root;
    inner = (&inner + inner.transpose()) / 2.0;
    let eigen = inner.symmetric_eigen();
    let max_eig = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = -PSD_TOLERANCE * max_eig.max(1.0);
    let mut trace = 0.0;
    for &lambda in eigen.eigenvalues.iter() {
        if lambda < floor {
            return None;
        }
        trace += lambda.max(0.0).sqrt();
    }
    Some(trace)
}

/// Symmetric PSD square root; None when significantly indefinite.
fn sqrt_psd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) / 2.0;
    let eigen = sym.symmetric_eigen();
    let max_eig = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = -PSD_TOLERANCE * max_eig.max(1.0);
    if eigen.eigenvalues.iter().any(|&l| l < floor) {
        return None;
    }
    let mut scaled = eigen.eigenvectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= eigen.eigenvalues[j].max(0.0).sqrt();
    }
    Some(&scaled * eigen.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian(mean: &[f64], cov_rows: &[&[f64]]) -> GaussianSummary {
        let dim = mean.len();
        GaussianSummary {
            mean: DVector::from_row_slice(mean),
            cov: DMatrix::from_fn(dim, dim, |i, j| cov_rows[i][j]),
            n: 1000,
        }
    }

    #[test]
    fn identical_gaussians_score_zero() {
        let g = gaussian(
            &[0.5, -1.0, 2.0],
            &[&[2.0, 0.3, 0.1], &[0.3, 1.5, -0.2], &[0.1, -0.2, 0.8]],
        );
        let d = frechet_distance(&g, &g).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
    }

    #[test]
    fn one_dimensional_analytic_case() {
        // Means 0 and 3, unit variances: (3)^2 + (1 - 1)^2 = 9.
        let g1 = gaussian(&[0.0], &[&[1.0]]);
        let g2 = gaussian(&[3.0], &[&[1.0]]);
        let d = frechet_distance(&g1, &g2).unwrap();
        assert!((d - 9.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn symmetry() {
        let g1 = gaussian(&[1.0, 2.0], &[&[1.0, 0.2], &[0.2, 2.0]]);
        let g2 = gaussian(&[-1.0, 0.5], &[&[0.5, -0.1], &[-0.1, 1.5]]);
        let ab = frechet_distance(&g1, &g2).unwrap();
        let ba = frechet_distance(&g2, &g1).unwrap();
        assert!((ab - ba).abs() < 1e-8);
    }

    /// Independent oracle for the trace term: eigenvalues of the
    /// (nonsymmetric) product C1 C2 via the general eigensolver, summing
    /// square roots of their real parts.
    fn trace_oracle(c1: &DMatrix<f64>, c2: &DMatrix<f64>) -> f64 {
        let product = c1 * c2;
        product
            .complex_eigenvalues()
            .iter()
            .map(|l| l.re.max(0.0).sqrt())
            .sum()
    }

    #[test]
    fn random_5d_matches_eigendecomposition_oracle() {
        let mut rng = crate::rng::stream(0, "frechet.test");
        for _ in 0..10 {
            let dim = 5;
            // Random PSD covariances via A A^T / dim.
            let make_cov = |rng: &mut rand_chacha::ChaCha8Rng| {
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                &a * a.transpose() / dim as f64
            };
            let g1 = GaussianSummary {
                mean: DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)),
                cov: make_cov(&mut rng),
                n: 100,
            };
            let g2 = GaussianSummary {
                mean: DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)),
                cov: make_cov(&mut rng),
                n: 100,
            };
            let value = frechet_distance(&g1, &g2).unwrap();
            let expected = (&g1.mean - &g2.mean).norm_squared() + g1.cov.trace()
                + g2.cov.trace()
                - 2.0 * trace_oracle(&g1.cov, &g2.cov);
            assert!(
                (value - expected).abs() < 1e-6,
                "{value} vs oracle {expected}"
            );
        }
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let mut rng = crate::rng::stream(1, "frechet.acc");
        let embeddings: Vec<Vec<f32>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0f32..1.0)).collect())
            .collect();
        let whole = fit_gaussian(&embeddings).unwrap();

        let mut left = EmbeddingAccumulator::new(4);
        let mut right = EmbeddingAccumulator::new(4);
        for (i, e) in embeddings.iter().enumerate() {
            if i % 3 == 0 {
                left.push(e);
            } else {
                right.push(e);
            }
        }
        left.merge(&right);
        let merged = left.fit().unwrap();
        assert!((merged.mean - &whole.mean).norm() < 1e-12);
        assert!((merged.cov - &whole.cov).norm() < 1e-12);
    }

    #[test]
    fn sampled_gaussians_approach_analytic_distance() {
        // Draw from two known diagonal Gaussians and check the fitted FID
        // against the closed form within 5%.
        let dim = 4;
        let mean1 = [0.0f64, 1.0, -1.0, 0.5];
        let mean2 = [0.5f64, 0.0, 0.0, 1.5];
        let std1 = [1.0f64, 0.5, 2.0, 1.0];
        let std2 = [0.8f64, 1.2, 1.0, 0.6];
        let mut analytic = 0.0;
        for i in 0..dim {
            analytic += (mean1[i] - mean2[i]).powi(2) + (std1[i] - std2[i]).powi(2);
        }

        let mut rng = crate::rng::stream(2, "frechet.sample");
        let mut draw = |means: &[f64; 4], stds: &[f64; 4]| -> Vec<Vec<f32>> {
            (0..40_000)
                .map(|_| {
                    (0..dim)
                        .map(|i| {
                            // Box-Muller.
                            let u1: f64 = rng.random_range(1e-12..1.0);
                            let u2: f64 = rng.random_range(0.0..1.0);
                            let z = (-2.0 * u1.ln()).sqrt()
                                * (std::f64::consts::TAU * u2).cos();
                            (means[i] + stds[i] * z) as f32
                        })
                        .collect()
                })
                .collect()
        };
        let g1 = fit_gaussian(&draw(&mean1, &std1)).unwrap();
        let g2 = fit_gaussian(&draw(&mean2, &std2)).unwrap();
        let value = frechet_distance(&g1, &g2).unwrap();
        assert!(
            (value - analytic).abs() / analytic < 0.05,
            "{value} vs {analytic}"
        );
    }

    #[test]
    fn single_sample_is_degenerate_but_defined() {
        let g1 = fit_gaussian(&[vec![1.0, 2.0]]).unwrap();
        assert!(g1.degenerate());
        assert_eq!(g1.cov, DMatrix::zeros(2, 2));
        let g2 = fit_gaussian(&[vec![2.0, 2.0]]).unwrap();
        let d = frechet_distance(&g1, &g2).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g1 = fit_gaussian(&[vec![1.0], vec![2.0]]).unwrap();
        let g2 = fit_gaussian(&[vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            frechet_distance(&g1, &g2),
            Err(MetricError::DimensionMismatch { a: 1, b: 2 })
        ));
    }
}
