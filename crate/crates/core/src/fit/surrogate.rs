//! Gaussian-process regressor on the unit hypercube (Matérn 5/2 kernel).

use nalgebra::{DMatrix, DVector};

const NUGGETS: [f64; 3] = [1e-6, 1e-4, 1e-2];
const LENGTH_FACTORS: [f64; 6] = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6];

fn matern52(r: f64, length: f64) -> f64 {
    let s = 5f64.sqrt() * r / length;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) struct GaussianProcess {
    points: Vec<Vec<f64>>,
    lower: DMatrix<f64>,
    weights: DVector<f64>,
    length: f64,
    y_mean: f64,
    y_scale: f64,
}

struct Factorized {
    lower: DMatrix<f64>,
    weights: DVector<f64>,
    log_likelihood: f64,
}

fn factorize(distances: &DMatrix<f64>, y: &DVector<f64>, length: f64) -> Option<Factorized> {
    let n = y.len();
    for nugget in NUGGETS {
        let k = DMatrix::from_fn(n, n, |i, j| {
            matern52(distances[(i, j)], length) + if i == j { nugget } else { 0.0 }
        });
        if let Some(chol) = k.cholesky() {
            let weights = chol.solve(y);
            let lower = chol.unpack();
            let log_det: f64 = lower.diagonal().iter().map(|d| d.ln()).sum();
            let log_likelihood = -0.5 * y.dot(&weights) - log_det;
            return Some(Factorized { lower, weights, log_likelihood });
        }
    }
    None
}

impl GaussianProcess {
    /// Fits standardized targets, choosing the length scale by marginal
    /// likelihood from multiples of `extent * sqrt(dim)`. Returns `None` when
    /// the targets are constant.
    pub fn fit(points: Vec<Vec<f64>>, targets: &[f64], extent: f64) -> Option<Self> {
        let n = targets.len();
        let dim = points.first()?.len();
        let y_mean = targets.iter().sum::<f64>() / n as f64;
        let var = targets.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = var.sqrt();
        if !(y_scale > 1e-12 * (1.0 + y_mean.abs())) {
            return None;
        }
        let y = DVector::from_iterator(n, targets.iter().map(|t| (t - y_mean) / y_scale));
        let distances = DMatrix::from_fn(n, n, |i, j| distance(&points[i], &points[j]));
        let mut best: Option<(f64, Factorized)> = None;
        for factor in LENGTH_FACTORS {
            let length = factor * extent * (dim as f64).sqrt();
            if let Some(f) = factorize(&distances, &y, length) {
                if best.as_ref().is_none_or(|(_, b)| f.log_likelihood > b.log_likelihood) {
                    best = Some((length, f));
                }
            }
        }
        let (length, f) = best?;
        Some(GaussianProcess { points, lower: f.lower, weights: f.weights, length, y_mean, y_scale })
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|p| matern52(distance(p, x), self.length)),
        );
        let mean = k.dot(&self.weights);
        let var = match self.lower.solve_lower_triangular(&k) {
            Some(v) => (1.0 - v.norm_squared()).max(0.0),
            None => 1.0,
        };
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

/// Linear model of the residual vector around `center`, in coordinates
/// `z = (x - center) / radius`.
pub(crate) struct ResidualModel {
    center: Vec<f64>,
    radius: f64,
    r0: DVector<f64>,
    /// Residuals x scaled coordinates.
    jacobian: DMatrix<f64>,
}

/// Smallest singular value of the scaled displacement matrix accepted for a
/// model fit.
const MIN_SPREAD: f64 = 0.05;

impl ResidualModel {
    /// Least-squares fit to `(point, residuals)` neighbours. When the
    /// neighbours do not span every direction, returns the unit direction
    /// they cover worst instead.
    pub fn fit(
        center: &[f64],
        r0: &[f64],
        neighbours: &[(&[f64], &[f64])],
        radius: f64,
    ) -> std::result::Result<Self, Vec<f64>> {
        let dim = center.len();
        let k = neighbours.len();
        let x = DMatrix::from_fn(k, dim, |i, j| (neighbours[i].0[j] - center[j]) / radius);
        let gram = x.transpose() * &x;
        let eigen = gram.clone().symmetric_eigen();
        let weakest = eigen.eigenvalues.imin();
        if !(eigen.eigenvalues[weakest].max(0.0).sqrt() >= MIN_SPREAD) {
            return Err(eigen.eigenvectors.column(weakest).iter().copied().collect());
        }
        let m = r0.len();
        let dr = DMatrix::from_fn(k, m, |i, j| neighbours[i].1[j] - r0[j]);
        let chol = gram.cholesky().ok_or_else(|| {
            let mut e = vec![0.0; dim];
            e[0] = 1.0;
            e
        })?;
        let jt = chol.solve(&(x.transpose() * dr));
        Ok(ResidualModel {
            center: center.to_vec(),
            radius,
            r0: DVector::from_column_slice(r0),
            jacobian: jt.transpose(),
        })
    }

    fn scaled(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius))
    }

    pub fn residuals_at(&self, x: &[f64]) -> Vec<f64> {
        (&self.r0 + &self.jacobian * self.scaled(x)).iter().copied().collect()
    }

    /// Minimizer of the weighted squared model residuals within the box
    /// `|z|_inf <= 1`, damped Levenberg-Marquardt style until it fits.
    pub fn step(&self, weights: &[f64]) -> Option<Vec<f64>> {
        let dim = self.center.len();
        let w = DVector::from_column_slice(weights);
        let jw = DMatrix::from_fn(self.jacobian.nrows(), dim, |i, j| self.jacobian[(i, j)] * w[i]);
        let a = self.jacobian.transpose() * &jw;
        let g = jw.transpose() * &self.r0;
        let scale = (a.trace() / dim as f64).max(1e-300);
        let solve = |lambda: f64| -> Option<DVector<f64>> {
            let mut m = a.clone();
            for i in 0..dim {
                m[(i, i)] += lambda * scale;
            }
            m.cholesky().map(|c| -c.solve(&g))
        };
        let fits = |z: &DVector<f64>| z.amax() <= 1.0;
        let z = match solve(1e-12) {
            Some(z) if fits(&z) => z,
            _ => {
                let mut lo = 1e-12f64;
                let mut hi = 1.0f64;
                while !solve(hi).is_some_and(|z| fits(&z)) {
                    hi *= 10.0;
                    if hi > 1e30 {
                        return None;
                    }
                }
                for _ in 0..60 {
                    let mid = (lo * hi).sqrt();
                    if solve(mid).is_some_and(|z| fits(&z)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                solve(hi)?
            }
        };
        Some(
            z.iter()
                .zip(&self.center)
                .map(|(zi, c)| (c + zi.clamp(-1.0, 1.0) * self.radius).clamp(0.0, 1.0))
                .collect(),
        )
    }
}
