//! Numerical contraction certificates along trajectories.
//!
//! A vector field is certified contracting on a set of samples when the
//! largest eigenvalue of the symmetric part of its generalized Jacobian
//! F = (dTheta/dt + Theta J) Theta^-1 stays uniformly below -margin.
//! Sampling density is a documented limitation: the certificate spot
//! checks the uniform negativity the theory requires.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default contraction margin: strictly negative with headroom.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// A (possibly time-varying) contraction metric Theta.
#[derive(Debug, Clone)]
pub struct Metric {
    pub theta: DMatrix<f64>,
    /// Time derivative of Theta; zero for constant metrics.
    pub theta_dot: DMatrix<f64>,
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        Metric {
            theta: DMatrix::identity(n, n),
            theta_dot: DMatrix::zeros(n, n),
        }
    }

    pub fn constant(theta: DMatrix<f64>) -> Self {
        let n = theta.nrows();
        Metric {
            theta,
            theta_dot: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    /// Numerical invertibility check via the singular values of Theta.
    pub fn validate(&self) -> Result<()> {
        let gram = self.theta.transpose() * &self.theta;
        let eig = symmetric_eigenvalues(&gram);
        let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 || !min.is_finite() {
            return Err(Error::SingularMetric { cond: f64::INFINITY });
        }
        let cond = (max / min).sqrt();
        if cond > 1e12 {
            return Err(Error::SingularMetric { cond });
        }
        Ok(())
    }
}

/// Per-sample largest eigenvalue of the symmetric part of the generalized
/// Jacobian, plus the overall verdict.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// (t, lambda_max) pairs.
    pub samples: Vec<(f64, f64)>,
    pub margin: f64,
    /// Contracting iff sup lambda_max < -margin.
    pub verdict: bool,
    /// |sup lambda_max| when contracting, else 0.
    pub rate: f64,
}

impl ContractionReport {
    fn from_samples(samples: Vec<(f64, f64)>, margin: f64) -> Self {
        let sup = samples
            .iter()
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let verdict = sup < -margin;
        ContractionReport {
            samples,
            margin,
            verdict,
            rate: if verdict { sup.abs() } else { 0.0 },
        }
    }

    pub fn sup_lambda_max(&self) -> f64 {
        self.samples
            .iter()
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Hierarchy check result: both diagonal blocks plus the interconnection
/// bound sup ||F21||.
#[derive(Debug, Clone)]
pub struct HierarchyReport {
    pub top: ContractionReport,
    pub bottom: ContractionReport,
    /// Supremum of the spectral norm of the interconnection block.
    pub interconnection_bound: f64,
}

impl HierarchyReport {
    pub fn verdict(&self) -> bool {
        self.top.verdict && self.bottom.verdict && self.interconnection_bound.is_finite()
    }
}

/// Central-difference Jacobian of `field` at (x, t), step 1e-6*(1+|x_i|).
pub fn numeric_jacobian<F>(field: F, x: &DVector<f64>, t: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let f0 = field(t, x);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vector field"));
    }
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let fp = field(t, &xp);
        let fm = field(t, &xm);
        for i in 0..m {
            let v = (fp[i] - fm[i]) / (2.0 * h);
            if !v.is_finite() {
                return Err(Error::NonFinite("vector field"));
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// Generalized Jacobian F = (dTheta/dt + Theta J) Theta^-1.
pub fn generalized_jacobian(metric: &Metric, jac: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    metric.validate()?;
    let theta_inv = metric
        .theta
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMetric { cond: f64::INFINITY })?;
    Ok((&metric.theta_dot + &metric.theta * jac) * theta_inv)
}

/// Largest eigenvalue of the symmetric part of F.
pub fn lambda_max_symmetric(f: &DMatrix<f64>) -> f64 {
    let sym = (f + f.transpose()) * 0.5;
    symmetric_eigenvalues(&sym)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluate the contraction certificate for `field` along trajectory
/// samples `(t, x)`.
pub fn check_trajectory<F>(
    field: F,
    metric: &Metric,
    samples: &[(f64, DVector<f64>)],
    margin: f64,
) -> Result<ContractionReport>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let mut out = Vec::with_capacity(samples.len());
    for (t, x) in samples {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trajectory sample"));
        }
        let jac = numeric_jacobian(&field, x, *t)?;
        let f = generalized_jacobian(metric, &jac)?;
        out.push((*t, lambda_max_symmetric(&f)));
    }
    Ok(ContractionReport::from_samples(out, margin))
}

/// Construct a constant metric Theta = P^{1/2} from the Lyapunov solution
/// A^T P + P A = -I. Errors when A is not Hurwitz.
pub fn lyapunov_metric(a: &DMatrix<f64>) -> Result<Metric> {
    let p = solve_lyapunov(a)?;
    // P must be symmetric positive definite exactly when A is Hurwitz
    let (vals, vecs) = symmetric_eigen(&p);
    if vals.iter().any(|l| *l <= 0.0 || !l.is_finite()) {
        return Err(Error::NonHurwitz);
    }
    let n = a.nrows();
    let mut sqrt_d = DMatrix::zeros(n, n);
    for i in 0..n {
        sqrt_d[(i, i)] = vals[i].sqrt();
    }
    let theta = &vecs * sqrt_d * vecs.transpose();
    Ok(Metric::constant(theta))
}

/// Solve A^T P + P A = -I via Kronecker vectorization.
fn solve_lyapunov(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParams("Lyapunov matrix must be square".into()));
    }
    // (I (x) A^T + A^T (x) I) vec(P) = -vec(I)
    let at = a.transpose();
    let dim = n * n;
    let mut big = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // I (x) A^T acting on columns of P
                big[(j * n + i, j * n + k)] += at[(i, k)];
                // A^T (x) I from P A
                big[(j * n + i, k * n + i)] += a[(k, j)];
            }
        }
    }
    let mut rhs = DVector::zeros(dim);
    for i in 0..n {
        rhs[i * n + i] = -1.0;
    }
    let lu = big.lu();
    let sol = lu.solve(&rhs).ok_or(Error::NonHurwitz)?;
    let mut p = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = sol[j * n + i];
        }
    }
    // symmetrize against roundoff
    let p = (&p + p.transpose()) * 0.5;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonHurwitz);
    }
    Ok(p)
}

/// Check a two-level hierarchy: the top field drives the bottom field as
/// an exogenous input. Verifies both diagonal blocks and bounds the
/// interconnection block F21 = d f_bottom / d x_top.
pub fn check_hierarchy<FT, FB>(
    f_top: FT,
    f_bottom: FB,
    metric_top: &Metric,
    metric_bottom: &Metric,
    samples: &[(f64, DVector<f64>, DVector<f64>)],
    margin: f64,
) -> Result<HierarchyReport>
where
    FT: Fn(f64, &DVector<f64>) -> DVector<f64>,
    FB: Fn(f64, &DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let mut top_samples = Vec::with_capacity(samples.len());
    let mut bot_samples = Vec::with_capacity(samples.len());
    let mut bound: f64 = 0.0;
    for (t, x_top, x_bot) in samples {
        let j_top = numeric_jacobian(&f_top, x_top, *t)?;
        let f = generalized_jacobian(metric_top, &j_top)?;
        top_samples.push((*t, lambda_max_symmetric(&f)));

        let j_bot = numeric_jacobian(|tt, xb| f_bottom(tt, x_top, xb), x_bot, *t)?;
        let f = generalized_jacobian(metric_bottom, &j_bot)?;
        bot_samples.push((*t, lambda_max_symmetric(&f)));

        let j21 = numeric_jacobian(|tt, xt| f_bottom(tt, xt, x_bot), x_top, *t)?;
        bound = bound.max(spectral_norm(&j21));
    }
    Ok(HierarchyReport {
        top: ContractionReport::from_samples(top_samples, margin),
        bottom: ContractionReport::from_samples(bot_samples, margin),
        interconnection_bound: bound,
    })
}

/// Spectral norm via the symmetric eigenvalues of M^T M.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    symmetric_eigenvalues(&gram)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
        .sqrt()
}

/// Least-squares slope of (x, y) points; used to fit exponential rates
/// from log-magnitude traces.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// ---------------------------------------------------------------------
// Symmetric eigensolver: cyclic Jacobi rotations. Matrices here are tiny
// (<= 6x6 in practice), so the quadratic sweep cost is irrelevant.
// ---------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    symmetric_eigen(m).0
}

/// Eigen decomposition (values, orthonormal column vectors) of a
/// symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)]).collect();
    (vals, v)
}
