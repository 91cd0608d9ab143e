//! Small dense Levenberg–Marquardt solver with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative parameter step falls below this.
    pub xtol: f64,
    /// Stop when the relative cost reduction falls below this.
    pub ftol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 300, xtol: 1e-13, ftol: 1e-15, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// (JᵀJ)⁻¹ at the solution; multiply by the residual variance for
    /// unweighted problems.
    pub covariance: Option<DMatrix<f64>>,
    /// Σ r².
    pub chi2: f64,
    pub n_residuals: usize,
    pub iterations: usize,
}

impl LmResult {
    pub fn residual_norm(&self) -> f64 {
        self.chi2.sqrt()
    }

    /// Degrees of freedom, at least one.
    pub fn dof(&self) -> usize {
        self.n_residuals.saturating_sub(self.params.len()).max(1)
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof() as f64
    }

    /// Std-dev of parameter `i` from the covariance, optionally scaled by the
    /// reduced χ².
    pub fn param_std(&self, i: usize, scale_by_chi2: bool) -> Option<f64> {
        let cov = self.covariance.as_ref()?;
        let var = cov[(i, i)] * if scale_by_chi2 { self.reduced_chi2() } else { 1.0 };
        (var >= 0.0).then(|| var.sqrt())
    }
}

fn eval<F: Fn(&[f64], &mut [f64])>(f: &F, p: &[f64], n: usize) -> Result<DVector<f64>> {
    let mut r = vec![0.0; n];
    f(p, &mut r);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residual".into()));
    }
    Ok(DVector::from_vec(r))
}

fn jacobian<F: Fn(&[f64], &mut [f64])>(f: &F, p: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(n, p.len());
    let mut work = p.to_vec();
    for j in 0..p.len() {
        let h = 1e-6 * p[j].abs().max(1e-8);
        work[j] = p[j] + h;
        let up = eval(f, &work, n)?;
        work[j] = p[j] - h;
        let down = eval(f, &work, n)?;
        work[j] = p[j];
        let step = 2.0 * h;
        jac.set_column(j, &((up - down) / step));
    }
    Ok(jac)
}

/// Minimizes Σ rᵢ(p)² starting from `p0`. `residuals` writes `n_residuals`
/// values for a parameter vector.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], n_residuals: usize, opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let m = p0.len();
    if n_residuals < m {
        return Err(Error::Fit(format!("{n_residuals} residuals cannot determine {m} parameters")));
    }
    let mut p = p0.to_vec();
    let mut r = eval(&residuals, &p, n_residuals)?;
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &p, n_residuals)?;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut improved = false;
        let mut done = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_r = match eval(&residuals, &trial, n_residuals) {
                Ok(v) => v,
                Err(_) => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial_cost = trial_r.norm_squared();
            if trial_cost <= cost {
                let rel_step = step
                    .iter()
                    .zip(&p)
                    .map(|(s, x)| s.abs() / x.abs().max(1e-300))
                    .fold(0.0, f64::max);
                let rel_red = if cost > 0.0 { (cost - trial_cost) / cost } else { 0.0 };
                p = trial;
                r = trial_r;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                done = rel_step < opts.xtol || rel_red < opts.ftol || cost == 0.0;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
        }
        if !improved || done {
            break;
        }
    }

    let jac = jacobian(&residuals, &p, n_residuals)?;
    let covariance = (jac.transpose() * &jac).try_inverse();
    Ok(LmResult { params: p, covariance, chi2: cost, n_residuals, iterations })
}
