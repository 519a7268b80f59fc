//! KL-regularized variational inversion of the discrete spherical
//! transforms by primal-dual proximal splitting, together with its
//! building blocks: the weighted simplex projection, the discrete KL
//! divergence and the Lambert-W proximal map of its conjugate.

use crate::error::{CoreError, Result};
use crate::harmonic::{SemicircleTransform, VerticalSliceTransform};
use crate::quadrature::GridMeta;
use crate::rng::SplitMix64;
use crate::special::lambert_w_exp;
use crate::util::comp_sum;

/// Linear operator between weighted sample spaces, with adjoint.
pub trait WeightedOp {
    fn domain_weights(&self) -> &[f64];
    fn codomain_weights(&self) -> &[f64];
    fn domain_meta(&self) -> GridMeta;
    fn codomain_meta(&self) -> GridMeta;
    fn apply(&self, f: &[f64]) -> Result<Vec<f64>>;
    fn apply_adjoint(&self, g: &[f64]) -> Result<Vec<f64>>;
}

impl WeightedOp for VerticalSliceTransform {
    fn domain_weights(&self) -> &[f64] {
        &self.sphere().weights
    }
    fn codomain_weights(&self) -> &[f64] {
        &self.cylinder.weights
    }
    fn domain_meta(&self) -> GridMeta {
        self.sphere().meta()
    }
    fn codomain_meta(&self) -> GridMeta {
        self.cylinder.meta()
    }
    fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let d = crate::quadrature::GridDensity::new(self.domain_meta(), f.to_vec())?;
        Ok(self.forward(&d)?.values)
    }
    fn apply_adjoint(&self, g: &[f64]) -> Result<Vec<f64>> {
        let d = crate::quadrature::GridDensity::new(self.codomain_meta(), g.to_vec())?;
        Ok(self.adjoint(&d)?.values)
    }
}

impl WeightedOp for SemicircleTransform {
    fn domain_weights(&self) -> &[f64] {
        &self.sphere().weights
    }
    fn codomain_weights(&self) -> &[f64] {
        &self.so3.weights
    }
    fn domain_meta(&self) -> GridMeta {
        self.sphere().meta()
    }
    fn codomain_meta(&self) -> GridMeta {
        self.so3.meta()
    }
    fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let d = crate::quadrature::GridDensity::new(self.domain_meta(), f.to_vec())?;
        Ok(self.forward(&d)?.values)
    }
    fn apply_adjoint(&self, g: &[f64]) -> Result<Vec<f64>> {
        let d = crate::quadrature::GridDensity::new(self.codomain_meta(), g.to_vec())?;
        Ok(self.adjoint(&d)?.values)
    }
}

/// Orthogonal projection onto the weighted probability simplex
/// { f >= 0, <f, 1>_w = 1 }: [f + lambda]_+ with lambda solving the
/// piecewise-linear mass equation exactly on the sorted breakpoints.
pub fn project_simplex(f: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if f.len() != w.len() {
        return Err(CoreError::shape(format!(
            "{} values vs {} weights",
            f.len(),
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x > 0.0)) {
        return Err(CoreError::domain(
            "simplex weights must be positive".to_string(),
        ));
    }
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap());
    let mut mass = 0.0;
    let mut weight = 0.0;
    let mut lambda = f64::NEG_INFINITY;
    for (rank, &idx) in order.iter().enumerate() {
        mass += w[idx] * f[idx];
        weight += w[idx];
        let cand = (1.0 - mass) / weight;
        if f[idx] + cand > 0.0 {
            lambda = cand;
        } else {
            // adding any further (smaller) component keeps it inactive
            let _ = rank;
            break;
        }
    }
    Ok(f.iter().map(|&x| (x + lambda).max(0.0)).collect())
}

/// Discrete KL divergence on the weighted space, with 0 log 0 = 0 and
/// +infinity when f puts mass where g has none (or inputs are negative).
pub fn kl_divergence(f: &[f64], g: &[f64], w: &[f64]) -> f64 {
    if f.len() != g.len() || f.len() != w.len() {
        return f64::INFINITY;
    }
    let mut terms = Vec::with_capacity(f.len());
    for ((&fi, &gi), &wi) in f.iter().zip(g).zip(w) {
        if fi < 0.0 || gi < 0.0 {
            return f64::INFINITY;
        }
        if fi == 0.0 {
            terms.push(wi * gi);
        } else if gi == 0.0 {
            return f64::INFINITY;
        } else {
            terms.push(wi * (fi * (fi / gi).ln() + gi - fi));
        }
    }
    comp_sum(terms)
}

/// Proximal map of the conjugated scaled KL divergence,
/// prox_{sigma (a KL)^*(., b)}(x) = x - a W((sigma/a) b exp(x/a)),
/// evaluated in log space so the exponential cannot overflow. The grid
/// weights cancel componentwise and do not appear.
pub fn prox_kl_conjugate(x: &[f64], sigma: f64, a: f64, b: &[f64]) -> Result<Vec<f64>> {
    if x.len() != b.len() {
        return Err(CoreError::shape(format!(
            "{} values vs {} references",
            x.len(),
            b.len()
        )));
    }
    if !(a > 0.0) || !(sigma > 0.0) {
        return Err(CoreError::domain(format!(
            "prox needs a > 0 and sigma > 0, got {a}, {sigma}"
        )));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(CoreError::domain(
            "prox reference must be nonnegative".to_string(),
        ));
    }
    let log_sa = (sigma / a).ln();
    Ok(x.iter()
        .zip(b)
        .map(|(&xi, &bi)| {
            if bi == 0.0 {
                xi
            } else {
                xi - a * lambert_w_exp(log_sa + bi.ln() + xi / a)
            }
        })
        .collect())
}

/// Power-iteration estimate of the operator norm in the weighted spaces.
pub fn operator_norm(op: &dyn WeightedOp, iters: usize) -> f64 {
    let w = op.domain_weights();
    let mut rng = SplitMix64::new(0x5eed);
    let mut v: Vec<f64> = (0..w.len()).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        let norm_sq: f64 = comp_sum(v.iter().zip(w).map(|(&x, &wm)| wm * x * x));
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        let tv = op.apply(&v).expect("dimensions fixed by the operator");
        let ttv = op
            .apply_adjoint(&tv)
            .expect("dimensions fixed by the operator");
        lambda = comp_sum(ttv.iter().zip(&v).zip(w).map(|((&a, &b), &wm)| wm * a * b));
        v = ttv;
    }
    lambda.max(0.0).sqrt()
}

/// Primal-dual parameters; defaults are rho = 0.1, sigma = 1,
/// tau = 1/4 and a 200-iteration budget.
#[derive(Debug, Clone)]
pub struct PdParams {
    pub rho: f64,
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
    pub max_iter: usize,
    /// optional early stop on the weighted primal change
    pub primal_tol: Option<f64>,
}

impl Default for PdParams {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1.0,
            tau: 0.25,
            theta: 1.0,
            max_iter: 200,
            primal_tol: None,
        }
    }
}

impl PdParams {
    /// Step sizes derived from the operator norm: tau chosen so that
    /// 1/(tau sigma) clears ||I + T*T|| with a 10% margin.
    pub fn auto_steps(op: &dyn WeightedOp, rho: f64, sigma: f64) -> Self {
        let norm = operator_norm(op, 50) * 1.05;
        let tau = 0.9 / (sigma * (1.0 + norm * norm));
        Self {
            rho,
            sigma,
            tau,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.sigma > 0.0 && self.tau > 0.0) {
            return Err(CoreError::config(
                "rho, sigma, tau must be positive".to_string(),
            ));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(CoreError::config(format!(
                "theta {} outside (0, 1]",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Result of the primal-dual inversion: the primal iterate (exactly in
/// the weighted simplex) and the objective value per iteration. Where the
/// (clipped) data vanishes, the exact objective is infinite for any
/// iterate with residual mass there, so the trace records the finite
/// surrogate: KL over the support of the data plus the off-support
/// transform mass entering linearly.
#[derive(Debug, Clone)]
pub struct PdSolution {
    pub primal: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

/// Minimizes KL(T f, g) + rho KL(f, 1) over the weighted probability
/// simplex by primal-dual splitting. `g` is clipped to be nonnegative and
/// renormalized to unit codomain mass when it is off by more than 1e-6.
pub fn pd_invert(op: &dyn WeightedOp, g: &[f64], params: &PdParams) -> Result<PdSolution> {
    params.validate()?;
    let w = op.domain_weights().to_vec();
    let wt = op.codomain_weights().to_vec();
    if g.len() != wt.len() {
        return Err(CoreError::shape(format!(
            "data length {} does not match codomain {}",
            g.len(),
            wt.len()
        )));
    }
    let mut data = g.to_vec();
    for v in data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mass = comp_sum(data.iter().zip(&wt).map(|(&x, &wm)| wm * x));
    if !(mass > 0.0) {
        return Err(CoreError::domain(
            "inversion data has no positive mass".to_string(),
        ));
    }
    if (mass - 1.0).abs() > 1e-6 {
        eprintln!("warning: inversion data mass {mass} renormalized to 1");
    }
    for v in data.iter_mut() {
        *v /= mass;
    }

    // convergence condition 1/(tau sigma) > ||I + T* T|| = 1 + ||T||^2
    let norm_est = operator_norm(op, 50) * 1.05;
    if 1.0 / (params.tau * params.sigma) <= 1.0 + norm_est * norm_est {
        return Err(CoreError::config(format!(
            "step sizes violate 1/(tau sigma) > 1 + ||T||^2 ~ {:.3}",
            1.0 + norm_est * norm_est
        )));
    }

    let m = w.len();
    let ones = vec![1.0; m];
    let mut f = vec![0.25 / std::f64::consts::PI; m];
    let mut y1 = vec![0.0; wt.len()];
    let mut y2 = vec![0.0; m];
    let mut trace = Vec::with_capacity(params.max_iter);
    for _iter in 0..params.max_iter {
        let adj = op.apply_adjoint(&y1)?;
        let arg: Vec<f64> = (0..m)
            .map(|i| f[i] - params.tau * adj[i] - params.tau * y2[i])
            .collect();
        let f_next = project_simplex(&arg, &w)?;
        let f_bar: Vec<f64> = (0..m)
            .map(|i| f_next[i] + params.theta * (f_next[i] - f[i]))
            .collect();
        let tf = op.apply(&f_bar)?;
        let y1_arg: Vec<f64> = y1
            .iter()
            .zip(&tf)
            .map(|(&y, &t)| y + params.sigma * t)
            .collect();
        y1 = prox_kl_conjugate(&y1_arg, params.sigma, 1.0, &data)?;
        let y2_arg: Vec<f64> = y2
            .iter()
            .zip(&f_bar)
            .map(|(&y, &fb)| y + params.sigma * fb)
            .collect();
        y2 = prox_kl_conjugate(&y2_arg, params.sigma, params.rho, &ones)?;

        let primal_change = comp_sum(
            f.iter()
                .zip(&f_next)
                .zip(&w)
                .map(|((&a, &b), &wm)| wm * (a - b) * (a - b)),
        )
        .sqrt();
        f = f_next;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::numeric(
                "primal iterate became non-finite".to_string(),
            ));
        }
        let residual: Vec<f64> = op.apply(&f)?.iter().map(|&v| v.max(0.0)).collect();
        let mut fidelity = 0.0;
        for ((&t, &d), &wm) in residual.iter().zip(&data).zip(&wt) {
            if d > 0.0 {
                if t > 0.0 {
                    fidelity += wm * (t * (t / d).ln() + d - t);
                } else {
                    fidelity += wm * d;
                }
            } else {
                fidelity += wm * t;
            }
        }
        trace.push(fidelity + params.rho * kl_divergence(&f, &ones, &w));
        if let Some(tol) = params.primal_tol {
            if primal_change < tol {
                break;
            }
        }
    }
    Ok(PdSolution {
        primal: f,
        objective_trace: trace,
    })
}
