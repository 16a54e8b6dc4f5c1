//! Deterministic full-batch minimizer and the heterogeneity gaps built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::ClientSpec;
use crate::objective::{Differentiable, Objective, ParamVector};

/// Stopping rule for [`minimize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    /// Target gradient norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub w_star: ParamVector,
    pub f_star: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// `Σ_i weight_i · f_i`.
#[derive(Clone, Debug)]
pub struct WeightedObjective<D> {
    pub terms: Vec<(f64, D)>,
}

impl<D: Differentiable> WeightedObjective<D> {
    pub fn new(terms: Vec<(f64, D)>) -> Self {
        Self { terms }
    }
}

impl<D: Differentiable + Sync> Differentiable for WeightedObjective<D> {
    fn dim(&self) -> usize {
        self.terms.first().map_or(0, |(_, f)| f.dim())
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.terms.par_iter().map(|(p, f)| p * f.value(w)).collect::<Vec<_>>().iter().sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.value_and_gradient(w).1
    }

    fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let parts: Vec<(f64, Vec<f64>)> = self.terms.par_iter().map(|(_, f)| f.value_and_gradient(w)).collect();
        let mut value = 0.0;
        let mut grad = vec![0.0; w.len()];
        for ((p, _), (v, g)) in self.terms.iter().zip(parts) {
            value += p * v;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += p * gi;
            }
        }
        (value, grad)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Accelerated gradient descent with backtracking and adaptive restart,
/// started at `w0` (zero when `None`), run until `‖∇f‖ ≤ tol`.
///
/// The returned point is the one whose gradient met the tolerance.
pub fn minimize<D: Differentiable + ?Sized>(
    obj: &D,
    w0: Option<&[f64]>,
    settings: OracleSettings,
) -> Result<OracleSolution> {
    if !(settings.tol > 0.0) {
        return Err(Error::Argument(format!("oracle tolerance must be positive, got {}", settings.tol)));
    }
    let dim = obj.dim();
    let mut x: Vec<f64> = match w0 {
        Some(w) if w.len() == dim => w.to_vec(),
        Some(w) => return Err(Error::Argument(format!("start point has {} entries, expected {dim}", w.len()))),
        None => vec![0.0; dim],
    };
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut step_l = 1.0_f64;
    let mut last_norm = f64::INFINITY;
    for iter in 0..=settings.max_iter {
        let (fy, gy) = obj.value_and_gradient(&y);
        let gn = norm(&gy);
        last_norm = gn;
        if !gn.is_finite() || !fy.is_finite() {
            break;
        }
        if gn <= settings.tol {
            return Ok(OracleSolution {
                w_star: ParamVector::from_vec(y),
                f_star: fy,
                grad_norm: gn,
                iterations: iter,
            });
        }
        let slack = 8.0 * f64::EPSILON * fy.abs().max(1.0);
        let x_new = loop {
            let cand: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - gi / step_l).collect();
            let decrease = gn * gn / (2.0 * step_l);
            if obj.value(&cand) <= fy - decrease + slack || step_l > 1e15 {
                break cand;
            }
            // Function values cannot resolve the decrease; test the local
            // Lipschitz constant on gradients instead. The step has length
            // gn / step_l, so the test reads ‖∇f(cand) − ∇f(y)‖ ≤ gn.
            if decrease < 1e3 * slack {
                let gc = obj.gradient(&cand);
                let dg = norm(&gc.iter().zip(&gy).map(|(a, b)| a - b).collect::<Vec<_>>());
                if dg <= gn {
                    break cand;
                }
            }
            step_l *= 2.0;
        };
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let restart = gy.iter().zip(x_new.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum::<f64>() > 0.0;
        if restart {
            t = 1.0;
            y.clone_from(&x_new);
        } else {
            let beta = (t - 1.0) / t_new;
            for ((yi, a), b) in y.iter_mut().zip(&x_new).zip(&x) {
                *yi = a + beta * (a - b);
            }
            t = t_new;
        }
        x = x_new;
        step_l *= 0.9;
    }
    Err(Error::Diagnostic {
        message: format!("minimizer did not reach gradient norm {} in {} iterations", settings.tol, settings.max_iter),
        grad_norm: last_norm,
    })
}

/// Oracle values behind the heterogeneity terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// `F* − Σ_{k∈P} p_k F_k*`.
    pub gamma: f64,
    /// `F_k(w*) − F_k*` for every client.
    pub gamma_k: Vec<f64>,
    pub f_star: f64,
    pub w_star: ParamVector,
    pub local_f_star: Vec<f64>,
}

fn clamp_gap(value: f64, tol: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -10.0 * tol {
        Ok(0.0)
    } else {
        Err(Error::Diagnostic {
            message: format!("{what} is negative ({value:e}); the oracle has not converged"),
            grad_norm: f64::NAN,
        })
    }
}

/// Heterogeneity gaps for local objectives `locals`, of which those with
/// `priority[k]` form the global objective `Σ p_k F_k`.
pub fn compute_gamma<D: Differentiable + Sync>(
    locals: &[D],
    p: &[f64],
    priority: &[bool],
    settings: OracleSettings,
) -> Result<GammaReport> {
    if locals.len() != p.len() || locals.len() != priority.len() {
        return Err(Error::Argument("objectives, weights and priority flags differ in length".into()));
    }
    let global = WeightedObjective::new(
        locals
            .iter()
            .zip(p)
            .zip(priority)
            .filter(|(_, &prio)| prio)
            .map(|((f, &pk), _)| (pk, f))
            .collect(),
    );
    if global.terms.is_empty() {
        return Err(Error::Argument("Γ needs at least one priority objective".into()));
    }
    let solution = minimize(&global, None, settings)?;
    let local: Vec<OracleSolution> = locals
        .par_iter()
        .map(|f| minimize(f, Some(solution.w_star.as_slice()), settings))
        .collect::<Result<_>>()?;
    let weighted_local: f64 = local
        .iter()
        .zip(p)
        .zip(priority)
        .filter(|(_, &prio)| prio)
        .map(|((s, pk), _)| pk * s.f_star)
        .sum();
    let gamma = clamp_gap(solution.f_star - weighted_local, settings.tol, "Γ")?;
    let gamma_k = locals
        .iter()
        .zip(&local)
        .map(|(f, s)| clamp_gap(f.value(solution.w_star.as_slice()) - s.f_star, settings.tol, "Γ_k"))
        .collect::<Result<_>>()?;
    Ok(GammaReport {
        gamma,
        gamma_k,
        f_star: solution.f_star,
        local_f_star: local.iter().map(|s| s.f_star).collect(),
        w_star: solution.w_star,
    })
}

/// [`compute_gamma`] for a client roster with regularization `reg_lambda`.
pub fn federation_gamma(clients: &[ClientSpec], reg_lambda: f64, settings: OracleSettings) -> Result<GammaReport> {
    let objectives: Vec<Objective<'_>> = clients.iter().map(|c| c.objective(reg_lambda)).collect();
    let p: Vec<f64> = clients.iter().map(|c| c.p).collect();
    let priority: Vec<bool> = clients.iter().map(|c| c.is_priority).collect();
    compute_gamma(&objectives, &p, &priority, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `scale·(w − center)² + offset` in one dimension.
    struct Quadratic {
        center: f64,
        scale: f64,
        offset: f64,
    }

    impl Differentiable for Quadratic {
        fn dim(&self) -> usize {
            1
        }

        fn value(&self, w: &[f64]) -> f64 {
            self.scale * (w[0] - self.center).powi(2) + self.offset
        }

        fn gradient(&self, w: &[f64]) -> Vec<f64> {
            vec![2.0 * self.scale * (w[0] - self.center)]
        }
    }

    fn quad(center: f64) -> Quadratic {
        Quadratic { center, scale: 1.0, offset: 0.0 }
    }

    #[test]
    fn recovers_shifted_quadratic() {
        let sol = minimize(&quad(1.0), None, OracleSettings::default()).unwrap();
        assert!((sol.w_star.as_slice()[0] - 1.0).abs() < 1e-8);
        assert!(sol.f_star.abs() < 1e-8);
    }

    #[test]
    fn start_at_optimum_returns_immediately() {
        let sol = minimize(&quad(1.0), Some(&[1.0]), OracleSettings::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.grad_norm, 0.0);
    }

    #[test]
    fn weighted_pair_has_known_minimum() {
        let obj = WeightedObjective::new(vec![(0.5, quad(1.0)), (0.5, quad(-1.0))]);
        let sol = minimize(&obj, Some(&[3.0]), OracleSettings::default()).unwrap();
        assert!(sol.w_star.as_slice()[0].abs() < 1e-8);
        assert!((sol.f_star - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pair_gap_is_one() {
        let report = compute_gamma(&[quad(1.0), quad(-1.0)], &[0.5, 0.5], &[true, true], OracleSettings::default())
            .unwrap();
        assert!((report.gamma - 1.0).abs() < 1e-8);
        assert!((report.gamma_k[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ill_conditioned_quadratic_converges() {
        struct Valley;
        impl Differentiable for Valley {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, w: &[f64]) -> f64 {
                0.5 * (1e-3 * (w[0] - 2.0).powi(2) + 1e2 * (w[1] + 1.0).powi(2))
            }
            fn gradient(&self, w: &[f64]) -> Vec<f64> {
                vec![1e-3 * (w[0] - 2.0), 1e2 * (w[1] + 1.0)]
            }
        }
        let sol = minimize(&Valley, None, OracleSettings::default()).unwrap();
        assert!((sol.w_star.as_slice()[0] - 2.0).abs() < 1e-4);
        assert!((sol.w_star.as_slice()[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_is_a_diagnostic_error() {
        let err = minimize(&quad(5.0), None, OracleSettings { tol: 1e-12, max_iter: 0 }).unwrap_err();
        match err {
            Error::Diagnostic { grad_norm, .. } => assert!((grad_norm - 10.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_negative_gaps_clamp() {
        assert_eq!(clamp_gap(-1e-9, 1e-9, "x").unwrap(), 0.0);
        assert!(clamp_gap(-1e-6, 1e-9, "x").is_err());
    }
}
