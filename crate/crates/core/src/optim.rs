//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 12,
            max_iters: 5000,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `objective`, which returns the value and writes the gradient.
/// `converged` inspects the gradient; `precondition` applies an
/// approximate inverse Hessian in place and seeds the two-loop recursion.
pub fn minimize<F, C>(
    objective: F,
    x0: Vec<f64>,
    config: &LbfgsConfig,
    converged: C,
    precondition: Option<&dyn Fn(&mut [f64])>,
) -> LbfgsOutcome
where
    F: Fn(&[f64], &mut [f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = objective(&x, &mut g);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LbfgsOutcome { x, value: f, gradient: g, iterations: 0, stop: StopReason::NonFinite };
    }
    if n == 0 || converged(&g) {
        return LbfgsOutcome { x, value: f, gradient: g, iterations: 0, stop: StopReason::Converged };
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; config.memory];

    for iter in 1..=config.max_iters {
        let mut fresh = history.is_empty();
        loop {
            // two-loop recursion for d = -H g
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = *gi);
            for (k, (s, y, rho)) in history.iter().enumerate().rev() {
                alpha[k] = rho * dot(s, &d);
                d.iter_mut().zip(y).for_each(|(di, yi)| *di -= alpha[k] * yi);
            }
            if let Some(p) = precondition {
                p(&mut d);
            }
            if let Some((s, y, _)) = history.back() {
                let yy = match precondition {
                    Some(p) => {
                        let mut py = y.clone();
                        p(&mut py);
                        dot(y, &py)
                    }
                    None => dot(y, y),
                };
                d.iter_mut().for_each(|di| *di *= dot(s, y) / yy);
            } else {
                let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let dmax = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if precondition.is_none() && gmax > 1.0 {
                    d.iter_mut().for_each(|di| *di /= gmax);
                } else if dmax == 0.0 {
                    d.iter_mut().zip(&g).for_each(|(di, gi)| *di = *gi);
                }
            }
            for (k, (s, y, rho)) in history.iter().enumerate() {
                let beta = rho * dot(y, &d);
                d.iter_mut().zip(s).for_each(|(di, si)| *di += (alpha[k] - beta) * si);
            }
            d.iter_mut().for_each(|di| *di = -*di);

            let slope = dot(&g, &d);
            if !(slope < 0.0) {
                if fresh {
                    return LbfgsOutcome { x, value: f, gradient: g, iterations: iter - 1, stop: StopReason::LineSearchFailed };
                }
                history.clear();
                fresh = true;
                continue;
            }

            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..config.max_backtracks {
                x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + step * di);
                let f_new = objective(&x_new, &mut g_new);
                if f_new.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && f_new <= f + config.armijo * step * slope
                {
                    accepted = true;
                    let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                        if history.len() == config.memory {
                            history.pop_front();
                        }
                        history.push_back((s, y, 1.0 / sy));
                    }
                    std::mem::swap(&mut x, &mut x_new);
                    std::mem::swap(&mut g, &mut g_new);
                    f = f_new;
                    break;
                }
                step *= config.backtrack;
            }
            if accepted {
                break;
            }
            if fresh {
                return LbfgsOutcome { x, value: f, gradient: g, iterations: iter - 1, stop: StopReason::LineSearchFailed };
            }
            history.clear();
            fresh = true;
        }
        if converged(&g) {
            return LbfgsOutcome { x, value: f, gradient: g, iterations: iter, stop: StopReason::Converged };
        }
    }
    LbfgsOutcome { x, value: f, gradient: g, iterations: config.max_iters, stop: StopReason::MaxIterations }
}

/// Solves `T x = r` in place for the symmetric tridiagonal `T` with
/// constant `diag` and `off`, i.e. a 1D Dirichlet Laplacian over a chain.
pub fn thomas_solve(diag: f64, off: f64, r: &mut [f64]) {
    let n = r.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut denom = diag;
    c[0] = off / denom;
    r[0] /= denom;
    for i in 1..n {
        denom = diag - off * c[i - 1];
        c[i] = off / denom;
        r[i] = (r[i] - off * r[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        r[i] -= c[i] * r[i + 1];
    }
}
