//! The cell problem
//!
//! ```text
//! f_t(xi) = (1/t^N) inf { int_{tY} f(y, xi + grad v) : v = 0 on the boundary of tY }
//! ```
//!
//! discretized with continuous piecewise-linear `v` on a uniform grid of
//! `resolution` cells per unit length (two triangles per square in 2D), `a(y)`
//! taken at cell centers, and minimized by multistart L-BFGS. The
//! homogenized density is estimated as the minimum of `f_t` over an integer
//! ladder of `t`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ravel, unravel, BoxDomain, Boundary, FieldError, Grid, GridField, Location};
use crate::integrand::{IntegrandError, IntegrandSpec, Potential};
use crate::optim::{minimize, thomas_solve, LbfgsConfig, StopReason};
use crate::seed::{derive_seed, rng_for};
use crate::sum::Accumulator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("every restart produced a non-finite energy")]
    AllRestartsFailed { records: Vec<RestartRecord> },
    #[error("xi = {xi:?} lies outside the tabulated range")]
    Extrapolation { xi: Vec<f64> },
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

type Result<T> = std::result::Result<T, CellError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub memory: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: 5000, grad_tol: 1e-8, restarts: 8, seed: 0, memory: 12 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.memory == 0 {
            return Err(CellError::Contract("restarts, max_iters and memory must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(CellError::Contract("grad_tol must be positive".into()));
        }
        Ok(())
    }

    fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig { memory: self.memory, max_iters: self.max_iters, ..LbfgsConfig::default() }
    }
}

/// Boundary condition for the cell competitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellBoundary {
    #[default]
    Zero,
    /// `tY`-periodic competitors with one pinned node.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellProblem {
    pub spec: IntegrandSpec,
    pub xi: Vec<f64>,
    pub t: usize,
    pub resolution: usize,
    pub solver: SolverConfig,
    pub boundary: CellBoundary,
}

impl CellProblem {
    pub fn new(spec: IntegrandSpec, xi: Vec<f64>, t: usize, resolution: usize) -> Self {
        CellProblem { spec, xi, t, resolution, solver: SolverConfig::default(), boundary: CellBoundary::Zero }
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_boundary(mut self, boundary: CellBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(CellError::Contract("t must be a positive integer".into()));
        }
        if self.resolution < 8 {
            return Err(CellError::Contract(format!(
                "resolution per unit cell must be at least 8, got {}",
                self.resolution
            )));
        }
        if self.xi.len() != self.spec.dims().len() {
            return Err(CellError::Contract(format!(
                "xi has {} entries, the spec expects {}",
                self.xi.len(),
                self.spec.dims().len()
            )));
        }
        if self.xi.iter().any(|v| !v.is_finite()) {
            return Err(CellError::Contract("xi must be finite".into()));
        }
        self.solver.validate()
    }

    /// The grid of `tY`.
    pub fn grid(&self) -> Grid {
        let n = self.spec.dims().n;
        Grid::uniform(BoxDomain::cube(n, self.t as f64).expect("t > 0"), self.resolution * self.t)
            .expect("resolution > 0")
    }
}

/// One axis difference `(u[plus] - u[minus]) / h` inside a simplex.
#[derive(Debug, Clone, Copy)]
struct Diff {
    plus: usize,
    minus: usize,
}

/// Piecewise-linear energy `weight * sum_c vol_c a_c mean_simplices W(base + grad u)`
/// over a box lattice with some nodes held fixed.
#[derive(Debug, Clone)]
pub(crate) struct LatticeEnergy {
    n: usize,
    d: usize,
    nodes: Vec<usize>,
    h: Vec<f64>,
    coef: Vec<f64>,
    base: Vec<f64>,
    potential: Potential,
    weight: f64,
    /// Per cell, per simplex, per axis.
    diffs: Vec<Diff>,
    simplices: usize,
    free: Vec<usize>,
    fixed_values: Vec<f64>,
    periodic: bool,
}

impl LatticeEnergy {
    /// `cells` per axis on a box with spacings `h`; `coef[c]` multiplies the
    /// potential on cell `c`; `fixed[node]` pins that node to
    /// `fixed_values[node * d ..]`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        cells: Vec<usize>,
        h: Vec<f64>,
        periodic: bool,
        d: usize,
        coef: Vec<f64>,
        base: Vec<f64>,
        potential: Potential,
        weight: f64,
        fixed: &[bool],
        fixed_values: Vec<f64>,
    ) -> Self {
        let n = cells.len();
        let nodes: Vec<usize> = cells.iter().map(|&c| if periodic { c } else { c + 1 }).collect();
        let node_at = |idx: [usize; 2]| -> usize {
            let w: Vec<usize> = (0..n).map(|a| if periodic { idx[a] % cells[a] } else { idx[a] }).collect();
            ravel(&w, &nodes)
        };
        let cell_count: usize = cells.iter().product();
        let simplices = if n == 1 { 1 } else { 2 };
        let mut diffs = Vec::with_capacity(cell_count * simplices * n);
        for c in 0..cell_count {
            let i = unravel(c, &cells);
            if n == 1 {
                diffs.push(Diff { plus: node_at([i[0] + 1, 0]), minus: node_at([i[0], 0]) });
            } else {
                let p = |a: usize, b: usize| node_at([i[0] + a, i[1] + b]);
                // lower triangle: forward differences from (0,0)
                diffs.push(Diff { plus: p(1, 0), minus: p(0, 0) });
                diffs.push(Diff { plus: p(0, 1), minus: p(0, 0) });
                // upper triangle: backward differences into (1,1)
                diffs.push(Diff { plus: p(1, 1), minus: p(0, 1) });
                diffs.push(Diff { plus: p(1, 1), minus: p(1, 0) });
            }
        }
        let free = fixed.iter().enumerate().filter(|(_, &f)| !f).map(|(k, _)| k).collect();
        LatticeEnergy {
            n,
            d,
            nodes,
            h,
            coef,
            base,
            potential,
            weight,
            diffs,
            simplices,
            free,
            fixed_values,
            periodic,
        }
    }

    pub(crate) fn node_count(&self) -> usize {
        self.nodes.iter().product()
    }

    pub(crate) fn free_count(&self) -> usize {
        self.free.len() * self.d
    }

    pub(crate) fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    /// Full nodal array from free unknowns.
    pub(crate) fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.fixed_values.clone();
        for (k, &node) in self.free.iter().enumerate() {
            u[node * self.d..(node + 1) * self.d].copy_from_slice(&x[k * self.d..(k + 1) * self.d]);
        }
        u
    }

    /// Free unknowns from a full nodal array.
    pub(crate) fn restrict(&self, u: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.free_count()];
        for (k, &node) in self.free.iter().enumerate() {
            x[k * self.d..(k + 1) * self.d].copy_from_slice(&u[node * self.d..(node + 1) * self.d]);
        }
        x
    }

    /// Energy of a full nodal array.
    pub(crate) fn energy_nodal(&self, u: &[f64]) -> f64 {
        self.evaluate(u, None)
    }

    fn evaluate(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let (n, d) = (self.n, self.d);
        let m = n * d;
        let scale = self.weight * self.cell_volume() / self.simplices as f64;
        let mut xi = [0.0; 4];
        let mut dw = [0.0; 4];
        let mut acc = Accumulator::new();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (c, &a) in self.coef.iter().enumerate() {
            for s in 0..self.simplices {
                let dd = &self.diffs[(c * self.simplices + s) * n..(c * self.simplices + s + 1) * n];
                for comp in 0..d {
                    for (axis, df) in dd.iter().enumerate() {
                        xi[comp * n + axis] = self.base[comp * n + axis]
                            + (u[df.plus * d + comp] - u[df.minus * d + comp]) / self.h[axis];
                    }
                }
                acc.add(a * self.potential.value(&xi[..m]));
                if let Some(g) = grad.as_deref_mut() {
                    self.potential.gradient(&xi[..m], &mut dw[..m]);
                    for comp in 0..d {
                        for (axis, df) in dd.iter().enumerate() {
                            let v = scale * a * dw[comp * n + axis] / self.h[axis];
                            g[df.plus * d + comp] += v;
                            g[df.minus * d + comp] -= v;
                        }
                    }
                }
            }
        }
        acc.value() * scale
    }

    /// Energy and gradient over the free unknowns.
    pub(crate) fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let u = self.expand(x);
        let mut g = vec![0.0; u.len()];
        let e = self.evaluate(&u, Some(&mut g));
        for (k, &node) in self.free.iter().enumerate() {
            grad[k * self.d..(k + 1) * self.d].copy_from_slice(&g[node * self.d..(node + 1) * self.d]);
        }
        e
    }

    /// Gradient sup-norm in units of the integrand derivative.
    pub(crate) fn residual(&self, grad: &[f64]) -> f64 {
        let hmin = self.h.iter().copied().fold(f64::INFINITY, f64::min);
        let unit = self.weight * self.cell_volume() / hmin;
        grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / unit
    }

    /// Tridiagonal preconditioner along contiguous runs of free nodes (1D).
    fn precondition(&self, v: &mut [f64]) {
        let d = self.d;
        let c = 2.0 * self.weight * self.cell_volume() / (self.h[0] * self.h[0])
            * (self.coef.iter().sum::<f64>() / self.coef.len() as f64);
        let mut start = 0;
        let mut buf = Vec::new();
        while start < self.free.len() {
            let mut end = start + 1;
            while end < self.free.len() && self.free[end] == self.free[end - 1] + 1 {
                end += 1;
            }
            for comp in 0..d {
                buf.clear();
                buf.extend((start..end).map(|k| v[k * d + comp]));
                thomas_solve(2.0 * c, -c, &mut buf);
                for (k, val) in (start..end).zip(&buf) {
                    v[k * d + comp] = *val;
                }
            }
            start = end;
        }
    }

    fn uses_preconditioner(&self) -> bool {
        self.n == 1 && !self.periodic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Zero,
    Warm,
    Sawtooth,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub index: usize,
    pub kind: StartKind,
    /// `None` when the restart hit a non-finite energy and was discarded.
    pub energy: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub(crate) struct MultistartResult {
    pub(crate) best: Vec<f64>,
    pub(crate) energy: f64,
    pub(crate) residual: f64,
    pub(crate) iterations: usize,
    pub(crate) converged: bool,
    pub(crate) records: Vec<RestartRecord>,
}

/// Runs L-BFGS from every nodal start in parallel and keeps the lowest
/// energy, ties broken by start index.
pub(crate) fn multistart(
    energy: &LatticeEnergy,
    starts: &[(StartKind, Vec<f64>)],
    solver: &SolverConfig,
) -> Result<MultistartResult> {
    let cfg = solver.lbfgs();
    let tol = solver.grad_tol;
    let runs: Vec<(RestartRecord, Vec<f64>)> = starts
        .par_iter()
        .enumerate()
        .map(|(index, (kind, u0))| {
            let x0 = energy.restrict(u0);
            let pre = |v: &mut [f64]| energy.precondition(v);
            let pre_ref: Option<&dyn Fn(&mut [f64])> =
                if energy.uses_preconditioner() { Some(&pre) } else { None };
            let out = minimize(
                |x, g| energy.objective(x, g),
                x0,
                &cfg,
                |g| energy.residual(g) <= tol,
                pre_ref,
            );
            let finite = out.stop != StopReason::NonFinite && out.value.is_finite();
            let residual = energy.residual(&out.gradient);
            let record = RestartRecord {
                index,
                kind: *kind,
                energy: finite.then_some(out.value),
                iterations: out.iterations,
                residual,
                converged: finite && residual <= tol,
            };
            (record, out.x)
        })
        .collect();
    let best = runs
        .iter()
        .filter_map(|(r, _)| r.energy.map(|e| (e, r.index)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let records: Vec<RestartRecord> = runs.iter().map(|(r, _)| r.clone()).collect();
    match best {
        None => Err(CellError::AllRestartsFailed { records }),
        Some((e, k)) => {
            let r = &runs[k].0;
            Ok(MultistartResult {
                best: energy.expand(&runs[k].1),
                energy: e,
                residual: r.residual,
                iterations: r.iterations,
                converged: r.converged,
                records,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    pub f_t: f64,
    pub minimizer: GridField,
    pub restarts: Vec<RestartRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Gradient sup-norm at the returned minimizer, in integrand units.
    pub grad_norm: f64,
    /// Energy of the zero competitor.
    pub zero_energy: f64,
}

fn cell_energy_for(problem: &CellProblem) -> LatticeEnergy {
    let spec = &problem.spec;
    let dims = spec.dims();
    let r = problem.resolution * problem.t;
    let cells = vec![r; dims.n];
    let h = vec![1.0 / problem.resolution as f64; dims.n];
    let cell_count: usize = cells.iter().product();
    let coef: Vec<f64> = (0..cell_count)
        .map(|c| {
            let idx = unravel(c, &cells);
            let y: Vec<f64> = (0..dims.n)
                .map(|a| (idx[a] as f64 + 0.5) / problem.resolution as f64)
                .collect();
            spec.coefficient_at(&y)
        })
        .collect();
    let periodic = problem.boundary == CellBoundary::Periodic;
    let nodes: Vec<usize> = cells.iter().map(|&c| if periodic { c } else { c + 1 }).collect();
    let node_count: usize = nodes.iter().product();
    let fixed: Vec<bool> = (0..node_count)
        .map(|k| {
            if periodic {
                k == 0
            } else {
                let idx = unravel(k, &nodes);
                (0..dims.n).any(|a| idx[a] == 0 || idx[a] == r)
            }
        })
        .collect();
    LatticeEnergy::new(
        cells,
        h,
        periodic,
        dims.d,
        coef,
        problem.xi.clone(),
        spec.potential().clone(),
        1.0 / (problem.t as f64).powi(dims.n as i32),
        &fixed,
        vec![0.0; node_count * dims.d],
    )
}

/// Discrete cell energy of a zero-boundary competitor on `tY`.
pub fn cell_energy(spec: &IntegrandSpec, xi: &[f64], v: &GridField) -> Result<f64> {
    let grid = v.grid();
    let n = spec.dims().n;
    if grid.dim() != n || v.components() != spec.dims().d || v.location() != Location::Node {
        return Err(CellError::Contract("competitor does not match the integrand dims".into()));
    }
    let t = grid.domain().width(0);
    let res = grid.resolution()[0];
    let ti = t.round() as usize;
    let valid = ti >= 1
        && (t - ti as f64).abs() <= 1e-12
        && res % ti == 0
        && (0..n).all(|a| grid.domain().lower()[a] == 0.0 && grid.domain().width(a) == t && grid.resolution()[a] == res);
    if !valid {
        return Err(CellError::Contract("competitor must live on tY with t an integer and whole cells per unit".into()));
    }
    let boundary = match v.boundary() {
        Boundary::Periodic => CellBoundary::Periodic,
        _ => CellBoundary::Zero,
    };
    let problem = CellProblem::new(spec.clone(), xi.to_vec(), ti, res / ti).with_boundary(boundary);
    if problem.xi.len() != spec.dims().len() {
        return Err(CellError::Contract("xi does not match the integrand dims".into()));
    }
    if boundary == CellBoundary::Zero {
        let dims = v.site_dims();
        for (k, chunk) in v.values().chunks(v.components()).enumerate() {
            let idx = unravel(k, &dims);
            let on_boundary = (0..n).any(|a| idx[a] == 0 || idx[a] == res);
            if on_boundary && chunk.iter().any(|&x| x != 0.0) {
                return Err(CellError::Contract(format!("competitor is nonzero on the boundary at node {k}")));
            }
        }
    }
    Ok(cell_energy_for(&problem).energy_nodal(v.values()))
}

fn canonical_sign(xi: &[f64]) -> f64 {
    match xi.iter().find(|&&v| v != 0.0) {
        Some(&v) if v < 0.0 => -1.0,
        _ => 1.0,
    }
}

/// Sawtooth laminates between the wells `+-sqrt(1 - |xi_rest|^2)` along axis 0.
fn sawtooth_starts(problem: &CellProblem, xi: &[f64], nodes: &[usize]) -> Vec<Vec<f64>> {
    let dims = problem.spec.dims();
    if !matches!(problem.spec.potential(), Potential::DoubleWell) || dims.d != 1 {
        return Vec::new();
    }
    let rest: f64 = xi[1..].iter().map(|v| v * v).sum();
    if rest >= 1.0 {
        return Vec::new();
    }
    let s = (1.0 - rest).sqrt();
    let x0 = xi[0];
    if x0.abs() >= s {
        return Vec::new();
    }
    let lambda = (s + x0) / (2.0 * s);
    let h = 1.0 / problem.resolution as f64;
    let t = problem.t as f64;
    let node_count: usize = nodes.iter().product();
    [1usize, 4, 16]
        .iter()
        .filter(|&&p| problem.resolution / p >= 4)
        .map(|&p| {
            let period = 1.0 / p as f64;
            (0..node_count)
                .map(|k| {
                    let idx = unravel(k, nodes);
                    let on_boundary = (0..dims.n).any(|a| idx[a] == 0 || (idx[a] as f64 * h - t).abs() < 1e-12);
                    if on_boundary && problem.boundary == CellBoundary::Zero {
                        return 0.0;
                    }
                    let y = idx[0] as f64 * h;
                    let phase = y - (y / period).floor() * period;
                    let up = lambda * period;
                    if phase <= up {
                        (s - x0) * phase
                    } else {
                        (s - x0) * up + (-s - x0) * (phase - up)
                    }
                })
                .collect()
        })
        .collect()
}

/// Products of sines vanishing on the boundary of `tY`, with random
/// amplitudes decaying like `1/k`.
fn fourier_start(problem: &CellProblem, xi: &[f64], nodes: &[usize], rng: &mut impl Rng) -> Vec<f64> {
    let dims = problem.spec.dims();
    let t = problem.t as f64;
    let h = 1.0 / problem.resolution as f64;
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let amp = (1.0 + norm) * t / std::f64::consts::PI;
    let modes = 4usize;
    let mode_count = modes.pow(dims.n as u32);
    let coeffs: Vec<f64> = (0..mode_count * dims.d)
        .map(|k| {
            let m = unravel(k / dims.d, &vec![modes; dims.n]);
            let order: usize = (0..dims.n).map(|a| m[a] + 1).max().unwrap_or(1);
            rng.gen_range(-1.0..1.0) * amp / order as f64
        })
        .collect();
    let node_count: usize = nodes.iter().product();
    let mut u = vec![0.0; node_count * dims.d];
    for k in 0..node_count {
        let idx = unravel(k, nodes);
        for mk in 0..mode_count {
            let m = unravel(mk, &vec![modes; dims.n]);
            let basis: f64 = (0..dims.n)
                .map(|a| (std::f64::consts::PI * (m[a] + 1) as f64 * idx[a] as f64 * h / t).sin())
                .product();
            for comp in 0..dims.d {
                u[k * dims.d + comp] += coeffs[mk * dims.d + comp] * basis;
            }
        }
    }
    u
}

/// Seed tags identifying a `(xi, t)` solve.
fn xi_tags(xi: &[f64], t: usize) -> Vec<u64> {
    let mut tags: Vec<u64> = xi.iter().map(|v| v.to_bits()).collect();
    tags.push(t as u64);
    tags
}

/// Starts in order: zero, the given extras, sawtooth laminates, seeded
/// Fourier perturbations. Starts are built for the sign-normalized `xi`
/// and mirrored, so even integrands give bitwise `xi -> -xi` symmetry.
pub(crate) fn build_starts(problem: &CellProblem, nodes: &[usize], extras: &[Vec<f64>]) -> Vec<(StartKind, Vec<f64>)> {
    let d = problem.spec.dims().d;
    let node_count: usize = nodes.iter().product();
    let sign = canonical_sign(&problem.xi);
    let xi: Vec<f64> = problem.xi.iter().map(|v| sign * v).collect();
    let mut starts = vec![(StartKind::Zero, vec![0.0; node_count * d])];
    starts.extend(extras.iter().map(|u| (StartKind::Warm, u.clone())));
    let mut own = Vec::new();
    for u in sawtooth_starts(problem, &xi, nodes) {
        own.push((StartKind::Sawtooth, u));
    }
    let mut rng = rng_for(problem.solver.seed, &xi_tags(&xi, problem.t));
    while own.len() + 1 < problem.solver.restarts {
        own.push((StartKind::Fourier, fourier_start(problem, &xi, nodes, &mut rng)));
    }
    own.truncate(problem.solver.restarts - 1);
    starts.extend(own.into_iter().map(|(k, u)| (k, u.into_iter().map(|v| sign * v).collect())));
    starts
}

/// Solves the cell problem from the standard starts.
pub fn solve_cell(problem: &CellProblem) -> Result<CellSolution> {
    solve_cell_with_starts(problem, &[])
}

/// As [`solve_cell`], with extra nodal starts tried right after zero.
pub fn solve_cell_with_starts(problem: &CellProblem, extras: &[Vec<f64>]) -> Result<CellSolution> {
    problem.validate()?;
    let energy = cell_energy_for(problem);
    let len = energy.node_count() * problem.spec.dims().d;
    if extras.iter().any(|u| u.len() != len) {
        return Err(CellError::Contract("extra start has the wrong length".into()));
    }
    let zero_energy = energy.energy_nodal(&vec![0.0; len]);
    let starts = build_starts(problem, energy.nodes(), extras);
    let result = multistart(&energy, &starts, &problem.solver)?;
    let boundary = match problem.boundary {
        CellBoundary::Zero => Boundary::Zero,
        CellBoundary::Periodic => Boundary::Periodic,
    };
    let minimizer = GridField::from_values(problem.grid(), problem.spec.dims().d, boundary, Location::Node, result.best)?;
    Ok(CellSolution {
        f_t: result.energy,
        minimizer,
        restarts: result.records,
        converged: result.converged,
        iterations: result.iterations,
        grad_norm: result.residual,
        zero_energy,
    })
}

/// Tiles a `tY` nodal field `k^N` times onto `ktY`.
pub fn tile(v: &GridField, k: usize) -> Result<GridField> {
    let grid = v.grid();
    let n = grid.dim();
    let t = grid.domain().width(0);
    let res = grid.resolution()[0];
    let big = Grid::uniform(BoxDomain::cube(n, t * k as f64)?, res * k)?;
    let small_dims = v.site_dims();
    let big_dims = big.node_dims(v.boundary());
    let d = v.components();
    let count: usize = big_dims.iter().product();
    let mut values = vec![0.0; count * d];
    for node in 0..count {
        let idx = unravel(node, &big_dims);
        let src: Vec<usize> = (0..n).map(|a| idx[a] % res).collect();
        let s = ravel(&src, &small_dims);
        values[node * d..(node + 1) * d].copy_from_slice(&v.values()[s * d..(s + 1) * d]);
    }
    Ok(GridField::from_values(big, d, v.boundary(), v.location(), values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub t: usize,
    pub f_t: Option<f64>,
    pub converged: bool,
    pub zero_energy: Option<f64>,
    pub grad_norm: Option<f64>,
    pub iterations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomEstimate {
    pub xi: Vec<f64>,
    pub ladder: Vec<LadderEntry>,
    /// Minimum of `f_t` over the solved ladder entries.
    pub f_hom: Option<f64>,
    /// `max(0, f_next - f_t)` between consecutive solved entries.
    pub defects: Vec<f64>,
    /// The last two solved values agree within `1e-3` relative.
    pub stalled: bool,
    pub failures: usize,
}

pub const DEFAULT_LADDER: [usize; 4] = [1, 2, 4, 8];
pub const STALL_TOL: f64 = 1e-3;

/// `f_t(xi)` along `ladder`, each solve warm-started with the tiled
/// minimizer of the largest earlier `t` dividing it.
pub fn estimate_f_hom(
    spec: &IntegrandSpec,
    xi: &[f64],
    ladder: &[usize],
    resolution: usize,
    solver: &SolverConfig,
    boundary: CellBoundary,
) -> Result<HomEstimate> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) || ladder[0] == 0 {
        return Err(CellError::Contract("t ladder must be strictly increasing positive integers".into()));
    }
    let mut entries: Vec<LadderEntry> = Vec::with_capacity(ladder.len());
    let mut solved: Vec<(usize, GridField)> = Vec::new();
    for &t in ladder {
        let problem = CellProblem::new(spec.clone(), xi.to_vec(), t, resolution)
            .with_solver(*solver)
            .with_boundary(boundary);
        let warm = solved
            .iter()
            .rev()
            .find(|(s, _)| t % s == 0)
            .map(|(s, v)| tile(v, t / s).map(GridField::into_values))
            .transpose()?;
        match solve_cell_with_starts(&problem, warm.as_slice()) {
            Ok(sol) => {
                entries.push(LadderEntry {
                    t,
                    f_t: Some(sol.f_t),
                    converged: sol.converged,
                    zero_energy: Some(sol.zero_energy),
                    grad_norm: Some(sol.grad_norm),
                    iterations: sol.iterations,
                    failure: None,
                });
                solved.push((t, sol.minimizer));
            }
            Err(e @ CellError::Contract(_)) => return Err(e),
            Err(e) => entries.push(LadderEntry {
                t,
                f_t: None,
                converged: false,
                zero_energy: None,
                grad_norm: None,
                iterations: 0,
                failure: Some(e.to_string()),
            }),
        }
    }
    let values: Vec<f64> = entries.iter().filter_map(|e| e.f_t).collect();
    let f_hom = values.iter().copied().reduce(f64::min);
    let defects = values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let stalled = values.len() >= 2 && {
        let (a, b) = (values[values.len() - 2], values[values.len() - 1]);
        (b - a).abs() <= STALL_TOL * a.abs()
    };
    Ok(HomEstimate {
        xi: xi.to_vec(),
        failures: entries.iter().filter(|e| e.failure.is_some()).count(),
        ladder: entries,
        f_hom,
        defects,
        stalled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomTable {
    pub xi_grid: Vec<Vec<f64>>,
    pub t_ladder: Vec<usize>,
    pub resolution: usize,
    pub solver: SolverConfig,
    pub boundary: CellBoundary,
    pub entries: Vec<HomEstimate>,
}

/// `estimate_f_hom` over every `xi`, in parallel; entry order follows `xi_grid`.
pub fn hom_table(
    spec: &IntegrandSpec,
    xi_grid: &[Vec<f64>],
    ladder: &[usize],
    resolution: usize,
    solver: &SolverConfig,
    boundary: CellBoundary,
) -> Result<HomTable> {
    let entries = xi_grid
        .par_iter()
        .map(|xi| estimate_f_hom(spec, xi, ladder, resolution, solver, boundary))
        .collect::<Result<Vec<_>>>()?;
    Ok(HomTable {
        xi_grid: xi_grid.to_vec(),
        t_ladder: ladder.to_vec(),
        resolution,
        solver: *solver,
        boundary,
        entries,
    })
}

/// Tensor grid of `xi` values with `spacing` on `[-radius, radius]^m`.
pub fn xi_tensor_grid(m: usize, radius: f64, spacing: f64) -> Vec<Vec<f64>> {
    let k = (radius / spacing).round() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * spacing).collect();
    let count = axis.len().pow(m as u32);
    (0..count)
        .map(|flat| {
            let idx = unravel(flat, &vec![axis.len(); m]);
            (0..m).map(|a| axis[idx[a]]).collect()
        })
        .collect()
}

impl HomTable {
    pub fn f_hom(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.f_hom).collect()
    }

    pub fn solved_count(&self) -> usize {
        self.entries.iter().filter(|e| e.f_hom.is_some()).count()
    }

    /// Piecewise-linear (1D) or bilinear (2D tensor grid) interpolation of
    /// `f_hom`; refuses to extrapolate.
    pub fn interpolate(&self, xi: &[f64]) -> Result<f64> {
        let m = xi.len();
        if self.xi_grid.is_empty() || self.xi_grid[0].len() != m || !(1..=2).contains(&m) {
            return Err(CellError::Contract("interpolation point does not match the table".into()));
        }
        let axes: Vec<Vec<f64>> = (0..m)
            .map(|a| {
                let mut v: Vec<f64> = self.xi_grid.iter().map(|x| x[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let lookup = |p: &[f64]| -> Result<f64> {
            self.xi_grid
                .iter()
                .position(|x| x.as_slice() == p)
                .and_then(|k| self.entries[k].f_hom)
                .ok_or_else(|| CellError::Contract(format!("table has no solved entry at {p:?}")))
        };
        let mut brackets = Vec::with_capacity(m);
        for a in 0..m {
            let ax = &axes[a];
            if xi[a] < ax[0] || xi[a] > ax[ax.len() - 1] || !xi[a].is_finite() {
                return Err(CellError::Extrapolation { xi: xi.to_vec() });
            }
            let k = ax.partition_point(|&v| v <= xi[a]).clamp(1, ax.len().max(2) - 1);
            if ax.len() == 1 {
                brackets.push((ax[0], ax[0], 0.0));
            } else {
                let (lo, hi) = (ax[k - 1], ax[k]);
                brackets.push((lo, hi, (xi[a] - lo) / (hi - lo)));
            }
        }
        if m == 1 {
            let (lo, hi, w) = brackets[0];
            if w == 0.0 {
                return lookup(&[lo]);
            }
            return Ok((1.0 - w) * lookup(&[lo])? + w * lookup(&[hi])?);
        }
        let (x0, x1, wx) = brackets[0];
        let (y0, y1, wy) = brackets[1];
        let mut acc = 0.0;
        for (px, fx) in [(x0, 1.0 - wx), (x1, wx)] {
            for (py, fy) in [(y0, 1.0 - wy), (y1, wy)] {
                if fx * fy != 0.0 {
                    acc += fx * fy * lookup(&[px, py])?;
                }
            }
        }
        Ok(acc)
    }

    /// One row per `(xi, t)`: `xi0.., t, f_t, converged`.
    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = self.xi_grid.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (0..m).map(|k| format!("xi{k}")).collect();
        header.extend(["t", "f_t", "converged"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for e in &self.entries {
            for l in &e.ladder {
                let mut row: Vec<String> = e.xi.iter().map(|v| format!("{v:?}")).collect();
                row.push(l.t.to_string());
                row.push(l.f_t.map_or_else(|| "nan".into(), |v| format!("{v:?}")));
                row.push(l.converged.to_string());
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    /// Compact summary: `f_hom`, defects and flags per `xi`.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "t_ladder": self.t_ladder,
            "resolution": self.resolution,
            "solver": self.solver,
            "boundary": self.boundary,
            "seed": self.solver.seed,
            "entries": self.entries.iter().map(|e| serde_json::json!({
                "xi": e.xi,
                "f_hom": e.f_hom,
                "defects": e.defects,
                "stalled": e.stalled,
                "failures": e.failures,
                "converged": e.ladder.iter().all(|l| l.converged),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Seed for task `tag` of a run seeded with `seed`.
pub fn task_seed(seed: u64, tag: u64) -> u64 {
    derive_seed(seed, &[tag])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{Coefficient, Dims, Form, Growth};
    use crate::young::YoungFunction;

    fn unit_quadratic() -> IntegrandSpec {
        IntegrandSpec::constant_quadratic(vec![vec![1.0]]).unwrap()
    }

    fn zero_field(spec: &IntegrandSpec, t: usize, res: usize) -> GridField {
        let p = CellProblem::new(spec.clone(), vec![0.0; spec.dims().len()], t, res);
        GridField::sample(&p.grid(), Boundary::Zero, spec.dims().d, |_, o| o.iter_mut().for_each(|v| *v = 0.0)).unwrap()
    }

    #[test]
    fn cell_energy_examples() {
        let p2 = IntegrandSpec::layered_quadratic(vec![1.0]).unwrap();
        assert_eq!(cell_energy(&p2, &[2.0], &zero_field(&p2, 1, 8)).unwrap(), 4.0);
        let tp = IntegrandSpec::two_phase_quadratic();
        assert_eq!(cell_energy(&tp, &[1.0], &zero_field(&tp, 1, 8)).unwrap(), 2.5);
        assert_eq!(cell_energy(&tp, &[1.0], &zero_field(&tp, 3, 8)).unwrap(), 2.5);
        let dw = IntegrandSpec::double_well_1d(Coefficient::Constant { value: 1.0 }).unwrap();
        assert_eq!(cell_energy(&dw, &[0.0], &zero_field(&dw, 1, 8)).unwrap(), 1.0);

        let grid = CellProblem::new(tp.clone(), vec![1.0], 1, 8).grid();
        let bump = GridField::sample_scalar(&grid, Boundary::Free, |x| x[0] + 0.1).unwrap();
        assert!(matches!(cell_energy(&tp, &[1.0], &bump), Err(CellError::Contract(_))));
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        let spec = IntegrandSpec::new(
            Form::Separable {
                coefficient: Coefficient::Trig { mean: 2.0, amplitude: 0.5, axis: 1 },
                potential: Potential::DoubleWell,
            },
            Growth { b: YoungFunction::scaled_power(4.0, 0.125).unwrap(), m: 20.0, a_bound: 3.0, lower_offset: 1.0 },
            Dims { n: 2, d: 2 },
        )
        .unwrap();
        let problem = CellProblem::new(spec, vec![0.3, -0.2, 0.1, 0.5], 1, 8);
        let e = cell_energy_for(&problem);
        let mut rng = rng_for(1, &[]);
        let x: Vec<f64> = (0..e.free_count()).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let mut g = vec![0.0; x.len()];
        e.objective(&x, &mut g);
        let mut probe = x.clone();
        let mut scratch = vec![0.0; x.len()];
        for k in (0..x.len()).step_by(7) {
            let h = 1e-6;
            probe[k] = x[k] + h;
            let fp = e.objective(&probe, &mut scratch);
            probe[k] = x[k] - h;
            let fm = e.objective(&probe, &mut scratch);
            probe[k] = x[k];
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn convex_constant_density_reproduces_itself() {
        let q = IntegrandSpec::constant_quadratic(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        for xi in [vec![1.0, 1.0], vec![-0.5, 2.0]] {
            let exact = xi[0] * xi[0] + 4.0 * xi[1] * xi[1];
            let sol = solve_cell(&CellProblem::new(q.clone(), xi, 1, 8)).unwrap();
            assert!((sol.f_t - exact).abs() <= 1e-12 * exact, "{} vs {exact}", sol.f_t);
            assert!(sol.minimizer.values().iter().all(|v| v.abs() < 1e-6));
        }
        let sol = solve_cell(&CellProblem::new(unit_quadratic(), vec![3.0], 2, 16)).unwrap();
        assert!((sol.f_t - 9.0).abs() < 1e-12);
    }

    #[test]
    fn two_phase_cell_approaches_harmonic_mean() {
        let tp = IntegrandSpec::two_phase_quadratic();
        let sol = solve_cell(&CellProblem::new(tp, vec![1.0], 4, 64)).unwrap();
        assert!(sol.converged);
        assert!((sol.f_t - 1.6).abs() <= 0.016, "{}", sol.f_t);
        assert!(sol.f_t <= sol.zero_energy);
        assert!(sol.f_t >= 1.0 - 1e-8);
    }

    #[test]
    fn double_well_at_zero_relaxes() {
        let dw = IntegrandSpec::double_well_1d(Coefficient::Constant { value: 1.0 }).unwrap();
        let sol = solve_cell(&CellProblem::new(dw, vec![0.0], 4, 128)).unwrap();
        assert!(sol.f_t <= 1e-2, "{}", sol.f_t);
    }

    #[test]
    fn mirrored_xi_gives_identical_values() {
        let dw = IntegrandSpec::double_well_1d(Coefficient::Constant { value: 1.0 }).unwrap();
        for x in [0.3, 0.8, 1.2] {
            let a = solve_cell(&CellProblem::new(dw.clone(), vec![x], 2, 32)).unwrap();
            let b = solve_cell(&CellProblem::new(dw.clone(), vec![-x], 2, 32)).unwrap();
            assert_eq!(a.f_t, b.f_t);
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let dw = IntegrandSpec::double_well_1d(Coefficient::Piecewise { values: vec![1.0, 2.0], axis: 0 }).unwrap();
        let p = CellProblem::new(dw, vec![0.4], 2, 32);
        assert_eq!(solve_cell(&p).unwrap(), solve_cell(&p).unwrap());
    }

    #[test]
    fn tiling_preserves_energy() {
        let tp = IntegrandSpec::two_phase_quadratic();
        let sol = solve_cell(&CellProblem::new(tp.clone(), vec![1.0], 1, 16)).unwrap();
        let tiled = tile(&sol.minimizer, 4).unwrap();
        let e = cell_energy(&tp, &[1.0], &tiled).unwrap();
        assert!((e - sol.f_t).abs() <= 1e-14 * sol.f_t);
    }

    #[test]
    fn ladder_is_subadditive_and_takes_the_minimum() {
        let tp = IntegrandSpec::two_phase_quadratic();
        let est = estimate_f_hom(&tp, &[1.0], &[1, 2, 4], 16, &SolverConfig::default(), CellBoundary::Zero).unwrap();
        let vals: Vec<f64> = est.ladder.iter().map(|l| l.f_t.unwrap()).collect();
        assert_eq!(est.f_hom, vals.iter().copied().reduce(f64::min));
        for (w, d) in vals.windows(2).zip(&est.defects) {
            assert!(*d <= 1e-6 * (1.0 + w[0].abs()));
        }
        assert!(estimate_f_hom(&tp, &[1.0], &[2, 1], 16, &SolverConfig::default(), CellBoundary::Zero).is_err());
    }

    #[test]
    fn periodic_competitors_share_the_limit() {
        let tp = IntegrandSpec::two_phase_quadratic();
        let p = CellProblem::new(tp, vec![1.0], 1, 32).with_boundary(CellBoundary::Periodic);
        let sol = solve_cell(&p).unwrap();
        // in 1D the periodic cell problem is solved exactly by the harmonic mean
        assert!((sol.f_t - 1.6).abs() < 1e-9, "{}", sol.f_t);
    }

    #[test]
    fn invalid_problems() {
        let tp = IntegrandSpec::two_phase_quadratic();
        assert!(solve_cell(&CellProblem::new(tp.clone(), vec![1.0], 0, 16)).is_err());
        assert!(solve_cell(&CellProblem::new(tp.clone(), vec![1.0], 1, 4)).is_err());
        assert!(solve_cell(&CellProblem::new(tp.clone(), vec![1.0, 0.0], 1, 16)).is_err());
        let mut p = CellProblem::new(tp, vec![1.0], 1, 16);
        p.solver.restarts = 0;
        assert!(solve_cell(&p).is_err());
    }

    #[test]
    fn table_interpolation() {
        let tp = IntegrandSpec::two_phase_quadratic();
        let grid = xi_tensor_grid(1, 1.0, 0.5);
        let table = hom_table(&tp, &grid, &[1, 2], 16, &SolverConfig::default(), CellBoundary::Zero).unwrap();
        assert_eq!(table.solved_count(), 5);
        let v = table.interpolate(&[0.25]).unwrap();
        let expect = 0.5 * (table.entries[2].f_hom.unwrap() + table.entries[3].f_hom.unwrap());
        assert!((v - expect).abs() < 1e-15);
        assert!(matches!(table.interpolate(&[1.5]), Err(CellError::Extrapolation { .. })));
        let mut csv = Vec::new();
        table.to_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("xi0,t,f_t,converged\n"));
        assert_eq!(text.lines().count(), 1 + 5 * 2);

        let empty = hom_table(&tp, &[], &[1], 16, &SolverConfig::default(), CellBoundary::Zero).unwrap();
        assert!(empty.entries.is_empty());
    }

    #[test]
    fn bilinear_interpolation_is_exact_on_bilinear_data() {
        let grid = xi_tensor_grid(2, 1.0, 0.5);
        let entries = grid
            .iter()
            .map(|x| HomEstimate {
                xi: x.clone(),
                ladder: vec![],
                f_hom: Some(1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]),
                defects: vec![],
                stalled: false,
                failures: 0,
            })
            .collect();
        let table = HomTable {
            xi_grid: grid,
            t_ladder: vec![1],
            resolution: 8,
            solver: SolverConfig::default(),
            boundary: CellBoundary::Zero,
            entries,
        };
        for p in [[0.1, 0.7], [-0.9, -0.3], [1.0, 1.0]] {
            let exact = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
            assert!((table.interpolate(&p).unwrap() - exact).abs() < 1e-14);
        }
    }
}
