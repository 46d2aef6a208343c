//! End-to-end experiments: affine and Dirichlet epsilon sweeps against the
//! homogenized density, manufactured unfolding sequences, and the
//! relaxation cross-check.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cell::{
    build_starts, estimate_f_hom, multistart, solve_cell, CellBoundary, CellError, CellProblem, HomTable,
    LatticeEnergy, SolverConfig, StartKind,
};
use crate::field::{unravel, BoxDomain, Boundary, FieldError, Grid, GridField};
use crate::integrand::{IntegrandError, IntegrandSpec};
use crate::seed::rng_for;
use crate::sum::Accumulator;
use crate::unfold::{decompose, unfold, UnfoldError};
use crate::young::{luxemburg_samples, YoungError, YoungFunction};
use rand::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Integrand(#[from] IntegrandError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
    #[error(transparent)]
    Young(#[from] YoungError),
}

type Result<T> = std::result::Result<T, HarnessError>;

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let text = serde_json::to_vec(config).expect("serializable config");
    hex::encode(Sha256::digest(&text))
}

/// `k` with `eps = 1/k`, or a contract error.
pub fn reciprocal(eps: f64) -> Result<usize> {
    let k = (1.0 / eps).round();
    if !(eps > 0.0) || k < 1.0 || (k * eps - 1.0).abs() > 1e-12 {
        return Err(HarnessError::Contract(format!("epsilon must be 1/k for a positive integer k, got {eps}")));
    }
    Ok(k as usize)
}

fn check_ladder(eps: &[f64]) -> Result<Vec<usize>> {
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::Contract("epsilon ladder must be strictly decreasing".into()));
    }
    eps.iter().map(|&e| reciprocal(e)).collect()
}

/// `ln(g_k / g_{k+1}) / ln(eps_k / eps_{k+1})` for consecutive positive gaps.
pub fn observed_orders(eps: &[f64], gaps: &[f64]) -> Vec<Option<f64>> {
    eps.windows(2)
        .zip(gaps.windows(2))
        .map(|(e, g)| (g[0] > 0.0 && g[1] > 0.0).then(|| (g[0] / g[1]).ln() / (e[0] / e[1]).ln()))
        .collect()
}

/// Least-squares slope of `ln g` against `ln eps`.
pub fn fitted_order(eps: &[f64], gaps: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(gaps)
        .filter(|(_, &g)| g > 0.0)
        .map(|(&e, &g)| (e.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub energy: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// `f_k(xi)` from the cell solver when cross-checked.
    pub cell_value: Option<f64>,
    pub pipeline_gap: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: String,
    pub spec_id: String,
    pub datum_id: String,
    pub reference: f64,
    pub rows: Vec<SweepRow>,
    pub observed_orders: Vec<Option<f64>>,
    pub config_hash: String,
    pub seed: u64,
}

pub const NOISE_BAND: f64 = 1e-4;

impl SweepReport {
    pub fn epsilons(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.epsilon).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    /// Gaps never grow by more than `band * max(|reference|, 1)`.
    pub fn gaps_monotone(&self, band: f64) -> bool {
        let slack = band * self.reference.abs().max(1.0);
        self.rows.windows(2).all(|w| w[1].gap <= w[0].gap + slack)
    }

    /// One row per epsilon.
    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epsilon,energy,reference,gap,relative_gap,cell_value,pipeline_gap,observed_order,converged")?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
        for (k, r) in self.rows.iter().enumerate() {
            let order = if k == 0 { None } else { self.observed_orders[k - 1] };
            writeln!(
                w,
                "{:?},{:?},{:?},{:?},{:?},{},{},{},{}",
                r.epsilon,
                r.energy,
                self.reference,
                r.gap,
                r.relative_gap,
                opt(r.cell_value),
                opt(r.pipeline_gap),
                opt(order),
                r.converged
            )?;
        }
        Ok(())
    }
}

fn spec_id(spec: &IntegrandSpec) -> String {
    spec.name().map_or_else(|| config_hash(spec)[..12].to_string(), str::to_string)
}

fn omega_coefficients(spec: &IntegrandSpec, cells: &[usize], h: f64, eps: f64) -> Vec<f64> {
    let n = cells.len();
    (0..cells.iter().product())
        .map(|c| {
            let idx = unravel(c, cells);
            let y: Vec<f64> = (0..n).map(|a| (idx[a] as f64 + 0.5) * h / eps).collect();
            spec.coefficient_at(&y)
        })
        .collect()
}

fn boundary_mask(nodes: &[usize], block: usize) -> Vec<bool> {
    (0..nodes.iter().product())
        .map(|k| {
            let idx = unravel(k, nodes);
            (0..nodes.len()).any(|a| idx[a] % block == 0 || idx[a] == nodes[a] - 1)
        })
        .collect()
}

/// Minimizes `int_Omega f(x/eps, xi + grad phi)` over zero-boundary `phi` on
/// `Omega = (0,1)^N` with `resolution` grid cells per eps-cell, and
/// compares with `f_k(xi)` from the cell solver (`eps = 1/k`) and with the
/// reference `f_hom(xi)`. Without a reference, `f_hom` is estimated on the
/// ladder `1, 2, 4, ..` up to twice the largest `k`.
pub fn eps_sweep_affine(
    spec: &IntegrandSpec,
    xi: &[f64],
    eps_ladder: &[f64],
    resolution: usize,
    solver: &SolverConfig,
    reference: Option<f64>,
) -> Result<SweepReport> {
    let ks = check_ladder(eps_ladder)?;
    if xi.len() != spec.dims().len() {
        return Err(HarnessError::Contract("xi does not match the integrand dims".into()));
    }
    let reference = match reference {
        Some(r) => r,
        None => {
            let kmax = 2 * ks.iter().copied().max().unwrap_or(1);
            let ladder: Vec<usize> = std::iter::successors(Some(1usize), |t| Some(t * 2)).take_while(|&t| t <= kmax).collect();
            estimate_f_hom(spec, xi, &ladder, resolution, solver, CellBoundary::Zero)?
                .f_hom
                .ok_or_else(|| HarnessError::Contract("no ladder entry solved for the reference".into()))?
        }
    };
    let n = spec.dims().n;
    let rows = eps_ladder
        .par_iter()
        .zip(&ks)
        .map(|(&eps, &k)| -> Result<SweepRow> {
            let cells = vec![resolution * k; n];
            let h = 1.0 / (resolution * k) as f64;
            let coef = omega_coefficients(spec, &cells, h, eps);
            let nodes: Vec<usize> = cells.iter().map(|c| c + 1).collect();
            let fixed = boundary_mask(&nodes, resolution * k);
            let node_count: usize = nodes.iter().product();
            let energy = LatticeEnergy::new(
                cells,
                vec![h; n],
                false,
                spec.dims().d,
                coef,
                xi.to_vec(),
                spec.potential().clone(),
                1.0,
                &fixed,
                vec![0.0; node_count * spec.dims().d],
            );
            let problem = CellProblem::new(spec.clone(), xi.to_vec(), k, resolution).with_solver(*solver);
            let starts: Vec<(StartKind, Vec<f64>)> = build_starts(&problem, energy.nodes(), &[])
                .into_iter()
                .map(|(kind, u)| (kind, u.into_iter().map(|v| v * eps).collect()))
                .collect();
            let result = multistart(&energy, &starts, solver)?;
            let cell = solve_cell(&problem)?;
            let gap = (result.energy - reference).abs();
            Ok(SweepRow {
                epsilon: eps,
                energy: result.energy,
                gap,
                relative_gap: gap / reference.abs().max(f64::MIN_POSITIVE),
                cell_value: Some(cell.f_t),
                pipeline_gap: Some((result.energy - cell.f_t).abs() / cell.f_t.abs().max(1e-300)),
                converged: result.converged && cell.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let echo = serde_json::json!({
        "kind": "eps_sweep_affine",
        "spec": spec,
        "xi": xi,
        "eps_ladder": eps_ladder,
        "resolution": resolution,
        "solver": solver,
        "reference": reference,
    });
    Ok(SweepReport {
        kind: "eps_sweep_affine".into(),
        spec_id: spec_id(spec),
        datum_id: format!("affine{xi:?}"),
        reference,
        observed_orders: observed_orders(eps_ladder, &gaps),
        rows,
        config_hash: config_hash(&echo),
        seed: solver.seed,
    })
}

/// Smooth boundary data `u : (0,1)^N -> R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Datum {
    /// `u_i(x) = sum_k xi[i N + k] x_k`
    Affine { xi: Vec<f64> },
    /// `u(x) = c |x|^2 / 2`
    Quadratic { coefficient: f64 },
    /// `u(x) = amplitude prod_k sin(pi m x_k) / (pi m)`
    Sine { amplitude: f64, wavenumber: f64 },
}

impl Datum {
    pub fn id(&self) -> String {
        match self {
            Datum::Affine { xi } => format!("affine{xi:?}"),
            Datum::Quadratic { coefficient } => format!("quadratic({coefficient})"),
            Datum::Sine { amplitude, wavenumber } => format!("sine({amplitude},{wavenumber})"),
        }
    }

    pub fn components(&self, n: usize) -> usize {
        match self {
            Datum::Affine { xi } => xi.len() / n,
            _ => 1,
        }
    }

    pub fn value(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        match self {
            Datum::Affine { xi } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..n).map(|k| xi[i * n + k] * x[k]).sum();
                }
            }
            Datum::Quadratic { coefficient } => out[0] = 0.5 * coefficient * x.iter().map(|v| v * v).sum::<f64>(),
            Datum::Sine { amplitude, wavenumber } => {
                let w = std::f64::consts::PI * wavenumber;
                out[0] = amplitude * x.iter().map(|&v| (w * v).sin()).product::<f64>() / w;
            }
        }
    }

    /// `grad u` as a `d x N` row-major matrix.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        match self {
            Datum::Affine { xi } => out.copy_from_slice(&xi[..out.len()]),
            Datum::Quadratic { coefficient } => {
                for k in 0..n {
                    out[k] = coefficient * x[k];
                }
            }
            Datum::Sine { amplitude, wavenumber } => {
                let w = std::f64::consts::PI * wavenumber;
                for k in 0..n {
                    let mut p = amplitude * (w * x[k]).cos();
                    for (j, &v) in x.iter().enumerate() {
                        if j != k {
                            p *= (w * v).sin();
                        }
                    }
                    out[k] = p;
                }
            }
        }
    }
}

/// Competitor class for the Dirichlet sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Competitors {
    /// `u = datum` on the boundary of `Omega` only.
    Whole,
    /// `u - datum` vanishes on the faces of blocks of `size^N` eps-cells.
    Blocks { size: usize },
}

impl Default for Competitors {
    fn default() -> Self {
        Competitors::Blocks { size: 1 }
    }
}

/// `int_Omega f_hom(grad u)` by the midpoint rule on `cells^N`, with
/// `f_hom` interpolated from `table`.
pub fn homogenized_energy(table: &HomTable, datum: &Datum, n: usize, cells: usize) -> Result<f64> {
    let grid = Grid::uniform(BoxDomain::unit(n), cells)?;
    let m = datum.components(n) * n;
    let mut g = vec![0.0; m];
    let mut acc = Accumulator::new();
    for x in grid.cell_centers() {
        datum.gradient(&x, &mut g);
        acc.add(table.interpolate(&g)?);
    }
    Ok(acc.value() * grid.cell_volume())
}

/// Minimizes `int_Omega f(x/eps, grad u)` over `u = datum + phi` with `phi`
/// in the chosen competitor class, and compares with `int f_hom(grad datum)`.
#[allow(clippy::too_many_arguments)]
pub fn dirichlet_minimize(
    spec: &IntegrandSpec,
    datum: &Datum,
    table: &HomTable,
    eps_ladder: &[f64],
    resolution: usize,
    solver: &SolverConfig,
    competitors: Competitors,
) -> Result<SweepReport> {
    let ks = check_ladder(eps_ladder)?;
    let n = spec.dims().n;
    let d = spec.dims().d;
    if datum.components(n) != d {
        return Err(HarnessError::Contract("datum does not match the integrand dims".into()));
    }
    let finest = resolution * ks.iter().copied().max().unwrap_or(1);
    let reference = homogenized_energy(table, datum, n, finest)?;
    let rows = eps_ladder
        .par_iter()
        .zip(&ks)
        .map(|(&eps, &k)| -> Result<SweepRow> {
            let r = resolution * k;
            let block = match competitors {
                Competitors::Whole => r,
                Competitors::Blocks { size } => {
                    if size == 0 || k % size != 0 {
                        return Err(HarnessError::Contract(format!("block size {size} does not divide {k}")));
                    }
                    resolution * size
                }
            };
            let cells = vec![r; n];
            let h = 1.0 / r as f64;
            let nodes: Vec<usize> = cells.iter().map(|c| c + 1).collect();
            let node_count: usize = nodes.iter().product();
            let mut u_d = vec![0.0; node_count * d];
            for node in 0..node_count {
                let idx = unravel(node, &nodes);
                let x: Vec<f64> = (0..n).map(|a| idx[a] as f64 * h).collect();
                datum.value(&x, &mut u_d[node * d..(node + 1) * d]);
            }
            let energy = LatticeEnergy::new(
                cells.clone(),
                vec![h; n],
                false,
                d,
                omega_coefficients(spec, &cells, h, eps),
                vec![0.0; n * d],
                spec.potential().clone(),
                1.0,
                &boundary_mask(&nodes, block),
                u_d.clone(),
            );
            let mut starts = vec![(StartKind::Zero, u_d.clone())];
            let mut rng = rng_for(solver.seed, &[k as u64, 0x4449_5249]);
            for _ in 1..solver.restarts {
                let u: Vec<f64> = u_d.iter().map(|v| v + eps * rng.gen_range(-0.5..0.5)).collect();
                starts.push((StartKind::Fourier, u));
            }
            let result = multistart(&energy, &starts, solver)?;
            let gap = (result.energy - reference).abs();
            Ok(SweepRow {
                epsilon: eps,
                energy: result.energy,
                gap,
                relative_gap: gap / reference.abs().max(f64::MIN_POSITIVE),
                cell_value: None,
                pipeline_gap: None,
                converged: result.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let echo = serde_json::json!({
        "kind": "dirichlet",
        "spec": spec,
        "datum": datum,
        "eps_ladder": eps_ladder,
        "resolution": resolution,
        "solver": solver,
        "competitors": competitors,
        "table_xi": table.xi_grid,
        "table_f_hom": table.f_hom(),
    });
    Ok(SweepReport {
        kind: "dirichlet".into(),
        spec_id: spec_id(spec),
        datum_id: datum.id(),
        reference,
        observed_orders: observed_orders(eps_ladder, &gaps),
        rows,
        config_hash: config_hash(&echo),
        seed: solver.seed,
    })
}

/// Macroscopic part `v` of a manufactured sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MacroField {
    Zero,
    /// `|x|^2 / 2`
    HalfSquare,
}

impl MacroField {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            MacroField::Zero => 0.0,
            MacroField::HalfSquare => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = match self {
                MacroField::Zero => 0.0,
                MacroField::HalfSquare => v,
            };
        }
    }
}

/// Periodic corrector `V(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Corrector {
    Zero,
    /// `sin(2 pi y_0)`
    SinY,
    /// `x_0 sin(2 pi y_0) / (2 pi)`
    XSinY,
}

impl Corrector {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let s = (std::f64::consts::TAU * y[0]).sin();
        match self {
            Corrector::Zero => 0.0,
            Corrector::SinY => s,
            Corrector::XSinY => x[0] * s / std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedReport {
    pub macro_field: MacroField,
    pub corrector: Corrector,
    pub epsilons: Vec<f64>,
    /// Luxemburg distance on the interior cells times `Y`.
    pub errors: Vec<f64>,
    pub sup_errors: Vec<f64>,
    pub observed_orders: Vec<Option<f64>>,
    pub fitted_order: Option<f64>,
    pub y_res: usize,
}

/// Builds `v_h = v + eps V(x, x/eps)` at the nodes of a grid with `y_res`
/// cells per eps-cell, unfolds its forward-difference gradient and
/// measures the distance to `grad v(x) + D_y V(x, y)`, where `D_y` is the
/// forward difference on the `y_res` grid of `Y`.
pub fn manufactured_unfolding_check(
    macro_field: MacroField,
    corrector: Corrector,
    n: usize,
    eps_ladder: &[f64],
    y_res: usize,
    b: &YoungFunction,
    tol: f64,
) -> Result<ManufacturedReport> {
    let ks = check_ladder(eps_ladder)?;
    if !(1..=2).contains(&n) || y_res < 2 {
        return Err(HarnessError::Contract("need N in {1, 2} and y_res >= 2".into()));
    }
    let results = eps_ladder
        .par_iter()
        .zip(&ks)
        .map(|(&eps, &k)| -> Result<(f64, f64)> {
            let grid = Grid::uniform(BoxDomain::unit(n), y_res * k)?;
            let vh = GridField::sample_scalar(&grid, Boundary::Free, |x| {
                let y: Vec<f64> = x.iter().map(|&v| v / eps).collect();
                macro_field.value(x) + eps * corrector.value(x, &y)
            })?;
            let dec = decompose(&grid, eps)?;
            let t = unfold(&vh.gradient()?, &dec, y_res)?;
            let yc = t.y_cells();
            let mut diff = Vec::with_capacity(grid.cell_count() * yc);
            let mut sup = 0.0_f64;
            let mut gv = vec![0.0; n];
            let ydims = vec![y_res; n];
            for (c, x) in grid.cell_centers().iter().enumerate() {
                if !dec.is_interior(c) {
                    continue;
                }
                macro_field.gradient(x, &mut gv);
                for j in 0..yc {
                    let jdx = unravel(j, &ydims);
                    let y0: Vec<f64> = (0..n).map(|a| jdx[a] as f64 / y_res as f64).collect();
                    let v0 = corrector.value(x, &y0);
                    let mut sq = 0.0;
                    for a in 0..n {
                        let mut y1 = y0.clone();
                        y1[a] += 1.0 / y_res as f64;
                        let target = gv[a] + y_res as f64 * (corrector.value(x, &y1) - v0);
                        let e = t.value(c, j)[a] - target;
                        sq += e * e;
                    }
                    let m = sq.sqrt();
                    sup = sup.max(m);
                    diff.push(m);
                }
            }
            let err = luxemburg_samples(b, &diff, t.weight(), tol)?;
            Ok((err, sup))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = results.iter().map(|r| r.0).collect();
    Ok(ManufacturedReport {
        macro_field,
        corrector,
        epsilons: eps_ladder.to_vec(),
        observed_orders: observed_orders(eps_ladder, &errors),
        fitted_order: fitted_order(eps_ladder, &errors),
        sup_errors: results.iter().map(|r| r.1).collect(),
        errors,
        y_res,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRow {
    pub xi: f64,
    pub f_hom: Option<f64>,
    pub f_hom_relaxed: Option<f64>,
    pub discrepancy: Option<f64>,
    /// `discrepancy / max(|f_hom|, |f_hom_relaxed|, floor)`.
    pub relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub spec_id: String,
    pub rows: Vec<RelaxationRow>,
    pub floor: f64,
    pub config_hash: String,
    pub seed: u64,
}

impl RelaxationReport {
    pub fn max_relative(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.relative).collect::<Option<Vec<f64>>>().map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSampling {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for EnvelopeSampling {
    fn default() -> Self {
        EnvelopeSampling { lo: -3.0, hi: 3.0, samples: 601 }
    }
}

/// Runs the `f_hom` estimate on `f` and on `f` with its potential replaced
/// by the scalar convex envelope, per `xi`.
pub fn relaxation_equivalence_check(
    spec: &IntegrandSpec,
    xi_samples: &[f64],
    ladder: &[usize],
    resolution: usize,
    solver: &SolverConfig,
    sampling: EnvelopeSampling,
    floor: f64,
) -> Result<RelaxationReport> {
    if spec.dims().len() != 1 {
        return Err(HarnessError::Contract("relaxation check needs d = N = 1".into()));
    }
    let relaxed = spec.relaxed(sampling.lo, sampling.hi, sampling.samples)?;
    let rows = xi_samples
        .par_iter()
        .map(|&xi| -> Result<RelaxationRow> {
            let a = estimate_f_hom(spec, &[xi], ladder, resolution, solver, CellBoundary::Zero)?.f_hom;
            let b = estimate_f_hom(&relaxed, &[xi], ladder, resolution, solver, CellBoundary::Zero)?.f_hom;
            let discrepancy = a.zip(b).map(|(a, b)| (a - b).abs());
            let relative = a.zip(b).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor));
            Ok(RelaxationRow { xi, f_hom: a, f_hom_relaxed: b, discrepancy, relative })
        })
        .collect::<Result<Vec<_>>>()?;
    let echo = serde_json::json!({
        "kind": "relaxation",
        "spec": spec,
        "xi": xi_samples,
        "ladder": ladder,
        "resolution": resolution,
        "solver": solver,
        "sampling": sampling,
        "floor": floor,
    });
    Ok(RelaxationReport { spec_id: spec_id(spec), rows, floor, config_hash: config_hash(&echo), seed: solver.seed })
}
