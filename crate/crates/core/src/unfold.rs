//! Discrete periodic unfolding.
//!
//! `Omega` is a box carrying a cell grid of spacing `h`; the reference cell
//! is `Y = (0,1)^N` with `|Y| = 1`. The unfolding of a cell-centered field
//! `w` is sampled at `(x-cell, y-cell)` pairs:
//!
//! ```text
//! T_eps(w)(x, y) = w(eps [x/eps] + eps y)   for x in the interior union of eps-cells
//!                = 0                        on the boundary layer
//! ```
//!
//! When `eps / h` is an integer `m`, the lattice `eps Z^N` lands on grid
//! lines and the y-grid has `m` cells per axis, every `eps [x/eps] + eps y`
//! is a cell center of the `Omega` grid and unfolding is a re-indexing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ravel, unravel, FieldError, Grid, GridField, Location, Boundary, MAX_DIM};
use crate::sum::Accumulator;
use crate::young::{luxemburg_samples, YoungError, YoungFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("grid is not aligned with eps = {epsilon}; the identity is only exact on aligned lattices")]
    Misaligned { epsilon: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Young(#[from] YoungError),
}

const ALIGN_TOL: f64 = 1e-9;

/// `Omega = interior union of eps-cells  +  boundary layer`, as cell masks
/// over the grid. Cells straddling the boundary of the interior union are
/// attributed to the boundary layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDecomposition {
    epsilon: f64,
    grid: Grid,
    /// Inclusive integer range of admissible lattice indices per axis.
    xi_range: Vec<(i64, i64)>,
    interior: Vec<bool>,
    measure_lambda: f64,
    empty: bool,
    /// Grid cells per eps-cell along each axis, when the lattice is aligned.
    cells_per_eps: Option<Vec<usize>>,
}

impl EpsilonDecomposition {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn xi_set(&self) -> Vec<Vec<i64>> {
        if self.empty {
            return Vec::new();
        }
        let n = self.grid.dim();
        let dims: Vec<usize> = self
            .xi_range
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as usize)
            .collect();
        (0..dims.iter().product::<usize>())
            .map(|k| {
                let idx = unravel(k, &dims);
                (0..n).map(|a| self.xi_range[a].0 + idx[a] as i64).collect()
            })
            .collect()
    }

    pub fn xi_count(&self) -> usize {
        if self.empty {
            0
        } else {
            self.xi_range
                .iter()
                .map(|&(lo, hi)| (hi - lo + 1) as usize)
                .product()
        }
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, cell: usize) -> bool {
        self.interior[cell]
    }

    pub fn measure_lambda(&self) -> f64 {
        self.measure_lambda
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn cells_per_eps(&self) -> Option<&[usize]> {
        self.cells_per_eps.as_deref()
    }

    /// Aligned with a y-grid of `y_res` cells per axis.
    pub fn aligned_with(&self, y_res: usize) -> bool {
        self.cells_per_eps
            .as_ref()
            .map_or(false, |m| m.iter().all(|&k| k == y_res))
    }

    /// The common cells-per-eps count, when aligned and isotropic.
    pub fn natural_y_res(&self) -> Option<usize> {
        let m = self.cells_per_eps.as_ref()?;
        m.iter().all(|&k| k == m[0]).then_some(m[0])
    }

    fn lattice_index(&self, x: f64) -> i64 {
        (x / self.epsilon).floor() as i64
    }
}

/// Builds the interior lattice set and masks for `eps` over `grid`'s box.
/// Returns a flagged empty decomposition when no eps-cell fits.
pub fn decompose(grid: &Grid, epsilon: f64) -> Result<EpsilonDecomposition, UnfoldError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(UnfoldError::Contract(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = grid.dim();
    let dom = grid.domain();
    let xi_range: Vec<(i64, i64)> = (0..n)
        .map(|a| {
            let lo = (dom.lower()[a] / epsilon - ALIGN_TOL).ceil() as i64;
            let hi = (dom.upper()[a] / epsilon - 1.0 + ALIGN_TOL).floor() as i64;
            (lo, hi)
        })
        .collect();
    let empty = xi_range.iter().any(|&(lo, hi)| hi < lo);

    let res = grid.resolution();
    let interior: Vec<bool> = (0..grid.cell_count())
        .map(|c| {
            if empty {
                return false;
            }
            let x = grid.cell_center(&unravel(c, res)[..n]);
            (0..n).all(|a| {
                let k = (x[a] / epsilon).floor() as i64;
                k >= xi_range[a].0 && k <= xi_range[a].1
            })
        })
        .collect();

    let count: f64 = if empty {
        0.0
    } else {
        xi_range.iter().map(|&(lo, hi)| (hi - lo + 1) as f64).product()
    };
    let measure_lambda = dom.volume() - count * epsilon.powi(n as i32);

    let cells_per_eps = (0..n)
        .map(|a| {
            let h = grid.spacing(a);
            let m = epsilon / h;
            let mr = m.round();
            if mr < 1.0 || (m - mr).abs() > ALIGN_TOL * m {
                return None;
            }
            if !empty {
                let off = (epsilon * xi_range[a].0 as f64 - dom.lower()[a]) / h;
                if (off - off.round()).abs() > ALIGN_TOL * (1.0 + off.abs()) {
                    return None;
                }
            }
            Some(mr as usize)
        })
        .collect::<Option<Vec<usize>>>();

    Ok(EpsilonDecomposition {
        epsilon,
        grid: grid.clone(),
        xi_range,
        interior,
        measure_lambda,
        empty,
        cells_per_eps,
    })
}

/// Values on `(x-cell of Omega) x (y-cell of Y)`, components innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedField {
    epsilon: f64,
    grid: Grid,
    y_res: usize,
    components: usize,
    values: Vec<f64>,
    interior: Vec<bool>,
    approximate: bool,
}

impl UnfoldedField {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn y_res(&self) -> usize {
        self.y_res
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Set when the grid is not aligned with eps and values were taken from
    /// the nearest cell.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn y_cells(&self) -> usize {
        self.y_res.pow(self.grid.dim() as u32)
    }

    /// Quadrature weight of one `(x-cell, y-cell)` pair.
    pub fn weight(&self) -> f64 {
        self.grid.cell_volume() / self.y_cells() as f64
    }

    /// Center of y-cell `j` in `Y`.
    pub fn y_center(&self, j: usize) -> Vec<f64> {
        let n = self.grid.dim();
        let dims = vec![self.y_res; n];
        let idx = unravel(j, &dims);
        (0..n)
            .map(|a| (idx[a] as f64 + 0.5) / self.y_res as f64)
            .collect()
    }

    pub fn value(&self, x_cell: usize, y_cell: usize) -> &[f64] {
        let d = self.components;
        let k = (x_cell * self.y_cells() + y_cell) * d;
        &self.values[k..k + d]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        magnitudes(&self.values, self.components)
    }

    /// `int int T(w)` per component over `Omega x Y` (with `|Y| = 1`).
    pub fn integrate_components(&self) -> Vec<f64> {
        let d = self.components;
        (0..d)
            .map(|comp| {
                let mut acc = Accumulator::new();
                for v in self.values.iter().skip(comp).step_by(d) {
                    acc.add(*v);
                }
                acc.value() * self.weight()
            })
            .collect()
    }

    /// Dump with columns `x.., y.., u..`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.grid.dim();
        let d = self.components;
        let mut header: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
        header.extend((0..n).map(|a| format!("y{a}")));
        header.extend((0..d).map(|c| format!("u{c}")));
        writeln!(w, "{}", header.join(","))?;
        let res = self.grid.resolution();
        for c in 0..self.grid.cell_count() {
            let x = self.grid.cell_center(&unravel(c, res)[..n]);
            for j in 0..self.y_cells() {
                let row: Vec<String> = x
                    .iter()
                    .chain(&self.y_center(j))
                    .chain(self.value(c, j))
                    .map(|v| format!("{v:?}"))
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

fn magnitudes(values: &[f64], d: usize) -> Vec<f64> {
    values
        .chunks(d)
        .map(|v| {
            if d == 1 {
                v[0].abs()
            } else {
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        })
        .collect()
}

/// Unfolds `w` (nodal fields are first averaged to cell centers).
pub fn unfold(
    w: &GridField,
    dec: &EpsilonDecomposition,
    y_res: usize,
) -> Result<UnfoldedField, UnfoldError> {
    if w.grid() != dec.grid() {
        return Err(UnfoldError::Contract(
            "field and decomposition live on different grids".into(),
        ));
    }
    if y_res == 0 {
        return Err(UnfoldError::Contract("y resolution must be positive".into()));
    }
    let grid = dec.grid();
    let n = grid.dim();
    let res = grid.resolution();
    let d = w.components();
    let cells = w.cell_values();
    let aligned = dec.aligned_with(y_res);
    let y_dims = vec![y_res; n];
    let y_cells = y_res.pow(n as u32);
    let eps = dec.epsilon;
    let lower = grid.domain().lower();
    let h: Vec<f64> = (0..n).map(|a| grid.spacing(a)).collect();

    let mut values = vec![0.0; grid.cell_count() * y_cells * d];
    for c in 0..grid.cell_count() {
        if !dec.interior[c] {
            continue;
        }
        let x = grid.cell_center(&unravel(c, res)[..n]);
        let xi: Vec<i64> = x.iter().map(|&xa| dec.lattice_index(xa)).collect();
        let base: Vec<i64> = (0..n)
            .map(|a| ((eps * xi[a] as f64 - lower[a]) / h[a]).round() as i64)
            .collect();
        for j in 0..y_cells {
            let jdx = unravel(j, &y_dims);
            let mut src = [0usize; MAX_DIM];
            for a in 0..n {
                let idx = if aligned {
                    base[a] + jdx[a] as i64
                } else {
                    let p = eps * xi[a] as f64 + eps * (jdx[a] as f64 + 0.5) / y_res as f64;
                    ((p - lower[a]) / h[a]).floor() as i64
                };
                src[a] = idx.clamp(0, res[a] as i64 - 1) as usize;
            }
            let k = ravel(&src[..n], res);
            let dst = (c * y_cells + j) * d;
            values[dst..dst + d].copy_from_slice(&cells[k * d..(k + 1) * d]);
        }
    }
    Ok(UnfoldedField {
        epsilon: eps,
        grid: grid.clone(),
        y_res,
        components: d,
        values,
        interior: dec.interior.clone(),
        approximate: !aligned,
    })
}

/// Per-cell y-average of an unfolded field.
pub fn mean_value(u: &UnfoldedField) -> GridField {
    let d = u.components;
    let yc = u.y_cells();
    let mut out = vec![0.0; u.grid.cell_count() * d];
    for c in 0..u.grid.cell_count() {
        for comp in 0..d {
            let mut acc = Accumulator::new();
            for j in 0..yc {
                acc.add(u.values[(c * yc + j) * d + comp]);
            }
            out[c * d + comp] = acc.value() / yc as f64;
        }
    }
    GridField::from_values(u.grid.clone(), d, Boundary::Free, Location::Cell, out)
        .expect("mean of finite values")
}

/// Pointwise product of two fields at cell centers.
pub fn pointwise_product(v: &GridField, w: &GridField) -> Result<GridField, UnfoldError> {
    if v.grid() != w.grid() || v.components() != w.components() {
        return Err(UnfoldError::Contract("product of fields on different layouts".into()));
    }
    let a = v.cell_values();
    let b = w.cell_values();
    let prod = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(GridField::from_values(
        v.grid().clone(),
        v.components(),
        Boundary::Free,
        Location::Cell,
        prod,
    )?)
}

/// Largest nodewise gap between `T(v w)` and `T(v) T(w)`.
pub fn product_rule_defect(
    v: &GridField,
    w: &GridField,
    dec: &EpsilonDecomposition,
    y_res: usize,
) -> Result<f64, UnfoldError> {
    let tvw = unfold(&pointwise_product(v, w)?, dec, y_res)?;
    let tv = unfold(v, dec, y_res)?;
    let tw = unfold(w, dec, y_res)?;
    Ok(tvw
        .values
        .iter()
        .zip(tv.values.iter().zip(&tw.values))
        .map(|(p, (a, b))| (p - a * b).abs())
        .fold(0.0, f64::max))
}

/// Modular and norm identities for one field and one eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub epsilon: f64,
    /// `(1/|Y|) int int B(|T w|)`.
    pub lhs: f64,
    /// `int_Omega B(|w|)`.
    pub rhs_full: f64,
    /// `int over the interior union of B(|w|)`.
    pub rhs_interior: f64,
    /// `int over the boundary layer of B(|w|)`.
    pub lambda_gap: f64,
    pub defect: f64,
    pub relative_defect: f64,
    pub norm_unfolded: f64,
    pub norm_interior: f64,
    pub norm_full: f64,
    pub norm_identity_gap: f64,
    /// `lhs <= rhs_full`.
    pub contraction_holds: bool,
    /// `|lhs - rhs_full| <= lambda_gap`.
    pub lambda_bound_holds: bool,
    /// `norm_unfolded <= (1 + |Y|) norm_full`.
    pub norm_estimate_holds: bool,
}

/// Checks the modular identity, its two corollary inequalities, the norm
/// identity `||T w|| = ||w chi||` and the norm estimate on an aligned grid.
pub fn modular_identity_report(
    b: &YoungFunction,
    w: &GridField,
    dec: &EpsilonDecomposition,
    tol: f64,
) -> Result<IdentityReport, UnfoldError> {
    let y_res = dec
        .natural_y_res()
        .ok_or(UnfoldError::Misaligned { epsilon: dec.epsilon })?;
    let tw = unfold(w, dec, y_res)?;
    let vol = w.grid().cell_volume();
    let mags = w.cell_magnitudes();

    let mut lhs = Accumulator::new();
    for m in tw.magnitudes() {
        lhs.add(b.eval(m));
    }
    let lhs = lhs.value() * tw.weight();

    let (mut full, mut inner, mut layer) = (Accumulator::new(), Accumulator::new(), Accumulator::new());
    for (c, &m) in mags.iter().enumerate() {
        let v = b.eval(m);
        full.add(v);
        if dec.interior[c] {
            inner.add(v);
        } else {
            layer.add(v);
        }
    }
    let rhs_full = full.value() * vol;
    let rhs_interior = inner.value() * vol;
    let lambda_gap = layer.value() * vol;
    let defect = (lhs - rhs_interior).abs();
    let scale = lhs.abs().max(rhs_interior.abs());

    let masked: Vec<f64> = mags
        .iter()
        .zip(&dec.interior)
        .map(|(&m, &inside)| if inside { m } else { 0.0 })
        .collect();
    let norm_unfolded = luxemburg_samples(b, &tw.magnitudes(), tw.weight(), tol)?;
    let norm_interior = luxemburg_samples(b, &masked, vol, tol)?;
    let norm_full = luxemburg_samples(b, &mags, vol, tol)?;
    let round = 1e-12 * rhs_full.abs().max(1e-300);

    Ok(IdentityReport {
        epsilon: dec.epsilon,
        lhs,
        rhs_full,
        rhs_interior,
        lambda_gap,
        defect,
        relative_defect: if scale > 0.0 { defect / scale } else { 0.0 },
        norm_unfolded,
        norm_interior,
        norm_full,
        norm_identity_gap: (norm_unfolded - norm_interior).abs(),
        contraction_holds: lhs <= rhs_full + round,
        lambda_bound_holds: (lhs - rhs_full).abs() <= lambda_gap + round,
        norm_estimate_holds: norm_unfolded <= 2.0 * norm_full * (1.0 + 1e-12),
    })
}

/// Boundary-layer mass against the unfolded-integral gap for one eps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UciRecord {
    pub epsilon: f64,
    /// `int over the boundary layer of |w|`.
    pub lambda_mass: f64,
    /// `int over the boundary layer of B(|w|)`.
    pub lambda_modular: f64,
    /// `|int_Omega w - (1/|Y|) int int T(w)|`.
    pub gap: f64,
    pub aligned: bool,
}

/// Runs the integral criterion on a sequence of scalar fields.
pub fn uci_defect(
    b: &YoungFunction,
    seq: &[(f64, GridField)],
) -> Result<Vec<UciRecord>, UnfoldError> {
    seq.iter()
        .map(|(eps, w)| {
            if w.components() != 1 {
                return Err(UnfoldError::Contract("u.c.i. expects scalar fields".into()));
            }
            let dec = decompose(w.grid(), *eps)?;
            let y_res = dec
                .natural_y_res()
                .unwrap_or_else(|| ((eps / w.grid().spacing(0)).round() as usize).max(1));
            let tw = unfold(w, &dec, y_res)?;
            let vol = w.grid().cell_volume();
            let cells = w.cell_values();
            let (mut mass, mut modular) = (Accumulator::new(), Accumulator::new());
            for (c, &v) in cells.iter().enumerate() {
                if !dec.interior[c] {
                    mass.add(v.abs());
                    modular.add(b.eval(v.abs()));
                }
            }
            let whole = w.integrate()?;
            let unfolded = tw.integrate_components()[0];
            Ok(UciRecord {
                epsilon: *eps,
                lambda_mass: mass.value() * vol,
                lambda_modular: modular.value() * vol,
                gap: (whole - unfolded).abs(),
                aligned: !tw.approximate,
            })
        })
        .collect()
}

/// Sup and Luxemburg gaps between `T(w)` and `w` seen as a function on `Omega x Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongGap {
    pub epsilon: f64,
    /// `max |T(w)(x,y) - w(x)|` over interior x-cells.
    pub sup_interior: f64,
    /// `||T(w) - w||_B` over all of `Omega x Y`.
    pub norm: f64,
}

pub fn strong_gap(
    b: &YoungFunction,
    w: &GridField,
    dec: &EpsilonDecomposition,
    y_res: usize,
    tol: f64,
) -> Result<StrongGap, UnfoldError> {
    let tw = unfold(w, dec, y_res)?;
    let d = w.components();
    let cells = w.cell_values();
    let yc = tw.y_cells();
    let mut diff = vec![0.0; tw.values.len()];
    let mut sup = 0.0_f64;
    for c in 0..w.grid().cell_count() {
        for j in 0..yc {
            for comp in 0..d {
                let k = (c * yc + j) * d + comp;
                diff[k] = tw.values[k] - cells[c * d + comp];
            }
            if dec.interior[c] {
                let k = (c * yc + j) * d;
                let m = magnitudes(&diff[k..k + d], d)[0];
                sup = sup.max(m);
            }
        }
    }
    let norm = luxemburg_samples(b, &magnitudes(&diff, d), tw.weight(), tol)?;
    Ok(StrongGap {
        epsilon: dec.epsilon,
        sup_interior: sup,
        norm,
    })
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// `int_Omega v(x) phi(x, x/eps) dx` by the midpoint rule; `phi` receives
/// the reduced fast variable in `Y`.
pub fn two_scale_pairing(
    v: &GridField,
    phi: impl Fn(&[f64], &[f64]) -> f64,
    epsilon: f64,
) -> Result<f64, UnfoldError> {
    if v.components() != 1 {
        return Err(UnfoldError::Contract("pairing expects a scalar field".into()));
    }
    if !(epsilon > 0.0) {
        return Err(UnfoldError::Contract("epsilon must be positive".into()));
    }
    let vals = v.cell_values();
    let mut acc = Accumulator::new();
    for (x, &vx) in v.grid().cell_centers().iter().zip(&vals) {
        let y: Vec<f64> = x.iter().map(|&xa| frac(xa / epsilon)).collect();
        acc.add(vx * phi(x, &y));
    }
    Ok(acc.value() * v.grid().cell_volume())
}

/// `int_Omega int_Y v0(x,y) phi(x,y)` by the midpoint rule on `grid x (y_res)^N`.
pub fn limit_pairing(
    v0: impl Fn(&[f64], &[f64]) -> f64,
    phi: impl Fn(&[f64], &[f64]) -> f64,
    grid: &Grid,
    y_res: usize,
) -> f64 {
    let n = grid.dim();
    let y_dims = vec![y_res; n];
    let yc = y_res.pow(n as u32);
    let ys: Vec<Vec<f64>> = (0..yc)
        .map(|j| {
            let idx = unravel(j, &y_dims);
            (0..n).map(|a| (idx[a] as f64 + 0.5) / y_res as f64).collect()
        })
        .collect();
    let mut acc = Accumulator::new();
    for x in grid.cell_centers() {
        for y in &ys {
            acc.add(v0(&x, y) * phi(&x, y));
        }
    }
    acc.value() * grid.cell_volume() / yc as f64
}

/// Tensor product of a monomial in `x` and a Fourier mode in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunction {
    pub x_powers: [u32; MAX_DIM],
    pub mode: [i32; MAX_DIM],
    pub sine: bool,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let poly: f64 = x
            .iter()
            .zip(&self.x_powers)
            .map(|(&xa, &p)| xa.powi(p as i32))
            .product();
        let phase: f64 = y
            .iter()
            .zip(&self.mode)
            .map(|(&ya, &k)| k as f64 * ya)
            .sum::<f64>()
            * std::f64::consts::TAU;
        poly * if self.sine { phase.sin() } else { phase.cos() }
    }
}

/// Monomials of total degree <= 2 in `x` times `cos`/`sin` of modes of
/// order <= 3 in `y` (one representative per `+-k` pair).
pub fn dictionary(n: usize) -> Vec<TestFunction> {
    assert!((1..=MAX_DIM).contains(&n));
    let mut powers = Vec::new();
    for p0 in 0..=2u32 {
        if n == 1 {
            powers.push([p0, 0]);
        } else {
            for p1 in 0..=(2 - p0) {
                powers.push([p0, p1]);
            }
        }
    }
    let mut modes = Vec::new();
    for k0 in 0..=3i32 {
        if n == 1 {
            modes.push([k0, 0]);
        } else {
            for k1 in -3..=3i32 {
                if k0 > 0 || k1 >= 0 {
                    modes.push([k0, k1]);
                }
            }
        }
    }
    let mut out = Vec::new();
    for &x_powers in &powers {
        for &mode in &modes {
            out.push(TestFunction { x_powers, mode, sine: false });
            if mode != [0, 0] {
                out.push(TestFunction { x_powers, mode, sine: true });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCheckRecord {
    pub epsilon: f64,
    pub max_discrepancy: f64,
    pub worst: TestFunction,
}

/// Max over the dictionary of `|pairing(v_eps) - limit_pairing(v0)|`, per eps.
pub fn dictionary_weak_check(
    seq: &[(f64, GridField)],
    v0: impl Fn(&[f64], &[f64]) -> f64,
    y_res: usize,
) -> Result<Vec<WeakCheckRecord>, UnfoldError> {
    seq.iter()
        .map(|(eps, v)| {
            let dict = dictionary(v.grid().dim());
            let mut worst = (0.0_f64, dict[0]);
            for tf in dict {
                let lhs = two_scale_pairing(v, |x, y| tf.eval(x, y), *eps)?;
                let rhs = limit_pairing(&v0, |x, y| tf.eval(x, y), v.grid(), y_res);
                let gap = (lhs - rhs).abs();
                if gap > worst.0 {
                    worst = (gap, tf);
                }
            }
            Ok(WeakCheckRecord {
                epsilon: *eps,
                max_discrepancy: worst.0,
                worst: worst.1,
            })
        })
        .collect()
}
