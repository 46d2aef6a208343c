//! Regular grids on boxes in one or two dimensions, fields sampled on them,
//! forward-difference gradients and midpoint quadrature.
//!
//! Multi-indices are stored row-major (axis 0 slowest) with components
//! interleaved per node or cell.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sum::Accumulator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite value {value} at flat index {index}")]
    Data { index: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub const MAX_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, FieldError> {
        if lower.is_empty() || lower.len() > MAX_DIM || lower.len() != upper.len() {
            return Err(FieldError::Shape(format!(
                "box corners must have equal length 1 or 2, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u))
        {
            return Err(FieldError::Contract(
                "box needs finite lower < upper on every axis".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// `(0,1)^n`.
    pub fn unit(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![1.0; n]).expect("unit box")
    }

    /// `(0,t)^n`.
    pub fn cube(n: usize, t: f64) -> Result<Self, FieldError> {
        Self::new(vec![0.0; n], vec![t; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.width(i).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: BoxDomain,
    resolution: Vec<usize>,
}

impl Grid {
    pub fn new(domain: BoxDomain, resolution: Vec<usize>) -> Result<Self, FieldError> {
        if resolution.len() != domain.dim() {
            return Err(FieldError::Shape(format!(
                "resolution has {} axes, box has {}",
                resolution.len(),
                domain.dim()
            )));
        }
        if resolution.iter().any(|&r| r == 0) {
            return Err(FieldError::Contract("resolution must be positive".into()));
        }
        Ok(Self { domain, resolution })
    }

    /// Same resolution on every axis.
    pub fn uniform(domain: BoxDomain, res: usize) -> Result<Self, FieldError> {
        let n = domain.dim();
        Self::new(domain, vec![res; n])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.resolution[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.spacing(i)).product()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// Per-axis node counts: `res` when periodic, `res + 1` otherwise.
    pub fn node_dims(&self, boundary: Boundary) -> Vec<usize> {
        self.resolution
            .iter()
            .map(|&r| if boundary == Boundary::Periodic { r } else { r + 1 })
            .collect()
    }

    pub fn node_coordinate(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.domain.lower[i] + idx[i] as f64 * self.spacing(i))
            .collect()
    }

    pub fn cell_center(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.domain.lower[i] + (idx[i] as f64 + 0.5) * self.spacing(i))
            .collect()
    }

    /// Cell centers in flat order.
    pub fn cell_centers(&self) -> Vec<Vec<f64>> {
        (0..self.cell_count())
            .map(|c| self.cell_center(&unravel(c, &self.resolution)))
            .collect()
    }
}

/// Flat row-major index to multi-index (unused axes are zero).
#[inline]
pub fn unravel(mut flat: usize, dims: &[usize]) -> [usize; MAX_DIM] {
    let mut out = [0; MAX_DIM];
    for axis in (0..dims.len()).rev() {
        out[axis] = flat % dims[axis];
        flat /= dims[axis];
    }
    out
}

#[inline]
pub fn ravel(idx: &[usize], dims: &[usize]) -> usize {
    dims.iter().zip(idx).fold(0, |acc, (&d, &i)| acc * d + i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Zero,
    Periodic,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Node,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Grid,
    components: usize,
    boundary: Boundary,
    location: Location,
    values: Vec<f64>,
}

const ZERO_BOUNDARY_SLACK: f64 = 1e-12;

impl GridField {
    /// Samples `f` at the nodes. For zero-boundary fields the boundary
    /// values must already vanish (within 1e-12) and are snapped to zero.
    pub fn sample(
        grid: &Grid,
        boundary: Boundary,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Result<Self, FieldError> {
        check_components(components)?;
        let dims = grid.node_dims(boundary);
        let count: usize = dims.iter().product();
        let mut values = vec![0.0; count * components];
        for n in 0..count {
            let idx = unravel(n, &dims);
            let x = grid.node_coordinate(&idx[..grid.dim()]);
            f(&x, &mut values[n * components..(n + 1) * components]);
        }
        let mut field = Self {
            grid: grid.clone(),
            components,
            boundary,
            location: Location::Node,
            values,
        };
        field.check_finite()?;
        if boundary == Boundary::Zero {
            field.snap_zero_boundary()?;
        }
        Ok(field)
    }

    /// Scalar convenience wrapper around [`GridField::sample`].
    pub fn sample_scalar(
        grid: &Grid,
        boundary: Boundary,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self, FieldError> {
        Self::sample(grid, boundary, 1, |x, out| out[0] = f(x))
    }

    /// Samples `f` at cell centers.
    pub fn sample_cells(
        grid: &Grid,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Result<Self, FieldError> {
        check_components(components)?;
        let count = grid.cell_count();
        let mut values = vec![0.0; count * components];
        for c in 0..count {
            let x = grid.cell_center(&unravel(c, grid.resolution())[..grid.dim()]);
            f(&x, &mut values[c * components..(c + 1) * components]);
        }
        let field = Self {
            grid: grid.clone(),
            components,
            boundary: Boundary::Free,
            location: Location::Cell,
            values,
        };
        field.check_finite()?;
        Ok(field)
    }

    pub fn from_values(
        grid: Grid,
        components: usize,
        boundary: Boundary,
        location: Location,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        if components == 0 {
            return Err(FieldError::Shape("at least one component is required".into()));
        }
        let sites = match location {
            Location::Node => grid.node_dims(boundary).iter().product::<usize>(),
            Location::Cell => grid.cell_count(),
        };
        if values.len() != sites * components {
            return Err(FieldError::Shape(format!(
                "expected {} values, got {}",
                sites * components,
                values.len()
            )));
        }
        let field = Self {
            grid,
            components,
            boundary,
            location,
            values,
        };
        field.check_finite()?;
        if boundary == Boundary::Zero && location == Location::Node {
            field.check_zero_boundary()?;
        }
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn location(&self) -> Location {
        self.location
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Per-axis site counts for this field's location.
    pub fn site_dims(&self) -> Vec<usize> {
        match self.location {
            Location::Node => self.grid.node_dims(self.boundary),
            Location::Cell => self.grid.resolution().to_vec(),
        }
    }

    fn check_finite(&self) -> Result<(), FieldError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(FieldError::Data {
                index,
                value: self.values[index],
            }),
            None => Ok(()),
        }
    }

    fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let dims = self.grid.node_dims(Boundary::Zero);
        let n = self.grid.dim();
        (0..dims.iter().product::<usize>()).filter(move |&k| {
            let idx = unravel(k, &dims);
            (0..n).any(|a| idx[a] == 0 || idx[a] == dims[a] - 1)
        })
    }

    fn check_zero_boundary(&self) -> Result<(), FieldError> {
        let d = self.components;
        for node in self.boundary_nodes() {
            if self.values[node * d..(node + 1) * d].iter().any(|&v| v != 0.0) {
                return Err(FieldError::Contract(format!(
                    "zero-boundary field is nonzero at boundary node {node}"
                )));
            }
        }
        Ok(())
    }

    fn snap_zero_boundary(&mut self) -> Result<(), FieldError> {
        let d = self.components;
        let nodes: Vec<usize> = self.boundary_nodes().collect();
        for node in nodes {
            for v in &mut self.values[node * d..(node + 1) * d] {
                if v.abs() > ZERO_BOUNDARY_SLACK {
                    return Err(FieldError::Contract(format!(
                        "zero-boundary sample is {v} at boundary node {node}"
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(())
    }

    /// Values at cell centers. Nodal fields are averaged over the cell's
    /// corners, which is the multilinear interpolant at the center.
    pub fn cell_values(&self) -> Vec<f64> {
        if self.location == Location::Cell {
            return self.values.clone();
        }
        let d = self.components;
        let n = self.grid.dim();
        let res = self.grid.resolution();
        let node_dims = self.grid.node_dims(self.boundary);
        let corners = 1usize << n;
        let mut out = vec![0.0; self.grid.cell_count() * d];
        for c in 0..self.grid.cell_count() {
            let idx = unravel(c, res);
            for corner in 0..corners {
                let mut node = [0usize; MAX_DIM];
                for a in 0..n {
                    let step = (corner >> a) & 1;
                    node[a] = (idx[a] + step) % node_dims[a];
                }
                let k = ravel(&node[..n], &node_dims);
                for comp in 0..d {
                    out[c * d + comp] += self.values[k * d + comp];
                }
            }
            for comp in 0..d {
                out[c * d + comp] /= corners as f64;
            }
        }
        out
    }

    /// Euclidean norm of the component vector at each cell center.
    pub fn cell_magnitudes(&self) -> Vec<f64> {
        let d = self.components;
        self.cell_values()
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

    /// Forward differences `(u(node + e_i) - u(node)) / h_i`, stored at the
    /// cell whose lower corner is `node`. Components are ordered
    /// `[component][axis]`. Periodic fields wrap.
    pub fn gradient(&self) -> Result<GridField, FieldError> {
        if self.location == Location::Cell {
            return Err(FieldError::Contract(
                "gradient of cell-centered data needs a ghost policy; sample at nodes".into(),
            ));
        }
        let n = self.grid.dim();
        if self.grid.resolution().iter().any(|&r| r < 2) {
            return Err(FieldError::Contract("gradient needs resolution >= 2".into()));
        }
        let d = self.components;
        let res = self.grid.resolution();
        let node_dims = self.grid.node_dims(self.boundary);
        let inv_h: Vec<f64> = (0..n).map(|a| 1.0 / self.grid.spacing(a)).collect();
        let out_comps = d * n;
        let mut out = vec![0.0; self.grid.cell_count() * out_comps];
        for c in 0..self.grid.cell_count() {
            let idx = unravel(c, res);
            let base = ravel(&idx[..n], &node_dims);
            for a in 0..n {
                let mut next = idx;
                next[a] = (idx[a] + 1) % node_dims[a];
                let k = ravel(&next[..n], &node_dims);
                for comp in 0..d {
                    out[c * out_comps + comp * n + a] =
                        (self.values[k * d + comp] - self.values[base * d + comp]) * inv_h[a];
                }
            }
        }
        Ok(GridField {
            grid: self.grid.clone(),
            components: out_comps,
            boundary: Boundary::Free,
            location: Location::Cell,
            values: out,
        })
    }

    /// Midpoint rule for each component.
    pub fn integrate_components(&self) -> Vec<f64> {
        let d = self.components;
        let vol = self.grid.cell_volume();
        let cells = self.cell_values();
        (0..d)
            .map(|comp| {
                let mut acc = Accumulator::new();
                for v in cells.iter().skip(comp).step_by(d) {
                    acc.add(*v);
                }
                acc.value() * vol
            })
            .collect()
    }

    /// Midpoint rule for a scalar field.
    pub fn integrate(&self) -> Result<f64, FieldError> {
        if self.components != 1 {
            return Err(FieldError::Shape(format!(
                "integrate expects a scalar field, got {} components",
                self.components
            )));
        }
        Ok(self.integrate_components()[0])
    }

    pub fn scaled(&self, c: f64) -> GridField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a * self + b * other`; both fields must share grid, layout and location.
    pub fn combine(&self, a: f64, other: &GridField, b: f64) -> Result<GridField, FieldError> {
        if self.grid != other.grid
            || self.components != other.components
            || self.location != other.location
            || self.values.len() != other.values.len()
        {
            return Err(FieldError::Shape("fields are not on the same layout".into()));
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = a * *v + b * w;
        }
        if other.boundary != self.boundary {
            out.boundary = Boundary::Free;
        }
        Ok(out)
    }

    /// CSV dump: one row per site with its coordinates then components.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.grid.dim();
        let d = self.components;
        let axes = ["x0", "x1"];
        let header: Vec<String> = axes[..n]
            .iter()
            .map(|s| s.to_string())
            .chain((0..d).map(|c| format!("u{c}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        let dims = self.site_dims();
        for s in 0..dims.iter().product::<usize>() {
            let idx = unravel(s, &dims);
            let x = match self.location {
                Location::Node => self.grid.node_coordinate(&idx[..n]),
                Location::Cell => self.grid.cell_center(&idx[..n]),
            };
            let row: Vec<String> = x
                .iter()
                .chain(&self.values[s * d..(s + 1) * d])
                .map(|v| format!("{v:?}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Flat little-endian `f64` dump in storage order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

fn check_components(components: usize) -> Result<(), FieldError> {
    if components == 0 {
        return Err(FieldError::Shape("at least one component is required".into()));
    }
    Ok(())
}
