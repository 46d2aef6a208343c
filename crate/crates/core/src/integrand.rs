//! Periodic energy densities `f(y, xi) = a(y) W(xi)` and their growth checks.
//!
//! `xi` is a `d x N` matrix stored row-major: `xi[i * N + k] = d u_i / d y_k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_for;
use crate::young::YoungFunction;
use rand::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrandError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite sample {value} at position {index}")]
    Data { index: usize, value: f64 },
    #[error("integrand rejected: {0}")]
    Rejected(String),
}

type Result<T> = std::result::Result<T, IntegrandError>;

/// Lower convex hull of `W` sampled on `n` equispaced points of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexEnvelope {
    xs: Vec<f64>,
    samples: Vec<f64>,
    vertices: Vec<usize>,
}

impl ConvexEnvelope {
    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn sample_points(&self) -> &[f64] {
        &self.xs
    }

    pub fn sample_values(&self) -> &[f64] {
        &self.samples
    }

    /// Sample indices of the hull vertices, increasing.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Hull values at every sample point.
    pub fn hull_values(&self) -> Vec<f64> {
        self.xs.iter().map(|&x| self.eval(x)).collect()
    }

    fn segment(&self, x: f64) -> usize {
        let k = self.vertices.partition_point(|&i| self.xs[i] <= x);
        k.clamp(1, self.vertices.len() - 1) - 1
    }

    /// Piecewise-linear hull; extended linearly past the range.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let (i, j) = (self.vertices[k], self.vertices[k + 1]);
        let s = (self.samples[j] - self.samples[i]) / (self.xs[j] - self.xs[i]);
        self.samples[i] + s * (x - self.xs[i])
    }

    pub fn slope(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let (i, j) = (self.vertices[k], self.vertices[k + 1]);
        (self.samples[j] - self.samples[i]) / (self.xs[j] - self.xs[i])
    }

    /// Whether `x` lies on a segment joining adjacent samples.
    pub fn in_contact(&self, x: f64) -> bool {
        let k = self.segment(x);
        self.vertices[k + 1] == self.vertices[k] + 1
    }

    /// Discrete second differences of the hull at interior vertices.
    pub fn second_differences(&self) -> Vec<f64> {
        self.vertices
            .windows(3)
            .map(|w| {
                let s0 = (self.samples[w[1]] - self.samples[w[0]]) / (self.xs[w[1]] - self.xs[w[0]]);
                let s1 = (self.samples[w[2]] - self.samples[w[1]]) / (self.xs[w[2]] - self.xs[w[1]]);
                s1 - s0
            })
            .collect()
    }
}

/// Lower hull of the samples of `w` by a monotone-chain sweep.
pub fn convex_envelope_1d(
    w: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<ConvexEnvelope> {
    if n < 3 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(IntegrandError::Contract(format!(
            "envelope needs n >= 3 and lo < hi, got n = {n}, [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    let samples: Vec<f64> = xs.iter().map(|&x| w(x)).collect();
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(IntegrandError::Data { index, value });
    }
    let mut vertices: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while vertices.len() >= 2 {
            let (a, b) = (vertices[vertices.len() - 2], vertices[vertices.len() - 1]);
            let cross = (xs[b] - xs[a]) * (samples[k] - samples[a])
                - (samples[b] - samples[a]) * (xs[k] - xs[a]);
            if cross <= 0.0 {
                vertices.pop();
            } else {
                break;
            }
        }
        vertices.push(k);
    }
    Ok(ConvexEnvelope { xs, samples, vertices })
}

/// The `xi`-dependence of the density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub enum Potential {
    /// `|xi|^p`
    Power { p: f64 },
    /// `(|xi|^2 - 1)^2`
    DoubleWell,
    /// `xi^T A xi`, `A` symmetric positive definite of size `dN`.
    Quadratic { matrix: Vec<f64>, size: usize },
    /// Scalar convex envelope of a base potential on a sampled range.
    Relaxed(Box<RelaxedPotential>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPotential {
    base: Potential,
    envelope: ConvexEnvelope,
}

impl RelaxedPotential {
    pub fn base(&self) -> &Potential {
        &self.base
    }

    pub fn envelope(&self) -> &ConvexEnvelope {
        &self.envelope
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PotentialRepr {
    Power { p: f64 },
    DoubleWell,
    Quadratic { matrix: Vec<Vec<f64>> },
    Relaxed { base: Box<PotentialRepr>, range: [f64; 2], samples: usize },
}

impl TryFrom<PotentialRepr> for Potential {
    type Error = IntegrandError;

    fn try_from(r: PotentialRepr) -> Result<Self> {
        match r {
            PotentialRepr::Power { p } => Potential::power(p),
            PotentialRepr::DoubleWell => Ok(Potential::DoubleWell),
            PotentialRepr::Quadratic { matrix } => Potential::quadratic(matrix),
            PotentialRepr::Relaxed { base, range, samples } => {
                Potential::relaxed(Potential::try_from(*base)?, range[0], range[1], samples)
            }
        }
    }
}

impl From<Potential> for PotentialRepr {
    fn from(p: Potential) -> Self {
        match p {
            Potential::Power { p } => PotentialRepr::Power { p },
            Potential::DoubleWell => PotentialRepr::DoubleWell,
            Potential::Quadratic { matrix, size } => PotentialRepr::Quadratic {
                matrix: matrix.chunks(size).map(|r| r.to_vec()).collect(),
            },
            Potential::Relaxed(r) => {
                let (lo, hi) = r.envelope.range();
                PotentialRepr::Relaxed {
                    base: Box::new(r.base.into()),
                    range: [lo, hi],
                    samples: r.envelope.xs.len(),
                }
            }
        }
    }
}

fn cholesky_ok(a: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

fn norm(xi: &[f64]) -> f64 {
    if xi.len() == 1 {
        xi[0].abs()
    } else {
        xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else if p.fract() == 0.0 && p.abs() < 64.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

impl Potential {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(IntegrandError::Contract(format!("power potential needs p > 1, got {p}")));
        }
        Ok(Potential::Power { p })
    }

    pub fn double_well() -> Self {
        Potential::DoubleWell
    }

    pub fn quadratic(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(IntegrandError::Contract("quadratic matrix must be square".into()));
        }
        let matrix: Vec<f64> = rows.into_iter().flatten().collect();
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(IntegrandError::Contract("quadratic matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if matrix[i * n + j] != matrix[j * n + i] {
                    return Err(IntegrandError::Contract("quadratic matrix must be symmetric".into()));
                }
            }
        }
        if !cholesky_ok(&matrix, n) {
            return Err(IntegrandError::Contract(
                "quadratic matrix must be positive definite".into(),
            ));
        }
        Ok(Potential::Quadratic { matrix, size: n })
    }

    /// Replaces a scalar potential by its convex envelope over `[lo, hi]`
    /// sampled at `n` points. Outside the range the base is used.
    pub fn relaxed(base: Potential, lo: f64, hi: f64, n: usize) -> Result<Self> {
        match &base {
            Potential::Relaxed(_) => {
                return Err(IntegrandError::Contract("cannot relax a relaxed potential".into()))
            }
            Potential::Quadratic { size, .. } if *size != 1 => {
                return Err(IntegrandError::Contract("relaxation is scalar only".into()))
            }
            _ => {}
        }
        let envelope = convex_envelope_1d(|x| base.value(&[x]), lo, hi, n)?;
        Ok(Potential::Relaxed(Box::new(RelaxedPotential { base, envelope })))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Potential::Power { .. } => "power",
            Potential::DoubleWell => "double_well",
            Potential::Quadratic { .. } => "quadratic",
            Potential::Relaxed(_) => "relaxed",
        }
    }

    /// Even in `xi`.
    pub fn is_even(&self) -> bool {
        match self {
            Potential::Relaxed(r) => {
                let (lo, hi) = r.envelope.range();
                lo == -hi && r.base.is_even()
            }
            _ => true,
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        match self {
            Potential::Quadratic { size, .. } if *size != len => Err(IntegrandError::Contract(
                format!("quadratic potential of size {size} given xi of length {len}"),
            )),
            Potential::Relaxed(_) if len != 1 => {
                Err(IntegrandError::Contract("relaxed potential is scalar".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, xi: &[f64]) -> f64 {
        match self {
            Potential::Power { p } => pow(norm(xi), *p),
            Potential::DoubleWell => {
                let s: f64 = xi.iter().map(|v| v * v).sum::<f64>() - 1.0;
                s * s
            }
            Potential::Quadratic { matrix, size } => {
                let n = *size;
                let mut acc = 0.0;
                for i in 0..n {
                    let mut row = 0.0;
                    for j in 0..n {
                        row += matrix[i * n + j] * xi[j];
                    }
                    acc += xi[i] * row;
                }
                acc
            }
            Potential::Relaxed(r) => {
                let x = xi[0];
                let (lo, hi) = r.envelope.range();
                if x < lo || x > hi || r.envelope.in_contact(x) {
                    r.base.value(xi)
                } else {
                    r.envelope.eval(x)
                }
            }
        }
    }

    #[inline]
    pub fn gradient(&self, xi: &[f64], out: &mut [f64]) {
        match self {
            Potential::Power { p } => {
                let r = norm(xi);
                if r == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                } else {
                    let c = p * pow(r, p - 2.0);
                    for (o, v) in out.iter_mut().zip(xi) {
                        *o = c * v;
                    }
                }
            }
            Potential::DoubleWell => {
                let s: f64 = xi.iter().map(|v| v * v).sum::<f64>() - 1.0;
                for (o, v) in out.iter_mut().zip(xi) {
                    *o = 4.0 * s * v;
                }
            }
            Potential::Quadratic { matrix, size } => {
                let n = *size;
                for i in 0..n {
                    let mut row = 0.0;
                    for j in 0..n {
                        row += matrix[i * n + j] * xi[j];
                    }
                    out[i] = 2.0 * row;
                }
            }
            Potential::Relaxed(r) => {
                let x = xi[0];
                let (lo, hi) = r.envelope.range();
                if x < lo || x > hi || r.envelope.in_contact(x) {
                    r.base.gradient(xi, out)
                } else {
                    out[0] = r.envelope.slope(x);
                }
            }
        }
    }
}

/// The `y`-dependence of a separable density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: f64 },
    /// Equal-length phases along one axis of `Y`.
    Piecewise { values: Vec<f64>, axis: usize },
    /// `mean + amplitude cos(2 pi y_axis)`
    Trig { mean: f64, amplitude: f64, axis: usize },
}

impl Coefficient {
    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Piecewise { values, axis } => {
                let t = y[*axis].rem_euclid(1.0);
                let k = ((t * values.len() as f64) as usize).min(values.len() - 1);
                values[k]
            }
            Coefficient::Trig { mean, amplitude, axis } => {
                mean + amplitude * (std::f64::consts::TAU * y[*axis].rem_euclid(1.0)).cos()
            }
        }
    }

    pub fn minimum(&self) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Piecewise { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            Coefficient::Trig { mean, amplitude, .. } => mean - amplitude.abs(),
        }
    }

    pub fn maximum(&self) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Piecewise { values, .. } => values.iter().copied().fold(0.0, f64::max),
            Coefficient::Trig { mean, amplitude, .. } => mean + amplitude.abs(),
        }
    }

    /// `int_Y a`.
    pub fn mean(&self) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Piecewise { values, .. } => values.iter().sum::<f64>() / values.len() as f64,
            Coefficient::Trig { mean, .. } => *mean,
        }
    }

    /// `(int_Y 1/a)^{-1}` along the coefficient axis.
    pub fn harmonic_mean(&self) -> f64 {
        match self {
            Coefficient::Constant { value } => *value,
            Coefficient::Piecewise { values, .. } => {
                values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
            }
            Coefficient::Trig { mean, amplitude, .. } => (mean * mean - amplitude * amplitude).sqrt(),
        }
    }

    fn axis(&self) -> Option<usize> {
        match self {
            Coefficient::Constant { .. } => None,
            Coefficient::Piecewise { axis, .. } | Coefficient::Trig { axis, .. } => Some(*axis),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Form {
    Separable { coefficient: Coefficient, potential: Potential },
    ConstantInY { potential: Potential },
}

/// Declared bounds `B(|xi|) - lower_offset <= f(y, xi) <= a_bound + M B(|xi|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    #[serde(rename = "B")]
    pub b: YoungFunction,
    #[serde(rename = "M")]
    pub m: f64,
    pub a_bound: f64,
    #[serde(default)]
    pub lower_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
}

impl Dims {
    pub fn len(&self) -> usize {
        self.n * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct IntegrandSpec {
    name: Option<String>,
    form: Form,
    growth: Growth,
    dims: Dims,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(flatten)]
    form: Form,
    growth: Growth,
    dims: Dims,
}

impl TryFrom<SpecRepr> for IntegrandSpec {
    type Error = IntegrandError;

    fn try_from(r: SpecRepr) -> Result<Self> {
        IntegrandSpec::new(r.form, r.growth, r.dims).map(|s| s.named_opt(r.name))
    }
}

impl From<IntegrandSpec> for SpecRepr {
    fn from(s: IntegrandSpec) -> Self {
        SpecRepr { name: s.name, form: s.form, growth: s.growth, dims: s.dims }
    }
}

impl IntegrandSpec {
    pub fn new(form: Form, growth: Growth, dims: Dims) -> Result<Self> {
        if !(1..=2).contains(&dims.n) || !(1..=2).contains(&dims.d) {
            return Err(IntegrandError::Contract(format!(
                "dims must have N, d in {{1, 2}}, got N = {}, d = {}",
                dims.n, dims.d
            )));
        }
        let potential = match &form {
            Form::Separable { coefficient, potential } => {
                if let Some(axis) = coefficient.axis() {
                    if axis >= dims.n {
                        return Err(IntegrandError::Contract(format!(
                            "coefficient axis {axis} out of range for N = {}",
                            dims.n
                        )));
                    }
                }
                if let Coefficient::Piecewise { values, .. } = coefficient {
                    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                        return Err(IntegrandError::Contract("piecewise coefficient needs finite values".into()));
                    }
                }
                let a_min = coefficient.minimum();
                if !(a_min > 0.0 && a_min.is_finite() && coefficient.maximum().is_finite()) {
                    return Err(IntegrandError::Contract(format!(
                        "coefficient must stay positive, minimum is {a_min}"
                    )));
                }
                potential
            }
            Form::ConstantInY { potential } => potential,
        };
        potential.check_len(dims.len())?;
        let g = &growth;
        if !(g.m >= 0.0 && g.a_bound >= 0.0 && g.lower_offset >= 0.0)
            || !(g.m.is_finite() && g.a_bound.is_finite() && g.lower_offset.is_finite())
        {
            return Err(IntegrandError::Contract(
                "growth constants must be finite and nonnegative".into(),
            ));
        }
        Ok(IntegrandSpec { name: None, form, growth, dims })
    }

    pub fn named(self, name: impl Into<String>) -> Self {
        self.named_opt(Some(name.into()))
    }

    fn named_opt(mut self, name: Option<String>) -> Self {
        self.name = name;
        self
    }

    /// `a(y) = values[k]` on the `k`-th equal phase of `(0,1)`, `|xi|^2`,
    /// declared with `B = t^2`.
    pub fn layered_quadratic(values: Vec<f64>) -> Result<Self> {
        let m = values.iter().copied().fold(0.0, f64::max);
        IntegrandSpec::new(
            Form::Separable {
                coefficient: Coefficient::Piecewise { values, axis: 0 },
                potential: Potential::power(2.0)?,
            },
            Growth { b: YoungFunction::power(2.0).expect("p = 2"), m, a_bound: 0.0, lower_offset: 0.0 },
            Dims { n: 1, d: 1 },
        )
    }

    /// The two-phase 1D benchmark: `a in {1, 4}`, `W = xi^2`.
    pub fn two_phase_quadratic() -> Self {
        IntegrandSpec::layered_quadratic(vec![1.0, 4.0])
            .expect("valid built-in")
            .named("two_phase_quadratic")
    }

    /// `a(y) (xi^2 - 1)^2` in 1D, declared with `B = t^4 / 8` and the
    /// smallest admissible lower offset (`1/7` when `a = 1`).
    pub fn double_well_1d(coefficient: Coefficient) -> Result<Self> {
        let a_max = coefficient.maximum();
        let a_min = coefficient.minimum();
        if !(a_min > 0.125) {
            return Err(IntegrandError::Contract(format!(
                "double well needs a > 1/8 for the built-in growth, got {a_min}"
            )));
        }
        IntegrandSpec::new(
            Form::Separable { coefficient, potential: Potential::DoubleWell },
            Growth {
                b: YoungFunction::scaled_power(4.0, 0.125).expect("valid"),
                m: 8.0 * a_max,
                a_bound: a_max,
                lower_offset: double_well_offset(a_min),
            },
            Dims { n: 1, d: 1 },
        )
    }

    /// `xi^T A xi` with no `y`-dependence.
    pub fn constant_quadratic(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let pot = Potential::quadratic(rows)?;
        let (lo, hi) = match &pot {
            Potential::Quadratic { matrix, size } => spectral_bounds(matrix, *size),
            _ => unreachable!(),
        };
        let dims = if n == 1 { Dims { n: 1, d: 1 } } else if n == 2 { Dims { n: 2, d: 1 } } else { Dims { n: 2, d: 2 } };
        IntegrandSpec::new(
            Form::ConstantInY { potential: pot },
            Growth {
                b: YoungFunction::scaled_power(2.0, lo).expect("positive definite"),
                m: hi / lo,
                a_bound: 0.0,
                lower_offset: 0.0,
            },
            dims,
        )
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn growth(&self) -> &Growth {
        &self.growth
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    pub fn potential(&self) -> &Potential {
        match &self.form {
            Form::Separable { potential, .. } | Form::ConstantInY { potential } => potential,
        }
    }

    pub fn coefficient(&self) -> Option<&Coefficient> {
        match &self.form {
            Form::Separable { coefficient, .. } => Some(coefficient),
            Form::ConstantInY { .. } => None,
        }
    }

    /// Same spec with the potential replaced by its scalar convex envelope.
    pub fn relaxed(&self, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if self.dims.len() != 1 {
            return Err(IntegrandError::Contract("relaxation needs d = N = 1".into()));
        }
        let potential = Potential::relaxed(self.potential().clone(), lo, hi, n)?;
        let form = match &self.form {
            Form::Separable { coefficient, .. } => Form::Separable { coefficient: coefficient.clone(), potential },
            Form::ConstantInY { .. } => Form::ConstantInY { potential },
        };
        let name = self.name.as_ref().map(|s| format!("{s}_relaxed"));
        Ok(IntegrandSpec { name, form, growth: self.growth.clone(), dims: self.dims })
    }

    /// `a(y)` with `y` reduced modulo `Y`; `1` for y-independent forms.
    #[inline]
    pub fn coefficient_at(&self, y: &[f64]) -> f64 {
        match &self.form {
            Form::Separable { coefficient, .. } => coefficient.value(y),
            Form::ConstantInY { .. } => 1.0,
        }
    }

    fn check(&self, y: &[f64], xi: &[f64]) -> Result<()> {
        if y.len() != self.dims.n || xi.len() != self.dims.len() {
            return Err(IntegrandError::Contract(format!(
                "expected y of length {} and xi of length {}, got {} and {}",
                self.dims.n,
                self.dims.len(),
                y.len(),
                xi.len()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, y: &[f64], xi: &[f64]) -> Result<f64> {
        self.check(y, xi)?;
        Ok(self.coefficient_at(y) * self.potential().value(xi))
    }

    pub fn grad_xi(&self, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.check(y, xi)?;
        let mut out = vec![0.0; xi.len()];
        self.potential().gradient(xi, &mut out);
        let a = self.coefficient_at(y);
        out.iter_mut().for_each(|o| *o *= a);
        Ok(out)
    }

    /// Central differences with step `1e-6 (1 + |xi|)`.
    pub fn numeric_grad_xi(&self, y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        self.check(y, xi)?;
        let h = 1e-6 * (1.0 + norm(xi));
        let mut probe = xi.to_vec();
        let mut out = vec![0.0; xi.len()];
        for k in 0..xi.len() {
            probe[k] = xi[k] + h;
            let fp = self.evaluate(y, &probe)?;
            probe[k] = xi[k] - h;
            let fm = self.evaluate(y, &probe)?;
            probe[k] = xi[k];
            out[k] = (fp - fm) / (2.0 * h);
        }
        Ok(out)
    }
}

/// Smallest `c` with `t^4 / 8 - c <= a (t^2 - 1)^2` for all `t`; needs `a > 1/8`.
pub fn double_well_offset(a: f64) -> f64 {
    a / (8.0 * a - 1.0)
}

fn spectral_bounds(a: &[f64], n: usize) -> (f64, f64) {
    match n {
        1 => (a[0], a[0]),
        2 => {
            let tr = a[0] + a[3];
            let det = a[0] * a[3] - a[1] * a[2];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            (tr / 2.0 - disc, tr / 2.0 + disc)
        }
        _ => {
            // Gershgorin bounds are enough for the declared constants.
            let mut lo = f64::INFINITY;
            let mut hi = 0.0_f64;
            for i in 0..n {
                let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[i * n + j].abs()).sum();
                lo = lo.min(a[i * n + i] - r);
                hi = hi.max(a[i * n + i] + r);
            }
            (lo.max(1e-12), hi)
        }
    }
}

/// Sample sets for the growth scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSamples {
    pub y: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
}

pub const DEFAULT_GROWTH_RADIUS: f64 = 10.0;

impl GrowthSamples {
    /// Cell centers of a `y_res^N` grid on `Y`, and rays of `1001` radii in
    /// `[0, radius]` along signed axes, diagonals and seeded directions.
    pub fn default_for(dims: Dims, radius: f64) -> Self {
        let n = dims.n;
        let y_res = 64usize;
        let y: Vec<Vec<f64>> = (0..y_res.pow(n as u32))
            .map(|k| {
                let idx = crate::field::unravel(k, &vec![y_res; n]);
                (0..n).map(|a| (idx[a] as f64 + 0.5) / y_res as f64).collect()
            })
            .collect();
        let m = dims.len();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for k in 0..m {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; m];
                e[k] = s;
                dirs.push(e);
            }
        }
        if m > 1 {
            for signs in 0..(1usize << m) {
                let e: Vec<f64> = (0..m)
                    .map(|k| if signs >> k & 1 == 1 { -1.0 } else { 1.0 } / (m as f64).sqrt())
                    .collect();
                dirs.push(e);
            }
            let mut rng = rng_for(0, &[m as u64]);
            for _ in 0..16 {
                let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r = norm(&v).max(1e-3);
                dirs.push(v.iter().map(|x| x / r).collect());
            }
        }
        let radii = 1000;
        let mut xi = Vec::with_capacity(dirs.len() * (radii + 1));
        for d in &dirs {
            for k in 0..=radii {
                let r = radius * k as f64 / radii as f64;
                xi.push(d.iter().map(|c| c * r).collect());
            }
        }
        GrowthSamples { y, xi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub value: f64,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedGrowth {
    pub a_bound: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub lower_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Smallest `f - B(|xi|) + lower_offset`.
    pub worst_lower: Margin,
    /// Smallest `a_bound + M B(|xi|) - f`.
    pub worst_upper: Margin,
    pub declared: FittedGrowth,
    pub fitted: FittedGrowth,
    pub samples: usize,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

const GROWTH_SLACK: f64 = 1e-12;

/// Scans both growth bounds with the declared constants of `spec` and the
/// Young function `b`.
pub fn growth_check(spec: &IntegrandSpec, b: &YoungFunction, samples: &GrowthSamples) -> Result<GrowthReport> {
    if samples.y.is_empty() || samples.xi.is_empty() {
        return Err(IntegrandError::Contract("growth scan needs nonempty samples".into()));
    }
    let g = spec.growth();
    let zero = vec![0.0; spec.dims().len()];
    let mut a_fit = 0.0_f64;
    for y in &samples.y {
        a_fit = a_fit.max(spec.evaluate(y, &zero)?);
    }
    let mut worst_lower = Margin { value: f64::INFINITY, y: vec![], xi: vec![] };
    let mut worst_upper = Margin { value: f64::INFINITY, y: vec![], xi: vec![] };
    let mut m_fit = 0.0_f64;
    let mut offset_fit = 0.0_f64;
    let mut lower_ok = true;
    let mut upper_ok = true;
    for xi in &samples.xi {
        let bx = b.value(norm(xi)).map_err(|e| IntegrandError::Contract(e.to_string()))?;
        for y in &samples.y {
            let f = spec.evaluate(y, xi)?;
            if !f.is_finite() {
                return Err(IntegrandError::Data { index: 0, value: f });
            }
            let lower = f - bx + g.lower_offset;
            if lower < worst_lower.value {
                worst_lower = Margin { value: lower, y: y.clone(), xi: xi.clone() };
            }
            lower_ok &= lower >= -GROWTH_SLACK * (1.0 + bx);
            offset_fit = offset_fit.max(bx - f);
            let upper = g.a_bound + g.m * bx - f;
            if upper < worst_upper.value {
                worst_upper = Margin { value: upper, y: y.clone(), xi: xi.clone() };
            }
            upper_ok &= upper >= -GROWTH_SLACK * (1.0 + f);
            if bx > 0.0 {
                m_fit = m_fit.max((f - a_fit) / bx);
            }
        }
    }
    Ok(GrowthReport {
        lower_ok,
        upper_ok,
        worst_lower,
        worst_upper,
        declared: FittedGrowth { a_bound: g.a_bound, m: g.m, lower_offset: g.lower_offset },
        fitted: FittedGrowth { a_bound: a_fit, m: m_fit, lower_offset: offset_fit },
        samples: samples.y.len() * samples.xi.len(),
    })
}

/// Rejects specs whose declared growth fails on the default samples.
pub fn certify_growth(spec: &IntegrandSpec) -> Result<GrowthReport> {
    let report = growth_check(
        spec,
        &spec.growth().b,
        &GrowthSamples::default_for(spec.dims(), DEFAULT_GROWTH_RADIUS),
    )?;
    if report.passed() {
        Ok(report)
    } else {
        Err(IntegrandError::Rejected(format!(
            "declared growth fails (lower_ok = {}, upper_ok = {}); fitted a_bound = {}, M = {}, lower_offset = {}",
            report.lower_ok, report.upper_ok, report.fitted.a_bound, report.fitted.m, report.fitted.lower_offset
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzDiagnostic {
    /// Smallest `C` with `|f(y,z1) - f(y,z2)| <= C (1 + b(1 + |z1| + |z2|)) |z1 - z2|`
    /// on the sampled pairs, `b = B'`.
    pub fitted_c: f64,
    pub worst: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    pub pairs: usize,
}

/// Fits the constant of the local Lipschitz estimate on consecutive and
/// seeded random pairs of `xi` samples.
pub fn lipschitz_diagnostic(
    spec: &IntegrandSpec,
    samples: &GrowthSamples,
    seed: u64,
) -> Result<LipschitzDiagnostic> {
    let b = &spec.growth().b;
    let mut rng = rng_for(seed, &[0x4c49_5053]);
    let n = samples.xi.len();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|k| (k - 1, k)).collect();
    for _ in 0..n {
        pairs.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    let mut fitted = 0.0_f64;
    let mut worst = None;
    let mut count = 0;
    for (i, j) in pairs {
        let (z1, z2) = (&samples.xi[i], &samples.xi[j]);
        let dz: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| a - b).collect();
        let dist = norm(&dz);
        if dist == 0.0 {
            continue;
        }
        let db = b
            .density(1.0 + norm(z1) + norm(z2))
            .map_err(|e| IntegrandError::Contract(e.to_string()))?;
        for y in &samples.y {
            let diff = (spec.evaluate(y, z1)? - spec.evaluate(y, z2)?).abs();
            let c = diff / ((1.0 + db) * dist);
            count += 1;
            if c > fitted {
                fitted = c;
                worst = Some((y.clone(), z1.clone(), z2.clone()));
            }
        }
    }
    Ok(LipschitzDiagnostic { fitted_c: fitted, worst, pairs: count })
}
