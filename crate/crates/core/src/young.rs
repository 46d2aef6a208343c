//! Young functions: evaluation, complementary functions, growth
//! certificates, modulars and Luxemburg norms of discrete fields.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::field::GridField;
use crate::sum::Accumulator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YoungError {
    #[error("argument {0} is outside the domain [0, inf)")]
    Domain(f64),
    #[error("invalid young function: {0}")]
    Invalid(String),
    #[error("supremum of s*t - B(s) is not attained on the scan range at t = {t}")]
    Unstable { t: f64 },
    #[error("degenerate young function: B({t}) = 0 at a positive argument")]
    Degenerate { t: f64 },
    #[error("non-finite field value {0}")]
    Data(f64),
    #[error("luxemburg bracket diverged: modular stays above 1 up to k = {0:e}")]
    Divergent(f64),
    #[error("contract violation: {0}")]
    Contract(String),
}

/// A convex growth profile `B` with `B(0) = 0`.
///
/// `SampledDensity` carries knot values of both the density and of `B`
/// itself; see [`SampledDensity`] for the interpolation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungRepr", into = "YoungRepr")]
pub enum YoungFunction {
    /// `scale * t^p`, `p > 1`.
    Power { p: f64, scale: f64 },
    /// `t^p * ln(e + t)`, `p >= 1`.
    PowerLog { p: f64 },
    /// `e^t - t - 1`.
    ExpMinusLinear,
    SampledDensity(SampledDensity),
}

/// Piecewise-linear density `b` on knots `0 = t_0 < t_1 < ...`, with `B`
/// pinned at the knots. Between knots `B` is the quadratic anchored at
/// `(t_k, B_k)` with slope `b_k` that reaches `B_{k+1}`; when the knot
/// values come from integrating `b` this is exactly the integral of the
/// linear interpolant. Past the last knot the density is held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDensity {
    knots: Vec<f64>,
    density: Vec<f64>,
    values: Vec<f64>,
}

impl SampledDensity {
    /// Builds `B` by exact integration of the linearly interpolated density.
    pub fn from_density(knots: Vec<f64>, density: Vec<f64>) -> Result<Self, YoungError> {
        if knots.len() != density.len() {
            return Err(YoungError::Invalid(
                "knots and density differ in length".into(),
            ));
        }
        let mut values = Vec::with_capacity(knots.len());
        let mut acc = Accumulator::new();
        for k in 0..knots.len() {
            if k > 0 {
                let h = knots[k] - knots[k - 1];
                acc.add(0.5 * h * (density[k] + density[k - 1]));
            }
            values.push(acc.value());
        }
        Self::from_parts(knots, density, values)
    }

    /// Knot triples `(t_k, b_k, B_k)` as given; validated for monotonicity.
    pub fn from_parts(
        knots: Vec<f64>,
        density: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, YoungError> {
        let n = knots.len();
        if n < 2 || density.len() != n || values.len() != n {
            return Err(YoungError::Invalid(
                "sampled density needs at least two knots with matching arrays".into(),
            ));
        }
        if knots
            .iter()
            .chain(&density)
            .chain(&values)
            .any(|v| !v.is_finite())
        {
            return Err(YoungError::Invalid("non-finite knot data".into()));
        }
        if knots[0] != 0.0 || values[0] != 0.0 {
            return Err(YoungError::Invalid(
                "first knot must be t = 0 with B(0) = 0".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(YoungError::Invalid("knots must be strictly increasing".into()));
        }
        if density[0] < 0.0 || density.windows(2).any(|w| w[1] < w[0]) {
            return Err(YoungError::Invalid(
                "density must be nonnegative and nondecreasing".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(YoungError::Invalid("knot values must be nondecreasing".into()));
        }
        Ok(Self {
            knots,
            density,
            values,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn density_knots(&self) -> &[f64] {
        &self.density
    }

    pub fn value_knots(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len() - 1;
        if t >= self.knots[n] {
            return self.values[n] + self.density[n] * (t - self.knots[n]);
        }
        let k = self.knots.partition_point(|&x| x <= t) - 1;
        let h = self.knots[k + 1] - self.knots[k];
        let tau = t - self.knots[k];
        let c = (self.values[k + 1] - self.values[k] - self.density[k] * h) / (h * h);
        self.values[k] + self.density[k] * tau + c * tau * tau
    }

    fn eval_density(&self, t: f64) -> f64 {
        let n = self.knots.len() - 1;
        if t >= self.knots[n] {
            return self.density[n];
        }
        let k = self.knots.partition_point(|&x| x <= t) - 1;
        let lam = (t - self.knots[k]) / (self.knots[k + 1] - self.knots[k]);
        self.density[k] + lam * (self.density[k + 1] - self.density[k])
    }
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self, YoungError> {
        Self::scaled_power(p, 1.0)
    }

    pub fn scaled_power(p: f64, scale: f64) -> Result<Self, YoungError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(YoungError::Invalid(format!("power needs p > 1, got {p}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(YoungError::Invalid(format!(
                "power scale must be positive, got {scale}"
            )));
        }
        Ok(Self::Power { p, scale })
    }

    /// `t^p ln(e + t)`. `p = 1` is accepted although `B(t)/t -> 1` at zero;
    /// it is the standard near-linear example whose complement is exponential.
    pub fn power_log(p: f64) -> Result<Self, YoungError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(YoungError::Invalid(format!("power-log needs p >= 1, got {p}")));
        }
        Ok(Self::PowerLog { p })
    }

    pub fn exp_minus_linear() -> Self {
        Self::ExpMinusLinear
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::PowerLog { .. } => "power_log",
            Self::ExpMinusLinear => "exp_minus_linear",
            Self::SampledDensity(_) => "sampled_density",
        }
    }

    /// `B(t)`, with domain checking.
    pub fn value(&self, t: f64) -> Result<f64, YoungError> {
        check_arg(t)?;
        Ok(self.eval(t))
    }

    /// Density `b(t)` (right derivative of `B`).
    pub fn density(&self, t: f64) -> Result<f64, YoungError> {
        check_arg(t)?;
        Ok(self.eval_density(t))
    }

    /// Unchecked evaluation for hot loops; `t` must be finite and nonnegative.
    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Self::Power { p, scale } => scale * pow(t, *p),
            Self::PowerLog { p } => pow(t, *p) * (std::f64::consts::E + t).ln(),
            Self::ExpMinusLinear => {
                if t < 1e-3 {
                    let t2 = t * t;
                    t2 * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)))
                } else {
                    t.exp_m1() - t
                }
            }
            Self::SampledDensity(s) => s.eval(t),
        }
    }

    pub(crate) fn eval_density(&self, t: f64) -> f64 {
        match self {
            Self::Power { p, scale } => {
                if t == 0.0 {
                    0.0
                } else {
                    scale * p * pow(t, p - 1.0)
                }
            }
            Self::PowerLog { p } => {
                let e_t = std::f64::consts::E + t;
                if t == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * pow(t, p - 1.0) * e_t.ln() + pow(t, *p) / e_t
                }
            }
            Self::ExpMinusLinear => t.exp_m1(),
            Self::SampledDensity(s) => s.eval_density(t),
        }
    }
}

#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 32.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

fn check_arg(t: f64) -> Result<(), YoungError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(YoungError::Domain(t))
    }
}

#[derive(Serialize, Deserialize)]
struct YoungRepr {
    kind: String,
    #[serde(default)]
    params: Vec<f64>,
}

impl From<YoungFunction> for YoungRepr {
    fn from(b: YoungFunction) -> Self {
        let kind = b.kind_name().to_string();
        let params = match b {
            YoungFunction::Power { p, scale } => {
                if scale == 1.0 {
                    vec![p]
                } else {
                    vec![p, scale]
                }
            }
            YoungFunction::PowerLog { p } => vec![p],
            YoungFunction::ExpMinusLinear => vec![],
            YoungFunction::SampledDensity(s) => (0..s.knots.len())
                .flat_map(|k| [s.knots[k], s.density[k], s.values[k]])
                .collect(),
        };
        Self { kind, params }
    }
}

impl TryFrom<YoungRepr> for YoungFunction {
    type Error = YoungError;

    fn try_from(r: YoungRepr) -> Result<Self, Self::Error> {
        let bad = |msg: &str| YoungError::Invalid(format!("{}: {msg}", r.kind));
        match r.kind.as_str() {
            "power" => match r.params.as_slice() {
                [p] => Self::power(*p),
                [p, scale] => Self::scaled_power(*p, *scale),
                _ => Err(bad("expected params [p] or [p, scale]")),
            },
            "power_log" => match r.params.as_slice() {
                [p] => Self::power_log(*p),
                _ => Err(bad("expected params [p]")),
            },
            "exp_minus_linear" => {
                if r.params.is_empty() {
                    Ok(Self::ExpMinusLinear)
                } else {
                    Err(bad("takes no params"))
                }
            }
            "sampled_density" => {
                if r.params.len() % 3 != 0 {
                    return Err(bad("params are flattened (t, b, B) triples"));
                }
                let knots = r.params.iter().step_by(3).copied().collect();
                let density = r.params.iter().skip(1).step_by(3).copied().collect();
                let values = r.params.iter().skip(2).step_by(3).copied().collect();
                Ok(Self::SampledDensity(SampledDensity::from_parts(
                    knots, density, values,
                )?))
            }
            other => Err(YoungError::Invalid(format!("unknown kind {other:?}"))),
        }
    }
}

/// Geometric ladder `lo, ..., hi` with `per_decade` points per decade.
pub fn geometric_ladder(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<f64> = (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect();
    out[0] = lo;
    out[n] = hi;
    out
}

/// The `s`-grid used for the discrete Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl Default for LegendreGrid {
    fn default() -> Self {
        Self {
            s_min: 1e-6,
            s_max: 1e6,
            points: 100_000,
        }
    }
}

impl LegendreGrid {
    /// `0` followed by `points` geometric nodes in `[s_min, s_max]`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points + 1);
        out.push(0.0);
        let ratio = self.s_max / self.s_min;
        let last = (self.points - 1) as f64;
        out.extend((0..self.points).map(|i| self.s_min * ratio.powf(i as f64 / last)));
        out
    }
}

/// Complementary function `sup_s (s t - B(s))` sampled on `ladder`.
pub fn complementary(b: &YoungFunction, ladder: &[f64]) -> Result<YoungFunction, YoungError> {
    complementary_with(b, ladder, &LegendreGrid::default())
}

/// As [`complementary`], on an explicit `s`-grid. The maximizer is located
/// by bisection on the density (the maximizer of the concave map
/// `s -> s t - B(s)` is where `b(s)` crosses `t`) and polished by golden
/// section between the neighbouring grid nodes.
pub fn complementary_with(
    b: &YoungFunction,
    ladder: &[f64],
    grid: &LegendreGrid,
) -> Result<YoungFunction, YoungError> {
    if grid.points < 3 || !(grid.s_min > 0.0 && grid.s_max > grid.s_min) {
        return Err(YoungError::Contract("degenerate legendre grid".into()));
    }
    let mut knots: Vec<f64> = Vec::with_capacity(ladder.len() + 1);
    if ladder.first() != Some(&0.0) {
        knots.push(0.0);
    }
    for &t in ladder {
        check_arg(t)?;
        knots.push(t);
    }
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(YoungError::Contract(
            "ladder must be strictly increasing".into(),
        ));
    }
    let s_nodes = grid.nodes();
    let dens: Vec<f64> = s_nodes.iter().map(|&s| b.eval_density(s)).collect();
    let last = s_nodes.len() - 1;

    let mut slopes = Vec::with_capacity(knots.len());
    let mut values = Vec::with_capacity(knots.len());
    for &t in &knots {
        if t == 0.0 {
            slopes.push(0.0);
            values.push(0.0);
            continue;
        }
        let j = dens.partition_point(|&d| d < t);
        if j > last {
            return Err(YoungError::Unstable { t });
        }
        let gain = |s: f64| s * t - b.eval(s);
        let lo = s_nodes[j.saturating_sub(1)];
        let hi = s_nodes[(j + 1).min(last)];
        let (mut s_best, mut v_best) = golden_max(&gain, lo, hi);
        for &s in &s_nodes[j.saturating_sub(1)..=(j + 1).min(last)] {
            let v = gain(s);
            if v > v_best {
                s_best = s;
                v_best = v;
            }
        }
        if !v_best.is_finite() {
            return Err(YoungError::Unstable { t });
        }
        slopes.push(s_best);
        values.push(v_best.max(0.0));
    }
    for k in 1..knots.len() {
        slopes[k] = slopes[k].max(slopes[k - 1]);
        values[k] = values[k].max(values[k - 1]);
    }
    Ok(YoungFunction::SampledDensity(SampledDensity::from_parts(
        knots, slopes, values,
    )?))
}

fn golden_max(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1);
        }
    }
    if g1 >= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthCondition {
    Delta2,
    Nabla2,
}

/// Finite-scan evidence for an asymptotic growth condition.
///
/// For `Delta2`, `constant` is `alpha = sup B(2t)/B(t)` over the scan.
/// For `Nabla2`, `constant` is the smallest passing `beta` (or the best
/// candidate when none passes) and `sup_ratio_observed` is
/// `sup 2 beta B(t) / B(beta t)`, which must stay `<= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub condition: GrowthCondition,
    pub t0: f64,
    #[serde(with = "finite_or_null")]
    pub constant: f64,
    #[serde(with = "finite_or_null")]
    pub sup_ratio_observed: f64,
    pub passed: bool,
    pub scan_range: [f64; 2],
    pub samples: usize,
}

/// Serializes non-finite floats as `null` and reads `null` back as `+inf`.
pub mod finite_or_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

pub const DEFAULT_PER_DECADE: usize = 100;

pub fn delta2_certificate(
    b: &YoungFunction,
    t0: f64,
    t_max: f64,
) -> Result<GrowthCertificate, YoungError> {
    delta2_certificate_with(b, t0, t_max, DEFAULT_PER_DECADE)
}

/// Scans `B(2t)/B(t)` on a geometric ladder over `[t0, t_max]`. The scan
/// fails when the supremum is infinite, or when the ratio is monotone
/// nondecreasing across the last decade and still rising.
pub fn delta2_certificate_with(
    b: &YoungFunction,
    t0: f64,
    t_max: f64,
    per_decade: usize,
) -> Result<GrowthCertificate, YoungError> {
    if !(t0 > 0.0 && t_max > t0 && t_max.is_finite()) {
        return Err(YoungError::Contract(format!(
            "delta2 scan needs 0 < t0 < t_max, got [{t0}, {t_max}]"
        )));
    }
    let ladder = geometric_ladder(t0, t_max, per_decade);
    let mut ratios = Vec::with_capacity(ladder.len());
    for &t in &ladder {
        let bt = b.eval(t);
        if bt == 0.0 {
            return Err(YoungError::Degenerate { t });
        }
        let r = b.eval(2.0 * t) / bt;
        ratios.push(if r.is_finite() { r } else { f64::INFINITY });
    }
    let alpha = ratios.iter().copied().fold(0.0_f64, f64::max);
    let tail_start = ladder.partition_point(|&t| t < t_max / 10.0);
    let tail = &ratios[tail_start.min(ratios.len() - 1)..];
    let rising = tail.len() >= 2
        && tail.windows(2).all(|w| w[1] >= w[0])
        && tail[tail.len() - 1] > tail[0] * (1.0 + 1e-6);
    Ok(GrowthCertificate {
        condition: GrowthCondition::Delta2,
        t0,
        constant: alpha,
        sup_ratio_observed: alpha,
        passed: alpha.is_finite() && !rising,
        scan_range: [t0, t_max],
        samples: ladder.len(),
    })
}

/// Default beta candidates: geometric ladder on `[1.01, 1e4]`.
pub fn default_beta_grid() -> Vec<f64> {
    geometric_ladder(1.01, 1e4, 500)
}

pub fn nabla2_certificate(
    b: &YoungFunction,
    t0: f64,
    t_max: f64,
    beta_grid: &[f64],
) -> Result<GrowthCertificate, YoungError> {
    nabla2_certificate_with(b, t0, t_max, beta_grid, DEFAULT_PER_DECADE)
}

/// Checks `B(t) <= B(beta t) / (2 beta)` for `t` in `[t0, t_max]`; the
/// smallest passing `beta` of the grid is recorded. `t0 > 1` is required.
pub fn nabla2_certificate_with(
    b: &YoungFunction,
    t0: f64,
    t_max: f64,
    beta_grid: &[f64],
    per_decade: usize,
) -> Result<GrowthCertificate, YoungError> {
    if !(t0 > 1.0 && t_max > t0 && t_max.is_finite()) {
        return Err(YoungError::Contract(format!(
            "nabla2 scan needs 1 < t0 < t_max, got [{t0}, {t_max}]"
        )));
    }
    if beta_grid.is_empty() || beta_grid.iter().any(|&beta| !(beta > 1.0 && beta.is_finite())) {
        return Err(YoungError::Contract(
            "beta grid must be nonempty and inside (1, inf)".into(),
        ));
    }
    let mut betas = beta_grid.to_vec();
    betas.sort_by(f64::total_cmp);
    let ladder = geometric_ladder(t0, t_max, per_decade);
    let base: Vec<f64> = ladder.iter().map(|&t| b.eval(t)).collect();
    if let Some(k) = base.iter().position(|&v| v == 0.0) {
        return Err(YoungError::Degenerate { t: ladder[k] });
    }
    let mut best = (betas[0], f64::INFINITY);
    for &beta in &betas {
        let sup = ladder
            .iter()
            .zip(&base)
            .map(|(&t, &bt)| {
                let scaled = b.eval(beta * t);
                if scaled.is_infinite() {
                    0.0
                } else {
                    2.0 * beta * bt / scaled
                }
            })
            .fold(0.0_f64, f64::max);
        if sup <= 1.0 + 1e-12 {
            return Ok(GrowthCertificate {
                condition: GrowthCondition::Nabla2,
                t0,
                constant: beta,
                sup_ratio_observed: sup,
                passed: true,
                scan_range: [t0, t_max],
                samples: ladder.len(),
            });
        }
        if sup < best.1 {
            best = (beta, sup);
        }
    }
    Ok(GrowthCertificate {
        condition: GrowthCondition::Nabla2,
        t0,
        constant: best.0,
        sup_ratio_observed: best.1,
        passed: false,
        scan_range: [t0, t_max],
        samples: ladder.len(),
    })
}

/// `sum_i B(m_i) * weight`.
pub fn modular_samples(
    b: &YoungFunction,
    magnitudes: &[f64],
    weight: f64,
) -> Result<f64, YoungError> {
    let mut acc = Accumulator::new();
    for &m in magnitudes {
        if !m.is_finite() {
            return Err(YoungError::Data(m));
        }
        acc.add(b.eval(m.abs()));
    }
    Ok(acc.value() * weight)
}

/// Midpoint-rule modular `int B(|u|)` of a field.
pub fn modular(b: &YoungFunction, u: &GridField) -> Result<f64, YoungError> {
    let mags = u.cell_magnitudes();
    modular_samples(b, &mags, u.grid().cell_volume())
}

pub const DEFAULT_NORM_TOL: f64 = 1e-10;

/// Luxemburg norm of a field; `tol` bounds `|modular(u/k) - 1|`.
pub fn luxemburg_norm(b: &YoungFunction, u: &GridField, tol: f64) -> Result<f64, YoungError> {
    let mags = u.cell_magnitudes();
    luxemburg_samples(b, &mags, u.grid().cell_volume(), tol)
}

/// Luxemburg norm of weighted samples. The bracket starts at `k = 1` and
/// grows or shrinks by factors of two before bisecting.
pub fn luxemburg_samples(
    b: &YoungFunction,
    magnitudes: &[f64],
    weight: f64,
    tol: f64,
) -> Result<f64, YoungError> {
    if !(tol > 0.0) {
        return Err(YoungError::Contract(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(&m) = magnitudes.iter().find(|m| !m.is_finite()) {
        return Err(YoungError::Data(m));
    }
    if magnitudes.iter().all(|&m| m == 0.0) {
        return Ok(0.0);
    }
    let modular_at = |k: f64| {
        let mut acc = Accumulator::new();
        for &m in magnitudes {
            acc.add(b.eval(m.abs() / k));
        }
        let v = acc.value() * weight;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    const K_MAX: f64 = 1e300;
    const K_MIN: f64 = 1e-300;
    let (mut lo, mut hi);
    let m1 = modular_at(1.0);
    if (m1 - 1.0).abs() <= tol {
        return Ok(1.0);
    }
    if m1 > 1.0 {
        lo = 1.0;
        hi = 2.0;
        while modular_at(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > K_MAX {
                return Err(YoungError::Divergent(hi));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while modular_at(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < K_MIN {
                return Ok(lo);
            }
        }
    }
    // invariant: modular(lo) > 1 >= modular(hi)
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        let m = modular_at(mid);
        if (m - 1.0).abs() <= tol {
            return Ok(mid);
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BoxDomain, Grid};
    use proptest::prelude::*;

    fn unit_grid(res: usize) -> Grid {
        Grid::new(BoxDomain::unit(1), vec![res]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let b = YoungFunction::power(2.0).unwrap();
        assert_eq!(b.value(3.0).unwrap(), 9.0);
        for b in [
            YoungFunction::power(3.0).unwrap(),
            YoungFunction::power_log(2.0).unwrap(),
            YoungFunction::exp_minus_linear(),
        ] {
            assert_eq!(b.value(0.0).unwrap(), 0.0);
        }
        let pl = YoungFunction::power_log(2.0).unwrap();
        assert!((pl.value(1.0).unwrap() - 1.313_261_687_518_222_8).abs() < 1e-15);
        assert_eq!(b.value(-1.0), Err(YoungError::Domain(-1.0)));
        assert!(b.value(f64::NAN).is_err());
    }

    #[test]
    fn power_log_matches_quadrature_of_its_density() {
        let pl = YoungFunction::power_log(2.0).unwrap();
        // composite Simpson on [0, 1]
        let n = 2000;
        let h = 1.0 / n as f64;
        let mut s = pl.density(0.0).unwrap() + pl.density(1.0).unwrap();
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pl.density(i as f64 * h).unwrap();
        }
        let quad = s * h / 3.0;
        assert!((quad - pl.value(1.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sampled_density_integrates_exactly() {
        // b(t) = 2t sampled at knots reproduces t^2 exactly, also between knots
        let knots: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let dens = knots.iter().map(|t| 2.0 * t).collect();
        let b = YoungFunction::SampledDensity(SampledDensity::from_density(knots, dens).unwrap());
        for &t in &[0.1, 0.3, 1.7, 4.99, 5.0] {
            let v = b.value(t).unwrap();
            assert!((v - t * t).abs() <= 1e-8 * t * t, "t={t} v={v}");
        }
        // linear continuation past the last knot
        assert!((b.value(6.0).unwrap() - (25.0 + 10.0)).abs() < 1e-12);
    }

    #[test]
    fn sampled_density_rejects_bad_knots() {
        assert!(SampledDensity::from_density(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
        assert!(SampledDensity::from_density(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(SampledDensity::from_density(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let cases = vec![
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::scaled_power(4.0, 0.125).unwrap(),
            YoungFunction::power_log(1.0).unwrap(),
            YoungFunction::exp_minus_linear(),
            YoungFunction::SampledDensity(
                SampledDensity::from_density(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap(),
            ),
        ];
        for b in cases {
            let s = serde_json::to_string(&b).unwrap();
            let back: YoungFunction = serde_json::from_str(&s).unwrap();
            assert_eq!(back, b);
        }
        let s = serde_json::to_string(&YoungFunction::power(2.0).unwrap()).unwrap();
        assert_eq!(s, r#"{"kind":"power","params":[2.0]}"#);
        assert!(serde_json::from_str::<YoungFunction>(r#"{"kind":"power","params":[0.5]}"#).is_err());
        assert!(serde_json::from_str::<YoungFunction>(r#"{"kind":"cosh","params":[]}"#).is_err());
    }

    #[test]
    fn complementary_quadratics() {
        let ladder = geometric_ladder(1e-3, 1e2, 50);
        let half = YoungFunction::scaled_power(2.0, 0.5).unwrap();
        let c = complementary(&half, &ladder).unwrap();
        for &t in &[0.01, 0.5, 1.0, 3.0, 50.0] {
            let v = c.value(t).unwrap();
            assert!((v - 0.5 * t * t).abs() <= 1e-6 * (0.5 * t * t), "t={t}");
        }
        let sq = YoungFunction::power(2.0).unwrap();
        let c = complementary(&sq, &ladder).unwrap();
        for &t in &[0.01, 0.5, 1.0, 3.0, 50.0] {
            let v = c.value(t).unwrap();
            assert!((v - 0.25 * t * t).abs() <= 1e-6 * (0.25 * t * t), "t={t}");
        }
    }

    /// Brute-force supremum of `s t - B(s)` over a geometric grid of 1e5 points.
    fn brute_force_conjugate(b: &YoungFunction, t: f64) -> f64 {
        let n = 100_000;
        (0..n)
            .map(|i| 1e-6 * (1e12_f64).powf(i as f64 / (n - 1) as f64))
            .map(|s| s * t - b.eval(s))
            .fold(0.0, f64::max)
    }

    #[test]
    fn complementary_of_cubic_over_three() {
        let b = YoungFunction::scaled_power(3.0, 1.0 / 3.0).unwrap();
        let ladder = vec![0.25, 0.5, 1.0, 2.0, 4.0];
        let c = complementary(&b, &ladder).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            let oracle = brute_force_conjugate(&b, t);
            let closed = t.powf(1.5) / 1.5;
            assert!((oracle - closed).abs() <= 1e-6 * closed);
            let v = c.value(t).unwrap();
            assert!((v - oracle).abs() <= 1e-6 * closed, "t={t} v={v} oracle={oracle}");
        }
    }

    #[test]
    fn complementary_fails_when_sup_escapes_the_grid() {
        // density of t^2 reaches 2e6 at the grid end; asking for t = 1e7 escapes
        let b = YoungFunction::power(2.0).unwrap();
        let err = complementary(&b, &[1.0, 1e7]).unwrap_err();
        assert!(matches!(err, YoungError::Unstable { .. }));
    }

    #[test]
    fn delta2_examples() {
        let c = delta2_certificate(&YoungFunction::power(2.0).unwrap(), 1.0, 1e6).unwrap();
        assert!(c.passed);
        assert_eq!(c.constant, 4.0);

        let c = delta2_certificate(&YoungFunction::exp_minus_linear(), 1.0, 1e3).unwrap();
        assert!(!c.passed);
        assert!(c.constant.is_infinite());

        let c = delta2_certificate(&YoungFunction::power_log(2.0).unwrap(), 1.0, 1e6).unwrap();
        assert!(c.passed);
        assert!(c.constant <= 8.0);
        // oracle: dense scan of 4 ln(e + 2t)/ln(e + t), peaked near t = 4.18
        let e = std::f64::consts::E;
        let oracle = (0..=200_000)
            .map(|k| 10f64.powf(6.0 * k as f64 / 200_000.0))
            .map(|t| 4.0 * (e + 2.0 * t).ln() / (e + t).ln())
            .fold(0.0, f64::max);
        assert!(c.constant <= oracle + 1e-12);
        assert!(c.constant >= oracle - 1e-3);

        assert!(delta2_certificate(&YoungFunction::power(2.0).unwrap(), 0.0, 1.0).is_err());
    }

    #[test]
    fn delta2_detects_rising_ratios_without_overflow() {
        // e^t - t - 1 on [1, 100]: finite but exploding ratios
        let c = delta2_certificate(&YoungFunction::exp_minus_linear(), 1.0, 100.0).unwrap();
        assert!(c.constant.is_finite());
        assert!(!c.passed);
    }

    #[test]
    fn nabla2_examples() {
        let grid = default_beta_grid();
        let c = nabla2_certificate(&YoungFunction::power(2.0).unwrap(), 2.0, 1e6, &[1.5, 2.0, 3.0])
            .unwrap();
        assert!(c.passed);
        assert_eq!(c.constant, 2.0);

        let c = nabla2_certificate(&YoungFunction::power(3.0).unwrap(), 2.0, 1e6, &grid).unwrap();
        assert!(c.passed);
        let exact = 2f64.sqrt();
        assert!(c.constant >= exact * (1.0 - 1e-12) && c.constant <= exact * 1.01);

        let grid = geometric_ladder(1.01, 1e4, 200);
        let c = nabla2_certificate(&YoungFunction::power_log(1.0).unwrap(), 2.0, 1e6, &grid)
            .unwrap();
        assert!(!c.passed);

        assert!(nabla2_certificate(&YoungFunction::power(2.0).unwrap(), 1.0, 10.0, &grid).is_err());
        assert!(nabla2_certificate(&YoungFunction::power(2.0).unwrap(), 2.0, 10.0, &[0.9]).is_err());
    }

    #[test]
    fn certificate_serializes_infinite_ratio_as_null() {
        let c = delta2_certificate(&YoungFunction::exp_minus_linear(), 1.0, 1e3).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"constant\":null"));
        let back: GrowthCertificate = serde_json::from_str(&s).unwrap();
        assert!(back.constant.is_infinite());
    }

    #[test]
    fn modular_examples() {
        let b = YoungFunction::power(2.0).unwrap();
        let zero = GridField::sample_cells(&unit_grid(16), 1, |_, out| out[0] = 0.0).unwrap();
        assert_eq!(modular(&b, &zero).unwrap(), 0.0);
        let two = GridField::sample_cells(&unit_grid(16), 1, |_, out| out[0] = 2.0).unwrap();
        assert_eq!(modular(&b, &two).unwrap(), 4.0);
        let id = GridField::sample_cells(&unit_grid(1024), 1, |x, out| out[0] = x[0]).unwrap();
        assert!((modular(&b, &id).unwrap() - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn norm_examples() {
        let b = YoungFunction::power(2.0).unwrap();
        let zero = GridField::sample_cells(&unit_grid(8), 1, |_, out| out[0] = 0.0).unwrap();
        assert_eq!(luxemburg_norm(&b, &zero, 1e-10).unwrap(), 0.0);
        for c in [-3.5, 0.2, 1.0, 7.0] {
            let u = GridField::sample_cells(&unit_grid(8), 1, |_, out| out[0] = c).unwrap();
            let k = luxemburg_norm(&b, &u, 1e-10).unwrap();
            assert!((k - c.abs()).abs() <= 1e-9 * c.abs());
        }
    }

    #[test]
    fn norm_of_huge_field_under_exponential_growth() {
        let b = YoungFunction::exp_minus_linear();
        let u = GridField::sample_cells(&unit_grid(4), 1, |_, out| out[0] = 1e4).unwrap();
        let k = luxemburg_norm(&b, &u, 1e-10).unwrap();
        // e^s - s - 1 = 1 at s ~ 1.1462
        assert!((1e4 / k - 1.146_193_220_620_582_6).abs() < 1e-6);
    }

    #[test]
    fn norm_rejects_nonfinite_data() {
        let b = YoungFunction::power(2.0).unwrap();
        assert!(matches!(
            luxemburg_samples(&b, &[1.0, f64::NAN], 1.0, 1e-10),
            Err(YoungError::Data(_))
        ));
    }

    fn young_strategy() -> impl Strategy<Value = YoungFunction> {
        prop_oneof![
            (1.1f64..4.0).prop_map(|p| YoungFunction::power(p).unwrap()),
            (1.0f64..3.0).prop_map(|p| YoungFunction::power_log(p).unwrap()),
            Just(YoungFunction::exp_minus_linear()),
        ]
    }

    proptest! {
        #[test]
        fn convexity_on_samples(b in young_strategy(), t1 in 0.0f64..5.0, dt in 0.0f64..5.0, lam in 0.0f64..1.0) {
            let t2 = t1 + dt;
            let lhs = b.eval(lam * t1 + (1.0 - lam) * t2);
            let rhs = lam * b.eval(t1) + (1.0 - lam) * b.eval(t2);
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn norm_homogeneity(vals in proptest::collection::vec(-5.0f64..5.0, 8), c in -4.0f64..4.0) {
            prop_assume!(vals.iter().any(|v| v.abs() > 1e-3));
            let b = YoungFunction::power(3.0).unwrap();
            let tol = 1e-10;
            let mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
            let scaled: Vec<f64> = mags.iter().map(|m| m * c.abs()).collect();
            let n1 = luxemburg_samples(&b, &mags, 0.125, tol).unwrap();
            let n2 = luxemburg_samples(&b, &scaled, 0.125, tol).unwrap();
            prop_assert!((n2 - c.abs() * n1).abs() <= 2.0 * tol * (1.0 + n2));
        }

        #[test]
        fn norm_triangle(u in proptest::collection::vec(-5.0f64..5.0, 8), v in proptest::collection::vec(-5.0f64..5.0, 8)) {
            let b = YoungFunction::power_log(2.0).unwrap();
            let tol = 1e-10;
            let nu = luxemburg_samples(&b, &u.iter().map(|x| x.abs()).collect::<Vec<_>>(), 0.125, tol).unwrap();
            let nv = luxemburg_samples(&b, &v.iter().map(|x| x.abs()).collect::<Vec<_>>(), 0.125, tol).unwrap();
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| (a + b).abs()).collect();
            let ns = luxemburg_samples(&b, &sum, 0.125, tol).unwrap();
            prop_assert!(ns <= nu + nv + 4.0 * tol);
        }

        #[test]
        fn young_inequality(s in 0.0f64..20.0, t in 0.0f64..20.0) {
            let b = YoungFunction::scaled_power(3.0, 1.0 / 3.0).unwrap();
            let ladder = geometric_ladder(1e-3, 50.0, 100);
            let c = complementary(&b, &ladder).unwrap();
            prop_assert!(s * t <= b.eval(s) + c.value(t).unwrap() + 1e-8);
        }
    }
}
