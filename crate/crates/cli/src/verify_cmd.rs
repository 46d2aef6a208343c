use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use unfold_homog::cell::{estimate_f_hom, hom_table, task_seed, xi_tensor_grid, CellBoundary};
use unfold_homog::field::{BoxDomain, Grid, GridField};
use unfold_homog::harness::{
    dirichlet_minimize, eps_sweep_affine, manufactured_unfolding_check, relaxation_equivalence_check, Corrector,
    MacroField,
};
use unfold_homog::integrand::convex_envelope_1d;
use unfold_homog::young::YoungFunction;
use unfold_homog::unfold::{
    decompose, dictionary_weak_check, modular_identity_report, pointwise_product, product_rule_defect, uci_defect,
    unfold,
};

use crate::config::{RelaxationSuite, SweepSuite, TwoScaleSuite, UnfoldSuite, VerifyTask};
use crate::manifest::TaskStatus;
use crate::young_cmd::{pretty, random_field};
use crate::Outcome;

pub const SUITES: [&str; 4] = ["unfold", "two-scale", "sweep", "relaxation"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    /// `measured <= threshold`, or `>=` when `at_least` is set.
    pub threshold: f64,
    pub at_least: bool,
    pub passed: bool,
}

#[derive(Debug, Default)]
struct Ledger(Vec<Assertion>);

impl Ledger {
    fn at_most(&mut self, name: impl Into<String>, measured: f64, threshold: f64) {
        let passed = measured <= threshold;
        self.0.push(Assertion { name: name.into(), measured, threshold, at_least: false, passed });
    }

    fn at_least(&mut self, name: impl Into<String>, measured: f64, threshold: f64) {
        let passed = measured >= threshold;
        self.0.push(Assertion { name: name.into(), measured, threshold, at_least: true, passed });
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.at_least(name, if ok { 1.0 } else { 0.0 }, 1.0);
    }
}

/// Runs one named suite; exit 2 when any assertion fails.
pub fn run(suite: &str, task: &VerifyTask, seed: u64) -> Result<Outcome> {
    let mut ledger = Ledger::default();
    let details = match suite {
        "unfold" => unfold_suite(&task.unfold, seed, &mut ledger)?,
        "two-scale" => two_scale_suite(&task.two_scale, &mut ledger)?,
        "sweep" => sweep_suite(&task.sweep, seed, &mut ledger)?,
        "relaxation" => relaxation_suite(&task.relaxation, seed, &mut ledger)?,
        other => bail!("unknown suite {other:?}; available suites: {}", SUITES.join(", ")),
    };
    let assertions = ledger.0;
    let failed = assertions.iter().filter(|a| !a.passed).count();
    let mut csv = String::from("name,measured,relation,threshold,passed\n");
    for a in &assertions {
        csv.push_str(&format!(
            "{},{:?},{},{:?},{}\n",
            a.name,
            a.measured,
            if a.at_least { ">=" } else { "<=" },
            a.threshold,
            a.passed
        ));
    }
    let report = json!({
        "suite": suite,
        "seed": seed,
        "passed": failed == 0,
        "failed": failed,
        "assertions": assertions,
        "details": details,
    });
    Ok(Outcome {
        tasks: vec![TaskStatus {
            name: suite.to_string(),
            status: if failed == 0 { "passed".into() } else { format!("{failed} assertions failed") },
        }],
        files: vec![("report.json".into(), pretty(&report)?), ("assertions.csv".into(), csv.clone().into_bytes())],
        report,
        csv,
        exit: if failed == 0 { 0 } else { 2 },
    })
}

fn young_label(b: &YoungFunction) -> String {
    match b {
        YoungFunction::Power { p, scale } if *scale == 1.0 => format!("power({p})"),
        YoungFunction::Power { p, scale } => format!("power({p};{scale})"),
        YoungFunction::PowerLog { p } => format!("power_log({p})"),
        other => other.kind_name().to_string(),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn unfold_suite(cfg: &UnfoldSuite, seed: u64, ledger: &mut Ledger) -> Result<serde_json::Value> {
    let mut identities = Vec::new();
    for (n, res) in [(1, cfg.resolution_1d), (2, cfg.resolution_2d)] {
        let grid = Grid::uniform(BoxDomain::unit(n), res)?;
        let w = random_field(&grid, cfg.modes, seed, 2 * n as u64)?;
        let v = random_field(&grid, cfg.modes, seed, 2 * n as u64 + 1)?;
        for &eps in &cfg.epsilons {
            let dec = decompose(&grid, eps)?;
            let Some(y_res) = dec.natural_y_res() else {
                bail!("epsilon {eps} is not aligned with resolution {res}");
            };
            let tag = format!("N={n},eps={eps}");
            for b in &cfg.functions {
                let r = modular_identity_report(b, &w, &dec, 1e-13)?;
                let name = format!("{tag},B={}", young_label(b));
                ledger.at_most(format!("modular_identity[{name}]"), r.relative_defect, cfg.tolerance);
                ledger.at_most(
                    format!("norm_identity[{name}]"),
                    r.norm_identity_gap / r.norm_interior.max(f64::MIN_POSITIVE),
                    1e-8,
                );
                ledger.holds(format!("contraction[{name}]"), r.contraction_holds);
                ledger.holds(format!("boundary_layer_bound[{name}]"), r.lambda_bound_holds);
                ledger.holds(format!("norm_estimate[{name}]"), r.norm_estimate_holds);
                identities.push(json!({"N": n, "B": b, "report": r}));
            }
            let scale = max_abs(pointwise_product(&v, &w)?.values());
            ledger.at_most(format!("product_rule[{tag}]"), product_rule_defect(&v, &w, &dec, y_res)? / scale, cfg.tolerance);

            let profile = |y: &[f64]| y.iter().map(|&t| (std::f64::consts::TAU * t).cos() + 0.5 * (2.0 * std::f64::consts::TAU * t).sin()).sum::<f64>();
            let periodic = GridField::sample_cells(&grid, 1, |x, out| {
                let y: Vec<f64> = x.iter().map(|&t| t / eps).collect();
                out[0] = profile(&y);
            })?;
            let tw = unfold(&periodic, &dec, y_res)?;
            let mut gap = 0.0_f64;
            for c in 0..grid.cell_count() {
                if dec.is_interior(c) {
                    for j in 0..tw.y_cells() {
                        gap = gap.max((tw.value(c, j)[0] - profile(&tw.y_center(j))).abs());
                    }
                }
            }
            ledger.at_most(format!("periodic_sample[{tag}]"), gap / max_abs(periodic.values()), cfg.tolerance);
        }
    }

    let strip = Grid::uniform(BoxDomain::unit(1), cfg.strip_resolution)?;
    let b = &cfg.functions[0];
    let w = GridField::sample_cells(&strip, 1, |x, out| out[0] = 1.0 + x[0])?;
    let seq: Vec<(f64, GridField)> = cfg.strip_epsilons.iter().map(|&e| (e, w.clone())).collect();
    let records = uci_defect(b, &seq)?;
    for r in &records {
        let tag = format!("eps={}", r.epsilon);
        ledger.holds(format!("uci_aligned[{tag}]"), r.aligned);
        ledger.at_most(format!("uci_gap_le_lambda_mass[{tag}]"), r.gap - r.lambda_mass, 1e-13);
        if r.lambda_mass == 0.0 {
            ledger.at_most(format!("uci_empty_layer_gap[{tag}]"), r.gap, 1e-13);
        }
    }
    for pair in records.windows(2) {
        let tag = format!("eps={}->{}", pair[0].epsilon, pair[1].epsilon);
        ledger.holds(format!("uci_lambda_mass_decreasing[{tag}]"), pair[1].lambda_mass < pair[0].lambda_mass || pair[1].lambda_mass == 0.0);
        ledger.holds(format!("uci_gap_decreasing[{tag}]"), pair[1].gap <= pair[0].gap);
    }
    Ok(json!({"identities": identities, "uci": records}))
}

fn two_scale_suite(cfg: &TwoScaleSuite, ledger: &mut Ledger) -> Result<serde_json::Value> {
    let mut manufactured = Vec::new();
    for &n in &cfg.dims {
        let r = manufactured_unfolding_check(
            MacroField::HalfSquare,
            Corrector::XSinY,
            n,
            &cfg.epsilons,
            cfg.y_res,
            &cfg.function,
            1e-12,
        )?;
        let tag = format!("N={n}");
        ledger.at_least(format!("manufactured_order[{tag}]"), r.fitted_order.unwrap_or(f64::NAN), cfg.min_order);
        let c = r.errors.iter().zip(&r.epsilons).map(|(e, eps)| e / eps).fold(0.0, f64::max);
        ledger.at_most(format!("manufactured_constant[{tag}]"), c, cfg.error_constant);
        let exact = manufactured_unfolding_check(
            MacroField::Zero,
            Corrector::SinY,
            n,
            &cfg.epsilons,
            cfg.y_res,
            &cfg.function,
            1e-12,
        )?;
        ledger.at_most(format!("manufactured_exact[{tag}]"), max_abs(&exact.errors), cfg.exact_tolerance);
        manufactured.push(json!({"N": n, "report": r, "exact": exact}));
    }

    // v_eps(x) = (1 + x) (1 + sin(2 pi x / eps)) two-scale converges to (1 + x)(1 + sin(2 pi y))
    let seq = cfg
        .weak_epsilons
        .iter()
        .map(|&eps| -> Result<(f64, GridField)> {
            let k = (1.0 / eps).round() as usize;
            let grid = Grid::uniform(BoxDomain::unit(1), k * cfg.weak_cells_per_eps)?;
            let v = GridField::sample_cells(&grid, 1, |x, out| {
                out[0] = (1.0 + x[0]) * (1.0 + (std::f64::consts::TAU * x[0] / eps).sin());
            })?;
            Ok((eps, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let weak = dictionary_weak_check(
        &seq,
        |x, y| (1.0 + x[0]) * (1.0 + (std::f64::consts::TAU * y[0]).sin()),
        cfg.weak_cells_per_eps,
    )?;
    for pair in weak.windows(2) {
        ledger.holds(
            format!("weak_discrepancy_decreasing[eps={}->{}]", pair[0].epsilon, pair[1].epsilon),
            pair[1].max_discrepancy <= pair[0].max_discrepancy,
        );
    }
    for r in &weak {
        ledger.at_most(format!("weak_constant[eps={}]", r.epsilon), r.max_discrepancy / r.epsilon, cfg.weak_constant);
    }
    Ok(json!({"manufactured": manufactured, "weak": weak}))
}

const SWEEP_TAG: u64 = 0x5357_4545;
const RELAX_TAG: u64 = 0x5245_4c58;

fn sweep_suite(cfg: &SweepSuite, seed: u64, ledger: &mut Ledger) -> Result<serde_json::Value> {
    let mut solver = cfg.solver;
    solver.seed = task_seed(seed, SWEEP_TAG);
    let sweep = eps_sweep_affine(&cfg.spec, &cfg.xi, &cfg.epsilons, cfg.resolution, &solver, cfg.reference)?;
    for row in &sweep.rows {
        ledger.at_most(
            format!("pipeline_gap[eps={}]", row.epsilon),
            row.pipeline_gap.unwrap_or(f64::NAN),
            cfg.pipeline_tolerance,
        );
    }
    for pair in sweep.rows.windows(2) {
        ledger.at_most(
            format!("gap_non_increasing[eps={}->{}]", pair[0].epsilon, pair[1].epsilon),
            pair[1].gap - pair[0].gap,
            cfg.noise_band * sweep.reference.abs().max(1.0),
        );
    }

    let m = cfg.spec.dims().len();
    let xi_grid = xi_tensor_grid(m, cfg.table.radius, cfg.table.spacing);
    let table = hom_table(&cfg.spec, &xi_grid, &cfg.table_ladder, cfg.table_resolution, &solver, CellBoundary::Zero)?;
    let dirichlet = dirichlet_minimize(
        &cfg.spec,
        &cfg.datum,
        &table,
        &cfg.dirichlet_epsilons,
        cfg.dirichlet_resolution,
        &solver,
        cfg.competitors,
    )?;
    if let Some(last) = dirichlet.rows.last() {
        ledger.at_most(format!("dirichlet_relative_gap[eps={}]", last.epsilon), last.relative_gap, cfg.dirichlet_tolerance);
    }
    Ok(json!({"sweep": sweep, "dirichlet": dirichlet, "table": table.summary()}))
}

fn relaxation_suite(cfg: &RelaxationSuite, seed: u64, ledger: &mut Ledger) -> Result<serde_json::Value> {
    let mut solver = cfg.solver;
    solver.seed = task_seed(seed, RELAX_TAG);
    let spec = &cfg.homogeneous;
    if spec.dims().len() != 1 {
        bail!("relaxation suite needs scalar integrands (N = d = 1)");
    }
    let s = cfg.sampling;
    let w = spec.potential().clone();
    let a = spec.coefficient_at(&[0.5]);
    let envelope = convex_envelope_1d(|x| a * w.value(&[x]), s.lo, s.hi, s.samples)?;
    let mut rows = Vec::new();
    for &xi in &cfg.homogeneous_xi {
        let est = estimate_f_hom(spec, &[xi], &cfg.ladder, cfg.resolution, &solver, CellBoundary::Zero)?;
        let f = est.f_hom.unwrap_or(f64::NAN);
        let env = envelope.eval(xi);
        if xi == 0.0 {
            ledger.at_most("f_hom_at_zero", f, cfg.zero_tolerance);
        }
        let rel = (f - env).abs() / f.abs().max(env.abs()).max(cfg.floor);
        ledger.at_most(format!("envelope_match[xi={xi}]"), rel, cfg.relative_tolerance);
        rows.push(json!({"xi": xi, "f_hom": est.f_hom, "envelope": env, "relative": rel, "estimate": est}));
    }
    let layered = relaxation_equivalence_check(
        &cfg.layered,
        &cfg.layered_xi,
        &cfg.ladder,
        cfg.resolution,
        &solver,
        cfg.sampling,
        cfg.floor,
    )?;
    for row in &layered.rows {
        ledger.at_most(
            format!("relaxed_pipeline_match[xi={}]", row.xi),
            row.relative.unwrap_or(f64::NAN),
            cfg.relative_tolerance,
        );
    }
    Ok(json!({"homogeneous": rows, "layered": layered}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_lists_the_suites() {
        let err = run("nope", &VerifyTask::default(), 0).unwrap_err().to_string();
        for s in SUITES {
            assert!(err.contains(s), "{err}");
        }
    }

    #[test]
    fn ledger_relations() {
        let mut l = Ledger::default();
        l.at_most("a", 1.0, 1.0);
        l.at_least("b", 0.5, 1.0);
        l.at_most("c", f64::NAN, 1.0);
        l.holds("d", true);
        let passed: Vec<bool> = l.0.iter().map(|a| a.passed).collect();
        assert_eq!(passed, vec![true, false, false, true]);
    }

    #[test]
    fn default_unfold_suite_passes() {
        let out = run("unfold", &VerifyTask::default(), 0).unwrap();
        let failed: Vec<_> = out.report["assertions"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|a| a["passed"] == false)
            .cloned()
            .collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert_eq!(out.exit, 0);
    }

    #[test]
    fn default_two_scale_suite_passes() {
        let out = run("two-scale", &VerifyTask::default(), 0).unwrap();
        let failed: Vec<_> = out.report["assertions"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|a| a["passed"] == false)
            .cloned()
            .collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }
}
