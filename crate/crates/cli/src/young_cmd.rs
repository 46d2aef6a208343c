use anyhow::{bail, Result};
use serde_json::json;

use unfold_homog::field::{BoxDomain, Boundary, Grid, GridField, Location};
use unfold_homog::seed::derive_seed;
use unfold_homog::young::{delta2_certificate, default_beta_grid, luxemburg_norm, modular, nabla2_certificate};

use crate::config::{FieldSource, YoungTask};
use crate::manifest::TaskStatus;
use crate::Outcome;

pub fn check(task: &YoungTask) -> Result<Outcome> {
    let b = &task.function;
    let d2 = delta2_certificate(b, task.delta2.t0, task.delta2.t_max)?;
    let n2 = nabla2_certificate(b, task.nabla2.t0, task.nabla2.t_max, &default_beta_grid())?;
    let passed = d2.passed && n2.passed;
    let mut csv = String::from("condition,t0,t_max,constant,sup_ratio_observed,passed\n");
    for c in [&d2, &n2] {
        csv.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{}\n",
            c.condition, c.scan_range[0], c.scan_range[1], c.constant, c.sup_ratio_observed, c.passed
        ));
    }
    let report = json!({
        "function": b,
        "delta2": d2,
        "nabla2": n2,
        "passed": passed,
    });
    Ok(Outcome {
        tasks: vec![
            TaskStatus { name: "delta2".into(), status: status(d2.passed) },
            TaskStatus { name: "nabla2".into(), status: status(n2.passed) },
        ],
        files: vec![("certificates.json".into(), pretty(&report)?), ("certificates.csv".into(), csv.clone().into_bytes())],
        report,
        csv,
        exit: if passed { 0 } else { 2 },
    })
}

pub fn norm(task: &YoungTask, seed: u64) -> Result<Outcome> {
    let Some(source) = &task.field else {
        bail!("young norm needs a \"field\" entry in the config");
    };
    let u = build_field(source, seed)?;
    let b = &task.function;
    let (report, exit) = match luxemburg_norm(b, &u, task.tolerance) {
        Ok(k) => {
            let m = modular(b, &u)?;
            (json!({"function": b, "field": source, "luxemburg_norm": k, "modular": m, "passed": true}), 0)
        }
        Err(e) => (json!({"function": b, "field": source, "error": e.to_string(), "passed": false}), 2),
    };
    let csv = format!(
        "luxemburg_norm,modular\n{},{}\n",
        report["luxemburg_norm"].as_f64().map_or_else(|| "nan".into(), |v| format!("{v:?}")),
        report["modular"].as_f64().map_or_else(|| "nan".into(), |v| format!("{v:?}")),
    );
    Ok(Outcome {
        tasks: vec![TaskStatus { name: "norm".into(), status: status(exit == 0) }],
        files: vec![("norm.json".into(), pretty(&report)?)],
        report,
        csv,
        exit,
    })
}

fn status(ok: bool) -> String {
    if ok { "passed" } else { "failed" }.into()
}

pub(crate) fn pretty(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut text = serde_json::to_vec_pretty(v)?;
    text.push(b'\n');
    Ok(text)
}

/// Uniform draw in `[-1, 1)` from a derived seed.
pub(crate) fn unit(seed: u64, tags: &[u64]) -> f64 {
    (derive_seed(seed, tags) >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Seeded smooth field: a constant plus `modes` sines per axis.
pub(crate) fn random_field(grid: &Grid, modes: usize, seed: u64, tag: u64) -> Result<GridField> {
    let n = grid.dim();
    let coef: Vec<(f64, f64)> = (0..modes * n)
        .map(|k| (unit(seed, &[tag, k as u64, 0]), unit(seed, &[tag, k as u64, 1])))
        .collect();
    let offset = unit(seed, &[tag, u64::MAX]);
    Ok(GridField::sample_cells(grid, 1, |x, out| {
        let mut v = offset;
        for a in 0..n {
            for m in 0..modes {
                let (amp, phase) = coef[a * modes + m];
                v += amp * (std::f64::consts::TAU * ((m + 1) as f64 * x[a] + phase)).sin() / (m + 1) as f64;
            }
        }
        out[0] = v;
    })?)
}

fn build_field(source: &FieldSource, seed: u64) -> Result<GridField> {
    match source {
        FieldSource::Values { resolution, values } => {
            let grid = Grid::new(BoxDomain::unit(resolution.len()), resolution.clone())?;
            Ok(GridField::from_values(grid, 1, Boundary::Free, Location::Cell, values.clone())?)
        }
        FieldSource::Sine { dim, resolution, amplitude, frequency } => {
            let grid = Grid::uniform(BoxDomain::unit(*dim), *resolution)?;
            Ok(GridField::sample_cells(&grid, 1, |x, out| {
                out[0] = amplitude
                    * x.iter().map(|&v| (std::f64::consts::TAU * frequency * v).sin()).product::<f64>();
            })?)
        }
        FieldSource::Random { dim, resolution, modes } => {
            random_field(&Grid::uniform(BoxDomain::unit(*dim), *resolution)?, *modes, seed, 0x4e4f_524d)
        }
    }
}
