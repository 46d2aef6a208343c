use anyhow::{bail, Result};
use serde_json::json;

use unfold_homog::cell::{hom_table, task_seed, xi_tensor_grid};
use unfold_homog::integrand::{growth_check, GrowthSamples, DEFAULT_GROWTH_RADIUS};

use crate::config::HomTask;
use crate::manifest::TaskStatus;
use crate::young_cmd::pretty;
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Table,
}

const HOM_TAG: u64 = 0x484f_4d;

/// Certifies growth, then tabulates `f_hom`. Exit 3 when the declared
/// growth fails, 4 when no entry could be solved.
pub fn run(task: &HomTask, mode: Mode, seed: u64) -> Result<Outcome> {
    let spec = &task.spec;
    let m = spec.dims().len();
    let xi_grid = match mode {
        Mode::Solve => {
            if task.xi.is_empty() {
                bail!("hom solve needs a nonempty \"xi\" list");
            }
            task.xi.clone()
        }
        Mode::Table => {
            let Some(g) = task.xi_grid else {
                bail!("hom table needs an \"xi_grid\" entry");
            };
            if !(g.radius >= 0.0 && g.spacing > 0.0) {
                bail!("xi_grid needs radius >= 0 and spacing > 0");
            }
            xi_tensor_grid(m, g.radius, g.spacing)
        }
    };
    if let Some(bad) = xi_grid.iter().find(|x| x.len() != m) {
        bail!("xi {bad:?} has {} entries, the spec expects {m}", bad.len());
    }

    let growth = growth_check(spec, &spec.growth().b, &GrowthSamples::default_for(spec.dims(), DEFAULT_GROWTH_RADIUS))?;
    let growth_json = serde_json::to_value(&growth)?;
    if !growth.passed() {
        let report = json!({"growth": growth_json, "passed": false});
        return Ok(Outcome {
            tasks: vec![TaskStatus { name: "growth".into(), status: "rejected".into() }],
            files: vec![("growth.json".into(), pretty(&growth_json)?)],
            csv: String::new(),
            report,
            exit: 3,
        });
    }

    let mut solver = task.solver;
    solver.seed = task_seed(seed, HOM_TAG);
    let table = hom_table(spec, &xi_grid, &task.ladder, task.resolution, &solver, task.boundary)?;
    let mut csv = Vec::new();
    table.to_csv(&mut csv)?;
    let csv = String::from_utf8(csv)?;
    let mut summary = table.summary();
    summary["spec"] = serde_json::to_value(spec)?;
    let full = serde_json::to_value(&table)?;
    let solved = table.solved_count();
    let mut tasks = vec![TaskStatus { name: "growth".into(), status: "passed".into() }];
    tasks.extend(table.entries.iter().map(|e| TaskStatus {
        name: format!("xi={:?}", e.xi),
        status: match (e.f_hom.is_some(), e.failures) {
            (false, _) => "failed".into(),
            (true, 0) => "solved".into(),
            (true, k) => format!("solved with {k} failed ladder entries"),
        },
    }));
    Ok(Outcome {
        tasks,
        files: vec![
            ("growth.json".into(), pretty(&growth_json)?),
            ("table.csv".into(), csv.clone().into_bytes()),
            ("table.json".into(), pretty(&full)?),
            ("summary.json".into(), pretty(&summary)?),
        ],
        report: summary,
        csv,
        exit: if solved == 0 { 4 } else { 0 },
    })
}
