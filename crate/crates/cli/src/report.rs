//! Merges evaluated runs into a results table, per-model loss curves and a
//! parameter-reduction summary. Numbers are written at fixed precision so
//! reports diff cleanly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ppm_core::models::ModelType;

use crate::artifacts::{ensure_dir, read_history, HISTORY_FILE, METRICS_FILE};
use crate::commands::MetricsRow;
use crate::error::{CliError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const REDUCTION_FILE: &str = "reduction.csv";
pub const CURVES_DIR: &str = "curves";

/// (full, light) pairs compared in the reduction summary.
pub const PAIRS: [(ModelType, ModelType); 2] = [
    (ModelType::Mtlformer, ModelType::MtlformerLight),
    (ModelType::Lstm, ModelType::LstmLight),
];

struct Run {
    metrics: MetricsRow,
    dir: PathBuf,
}

fn read_metrics(dir: &Path) -> Result<Vec<MetricsRow>> {
    let path = dir.join(METRICS_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn model_rank(t: ModelType) -> usize {
    ModelType::ALL.iter().position(|&m| m == t).expect("listed")
}

fn pct_change(full: f64, light: f64) -> f64 {
    100.0 * (light - full) / full
}

pub fn report(inputs: &[PathBuf], out: &Path) -> Result<()> {
    // Keyed by (log, model order) so output order is independent of input order.
    let mut runs: BTreeMap<(String, usize), Run> = BTreeMap::new();
    for dir in inputs {
        for metrics in read_metrics(dir)? {
            let key = (metrics.log.clone(), model_rank(metrics.model));
            if runs.contains_key(&key) {
                return Err(CliError::Data(format!("{} / {} appears in more than one input", metrics.log, metrics.model)));
            }
            runs.insert(key, Run { metrics, dir: dir.clone() });
        }
    }
    ensure_dir(out)?;
    ensure_dir(&out.join(CURVES_DIR))?;

    let mut w = csv::Writer::from_path(out.join(RESULTS_FILE))?;
    w.write_record(["log", "model", "nap_f1", "nrp_f1", "nwtp_mae", "ndp_mae", "rtp_mae", "parameters"])?;
    for run in runs.values() {
        let m = &run.metrics;
        w.write_record([
            m.log.clone(),
            m.model.to_string(),
            format!("{:.4}", m.nap_f1),
            format!("{:.4}", m.nrp_f1),
            format!("{:.4}", m.nwtp_mae),
            format!("{:.4}", m.ndp_mae),
            format!("{:.4}", m.rtp_mae),
            m.parameters.to_string(),
        ])?;
    }
    w.flush()?;

    for run in runs.values() {
        let history = run.dir.join(HISTORY_FILE);
        if !history.exists() {
            continue;
        }
        let m = &run.metrics;
        let mut w = csv::Writer::from_path(out.join(CURVES_DIR).join(format!("{}_{}.csv", m.log, m.model)))?;
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for row in read_history(&history)? {
            w.write_record([row.epoch.to_string(), format!("{:.6}", row.train_loss), format!("{:.6}", row.val_loss)])?;
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_path(out.join(REDUCTION_FILE))?;
    w.write_record([
        "log",
        "full",
        "light",
        "full_params",
        "light_params",
        "param_reduction_pct",
        "nap_change_pct",
        "nrp_change_pct",
    ])?;
    let logs: Vec<String> = runs.keys().map(|(l, _)| l.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for log in &logs {
        for (full, light) in PAIRS {
            let (Some(f), Some(l)) = (
                runs.get(&(log.clone(), model_rank(full))),
                runs.get(&(log.clone(), model_rank(light))),
            ) else {
                continue;
            };
            let (f, l) = (&f.metrics, &l.metrics);
            let reduction = -pct_change(f.parameters as f64, l.parameters as f64);
            let nap = pct_change(f.nap_f1, l.nap_f1);
            let nrp = pct_change(f.nrp_f1, l.nrp_f1);
            w.write_record([
                log.clone(),
                full.to_string(),
                light.to_string(),
                f.parameters.to_string(),
                l.parameters.to_string(),
                format!("{reduction:.2}"),
                format!("{nap:.2}"),
                format!("{nrp:.2}"),
            ])?;
            println!("{log}: {light} reduces the parameters of {full} by {reduction:.2}% (NAP F1 {nap:+.2}%, NRP F1 {nrp:+.2}%)");
        }
    }
    w.flush()?;
    Ok(())
}
