//! Post-run summaries over a finished output directory: per-model deltas
//! against the history-only (`none`) feature baseline, and the
//! predictability-vs-skill table pairing each channel's entropy with the
//! achieved MASE.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub feature_group: String,
    pub nrmse: Option<f64>,
    pub nrmse_none: Option<f64>,
    /// Relative improvement over the `none` baseline (positive = better).
    pub improvement: Option<f64>,
    pub mase: Option<f64>,
}

struct GridRow {
    model: String,
    group: String,
    ok: bool,
    nrmse: Option<f64>,
    mase: Option<f64>,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_grid(path: &Path) -> Result<Vec<GridRow>> {
    let lines = read_lines(path)?;
    let mut out = Vec::new();
    for line in lines.iter().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 9 {
            return Err(Error::Csv {
                path: path.display().to_string(),
                message: format!("short row: '{line}'"),
            });
        }
        out.push(GridRow {
            model: f[0].into(),
            group: f[1].into(),
            ok: f[2] == "ok",
            nrmse: f[4].parse().ok(),
            mase: f[7].parse().ok(),
        });
    }
    Ok(out)
}

/// Summarize a finished run directory; writes `summary.csv` and
/// `wpe_vs_mase.csv` next to `grid.csv` and returns the summary rows.
pub fn summarize(out_dir: &Path, target: &str) -> Result<Vec<SummaryRow>> {
    let grid = parse_grid(&out_dir.join("grid.csv"))?;

    let baseline: HashMap<&str, Option<f64>> = grid
        .iter()
        .filter(|r| r.group == "none" && r.ok)
        .map(|r| (r.model.as_str(), r.nrmse))
        .collect();

    let mut rows = Vec::new();
    for r in &grid {
        if !r.ok {
            continue;
        }
        let nrmse_none = baseline.get(r.model.as_str()).copied().flatten();
        let improvement = match (r.nrmse, nrmse_none) {
            (Some(x), Some(b)) if b != 0.0 => Some((b - x) / b),
            _ => None,
        };
        rows.push(SummaryRow {
            model: r.model.clone(),
            feature_group: r.group.clone(),
            nrmse: r.nrmse,
            nrmse_none,
            improvement,
            mase: r.mase,
        });
    }

    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv =
        String::from("model,feature_group,nrmse,nrmse_none,improvement_vs_none,mase\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.model,
            r.feature_group,
            fmt(r.nrmse),
            fmt(r.nrmse_none),
            fmt(r.improvement),
            fmt(r.mase)
        ));
    }
    std::fs::write(out_dir.join("summary.csv"), &csv).map_err(|e| Error::Io {
        path: out_dir.join("summary.csv").display().to_string(),
        source: e,
    })?;

    // entropy vs achieved skill for the forecast target
    let pred_lines = read_lines(&out_dir.join("predictability.csv"))?;
    let wpe_norm = pred_lines
        .iter()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f.first() == Some(&target))
        .and_then(|f| f.get(2).and_then(|v| v.parse::<f64>().ok()));
    let mut wm = String::from("channel,wpe_normalized,model,feature_group,mase\n");
    for r in &rows {
        if let Some(m) = r.mase {
            wm.push_str(&format!(
                "{},{},{},{},{}\n",
                target,
                fmt(wpe_norm),
                r.model,
                r.feature_group,
                m
            ));
        }
    }
    std::fs::write(out_dir.join("wpe_vs_mase.csv"), &wm).map_err(|e| Error::Io {
        path: out_dir.join("wpe_vs_mase.csv").display().to_string(),
        source: e,
    })?;

    Ok(rows)
}
