//! CSV tables and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::approx::QuantileTable;
use crate::error::Result;
use crate::simkit::config::StudyConfig;
use crate::simkit::study::{AccuracyReport, ApproximationReport, StudyOutput};

/// One CSV line: `key, row_label, value, stderr, excluded_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub key: f64,
    pub label: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    /// `q` or `p_over_N`.
    pub key_column: &'static str,
    pub rows: Vec<TableRow>,
}

/// 17 significant digits, so values survive a text round trip exactly.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

impl CsvTable {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.key_column, "row_label", "value", "stderr", "excluded_count"])?;
        for r in &self.rows {
            w.write_record([
                fmt_num(r.key),
                r.label.clone(),
                fmt_num(r.value),
                r.stderr.map(fmt_num).unwrap_or_default(),
                r.excluded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Value of a row, if present.
    pub fn value(&self, key: f64, label: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.key == key && r.label == label)
            .map(|r| r.value)
    }
}

/// Quantile rows of a plain table, with `stderr` left empty.
pub fn quantile_rows(label: &str, t: &QuantileTable) -> Vec<TableRow> {
    t.q_levels
        .iter()
        .zip(&t.quantiles)
        .map(|(&q, &v)| TableRow {
            key: q,
            label: label.to_string(),
            value: v,
            stderr: None,
            excluded: t.excluded,
        })
        .collect()
}

/// `Ê` rows (stderr `Ŝ/√m`) followed by `Ŝ` rows for a replicated table.
fn replicated_rows(mean_label: &str, sd_label: &str, t: &QuantileTable) -> Vec<TableRow> {
    let stats = t.replication_stats.as_ref().expect("replicated table");
    let mut rows = Vec::new();
    for (j, &q) in t.q_levels.iter().enumerate() {
        let m = stats.used[j] as f64;
        rows.push(TableRow {
            key: q,
            label: mean_label.to_string(),
            value: stats.mean[j],
            stderr: Some(stats.std_err[j] / m.sqrt()),
            excluded: stats.excluded[j],
        });
    }
    for (j, &q) in t.q_levels.iter().enumerate() {
        let m = stats.used[j] as f64;
        rows.push(TableRow {
            key: q,
            label: sd_label.to_string(),
            value: stats.std_err[j],
            stderr: Some(stats.std_err[j] / (2.0 * (m - 1.0)).max(1.0).sqrt()),
            excluded: stats.excluded[j],
        });
    }
    rows
}

pub fn approximation_table(name: &str, rep: &ApproximationReport) -> CsvTable {
    let mut rows = quantile_rows("F_inv", &rep.reference);
    rows.extend(quantile_rows("Phi_inv", &rep.normal));
    rows.extend(quantile_rows("H_inv", &rep.edgeworth_true));
    let single = rep.edgeworth_aux.len() == 1;
    for (rho, _, _, table) in &rep.edgeworth_aux {
        let label = if single {
            "zH_inv".to_string()
        } else {
            format!("zH_inv[rho={rho}]")
        };
        rows.extend(quantile_rows(&label, table));
    }
    rows.extend(replicated_rows("E_Hhat_inv", "S_Hhat_inv", &rep.edgeworth_hat));
    rows.extend(replicated_rows("E_Ftilde_inv", "S_Ftilde_inv", &rep.bootstrap));
    CsvTable {
        name: name.to_string(),
        key_column: "q",
        rows,
    }
}

/// Rows `bias:<method>` and `rmse:<method>`, both multiplied by 10.
pub fn accuracy_table(name: &str, rep: &AccuracyReport) -> CsvTable {
    let mut rows = Vec::new();
    for r in &rep.rows {
        rows.push(TableRow {
            key: r.p_over_n,
            label: format!("bias:{}", r.method),
            value: 10.0 * r.bias,
            stderr: Some(10.0 * r.bias_se),
            excluded: 0,
        });
        rows.push(TableRow {
            key: r.p_over_n,
            label: format!("rmse:{}", r.method),
            value: 10.0 * r.rmse,
            stderr: Some(10.0 * r.rmse_se),
            excluded: 0,
        });
    }
    CsvTable {
        name: name.to_string(),
        key_column: "p_over_N",
        rows,
    }
}

/// CSV tables of a study; several approximation reports get suffixed names.
pub fn study_tables(cfg: &StudyConfig, out: &StudyOutput) -> Vec<CsvTable> {
    match out {
        StudyOutput::Accuracy(rep) => vec![accuracy_table(&cfg.name, rep)],
        StudyOutput::Approximation(reps) if reps.len() == 1 => {
            vec![approximation_table(&cfg.name, &reps[0])]
        }
        StudyOutput::Approximation(reps) => reps
            .iter()
            .map(|r| approximation_table(&format!("{}_p{}_{}", cfg.name, r.p, r.kind), r))
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct CorrelationEntry {
    pub p: usize,
    pub rho_target: f64,
    pub rho_realized: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub tables: Vec<String>,
    pub realized_correlations: Vec<CorrelationEntry>,
    pub config: &'a StudyConfig,
}

pub fn realized_correlations(out: &StudyOutput) -> Vec<CorrelationEntry> {
    match out {
        StudyOutput::Accuracy(rep) => rep
            .correlations
            .iter()
            .map(|c| CorrelationEntry {
                p: c.p,
                rho_target: c.rho_target,
                rho_realized: c.rho_realized,
            })
            .collect(),
        StudyOutput::Approximation(reps) => reps
            .iter()
            .flat_map(|r| {
                r.edgeworth_aux
                    .iter()
                    .map(|(target, realized, _, _)| CorrelationEntry {
                        p: r.p,
                        rho_target: *target,
                        rho_realized: *realized,
                    })
            })
            .collect(),
    }
}

/// Writes every table as `<name>.csv` plus `manifest.json`; returns the paths.
pub fn write_outputs(dir: &Path, tables: &[CsvTable], manifest: &Manifest<'_>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        t.write(std::fs::File::create(&path)?)?;
        paths.push(path);
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n")?;
    paths.push(path);
    Ok(paths)
}
