//! Artifacts: CSV tables, `summary.json` and `manifest.toml`.
//!
//! Floats are written with 17 significant digits and nothing depends on
//! wall-clock time, so equal inputs give byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::scenario::{Outcome, SnapshotKind};
use crate::LabError;

pub fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON number with 17 significant digits; `null` when not finite.
#[derive(Debug, Clone, Copy)]
struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        RawValue::from_string(f17(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

#[derive(Serialize)]
struct VerdictJson<'a> {
    check: &'a str,
    passed: bool,
    value: F17,
    threshold: F17,
    detail: &'a str,
}

#[derive(Serialize)]
struct BlowupJson {
    blowup_time: F17,
    exponent: F17,
    fit_residual: F17,
    stopped_at: F17,
    final_time: F17,
    fit_samples: usize,
}

#[derive(Serialize)]
struct DiagnosticJson<'a> {
    label: &'static str,
    group: &'a str,
    samples: usize,
    max_abs: F17,
    tail: F17,
    fitted_exponent: Option<F17>,
    r2: Option<F17>,
    fit_window: [F17; 2],
    verdict: Option<&'static str>,
    passed: Option<bool>,
    gated: bool,
}

#[derive(Serialize)]
struct EnergyJson<'a> {
    file: &'a str,
    samples: usize,
    s_first: F17,
    s_last: F17,
    f_first: F17,
    f_last: F17,
    f_min: F17,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    scenario: &'a str,
    passed: bool,
    exit_code: i32,
    seed: u64,
    verdicts: Vec<VerdictJson<'a>>,
    blowup: Option<BlowupJson>,
    diagnostics: Vec<DiagnosticJson<'a>>,
    energy: Vec<EnergyJson<'a>>,
    notes: &'a [String],
}

pub fn summary_json(outcome: &Outcome) -> String {
    let summary = SummaryJson {
        scenario: &outcome.config.name,
        passed: outcome.passed(),
        exit_code: outcome.exit_code(),
        seed: outcome.config.run.seed,
        verdicts: outcome
            .verdicts
            .iter()
            .map(|v| VerdictJson {
                check: &v.check,
                passed: v.passed,
                value: F17(v.value),
                threshold: F17(v.threshold),
                detail: &v.detail,
            })
            .collect(),
        blowup: outcome.blowup.as_ref().map(|b| BlowupJson {
            blowup_time: F17(b.blowup_time),
            exponent: F17(b.exponent),
            fit_residual: F17(b.fit_residual),
            stopped_at: F17(b.stopped_at),
            final_time: F17(b.final_time),
            fit_samples: b.fit_samples,
        }),
        diagnostics: outcome
            .diagnostics
            .iter()
            .map(|d| DiagnosticJson {
                label: d.series.label.as_str(),
                group: &d.group,
                samples: d.series.samples.len(),
                max_abs: F17(d.series.max_abs()),
                tail: F17(d.series.tail()),
                fitted_exponent: d.series.fitted_exponent.map(F17),
                r2: d.series.r2.map(F17),
                fit_window: [F17(d.series.fit_window.0), F17(d.series.fit_window.1)],
                verdict: d.verdict.map(|v| v.0),
                passed: d.verdict.map(|v| v.1),
                gated: d.gated,
            })
            .collect(),
        energy: outcome
            .energy
            .iter()
            .map(|t| {
                let first = t.reports.first();
                let last = t.reports.last();
                EnergyJson {
                    file: &t.file,
                    samples: t.reports.len(),
                    s_first: F17(first.map_or(f64::NAN, |r| r.s)),
                    s_last: F17(last.map_or(f64::NAN, |r| r.s)),
                    f_first: F17(first.map_or(f64::NAN, |r| r.f)),
                    f_last: F17(last.map_or(f64::NAN, |r| r.f)),
                    f_min: F17(t.reports.iter().map(|r| r.f).fold(f64::INFINITY, f64::min)),
                }
            })
            .collect(),
        notes: &outcome.notes,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    text.push('\n');
    text
}

/// Configuration as run, followed by a `[derived]` table of computed constants.
pub fn manifest_toml(outcome: &Outcome) -> Result<String, LabError> {
    let mut text = format!("# blowup-lab {}\n", env!("CARGO_PKG_VERSION"));
    text.push_str(
        &toml::to_string(&outcome.config).map_err(|e| LabError::Config(format!("cannot serialize manifest: {e}")))?,
    );
    text.push_str("\n[derived]\n");
    for (name, value) in &outcome.derived {
        let formatted = if value.is_nan() {
            "nan".to_string()
        } else if value.is_infinite() {
            if *value > 0.0 { "inf" } else { "-inf" }.to_string()
        } else {
            f17(*value)
        };
        text.push_str(&format!("{name} = {formatted}\n"));
    }
    Ok(text)
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), LabError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    writer.write_record(header).map_err(|e| output_error(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| output_error(path, e))?;
    }
    writer.flush().map_err(|e| output_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    fs::write(path, text).map_err(|e| output_error(path, e))
}

/// Writes every artifact of `outcome` into `dir`, creating it if needed.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    for table in &outcome.snapshots {
        let header = match table.kind {
            SnapshotKind::Physical => ["t", "r", "u", "ut"],
            SnapshotKind::Similarity => ["s", "r", "w", "ws"],
        };
        let rows = table.rows.iter().flat_map(|(time, value, rate)| {
            table
                .nodes
                .iter()
                .zip(value.iter().zip(rate))
                .map(move |(r, (v, d))| vec![f17(*time), f17(*r), f17(*v), f17(*d)])
        });
        write_csv(&dir.join(format!("{}.csv", table.file)), &header, rows)?;
    }
    for table in &outcome.energy {
        let rows = table.reports.iter().zip(&table.residuals).map(|(r, res)| {
            vec![
                f17(r.s),
                f17(r.e0),
                f17(r.i),
                f17(r.e),
                f17(r.f),
                f17(r.boundary_dissipation),
                f17(r.bulk_dissipation),
                res.map(f17).unwrap_or_default(),
            ]
        });
        let header = [
            "s",
            "E0",
            "I",
            "E",
            "F",
            "boundary_dissipation",
            "bulk_dissipation",
            "identity_residual",
        ];
        write_csv(&dir.join(format!("{}.csv", table.file)), &header, rows)?;
    }
    if !outcome.diagnostics.is_empty() {
        let rows = outcome.diagnostics.iter().flat_map(|d| {
            d.series
                .samples
                .iter()
                .map(move |(t, v)| vec![d.series.label.as_str().to_string(), d.group.clone(), f17(*t), f17(*v)])
        });
        write_csv(&dir.join("diagnostics.csv"), &["label", "group", "time", "value"], rows)?;
    }
    for table in &outcome.tables {
        write_csv(
            &dir.join(format!("{}.csv", table.file)),
            &table.header,
            table.rows.iter().cloned(),
        )?;
    }
    write_text(&dir.join("summary.json"), &summary_json(outcome))?;
    write_text(&dir.join("manifest.toml"), &manifest_toml(outcome)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(f17(1.0), "1.0000000000000000e0");
        assert_eq!(f17(-0.125), "-1.2500000000000000e-1");
        let v = 0.1 + 0.2;
        assert_eq!(f17(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn json_numbers_round_trip() {
        let text = serde_json::to_string(&[F17(1.0 / 3.0), F17(f64::NAN)]).unwrap();
        let back: Vec<Option<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![Some(1.0 / 3.0), None]);
    }
}
