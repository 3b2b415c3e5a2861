use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::run::BenchmarkReport;
use super::svg::{confusion_svg, importance_svg};
use super::Stage;
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str =
    "stage,treatment,model,accuracy,f1,precision,recall,auc,auprc,gini,tp,fp,fn,tn,error";

/// One row per cell in run order; failed cells keep their row with empty
/// metric fields and the error text.
pub fn metrics_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER.split(','))?;
    for c in &report.cells {
        let mut rec = vec![
            c.stage.number().to_string(),
            c.stage.treatment().to_string(),
            c.model.code().to_string(),
        ];
        match &c.evaluation {
            Some(e) => {
                rec.extend(e.metrics.csv_values().iter().map(|v| v.to_string()));
                let cm = e.confusion;
                rec.extend([cm.tp, cm.fp, cm.fn_, cm.tn].iter().map(|v| v.to_string()));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 11)),
        }
        rec.push(c.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<memory>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn best_params_json(report: &BenchmarkReport, stage: Stage) -> Value {
    let mut models = Map::new();
    for c in report.cells.iter().filter(|c| c.stage == stage) {
        let entry = match &c.search {
            Some(s) => json!({
                "best_params": s.best_params,
                "cv_score": s.best_score,
                "n_candidates": s.n_candidates,
                "n_failed": s.n_failed,
            }),
            None => json!({ "error": c.error }),
        };
        models.insert(c.model.code().to_string(), entry);
    }
    json!({
        "stage": stage.number(),
        "treatment": stage.treatment(),
        "scoring": report.config.scoring.name(),
        "folds": report.config.folds,
        "models": models,
    })
}

fn write(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes all report files into `dir` (created if needed) and returns their
/// paths. Everything except `timings.txt` is a pure function of the report
/// minus its runtimes.
pub fn emit_reports(report: &BenchmarkReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if report.cells.is_empty() {
        log::warn!("benchmark report has no cells; writing header-only metrics");
    }
    write(dir, "metrics.csv", &metrics_csv(report)?, &mut written)?;
    write(dir, "report.json", &report.to_json()?, &mut written)?;
    let mut stages: Vec<Stage> = report.cells.iter().map(|c| c.stage).collect();
    stages.dedup();
    for stage in stages.into_iter().filter(|&s| s != Stage::Baseline) {
        let text = serde_json::to_string_pretty(&best_params_json(report, stage))?;
        write(
            dir,
            &format!("best_params_stage{}.json", stage.number()),
            &text,
            &mut written,
        )?;
    }
    for c in &report.cells {
        let stem = format!("stage{}_{}", c.stage.number(), c.model.code());
        let title = format!("{} ({})", c.model.display_name(), c.stage.treatment());
        if let Some(e) = &c.evaluation {
            write(
                dir,
                &format!("confusion_{stem}.svg"),
                &confusion_svg(&title, &e.confusion),
                &mut written,
            )?;
        }
        if let (Some(enc), Some(src)) = (&c.importance, &c.importance_by_source) {
            write(
                dir,
                &format!("importance_{stem}.csv"),
                &src.to_csv(),
                &mut written,
            )?;
            write(
                dir,
                &format!("importance_{stem}_encoded.csv"),
                &enc.to_csv(),
                &mut written,
            )?;
            write(
                dir,
                &format!("importance_{stem}.svg"),
                &importance_svg(&title, src),
                &mut written,
            )?;
        }
    }
    let mut timings = String::from("stage\tmodel\tseconds\n");
    for c in &report.cells {
        let _ = writeln!(
            timings,
            "{}\t{}\t{:.3}",
            c.stage.number(),
            c.model.code(),
            c.runtime_secs
        );
    }
    write(dir, "timings.txt", &timings, &mut written)?;
    Ok(written)
}
