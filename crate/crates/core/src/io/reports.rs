//! Ground-truth sidecars, ELBO traces, metric reports and ranking outputs.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HBayesError, Result};
use crate::evaluation::{CvReport, FoldReport, MetricReport};
use crate::generator::{GroundTruth, TruePrecisions};

#[derive(Serialize, Deserialize)]
struct TruthDto {
    user_ids: Vec<String>,
    brand_ids: Vec<String>,
    style_vectors: Vec<Vec<f64>>,
    brand_vectors: Vec<Vec<f64>>,
    user_vectors: Vec<Vec<f64>>,
    style_assignments: Vec<usize>,
    theta: Vec<f64>,
    w: Vec<f64>,
    precisions: PrecisionsDto,
}

#[derive(Serialize, Deserialize)]
struct PrecisionsDto {
    user: f64,
    brand: f64,
    style: f64,
    w: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

fn matrix(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != d) {
        return Err(HBayesError::Invariant(format!(
            "expected rows of length {d}"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]))
}

/// Ground truth plus the id names used in the companion event file.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthFile {
    pub truth: GroundTruth,
    pub user_ids: Vec<String>,
    pub brand_ids: Vec<String>,
}

pub fn save_ground_truth(path: impl AsRef<Path>, file: &TruthFile) -> Result<()> {
    let t = &file.truth;
    let dto = TruthDto {
        user_ids: file.user_ids.clone(),
        brand_ids: file.brand_ids.clone(),
        style_vectors: rows(&t.style_vectors),
        brand_vectors: rows(&t.brand_vectors),
        user_vectors: rows(&t.user_vectors),
        style_assignments: t.style_assignments.clone(),
        theta: t.theta.clone(),
        w: t.w.as_slice().to_vec(),
        precisions: PrecisionsDto {
            user: t.precisions.user,
            brand: t.precisions.brand,
            style: t.precisions.style,
            w: t.precisions.w,
        },
    };
    let mut text = serde_json::to_string_pretty(&dto)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<TruthFile> {
    let dto: TruthDto = serde_json::from_str(&fs::read_to_string(path)?)?;
    let d = dto.w.len();
    let truth = GroundTruth {
        style_vectors: matrix(&dto.style_vectors, d)?,
        brand_vectors: matrix(&dto.brand_vectors, d)?,
        user_vectors: matrix(&dto.user_vectors, d)?,
        style_assignments: dto.style_assignments,
        theta: dto.theta,
        w: DVector::from_vec(dto.w),
        precisions: TruePrecisions {
            user: dto.precisions.user,
            brand: dto.precisions.brand,
            style: dto.precisions.style,
            w: dto.precisions.w,
        },
    };
    Ok(TruthFile {
        truth,
        user_ids: dto.user_ids,
        brand_ids: dto.brand_ids,
    })
}

/// Writes `iteration,elbo` rows (1-based) under a header line.
pub fn write_trace(path: impl AsRef<Path>, trace: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "iteration,elbo")?;
    for (i, v) in trace.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let err = |message: String| HBayesError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        if idx == 0 {
            if line.trim() != "iteration,elbo" {
                return Err(err(format!("unexpected header {line:?}")));
            }
            continue;
        }
        let (it, val) = line
            .split_once(',')
            .ok_or_else(|| err("expected two columns".into()))?;
        let it: usize = it.parse().map_err(|e| err(format!("{e}")))?;
        if it != out.len() + 1 {
            return Err(err(format!("iteration {it} out of sequence")));
        }
        out.push(val.parse().map_err(|e| err(format!("{e}")))?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct MetricDto {
    k: usize,
    precision: f64,
    recall: f64,
    ndcg: f64,
    num_users_evaluated: usize,
}

#[derive(Serialize, Deserialize)]
struct FoldDto {
    fold: usize,
    metrics: Vec<MetricDto>,
}

#[derive(Serialize, Deserialize)]
struct CvDto {
    folds: Vec<FoldDto>,
    mean: Vec<MetricDto>,
    std: Vec<MetricDto>,
}

fn metric_dto(m: &MetricReport) -> MetricDto {
    MetricDto {
        k: m.k,
        precision: m.precision,
        recall: m.recall,
        ndcg: m.ndcg,
        num_users_evaluated: m.num_users_evaluated,
    }
}

fn metric_from(m: MetricDto) -> MetricReport {
    MetricReport {
        k: m.k,
        precision: m.precision,
        recall: m.recall,
        ndcg: m.ndcg,
        num_users_evaluated: m.num_users_evaluated,
    }
}

pub fn save_metrics_report(path: impl AsRef<Path>, report: &CvReport) -> Result<()> {
    let dto = CvDto {
        folds: report
            .folds
            .iter()
            .map(|f| FoldDto {
                fold: f.fold,
                metrics: f.metrics.iter().map(metric_dto).collect(),
            })
            .collect(),
        mean: report.mean.iter().map(metric_dto).collect(),
        std: report.std.iter().map(metric_dto).collect(),
    };
    let mut text = serde_json::to_string_pretty(&dto)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_metrics_report(path: impl AsRef<Path>) -> Result<CvReport> {
    let dto: CvDto = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(CvReport {
        folds: dto
            .folds
            .into_iter()
            .map(|f| FoldReport {
                fold: f.fold,
                metrics: f.metrics.into_iter().map(metric_from).collect(),
            })
            .collect(),
        mean: dto.mean.into_iter().map(metric_from).collect(),
        std: dto.std.into_iter().map(metric_from).collect(),
    })
}

/// One line of a ranking output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub rank: usize,
    /// 0-based line index of the item in the candidate file.
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub item: Option<String>,
    pub brand: String,
    pub prob: f64,
}

pub fn write_rankings(path: impl AsRef<Path>, items: &[RankedItem]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for it in items {
        serde_json::to_writer(&mut out, it)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rankings(path: impl AsRef<Path>) -> Result<Vec<RankedItem>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HBayesError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        let trace = vec![
            -1_234.567_890_123_4,
            -1_200.000_000_000_1,
            -1e-300,
            0.1 + 0.2,
        ];
        write_trace(&p, &trace).unwrap();
        assert_eq!(read_trace(&p).unwrap(), trace);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("iteration,elbo\n1,"));
    }

    #[test]
    fn trace_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        fs::write(&p, "it,value\n1,2\n").unwrap();
        assert!(read_trace(&p).is_err());
    }
}
