//! JSON checkpoints of a fitted model.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HBayesError, Result};
use crate::inference::FitReport;
use crate::model::{
    Covariance, GammaPosterior, GaussianPosterior, HyperParams, Responsibilities, VariationalState,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to score with a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyperparams: HyperParams,
    pub state: VariationalState,
    /// Names of user indices, in index order.
    pub user_ids: Vec<String>,
    /// Names of brand indices, in index order.
    pub brand_ids: Vec<String>,
    pub fit_report: FitReport,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDto {
    schema_version: u32,
    dims: DimsDto,
    hyperparams: HyperParamsDto,
    user_ids: Vec<String>,
    brand_ids: Vec<String>,
    state: StateDto,
    fit_report: FitReportDto,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
struct DimsDto {
    users: usize,
    brands: usize,
    styles: usize,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct HyperParamsDto {
    num_styles: usize,
    feature_dim: usize,
    gamma0: Vec<f64>,
    alpha0: f64,
    beta0: f64,
    max_iters: usize,
    rel_tol: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CovarianceDto {
    Full(Vec<Vec<f64>>),
    Isotropic(f64),
}

#[derive(Serialize, Deserialize)]
struct GaussianDto {
    mean: Vec<f64>,
    covariance: CovarianceDto,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct GammaDto {
    shape: f64,
    rate: f64,
}

#[derive(Serialize, Deserialize)]
struct StateDto {
    users: Vec<GaussianDto>,
    brands: Vec<GaussianDto>,
    styles: Vec<GaussianDto>,
    w: GaussianDto,
    theta_gamma: Vec<f64>,
    responsibilities: Vec<Vec<f64>>,
    prec_u: GammaDto,
    prec_b: GammaDto,
    prec_s: GammaDto,
    prec_w: GammaDto,
    xi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FitReportDto {
    elbo_trace: Vec<f64>,
    iterations_run: usize,
    converged: bool,
}

fn gaussian_to_dto(g: &GaussianPosterior) -> GaussianDto {
    GaussianDto {
        mean: g.mean.as_slice().to_vec(),
        covariance: match &g.covariance {
            Covariance::Full(m) => CovarianceDto::Full(
                (0..m.nrows())
                    .map(|r| m.row(r).iter().copied().collect())
                    .collect(),
            ),
            Covariance::Isotropic(s) => CovarianceDto::Isotropic(*s),
        },
    }
}

fn gaussian_from_dto(g: GaussianDto) -> Result<GaussianPosterior> {
    let d = g.mean.len();
    let covariance = match g.covariance {
        CovarianceDto::Isotropic(s) => Covariance::Isotropic(s),
        CovarianceDto::Full(rows) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(HBayesError::Invariant(format!("covariance is not {d}x{d}")));
            }
            Covariance::Full(DMatrix::from_fn(d, d, |r, c| rows[r][c]))
        }
    };
    Ok(GaussianPosterior {
        mean: DVector::from_vec(g.mean),
        covariance,
    })
}

fn gamma_to_dto(g: &GammaPosterior) -> GammaDto {
    GammaDto {
        shape: g.shape,
        rate: g.rate,
    }
}

fn gamma_from_dto(g: GammaDto) -> GammaPosterior {
    GammaPosterior {
        shape: g.shape,
        rate: g.rate,
    }
}

impl Checkpoint {
    fn to_dto(&self) -> CheckpointDto {
        let s = &self.state;
        let hp = &self.hyperparams;
        CheckpointDto {
            schema_version: SCHEMA_VERSION,
            dims: DimsDto {
                users: s.num_users(),
                brands: s.num_brands(),
                styles: s.num_styles(),
                dim: s.feature_dim(),
            },
            hyperparams: HyperParamsDto {
                num_styles: hp.num_styles,
                feature_dim: hp.feature_dim,
                gamma0: hp.gamma0.clone(),
                alpha0: hp.alpha0,
                beta0: hp.beta0,
                max_iters: hp.max_iters,
                rel_tol: hp.rel_tol,
            },
            user_ids: self.user_ids.clone(),
            brand_ids: self.brand_ids.clone(),
            state: StateDto {
                users: s.users.iter().map(gaussian_to_dto).collect(),
                brands: s.brands.iter().map(gaussian_to_dto).collect(),
                styles: s.styles.iter().map(gaussian_to_dto).collect(),
                w: gaussian_to_dto(&s.w),
                theta_gamma: s.theta_gamma.clone(),
                responsibilities: (0..s.resp.num_brands())
                    .map(|i| s.resp.mu.row(i).iter().copied().collect())
                    .collect(),
                prec_u: gamma_to_dto(&s.prec_u),
                prec_b: gamma_to_dto(&s.prec_b),
                prec_s: gamma_to_dto(&s.prec_s),
                prec_w: gamma_to_dto(&s.prec_w),
                xi: s.xi.clone(),
            },
            fit_report: FitReportDto {
                elbo_trace: self.fit_report.elbo_trace.clone(),
                iterations_run: self.fit_report.iterations_run,
                converged: self.fit_report.converged,
            },
        }
    }

    fn from_dto(dto: CheckpointDto) -> Result<Self> {
        if dto.schema_version != SCHEMA_VERSION {
            return Err(HBayesError::VersionMismatch {
                expected: SCHEMA_VERSION,
                found: dto.schema_version,
            });
        }
        let hp = dto.hyperparams;
        let hyperparams = HyperParams {
            num_styles: hp.num_styles,
            feature_dim: hp.feature_dim,
            gamma0: hp.gamma0,
            alpha0: hp.alpha0,
            beta0: hp.beta0,
            max_iters: hp.max_iters,
            rel_tol: hp.rel_tol,
        };
        hyperparams.validate()?;

        let s = dto.state;
        let num_styles = s.styles.len();
        let rows = s.responsibilities;
        if rows.iter().any(|r| r.len() != num_styles) {
            return Err(HBayesError::Invariant(format!(
                "responsibility rows must have {num_styles} entries"
            )));
        }
        let resp = Responsibilities {
            mu: DMatrix::from_fn(rows.len(), num_styles, |r, c| rows[r][c]),
        };
        let state = VariationalState {
            users: s
                .users
                .into_iter()
                .map(gaussian_from_dto)
                .collect::<Result<_>>()?,
            brands: s
                .brands
                .into_iter()
                .map(gaussian_from_dto)
                .collect::<Result<_>>()?,
            styles: s
                .styles
                .into_iter()
                .map(gaussian_from_dto)
                .collect::<Result<_>>()?,
            w: gaussian_from_dto(s.w)?,
            theta_gamma: s.theta_gamma,
            resp,
            prec_u: gamma_from_dto(s.prec_u),
            prec_b: gamma_from_dto(s.prec_b),
            prec_s: gamma_from_dto(s.prec_s),
            prec_w: gamma_from_dto(s.prec_w),
            xi: s.xi,
        };
        state.validate()?;

        let dims = DimsDto {
            users: state.num_users(),
            brands: state.num_brands(),
            styles: state.num_styles(),
            dim: state.feature_dim(),
        };
        if dims != dto.dims {
            return Err(HBayesError::Invariant(format!(
                "declared dims {:?} do not match stored state {:?}",
                dto.dims, dims
            )));
        }
        if hyperparams.num_styles != dims.styles || hyperparams.feature_dim != dims.dim {
            return Err(HBayesError::Invariant(
                "hyper-parameters disagree with state dimensions".into(),
            ));
        }
        if dto.user_ids.len() != dims.users || dto.brand_ids.len() != dims.brands {
            return Err(HBayesError::Invariant(
                "id lists disagree with state dimensions".into(),
            ));
        }
        let fr = dto.fit_report;
        if fr.elbo_trace.len() != fr.iterations_run {
            return Err(HBayesError::Invariant(
                "fit report trace length differs from iterations_run".into(),
            ));
        }
        Ok(Checkpoint {
            hyperparams,
            state,
            user_ids: dto.user_ids,
            brand_ids: dto.brand_ids,
            fit_report: FitReport {
                elbo_trace: fr.elbo_trace,
                iterations_run: fr.iterations_run,
                converged: fr.converged,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_dto())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Checkpoint::from_dto(serde_json::from_str(text)?)
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    fs::write(path, checkpoint.to_json()?)?;
    Ok(())
}

/// Reads a checkpoint and validates every state invariant.
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::from_json(&fs::read_to_string(path)?)
}
