//! Semantic-differential analysis: from Likert ratings to rotated factor
//! loadings, factor scores and per-condition factor-score means.
//!
//! Pipeline: [`load_ratings`] → [`average_repetitions`] →
//! [`correlation_matrix`] → [`eigen_scree`] → [`choose_n_factors`] →
//! [`extract_loadings`] → [`varimax`] → [`factor_summary`] /
//! [`factor_scores`] / [`condition_factor_means`]. [`analyze`] runs all of it.

mod factor;
mod output;
mod ratings;
mod synth;
mod varimax;

pub use factor::{
    align_factors, choose_n_factors, condition_factor_means, congruence, correlation_matrix,
    eigen_scree, extract_loadings, factor_scores, factor_summary, off_diagonal_residual,
    standardize, ConditionMeans, Extraction, ExtractionMethod, ExtractionOptions, FactorRule,
    FactorSummary,
};
pub use output::{
    format_summary_table, write_condition_means, write_loadings, write_model, write_scores,
    write_scree, write_summary, OUTPUT_FILES,
};
pub use ratings::{
    average_repetitions, load_ratings, parse_ratings, LikertScale, LoadOptions, Observations,
    RatingMatrix, DEFAULT_PAIRS,
};
pub use synth::{default_loadings, synthesize, write_ratings, SynthSpec, Synthetic};
pub use varimax::{
    canonicalize, kaiser_normalize, normalized_criterion, varimax, varimax_criterion, Varimax,
    VarimaxOptions,
};

use nalgebra::DMatrix;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub rule: FactorRule,
    pub extraction: ExtractionOptions,
    pub varimax: VarimaxOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            rule: FactorRule::Elbow,
            extraction: ExtractionOptions::default(),
            varimax: VarimaxOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    pub pairs: Vec<String>,
    pub correlation: DMatrix<f64>,
    /// Descending, one per variable.
    pub eigenvalues: Vec<f64>,
    pub n_factors: usize,
    pub unrotated: DMatrix<f64>,
    /// Rotated, ordered by descending sum of squares, sign-normalized.
    pub loadings: DMatrix<f64>,
    pub rotation: DMatrix<f64>,
    pub summary: FactorSummary,
    /// observations × factors
    pub scores: DMatrix<f64>,
    pub row_participants: Vec<String>,
    pub row_conditions: Vec<String>,
    pub condition_means: ConditionMeans,
    pub extraction_iterations: usize,
    pub residual: f64,
    pub varimax_sweeps: usize,
}

pub fn analyze(obs: &Observations, options: &AnalysisOptions) -> Result<FactorModel> {
    let correlation = correlation_matrix(&obs.data, &obs.pairs)?;
    let eigenvalues = eigen_scree(&correlation)?;
    let n_factors = choose_n_factors(&eigenvalues, options.rule)?;
    let extraction = extract_loadings(&correlation, n_factors, &options.extraction)?;

    let (rotated, rotation, sweeps) = if n_factors >= 2 {
        let v = varimax(&extraction.loadings, &options.varimax)?;
        let sweeps = v.history.len() - 1;
        (v.loadings, v.rotation, sweeps)
    } else {
        (extraction.loadings.clone(), DMatrix::identity(1, 1), 0)
    };
    let (loadings, rotation) = canonicalize(&rotated, &rotation);

    let summary = factor_summary(&loadings);
    let scores = factor_scores(&obs.data, &loadings, &correlation)?;
    let condition_means = condition_factor_means(&scores, &obs.row_conditions)?;
    Ok(FactorModel {
        pairs: obs.pairs.clone(),
        correlation,
        eigenvalues,
        n_factors,
        unrotated: extraction.loadings,
        loadings,
        rotation,
        summary,
        scores,
        row_participants: obs.row_participants.clone(),
        row_conditions: obs.row_conditions.clone(),
        condition_means,
        extraction_iterations: extraction.iterations,
        residual: extraction.residual,
        varimax_sweeps: sweeps,
    })
}
