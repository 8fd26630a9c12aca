//! Factor-structured synthetic ratings, for checking that the analysis
//! pipeline recovers a known loading matrix.
//!
//! Each observation's latent response is `y = Λ·f + ψ·u`, with factor scores
//! `f` and unique scores `u` whitened in-sample (zero mean, unit variance,
//! mutually uncorrelated), so that the correlation matrix of the noiseless
//! responses is exactly `ΛΛᵀ + Ψ²`. Each repetition adds independent
//! Gaussian noise of standard deviation `noise_std`, and the result is
//! mapped onto the Likert scale as `center + spread·(y + noise)`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ratings::{LikertScale, RatingMatrix, DEFAULT_PAIRS};
use crate::error::{Error, Result};
use crate::impedance::ConditionName;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub labels: Vec<String>,
    /// variables × factors, row-major
    pub loadings: Vec<Vec<f64>>,
    pub noise_std: f64,
    pub participants: usize,
    pub conditions: Vec<String>,
    pub repetitions: usize,
    pub center: f64,
    pub spread: f64,
    /// Round to integer Likert points.
    pub round: bool,
    pub seed: u64,
}

/// Simple structure over the seven default pairs: three two-indicator
/// factors and one single-indicator factor.
pub fn default_loadings() -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; 4]; 7];
    for (i, (f, v)) in [(0, 0.85), (0, 0.80), (1, 0.80), (1, 0.75), (2, 0.75), (2, 0.70), (3, 0.80)]
        .into_iter()
        .enumerate()
    {
        rows[i][f] = v;
    }
    rows
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            labels: DEFAULT_PAIRS.iter().map(|s| s.to_string()).collect(),
            loadings: default_loadings(),
            noise_std: 0.3,
            participants: 16,
            conditions: ConditionName::ALL.iter().map(|c| c.to_string()).collect(),
            repetitions: 1,
            center: 4.0,
            spread: 0.75,
            round: false,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn loading_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.loadings.len();
        let k = self.loadings.first().map_or(0, Vec::len);
        if p == 0 || k == 0 || self.loadings.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("loadings must be a non-empty rectangular matrix".into()));
        }
        Ok(DMatrix::from_fn(p, k, |i, j| self.loadings[i][j]))
    }

    pub fn observations(&self) -> usize {
        self.participants * self.conditions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.loading_matrix()?;
        if self.labels.len() != l.nrows() {
            return Err(Error::Shape(format!(
                "{} labels for {} loading rows",
                self.labels.len(),
                l.nrows()
            )));
        }
        for (i, row) in l.row_iter().enumerate() {
            if row.norm_squared() > 1.0 {
                return Err(Error::invalid(
                    "loadings",
                    format!("communality of `{}` exceeds 1", self.labels[i]),
                ));
            }
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::invalid("noise", "must be finite and >= 0"));
        }
        if self.participants == 0 || self.conditions.is_empty() || self.repetitions == 0 {
            return Err(Error::invalid("design", "participants, conditions and repetitions must be >= 1"));
        }
        let needed = l.ncols() + l.nrows() + 1;
        if self.observations() < needed {
            return Err(Error::invalid(
                "observations",
                format!("need at least {needed} participant×condition rows to whiten the scores"),
            ));
        }
        if !(self.spread.is_finite() && self.spread > 0.0 && self.center.is_finite()) {
            return Err(Error::invalid("spread", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub ratings: RatingMatrix,
    /// Cells pushed back inside the Likert range.
    pub clamped: usize,
    /// The whitened factor scores, observations × factors.
    pub factor_scores: DMatrix<f64>,
}

/// Center each column and orthonormalize (modified Gram–Schmidt), then scale
/// to unit sample variance.
fn whiten(mut g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    for mut c in g.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
    for j in 0..g.ncols() {
        for i in 0..j {
            let proj = g.column(i).dot(&g.column(j));
            let qi = g.column(i).clone_owned();
            let mut cj = g.column_mut(j);
            cj.axpy(-proj, &qi, 1.0);
        }
        let norm = g.column(j).norm();
        if norm < 1e-12 {
            return Err(Error::Shape("degenerate random draw while whitening".into()));
        }
        g.column_mut(j).scale_mut(1.0 / norm);
    }
    Ok(g * ((n - 1) as f64).sqrt())
}

pub fn synthesize(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let l = spec.loading_matrix()?;
    let (p, k) = l.shape();
    let n = spec.observations();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };

    let latent = whiten(DMatrix::from_fn(n, k + p, |_, _| draw()))?;
    let factors = latent.columns(0, k).clone_owned();
    let uniques = latent.columns(k, p);
    let uniqueness: Vec<f64> = l.row_iter().map(|r| (1.0 - r.norm_squared()).max(0.0).sqrt()).collect();
    let mut response = &factors * l.transpose();
    for i in 0..n {
        for j in 0..p {
            response[(i, j)] += uniqueness[j] * uniques[(i, j)];
        }
    }

    let scale = LikertScale::default();
    let nc = spec.conditions.len();
    let nr = spec.repetitions;
    let mut values = Vec::with_capacity(n * nr * p);
    let mut clamped = 0;
    for part in 0..spec.participants {
        for c in 0..nc {
            let i = part * nc + c;
            for _ in 0..nr {
                for j in 0..p {
                    let noisy = response[(i, j)] + spec.noise_std * draw();
                    let mut v = spec.center + spec.spread * noisy;
                    if spec.round {
                        v = v.round();
                    }
                    if v < scale.min || v > scale.max {
                        clamped += 1;
                        v = v.clamp(scale.min, scale.max);
                    }
                    values.push(Some(v));
                }
            }
        }
    }
    let ratings = RatingMatrix::from_values(
        (1..=spec.participants).map(|i| format!("P{i:02}")).collect(),
        spec.conditions.clone(),
        (1..=nr).map(|r| r.to_string()).collect(),
        spec.labels.clone(),
        scale,
        values,
    )?;
    Ok(Synthetic {
        ratings,
        clamped,
        factor_scores: factors,
    })
}

/// Write ratings in the loader's CSV layout; missing cells are left empty.
pub fn write_ratings<W: Write>(m: &RatingMatrix, out: W) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    write!(out, "participant,condition,repetition")?;
    for pair in &m.pairs {
        write!(out, ",{pair}")?;
    }
    writeln!(out)?;
    let (np, nc, nr, nj) = m.shape();
    for p in 0..np {
        for c in 0..nc {
            for r in 0..nr {
                write!(out, "{},{},{}", m.participants[p], m.conditions[c], m.repetitions[r])?;
                for j in 0..nj {
                    match m.get(p, c, r, j) {
                        Some(v) => write!(out, ",{v}")?,
                        None => write!(out, ",")?,
                    }
                }
                writeln!(out)?;
            }
        }
    }
    out.flush()
}
