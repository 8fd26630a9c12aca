use indexmap::IndexMap;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pearson correlation of the columns of `data`.
///
/// `NaN` entries are handled pairwise-complete; `labels` name the columns in
/// diagnostics.
pub fn correlation_matrix(data: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>> {
    let (n, p) = data.shape();
    if labels.len() != p {
        return Err(Error::Shape(format!("{p} columns but {} labels", labels.len())));
    }
    let name = |j: usize| labels[j].clone();
    for j in 0..p {
        let col: Vec<f64> = data.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
        if col.len() < 2 {
            return Err(Error::DegenerateColumn(name(j)));
        }
        let m = col.iter().sum::<f64>() / col.len() as f64;
        if col.iter().all(|&v| v == m) || col.iter().map(|v| (v - m).powi(2)).sum::<f64>() == 0.0 {
            return Err(Error::DegenerateColumn(name(j)));
        }
    }
    let mut r = DMatrix::identity(p, p);
    for a in 0..p {
        for b in (a + 1)..p {
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|i| (data[(i, a)], data[(i, b)]))
                .filter(|(x, y)| !x.is_nan() && !y.is_nan())
                .collect();
            let k = pairs.len() as f64;
            if pairs.len() < 2 {
                return Err(Error::Shape(format!(
                    "columns `{}` and `{}` share fewer than 2 observations",
                    name(a),
                    name(b)
                )));
            }
            let mx = pairs.iter().map(|q| q.0).sum::<f64>() / k;
            let my = pairs.iter().map(|q| q.1).sum::<f64>() / k;
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for (x, y) in &pairs {
                let (dx, dy) = (x - mx, y - my);
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            if sxx == 0.0 {
                return Err(Error::DegenerateColumn(name(a)));
            }
            if syy == 0.0 {
                return Err(Error::DegenerateColumn(name(b)));
            }
            let v = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    Ok(r)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape("correlation matrix must be square".into()));
    }
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Shape(format!("matrix not symmetric at ({i},{j})")));
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation matrix"));
    }
    Ok(())
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a correlation matrix, descending (the scree).
pub fn eigen_scree(r: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(r)?;
    let (values, _) = sorted_eigen(r);
    if let Some(&min) = values.last() {
        if min < -1e-10 {
            return Err(Error::invalid(
                "correlation matrix",
                format!("not positive semi-definite (eigenvalue {min:e})"),
            ));
        }
    }
    Ok(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorRule {
    /// Position of the second-largest drop between consecutive eigenvalues.
    Elbow,
    /// Eigenvalues greater than 1.
    Kaiser,
    Fixed(usize),
}

pub fn choose_n_factors(eigenvalues: &[f64], rule: FactorRule) -> Result<usize> {
    match rule {
        FactorRule::Fixed(k) => {
            if k == 0 {
                return Err(Error::invalid("factors", "must be >= 1"));
            }
            Ok(k)
        }
        FactorRule::Kaiser => {
            let k = eigenvalues.iter().filter(|&&v| v > 1.0).count();
            Ok(k.max(1))
        }
        FactorRule::Elbow => {
            if eigenvalues.len() < 3 {
                return Err(Error::invalid("eigenvalues", "elbow rule needs at least 3"));
            }
            let drops: Vec<f64> = eigenvalues.windows(2).map(|w| w[0] - w[1]).collect();
            let mut order: Vec<usize> = (0..drops.len()).collect();
            // stable: ties keep the earlier position
            order.sort_by(|&a, &b| drops[b].total_cmp(&drops[a]));
            Ok(order[1] + 1)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    /// Principal-axis factoring with iterated communalities.
    PrincipalAxis,
    /// Plain principal components, `L = V·√Λ`.
    PrincipalComponent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractionOptions {
    pub method: ExtractionMethod,
    pub max_iter: usize,
    /// Stop when no communality moves by more than this.
    pub tol: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            method: ExtractionMethod::PrincipalAxis,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    /// variables × k
    pub loadings: DMatrix<f64>,
    pub communalities: Vec<f64>,
    pub iterations: usize,
    /// Largest off-diagonal `|R − LLᵀ|`.
    pub residual: f64,
}

fn loadings_from(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (values, vectors) = sorted_eigen(m);
    let mut l = DMatrix::zeros(m.nrows(), k);
    for j in 0..k {
        let scale = values[j].max(0.0).sqrt();
        for i in 0..m.nrows() {
            l[(i, j)] = vectors[(i, j)] * scale;
        }
    }
    l
}

fn row_sum_squares(l: &DMatrix<f64>) -> Vec<f64> {
    l.row_iter().map(|r| r.iter().map(|v| v * v).sum()).collect()
}

pub fn off_diagonal_residual(r: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let fit = l * l.transpose();
    let n = r.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max((r[(i, j)] - fit[(i, j)]).abs());
            }
        }
    }
    worst
}

/// Extract `k` unrotated factors from a correlation matrix.
///
/// Principal-axis iteration starts from unit communalities, so its first
/// pass equals principal components.
pub fn extract_loadings(r: &DMatrix<f64>, k: usize, options: &ExtractionOptions) -> Result<Extraction> {
    check_symmetric(r)?;
    let p = r.nrows();
    if k == 0 || k > p {
        return Err(Error::invalid("factors", format!("need 1 <= k <= {p}, got {k}")));
    }
    let (loadings, iterations) = match options.method {
        ExtractionMethod::PrincipalComponent => (loadings_from(r, k), 0),
        ExtractionMethod::PrincipalAxis => {
            let mut communalities = vec![1.0; p];
            let mut reduced = r.clone();
            let mut iterations = 0;
            loop {
                for (i, h) in communalities.iter().enumerate() {
                    reduced[(i, i)] = *h;
                }
                let l = loadings_from(&reduced, k);
                let next = row_sum_squares(&l);
                iterations += 1;
                let change = next
                    .iter()
                    .zip(&communalities)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                communalities = next;
                if change < options.tol {
                    break (l, iterations);
                }
                if iterations >= options.max_iter {
                    return Err(Error::NonConvergence {
                        what: "principal-axis factoring",
                        iterations,
                        last: off_diagonal_residual(r, &l),
                    });
                }
            }
        }
    };
    Ok(Extraction {
        communalities: row_sum_squares(&loadings),
        residual: off_diagonal_residual(r, &loadings),
        loadings,
        iterations,
    })
}

/// Sum of squared loadings and variance shares per factor, in the order the
/// columns are given.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorSummary {
    pub ss_loadings: Vec<f64>,
    pub pct_variance: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl FactorSummary {
    /// Build from already-computed sums of squares over `n_variables`.
    pub fn from_ss(ss_loadings: Vec<f64>, n_variables: usize) -> Self {
        let pct_variance: Vec<f64> = ss_loadings.iter().map(|s| s / n_variables as f64).collect();
        let cumulative = pct_variance
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        Self {
            ss_loadings,
            pct_variance,
            cumulative,
        }
    }
}

/// Column sums of squares of `loadings`, ordered by descending size.
pub fn factor_summary(loadings: &DMatrix<f64>) -> FactorSummary {
    let mut ss: Vec<f64> = loadings
        .column_iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    ss.sort_by(|a, b| b.total_cmp(a));
    FactorSummary::from_ss(ss, loadings.nrows())
}

/// Column-standardize (mean 0, sample sd 1). Missing values become 0,
/// i.e. the column mean.
pub fn standardize(data: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = data.clone();
    for mut col in z.column_iter_mut() {
        let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        for v in col.iter_mut() {
            *v = if v.is_nan() || sd == 0.0 { 0.0 } else { (*v - mean) / sd };
        }
    }
    z
}

/// Regression (Thurstone) factor scores: `Z·R⁻¹·L` with `Z` the standardized
/// data. Falls back to the pseudo-inverse when `R` is singular.
pub fn factor_scores(data: &DMatrix<f64>, loadings: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = data.ncols();
    if loadings.nrows() != p || r.shape() != (p, p) {
        return Err(Error::Shape(format!(
            "data has {p} variables, loadings {}×{}, R {}×{}",
            loadings.nrows(),
            loadings.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    let z = standardize(data);
    let weights = match r.clone().cholesky() {
        Some(chol) => chol.solve(loadings),
        None => {
            let pinv = r
                .clone()
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::Shape(e.to_string()))?;
            pinv * loadings
        }
    };
    let mut scores = z * weights;
    // remove rounding drift so column means are exactly centred
    for mut col in scores.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    Ok(scores)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionMeans {
    pub conditions: Vec<String>,
    /// conditions × factors
    pub means: DMatrix<f64>,
    pub counts: Vec<usize>,
}

/// Mean factor score per condition label; conditions keep first-appearance order.
pub fn condition_factor_means(scores: &DMatrix<f64>, labels: &[String]) -> Result<ConditionMeans> {
    if labels.len() != scores.nrows() {
        return Err(Error::Shape(format!(
            "{} score rows but {} labels",
            scores.nrows(),
            labels.len()
        )));
    }
    let mut groups: IndexMap<&str, Vec<usize>> = IndexMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.as_str()).or_default().push(i);
    }
    let k = scores.ncols();
    let mut means = DMatrix::zeros(groups.len(), k);
    for (g, rows) in groups.values().enumerate() {
        for j in 0..k {
            means[(g, j)] = rows.iter().map(|&i| scores[(i, j)]).sum::<f64>() / rows.len() as f64;
        }
    }
    Ok(ConditionMeans {
        conditions: groups.keys().map(|s| s.to_string()).collect(),
        counts: groups.values().map(Vec::len).collect(),
        means,
    })
}

/// Tucker's congruence coefficient between two vectors.
pub fn congruence(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Match each reference factor to an estimated factor (permutation and sign)
/// maximizing the total absolute congruence. Returns, per reference column,
/// `(estimated column, sign, congruence after sign flip)`.
pub fn align_factors(estimated: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<Vec<(usize, f64, f64)>> {
    if estimated.nrows() != reference.nrows() || estimated.ncols() < reference.ncols() {
        return Err(Error::Shape("cannot align loadings of different shapes".into()));
    }
    let k = reference.ncols();
    let m = estimated.ncols();
    if m > 9 {
        return Err(Error::Shape("alignment supports at most 9 factors".into()));
    }
    let cols = |x: &DMatrix<f64>, j: usize| x.column(j).iter().copied().collect::<Vec<_>>();
    let c: Vec<Vec<f64>> = (0..k)
        .map(|r| (0..m).map(|e| congruence(&cols(reference, r), &cols(estimated, e))).collect())
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; m];
    fn search(
        c: &[Vec<f64>],
        current: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        if current.len() == c.len() {
            let total: f64 = current.iter().enumerate().map(|(r, &e)| c[r][e].abs()).sum();
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                *best = Some((total, current.clone()));
            }
            return;
        }
        for e in 0..used.len() {
            if !used[e] {
                used[e] = true;
                current.push(e);
                search(c, current, used, best);
                current.pop();
                used[e] = false;
            }
        }
    }
    search(&c, &mut current, &mut used, &mut best);
    let (_, assignment) = best.expect("at least one assignment");
    Ok(assignment
        .into_iter()
        .enumerate()
        .map(|(r, e)| {
            let sign = if c[r][e] < 0.0 { -1.0 } else { 1.0 };
            (e, sign, c[r][e] * sign)
        })
        .collect())
}
