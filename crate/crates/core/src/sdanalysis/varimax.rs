//! Orthogonal varimax rotation by successive planar (pairwise) rotations.
//!
//! For a pair of columns the angle that maximizes the criterion has a closed
//! form, so each planar step can only raise the criterion, and with two
//! factors a single step reaches the global optimum.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarimaxOptions {
    /// Stop once a sweep raises the criterion by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Kaiser row normalization before rotating.
    pub normalize: bool,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Varimax {
    /// `L·T`
    pub loadings: DMatrix<f64>,
    /// Orthogonal k×k rotation `T`.
    pub rotation: DMatrix<f64>,
    /// Criterion after each sweep; entry 0 is before rotation.
    pub history: Vec<f64>,
}

impl Varimax {
    pub fn criterion(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }
}

/// `Σ_j [ mean_i(l_ij⁴) − (mean_i l_ij²)² ]`: the variance of squared
/// loadings, summed over factors.
pub fn varimax_criterion(l: &DMatrix<f64>) -> f64 {
    let p = l.nrows() as f64;
    l.column_iter()
        .map(|c| {
            let m2 = c.iter().map(|v| v * v).sum::<f64>() / p;
            let m4 = c.iter().map(|v| v.powi(4)).sum::<f64>() / p;
            m4 - m2 * m2
        })
        .sum()
}

/// Scale each row to unit length; zero rows stay zero. Returns the row norms.
pub fn kaiser_normalize(l: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let norms: Vec<f64> = l.row_iter().map(|r| r.norm()).collect();
    let mut out = l.clone();
    for (i, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            for v in out.row_mut(i).iter_mut() {
                *v /= n;
            }
        }
    }
    (out, norms)
}

/// Criterion of the row-normalized loadings (what the rotation maximizes
/// when `normalize` is on).
pub fn normalized_criterion(l: &DMatrix<f64>) -> f64 {
    varimax_criterion(&kaiser_normalize(l).0)
}

fn optimal_angle(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let p = x.nrows() as f64;
    let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..x.nrows() {
        let (xi, yi) = (x[(i, a)], x[(i, b)]);
        let u = xi * xi - yi * yi;
        let v = 2.0 * xi * yi;
        sa += u;
        sb += v;
        sc += u * u - v * v;
        sd += 2.0 * u * v;
    }
    let num = sd - 2.0 * sa * sb / p;
    let den = sc - (sa * sa - sb * sb) / p;
    num.atan2(den) / 4.0
}

fn rotate_columns(m: &mut DMatrix<f64>, a: usize, b: usize, angle: f64) {
    let (s, c) = angle.sin_cos();
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, a)], m[(i, b)]);
        m[(i, a)] = c * x + s * y;
        m[(i, b)] = -s * x + c * y;
    }
}

pub fn varimax(l: &DMatrix<f64>, options: &VarimaxOptions) -> Result<Varimax> {
    let k = l.ncols();
    if k < 2 {
        return Err(Error::invalid("factors", "varimax needs at least 2 factors"));
    }
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("loadings"));
    }
    let mut x = if options.normalize {
        kaiser_normalize(l).0
    } else {
        l.clone()
    };
    let mut rotation = DMatrix::identity(k, k);
    let mut criterion = varimax_criterion(&x);
    let mut history = vec![criterion];

    let mut converged = false;
    for _ in 0..options.max_iter {
        for a in 0..k {
            for b in (a + 1)..k {
                let angle = optimal_angle(&x, a, b);
                if angle != 0.0 {
                    rotate_columns(&mut x, a, b, angle);
                    rotate_columns(&mut rotation, a, b, angle);
                }
            }
        }
        let next = varimax_criterion(&x);
        history.push(next);
        let gain = next - criterion;
        criterion = next;
        if gain < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "varimax",
            iterations: options.max_iter,
            last: criterion,
        });
    }
    Ok(Varimax {
        loadings: l * &rotation,
        rotation,
        history,
    })
}

/// Order factors by descending sum of squared loadings and flip each so its
/// largest-magnitude loading is positive. The rotation's columns follow.
pub fn canonicalize(loadings: &DMatrix<f64>, rotation: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = loadings.ncols();
    let ss: Vec<f64> = loadings.column_iter().map(|c| c.norm_squared()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| ss[b].total_cmp(&ss[a]));
    let mut l = DMatrix::zeros(loadings.nrows(), k);
    let mut t = DMatrix::zeros(rotation.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        let col = loadings.column(src);
        let peak = col.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
        let sign = if peak < 0.0 { -1.0 } else { 1.0 };
        l.set_column(dst, &(col * sign));
        t.set_column(dst, &(rotation.column(src) * sign));
    }
    (l, t)
}
