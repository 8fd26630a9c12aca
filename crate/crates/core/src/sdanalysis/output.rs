//! Plot-ready CSV outputs of a fitted [`FactorModel`].

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::FactorModel;
use crate::error::{Error, Result};

pub const OUTPUT_FILES: [&str; 5] = [
    "scree.csv",
    "loadings.csv",
    "summary.csv",
    "scores.csv",
    "condition_means.csv",
];

fn factor_header(k: usize) -> String {
    (1..=k).map(|j| format!(",factor{j}")).collect()
}

fn write_row<W: Write>(out: &mut W, lead: &str, row: impl Iterator<Item = f64>) -> std::io::Result<()> {
    write!(out, "{lead}")?;
    for v in row {
        write!(out, ",{v}")?;
    }
    writeln!(out)
}

fn labelled_matrix<W: Write>(
    out: W,
    first: &str,
    labels: &[String],
    m: &DMatrix<f64>,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{first}{}", factor_header(m.ncols()))?;
    for (label, row) in labels.iter().zip(m.row_iter()) {
        write_row(&mut out, label, row.iter().copied())?;
    }
    out.flush()
}

/// `component,eigenvalue`
pub fn write_scree<W: Write>(model: &FactorModel, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "component,eigenvalue")?;
    for (i, v) in model.eigenvalues.iter().enumerate() {
        writeln!(out, "{},{v}", i + 1)?;
    }
    out.flush()
}

/// `variable,factor1..k`
pub fn write_loadings<W: Write>(model: &FactorModel, out: W) -> std::io::Result<()> {
    labelled_matrix(out, "variable", &model.pairs, &model.loadings)
}

/// Three rows: sums of squared loadings, share of variance, cumulative share.
pub fn write_summary<W: Write>(model: &FactorModel, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let s = &model.summary;
    writeln!(out, "quantity{}", factor_header(s.ss_loadings.len()))?;
    write_row(&mut out, "ss_loadings", s.ss_loadings.iter().copied())?;
    write_row(&mut out, "pct_variance", s.pct_variance.iter().copied())?;
    write_row(&mut out, "cumulative", s.cumulative.iter().copied())?;
    out.flush()
}

/// `participant,condition,factor1..k`
pub fn write_scores<W: Write>(model: &FactorModel, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "participant,condition{}", factor_header(model.scores.ncols()))?;
    for ((p, c), row) in model
        .row_participants
        .iter()
        .zip(&model.row_conditions)
        .zip(model.scores.row_iter())
    {
        write_row(&mut out, &format!("{p},{c}"), row.iter().copied())?;
    }
    out.flush()
}

/// `condition,factor1..k`
pub fn write_condition_means<W: Write>(model: &FactorModel, out: W) -> std::io::Result<()> {
    let cm = &model.condition_means;
    labelled_matrix(out, "condition", &cm.conditions, &cm.means)
}

/// Write all five output files into `dir`.
pub fn write_model(model: &FactorModel, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    type Writer = fn(&FactorModel, fs::File) -> std::io::Result<()>;
    let writers: [Writer; 5] = [
        write_scree,
        write_loadings,
        write_summary,
        write_scores,
        write_condition_means,
    ];
    OUTPUT_FILES
        .iter()
        .zip(writers)
        .map(|(name, write)| {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write(model, file).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Human-readable table of sums of squared loadings and variance shares.
pub fn format_summary_table(model: &FactorModel) -> String {
    let s = &model.summary;
    let mut text = format!("{:<24}", "");
    for j in 1..=s.ss_loadings.len() {
        let _ = write!(text, "{:>10}", format!("Factor {j}"));
    }
    text.push('\n');
    for (label, row) in [
        ("Sum of Squared Loadings", &s.ss_loadings),
        ("% of Variance", &s.pct_variance),
        ("Cumulative %", &s.cumulative),
    ] {
        let _ = write!(text, "{label:<24}");
        for v in row {
            let _ = write!(text, "{v:>10.6}");
        }
        text.push('\n');
    }
    text
}
