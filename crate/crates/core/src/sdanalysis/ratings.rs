//! Semantic-differential ratings: CSV ingestion and repetition averaging.
//!
//! CSV layout: `participant,condition,repetition,<pair-1>,...,<pair-n>`, one
//! row per (participant, condition, repetition). Participants, conditions and
//! repetitions keep their order of first appearance.

use std::io::Read;
use std::path::Path;

use indexmap::IndexSet;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The adjective pairs used in the perception experiment.
pub const DEFAULT_PAIRS: [&str; 7] = [
    "Long-Short",
    "Wide-Narrow",
    "Thick-Thin",
    "Hard-Soft",
    "Heavy-Light",
    "Stiff-Flexible",
    "Sticky-Smooth",
];

const KEY_COLUMNS: [&str; 3] = ["participant", "condition", "repetition"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikertScale {
    pub min: f64,
    pub max: f64,
}

impl Default for LikertScale {
    fn default() -> Self {
        Self { min: 1.0, max: 7.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoadOptions {
    pub scale: LikertScale,
    /// Accept empty / `NA` cells and absent rows instead of rejecting them.
    pub allow_missing: bool,
}

/// participants × conditions × repetitions × pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingMatrix {
    pub participants: Vec<String>,
    pub conditions: Vec<String>,
    pub repetitions: Vec<String>,
    pub pairs: Vec<String>,
    pub scale: LikertScale,
    values: Vec<Option<f64>>,
}

impl RatingMatrix {
    /// Build from a dense array laid out participant-major, then condition,
    /// repetition, pair.
    pub fn from_values(
        participants: Vec<String>,
        conditions: Vec<String>,
        repetitions: Vec<String>,
        pairs: Vec<String>,
        scale: LikertScale,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let expected = participants.len() * conditions.len() * repetitions.len() * pairs.len();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} rating cells, got {}",
                values.len()
            )));
        }
        for v in values.iter().flatten() {
            if !(v.is_finite() && *v >= scale.min && *v <= scale.max) {
                return Err(Error::invalid("ratings", format!("value {v} outside the Likert range")));
            }
        }
        Ok(Self {
            participants,
            conditions,
            repetitions,
            pairs,
            scale,
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (
            self.participants.len(),
            self.conditions.len(),
            self.repetitions.len(),
            self.pairs.len(),
        )
    }

    fn index(&self, p: usize, c: usize, r: usize, j: usize) -> usize {
        let (_, nc, nr, nj) = self.shape();
        ((p * nc + c) * nr + r) * nj + j
    }

    pub fn get(&self, p: usize, c: usize, r: usize, j: usize) -> Option<f64> {
        self.values[self.index(p, c, r, j)]
    }

    pub fn missing_cells(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_cells() == 0
    }
}

pub fn load_ratings(path: impl AsRef<Path>, options: &LoadOptions) -> Result<RatingMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(file, options)
}

pub fn parse_ratings<R: Read>(reader: R, options: &LoadOptions) -> Result<RatingMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    if header.len() < 4 || header.iter().take(3).ne(KEY_COLUMNS.iter().copied()) {
        return Err(Error::Ratings {
            line: 1,
            message: format!(
                "header must start with `{}` followed by at least one adjective pair",
                KEY_COLUMNS.join(",")
            ),
        });
    }
    let pairs: Vec<String> = header.iter().skip(3).map(str::to_owned).collect();
    {
        let mut seen = IndexSet::new();
        for p in &pairs {
            if p.is_empty() || !seen.insert(p) {
                return Err(Error::Ratings {
                    line: 1,
                    message: format!("empty or duplicated pair column `{p}`"),
                });
            }
        }
    }

    let mut participants = IndexSet::new();
    let mut conditions = IndexSet::new();
    let mut repetitions = IndexSet::new();
    let mut rows: Vec<((usize, usize, usize), Vec<Option<f64>>)> = Vec::new();
    let mut keys = IndexSet::new();

    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Ratings {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let (p, c, r) = (&record[0], &record[1], &record[2]);
        if p.is_empty() || c.is_empty() || r.is_empty() {
            return Err(Error::Ratings {
                line,
                message: "participant, condition and repetition must be non-empty".into(),
            });
        }
        let key = (
            participants.insert_full(p.to_owned()).0,
            conditions.insert_full(c.to_owned()).0,
            repetitions.insert_full(r.to_owned()).0,
        );
        if !keys.insert(key) {
            return Err(Error::Ratings {
                line,
                message: format!("duplicate key (participant={p}, condition={c}, repetition={r})"),
            });
        }
        let mut cells = Vec::with_capacity(pairs.len());
        for (field, pair) in record.iter().skip(3).zip(&pairs) {
            if field.is_empty() || field.eq_ignore_ascii_case("na") {
                if !options.allow_missing {
                    return Err(Error::Ratings {
                        line,
                        message: format!("missing value in column `{pair}`"),
                    });
                }
                cells.push(None);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Ratings {
                line,
                message: format!("column `{pair}`: `{field}` is not a number"),
            })?;
            let s = options.scale;
            if !(v.is_finite() && v >= s.min && v <= s.max) {
                return Err(Error::Ratings {
                    line,
                    message: format!(
                        "column `{pair}`: value {field} outside the Likert range {}..={}",
                        s.min, s.max
                    ),
                });
            }
            cells.push(Some(v));
        }
        rows.push((key, cells));
    }

    if rows.is_empty() {
        return Err(Error::Ratings {
            line: 1,
            message: "no data rows".into(),
        });
    }

    let (np, nc, nr, nj) = (participants.len(), conditions.len(), repetitions.len(), pairs.len());
    if rows.len() != np * nc * nr && !options.allow_missing {
        // name one absent key to make the diagnostic actionable
        let absent = (0..np)
            .flat_map(|p| (0..nc).flat_map(move |c| (0..nr).map(move |r| (p, c, r))))
            .find(|k| !keys.contains(k))
            .expect("some key is absent");
        return Err(Error::Ratings {
            line: 0,
            message: format!(
                "incomplete design: no row for participant={}, condition={}, repetition={}",
                participants[absent.0], conditions[absent.1], repetitions[absent.2]
            ),
        });
    }

    let mut values = vec![None; np * nc * nr * nj];
    for ((p, c, r), cells) in rows {
        let base = ((p * nc + c) * nr + r) * nj;
        values[base..base + nj].copy_from_slice(&cells);
    }
    Ok(RatingMatrix {
        participants: participants.into_iter().collect(),
        conditions: conditions.into_iter().collect(),
        repetitions: repetitions.into_iter().collect(),
        pairs,
        scale: options.scale,
        values,
    })
}

/// Repetition-averaged ratings: one row per (participant, condition),
/// participant-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    /// rows × pairs; `NaN` where every repetition was missing
    pub data: DMatrix<f64>,
    pub pairs: Vec<String>,
    pub row_participants: Vec<String>,
    pub row_conditions: Vec<String>,
}

impl Observations {
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn has_missing(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }
}

/// Mean over the repetition axis. Missing repetitions are skipped; a cell
/// with no ratings at all becomes `NaN`.
pub fn average_repetitions(m: &RatingMatrix) -> Observations {
    let (np, nc, nr, nj) = m.shape();
    let mut data = DMatrix::zeros(np * nc, nj);
    let mut row_participants = Vec::with_capacity(np * nc);
    let mut row_conditions = Vec::with_capacity(np * nc);
    for p in 0..np {
        for c in 0..nc {
            let row = p * nc + c;
            for j in 0..nj {
                let (sum, n) = (0..nr)
                    .filter_map(|r| m.get(p, c, r, j))
                    .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                data[(row, j)] = if n > 0 { sum / n as f64 } else { f64::NAN };
            }
            row_participants.push(m.participants[p].clone());
            row_conditions.push(m.conditions[c].clone());
        }
    }
    Observations {
        data,
        pairs: m.pairs.clone(),
        row_participants,
        row_conditions,
    }
}
