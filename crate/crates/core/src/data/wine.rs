//! Wine quality tables: ingestion, log/z-score preprocessing and splits.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, Stream};

pub const COLUMNS: [&str; 11] = [
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
];

/// Published value ranges before preprocessing.
pub const RANGES: [(f64, f64); 11] = [
    (3.80, 15.90),
    (0.08, 1.58),
    (0.00, 1.66),
    (0.60, 65.80),
    (0.01, 0.61),
    (1.00, 289.00),
    (6.00, 440.00),
    (0.99, 1.04),
    (2.72, 4.01),
    (0.22, 2.00),
    (8.00, 14.90),
];

/// Columns that receive `log10` (0-based: x3..x7).
pub const LOG_COLUMNS: [usize; 5] = [2, 3, 4, 5, 6];

/// Value assigned where `log10` would give `-inf`.
pub const LOG_ZERO_SENTINEL: f64 = -5.0;

/// Index of residual sugar, the conditioned variable.
pub const RESIDUAL_SUGAR: usize = 3;

pub const RED_FILE: &str = "winequality-red.csv";
pub const WHITE_FILE: &str = "winequality-white.csv";

pub const RED_URL: &str = "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/winequality-red.csv";
pub const WHITE_URL: &str =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/wine-quality/winequality-white.csv";

/// Rows of the 11 physicochemical columns; the quality label is dropped.
pub fn read_wine_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().trim_matches('"').to_string())
        .collect();
    let index: Vec<usize> = COLUMNS
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::MissingColumn(c.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = index
            .iter()
            .zip(COLUMNS)
            .map(|(&k, name)| {
                rec.get(k)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumericCell {
                        row: r + 1,
                        col: name.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    Ok(rows)
}

/// Rejects columns whose range strays more than 10% of the published
/// range width outside it.
pub fn check_ranges(rows: &[Vec<f64>]) -> Result<()> {
    for (k, (name, (lo, hi))) in COLUMNS.iter().zip(RANGES).enumerate() {
        let min = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
        let max = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
        let slack = 0.1 * (hi - lo);
        if min < lo - slack || max > hi + slack {
            return Err(Error::RangeSanityFail {
                column: name.to_string(),
                min,
                max,
                lo,
                hi,
            });
        }
    }
    Ok(())
}

/// Applies `log10` to the log columns in place; returns per-column sentinel
/// substitution counts.
pub fn log_transform(rows: &mut [Vec<f64>]) -> [usize; 11] {
    let mut subs = [0usize; 11];
    for row in rows.iter_mut() {
        for &k in &LOG_COLUMNS {
            let v = row[k];
            row[k] = if v <= 0.0 {
                subs[k] += 1;
                LOG_ZERO_SENTINEL
            } else {
                v.log10()
            };
        }
    }
    subs
}

/// Per-column affine standardisation (population std).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let d = rows[0].len();
        let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
        let std: Vec<f64> = (0..d)
            .map(|k| (rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n as f64).sqrt())
            .collect();
        if let Some(k) = std.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::ZeroVarianceFeature {
                index: k,
                name: COLUMNS.get(k).unwrap_or(&"column").to_string(),
            });
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Seeded split with `floor(fraction * n)` validation rows. Returns sorted
/// `(train, validation)` index lists.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n_val = (fraction * n as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, Stream::Split));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnLog {
    pub name: String,
    pub log10: bool,
    /// Number of zero values replaced by the `-5.0` sentinel.
    pub sentinel_substitutions: usize,
    pub zscore_mean: f64,
    pub zscore_std: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreprocessingLog {
    pub columns: Vec<ColumnLog>,
    pub note: String,
}

/// Preprocessed data in one shared coordinate system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WineData {
    pub red_train: Vec<Vec<f64>>,
    pub red_val: Vec<Vec<f64>>,
    pub white_train: Vec<Vec<f64>>,
    pub white_val: Vec<Vec<f64>>,
    pub zscore: ZScore,
    pub log: PreprocessingLog,
}

impl WineData {
    /// Reads both colours, checks ranges, log-transforms, splits each colour
    /// and z-scores everything with statistics of the pooled training rows.
    pub fn load(red: &Path, white: &Path, fraction: f64, seed: u64) -> Result<Self> {
        let mut r = read_wine_csv(red)?;
        let mut w = read_wine_csv(white)?;
        let mut all = r.clone();
        all.extend(w.iter().cloned());
        check_ranges(&all)?;
        Self::from_raw(&mut r, &mut w, fraction, seed)
    }

    pub fn from_raw(red: &mut [Vec<f64>], white: &mut [Vec<f64>], fraction: f64, seed: u64) -> Result<Self> {
        let sr = log_transform(red);
        let sw = log_transform(white);
        let (rt, rv) = split_indices(red.len(), fraction, derive_seed(seed, 0))?;
        let (wt, wv) = split_indices(white.len(), fraction, derive_seed(seed, 1))?;
        let pick = |rows: &[Vec<f64>], idx: &[usize]| idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>();
        let (red_train, red_val) = (pick(red, &rt), pick(red, &rv));
        let (white_train, white_val) = (pick(white, &wt), pick(white, &wv));
        let mut pooled = red_train.clone();
        pooled.extend(white_train.iter().cloned());
        let z = ZScore::fit(&pooled)?;
        let apply = |rows: Vec<Vec<f64>>| rows.iter().map(|x| z.apply(x)).collect::<Vec<_>>();
        let columns = COLUMNS
            .iter()
            .enumerate()
            .map(|(k, name)| ColumnLog {
                name: name.to_string(),
                log10: LOG_COLUMNS.contains(&k),
                sentinel_substitutions: sr[k] + sw[k],
                zscore_mean: z.mean[k],
                zscore_std: z.std[k],
            })
            .collect();
        Ok(Self {
            red_train: apply(red_train),
            red_val: apply(red_val),
            white_train: apply(white_train),
            white_val: apply(white_val),
            log: PreprocessingLog {
                columns,
                note: "log10 zero values are set to -5.0 before z-scoring and are z-scored like any other value; \
                       z-score statistics come from the pooled red and white training rows"
                    .into(),
            },
            zscore: z,
        })
    }

    /// Writes `<prefix>_{red,white}_{train,validation}.csv` and the
    /// preprocessing log as JSON.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let parts = [
            ("red_train", &self.red_train),
            ("red_validation", &self.red_val),
            ("white_train", &self.white_train),
            ("white_validation", &self.white_val),
        ];
        for (name, rows) in parts {
            let mut w = csv::Writer::from_path(dir.join(format!("wine_{name}.csv")))?;
            w.write_record(COLUMNS)?;
            for row in rows.iter() {
                w.write_record(row.iter().map(|v| format!("{v:?}")))?;
            }
            w.flush()?;
        }
        std::fs::write(
            dir.join("wine_preprocessing.json"),
            serde_json::to_string_pretty(&self.log)?,
        )?;
        Ok(())
    }
}

/// Directory holding the two wine files, from `ENTROHERD_DATA_DIR`.
pub fn data_dir_from_env() -> Option<std::path::PathBuf> {
    std::env::var_os("ENTROHERD_DATA_DIR").map(Into::into)
}

/// Both wine files are present under `dir`.
pub fn files_present(dir: &Path) -> bool {
    dir.join(RED_FILE).is_file() && dir.join(WHITE_FILE).is_file()
}

/// Lower-case hex SHA-256 of a file.
pub fn sha256_file(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Fails with [`Error::Checksum`] unless the file hashes to `expected`.
pub fn verify_sha256(path: &Path, expected: &str) -> Result<()> {
    let actual = sha256_file(path)?;
    if actual.eq_ignore_ascii_case(expected.trim()) {
        Ok(())
    } else {
        Err(Error::Checksum {
            path: path.to_path_buf(),
            expected: expected.trim().to_lowercase(),
            actual,
        })
    }
}

/// Bundled synthetic files with the UCI schema, for offline tests.
pub fn fixture_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
