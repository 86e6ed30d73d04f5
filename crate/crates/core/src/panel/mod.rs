//! Panel ingestion and stationarity preprocessing.
//!
//! A [`TimeSeriesPanel`] is an aligned N x T block of observations (rows =
//! nodes, columns = time). CSV input is one time point per row with node
//! labels in the header; an optional leading ISO-8601 date column is dropped
//! and noted in the panel's provenance. Preprocessing transforms (log
//! returns, HP cycles, GARCH volatilities, z-scoring) all return new panels.

mod garch;
mod hp;

pub use garch::{garch11_fit, GarchFit, GarchWarning};
pub use hp::hp_filter;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Sampling frequency of a panel; drives the default HP penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Quarterly,
    Monthly,
    Other,
}

impl Frequency {
    /// Ravn-Uhlig default HP penalties: 1600 quarterly, 129600 monthly.
    pub fn default_hp_lambda(self) -> f64 {
        match self {
            Frequency::Quarterly => 1600.0,
            Frequency::Monthly => 129_600.0,
            Frequency::Other => 1600.0,
        }
    }
}

impl std::str::FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quarterly" => Ok(Frequency::Quarterly),
            "monthly" => Ok(Frequency::Monthly),
            "other" => Ok(Frequency::Other),
            other => Err(Error::Config(format!("unknown frequency '{other}'"))),
        }
    }
}

/// What to do with missing cells during ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Any hole aborts the load.
    #[default]
    Reject,
    /// Holes are filled with the previous observation of the same node and
    /// flagged in provenance. A hole at the first time point still aborts.
    ForwardFill,
}

impl std::str::FromStr for MissingPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reject" => Ok(MissingPolicy::Reject),
            "forward_fill" | "ffill" => Ok(MissingPolicy::ForwardFill),
            other => Err(Error::Config(format!("unknown missing policy '{other}'"))),
        }
    }
}

/// CSV ingestion options.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub missing: MissingPolicy,
    pub frequency: Option<Frequency>,
}

/// Aligned multivariate panel: rows are nodes, columns are time points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPanel<S: Scalar> {
    labels: Vec<String>,
    data: Matrix<S>,
    frequency: Frequency,
    provenance: Vec<String>,
}

impl<S: Scalar> TimeSeriesPanel<S> {
    /// Validates the panel invariants: N labels matching N rows, unique
    /// labels, T >= 2, and finite entries.
    pub fn new(labels: Vec<String>, data: Matrix<S>, frequency: Frequency) -> Result<Self> {
        if labels.len() != data.rows() {
            return Err(Error::Schema(format!(
                "{} labels for {} data rows",
                labels.len(),
                data.rows()
            )));
        }
        if data.cols() < 2 {
            return Err(Error::Schema(format!(
                "panel needs at least 2 time points, got {}",
                data.cols()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Schema(format!("duplicate node label '{l}'")));
            }
        }
        if !data.all_finite() {
            return Err(Error::Domain("panel contains non-finite values".into()));
        }
        Ok(TimeSeriesPanel {
            labels,
            data,
            frequency,
            provenance: Vec::new(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &Matrix<S> {
        &self.data
    }

    pub fn n_nodes(&self) -> usize {
        self.data.rows()
    }

    pub fn n_obs(&self) -> usize {
        self.data.cols()
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn push_provenance(&mut self, note: impl Into<String>) {
        self.provenance.push(note.into());
    }

    pub fn series(&self, node: usize) -> &[S] {
        self.data.row(node)
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Lookup(format!("unknown node label '{label}'")))
    }

    /// Parse a panel from CSV text (header = labels, one time point per row).
    pub fn from_csv_str(text: &str, opts: LoadOptions) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .peekable();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))?;
        let mut labels: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();

        let rows: Vec<Vec<&str>> = lines
            .map(|l| l.split(',').map(str::trim).collect())
            .collect();
        if rows.is_empty() {
            return Err(Error::Parse("no data rows".into()));
        }

        // A leading ISO-8601 date column (e.g. 1980-03-31) is dropped.
        let date_col = looks_like_iso_date(rows[0].first().copied().unwrap_or(""));
        let first_data_col = usize::from(date_col);
        if date_col {
            if labels.is_empty() {
                return Err(Error::Parse("header shorter than data rows".into()));
            }
            labels.remove(0);
        }

        let n = labels.len();
        let t = rows.len();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Schema(format!("duplicate node label '{l}'")));
            }
        }

        let mut data = Matrix::<S>::zeros(n, t);
        let mut filled = 0usize;
        for (ti, row) in rows.iter().enumerate() {
            if row.len() != n + first_data_col {
                return Err(Error::Parse(format!(
                    "row {} has {} cells, expected {}",
                    ti + 2,
                    row.len(),
                    n + first_data_col
                )));
            }
            for (ni, cell) in row[first_data_col..].iter().enumerate() {
                if is_missing_token(cell) {
                    match opts.missing {
                        MissingPolicy::Reject => {
                            return Err(Error::MissingData(format!(
                                "missing value at row {}, node '{}'",
                                ti + 2,
                                labels[ni]
                            )))
                        }
                        MissingPolicy::ForwardFill => {
                            if ti == 0 {
                                return Err(Error::MissingData(format!(
                                    "missing value at first time point for node '{}' \
                                     cannot be forward-filled",
                                    labels[ni]
                                )));
                            }
                            data[(ni, ti)] = data[(ni, ti - 1)];
                            filled += 1;
                        }
                    }
                } else {
                    let v: f64 = cell.parse().map_err(|_| {
                        Error::Parse(format!(
                            "non-numeric cell '{}' at row {}, column {}",
                            cell,
                            ti + 2,
                            ni + 1 + first_data_col
                        ))
                    })?;
                    data[(ni, ti)] = S::from_f64_lossy(v);
                }
            }
        }

        let mut panel =
            TimeSeriesPanel::new(labels, data, opts.frequency.unwrap_or(Frequency::Other))?;
        if date_col {
            panel.push_provenance("dropped leading ISO-8601 date column".to_string());
        }
        if filled > 0 {
            panel.push_provenance(format!("forward-filled {filled} missing values"));
        }
        Ok(panel)
    }

    pub fn load_csv(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut panel = Self::from_csv_str(&text, opts)?;
        panel.push_provenance(format!("loaded from {}", path.as_ref().display()));
        Ok(panel)
    }

    /// Serialize back to the input CSV orientation (header labels, one time
    /// point per row, no date column).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.labels.join(","));
        out.push('\n');
        for t in 0..self.n_obs() {
            for i in 0..self.n_nodes() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.data[(i, t)]));
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Log returns: `ln(x_{t+1} / x_t)` per node, shortening the panel by one.
    pub fn log_returns(&self) -> Result<Self> {
        let n = self.n_nodes();
        let t = self.n_obs();
        let mut out = Matrix::<S>::zeros(n, t - 1);
        for i in 0..n {
            let row = self.series(i);
            for ti in 0..t - 1 {
                if row[ti] <= S::zero() || row[ti + 1] <= S::zero() {
                    return Err(Error::Domain(format!(
                        "non-positive value in node '{}' at time {}; log returns need \
                         strictly positive levels",
                        self.labels[i], ti
                    )));
                }
                out[(i, ti)] = (row[ti + 1] / row[ti]).ln();
            }
        }
        let mut panel = TimeSeriesPanel::new(self.labels.clone(), out, self.frequency)?;
        panel.provenance = self.provenance.clone();
        panel.push_provenance("log returns".to_string());
        Ok(panel)
    }

    /// Standardize each node to zero mean and unit variance.
    pub fn zscore(&self) -> Result<Self> {
        let n = self.n_nodes();
        let t = self.n_obs();
        let mut out = Matrix::<S>::zeros(n, t);
        let tf = S::from_usize_lossy(t);
        for i in 0..n {
            let row = self.series(i);
            let mean = row.iter().copied().sum::<S>() / tf;
            let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<S>() / tf;
            if var <= S::zero() {
                return Err(Error::Domain(format!(
                    "node '{}' has zero variance; cannot standardize",
                    self.labels[i]
                )));
            }
            let sd = var.sqrt();
            for ti in 0..t {
                out[(i, ti)] = (row[ti] - mean) / sd;
            }
        }
        let mut panel = TimeSeriesPanel::new(self.labels.clone(), out, self.frequency)?;
        panel.provenance = self.provenance.clone();
        panel.push_provenance("z-scored per node".to_string());
        Ok(panel)
    }

    /// Replace each node by its HP-filter cycle. When `log_first` is set the
    /// series is logged before filtering (levels must be positive).
    pub fn hp_cycle(&self, lambda: S, log_first: bool) -> Result<Self> {
        let n = self.n_nodes();
        let t = self.n_obs();
        let mut out = Matrix::<S>::zeros(n, t);
        for i in 0..n {
            let series: Vec<S> = if log_first {
                self.series(i)
                    .iter()
                    .map(|&x| {
                        if x <= S::zero() {
                            Err(Error::Domain(format!(
                                "non-positive value in node '{}'; log-then-filter needs \
                                 positive levels",
                                self.labels[i]
                            )))
                        } else {
                            Ok(x.ln())
                        }
                    })
                    .collect::<Result<_>>()?
            } else {
                self.series(i).to_vec()
            };
            let (_, cycle) = hp_filter(&series, lambda)?;
            for (ti, c) in cycle.into_iter().enumerate() {
                out[(i, ti)] = c;
            }
        }
        let mut panel = TimeSeriesPanel::new(self.labels.clone(), out, self.frequency)?;
        panel.provenance = self.provenance.clone();
        panel.push_provenance(format!(
            "HP cycle (lambda = {lambda}, log_first = {log_first})"
        ));
        Ok(panel)
    }

    /// Replace each node by its fitted GARCH(1,1) latent volatility series.
    /// Input rows are interpreted as returns.
    pub fn garch_volatility(&self) -> Result<Self> {
        let n = self.n_nodes();
        let t = self.n_obs();
        let mut out = Matrix::<S>::zeros(n, t);
        for i in 0..n {
            let fit = garch11_fit(self.series(i)).map_err(|e| {
                Error::Estimation(format!(
                    "GARCH fit failed for node '{}': {e}",
                    self.labels[i]
                ))
            })?;
            for (ti, s) in fit.sigma_series.iter().enumerate() {
                out[(i, ti)] = *s;
            }
        }
        let mut panel = TimeSeriesPanel::new(self.labels.clone(), out, self.frequency)?;
        panel.provenance = self.provenance.clone();
        panel.push_provenance("GARCH(1,1) latent volatility".to_string());
        Ok(panel)
    }
}

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty()
        || matches!(
            cell.to_ascii_lowercase().as_str(),
            "na" | "nan" | "null" | "n/a"
        )
}

/// Matches `YYYY-MM-DD` prefixes (full ISO-8601 timestamps included).
fn looks_like_iso_date(cell: &str) -> bool {
    let b = cell.as_bytes();
    b.len() >= 10
        && b[0..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit)
}
