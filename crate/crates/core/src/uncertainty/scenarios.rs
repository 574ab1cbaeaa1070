use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `K` observed cost vectors over `n` items, one row per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl ScenarioMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("scenario matrix needs at least one row"));
        };
        let n = first.len();
        for (k, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("scenario {k} has {} entries, expected {n}", row.len())));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::invalid(format!("scenario {k}: entry {c} is not a nonnegative number")));
            }
        }
        Ok(ScenarioMatrix { n, rows })
    }

    /// Parses the scenario CSV: a header `arc_0,...,arc_{n-1}` followed by
    /// one row of costs per scenario.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        for (i, h) in headers.iter().enumerate() {
            if h.trim() != format!("arc_{i}") {
                return Err(Error::parse(1, format!("column {i} is `{h}`, expected `arc_{i}`")));
            }
        }
        let mut rows = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(k + 2, format!("bad number: {e}")))?;
            rows.push(row);
        }
        let m = ScenarioMatrix::new(rows)?;
        if m.n != headers.len() {
            return Err(Error::parse(1, "header and rows disagree on column count"));
        }
        Ok(m)
    }

    /// Writes the format read by [`ScenarioMatrix::parse_csv`], six decimals per entry.
    pub fn to_csv(&self) -> String {
        let mut s = (0..self.n).map(|i| format!("arc_{i}")).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{c:.6}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    /// Sub-matrix of the given scenario indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<ScenarioMatrix> {
        if let Some(&bad) = idx.iter().find(|&&k| k >= self.k()) {
            return Err(Error::invalid(format!("scenario index {bad} out of range")));
        }
        ScenarioMatrix::new(idx.iter().map(|&k| self.rows[k].clone()).collect())
    }

    pub fn mean(&self) -> Vec<f64> {
        let k = self.k() as f64;
        (0..self.n).map(|i| self.rows.iter().map(|r| r[i]).sum::<f64>() / k).collect()
    }

    pub fn min(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.rows.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min)).collect()
    }

    pub fn max(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.rows.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max)).collect()
    }

    /// Sample covariance with denominator `K - 1`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let mu = self.mean();
        let denom = (self.k().max(2) - 1) as f64;
        let centered: Vec<Vec<f64>> =
            self.rows.iter().map(|r| r.iter().zip(&mu).map(|(c, m)| c - m).collect()).collect();
        let mut cov = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for j in i..self.n {
                let s: f64 = centered.iter().map(|r| r[i] * r[j]).sum::<f64>() / denom;
                cov[i][j] = s;
                cov[j][i] = s;
            }
        }
        cov
    }
}
