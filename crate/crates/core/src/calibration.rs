//! Yearly observation series and the growth-rate estimates derived from them.
//!
//! Input is CSV with a `year` column and any subset of `co2`, `gdp`,
//! `forest`, `population`, in any order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const SERIES_COLUMNS: [&str; 4] = ["co2", "gdp", "forest", "population"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservedSeries {
    pub year: Vec<i32>,
    pub co2: Option<Vec<f64>>,
    pub gdp: Option<Vec<f64>>,
    pub forest: Option<Vec<f64>>,
    pub population: Option<Vec<f64>>,
}

impl ObservedSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "co2" => self.co2.as_deref(),
            "gdp" => self.gdp.as_deref(),
            "forest" => self.forest.as_deref(),
            "population" => self.population.as_deref(),
            _ => None,
        }
    }

    fn column_mut(&mut self, name: &str) -> &mut Option<Vec<f64>> {
        match name {
            "co2" => &mut self.co2,
            "gdp" => &mut self.gdp,
            "forest" => &mut self.forest,
            _ => &mut self.population,
        }
    }

    pub fn absent_columns(&self) -> Vec<&'static str> {
        SERIES_COLUMNS
            .iter()
            .copied()
            .filter(|c| self.column(c).is_none())
            .collect()
    }

    /// Canonical CSV: present columns in [`SERIES_COLUMNS`] order.
    pub fn to_csv(&self) -> String {
        let present: Vec<&str> = SERIES_COLUMNS
            .iter()
            .copied()
            .filter(|c| self.column(c).is_some())
            .collect();
        let mut out = String::from("year");
        for c in &present {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, y) in self.year.iter().enumerate() {
            out.push_str(&y.to_string());
            for c in &present {
                out.push_str(&format!(",{}", self.column(c).expect("present")[i]));
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_series(text: &str) -> Result<ObservedSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut year_idx = None;
    let mut value_cols: Vec<(usize, &'static str)> = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if h == "year" {
            year_idx = Some(i);
        } else if let Some(name) = SERIES_COLUMNS.iter().find(|&&c| c == h) {
            if value_cols.iter().any(|(_, n)| n == name) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("duplicate column '{h}'"),
                });
            }
            value_cols.push((i, name));
        } else {
            return Err(Error::Parse {
                line: 1,
                message: format!("unknown column '{h}'"),
            });
        }
    }
    let year_idx = year_idx.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing 'year' column".to_string(),
    })?;

    let mut series = ObservedSeries::default();
    for (_, name) in &value_cols {
        *series.column_mut(name) = Some(Vec::new());
    }
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let year: i32 = field(year_idx).parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid year '{}'", field(year_idx)),
        })?;
        if series.year.last().is_some_and(|&prev| year <= prev) {
            return Err(Error::NonMonotoneYears { line });
        }
        series.year.push(year);
        for &(i, name) in &value_cols {
            let raw = field(i);
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {name} value '{raw}'"),
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveValue {
                    column: name.to_string(),
                    line,
                });
            }
            series
                .column_mut(name)
                .as_mut()
                .expect("present")
                .push(value);
        }
    }
    Ok(series)
}

pub fn load_series(path: &Path) -> Result<ObservedSeries> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text)
}

pub fn save_series(series: &ObservedSeries, path: &Path) -> Result<()> {
    fs::write(path, series.to_csv()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrowthMethod {
    /// Mean of year-over-year relative increments.
    #[default]
    Arithmetic,
    /// Compound annual rate between the first and last rows.
    Geometric,
}

pub fn estimate_growth_rate(values: &[f64], method: GrowthMethod) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "growth rate needs at least 2 points, got {}",
            values.len()
        )));
    }
    Ok(match method {
        GrowthMethod::Arithmetic => {
            values.windows(2).map(|w| (w[1] - w[0]) / w[0]).sum::<f64>() / (values.len() - 1) as f64
        }
        GrowthMethod::Geometric => {
            let first = values[0];
            let last = values[values.len() - 1];
            (last / first).powf(1.0 / (values.len() - 1) as f64) - 1.0
        }
    })
}

/// Mean of `co2 / population` over the rows: emissions per unit population
/// in the units of the input columns.
pub fn estimate_per_capita_rate(co2: &[f64], population: &[f64]) -> Result<f64> {
    if co2.len() != population.len() || co2.is_empty() {
        return Err(Error::InvalidInput(
            "co2 and population columns must be non-empty and aligned".to_string(),
        ));
    }
    Ok(co2.iter().zip(population).map(|(c, n)| c / n).sum::<f64>() / co2.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub method: GrowthMethod,
    /// `(column, parameter it informs, rate)`
    pub rates: Vec<(&'static str, &'static str, f64)>,
    pub per_capita_emission: Option<f64>,
    pub years: (i32, i32),
}

pub fn growth_report(series: &ObservedSeries, method: GrowthMethod) -> Result<GrowthReport> {
    let mut rates = Vec::new();
    for (column, param) in [
        ("gdp", "mu"),
        ("forest", "omega"),
        ("population", "s"),
        ("co2", "co2"),
    ] {
        if let Some(values) = series.column(column) {
            rates.push((column, param, estimate_growth_rate(values, method)?));
        }
    }
    let per_capita_emission = match (series.co2.as_deref(), series.population.as_deref()) {
        (Some(c), Some(n)) => Some(estimate_per_capita_rate(c, n)?),
        _ => None,
    };
    let years = match (series.year.first(), series.year.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidInput("series has no rows".to_string())),
    };
    Ok(GrowthReport {
        method,
        rates,
        per_capita_emission,
        years,
    })
}
