//! Plot-ready tables in CSV or JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evolution::{AgeHistogram, TimeSeries, UpdateBins};
use crate::stats::{LorenzCurve, RegressionFit, SurvivalCurve};
use crate::time::Month;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// `<metric>__<ecosystem>.<ext>`, with path separators in either part
/// replaced.
pub fn file_name(metric: &str, ecosystem: &str, format: Format) -> String {
    let clean = |s: &str| s.replace(['/', '\\'], "_");
    format!("{}__{}.{}", clean(metric), clean(ecosystem), format.extension())
}

/// Serializes rows as CSV with a header line, or as a JSON array.
pub fn render<S: Serialize>(rows: &[S], format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rows).expect("rows serialize") + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).expect("rows serialize");
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
        }
    }
}

/// CSV header for a row type, for tables that may be empty.
pub fn render_or_header<S: Serialize>(rows: &[S], header: &[&str], format: Format) -> String {
    if rows.is_empty() && format == Format::Csv {
        header.join(",") + "\n"
    } else {
        render(rows, format)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub month: Month,
    pub packages: u64,
    pub dependencies: u64,
}

pub fn growth_rows(packages: &TimeSeries, dependencies: &TimeSeries) -> Vec<GrowthRow> {
    packages
        .points
        .iter()
        .zip(&dependencies.points)
        .map(|(&(month, p), &(_, e))| GrowthRow {
            month,
            packages: p as u64,
            dependencies: e as u64,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub month: Month,
    pub value: f64,
}

pub fn series_rows(s: &TimeSeries) -> Vec<SeriesRow> {
    s.points
        .iter()
        .map(|&(month, value)| SeriesRow { month, value })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub month: Month,
    pub index_name: String,
    pub parameter: Option<f64>,
    pub value: f64,
}

pub fn index_rows(s: &TimeSeries, parameter: Option<f64>) -> Vec<IndexRow> {
    s.points
        .iter()
        .map(|&(month, value)| IndexRow {
            month,
            index_name: s.name.clone(),
            parameter,
            value,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub time: f64,
    pub survival: f64,
}

pub fn survival_rows(c: &SurvivalCurve) -> Vec<SurvivalRow> {
    c.steps
        .iter()
        .map(|s| SurvivalRow {
            time: s.time,
            survival: s.survival,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzRow {
    pub cum_pop: f64,
    pub cum_val: f64,
}

pub fn lorenz_rows(c: &LorenzCurve) -> Vec<LorenzRow> {
    c.points
        .iter()
        .map(|&(cum_pop, cum_val)| LorenzRow { cum_pop, cum_val })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub a: f64,
    pub b: f64,
    pub r2: f64,
}

pub fn fit_row(f: &RegressionFit) -> FitRow {
    FitRow {
        model: f.model.name().to_owned(),
        a: f.a,
        b: f.b,
        r2: f.r_squared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub bin: String,
    pub count: usize,
    pub proportion: f64,
}

fn proportion(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

pub fn update_bin_rows(b: &UpdateBins) -> Vec<BinRow> {
    [("never", b.never), ("1-4", b.low), (">=5", b.high)]
        .into_iter()
        .map(|(bin, count)| BinRow {
            bin: bin.to_owned(),
            count,
            proportion: proportion(count, b.total),
        })
        .collect()
}

pub fn age_rows(h: &AgeHistogram) -> Vec<BinRow> {
    h.bins
        .iter()
        .map(|b| BinRow {
            bin: b.label.clone(),
            count: b.count,
            proportion: b.proportion,
        })
        .collect()
}

/// Rows of an integer-keyed histogram such as dependency depth.
pub fn histogram_rows<'a>(h: impl IntoIterator<Item = (&'a usize, &'a usize)>) -> Vec<BinRow> {
    let pairs: Vec<(usize, usize)> = h.into_iter().map(|(&k, &v)| (k, v)).collect();
    let total = pairs.iter().map(|p| p.1).sum();
    pairs
        .into_iter()
        .map(|(bin, count)| BinRow {
            bin: bin.to_string(),
            count,
            proportion: proportion(count, total),
        })
        .collect()
}
