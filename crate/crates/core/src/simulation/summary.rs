use std::fmt::Write as _;
use std::io::{Read, Write};

use serde_json::{Map, Number, Value};

use crate::linalg::format_f64;
use crate::montecarlo::Estimate;
use crate::{Error, Result};

/// Kind of Monte-Carlo study, which fixes the table schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Study {
    Denoising,
    Clustering,
    Cca,
    Sharpness,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::Denoising, Study::Clustering, Study::Cca, Study::Sharpness];

    pub fn name(self) -> &'static str {
        match self {
            Study::Denoising => "denoising",
            Study::Clustering => "clustering",
            Study::Cca => "cca",
            Study::Sharpness => "sharpness",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|st| st.name() == s.trim()).ok_or_else(|| Error::UnknownStudy(s.trim().to_string()))
    }

    pub fn param_columns(self) -> &'static [&'static str] {
        match self {
            Study::Denoising => &["p1", "p2", "r", "t"],
            Study::Clustering => &["p", "t", "rho", "n"],
            Study::Cca => &["p1", "p2", "r", "n", "t"],
            Study::Sharpness => &["p1", "p2", "r"],
        }
    }

    pub fn metric_columns(self) -> &'static [&'static str] {
        match self {
            Study::Denoising => &["u_sp", "v_sp", "u_fro", "v_fro"],
            Study::Clustering => &["mean_misclassification"],
            Study::Cca => &["u_sp", "u_fro", "v_sp", "v_fro", "lf_procrustes"],
            Study::Sharpness => &["ratio"],
        }
    }

    pub fn reference_columns(self) -> &'static [&'static str] {
        match self {
            Study::Denoising => &["theoretical_u", "theoretical_v"],
            Study::Sharpness => &["min_ratio", "max_ratio"],
            Study::Clustering | Study::Cca => &[],
        }
    }

    /// Params, reps, seed, metric means, references, then one `_se` column per metric.
    pub fn header(self) -> Vec<String> {
        let mut h: Vec<String> = self.param_columns().iter().map(|s| s.to_string()).collect();
        h.push("reps".into());
        h.push("seed".into());
        h.extend(self.metric_columns().iter().map(|s| s.to_string()));
        h.extend(self.reference_columns().iter().map(|s| s.to_string()));
        h.extend(self.metric_columns().iter().map(|s| format!("{s}_se")));
        h
    }
}

impl std::fmt::Display for Study {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    /// In the order of [`Study::param_columns`].
    pub params: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// In the order of [`Study::metric_columns`].
    pub metrics: Vec<Estimate>,
    /// In the order of [`Study::reference_columns`].
    pub reference: Vec<f64>,
}

impl SummaryRow {
    fn cells(&self) -> Vec<String> {
        let mut c: Vec<String> = self.params.iter().map(|v| format_f64(*v)).collect();
        c.push(self.reps.to_string());
        c.push(self.seed.to_string());
        c.extend(self.metrics.iter().map(|e| format_f64(e.mean)));
        c.extend(self.reference.iter().map(|v| format_f64(*v)));
        c.extend(self.metrics.iter().map(|e| format_f64(e.std_error)));
        c
    }
}

/// Aggregated results of one study, one row per parameter tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub study: Study,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn new(study: Study) -> Self {
        Self { study, rows: Vec::new() }
    }

    /// Mean of a named metric in row `i`.
    pub fn metric(&self, i: usize, name: &str) -> Option<Estimate> {
        let k = self.study.metric_columns().iter().position(|c| *c == name)?;
        self.rows.get(i).map(|r| r.metrics[k])
    }

    pub fn param(&self, i: usize, name: &str) -> Option<f64> {
        let k = self.study.param_columns().iter().position(|c| *c == name)?;
        self.rows.get(i).map(|r| r.params[k])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let wrap = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
        w.write_record(self.study.header()).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row.cells()).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::Parse(format!("csv output: {e}")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json_value(&self) -> Value {
        let header = self.study.header();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                let np = row.params.len();
                let nm = row.metrics.len();
                let nr = row.reference.len();
                for (i, name) in header.iter().enumerate() {
                    let v = if i < np {
                        num(row.params[i])
                    } else if i == np {
                        Value::from(row.reps as u64)
                    } else if i == np + 1 {
                        Value::from(row.seed)
                    } else if i < np + 2 + nm {
                        num(row.metrics[i - np - 2].mean)
                    } else if i < np + 2 + nm + nr {
                        num(row.reference[i - np - 2 - nm])
                    } else {
                        num(row.metrics[i - np - 2 - nm - nr].std_error)
                    };
                    obj.insert(name.clone(), v);
                }
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("finite values serialise")
    }

    /// Parses a table written by [`write_csv`](Self::write_csv). Columns are matched by name.
    pub fn read_csv<R: Read>(study: Study, input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let headers = rdr.headers().map_err(|e| Error::Parse(format!("csv header: {e}")))?.clone();
        let names: Vec<String> = headers.iter().map(str::to_string).collect();
        let mut table = Self::new(study);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("csv row {}: {e}", i + 1)))?;
            let lookup = |col: &str| -> Result<String> {
                let k = names.iter().position(|n| n == col).ok_or_else(|| Error::MissingParameter(col.to_string()))?;
                Ok(rec.get(k).unwrap_or_default().to_string())
            };
            table.rows.push(row_from(study, |c| lookup(c))?);
        }
        Ok(table)
    }

    pub fn read_json<R: Read>(study: Study, input: R) -> Result<Self> {
        let v: Value = serde_json::from_reader(input).map_err(|e| Error::Parse(format!("json: {e}")))?;
        let arr = v.as_array().ok_or_else(|| Error::Parse("json table must be an array".into()))?;
        let mut table = Self::new(study);
        for obj in arr {
            let obj = obj.as_object().ok_or_else(|| Error::Parse("json rows must be objects".into()))?;
            table.rows.push(row_from(study, |c| {
                obj.get(c).map(|v| v.to_string()).ok_or_else(|| Error::MissingParameter(c.to_string()))
            })?);
        }
        Ok(table)
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_human(&self) -> String {
        let header = self.study.header();
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut c: Vec<String> = r.params.iter().map(|v| format!("{v}")).collect();
                c.push(r.reps.to_string());
                c.push(r.seed.to_string());
                c.extend(r.metrics.iter().map(|e| format!("{:.4}", e.mean)));
                c.extend(r.reference.iter().map(|v| format!("{v:.4}")));
                c.extend(r.metrics.iter().map(|e| format!("{:.4}", e.std_error)));
                c
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| cells.iter().map(|c| c[j].len()).chain([header[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let parts: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        for c in &cells {
            line(&mut out, c);
        }
        out
    }
}

fn num(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn parse_f64(col: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("column `{col}`: `{s}` is not a number")))
}

fn row_from(study: Study, get: impl Fn(&str) -> Result<String>) -> Result<SummaryRow> {
    let f = |c: &str| -> Result<f64> { parse_f64(c, &get(c)?) };
    let params = study.param_columns().iter().map(|c| f(c)).collect::<Result<Vec<_>>>()?;
    let reps = get("reps")?.trim().parse().map_err(|_| Error::Parse("column `reps` is not an integer".into()))?;
    let seed = get("seed")?.trim().parse().map_err(|_| Error::Parse("column `seed` is not an integer".into()))?;
    let metrics = study
        .metric_columns()
        .iter()
        .map(|c| Ok(Estimate { mean: f(c)?, std_error: f(&format!("{c}_se"))? }))
        .collect::<Result<Vec<_>>>()?;
    let reference = study.reference_columns().iter().map(|c| f(c)).collect::<Result<Vec<_>>>()?;
    Ok(SummaryRow { params, reps, seed, metrics, reference })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SummaryTable {
        SummaryTable {
            study: Study::Denoising,
            rows: vec![SummaryRow {
                params: vec![100.0, 10.0, 2.0, 15.0],
                reps: 3,
                seed: u64::MAX,
                metrics: vec![
                    Estimate { mean: 0.1 + 0.2, std_error: 1e-7 },
                    Estimate { mean: 1.0 / 3.0, std_error: 0.0 },
                    Estimate { mean: 2.5e-20, std_error: 3.0 },
                    Estimate { mean: 0.7, std_error: 0.123_456_789_012_345_67 },
                ],
                reference: vec![0.5, 1.0],
            }],
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let csv = SummaryTable::new(Study::Clustering).to_csv_string();
        assert_eq!(csv, "p,t,rho,n,reps,seed,mean_misclassification,mean_misclassification_se\n");
    }

    #[test]
    fn csv_and_json_round_trip() {
        let t = sample();
        let back = SummaryTable::read_csv(Study::Denoising, t.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, t);
        let back = SummaryTable::read_json(Study::Denoising, t.to_json_string().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.to_json_value().as_array().unwrap().len(), t.to_csv_string().lines().count() - 1);
    }

    #[test]
    fn missing_column_is_named() {
        let err = SummaryTable::read_csv(Study::Clustering, "p,t\n1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
        assert!(matches!(Study::parse("bogus"), Err(Error::UnknownStudy(_))));
    }

    #[test]
    fn human_rendering_has_header_and_rows() {
        let s = sample().to_human();
        assert_eq!(s.lines().count(), 2);
        assert!(s.lines().next().unwrap().contains("theoretical_v"));
    }
}
