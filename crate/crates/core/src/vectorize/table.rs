use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with nine significant digits, `%.9g` style.
pub fn format_sig9(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{value:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds a value to what the feature table stores.
pub fn quantize(value: f64) -> f64 {
    format_sig9(value).parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub label: Option<u8>,
    pub scheme: String,
    pub values: Vec<f64>,
}

/// Feature vectors in manifest order, stored as CSV with header
/// `sample_id,label,scheme,f_0,...,f_{n-1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRow>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Common row width; errors name the first row that disagrees.
    pub fn width(&self) -> Result<usize> {
        let Some(first) = self.rows.first() else {
            return Ok(0);
        };
        let width = first.values.len();
        for (i, row) in self.rows.iter().enumerate() {
            if row.values.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    found: row.values.len(),
                    row: Some(i),
                });
            }
        }
        Ok(width)
    }

    /// Every value rounded as it would be after a write/read cycle.
    pub fn quantized(mut self) -> Self {
        for row in &mut self.rows {
            for v in &mut row.values {
                *v = quantize(*v);
            }
        }
        self
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    /// Labels; errors if any row is unlabeled.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                r.label.ok_or_else(|| Error::Parse {
                    what: format!("feature row {}", r.sample_id),
                    reason: "missing label".into(),
                })
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let width = self.width()?;
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sample_id".to_string(), "label".into(), "scheme".into()];
        header.extend((0..width).map(|i| format!("f_{i}")));
        let csv_err = |e: csv::Error| Error::Parse {
            what: "feature table".into(),
            reason: e.to_string(),
        };
        writer.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut record = vec![
                row.sample_id.clone(),
                row.label.map(|l| l.to_string()).unwrap_or_default(),
                row.scheme.clone(),
            ];
            record.extend(row.values.iter().map(|&v| format_sig9(v)));
            writer.write_record(&record).map_err(csv_err)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Parse {
            what: "feature table".into(),
            reason: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let parse = |reason: String| Error::Parse {
            what: "feature table".into(),
            reason,
        };
        let header = reader.headers().map_err(|e| parse(e.to_string()))?.clone();
        if header.len() < 3 || &header[0] != "sample_id" || &header[1] != "label" || &header[2] != "scheme" {
            return Err(parse("header must start with sample_id,label,scheme".into()));
        }
        let width = header.len() - 3;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| parse(e.to_string()))?;
            if record.len() != width + 3 {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    found: record.len().saturating_sub(3),
                    row: Some(i),
                });
            }
            let label = match &record[1] {
                "" => None,
                "0" => Some(0),
                "1" => Some(1),
                other => return Err(parse(format!("row {i}: bad label {other:?}"))),
            };
            let values = record
                .iter()
                .skip(3)
                .map(|v| v.parse::<f64>().map_err(|e| parse(format!("row {i}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow {
                sample_id: record[0].to_string(),
                label,
                scheme: record[2].to_string(),
                values,
            });
        }
        Ok(Self { rows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e9");
        assert_eq!(format_sig9(0.000012345), "0.000012345");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(-2.25), "-2.25");
        assert_eq!(format_sig9(9.9999999996), "10");
    }

    #[test]
    fn csv_round_trip_and_width_errors() {
        let table = FeatureTable::new(vec![
            FeatureRow {
                sample_id: "a".into(),
                label: Some(1),
                scheme: "pers_img".into(),
                values: vec![0.25, 1.0 / 3.0],
            },
            FeatureRow {
                sample_id: "b,c".into(),
                label: None,
                scheme: "pers_img".into(),
                values: vec![0.0, 2.0],
            },
        ]);
        let text = table.to_csv_string().unwrap();
        assert!(text.starts_with("sample_id,label,scheme,f_0,f_1\n"));
        let back = FeatureTable::from_csv_str(&text).unwrap();
        assert_eq!(back, table.clone().quantized());

        let ragged = "sample_id,label,scheme,f_0,f_1\na,1,x,0,1\nb,0,x,0\n";
        match FeatureTable::from_csv_str(ragged) {
            Err(Error::DimensionMismatch { row: Some(1), .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(v in -1e12f64..1e12) {
            let q = quantize(v);
            prop_assert_eq!(quantize(q), q);
            prop_assert!((q - v).abs() <= v.abs() * 1e-8 + 1e-300);
        }
    }
}
