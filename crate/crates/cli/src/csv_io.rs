//! Prediction-log ingestion.
//!
//! Accepts exactly two header shapes: `z_1,…,z_K,label` with a 0-based
//! integer class per row, or `z_1,…,z_K,y_1,…,y_K` with a one-hot label
//! block. Every failure message that concerns a data row carries the
//! 1-based file line it came from.

use ece_ci::Dataset;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("malformed header: mixes a `label` column with one-hot `y_*` columns")]
    MixedLabelModes,
    #[error("cannot parse input: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelMode {
    /// Trailing `label` column with a 0-based class index.
    Index,
    /// Trailing `y_1..y_K` block with exactly one 1 per row.
    OneHot,
}

/// Parses prediction CSV bytes into a validated [`Dataset`].
pub fn parse_predictions(bytes: &[u8]) -> Result<Dataset, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers()?.clone();
    let (num_classes, mode) = classify_header(&header)?;

    let fields = match mode {
        LabelMode::Index => num_classes + 1,
        LabelMode::OneHot => 2 * num_classes,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(idx as u64 + 2);
        if record.len() != fields {
            return Err(ParseError::MalformedRow {
                line,
                detail: format!("expected {fields} fields, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(num_classes);
        for (col, raw) in record.iter().take(num_classes).enumerate() {
            row.push(parse_number(raw, &header[col], line)?);
        }
        let label = match mode {
            LabelMode::Index => {
                let raw = &record[num_classes];
                raw.parse::<usize>().map_err(|_| ParseError::MalformedRow {
                    line,
                    detail: format!("label `{raw}` is not a non-negative integer"),
                })?
            }
            LabelMode::OneHot => one_hot_label(&record, &header, num_classes, line)?,
        };
        rows.push(row);
        labels.push(label);
    }

    Dataset::from_rows(&rows, &labels).map_err(dataset_error)
}

/// Determines K and the label mode from the header, or rejects it.
fn classify_header(header: &csv::StringRecord) -> Result<(usize, LabelMode), ParseError> {
    let names: Vec<&str> = header.iter().collect();
    let mut num_classes = 0;
    while num_classes < names.len() && names[num_classes] == format!("z_{}", num_classes + 1) {
        num_classes += 1;
    }
    if num_classes < 2 {
        return Err(ParseError::MalformedHeader(String::from(
            "expected probability columns z_1,…,z_K with K ≥ 2",
        )));
    }
    let rest = &names[num_classes..];
    let has_label = rest.iter().any(|&c| c == "label");
    let has_one_hot = rest.iter().any(|c| c.starts_with("y_"));
    if has_label && has_one_hot {
        return Err(ParseError::MixedLabelModes);
    }
    if rest == ["label"] {
        return Ok((num_classes, LabelMode::Index));
    }
    let one_hot_block = rest.len() == num_classes
        && rest
            .iter()
            .enumerate()
            .all(|(i, &c)| c == format!("y_{}", i + 1));
    if one_hot_block {
        return Ok((num_classes, LabelMode::OneHot));
    }
    Err(ParseError::MalformedHeader(format!(
        "after z_1,…,z_{num_classes}, expected either `label` or `y_1,…,y_{num_classes}`"
    )))
}

fn parse_number(raw: &str, column: &str, line: u64) -> Result<f64, ParseError> {
    raw.parse::<f64>().map_err(|_| ParseError::MalformedRow {
        line,
        detail: format!("column {column}: `{raw}` is not a number"),
    })
}

/// Decodes a `y_1..y_K` block that must contain exactly one 1 and K−1 zeros.
fn one_hot_label(
    record: &csv::StringRecord,
    header: &csv::StringRecord,
    num_classes: usize,
    line: u64,
) -> Result<usize, ParseError> {
    let mut label = None;
    for col in 0..num_classes {
        let raw = &record[num_classes + col];
        let value = parse_number(raw, &header[num_classes + col], line)?;
        if value == 0.0 {
            continue;
        }
        if value != 1.0 {
            return Err(ParseError::MalformedRow {
                line,
                detail: format!("one-hot entry {} must be 0 or 1, found {raw}", &header[num_classes + col]),
            });
        }
        if label.replace(col).is_some() {
            return Err(ParseError::MalformedRow {
                line,
                detail: String::from("one-hot row has more than one 1"),
            });
        }
    }
    label.ok_or(ParseError::MalformedRow {
        line,
        detail: String::from("one-hot row has no 1"),
    })
}

/// Dataset-level validation failures, rephrased against file lines where the
/// offending row is known (line = row index + 2: one header line, 1-based).
fn dataset_error(e: ece_ci::Error) -> ParseError {
    use ece_ci::Error;
    match e {
        Error::NonFiniteEntry { row, .. }
        | Error::NegativeProbability { row, .. }
        | Error::RowSumOutOfTolerance { row, .. }
        | Error::LabelOutOfRange { row, .. } => ParseError::MalformedRow {
            line: row as u64 + 2,
            detail: e.to_string(),
        },
        other => ParseError::Invalid(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset, ParseError> {
        parse_predictions(text.as_bytes())
    }

    #[test]
    fn single_row_with_index_label() {
        let d = parse("z_1,z_2,label\n0.7,0.3,0\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.num_classes(), 2);
        assert_eq!(d.labels(), &[0]);
    }

    #[test]
    fn one_hot_block_decodes_to_class_indices() {
        let d = parse("z_1,z_2,z_3,y_1,y_2,y_3\n0.5,0.3,0.2,0,1,0\n0.2,0.2,0.6,0,0,1\n").unwrap();
        assert_eq!(d.labels(), &[1, 2]);
    }

    #[test]
    fn scientific_notation_is_accepted() {
        let d = parse("z_1,z_2,label\n9.999e-1,1e-4,0\n").unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn two_ones_in_a_one_hot_row_name_the_line() {
        let e = parse("z_1,z_2,y_1,y_2\n0.6,0.4,1,0\n0.5,0.5,1,1\n").unwrap_err();
        assert!(matches!(e, ParseError::MalformedRow { line: 3, .. }), "{e}");
    }

    #[test]
    fn label_and_one_hot_together_are_mixed_modes() {
        let e = parse("z_1,z_2,label,y_1,y_2\n0.6,0.4,0,1,0\n").unwrap_err();
        assert!(matches!(e, ParseError::MixedLabelModes), "{e}");
    }

    #[test]
    fn unknown_header_is_malformed() {
        let e = parse("a,b,label\n0.6,0.4,0\n").unwrap_err();
        assert!(matches!(e, ParseError::MalformedHeader(_)), "{e}");
    }

    #[test]
    fn bad_probability_sum_points_at_the_line() {
        let e = parse("z_1,z_2,label\n0.7,0.3,0\n0.9,0.3,1\n").unwrap_err();
        assert!(matches!(e, ParseError::MalformedRow { line: 3, .. }), "{e}");
    }

    #[test]
    fn out_of_range_label_points_at_the_line() {
        let e = parse("z_1,z_2,label\n0.7,0.3,2\n").unwrap_err();
        assert!(matches!(e, ParseError::MalformedRow { line: 2, .. }), "{e}");
    }

    #[test]
    fn non_numeric_probability_is_rejected() {
        let e = parse("z_1,z_2,label\nx,0.3,0\n").unwrap_err();
        assert!(matches!(e, ParseError::MalformedRow { line: 2, .. }), "{e}");
    }
}
