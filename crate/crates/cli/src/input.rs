//! CSV ingestion: rows are time points, columns are series.

use std::io::Read;

use maxcusum::Sample;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default)]
pub struct CsvOptions {
    /// First line holds column names.
    pub header: bool,
    /// First column holds time labels rather than data.
    pub time_column: bool,
    /// Natural log of every value.
    pub log: bool,
}

/// Parsed input; time labels, when present, are attached to the sample.
#[derive(Debug)]
pub struct Dataset {
    pub sample: Sample,
    pub columns: Option<Vec<String>>,
}

pub fn read_csv<R: Read>(reader: R, opts: CsvOptions) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let skip = usize::from(opts.time_column);
    let columns = if opts.header {
        let h = rdr.headers().map_err(csv_error)?;
        Some(h.iter().skip(skip).map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };

    let mut values = Vec::new();
    let mut times = Vec::new();
    let mut p = None;
    let mut n = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(n + 1, |pos| pos.line() as usize);
        if record.len() <= skip {
            return Err(CliError::Data(format!("row {line}: no data columns")));
        }
        let width = record.len() - skip;
        if *p.get_or_insert(width) != width {
            return Err(CliError::Data(format!(
                "row {line}: expected {} data columns, found {width}",
                p.unwrap()
            )));
        }
        if opts.time_column {
            times.push(record[0].to_string());
        }
        for (k, field) in record.iter().enumerate().skip(skip) {
            let col = k + 1;
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("row {line}, column {col}: `{field}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "row {line}, column {col}: non-finite value `{field}`"
                )));
            }
            let v = if opts.log {
                if v <= 0.0 {
                    return Err(CliError::Data(format!(
                        "row {line}, column {col}: log transform needs positive values; got {v}"
                    )));
                }
                v.ln()
            } else {
                v
            };
            values.push(v);
        }
        n += 1;
    }
    let p = p.ok_or_else(|| CliError::Data("input has no data rows".into()))?;
    let mut sample = Sample::from_row_major(n, p, values)?;
    if opts.time_column {
        sample = sample.with_labels(times)?;
    }
    Ok(Dataset { sample, columns })
}

fn csv_error(e: csv::Error) -> CliError {
    let at = e
        .position()
        .map(|p| format!("row {}: ", p.line()))
        .unwrap_or_default();
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CliError::Data(format!(
            "{at}expected {expected_len} fields, found {len}"
        )),
        _ => CliError::Data(format!("{at}{e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, opts: CsvOptions) -> Result<Dataset, CliError> {
        read_csv(text.as_bytes(), opts)
    }

    #[test]
    fn plain_matrix() {
        let d = parse("1,2\n3,4\n5,6\n7,8\n", CsvOptions::default()).unwrap();
        assert_eq!((d.sample.n(), d.sample.p()), (4, 2));
        assert_eq!(d.sample.row(2), &[5.0, 6.0]);
        assert!(d.sample.labels().is_none() && d.columns.is_none());
    }

    #[test]
    fn header_time_column_and_log() {
        let text = "date,a,b\nd1,1,1\nd2,2.718281828459045,1\nd3,1,1\nd4,1,1\n";
        let opts = CsvOptions {
            header: true,
            time_column: true,
            log: true,
        };
        let d = parse(text, opts).unwrap();
        assert_eq!(d.sample.p(), 2);
        assert!((d.sample.row(1)[0] - 1.0).abs() < 1e-15);
        assert_eq!(d.sample.labels().unwrap()[3], "d4");
        assert_eq!(d.columns.unwrap(), vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("1,2\n3,x\n5,6\n7,8\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("row 2, column 2")), "{err}");
        let err = parse("1,2\n3,4,5\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("row 2")), "{err}");
        let log = CsvOptions {
            log: true,
            ..Default::default()
        };
        let err = parse("1,2\n3,0\n5,6\n7,8\n", log).unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("row 2, column 2")), "{err}");
        assert!(matches!(parse("", CsvOptions::default()), Err(CliError::Data(_))));
        assert!(matches!(parse("1,nan\n", CsvOptions::default()), Err(CliError::Data(_))));
    }
}
