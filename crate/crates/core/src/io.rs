//! CSV input/output and injected random covariates.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{validate, Dataset};
use crate::error::{GofError, Result};

/// Reads a comma-separated file with a header row. The column named
/// `dependent` becomes the 0/1 response; every other column is a covariate,
/// in header order. Rows in error messages are 1-based data rows (the header
/// is not counted).
pub fn load_csv(path: impl AsRef<Path>, dependent: &str) -> Result<Dataset<f64>> {
    let file = File::open(path.as_ref())?;
    read_csv(file, dependent)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, dependent: &str) -> Result<Dataset<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(0, None, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let dep = header.iter().position(|h| h == dependent).ok_or_else(|| GofError::Csv {
        row: 0,
        column: Some(dependent.to_string()),
        message: "dependent column not found in header".into(),
    })?;
    let names: Vec<String> = header.iter().enumerate().filter(|&(j, _)| j != dep).map(|(_, h)| h.clone()).collect();

    let mut y = Vec::new();
    let mut x = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(row, None, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(csv_err(
                row,
                None,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        for (j, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if j == dep {
                y.push(match cell {
                    "0" => 0,
                    "1" => 1,
                    _ => {
                        return Err(csv_err(
                            row,
                            Some(&header[j]),
                            format!("non-binary dependent value {cell:?}"),
                        ))
                    }
                });
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| csv_err(row, Some(&header[j]), format!("unparseable number {cell:?}")))?;
                if !v.is_finite() {
                    return Err(csv_err(row, Some(&header[j]), format!("non-finite value {cell:?}")));
                }
                x.push(v);
            }
        }
    }
    let d = Dataset::from_parts(y, x, names);
    validate(&d)?;
    Ok(d)
}

fn csv_err(row: usize, column: Option<&str>, message: String) -> GofError {
    GofError::Csv {
        row,
        column: column.map(str::to_string),
        message,
    }
}

/// Writes `d` with the response first under the name `dependent`. Numbers
/// use the shortest representation that parses back to the same double.
pub fn write_csv<W: Write>(d: &Dataset<f64>, dependent: &str, out: W) -> Result<()> {
    if d.names().iter().any(|n| n == dependent) {
        return Err(GofError::Config(format!("dependent name {dependent:?} collides with a covariate")));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![dependent.to_string()];
    header.extend(d.names().iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(0, None, e.to_string()))?;
    for k in 0..d.n() {
        let mut rec = vec![d.y()[k].to_string()];
        rec.extend(d.row(k).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| csv_err(k + 1, None, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_csv`] to a file.
pub fn export_csv(d: &Dataset<f64>, dependent: &str, path: impl AsRef<Path>) -> Result<()> {
    write_csv(d, dependent, File::create(path.as_ref())?)
}

/// Appends `count` columns of i.i.d. U(0,1) draws named `u1, u2, ...`.
/// Column-major draw order from a ChaCha8 stream seeded by `seed`.
pub fn inject_uniform_covariates(d: &Dataset<f64>, count: usize, seed: u64) -> Result<Dataset<f64>> {
    if count == 0 {
        return Err(GofError::Config("inject count must be at least 1".into()));
    }
    let names: Vec<String> = (1..=count).map(|j| format!("u{j}")).collect();
    if let Some(clash) = names.iter().find(|n| d.column_index(n).is_some()) {
        return Err(GofError::Config(format!("injected variable {clash:?} already exists")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..count)
        .map(|_| (0..d.n()).map(|_| rng.sample::<f64, _>(Open01)).collect())
        .collect();
    d.append_columns(names, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded_finney;

    #[test]
    fn finney_round_trip() {
        let d = embedded_finney::<f64>();
        let mut buf = Vec::new();
        write_csv(&d, "y", &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), "y").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn dependent_column_anywhere() {
        let text = "a,resp,b\n0.5,1,2\n1.5,0,-3e-2\n";
        let d = read_csv(text.as_bytes(), "resp").unwrap();
        assert_eq!(d.y(), &[1, 0]);
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.row(1), &[1.5, -0.03]);
    }

    #[test]
    fn errors_name_row_and_column() {
        let err = read_csv("y,x\n1,0.5\n2,0.1\n".as_bytes(), "y").unwrap_err();
        match err {
            GofError::Csv { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column.as_deref(), Some("y"));
            }
            e => panic!("{e}"),
        }
        assert!(err_row(read_csv("y,x\n1,abc\n".as_bytes(), "y")) == 1);
        assert!(err_row(read_csv("y,x\n1,0.5\n0\n".as_bytes(), "y")) == 2);
        assert!(matches!(read_csv("y,x\n1,0.5\n".as_bytes(), "z"), Err(GofError::Csv { .. })));
        assert!(matches!(read_csv("y,x\n".as_bytes(), "y"), Err(GofError::Dataset(_))));
    }

    fn err_row(r: Result<Dataset<f64>>) -> usize {
        match r {
            Err(GofError::Csv { row, .. }) => row,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn injection_is_deterministic_and_in_range() {
        let d = embedded_finney::<f64>();
        let a = inject_uniform_covariates(&d, 1, 42).unwrap();
        let b = inject_uniform_covariates(&d, 1, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m(), 3);
        assert_eq!(a.names()[2], "u1");
        assert!(a.column(2).iter().all(|&u| u > 0.0 && u < 1.0));
        assert_eq!(&a.column(0), &d.column(0));
        assert_ne!(a, inject_uniform_covariates(&d, 1, 43).unwrap());
        assert!(inject_uniform_covariates(&a, 1, 1).is_err());
        assert!(inject_uniform_covariates(&d, 0, 1).is_err());
    }
}
