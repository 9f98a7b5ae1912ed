use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ColumnNames, Dataset};
use crate::linalg::{Matrix, Vector};

/// Column roles in a delimited file. Role assignment is always explicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaMap {
    pub outcome: String,
    pub treatment: String,
    pub tcp: Vec<String>,
    pub ocp: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl SchemaMap {
    pub fn columns(&self) -> Vec<&str> {
        let mut all = vec![self.outcome.as_str(), self.treatment.as_str()];
        all.extend(self.tcp.iter().map(String::as_str));
        all.extend(self.ocp.iter().map(String::as_str));
        all.extend(self.covariates.iter().map(String::as_str));
        all
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in self.columns() {
            if !seen.insert(c) {
                return Err(Error::config(
                    "schema",
                    format!("column '{c}' is assigned more than one role"),
                ));
            }
        }
        if self.tcp.is_empty() {
            return Err(Error::config(
                "schema.tcp",
                "at least one TCP column is required",
            ));
        }
        if self.ocp.is_empty() {
            return Err(Error::config(
                "schema.ocp",
                "at least one OCP column is required",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Unparseable cells are errors.
    #[default]
    Strict,
    /// Rows with unparseable cells are dropped like rows with missing cells.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadOptions {
    pub delimiter: char,
    pub mode: ParseMode,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: ',',
            mode: ParseMode::Strict,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    /// Rows dropped for a missing value in a mapped column.
    pub dropped_missing: usize,
    /// Rows dropped for an unparseable value (lenient mode only).
    pub dropped_unparseable: usize,
}

fn is_missing(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || t == "." || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Read a headed delimited file, keeping complete cases of the mapped columns.
///
/// Parse errors report the 1-based data row (the header is not counted).
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &SchemaMap,
    options: &LoadOptions,
) -> Result<Loaded> {
    let path = path.as_ref();
    schema.validate()?;
    if !options.delimiter.is_ascii() {
        return Err(Error::InvalidInput(format!(
            "delimiter {:?} is not ASCII",
            options.delimiter
        )));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers()?.clone();
    let wanted = schema.columns();
    let missing: Vec<String> = wanted
        .iter()
        .filter(|c| !header.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumn(missing));
    }
    let positions: Vec<usize> = wanted
        .iter()
        .map(|c| header.iter().position(|h| h == *c).expect("checked above"))
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let (mut dropped_missing, mut dropped_unparseable) = (0, 0);
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut values = Vec::with_capacity(positions.len());
        let mut incomplete = false;
        let mut unparseable = false;
        for (&pos, name) in positions.iter().zip(&wanted) {
            let token = record.get(pos).unwrap_or("");
            if is_missing(token) {
                incomplete = true;
                continue;
            }
            match token.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => match options.mode {
                    ParseMode::Strict => {
                        return Err(Error::Parse {
                            row: i + 1,
                            column: name.to_string(),
                            value: token.to_string(),
                        })
                    }
                    ParseMode::Lenient => unparseable = true,
                },
            }
        }
        if unparseable {
            dropped_unparseable += 1;
        } else if incomplete {
            dropped_missing += 1;
        } else {
            rows.push(values);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFiltering {
            dropped: dropped_missing + dropped_unparseable,
        });
    }
    let n = rows.len();
    let (p_z, p_w, p_x) = (schema.tcp.len(), schema.ocp.len(), schema.covariates.len());
    let block = |offset: usize, width: usize| Matrix::from_fn(n, width, |i, j| rows[i][offset + j]);
    let dataset = Dataset::with_names(
        Vector::from_fn(n, |i, _| rows[i][0]),
        Vector::from_fn(n, |i, _| rows[i][1]),
        block(2, p_z),
        block(2 + p_z, p_w),
        block(2 + p_z + p_w, p_x),
        ColumnNames {
            outcome: schema.outcome.clone(),
            treatment: schema.treatment.clone(),
            tcp: schema.tcp.clone(),
            ocp: schema.ocp.clone(),
            covariates: schema.covariates.clone(),
        },
    )?;
    Ok(Loaded {
        dataset,
        dropped_missing,
        dropped_unparseable,
    })
}

/// Write a dataset with its column names; values use shortest round-trip formatting.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path)?;
    let names = &data.names;
    let mut header = vec![names.outcome.clone(), names.treatment.clone()];
    header.extend(names.tcp.iter().cloned());
    header.extend(names.ocp.iter().cloned());
    header.extend(names.covariates.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..data.n() {
        let mut row = vec![data.y[i].to_string(), data.d[i].to_string()];
        row.extend(data.z.row(i).iter().map(f64::to_string));
        row.extend(data.w.row(i).iter().map(f64::to_string));
        row.extend(data.x.row(i).iter().map(f64::to_string));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> SchemaMap {
        SchemaMap {
            outcome: "y".into(),
            treatment: "d".into(),
            tcp: vec!["z1".into(), "z2".into()],
            ocp: vec!["w".into()],
            covariates: vec![],
        }
    }

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const GOOD: &str = "y,d,z1,z2,w,extra\n\
        1,2,3,4,5,x\n\
        2,1,0,1,7,x\n\
        0,3,1,5,2,x\n\
        4,0,2,2,1,x\n\
        5,5,1,0,3,x\n";

    #[test]
    fn loads_mapped_columns() {
        let f = file(GOOD);
        let loaded = load_csv(f.path(), &schema(), &LoadOptions::default()).unwrap();
        let d = &loaded.dataset;
        assert_eq!(d.n(), 5);
        assert_eq!(d.y[1], 2.0);
        assert_eq!(d.z[(2, 1)], 5.0);
        assert_eq!(d.w[(3, 0)], 1.0);
        assert_eq!(d.names.tcp, vec!["z1", "z2"]);
    }

    #[test]
    fn missing_column_is_named() {
        let f = file("y,d,z1,w\n1,2,3,4\n");
        match load_csv(f.path(), &schema(), &LoadOptions::default()) {
            Err(Error::MissingColumn(cols)) => assert_eq!(cols, vec!["z2"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strict_mode_locates_bad_cell_and_lenient_mode_drops_it() {
        let text = GOOD.replace("2,1,0,1,7,x", "oops,1,0,1,7,x") + "6,1,2,3,4,x\n";
        let f = file(&text);
        match load_csv(f.path(), &schema(), &LoadOptions::default()) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "y", "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let lenient = LoadOptions {
            mode: ParseMode::Lenient,
            ..LoadOptions::default()
        };
        let loaded = load_csv(f.path(), &schema(), &lenient).unwrap();
        assert_eq!(loaded.dataset.n(), 5);
        assert_eq!(loaded.dropped_unparseable, 1);
    }

    #[test]
    fn incomplete_rows_are_dropped_with_a_count() {
        let text = GOOD.to_string() + "1,NA,1,1,1,x\n2,2,,1,1,x\n3,3,.,1,1,\n";
        let f = file(&text);
        let loaded = load_csv(f.path(), &schema(), &LoadOptions::default()).unwrap();
        assert_eq!(loaded.dataset.n(), 5);
        assert_eq!(loaded.dropped_missing, 3);
    }

    #[test]
    fn all_rows_missing_is_an_error() {
        let f = file("y,d,z1,z2,w\nNA,1,1,1,1\n");
        assert!(matches!(
            load_csv(f.path(), &schema(), &LoadOptions::default()),
            Err(Error::EmptyAfterFiltering { dropped: 1 })
        ));
    }

    #[test]
    fn overlapping_roles_are_rejected() {
        let mut s = schema();
        s.ocp = vec!["z1".into()];
        assert!(matches!(s.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn semicolon_delimiter() {
        let f = file(&GOOD.replace(',', ";"));
        let options = LoadOptions {
            delimiter: ';',
            ..LoadOptions::default()
        };
        assert_eq!(
            load_csv(f.path(), &schema(), &options).unwrap().dataset.n(),
            5
        );
    }

    #[test]
    fn row_permutation_permutes_dataset_rows() {
        let lines: Vec<&str> = GOOD.lines().collect();
        let permuted =
            [lines[0], lines[3], lines[1], lines[5], lines[2], lines[4]].join("\n") + "\n";
        let a = load_csv(file(GOOD).path(), &schema(), &LoadOptions::default())
            .unwrap()
            .dataset;
        let b = load_csv(file(&permuted).path(), &schema(), &LoadOptions::default())
            .unwrap()
            .dataset;
        assert_eq!(b, a.select_rows(&[2, 0, 4, 1, 3]));
    }

    #[test]
    fn write_then_load_round_trips() {
        let a = load_csv(file(GOOD).path(), &schema(), &LoadOptions::default())
            .unwrap()
            .dataset;
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(out.path(), &a).unwrap();
        let b = load_csv(out.path(), &schema(), &LoadOptions::default())
            .unwrap()
            .dataset;
        assert_eq!(a, b);
    }
}
