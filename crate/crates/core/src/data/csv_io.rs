use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::Dataset;
use crate::error::{Error, Result};

/// Label column selector: a header name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit strings select by index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    rows: Vec<csv::StringRecord>,
    width: usize,
}

fn read_table(path: &Path, has_header: bool) -> Result<RawTable> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = if has_header {
        Some(reader.headers()?.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        // Skip blank lines.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record);
    }
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| rows.first().map(csv::StringRecord::len))
        .unwrap_or(0);
    for (r, rec) in rows.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r,
                column: rec.len().min(width),
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
    }
    Ok(RawTable {
        header,
        rows,
        width,
    })
}

fn resolve_column(table: &RawTable, label: &LabelColumn) -> Result<usize> {
    match label {
        LabelColumn::Index(i) if *i < table.width => Ok(*i),
        LabelColumn::Index(i) => Err(Error::Data(format!(
            "label column index {i} is out of range ({} columns)",
            table.width
        ))),
        LabelColumn::Name(name) => {
            let header = table.header.as_ref().ok_or_else(|| {
                Error::Data(format!("label column {name:?} selected by name but the file has no header"))
            })?;
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("no column named {name:?} in the header")))
        }
    }
}

fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    let value: f64 = cell.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: format!("cannot parse {cell:?} as a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message: format!("non-finite value {cell:?}"),
        });
    }
    Ok(value)
}

fn parse_features(path: &Path, table: &RawTable, skip: Option<usize>) -> Result<Array2<f64>> {
    let cols: Vec<usize> = (0..table.width).filter(|c| Some(*c) != skip).collect();
    let mut x = Array2::<f64>::zeros((table.rows.len(), cols.len()));
    for (r, rec) in table.rows.iter().enumerate() {
        for (k, &c) in cols.iter().enumerate() {
            x[[r, k]] = parse_cell(path, r, c, &rec[c])?;
        }
    }
    Ok(x)
}

/// Load a labeled dataset. Labels `0`/`1` are kept and `-1` maps to `0`.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_table(path, has_header)?;
    let label_col = resolve_column(&table, label)?;
    let x = parse_features(path, &table, Some(label_col))?;

    let mut offending = BTreeSet::new();
    let mut y = Array1::<u8>::zeros(table.rows.len());
    for (r, rec) in table.rows.iter().enumerate() {
        let raw = &rec[label_col];
        let value = parse_cell(path, r, label_col, raw)?;
        y[r] = if value == 1.0 {
            1
        } else if value == 0.0 || value == -1.0 {
            0
        } else {
            offending.insert(raw.to_string());
            0
        };
    }
    if !offending.is_empty() {
        let list: Vec<String> = offending.into_iter().collect();
        return Err(Error::Data(format!(
            "labels must be in {{0, 1}} or {{-1, 1}}; offending values: {}",
            list.join(", ")
        )));
    }
    let names = table.header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| *i != label_col)
            .map(|(_, n)| n)
            .collect()
    });
    Dataset::new(x, y, names)
}

/// Load a feature matrix, optionally dropping a label column.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    exclude: Option<&LabelColumn>,
    has_header: bool,
) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let table = read_table(path, has_header)?;
    let skip = exclude.map(|l| resolve_column(&table, l)).transpose()?;
    parse_features(path, &table, skip)
}

/// Write `x0..x{d-1},label` with a header (or the dataset's own feature names).
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = match &dataset.feature_names {
        Some(names) => names.clone(),
        None => (0..dataset.dim()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    writer.write_record(&header)?;
    for (row, label) in dataset.x.rows().into_iter().zip(dataset.y.iter()) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        record.push(label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
