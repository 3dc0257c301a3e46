use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dataset::{encode_and_impute, Dataset, DatasetError, RawColumn, RawTable};
use crate::evaluation::{mccv_splits, Split, SplitError};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Parses comma-separated text with a header row into a raw table. Empty cells
/// and `?` are missing. A column whose present cells all parse as numbers is
/// numeric; any other column is categorical.
pub fn read_table<R: Read>(reader: R) -> Result<RawTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record?;
        for (column, value) in cells.iter_mut().zip(record.iter()) {
            column.push(value.to_string());
        }
    }
    let mut table = RawTable::default();
    for (name, column) in header.into_iter().zip(cells) {
        let parsed: Option<Vec<Option<f64>>> = column
            .iter()
            .map(|c| if is_missing(c) { Some(None) } else { c.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some) })
            .collect();
        let raw = match parsed {
            Some(values) => RawColumn::Numeric(values),
            None => RawColumn::Categorical(
                column
                    .into_iter()
                    .map(|c| (!is_missing(&c)).then_some(c))
                    .collect(),
            ),
        };
        table.push(name, raw);
    }
    Ok(table)
}

/// Reads, encodes and imputes a csv file.
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let table = read_table(file)?;
    Ok(encode_and_impute(&table, label_column)?)
}

/// Stratified shuffle split of `data` into train and test sides.
pub fn outer_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Split, Dataset, Dataset), SplitError> {
    let split = mccv_splits(data.len(), train_fraction, 1, data.labels(), seed)?.remove(0);
    let train = data.subset(&split.train);
    let test = data.subset(&split.test);
    Ok((split, train, test))
}

/// Two Gaussian blobs in the plane (unit variance, centers (0, 0) and (2, 2)),
/// balanced classes `a` and `b`, a categorical noise column with values
/// red/green/blue and 5% of the feature cells missing.
pub fn synthetic_table(n: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let colors = ["red", "green", "blue"];
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut color = Vec::with_capacity(n);
    let mut class = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 1;
        let center = if positive { 2.0 } else { 0.0 };
        x1.push(Some(center + noise.sample(&mut rng)));
        x2.push(Some(center + noise.sample(&mut rng)));
        color.push(Some(colors[rng.gen_range(0..colors.len())].to_string()));
        class.push(Some(if positive { "b" } else { "a" }.to_string()));
    }
    let cells = 3 * n;
    let missing = (cells as f64 * 0.05).round() as usize;
    let chosen = rand::seq::index::sample(&mut rng, cells, missing);
    for k in chosen.iter() {
        let row = k / 3;
        match k % 3 {
            0 => x1[row] = None,
            1 => x2[row] = None,
            _ => color[row] = None,
        }
    }
    let mut table = RawTable::default();
    table.push("x1", RawColumn::Numeric(x1));
    table.push("x2", RawColumn::Numeric(x2));
    table.push("color", RawColumn::Categorical(color));
    table.push("class", RawColumn::Categorical(class));
    table
}

/// Writes a raw table as csv, missing cells as `?` and reals with six decimals.
pub fn write_table<W: Write>(table: &RawTable, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.columns.iter().map(|(n, _)| n.as_str()))?;
    for row in 0..table.rows() {
        let record: Vec<String> = table
            .columns
            .iter()
            .map(|(_, c)| match c {
                RawColumn::Numeric(v) => v[row].map_or("?".into(), |x| format!("{x:.6}")),
                RawColumn::Categorical(v) => v[row].clone().unwrap_or_else(|| "?".into()),
            })
            .collect();
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_columns_and_binary_label() {
        let text = "a,b,c,y\n1,2,3,yes\n4,5,6,no\n7,8,9,yes\n";
        let d = encode_and_impute(&read_table(text.as_bytes()).unwrap(), "y").unwrap();
        assert_eq!((d.width(), d.class_count()), (3, 2));
    }

    #[test]
    fn categorical_column_expands() {
        let text = "color,v,y\nred,1,0\ngreen,2,1\nblue,3,0\n";
        let d = encode_and_impute(&read_table(text.as_bytes()).unwrap(), "y").unwrap();
        assert_eq!(d.width(), 4);
    }

    #[test]
    fn question_mark_is_missing() {
        let text = "v,w,y\n?,1,0\n2,,1\n";
        let d = encode_and_impute(&read_table(text.as_bytes()).unwrap(), "y").unwrap();
        assert_eq!(d.features()[[0, 0]], 0.0);
        assert_eq!(d.features()[[1, 1]], 0.0);
        assert_eq!(d.features()[[1, 0]], 2.0);
    }

    #[test]
    fn load_errors() {
        let text = "v,y\n1,0\n2,0\n";
        assert!(matches!(
            encode_and_impute(&read_table(text.as_bytes()).unwrap(), "y"),
            Err(DatasetError::TooFewClasses(1))
        ));
        assert!(matches!(
            encode_and_impute(&read_table(text.as_bytes()).unwrap(), "z"),
            Err(DatasetError::MissingLabelColumn(_))
        ));
        assert!(read_table("a,b\n1,2,3\n".as_bytes()).is_err());
        assert!(matches!(load_csv(Path::new("/nonexistent/x.csv"), "y"), Err(DataError::Io { .. })));
    }

    fn labelled(n: usize, classes: usize) -> Dataset {
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        let features = ndarray::Array2::from_shape_fn((n, 1), |(r, _)| r as f64);
        Dataset::new(features, labels, classes, vec!["x".into()]).unwrap()
    }

    #[test]
    fn outer_split_sizes() {
        let d = labelled(100, 2);
        let (s, train, test) = outer_split(&d, 0.9, 3).unwrap();
        assert_eq!((train.len(), test.len()), (90, 10));
        assert_eq!(outer_split(&d, 0.9, 3).unwrap().0, s);

        let d = labelled(10, 2);
        let (_, train, test) = outer_split(&d, 0.5, 1).unwrap();
        assert_eq!((train.len(), test.len()), (5, 5));
        for c in train.class_frequencies() {
            assert!((2..=3).contains(&c));
        }
    }

    #[test]
    fn synthetic_table_shape() {
        let t = synthetic_table(200, 0);
        let d = encode_and_impute(&t, "class").unwrap();
        assert_eq!((d.len(), d.width(), d.class_count()), (200, 5, 2));
        assert_eq!(d.class_frequencies(), vec![100, 100]);
        let missing: usize = t
            .columns
            .iter()
            .map(|(_, c)| match c {
                RawColumn::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
                RawColumn::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
            })
            .sum();
        assert_eq!(missing, 30);
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = encode_and_impute(&read_table(buf.as_slice()).unwrap(), "class").unwrap();
        assert_eq!(back.labels(), d.labels());
    }
}
