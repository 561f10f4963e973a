use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rows of numeric observations with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::DuplicateVariable(c.clone()));
            }
        }
        if let Some(r) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(Error::ShapeMismatch(format!(
                "row {r} has {} values for {} columns",
                rows[r].len(),
                columns.len()
            )));
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `n × k` matrix of the named columns, in the given order.
    pub fn matrix(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let idx = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.rows.len(), idx.len(), |r, c| self.rows[r][idx[c]]))
    }

    /// First `n` rows (all of them if fewer).
    pub fn head(&self, n: usize) -> SampleSet {
        SampleSet { columns: self.columns.clone(), rows: self.rows[..n.min(self.rows.len())].to_vec() }
    }

    pub fn select(&self, names: &[&str]) -> Result<SampleSet> {
        let idx = names.iter().map(|n| self.column_index(n)).collect::<Result<Vec<_>>>()?;
        Ok(SampleSet {
            columns: names.iter().map(|s| s.to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let columns: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidTable(format!("row {}: `{field}` is not a number", line + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(columns, rows)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = SampleSet::new(vec!["a".into(), "y".into()], vec![vec![1.0, -0.5], vec![0.0, 2.25]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "a,y\n1,-0.5\n0,2.25\n");
        assert_eq!(SampleSet::read_csv(buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn rejects_ragged_and_non_numeric() {
        assert!(SampleSet::new(vec!["a".into()], vec![vec![1.0, 2.0]]).is_err());
        assert!(SampleSet::read_csv("a,b\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn select_and_head() {
        let s = SampleSet::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
        )
        .unwrap();
        assert_eq!(s.select(&["b"]).unwrap().rows(), &[vec![2.0], vec![4.0], vec![6.0]]);
        assert_eq!(s.head(2).len(), 2);
        assert!(s.column("c").is_err());
    }
}
