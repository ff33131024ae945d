use crate::ecpa::EvaluationPanel;
use crate::error::{Error, Result};
use std::io::Read;
use std::path::Path;

pub const DATE_COLUMN: &str = "date";
pub const REQUIRED_COLUMNS: [&str; 3] = ["proxy", "forecast1", "forecast2"];

/// Header plus column-major cells of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvColumns {
    pub headers: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl CsvColumns {
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.iter().all(|h| h.is_empty()) {
            return Err(Error::Data { row: 0, column: String::new(), message: "missing header row".into() });
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(Error::Data { row: 0, column: h.clone(), message: "duplicate column".into() });
            }
        }
        let mut cells = vec![Vec::new(); headers.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data {
                row: i + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
            for (c, v) in rec.iter().enumerate() {
                cells[c].push(v.to_string());
            }
        }
        Ok(Self { headers, cells })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    pub fn rows(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn raw(&self, name: &str) -> Result<&[String]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.cells[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Parses a column as finite reals; rows are numbered from 1 after the
    /// header.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        self.raw(name)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let bad = |message: String| Error::Data { row: i + 1, column: name.to_string(), message };
                let v: f64 = s.parse().map_err(|_| bad(format!("cannot parse '{s}' as a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite value '{s}'")));
                }
                Ok(v)
            })
            .collect()
    }
}

/// Builds a panel from `proxy`, `forecast1`, `forecast2`, an optional `date`
/// column and any further numeric columns (available as instruments).
pub fn panel_from_columns(cols: &CsvColumns) -> Result<EvaluationPanel> {
    let [p, f1, f2] = REQUIRED_COLUMNS.map(|c| cols.numeric(c));
    let mut panel = EvaluationPanel::new(p?, f1?, f2?)?;
    for h in &cols.headers {
        if REQUIRED_COLUMNS.contains(&h.as_str()) || h == DATE_COLUMN {
            continue;
        }
        panel = panel.with_extra(h.clone(), cols.numeric(h)?)?;
    }
    if let Ok(dates) = cols.raw(DATE_COLUMN) {
        panel = panel.with_timestamps(dates.to_vec())?;
    }
    Ok(panel)
}

pub fn read_panel<R: Read>(r: R) -> Result<EvaluationPanel> {
    panel_from_columns(&CsvColumns::from_reader(r)?)
}

pub fn read_panel_path(path: &Path) -> Result<EvaluationPanel> {
    panel_from_columns(&CsvColumns::from_path(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_required_and_extra_columns() {
        let text = "date,proxy,forecast1,forecast2,rv\n2020-01-01,1.0,0.5,1.5,3\n2020-01-02,2,1,2,4\n";
        let p = read_panel(text.as_bytes()).unwrap();
        assert_eq!(p.proxy(), &[1.0, 2.0]);
        assert_eq!(p.extra("rv").unwrap(), &[3.0, 4.0]);
        assert_eq!(p.timestamps().unwrap()[1], "2020-01-02");
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let text = "proxy,forecast1,forecast2\n1,2,3\n1,abc,3\n";
        match read_panel(text.as_bytes()) {
            Err(Error::Data { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "forecast1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nan_is_a_data_error() {
        let text = "proxy,forecast1,forecast2\n1,2,3\nNaN,1,3\n";
        assert!(matches!(read_panel(text.as_bytes()), Err(Error::Data { row: 2, .. })));
        let text = "proxy,forecast1,forecast2\n1,2,3\ninf,1,3\n";
        assert!(matches!(read_panel(text.as_bytes()), Err(Error::Data { row: 2, .. })));
    }

    #[test]
    fn missing_column() {
        let text = "proxy,forecast1\n1,2\n3,4\n";
        match read_panel(text.as_bytes()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "forecast2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "proxy,forecast1,forecast2\n1,2,3\n1,2\n";
        assert!(matches!(read_panel(text.as_bytes()), Err(Error::Data { row: 2, .. })));
    }
}
