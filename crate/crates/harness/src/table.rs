//! CSV tables with fixed headers and 17 significant digits per float.

use std::fs;
use std::path::Path;

use crate::error::Result;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::I(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    /// Written as a leading `# schema` comment line, e.g. `thm11-sweep/1`.
    pub schema: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            schema: String::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_schema(mut self, schema: impl Into<String>) -> Self {
        self.schema = schema.into();
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.iter().map(Cell::render).collect());
    }

    pub fn append(&mut self, other: Table) {
        if self.header.is_empty() {
            self.header = other.header;
            self.schema = other.schema;
        }
        self.rows.extend(other.rows);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column `name` parsed as floats.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        if !self.schema.is_empty() {
            buf.extend_from_slice(format!("# {}\n", self.schema).as_bytes());
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    /// Writes through a temporary file and a rename, so a killed run never
    /// leaves a truncated table behind.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("csv.tmp");
        fs::write(&tmp, self.to_bytes()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path)?;
        let schema = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .unwrap_or("")
            .to_string();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Table { schema, header, rows })
    }
}
