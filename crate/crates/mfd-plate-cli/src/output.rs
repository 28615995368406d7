//! CSV and Markdown table emission.
//!
//! Both emissions carry the same values; CSV keeps six significant digits
//! for machine use, Markdown four to five for reading. CSV fields are quoted
//! per the usual rules (quotes doubled, fields with separators wrapped).

use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub enum Field {
    Text(String),
    Number(f64),
    Int(i64),
    Empty,
}

impl Field {
    pub fn text(s: impl Into<String>) -> Field {
        Field::Text(s.into())
    }

    fn csv(&self) -> String {
        match self {
            Field::Text(s) => csv_quote(s),
            Field::Number(v) => format!("{v:.6e}"),
            Field::Int(v) => v.to_string(),
            Field::Empty => String::new(),
        }
    }

    fn markdown(&self) -> String {
        match self {
            Field::Text(s) => s.clone(),
            Field::Number(v) => format!("{v:.4e}"),
            Field::Int(v) => v.to_string(),
            Field::Empty => "--".to_string(),
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Table {
        Table {
            title: title.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "{}",
            self.columns
                .iter()
                .map(|c| csv_quote(c))
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "{}",
                row.iter().map(|f| f.csv()).collect::<Vec<_>>().join(",")
            )?;
        }
        Ok(())
    }

    pub fn write_markdown<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "### {}\n", self.title)?;
        writeln!(out, "| {} |", self.columns.join(" | "))?;
        writeln!(
            out,
            "|{}|",
            self.columns.iter().map(|_| "---").collect::<Vec<_>>().join("|")
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "| {} |",
                row.iter().map(|f| f.markdown()).collect::<Vec<_>>().join(" | ")
            )?;
        }
        writeln!(out)?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.md` next to each other.
    pub fn write_files(&self, stem: &Path) -> std::io::Result<()> {
        let mut csv = std::fs::File::create(stem.with_extension("csv"))?;
        self.write_csv(&mut csv)?;
        let mut md = std::fs::File::create(stem.with_extension("md"))?;
        self.write_markdown(&mut md)?;
        Ok(())
    }

    pub fn print_markdown(&self) {
        let mut buf = Vec::new();
        self.write_markdown(&mut buf).unwrap();
        print!("{}", String::from_utf8(buf).unwrap());
    }
}
