use loewner_lab::io::fmt17;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Resolves `name` inside the output directory.
pub fn artifact(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// One CSV cell: numbers in 17-digit scientific notation, text verbatim.
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&fmt17(*x)),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<Cell>>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}
