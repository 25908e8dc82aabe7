use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

/// 17 significant digits, enough to read back the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV text with `#` comment lines before the column header.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(comments: &[String], columns: &[String]) -> Self {
        let mut text = String::new();
        for c in comments {
            let _ = writeln!(text, "# {c}");
        }
        let _ = writeln!(text, "{}", columns.join(","));
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn comment(&mut self, c: &str) {
        let _ = writeln!(self.text, "# {c}");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
