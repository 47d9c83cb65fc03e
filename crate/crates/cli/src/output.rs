//! File writers: CSV rows, pretty JSON and 16-bit ASCII PGM.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mcmullen_core::density::Raster;
use mcmullen_core::exact::{decimal_string, fraction_string, to_f64};
use mcmullen_core::Rational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const PGM_MAXVAL: u32 = 65535;

/// Output directory; every file written is echoed to stdout.
pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Comma-separated table with a header row and LF line ends.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: impl IntoIterator<Item = S>) {
        let fields: Vec<String> = fields.into_iter().map(|f| f.as_ref().to_string()).collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// `{"fraction": "p/q", "decimal": "..."}`.
pub fn exact(r: &Rational) -> Value {
    json!({ "fraction": fraction_string(r), "decimal": decimal_string(to_f64(r)) })
}

/// Maps `[lo, hi]` linearly onto `0..=PGM_MAXVAL`; a flat range maps to 0.
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u32 {
    if hi <= lo {
        return 0;
    }
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * PGM_MAXVAL as f64).round() as u32
}

/// P2 image with row 0 at the top, lines kept under 70 characters.
pub fn pgm(raster: &Raster, lo: f64, hi: f64) -> String {
    let m = raster.resolution;
    let mut out = format!("P2\n# density raster, {m} x {m}\n{m} {m}\n{PGM_MAXVAL}\n");
    for row in 0..m {
        let mut line = String::new();
        for col in 0..m {
            let field = gray_level(raster.get(row, col), lo, hi).to_string();
            if !line.is_empty() && line.len() + field.len() + 1 > 70 {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&field);
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

/// `row,col,x,y,value` with `(x, y)` the cell center.
pub fn raster_csv(raster: &Raster) -> String {
    let m = raster.resolution;
    let mut csv = Csv::new(&["row", "col", "x", "y", "value"]);
    for row in 0..m {
        let y = (m - row) as f64 - 0.5;
        for col in 0..m {
            let x = col as f64 + 0.5;
            csv.row([
                row.to_string(),
                col.to_string(),
                decimal_string(x / m as f64),
                decimal_string(y / m as f64),
                decimal_string(raster.get(row, col)),
            ]);
        }
    }
    csv.finish()
}
