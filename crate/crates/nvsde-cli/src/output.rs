//! CSV emission: comma separators, header row, LF line endings, floats at 17
//! significant digits so files round-trip bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// A float with 17 significant digits in scientific notation.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal CSV writer; fields containing commas or quotes are quoted.
pub struct CsvFile {
    out: BufWriter<File>,
}

impl CsvFile {
    pub fn create(path: &Path, header: &[&str]) -> std::io::Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut csv = CsvFile {
            out: BufWriter::new(File::create(path)?),
        };
        csv.row_str(header)?;
        Ok(csv)
    }

    fn quote(field: &str) -> String {
        if field.contains(',') || field.contains('"') || field.contains('\n') {
            format!("\"{}\"", field.replace('"', "\"\""))
        } else {
            field.to_string()
        }
    }

    pub fn row_str(&mut self, fields: &[&str]) -> std::io::Result<()> {
        let line = fields
            .iter()
            .map(|f| Self::quote(f))
            .collect::<Vec<_>>()
            .join(",");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        let refs: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
        self.row_str(&refs)
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [std::f64::consts::PI, 1.0, -2.5e-300, 0.1 + 0.2] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn comma_fields_are_quoted() {
        assert_eq!(CsvFile::quote("16,32"), "\"16,32\"");
        assert_eq!(CsvFile::quote("plain"), "plain");
    }
}
