//! CSV emission shared by every curve type. Numbers are written in shortest
//! round-trip scientific form, so equal inputs always produce equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

pub fn csv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let s = csv(&["a", "b"], vec![vec![1.0, 2.5e-13], vec![0.0, f64::NAN]]);
        assert_eq!(s, "a,b\n1e0,2.5e-13\n0e0,\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [455094.4713229305, 3.045840609048001e-13, -1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
