//! Artifact writers. Numbers are written with 17 significant digits so
//! reruns are byte-identical.

use crate::run::{Artifacts, Cell, Table};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_csv(t: &Table) -> String {
    let mut s = t.header.join(",");
    s.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => format_num(*v),
                Cell::Text(x) => x.clone(),
            })
            .collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn write_artifacts(dir: &Path, a: &Artifacts) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, table) in [("trajectory.csv", &a.trajectory), ("sequence.csv", &a.sequence)] {
        if let Some(t) = table {
            std::fs::write(dir.join(name), render_csv(t))?;
            written.push(name.to_string());
        }
    }
    let mut json = serde_json::to_string_pretty(&a.result).map_err(io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("result.json"), json)?;
    written.push("result.json".into());
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(format_num(0.1), "1.0000000000000001e-1");
        assert_eq!(format_num(1.0), "1.0000000000000000e0");
        assert_eq!(format_num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = Table {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![Cell::Text("0".into()), Cell::Num(2.5)]],
        };
        assert_eq!(render_csv(&t), "a,b\n0,2.5000000000000000e0\n");
    }
}
