//! Fixed-name output files. Floats use Rust's shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use qwalk::linalg::RMatrix;

use crate::Failure;

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn distribution_csv(p: &[f64]) -> String {
    let mut s = String::from("node,probability\n");
    for (v, x) in p.iter().enumerate() {
        writeln!(s, "{v},{x}").expect("writing to a String");
    }
    s
}

/// Unordered pairs `i ≤ j`; each row carries the full mass of its pair.
pub fn pairs_csv(pr: &RMatrix) -> String {
    let mut s = String::from("node_i,node_j,probability\n");
    for i in 0..pr.rows() {
        for j in i..pr.cols() {
            writeln!(s, "{i},{j},{}", pr[(i, j)]).expect("writing to a String");
        }
    }
    s
}

pub fn write_distribution(dir: &Path, p: &[f64]) -> Result<(), Failure> {
    ensure_dir(dir)?;
    write_text(&dir.join("dist.csv"), &distribution_csv(p))
}

pub fn write_pairs(dir: &Path, pr: &RMatrix) -> Result<(), Failure> {
    ensure_dir(dir)?;
    write_text(&dir.join("pairs.csv"), &pairs_csv(pr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layouts() {
        assert_eq!(distribution_csv(&[0.25, 0.75]), "node,probability\n0,0.25\n1,0.75\n");
        let pr = RMatrix::from_rows(&[vec![0.5, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_eq!(pairs_csv(&pr), "node_i,node_j,probability\n0,0,0.5\n0,1,0.25\n1,1,0.25\n");
    }
}
