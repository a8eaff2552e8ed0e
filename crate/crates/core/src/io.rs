//! On-disk layout of reservoirs, simple cycle reservoirs and reports.
//!
//! A reservoir directory holds `manifest.txt` (`key = value` lines),
//! `coupling.csv`, `input.csv` and `readout.csv`. A simple cycle reservoir
//! directory holds `manifest.txt`, `signs.bin` (row-major, LSB first, bit set
//! for +1), the mirror `signs.csv` and `readout.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::binarize::SCRSystem;
use crate::error::{Error, Result};
use crate::linalg::csv::{read_matrix_csv, write_matrix_csv};
use crate::linalg::Matrix;
use crate::pipeline::ApproximationReport;
use crate::reservoir::{LinearReadout, LinearReservoir};

pub const SHIFT_CONVENTION: &str = "x_next[t] = lambda * x[(t + 1) mod n_scr] + V[t, :] u";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Ingestion {
                path: path.to_path_buf(),
                message: format!("line {}: expected `key = value`", i + 1),
            })?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| Error::Ingestion {
            path: path.to_path_buf(),
            message: format!("missing key `{key}`"),
        })?;
        raw.parse().map_err(|_| Error::Ingestion {
            path: path.to_path_buf(),
            message: format!("bad value `{raw}` for `{key}`"),
        })
    }
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, path: &Path) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Ingestion {
            path: path.to_path_buf(),
            message: format!("expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

pub fn write_reservoir(r: &LinearReservoir, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut man = Manifest::default();
    man.set("state_dim", r.state_dim());
    man.set("input_dim", r.input_dim());
    man.set("output_dim", r.output_dim());
    man.set("lambda", format!("{:?}", r.lambda()));
    man.set("input_bound", format!("{:?}", r.input_bound()));
    man.write(&dir.join("manifest.txt"))?;
    write_matrix_csv(&dir.join("coupling.csv"), &r.coupling().to_dense())?;
    write_matrix_csv(&dir.join("input.csv"), r.input_matrix())?;
    write_matrix_csv(&dir.join("readout.csv"), r.readout().matrix())?;
    Ok(())
}

/// Reads a reservoir directory. `lambda` in the manifest, when present, must
/// match the coupling's norm.
pub fn read_reservoir(dir: &Path) -> Result<LinearReservoir> {
    let man_path = dir.join("manifest.txt");
    let man = Manifest::read(&man_path)?;
    let bound: f64 = man.parse_value("input_bound", &man_path)?;
    let w = read_matrix_csv(&dir.join("coupling.csv"))?;
    let v = read_matrix_csv(&dir.join("input.csv"))?;
    let a = read_matrix_csv(&dir.join("readout.csv"))?;
    for (key, value) in [("state_dim", w.nrows()), ("input_dim", v.ncols()), ("output_dim", a.nrows())] {
        if man.get(key).is_some() && man.parse_value::<usize>(key, &man_path)? != value {
            return Err(Error::Ingestion {
                path: man_path,
                message: format!("`{key}` disagrees with the matrices ({value})"),
            });
        }
    }
    let r = LinearReservoir::new(w, v, LinearReadout::new(a)?, bound)?;
    if man.get("lambda").is_some() {
        let lambda: f64 = man.parse_value("lambda", &man_path)?;
        if (lambda - r.lambda()).abs() > 1e-9 {
            return Err(Error::Ingestion {
                path: man_path,
                message: format!("lambda {lambda} disagrees with the coupling norm {}", r.lambda()),
            });
        }
    }
    Ok(r)
}

/// Packs `±1` signs LSB first, bit set for `+1`.
pub fn pack_signs(signs: &[i8]) -> Vec<u8> {
    let mut out = vec![0u8; signs.len().div_ceil(8)];
    for (i, s) in signs.iter().enumerate() {
        if *s > 0 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_signs(bytes: &[u8], len: usize) -> Result<Vec<i8>> {
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::invalid(format!(
            "sign bitmap has {} bytes, {len} signs need {}",
            bytes.len(),
            len.div_ceil(8)
        )));
    }
    Ok((0..len)
        .map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 })
        .collect())
}

pub fn write_scr(scr: &SCRSystem, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut man = Manifest::default();
    man.set("n_scr", scr.n_scr());
    man.set("n_c", scr.n_c());
    man.set("k", scr.k());
    man.set("n_avg", scr.n_avg());
    man.set("input_dim", scr.input_dim());
    man.set("output_dim", scr.readout().output_dim());
    man.set("lambda", format!("{:?}", scr.lambda()));
    man.set("input_bound", format!("{:?}", scr.input_bound()));
    man.set("entry_error", format!("{:?}", scr.entry_error()));
    man.set("operator_error", format!("{:?}", scr.operator_error()));
    man.set("shift_convention", SHIFT_CONVENTION);
    man.write(&dir.join("manifest.txt"))?;
    fs::write(dir.join("signs.bin"), pack_signs(scr.signs()))?;

    let mut csv = String::with_capacity(scr.signs().len() * 3);
    for row in scr.signs().chunks(scr.input_dim()) {
        let line: Vec<&str> = row.iter().map(|s| if *s > 0 { "1" } else { "-1" }).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    fs::write(dir.join("signs.csv"), csv)?;
    write_matrix_csv(&dir.join("readout.csv"), scr.readout().matrix())?;
    Ok(())
}

/// Reads a simple cycle reservoir from `signs.bin` and checks it against the
/// CSV mirror.
pub fn read_scr(dir: &Path) -> Result<SCRSystem> {
    let man_path = dir.join("manifest.txt");
    let man = Manifest::read(&man_path)?;
    let n_scr: usize = man.parse_value("n_scr", &man_path)?;
    let m: usize = man.parse_value("input_dim", &man_path)?;
    let d: usize = man.parse_value("output_dim", &man_path)?;
    let bin_path = dir.join("signs.bin");
    let bytes = fs::read(&bin_path).map_err(|e| Error::Ingestion {
        path: bin_path.clone(),
        message: e.to_string(),
    })?;
    let len = n_scr.checked_mul(m).ok_or_else(|| Error::Ingestion {
        path: man_path.clone(),
        message: "dimensions overflow".into(),
    })?;
    let signs = unpack_signs(&bytes, len).map_err(|e| Error::Ingestion {
        path: bin_path,
        message: e.to_string(),
    })?;
    let csv_path = dir.join("signs.csv");
    let mirror = read_matrix_csv(&csv_path)?;
    check_shape(&mirror, n_scr, m, &csv_path)?;
    for t in 0..n_scr {
        for c in 0..m {
            if mirror[(t, c)] != f64::from(signs[t * m + c]) {
                return Err(Error::Ingestion {
                    path: csv_path,
                    message: format!("row {} disagrees with signs.bin", t + 1),
                });
            }
        }
    }
    let readout_path = dir.join("readout.csv");
    let a = read_matrix_csv(&readout_path)?;
    check_shape(&a, d, n_scr, &readout_path)?;
    SCRSystem::from_parts(
        man.parse_value("n_c", &man_path)?,
        man.parse_value("lambda", &man_path)?,
        man.parse_value("input_bound", &man_path)?,
        m,
        signs,
        LinearReadout::composed_from(a),
        (man.parse_value("k", &man_path)?, man.parse_value("n_avg", &man_path)?),
        (
            man.parse_value("entry_error", &man_path)?,
            man.parse_value("operator_error", &man_path)?,
        ),
    )
}

/// Writes `report.txt` (key-value) and `report.csv` (header and one row).
pub fn write_report(report: &ApproximationReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let txt = dir.join("report.txt");
    let csv = dir.join("report.csv");
    fs::write(&txt, report.to_key_value())?;
    fs::write(
        &csv,
        format!("{}\n{}\n", ApproximationReport::csv_header(), report.csv_row()),
    )?;
    Ok((txt, csv))
}
