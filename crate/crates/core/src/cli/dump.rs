//! Field dumps and plot data.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::PhysicalFields;
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};

pub const FIELD_NAMES: [&str; 6] = ["u", "v", "kappa", "phi_abs", "a12", "b12"];

/// Fields written per node, in [`FIELD_NAMES`] order.
pub struct FieldSet<'a> {
    pub grid: Grid,
    pub u: &'a ScalarField,
    pub v: &'a ScalarField,
    pub physical: &'a PhysicalFields,
}

impl FieldSet<'_> {
    fn columns(&self) -> [&[f64]; 6] {
        [
            self.u.values(),
            self.v.values(),
            self.physical.kappa.values(),
            self.physical.phi_abs.values(),
            self.physical.a12.values(),
            self.physical.b12.values(),
        ]
    }
}

/// Metadata written next to a binary dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySidecar {
    pub grid: Grid,
    pub nodes: usize,
    pub order: String,
    pub layout: String,
    pub dtype: String,
    pub fields: Vec<String>,
    pub config_hash: String,
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

/// CSV with header `x,y,u,v,kappa,phi_abs,a12,b12`, one row per node in storage order.
pub fn dump_fields_csv(fields: &FieldSet<'_>, path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x,y,{}", FIELD_NAMES.join(","))?;
    let cols = fields.columns();
    for k in 0..fields.grid.len() {
        let (x, y) = fields.grid.node(k);
        write!(w, "{x},{y}")?;
        for c in &cols {
            write!(w, ",{}", c[k])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Little-endian doubles, one row-major block per field, plus `<path>.json`.
pub fn dump_fields_binary(fields: &FieldSet<'_>, path: &Path, config_hash: &str) -> Result<()> {
    create_parent(path)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    for c in fields.columns() {
        for v in c {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let sidecar = BinarySidecar {
        grid: fields.grid,
        nodes: fields.grid.len(),
        order: "row-major".into(),
        layout: "one contiguous block per field".into(),
        dtype: "f64 little-endian".into(),
        fields: FIELD_NAMES.iter().map(|s| s.to_string()).collect(),
        config_hash: config_hash.into(),
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    name.into()
}

/// `(name, values)` pairs in file order.
pub type NamedFields = Vec<(String, Vec<f64>)>;

/// Reads a binary dump back.
pub fn read_fields_binary(path: &Path) -> Result<(BinarySidecar, NamedFields)> {
    let sidecar: BinarySidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    let expected = 8 * sidecar.nodes * sidecar.fields.len();
    if bytes.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight bytes")))
        .collect();
    let out = sidecar
        .fields
        .iter()
        .zip(values.chunks(sidecar.nodes))
        .map(|(n, v)| (n.clone(), v.to_vec()))
        .collect();
    Ok((sidecar, out))
}

/// `r,mean_u2v2,mean_grad2` rows.
pub fn write_radial_profile(profile: &[[f64; 3]], path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "r,mean_u2v2,mean_grad2")?;
    for p in profile {
        writeln!(w, "{},{},{}", p[0], p[1], p[2])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `header` and `rows` as CSV.
pub fn write_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}
