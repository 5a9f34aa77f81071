//! CSV serialization of nodal fields.

use std::path::Path;

use num_complex::Complex64;

use crate::error::Result;

pub fn field_to_csv(values: &[f64]) -> String {
    let mut s = String::from("node,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{v:.17e}\n"));
    }
    s
}

pub fn complex_field_to_csv(values: &[Complex64]) -> String {
    let mut s = String::from("node,re,im\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{i},{:.17e},{:.17e}\n", v.re, v.im));
    }
    s
}

pub fn write_field(path: &Path, values: &[f64]) -> Result<()> {
    std::fs::write(path, field_to_csv(values))?;
    Ok(())
}

/// Reads a `node,value` file back.
pub fn read_field(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| crate::Error::Invalid(e.to_string()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| crate::Error::Invalid(e.to_string()))?;
        out.push(rec[1].parse().map_err(|_| crate::Error::Invalid(format!("bad value {}", &rec[1])))?);
    }
    Ok(out)
}
