//! Curve CSV files (`tau, x0, x1, ...`) with a JSON metadata sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Curve, CurveMeta};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSidecar {
    pub manifold: Manifold,
    pub closed: bool,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(flatten)]
    pub meta: CurveMeta,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes `<path>` and the sidecar `<path stem>.meta.json`.
pub fn write_curve_csv(curve: &Curve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let dim = curve.manifold().ambient_dim();
    let mut header = vec!["tau".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (i, p) in curve.samples().iter().enumerate() {
        let mut row = vec![curve.tau(i).to_string()];
        row.extend(p.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let sidecar = CurveSidecar {
        manifold: curve.manifold().clone(),
        closed: curve.is_closed(),
        n: curve.grid(),
        meta: curve.meta().clone(),
    };
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Reads a curve written by [`write_curve_csv`]. The result has no oracle.
pub fn read_curve_csv(path: &Path) -> Result<Curve> {
    let sidecar: CurveSidecar =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let dim = sidecar.manifold.ambient_dim();
    if r.headers()?.len() != dim + 1 {
        return Err(Error::InvalidCurve(format!(
            "expected {} columns, found {}",
            dim + 1,
            r.headers()?.len()
        )));
    }
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidCurve(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        samples.push(Vector::from_vec(vals));
    }
    if samples.len() != sidecar.n + 1 {
        return Err(Error::InvalidCurve(format!(
            "sidecar declares N={} but file has {} rows",
            sidecar.n,
            samples.len()
        )));
    }
    Curve::from_samples(&sidecar.manifold, samples, sidecar.closed, sidecar.meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathspace::sphere_wobble;

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join(format!("levy-curve-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let s = Manifold::sphere(1.0).unwrap();
        let c = sphere_wobble(&s, 1.0, 0.1, 3, 64).unwrap();
        let path = dir.join("wobble.csv");
        write_curve_csv(&c, &path).unwrap();
        let back = read_curve_csv(&path).unwrap();
        assert_eq!(back.samples(), c.samples());
        assert_eq!(back.meta(), c.meta());
        assert!(back.is_closed() && !back.has_oracle());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
