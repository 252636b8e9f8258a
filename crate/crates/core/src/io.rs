//! Files: CSV matrices, run manifests, learned spectra, gnuplot scripts.
//!
//! Matrices are written one row per line with `{:.16e}` entries, which
//! round-trips every `f64` exactly. Images and sinograms are stored as
//! columns of an `m × N` matrix; galleries store one image per file as an
//! `n_pix × n_pix` (or `n_angles × n_offsets`) grid for plotting.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learner::LearnedSpectrum;
use crate::linalg::{GramSchmidtResult, Mat, Metric};

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (lineno, record) in r.records().enumerate() {
        let row = record?
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{}:{}: bad number {field:?}",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    Mat::from_rows(&rows)
}

/// A vector as a single column.
pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    write_matrix_csv(path, &Mat::from_cols(&[v.to_vec()])?)
}

/// All entries of a CSV matrix in row-major order.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    Ok(read_matrix_csv(path)?.as_slice().to_vec())
}

/// A flat image or sinogram reshaped to `rows × (len/rows)`.
pub fn write_grid_csv(path: &Path, v: &[f64], rows: usize) -> Result<()> {
    if rows == 0 || !v.len().is_multiple_of(rows) {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape {} values into {rows} rows",
            v.len()
        )));
    }
    write_matrix_csv(
        path,
        &Mat::from_row_major(rows, v.len() / rows, v.to_vec())?,
    )
}

/// Serializable records with a header row.
pub fn write_table_csv<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// SHA-256 over git-style blob framing (`"blob <len>\0" ++ bytes`), hex.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Echo of the full configuration.
    pub config: serde_json::Value,
    /// Input name → content hash; the configuration is hashed as `config`.
    pub inputs: Vec<(String, String)>,
    /// Hash over all entries of `inputs`.
    pub input_hash: String,
    /// Output files relative to the run directory, sorted.
    pub outputs: Vec<String>,
    pub assumptions: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl serde::Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let mut m = Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: Vec::new(),
            input_hash: String::new(),
            outputs: Vec::new(),
            assumptions: Vec::new(),
        };
        let bytes = serde_json::to_vec(&m.config)?;
        m.add_input("config", &bytes);
        Ok(m)
    }

    pub fn add_input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.push((name.to_string(), content_hash(bytes)));
        let joined: String = self
            .inputs
            .iter()
            .map(|(n, h)| format!("{n}={h}\n"))
            .collect();
        self.input_hash = content_hash(joined.as_bytes());
    }

    pub fn add_input_file(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.add_input(name, &bytes);
        Ok(())
    }

    /// Lists the files under `dir` and writes `manifest.json` there.
    pub fn write(mut self, dir: &Path) -> Result<PathBuf> {
        self.outputs = list_files(dir)?
            .into_iter()
            .filter(|p| p != "manifest.json")
            .collect();
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}

fn list_files(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if let Ok(rel) = path.strip_prefix(dir) {
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// One heat-map panel per gallery file, written as `plot.gp` in `dir`.
pub fn write_gnuplot_script(dir: &Path, title: &str, files: &[String]) -> Result<()> {
    let mut s = String::new();
    s.push_str("# gnuplot plot.gp  (writes plot.png)\n");
    s.push_str("set terminal pngcairo size 1600,1200\nset output 'plot.png'\n");
    s.push_str("set datafile separator ','\nset view map\nunset key\nset size ratio -1\n");
    s.push_str("set palette defined (0 'blue', 1 'white', 2 'red')\n");
    let cols = (files.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = files.len().div_ceil(cols).max(1);
    s.push_str(&format!(
        "set multiplot layout {rows},{cols} title '{title}'\n"
    ));
    for f in files {
        s.push_str(&format!(
            "set title '{f}' noenhanced\nplot '{f}' matrix with image\n"
        ));
    }
    s.push_str("unset multiplot\n");
    fs::write(dir.join("plot.gp"), s)?;
    Ok(())
}

/// Saves everything [`load_spectrum`] needs.
pub fn save_spectrum(dir: &Path, s: &LearnedSpectrum) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("psis.csv"), &s.psis)?;
    write_vector_csv(&dir.join("lambdas.csv"), &s.lambdas)?;
    write_matrix_csv(&dir.join("coeffs_c.csv"), &s.coeffs_c)?;
    write_matrix_csv(&dir.join("ortho_images.csv"), &s.ortho_images.basis)?;
    write_matrix_csv(&dir.join("gs_coeffs.csv"), &s.ortho_images.coeffs)?;
    write_vector_csv(
        &dir.join("residual_norms.csv"),
        &s.ortho_images.residual_norms,
    )?;
    write_matrix_csv(&dir.join("ortho_data.csv"), &s.ortho_data)?;
    for (name, metric) in [
        ("image_weights.csv", &s.image_metric),
        ("data_weights.csv", &s.data_metric),
    ] {
        let path = dir.join(name);
        match metric {
            Metric::Diagonal(w) => write_vector_csv(&path, w)?,
            Metric::Euclidean if path.exists() => fs::remove_file(&path)?,
            Metric::Euclidean => {}
        }
    }
    Ok(())
}

/// Reads a spectrum written by [`save_spectrum`]; a missing weights file
/// means the Euclidean metric.
pub fn load_spectrum(dir: &Path) -> Result<LearnedSpectrum> {
    let metric = |name: &str| -> Result<Metric> {
        let path = dir.join(name);
        if path.exists() {
            Metric::diagonal(read_vector_csv(&path)?)
        } else {
            Ok(Metric::Euclidean)
        }
    };
    let lambdas = read_vector_csv(&dir.join("lambdas.csv"))?;
    let psis = read_matrix_csv(&dir.join("psis.csv"))?;
    let coeffs_c = read_matrix_csv(&dir.join("coeffs_c.csv"))?;
    let basis = read_matrix_csv(&dir.join("ortho_images.csv"))?;
    let ortho_data = read_matrix_csv(&dir.join("ortho_data.csv"))?;
    if psis.cols() != lambdas.len()
        || coeffs_c.cols() != lambdas.len()
        || coeffs_c.rows() != basis.cols()
    {
        return Err(Error::DimensionMismatch(format!(
            "{}: inconsistent spectrum files",
            dir.display()
        )));
    }
    let spectrum = LearnedSpectrum {
        gammas_learned: lambdas.iter().map(|l| l.sqrt()).collect(),
        lambdas,
        psis,
        coeffs_c,
        ortho_images: GramSchmidtResult {
            basis,
            coeffs: read_matrix_csv(&dir.join("gs_coeffs.csv"))?,
            residual_norms: read_vector_csv(&dir.join("residual_norms.csv"))?,
        },
        ortho_data,
        image_metric: metric("image_weights.csv")?,
        data_metric: metric("data_weights.csv")?,
    };
    spectrum
        .image_metric
        .check_dim(spectrum.ortho_images.basis.rows())?;
    spectrum.data_metric.check_dim(spectrum.psis.rows())?;
    Ok(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m =
            Mat::from_rows(&[vec![0.1, -1.0 / 3.0], vec![1e-300, std::f64::consts::PI]]).unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), m);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("1.0000000000000001e-1,"));
    }

    #[test]
    fn bad_csv_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        fs::write(&path, "1,2\n3,x\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(Error::Parse(_))));
        fs::write(&path, "").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn hash_uses_blob_framing() {
        // sha256 of "blob 0\0"
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_ne!(content_hash(b"a"), content_hash(b"b"));
    }

    #[test]
    fn manifest_lists_outputs() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/b.csv"), "1").unwrap();
        fs::write(dir.path().join("a.csv"), "1").unwrap();
        let mut m = Manifest::new("test", &serde_json::json!({"seed": 1})).unwrap();
        let first = m.input_hash.clone();
        m.add_input("data", b"xyz");
        assert_ne!(first, m.input_hash);
        let path = m.write(dir.path()).unwrap();
        let back: Manifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(
            back.outputs,
            vec!["a.csv".to_string(), "sub/b.csv".to_string()]
        );
    }
}
