//! `oplearn` command line: every pipeline stage as a subcommand plus the
//! end-to-end experiments.
//!
//! Exit codes: 0 on success, 2 on invalid input or configuration, 3 when
//! the numerics fail (dependent inputs, degenerate spectra, no
//! convergence), 1 for I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oplearn::decoder::decode;
use oplearn::experiments::{self, DecodeTest, ExperimentConfig};
use oplearn::io::{self, Manifest};
use oplearn::learner::{classify, encode, EncodeMode, TrainingSet};
use oplearn::linalg::{Mat, Metric};
use oplearn::radon::RadonGeometry;
use oplearn::spectra::build_spectrum;
use oplearn::{phantoms, Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "oplearn",
    version,
    about = "Learn the SVD of a linear operator from training pairs"
)]
struct Cli {
    /// Geometry file with key=value lines (n_pix, n_angles, n_offsets, t_samples).
    #[arg(long, global = true)]
    geom: Option<PathBuf>,
    /// Phantom seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the smoothed Gram-Schmidt network with this ε.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Decode with the leading K modes only.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON experiment configuration; its fields override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discretize the analytical singular system (u, v, γ) for k ≤ k_max.
    SpectrumBuild {
        #[arg(long, default_value_t = 12)]
        k_max: usize,
    },
    /// Learn a spectrum from image and data matrices (one pair per column).
    /// With --geom the geometry's quadrature metrics are used, otherwise
    /// plain dot products.
    Encode {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Assign each learned ψ to an analytical Radon eigenspace.
    Classify {
        /// Directory written by `encode`.
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long, default_value_t = 12)]
        k_max: usize,
    },
    /// Minimum-norm solution for data y.
    Decode {
        #[arg(long)]
        spectrum: PathBuf,
        /// Data vector (all entries of the CSV in row-major order).
        #[arg(long)]
        data: PathBuf,
    },
    /// Random ellipse phantoms.
    PhantomGen {
        #[arg(long)]
        n_images: Option<usize>,
        #[arg(long)]
        ellipses: Option<usize>,
    },
    /// Learn from the analytical pairs and classify against E^1..E^13.
    RunExample1 {
        #[arg(long)]
        k_max: Option<usize>,
        /// Skip the 6×6 SVD self-check before the run.
        #[arg(long)]
        no_identity_check: bool,
    },
    /// Learn from phantoms and their sinograms and classify against E^1..E^8.
    RunExample2 {
        #[arg(long)]
        n_images: Option<usize>,
    },
    /// Decode a known image with the example 1 spectrum (1: linear, 2: nonlinear).
    RunDecodeTest {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        which: u8,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if e.is_io() {
        1
    } else {
        2
    }
}

/// Flags first, then the config file merged on top.
fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.geom {
        cfg.geometry = RadonGeometry::from_config_str(&fs::read_to_string(path)?)?;
    }
    if let Some(seed) = cli.seed {
        cfg.phantoms.seed = seed;
    }
    if let Some(eps) = cli.epsilon {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::Invalid(format!(
                "epsilon must be nonnegative, got {eps}"
            )));
        }
        cfg.mode = EncodeMode::Smoothed(eps);
    }
    cfg.top_k = cli.top_k.or(cfg.top_k);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        let overlay: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut base = serde_json::to_value(&cfg)?;
        merge(&mut base, overlay);
        cfg = serde_json::from_value(base)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    cfg.geometry.validate()?;
    cfg.phantoms.validate()?;
    Ok(cfg)
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (key, value) in o {
                match b.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::SpectrumBuild { k_max } => spectrum_build(out, &cfg, *k_max),
        Command::Encode { images, data } => encode_cmd(out, cli, &cfg, images, data),
        Command::Classify { spectrum, k_max } => classify_cmd(out, &cfg, spectrum, *k_max),
        Command::Decode { spectrum, data } => decode_cmd(out, &cfg, spectrum, data),
        Command::PhantomGen { n_images, ellipses } => {
            if let Some(n) = n_images {
                cfg.phantoms.n_images = *n;
            }
            if let Some(n) = ellipses {
                cfg.phantoms.ellipses_per_image = *n;
            }
            phantom_gen(out, &cfg)
        }
        Command::RunExample1 {
            k_max,
            no_identity_check,
        } => {
            if let Some(k) = k_max {
                cfg.k_max = *k;
            }
            cfg.identity_check &= !no_identity_check;
            if cfg.k_max < 12 {
                eprintln!(
                    "note: k_max = {} gives {} pairs",
                    cfg.k_max,
                    oplearn::spectra::index_count(cfg.k_max)
                );
            }
            let ex = experiments::run_example1(&cfg)?;
            experiments::write_example1(out, &cfg, &ex)?;
            for row in experiments::eigenvalue_clusters(&ex.learned, &ex.spectrum) {
                println!(
                    "psi_{:<2} E^{:<2} lambda {:.6} gamma^2 {:.6} rel.err {:.2e} score {:.2e}",
                    row.h,
                    ex.assignments[row.h - 1].label,
                    row.lambda,
                    row.gamma_sq,
                    row.relative_error,
                    ex.assignments[row.h - 1].score
                );
            }
            Ok(())
        }
        Command::RunExample2 { n_images } => {
            if let Some(n) = n_images {
                cfg.phantoms.n_images = *n;
            }
            let ex = experiments::run_example2(&cfg)?;
            experiments::write_example2(out, &cfg, &ex)?;
            for a in &ex.assignments {
                println!("psi_{:<2} E^{:<2} score {:.3e}", a.h + 1, a.label, a.score);
            }
            Ok(())
        }
        Command::RunDecodeTest { which } => {
            let ex = experiments::run_example1(&cfg)?;
            let outcome =
                experiments::run_decode_test(&ex, DecodeTest::from_number(*which)?, cfg.top_k)?;
            experiments::write_decode_test(out, &cfg, &outcome)?;
            println!(
                "test {which}: relative L2 error {:.6e}",
                outcome.relative_error
            );
            Ok(())
        }
    }
}

fn spectrum_build(out: &Path, cfg: &ExperimentConfig, k_max: usize) -> Result<()> {
    fs::create_dir_all(out)?;
    let s = build_spectrum(k_max, &cfg.geometry)?;
    io::write_matrix_csv(&out.join("v.csv"), &s.v_matrix())?;
    io::write_matrix_csv(&out.join("u.csv"), &s.u_matrix())?;
    #[derive(serde::Serialize)]
    struct Row {
        k: usize,
        l: usize,
        eigenspace: usize,
        gamma: f64,
        c: f64,
    }
    let rows: Vec<Row> = s
        .indices
        .iter()
        .enumerate()
        .map(|(p, i)| Row {
            k: i.k,
            l: i.l,
            eigenspace: i.eigenspace(),
            gamma: s.gammas[p],
            c: s.norm_consts[p],
        })
        .collect();
    io::write_table_csv(&out.join("indices.csv"), &rows)?;
    fs::write(out.join("geometry.txt"), cfg.geometry.to_config_string())?;
    Manifest::new("spectrum-build", &(cfg, k_max))?.write(out)?;
    println!(
        "{} singular functions in {} eigenspaces",
        s.indices.len(),
        s.eigenspaces.len()
    );
    Ok(())
}

fn encode_cmd(
    out: &Path,
    cli: &Cli,
    cfg: &ExperimentConfig,
    images: &Path,
    data: &Path,
) -> Result<()> {
    let x = io::read_matrix_csv(images)?;
    let y = io::read_matrix_csv(data)?;
    let (im, dm) = if cli.geom.is_some() {
        cfg.geometry.check_image(&vec![0.0; x.rows()])?;
        cfg.geometry.check_sinogram(&vec![0.0; y.rows()])?;
        (cfg.geometry.image_metric(), cfg.geometry.data_metric())
    } else {
        (Metric::Euclidean, Metric::Euclidean)
    };
    let learned = encode(&TrainingSet::with_metrics(x, y, im, dm)?, cfg.mode)?;
    io::save_spectrum(out, &learned)?;
    let mut manifest = Manifest::new("encode", cfg)?;
    manifest.add_input_file("images", images)?;
    manifest.add_input_file("data", data)?;
    manifest.write(out)?;
    for (l, g) in learned.gammas_learned.iter().enumerate() {
        println!("gamma_{} = {g:.9e}", l + 1);
    }
    Ok(())
}

fn classify_cmd(out: &Path, cfg: &ExperimentConfig, spectrum: &Path, k_max: usize) -> Result<()> {
    let learned = io::load_spectrum(spectrum)?;
    cfg.geometry
        .check_sinogram(&vec![0.0; learned.psis.rows()])?;
    let reference = build_spectrum(k_max, &cfg.geometry)?.reference();
    let assignments = classify(&learned, &reference)?;
    fs::create_dir_all(out)?;
    #[derive(serde::Serialize)]
    struct Row {
        h: usize,
        eigenspace: usize,
        score: f64,
        coefficients: String,
    }
    let rows: Vec<Row> = assignments
        .iter()
        .map(|a| Row {
            h: a.h + 1,
            eigenspace: a.label,
            score: a.score,
            coefficients: a
                .regression
                .coefficients
                .iter()
                .map(|c| format!("{c:.16e}"))
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect();
    io::write_table_csv(&out.join("classification.csv"), &rows)?;
    let mut manifest = Manifest::new("classify", &(cfg, k_max))?;
    manifest.add_input_file("psis", &spectrum.join("psis.csv"))?;
    manifest.write(out)?;
    for a in &assignments {
        println!("psi_{:<2} E^{:<2} score {:.3e}", a.h + 1, a.label, a.score);
    }
    Ok(())
}

fn decode_cmd(out: &Path, cfg: &ExperimentConfig, spectrum: &Path, data: &Path) -> Result<()> {
    let learned = io::load_spectrum(spectrum)?;
    let y = io::read_vector_csv(data)?;
    let r = decode(&y, &learned, cfg.top_k)?;
    fs::create_dir_all(out)?;
    io::write_vector_csv(&out.join("x_ls.csv"), &r.x_ls)?;
    io::write_vector_csv(&out.join("y_ls.csv"), &r.y_ls)?;
    io::write_vector_csv(&out.join("coefficients.csv"), &r.coefficients)?;
    let mut manifest = Manifest::new("decode", cfg)?;
    manifest.add_input_file("data", data)?;
    manifest.add_input_file("psis", &spectrum.join("psis.csv"))?;
    manifest.write(out)?;
    println!("decoded with {} modes", r.coefficients.len());
    Ok(())
}

fn phantom_gen(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let images = phantoms::generate(&cfg.phantoms, &cfg.geometry)?;
    fs::create_dir_all(out.join("images"))?;
    io::write_matrix_csv(&out.join("images.csv"), &Mat::from_cols(&images)?)?;
    let mut files = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let name = format!("image_{:02}.csv", i + 1);
        io::write_grid_csv(&out.join("images").join(&name), img, cfg.geometry.n_pix)?;
        files.push(name);
    }
    io::write_gnuplot_script(&out.join("images"), "phantoms", &files)?;
    #[derive(serde::Serialize)]
    struct Row {
        image: usize,
        intensity: f64,
        semi_major: f64,
        semi_minor: f64,
        cx: f64,
        cy: f64,
        angle_deg: f64,
    }
    let rows: Vec<Row> = (0..cfg.phantoms.n_images)
        .flat_map(|i| {
            cfg.phantoms.ellipses(i).into_iter().map(move |e| Row {
                image: i + 1,
                intensity: e.intensity,
                semi_major: e.semi_major,
                semi_minor: e.semi_minor,
                cx: e.cx,
                cy: e.cy,
                angle_deg: e.angle_deg,
            })
        })
        .collect();
    io::write_table_csv(&out.join("ellipses.csv"), &rows)?;
    Manifest::new("phantom-gen", cfg)?.write(out)?;
    println!("{} images written to {}", images.len(), out.display());
    Ok(())
}
