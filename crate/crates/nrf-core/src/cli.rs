//! Experiment drivers and their configuration.
//!
//! The `nrf` binary wraps these: `simulate` writes measurement artifacts,
//! `reconstruct` runs the solver plus requested baselines, `sweep-r`
//! repeats reconstruction over acceleration factors, `sampling-study`
//! compares the five schedules, and `metrics` scores two stored images.
//!
//! Configuration is a flat `key=value` text file; command-line flags
//! override file values. A single top-level seed fans out to every
//! stochastic consumer.

use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::{adjoint_reconstruct, ink_reconstruct, DensityCompensation, GriddingConfig};
use crate::error::{NrfError, Result};
use crate::forward::{simulate_analytic, RadialKSpace};
use crate::geometry::ImageGrid;
use crate::io;
use crate::metrics::{compare, MetricReport, PsnrMode};
use crate::network::PeConfig;
use crate::phantom::{parse_phantom_text, rasterize, PhantomSpec};
use crate::projection::kspace_to_sinogram;
use crate::reconstructor::{reconstruct, TrainConfig};
use crate::sampling::{gap_report, make_omega_grid, make_schedule, Scheme};

/// One experiment's settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Path to a phantom spec file, or a builtin name.
    pub phantom: String,
    pub n: usize,
    pub scheme: Scheme,
    pub r_factor: f64,
    pub seed: u64,
    pub noise_sigma: f64,
    pub steps: usize,
    pub lr: f64,
    pub pe_l: usize,
    pub out_dir: PathBuf,
    pub baselines: Vec<String>,
    pub psnr_mode: PsnrMode,
    /// Factors for `sweep-r`.
    pub r_list: Vec<f64>,
    /// Seeds for `sampling-study`.
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phantom: "shepp-logan".into(),
            n: 64,
            scheme: Scheme::Golden,
            r_factor: 8.0,
            seed: 0,
            noise_sigma: 0.0,
            steps: 500,
            lr: 5e-4,
            pe_l: 20,
            out_dir: PathBuf::from("out"),
            baselines: vec!["ifft".into()],
            psnr_mode: PsnrMode::Mse,
            r_list: vec![2.0, 4.0, 8.0, 12.0],
            seeds: vec![1, 2, 3],
        }
    }
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "phantom" => self.phantom = value.to_string(),
            "n" => self.n = parse_usize(value)?,
            "scheme" => self.scheme = Scheme::parse(value)?,
            "r-factor" | "r_factor" => self.r_factor = parse_f64(value)?,
            "seed" => self.seed = parse_u64(value)?,
            "noise-sigma" | "noise_sigma" => self.noise_sigma = parse_f64(value)?,
            "steps" => self.steps = parse_usize(value)?,
            "lr" => self.lr = parse_f64(value)?,
            "pe-l" | "pe_l" => self.pe_l = parse_usize(value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "baseline" => {
                self.baselines =
                    value.split(',').filter(|s| !s.is_empty()).map(|s| s.to_string()).collect()
            }
            "psnr-mode" | "psnr_mode" => self.psnr_mode = PsnrMode::parse(value)?,
            "r-list" | "r_list" => {
                self.r_list = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(parse_f64)
                    .collect::<Result<_>>()?
            }
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(parse_u64)
                    .collect::<Result<_>>()?
            }
            _ => return Err(NrfError::config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Loads a `key=value` file; `#` lines are comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| NrfError::io(path, e))?;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                NrfError::config(format!("{}:{}: expected key=value", path.display(), no + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || self.n % 2 != 0 {
            return Err(NrfError::config("n must be even and >= 8"));
        }
        if !(self.r_factor >= 1.0) {
            return Err(NrfError::config("r-factor must be >= 1"));
        }
        if self.steps == 0 {
            return Err(NrfError::config("steps must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(NrfError::config("noise-sigma must be >= 0"));
        }
        for b in &self.baselines {
            if b != "ifft" && b != "ink" {
                return Err(NrfError::config(format!("unknown baseline '{b}'")));
            }
        }
        Ok(())
    }

    pub fn load_phantom(&self) -> Result<PhantomSpec> {
        match self.phantom.as_str() {
            "shepp-logan" | "simple" => PhantomSpec::builtin(&self.phantom, self.n as f64),
            path => {
                let p = Path::new(path);
                // a missing phantom reference is a configuration mistake,
                // not a filesystem failure
                if !p.exists() {
                    return Err(NrfError::config(format!(
                        "phantom '{path}' is neither a builtin nor an existing file"
                    )));
                }
                let text = fs::read_to_string(p).map_err(|e| NrfError::io(p, e))?;
                PhantomSpec::new(parse_phantom_text(&text)?, self.n as f64)
            }
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            lr: self.lr,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }

    fn pe(&self) -> PeConfig {
        PeConfig::new(self.pe_l)
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| NrfError::config(format!("bad integer '{s}'")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse().map_err(|_| NrfError::config(format!("bad integer '{s}'")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| NrfError::config(format!("bad number '{s}'")))
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| NrfError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| NrfError::io(path, e))
}

/// Simulates one acquisition into the output directory: k-space, sinogram,
/// schedule CSV and the rasterized reference.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    ensure_out_dir(&cfg.out_dir)?;
    let spec = cfg.load_phantom()?;
    let schedule = make_schedule(cfg.scheme, cfg.n, cfg.r_factor, cfg.seed)?;
    let omega_grid = make_omega_grid(cfg.n, cfg.n as f64)?;
    let k = simulate_analytic(&spec, &schedule, &omega_grid, cfg.noise_sigma, cfg.seed)?;
    let sino = kspace_to_sinogram(&k);
    let reference = rasterize(&spec, cfg.n)?;
    io::save_kspace(&k, &cfg.out_dir.join("kspace.nrfksp"))?;
    io::save_sinogram(&sino, &cfg.out_dir.join("sinogram.nrfsin"))?;
    io::save_schedule_csv(&schedule, &cfg.out_dir.join("schedule.csv"))?;
    io::save_image(&reference, &cfg.out_dir.join("reference.nrfimg"))?;
    io::save_pgm(&reference, &cfg.out_dir.join("reference.pgm"))?;
    println!(
        "simulated {} spokes x {} samples (scheme {}, R {})",
        k.n_spokes(),
        k.n_omega(),
        cfg.scheme.name(),
        cfg.r_factor
    );
    Ok(())
}

/// Outputs of one reconstruction round.
pub struct ReconOutcome {
    pub metrics: Vec<(String, MetricReport)>,
    pub train_seconds: f64,
    pub infer_seconds: f64,
}

fn load_or_simulate(cfg: &RunConfig) -> Result<(RadialKSpace, ImageGrid)> {
    let kpath = cfg.out_dir.join("kspace.nrfksp");
    let rpath = cfg.out_dir.join("reference.nrfimg");
    if kpath.exists() && rpath.exists() {
        Ok((io::load_kspace(&kpath)?, io::load_image(&rpath)?))
    } else {
        let spec = cfg.load_phantom()?;
        let schedule = make_schedule(cfg.scheme, cfg.n, cfg.r_factor, cfg.seed)?;
        let omega_grid = make_omega_grid(cfg.n, cfg.n as f64)?;
        let k = simulate_analytic(&spec, &schedule, &omega_grid, cfg.noise_sigma, cfg.seed)?;
        let reference = rasterize(&spec, cfg.n)?;
        Ok((k, reference))
    }
}

/// Reconstructs (solver plus requested baselines), writing images, the loss
/// trace, a checkpoint and the metric rows.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<ReconOutcome> {
    cfg.validate()?;
    ensure_out_dir(&cfg.out_dir)?;
    let (k, reference) = load_or_simulate(cfg)?;
    let (image, report) = reconstruct(&k, &cfg.train_config(), &cfg.pe(), cfg.n)?;
    io::save_image(&image, &cfg.out_dir.join("ours.nrfimg"))?;
    io::save_pgm(&image, &cfg.out_dir.join("ours.pgm"))?;
    io::save_checkpoint(&report.final_params, &cfg.out_dir.join("ours.nrfmlp"))?;
    let per_step = report.train_seconds / report.loss_history.len() as f64;
    let seconds: Vec<f64> = (1..=report.loss_history.len()).map(|i| i as f64 * per_step).collect();
    io::save_loss_csv(&report.loss_history, &seconds, &cfg.out_dir.join("loss.csv"))?;

    let mut metrics = vec![("ours".to_string(), compare(&image, &reference, cfg.psnr_mode)?)];
    for b in &cfg.baselines {
        let img = match b.as_str() {
            "ifft" => adjoint_reconstruct(
                &k,
                &GriddingConfig { density_compensation: DensityCompensation::Ramp, n_out: cfg.n },
            )?
            .magnitude(),
            "ink" => ink_reconstruct(&k, &cfg.train_config(), &cfg.pe(), cfg.n)?,
            _ => unreachable!("validated"),
        };
        io::save_image(&img, &cfg.out_dir.join(format!("{b}.nrfimg")))?;
        io::save_pgm(&img, &cfg.out_dir.join(format!("{b}.pgm")))?;
        metrics.push((b.clone(), compare(&img, &reference, cfg.psnr_mode)?));
    }
    write_text(&cfg.out_dir.join("metrics.csv"), &io::metrics_csv(&metrics))?;
    for (case, m) in &metrics {
        println!("{case}: ssim {:.4} psnr {:.2} dB", m.ssim, m.psnr_db);
    }
    Ok(ReconOutcome {
        metrics,
        train_seconds: report.train_seconds,
        infer_seconds: report.infer_seconds,
    })
}

pub const SWEEP_HEADER: &str =
    "R,N_phi,ssim_ours,ssim_ifft,psnr_ours,psnr_ifft,train_seconds,infer_seconds";

/// One reconstruction per acceleration factor; failures are recorded and
/// the sweep continues.
pub fn cmd_sweep_r(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut rows = vec![SWEEP_HEADER.to_string()];
    for &r in &cfg.r_list {
        let mut sub = cfg.clone();
        sub.r_factor = r;
        sub.out_dir = cfg.out_dir.join(format!("r{r}"));
        sub.baselines = vec!["ifft".into()];
        match cmd_reconstruct(&sub) {
            Ok(out) => {
                let n_phi = make_schedule(cfg.scheme, cfg.n, r, cfg.seed)?.len();
                let get = |name: &str| {
                    out.metrics
                        .iter()
                        .find(|(c, _)| c == name)
                        .map(|(_, m)| *m)
                        .expect("present")
                };
                let ours = get("ours");
                let ifft = get("ifft");
                rows.push(format!(
                    "{r},{n_phi},{},{},{},{},{},{}",
                    ours.ssim,
                    ifft.ssim,
                    ours.psnr_db,
                    ifft.psnr_db,
                    out.train_seconds,
                    out.infer_seconds
                ));
            }
            Err(e) => {
                eprintln!("R={r}: {e}");
                rows.push(format!("{r},,,,,,,"));
            }
        }
    }
    rows.push(String::new());
    write_text(&cfg.out_dir.join("sweep.csv"), &rows.join("\n"))
}

pub const STUDY_HEADER: &str =
    "scheme,seed,ssim,psnr_db,max_adjacent_gap,covering_radius";

/// All five schemes at the configured acceleration factor, over the
/// configured seeds.
pub fn cmd_sampling_study(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    ensure_out_dir(&cfg.out_dir)?;
    let mut rows = vec![STUDY_HEADER.to_string()];
    for scheme in Scheme::ALL {
        for &seed in &cfg.seeds {
            let mut sub = cfg.clone();
            sub.scheme = scheme;
            sub.seed = seed;
            sub.out_dir = cfg.out_dir.join(format!("{}-s{seed}", scheme.name()));
            sub.baselines = Vec::new();
            let schedule = make_schedule(scheme, cfg.n, cfg.r_factor, seed)?;
            let gaps = gap_report(&schedule)?;
            match cmd_reconstruct(&sub) {
                Ok(out) => {
                    let ours = &out.metrics[0].1;
                    rows.push(format!(
                        "{},{seed},{},{},{},{}",
                        scheme.name(),
                        ours.ssim,
                        ours.psnr_db,
                        gaps.max_adjacent_gap,
                        gaps.covering_radius
                    ));
                }
                Err(e) => {
                    eprintln!("{} seed {seed}: {e}", scheme.name());
                    rows.push(format!("{},{seed},,,,", scheme.name()));
                }
            }
        }
    }
    rows.push(String::new());
    write_text(&cfg.out_dir.join("sampling_study.csv"), &rows.join("\n"))
}

/// Scores one stored image against a stored reference, printing a metric
/// row to stdout.
pub fn cmd_metrics(image: &Path, reference: &Path, mode: PsnrMode) -> Result<()> {
    let img = io::load_image(image)?.magnitude();
    let rf = io::load_image(reference)?.magnitude();
    let m = compare(&img, &rf, mode)?;
    let case = image.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    print!("{}", io::metrics_csv(&[(case, m)]));
    Ok(())
}
