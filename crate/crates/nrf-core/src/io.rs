//! Binary and text artifact formats.
//!
//! Four little-endian binary formats, each opened by an 8-byte ASCII magic:
//!
//! * `NRFIMG01` — image: u32 n, f64 extent, n*n complex values row-major.
//! * `NRFKSP01` — k-space: u32 n_phi, u32 n_omega, angles, omegas, samples
//!   spoke-major.
//! * `NRFSIN01` — sinogram: u32 n_phi, u32 n_r, angles, r values, samples
//!   spoke-major.
//! * `NRFMLP01` — network checkpoint: u32 layer count, then per layer
//!   u32 rows, u32 cols, weights row-major, biases.
//!
//! Complex values are interleaved (re, im) f64 pairs. CSV exports print
//! floats with the shortest round-trippable representation.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{NrfError, Result};
use crate::forward::RadialKSpace;
use crate::geometry::ImageGrid;
use crate::network::{DenseLayer, MlpParams, PeConfig};
use crate::projection::{RGrid, Sinogram};
use crate::sampling::{AngleSchedule, OmegaGrid, Scheme};

const IMG_MAGIC: &[u8; 8] = b"NRFIMG01";
const KSP_MAGIC: &[u8; 8] = b"NRFKSP01";
const SIN_MAGIC: &[u8; 8] = b"NRFSIN01";
const MLP_MAGIC: &[u8; 8] = b"NRFMLP01";

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 8]) -> Writer {
        Writer { buf: magic.to_vec() }
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    fn complexes(&mut self, vs: &[Complex64]) {
        for z in vs {
            self.f64(z.re);
            self.f64(z.im);
        }
    }

    fn save(self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| NrfError::io(path, e))?;
        f.write_all(&self.buf).map_err(|e| NrfError::io(path, e))?;
        Ok(())
    }
}

struct Reader {
    buf: Vec<u8>,
    pos: usize,
}

impl Reader {
    fn open(path: &Path, magic: &[u8; 8]) -> Result<Reader> {
        let mut buf = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| NrfError::io(path, e))?;
        if buf.len() < 8 || &buf[0..8] != magic {
            return Err(NrfError::format(format!(
                "{}: missing magic {:?}",
                path.display(),
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Reader { buf, pos: 8 })
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(NrfError::format("truncated payload"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn complexes(&mut self, n: usize) -> Result<Vec<Complex64>> {
        (0..n).map(|_| Ok(Complex64::new(self.f64()?, self.f64()?))).collect()
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(NrfError::format(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn save_image(img: &ImageGrid, path: &Path) -> Result<()> {
    let mut w = Writer::new(IMG_MAGIC);
    w.u32(img.n() as u32);
    w.f64(img.extent_v());
    w.complexes(img.values());
    w.save(path)
}

pub fn load_image(path: &Path) -> Result<ImageGrid> {
    let mut r = Reader::open(path, IMG_MAGIC)?;
    let n = r.u32()? as usize;
    let extent = r.f64()?;
    let values = r.complexes(n * n)?;
    r.finish()?;
    ImageGrid::from_values(n, extent, values)
}

/// Lossy 8-bit export of the magnitude, min-max normalized, for eyeballing.
pub fn save_pgm(img: &ImageGrid, path: &Path) -> Result<()> {
    let mags: Vec<f64> = img.values().iter().map(|z| z.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = if max > min { max - min } else { 1.0 };
    let mut buf = format!("P5\n{} {}\n255\n", img.n(), img.n()).into_bytes();
    buf.extend(mags.iter().map(|&m| ((m - min) / span * 255.0).round() as u8));
    fs::write(path, buf).map_err(|e| NrfError::io(path, e))
}

pub fn save_kspace(k: &RadialKSpace, path: &Path) -> Result<()> {
    let mut w = Writer::new(KSP_MAGIC);
    w.u32(k.n_spokes() as u32);
    w.u32(k.n_omega() as u32);
    w.f64s(&k.schedule.angles);
    w.f64s(&k.omega_grid.omegas);
    w.complexes(&k.samples);
    w.save(path)
}

/// Reads k-space back. The schedule's provenance fields (scheme, seed,
/// acceleration) are not part of the wire format; the loaded schedule
/// carries the angles with placeholder provenance.
pub fn load_kspace(path: &Path) -> Result<RadialKSpace> {
    let mut r = Reader::open(path, KSP_MAGIC)?;
    let n_phi = r.u32()? as usize;
    let n_omega = r.u32()? as usize;
    let angles = r.f64s(n_phi)?;
    let omegas = r.f64s(n_omega)?;
    let samples = r.complexes(n_phi * n_omega)?;
    r.finish()?;
    if n_omega < 2 {
        return Err(NrfError::format("k-space needs at least 2 frequency samples"));
    }
    let delta_omega = omegas[1] - omegas[0];
    let extent_v = 1.0 / (std::f64::consts::SQRT_2 * delta_omega);
    let delta = -1.0 / (2.0 * omegas[0]);
    Ok(RadialKSpace {
        schedule: schedule_from_angles(angles),
        omega_grid: OmegaGrid { n_omega, delta_omega, omegas, extent_v, delta },
        samples,
        noise_sigma: 0.0,
    })
}

fn schedule_from_angles(angles: Vec<f64>) -> AngleSchedule {
    let n = angles.len();
    AngleSchedule {
        acquisition_order: angles.clone(),
        angles,
        scheme: Scheme::Uniform,
        r_factor: 1.0,
        seed: 0,
        full_count: n,
    }
}

pub fn save_sinogram(s: &Sinogram, path: &Path) -> Result<()> {
    let mut w = Writer::new(SIN_MAGIC);
    w.u32(s.n_spokes() as u32);
    w.u32(s.n_r() as u32);
    w.f64s(&s.schedule.angles);
    w.f64s(&s.r_grid.values());
    w.complexes(&s.samples);
    w.save(path)
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    let mut r = Reader::open(path, SIN_MAGIC)?;
    let n_phi = r.u32()? as usize;
    let n_r = r.u32()? as usize;
    let angles = r.f64s(n_phi)?;
    let rs = r.f64s(n_r)?;
    let samples = r.complexes(n_phi * n_r)?;
    r.finish()?;
    if n_r < 2 {
        return Err(NrfError::format("sinogram needs at least 2 offsets"));
    }
    Ok(Sinogram {
        schedule: schedule_from_angles(angles),
        r_grid: RGrid { n: n_r, delta_r: rs[1] - rs[0], r0: rs[0] },
        samples,
    })
}

pub fn save_checkpoint(params: &MlpParams, path: &Path) -> Result<()> {
    let mut w = Writer::new(MLP_MAGIC);
    w.u32(params.layers.len() as u32);
    for l in &params.layers {
        w.u32(l.rows as u32);
        w.u32(l.cols as u32);
        w.f64s(&l.weights);
        w.f64s(&l.bias);
    }
    w.save(path)
}

/// Loads a checkpoint. The encoding order and skip placement are inferred
/// from the stored dimensions: the input width fixes `L`, and a layer whose
/// input exceeds its predecessor's output by exactly the encoded width is
/// the skip layer.
pub fn load_checkpoint(path: &Path) -> Result<MlpParams> {
    let mut r = Reader::open(path, MLP_MAGIC)?;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(NrfError::format("checkpoint has no layers"));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let weights = r.f64s(rows * cols)?;
        let bias = r.f64s(rows)?;
        layers.push(DenseLayer { rows, cols, weights, bias });
    }
    r.finish()?;
    let d_in = layers[0].cols;
    if d_in < 2 || (d_in - 2) % 4 != 0 {
        return Err(NrfError::format(format!("input width {d_in} is not 2 + 4L")));
    }
    let l_order = (d_in - 2) / 4;
    let mut skip_at = None;
    for i in 1..layers.len() {
        if layers[i].cols == layers[i - 1].rows + d_in {
            skip_at = Some(i);
            break;
        }
    }
    let params = MlpParams { layers, skip_at, l_order };
    params.validate().map_err(|e| NrfError::format(format!("inconsistent checkpoint: {e}")))?;
    Ok(params)
}

/// Schedule CSV: `index,angle_radians`, sorted order.
pub fn save_schedule_csv(s: &AngleSchedule, path: &Path) -> Result<()> {
    let mut out = String::from("index,angle_radians\n");
    for (i, a) in s.angles.iter().enumerate() {
        out.push_str(&format!("{i},{a}\n"));
    }
    fs::write(path, out).map_err(|e| NrfError::io(path, e))
}

pub fn load_schedule_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| NrfError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("index,angle_radians") => {}
        _ => return Err(NrfError::format("schedule csv header mismatch")),
    }
    let mut angles = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (_, a) = line
            .split_once(',')
            .ok_or_else(|| NrfError::format(format!("schedule csv line {}: no comma", no + 2)))?;
        angles.push(parse_float(a)?);
    }
    Ok(angles)
}

/// Loss trace CSV: `step,loss,seconds`.
pub fn save_loss_csv(losses: &[f64], seconds: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("step,loss,seconds\n");
    for (i, (l, s)) in losses.iter().zip(seconds).enumerate() {
        out.push_str(&format!("{i},{l},{s}\n"));
    }
    fs::write(path, out).map_err(|e| NrfError::io(path, e))
}

/// Metric rows: `case,ssim,psnr_db,psnr_mode`. Infinite PSNR (identical
/// images) prints as `inf`.
pub fn metrics_csv(rows: &[(String, crate::metrics::MetricReport)]) -> String {
    let mut out = String::from("case,ssim,psnr_db,psnr_mode\n");
    for (case, m) in rows {
        let p = if m.psnr_db.is_infinite() { "inf".to_string() } else { format!("{}", m.psnr_db) };
        out.push_str(&format!("{case},{},{p},{}\n", m.ssim, m.psnr_mode.name()));
    }
    out
}

/// Parses the output of [`metrics_csv`] back into rows.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<(String, crate::metrics::MetricReport)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("case,ssim,psnr_db,psnr_mode") => {}
        _ => return Err(NrfError::format("metrics csv header mismatch")),
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(NrfError::format(format!("metrics csv row '{line}'")));
        }
        rows.push((
            fields[0].to_string(),
            crate::metrics::MetricReport {
                ssim: parse_float(fields[1])?,
                psnr_db: parse_float(fields[2])?,
                psnr_mode: crate::metrics::PsnrMode::parse(fields[3])?,
            },
        ));
    }
    Ok(rows)
}

pub fn parse_float(s: &str) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>().map_err(|_| NrfError::format(format!("bad float '{s}'")))
}

/// Default encoding config stored alongside checkpoints.
pub fn pe_of(params: &MlpParams) -> PeConfig {
    PeConfig { l_order: params.l_order }
}
