//! 2D parallel-beam system matrix and the timed multi-sweep acquisition.
//!
//! Line integrals use Joseph's method: the ray is stepped one pixel row (or
//! column) at a time along its dominant axis and the image is linearly
//! interpolated across the other axis. The adjoint scatters with the same
//! weights, so forward and back projection are exact transposes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Volume;
use crate::phantom::{sample_volume, DynamicPhantom};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub height: usize,
    pub width: usize,
    /// mm
    pub pixel_spacing: f64,
    pub detector_bins: usize,
    /// mm
    pub detector_spacing: f64,
    /// Detector half-width in mm; bins farther from the centre read zero.
    #[serde(default)]
    pub truncation: Option<f64>,
}

impl Geometry {
    /// Detector wide enough to cover the image diagonal, one bin per pixel.
    pub fn for_image(height: usize, width: usize, pixel_spacing: f64) -> Self {
        let diag = ((height * height + width * width) as f64).sqrt();
        let mut bins = diag.ceil() as usize + 2;
        if bins % 2 == 0 {
            bins += 1;
        }
        Self {
            height,
            width,
            pixel_spacing,
            detector_bins: bins,
            detector_spacing: pixel_spacing,
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, half_width_mm: f64) -> Self {
        self.truncation = Some(half_width_mm);
        self
    }

    pub fn diagonal_mm(&self) -> f64 {
        ((self.height * self.height + self.width * self.width) as f64).sqrt() * self.pixel_spacing
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Config("geometry needs a non-empty image".into()));
        }
        if self.detector_bins == 0 {
            return Err(Error::Config("detector_bins must be at least 1".into()));
        }
        if !(self.pixel_spacing > 0.0 && self.detector_spacing > 0.0) {
            return Err(Error::Config("pixel and detector spacing must be positive".into()));
        }
        if let Some(hw) = self.truncation {
            if !(hw > 0.0 && 2.0 * hw < self.diagonal_mm()) {
                return Err(Error::Config(format!(
                    "truncated detector width {} mm must be positive and below the object diagonal {:.1} mm",
                    2.0 * hw,
                    self.diagonal_mm()
                )));
            }
        }
        Ok(())
    }

    /// Signed detector coordinate (mm) of the centre of bin `k`.
    pub fn bin_offset(&self, k: usize) -> f64 {
        (k as f64 - (self.detector_bins as f64 - 1.0) / 2.0) * self.detector_spacing
    }

    /// Whether bin `k` is read out under the truncation setting.
    pub fn bin_active(&self, k: usize) -> bool {
        match self.truncation {
            Some(hw) => self.bin_offset(k).abs() <= hw,
            None => true,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    fn check_volume(&self, v: &Volume) -> Result<()> {
        if v.height != self.height || v.width != self.width || v.data.len() != self.pixels() {
            return Err(Error::Shape(format!(
                "volume {}x{} does not match geometry {}x{}",
                v.height, v.width, self.height, self.width
            )));
        }
        Ok(())
    }
}

/// A linear map between flat vectors; the reconstruction solvers only need
/// the forward and adjoint products.
pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = Aᵀ y`
    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]);
}

/// Joseph projector for a fixed angle list. Rows are ordered angle-major,
/// `row = angle_index * detector_bins + bin`.
///
/// The interpolation weights are computed once and stored row-compressed,
/// so forward and adjoint products are plain sparse sweeps that use exactly
/// the same coefficients.
#[derive(Clone, Debug)]
pub struct Projector {
    geometry: Geometry,
    angles_deg: Vec<f64>,
    row_start: Vec<usize>,
    col_index: Vec<u32>,
    weights: Vec<f64>,
}

enum Traversal {
    /// Step through rows, interpolate across columns.
    Rows { x0: f64, dx: f64, weight: f64 },
    /// Step through columns, interpolate across rows.
    Cols { y0: f64, dy: f64, weight: f64 },
}

impl Projector {
    pub fn new(geometry: &Geometry, angles_deg: &[f64]) -> Result<Self> {
        geometry.validate()?;
        if let Some(a) = angles_deg.iter().find(|a| !a.is_finite()) {
            return Err(Error::Input(format!("non-finite projection angle {a}")));
        }
        let bins = geometry.detector_bins;
        let mut row_start = Vec::with_capacity(angles_deg.len() * bins + 1);
        let mut col_index = Vec::new();
        let mut weights = Vec::new();
        row_start.push(0);
        for &a in angles_deg {
            let trig = a.to_radians().sin_cos();
            for k in 0..bins {
                if geometry.bin_active(k) {
                    ray_weights(geometry, trig, k, &mut col_index, &mut weights);
                }
                row_start.push(col_index.len());
            }
        }
        Ok(Self {
            geometry: geometry.clone(),
            angles_deg: angles_deg.to_vec(),
            row_start,
            col_index,
            weights,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles_deg
    }
}

/// Ray `{p : p·(cos θ, sin θ) = s}` in pixel-index coordinates, where `x`
/// grows with the column and `y` with decreasing row.
fn traversal(g: &Geometry, (sin, cos): (f64, f64), bin: usize) -> Traversal {
    let s = g.bin_offset(bin) / g.pixel_spacing;
    let cx = (g.width as f64 - 1.0) / 2.0;
    let cy = (g.height as f64 - 1.0) / 2.0;
    if cos.abs() >= sin.abs() {
        // at row r: y = cy - r, x = (s - y sin) / cos, col = x + cx
        let x0 = (s - cy * sin) / cos + cx;
        Traversal::Rows {
            x0,
            dx: sin / cos,
            weight: g.pixel_spacing / cos.abs(),
        }
    } else {
        // at col c: x = c - cx, y = (s - x cos) / sin, row = cy - y
        let y0 = cy - (s + cx * cos) / sin;
        Traversal::Cols {
            y0,
            dy: cos / sin,
            weight: g.pixel_spacing / sin.abs(),
        }
    }
}

/// Appends the linear-interpolation weights of one ray.
fn ray_weights(g: &Geometry, trig: (f64, f64), bin: usize, cols: &mut Vec<u32>, vals: &mut Vec<f64>) {
    let (h, w) = (g.height, g.width);
    // (steps, neighbours along the interpolated axis, index of step i and neighbour j)
    let (steps, across, start, slope, weight, transposed) = match traversal(g, trig, bin) {
        Traversal::Rows { x0, dx, weight } => (h, w, x0, dx, weight, false),
        Traversal::Cols { y0, dy, weight } => (w, h, y0, dy, weight, true),
    };
    for i in 0..steps {
        let u = start + slope * i as f64;
        let j0 = u.floor();
        let f = u - j0;
        let j0 = j0 as isize;
        for (j, wt) in [(j0, 1.0 - f), (j0 + 1, f)] {
            if j >= 0 && (j as usize) < across && wt != 0.0 {
                let pixel = if transposed { j as usize * w + i } else { i * w + j as usize };
                cols.push(pixel as u32);
                vals.push(wt * weight);
            }
        }
    }
}

impl LinearOperator for Projector {
    fn rows(&self) -> usize {
        self.angles_deg.len() * self.geometry.detector_bins
    }

    fn cols(&self) -> usize {
        self.geometry.pixels()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in out.iter_mut().enumerate() {
            let range = self.row_start[row]..self.row_start[row + 1];
            *o = self.col_index[range.clone()]
                .iter()
                .zip(&self.weights[range])
                .map(|(&c, &v)| v * x[c as usize])
                .sum();
        }
    }

    fn apply_adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (row, &v) in y.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let range = self.row_start[row]..self.row_start[row + 1];
            for (&c, &wt) in self.col_index[range.clone()].iter().zip(&self.weights[range]) {
                out[c as usize] += wt * v;
            }
        }
    }
}

/// Projections of one static problem: `data[a * bins + k]` is bin `k` at
/// `angles[a]` (degrees).
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Sinogram {
    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.bins..(a + 1) * self.bins]
    }

    pub fn scaled(&self, factor: f64) -> Sinogram {
        Sinogram {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

pub fn forward_project(volume: &Volume, geometry: &Geometry, angles_deg: &[f64]) -> Result<Sinogram> {
    geometry.check_volume(volume)?;
    let proj = Projector::new(geometry, angles_deg)?;
    let bins = geometry.detector_bins;
    let mut data = vec![0.0; proj.rows()];
    proj.apply(&volume.data, &mut data);
    Ok(Sinogram {
        angles: angles_deg.to_vec(),
        bins,
        data,
    })
}

/// Adjoint of [`forward_project`].
pub fn back_project(sino: &Sinogram, geometry: &Geometry) -> Result<Volume> {
    if sino.bins != geometry.detector_bins || sino.data.len() != sino.angles.len() * sino.bins {
        return Err(Error::Shape("sinogram does not match the detector geometry".into()));
    }
    let proj = Projector::new(geometry, &sino.angles)?;
    let mut out = Volume::zeros(geometry.height, geometry.width, geometry.pixel_spacing);
    proj.apply_adjoint(&sino.data, &mut out.data);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub sweep_index: usize,
    /// degrees
    pub angle: f64,
    /// seconds
    pub timestamp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanProtocol {
    pub n_sweeps: usize,
    pub arc_degrees: f64,
    pub angular_step: f64,
    pub sweep_duration: f64,
    pub pause_duration: f64,
    pub alternate_direction: bool,
    pub schedule: Vec<ScheduleEntry>,
}

/// Projections per sweep: `floor(arc / step) + 1`.
pub fn angles_per_sweep(arc: f64, step: f64) -> usize {
    (arc / step + 1e-9).floor() as usize + 1
}

/// Builds the sweep schedule. Sweep `k` starts at `k·(sweep + pause)`;
/// within a sweep the projections are spread uniformly over the sweep
/// duration, first at the start, last at the end.
pub fn make_protocol(
    n_sweeps: usize,
    arc_degrees: f64,
    angular_step: f64,
    sweep_duration: f64,
    pause_duration: f64,
    alternate_direction: bool,
) -> Result<ScanProtocol> {
    if n_sweeps == 0 {
        return Err(Error::Config("protocol needs at least one sweep".into()));
    }
    if !(angular_step > 0.0 && arc_degrees.is_finite()) {
        return Err(Error::Config("angular step must be positive".into()));
    }
    if angular_step > arc_degrees {
        return Err(Error::Config(format!(
            "angular step {angular_step} exceeds the arc {arc_degrees}"
        )));
    }
    if !(sweep_duration >= 0.0 && pause_duration >= 0.0) {
        return Err(Error::Config("durations must be non-negative".into()));
    }
    let n = angles_per_sweep(arc_degrees, angular_step);
    if n > 1 && sweep_duration == 0.0 {
        return Err(Error::Config("a multi-projection sweep needs a positive duration".into()));
    }
    if n_sweeps > 1 && pause_duration == 0.0 {
        return Err(Error::Config(
            "consecutive sweeps without a pause would share a timestamp".into(),
        ));
    }
    let period = sweep_duration + pause_duration;
    let mut schedule = Vec::with_capacity(n_sweeps * n);
    for sweep in 0..n_sweeps {
        let start = sweep as f64 * period;
        let reverse = alternate_direction && sweep % 2 == 1;
        for j in 0..n {
            let k = if reverse { n - 1 - j } else { j };
            let timestamp = if n > 1 {
                start + sweep_duration * j as f64 / (n - 1) as f64
            } else {
                start
            };
            schedule.push(ScheduleEntry {
                sweep_index: sweep,
                angle: k as f64 * angular_step,
                timestamp,
            });
        }
    }
    Ok(ScanProtocol {
        n_sweeps,
        arc_degrees,
        angular_step,
        sweep_duration,
        pause_duration,
        alternate_direction,
        schedule,
    })
}

impl ScanProtocol {
    pub fn angles_per_sweep(&self) -> usize {
        angles_per_sweep(self.arc_degrees, self.angular_step)
    }

    /// Time of the last projection.
    pub fn total_duration(&self) -> f64 {
        self.schedule.last().map_or(0.0, |e| e.timestamp)
    }

    pub fn sweep_start(&self, sweep: usize) -> f64 {
        sweep as f64 * (self.sweep_duration + self.pause_duration)
    }

    pub fn sweep_mid_time(&self, sweep: usize) -> f64 {
        self.sweep_start(sweep) + self.sweep_duration / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        for pair in self.schedule.windows(2) {
            if !(pair[1].timestamp > pair[0].timestamp) {
                return Err(Error::Config("protocol timestamps must be strictly increasing".into()));
            }
        }
        if let Some(e) = self.schedule.iter().find(|e| e.sweep_index >= self.n_sweeps) {
            return Err(Error::Config(format!("schedule entry in unknown sweep {}", e.sweep_index)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinoRow {
    pub sweep_index: usize,
    pub angle: f64,
    pub timestamp: f64,
    pub data: Vec<f64>,
}

/// One detector row per schedule entry, in acquisition order.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedSinogram {
    pub geometry: Geometry,
    pub protocol: ScanProtocol,
    pub rows: Vec<SinoRow>,
}

impl TimedSinogram {
    /// Assembles a timed sinogram from a flat `rows × bins` payload laid out
    /// in schedule order.
    pub fn from_flat(geometry: Geometry, protocol: ScanProtocol, data: &[f64]) -> Result<Self> {
        let bins = geometry.detector_bins;
        if data.len() != protocol.schedule.len() * bins {
            return Err(Error::Shape(format!(
                "sinogram payload has {} values, schedule needs {}x{}",
                data.len(),
                protocol.schedule.len(),
                bins
            )));
        }
        let rows = protocol
            .schedule
            .iter()
            .zip(data.chunks(bins))
            .map(|(e, d)| SinoRow {
                sweep_index: e.sweep_index,
                angle: e.angle,
                timestamp: e.timestamp,
                data: d.to_vec(),
            })
            .collect();
        Ok(Self {
            geometry,
            protocol,
            rows,
        })
    }

    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.data.iter().copied()).collect()
    }

    /// Rows of one sweep as a static sinogram, in acquisition order.
    pub fn sweep(&self, sweep: usize) -> Sinogram {
        let rows: Vec<&SinoRow> = self.rows.iter().filter(|r| r.sweep_index == sweep).collect();
        Sinogram {
            angles: rows.iter().map(|r| r.angle).collect(),
            bins: self.geometry.detector_bins,
            data: rows.iter().flat_map(|r| r.data.iter().copied()).collect(),
        }
    }
}

/// Simulates the timed acquisition: each schedule entry sees the phantom at
/// its own timestamp. Gaussian noise is added in the line-integral domain,
/// then truncated bins are zeroed.
pub fn project_dynamic(
    phantom: &DynamicPhantom,
    protocol: &ScanProtocol,
    geometry: &Geometry,
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<TimedSinogram> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::Config(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    geometry.validate()?;
    protocol.validate()?;
    if phantom.height != geometry.height || phantom.width != geometry.width {
        return Err(Error::Shape(format!(
            "phantom {}x{} does not match geometry {}x{}",
            phantom.height, phantom.width, geometry.height, geometry.width
        )));
    }
    let bins = geometry.detector_bins;
    let mut rows: Vec<SinoRow> = protocol
        .schedule
        .par_iter()
        .map(|e| -> Result<SinoRow> {
            let vol = sample_volume(phantom, e.timestamp)?;
            let proj = Projector::new(geometry, &[e.angle])?;
            let mut data = vec![0.0; bins];
            proj.apply(&vol.data, &mut data);
            Ok(SinoRow {
                sweep_index: e.sweep_index,
                angle: e.angle,
                timestamp: e.timestamp,
                data,
            })
        })
        .collect::<Result<_>>()?;
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        for row in &mut rows {
            for (k, v) in row.data.iter_mut().enumerate() {
                let n = normal.sample(&mut rng);
                if geometry.bin_active(k) {
                    *v += n;
                }
            }
        }
    }
    Ok(TimedSinogram {
        geometry: geometry.clone(),
        protocol: protocol.clone(),
        rows,
    })
}
