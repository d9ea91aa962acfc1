//! Seeded dynamic 2D liver phantoms.
//!
//! A phantom is a tissue label map plus one time-attenuation curve (TAC) per
//! tissue present in the map. Sampling the phantom at time `t` gives the
//! ground-truth attenuation image used by the projector.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Volume;
use crate::segeval::{label_components, Connectivity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum TissueLabel {
    Background = 0,
    Liver = 1,
    Vessel = 2,
    Gallbladder = 3,
    Embolised = 4,
    MetalInsert = 5,
}

impl TissueLabel {
    pub const ALL: [TissueLabel; 6] = [
        TissueLabel::Background,
        TissueLabel::Liver,
        TissueLabel::Vessel,
        TissueLabel::Gallbladder,
        TissueLabel::Embolised,
        TissueLabel::MetalInsert,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            TissueLabel::Background => "background",
            TissueLabel::Liver => "liver",
            TissueLabel::Vessel => "vessel",
            TissueLabel::Gallbladder => "gallbladder",
            TissueLabel::Embolised => "embolised",
            TissueLabel::MetalInsert => "metal_insert",
        }
    }

    /// Tissues annotated as liver in segmentation ground truth. The
    /// gallbladder is excluded; vessels, embolised tissue and the insert
    /// lying inside the organ are included.
    pub fn is_liver(self) -> bool {
        matches!(
            self,
            TissueLabel::Liver | TissueLabel::Vessel | TissueLabel::Embolised | TissueLabel::MetalInsert
        )
    }
}

/// Time-attenuation curve of one tissue class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Tac {
    Constant {
        baseline: f64,
    },
    /// Peak-normalised gamma variate starting at `arrival_time`.
    GammaVariate {
        baseline: f64,
        amplitude: f64,
        arrival_time: f64,
        shape_k: f64,
        scale_theta: f64,
    },
    /// `baseline + c0 sin(2πt/P) + c1 cos(2πt/P) + c2 sin(4πt/P) + c3 cos(4πt/P)`.
    ///
    /// Lies exactly in the span of the five-harmonic temporal basis with
    /// the same period, which makes it the reference curve for exact
    /// recovery checks.
    Harmonic {
        baseline: f64,
        period: f64,
        coefficients: [f64; 4],
    },
}

/// Gamma-variate shape normalised to a peak of 1 at `tau = k - 1`.
pub fn gamma_variate_shape(tau: f64, k: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let a = k - 1.0;
    ((tau / a).ln() * a + a - tau).exp()
}

impl Tac {
    pub fn baseline(&self) -> f64 {
        match *self {
            Tac::Constant { baseline } => baseline,
            Tac::GammaVariate { baseline, .. } => baseline,
            Tac::Harmonic { baseline, .. } => baseline,
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Tac::Constant { .. } => true,
            Tac::GammaVariate { amplitude, .. } => amplitude == 0.0,
            Tac::Harmonic { coefficients, .. } => coefficients.iter().all(|&c| c == 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.baseline();
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::Config(format!("TAC baseline must be finite and >= 0, got {b}")));
        }
        match *self {
            Tac::Constant { .. } => Ok(()),
            Tac::GammaVariate {
                amplitude,
                arrival_time,
                shape_k,
                scale_theta,
                ..
            } => {
                if !amplitude.is_finite() || !arrival_time.is_finite() {
                    return Err(Error::Config("gamma-variate parameters must be finite".into()));
                }
                if !(shape_k > 1.0) {
                    return Err(Error::Config(format!("gamma-variate shape k must exceed 1, got {shape_k}")));
                }
                if !(scale_theta > 0.0) {
                    return Err(Error::Config(format!(
                        "gamma-variate scale must be positive, got {scale_theta}"
                    )));
                }
                Ok(())
            }
            Tac::Harmonic {
                period, coefficients, ..
            } => {
                if !(period > 0.0) || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Config("harmonic TAC needs a positive period and finite coefficients".into()));
                }
                Ok(())
            }
        }
    }

    fn value(&self, t: f64) -> f64 {
        match *self {
            Tac::Constant { baseline } => baseline,
            Tac::GammaVariate {
                baseline,
                amplitude,
                arrival_time,
                shape_k,
                scale_theta,
            } => {
                if t < arrival_time {
                    baseline
                } else {
                    baseline + amplitude * gamma_variate_shape((t - arrival_time) / scale_theta, shape_k)
                }
            }
            Tac::Harmonic {
                baseline,
                period,
                coefficients: c,
            } => {
                let w = 2.0 * PI * t / period;
                baseline + c[0] * w.sin() + c[1] * w.cos() + c[2] * (2.0 * w).sin() + c[3] * (2.0 * w).cos()
            }
        }
    }

    /// Time of maximum attenuation, if the curve has a single peak.
    pub fn peak_time(&self) -> Option<f64> {
        match *self {
            Tac::GammaVariate {
                arrival_time,
                shape_k,
                scale_theta,
                amplitude,
                ..
            } if amplitude > 0.0 => Some(arrival_time + (shape_k - 1.0) * scale_theta),
            _ => None,
        }
    }

    /// Flat row used by the tensor export:
    /// `[model, baseline, p1, p2, p3, p4, p5]`.
    pub fn to_row(&self) -> [f64; 7] {
        match *self {
            Tac::Constant { baseline } => [0.0, baseline, 0.0, 0.0, 0.0, 0.0, 0.0],
            Tac::GammaVariate {
                baseline,
                amplitude,
                arrival_time,
                shape_k,
                scale_theta,
            } => [1.0, baseline, amplitude, arrival_time, shape_k, scale_theta, 0.0],
            Tac::Harmonic {
                baseline,
                period,
                coefficients: c,
            } => [2.0, baseline, period, c[0], c[1], c[2], c[3]],
        }
    }
}

/// Evaluates a TAC at time `t` (seconds).
pub fn eval_tac(tac: &Tac, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("TAC evaluated at negative or NaN time {t}")));
    }
    Ok(tac.value(t))
}

/// Inclusive sampling range `[min, max]`.
pub type Range = [f64; 2];

fn draw(rng: &mut ChaCha8Rng, range: Range) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..=range[1])
    } else {
        range[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TacRanges {
    pub baseline: Range,
    pub amplitude: Range,
    pub arrival_time: Range,
    pub shape_k: Range,
    pub scale_theta: Range,
}

impl TacRanges {
    fn validate(&self, what: &str) -> Result<()> {
        for (name, r) in [
            ("baseline", self.baseline),
            ("amplitude", self.amplitude),
            ("arrival_time", self.arrival_time),
            ("shape_k", self.shape_k),
            ("scale_theta", self.scale_theta),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(Error::Config(format!("{what}.{name} range {r:?} is not ordered")));
            }
        }
        if self.baseline[0] < 0.0 || self.shape_k[0] <= 1.0 || self.scale_theta[0] <= 0.0 || self.arrival_time[0] < 0.0 {
            return Err(Error::Config(format!(
                "{what}: need baseline >= 0, shape_k > 1, scale_theta > 0, arrival_time >= 0"
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Tac {
        Tac::GammaVariate {
            baseline: draw(rng, self.baseline),
            amplitude: draw(rng, self.amplitude),
            arrival_time: draw(rng, self.arrival_time),
            shape_k: draw(rng, self.shape_k),
            scale_theta: draw(rng, self.scale_theta),
        }
    }
}

/// Liver outline: an ellipse whose radius is perturbed by seeded radial
/// harmonics of orders 2 to 4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiverShape {
    /// Centre as (row, col) in pixels.
    pub center: [f64; 2],
    /// Semi-axes (along rows, along cols) in pixels before rotation.
    pub semi_axes: [f64; 2],
    pub rotation_deg: f64,
    /// Maximum relative amplitude of each radial harmonic.
    pub harmonic_jitter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub height: usize,
    pub width: usize,
    pub pixel_spacing: f64,
    pub liver: LiverShape,
    pub vessel_count: usize,
    /// Vessel width range in pixels.
    pub vessel_width: Range,
    pub gallbladder: bool,
    /// Fraction of the liver area covered by the embolised region.
    pub embolised_fraction: f64,
    pub metal_insert: bool,
    pub liver_tac: TacRanges,
    pub vessel_tac: TacRanges,
    pub gallbladder_baseline: f64,
    /// Insert attenuation relative to the liver baseline.
    pub metal_factor: f64,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            pixel_spacing: 1.0,
            liver: LiverShape {
                center: [32.0, 32.0],
                semi_axes: [17.0, 21.0],
                rotation_deg: 15.0,
                harmonic_jitter: 0.06,
            },
            vessel_count: 3,
            vessel_width: [1.5, 2.5],
            gallbladder: true,
            embolised_fraction: 0.15,
            metal_insert: false,
            liver_tac: TacRanges {
                baseline: [0.18, 0.22],
                amplitude: [0.06, 0.10],
                arrival_time: [10.0, 13.0],
                shape_k: [2.5, 3.5],
                scale_theta: [5.0, 7.0],
            },
            vessel_tac: TacRanges {
                baseline: [0.20, 0.24],
                amplitude: [0.35, 0.55],
                arrival_time: [9.0, 11.0],
                shape_k: [2.5, 3.5],
                scale_theta: [2.5, 3.5],
            },
            gallbladder_baseline: 0.10,
            metal_factor: 50.0,
            seed: 0,
        }
    }
}

const GALLBLADDER_RADIUS: f64 = 0.2;
const METAL_RADIUS: f64 = 1.5;

impl PhantomConfig {
    fn max_liver_radius(&self) -> f64 {
        self.liver.semi_axes[0].max(self.liver.semi_axes[1]) * (1.0 + 3.0 * self.liver.harmonic_jitter)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 16 || self.width < 16 {
            return Err(Error::Config(format!(
                "phantom grid must be at least 16x16, got {}x{}",
                self.height, self.width
            )));
        }
        if !(self.pixel_spacing > 0.0) {
            return Err(Error::Config("pixel_spacing must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.embolised_fraction) {
            return Err(Error::Config(format!(
                "embolised_fraction {} outside [0, 1]",
                self.embolised_fraction
            )));
        }
        let l = &self.liver;
        if !(l.semi_axes[0] >= 1.0 && l.semi_axes[1] >= 1.0) {
            return Err(Error::Config("liver semi-axes must be at least one pixel".into()));
        }
        if !(0.0..1.0 / 3.0).contains(&l.harmonic_jitter) {
            return Err(Error::Config("harmonic_jitter must lie in [0, 1/3)".into()));
        }
        let mut reach = self.max_liver_radius();
        if self.gallbladder {
            reach += GALLBLADDER_RADIUS * l.semi_axes[0].min(l.semi_axes[1]);
        }
        let fits = l.center[0] - reach >= 0.0
            && l.center[0] + reach <= (self.height - 1) as f64
            && l.center[1] - reach >= 0.0
            && l.center[1] + reach <= (self.width - 1) as f64;
        if !fits {
            return Err(Error::Config(format!(
                "liver primitive (reach {reach:.1} px around {:?}) does not fit a {}x{} grid",
                l.center, self.height, self.width
            )));
        }
        if self.vessel_count > 0 && !(self.vessel_width[0] > 0.0 && self.vessel_width[0] <= self.vessel_width[1]) {
            return Err(Error::Config("vessel_width range must be positive and ordered".into()));
        }
        if !(self.gallbladder_baseline >= 0.0) || !(self.metal_factor > 0.0) {
            return Err(Error::Config("gallbladder_baseline must be >= 0 and metal_factor > 0".into()));
        }
        self.liver_tac.validate("liver_tac")?;
        self.vessel_tac.validate("vessel_tac")?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicPhantom {
    pub height: usize,
    pub width: usize,
    pub pixel_spacing: f64,
    /// Row-major tissue labels.
    pub labels: Vec<TissueLabel>,
    pub tacs: BTreeMap<TissueLabel, Tac>,
    pub seed: u64,
}

impl DynamicPhantom {
    pub fn label(&self, row: usize, col: usize) -> TissueLabel {
        self.labels[row * self.width + col]
    }

    pub fn present_labels(&self) -> Vec<TissueLabel> {
        let mut seen = [false; 6];
        for l in &self.labels {
            seen[l.id() as usize] = true;
        }
        TissueLabel::ALL.into_iter().filter(|l| seen[l.id() as usize]).collect()
    }

    pub fn mask_of(&self, label: TissueLabel) -> Vec<bool> {
        self.labels.iter().map(|&l| l == label).collect()
    }

    /// Segmentation ground truth: every tissue counted as liver.
    pub fn liver_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_liver()).collect()
    }

    pub fn count(&self, label: TissueLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Per-pixel TAC lookup.
    pub fn tac_at(&self, row: usize, col: usize) -> &Tac {
        &self.tacs[&self.label(row, col)]
    }

    pub fn label_ids(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.id()).collect()
    }

    /// Replaces every TAC; used to build phantoms with prescribed dynamics.
    pub fn with_tacs(mut self, tacs: BTreeMap<TissueLabel, Tac>) -> Result<Self> {
        for l in self.present_labels() {
            if !tacs.contains_key(&l) {
                return Err(Error::Config(format!("no TAC for present label {}", l.name())));
            }
        }
        for tac in tacs.values() {
            tac.validate()?;
        }
        self.tacs = tacs;
        Ok(self)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Builds a phantom from its configuration. Each structure draws from its own
/// random stream, so toggling one structure leaves the others unchanged.
pub fn build_phantom(config: &PhantomConfig) -> Result<DynamicPhantom> {
    config.validate()?;
    let (h, w) = (config.height, config.width);
    let mut labels = vec![TissueLabel::Background; h * w];

    let liver = &config.liver;
    let mut shape_rng = stream_rng(config.seed, 1);
    let harmonics: Vec<(f64, f64, f64)> = (2..=4)
        .map(|m| {
            let amp = if liver.harmonic_jitter > 0.0 {
                shape_rng.random_range(-liver.harmonic_jitter..=liver.harmonic_jitter)
            } else {
                0.0
            };
            let phase = shape_rng.random_range(0.0..2.0 * PI);
            (m as f64, amp, phase)
        })
        .collect();
    let radius_scale = |phi: f64| -> f64 { 1.0 + harmonics.iter().map(|&(m, a, p)| a * (m * phi + p).cos()).sum::<f64>() };
    let (sin_r, cos_r) = liver.rotation_deg.to_radians().sin_cos();
    let [b, a] = liver.semi_axes;
    let [cr, cc] = liver.center;
    for r in 0..h {
        for c in 0..w {
            let (dy, dx) = (r as f64 - cr, c as f64 - cc);
            let u = (dx * cos_r + dy * sin_r) / a;
            let v = (-dx * sin_r + dy * cos_r) / b;
            let rho = u.hypot(v);
            if rho <= radius_scale(v.atan2(u)) {
                labels[r * w + c] = TissueLabel::Liver;
            }
        }
    }

    if config.gallbladder {
        let mut rng = stream_rng(config.seed, 2);
        let phi = rng.random_range(0.0..2.0 * PI);
        let s = radius_scale(phi);
        let (u, v) = (a * s * phi.cos(), b * s * phi.sin());
        let gx = cc + u * cos_r - v * sin_r;
        let gy = cr + u * sin_r + v * cos_r;
        let radius = GALLBLADDER_RADIUS * a.min(b);
        paint_disc(&mut labels, h, w, gy, gx, radius, TissueLabel::Gallbladder, |_| true);
        keep_largest_liver_component(&mut labels, h, w);
    }

    let n_liver = labels.iter().filter(|&&l| l == TissueLabel::Liver).count();
    if n_liver == 0 {
        return Err(Error::Config("liver region is empty".into()));
    }

    let mut insert_at = nearest_liver_pixel(&labels, h, w, cr, cc);
    let n_emb = (config.embolised_fraction * n_liver as f64).round() as usize;
    if n_emb > 0 {
        let mut rng = stream_rng(config.seed, 3);
        let liver_pixels: Vec<usize> = (0..h * w).filter(|&i| labels[i] == TissueLabel::Liver).collect();
        let seed_px = liver_pixels[rng.random_range(0..liver_pixels.len())];
        grow_region(&mut labels, h, w, seed_px, n_emb, TissueLabel::Liver, TissueLabel::Embolised);
        insert_at = seed_px;
    }

    if config.vessel_count > 0 {
        let mut rng = stream_rng(config.seed, 4);
        for _ in 0..config.vessel_count {
            let phi = rng.random_range(0.0..2.0 * PI);
            let len = rng.random_range(0.6..=0.95) * a.min(b);
            let width = draw(&mut rng, config.vessel_width);
            let start = (cr + rng.random_range(-0.15..=0.15) * b, cc + rng.random_range(-0.15..=0.15) * a);
            let end = (start.0 + len * phi.sin(), start.1 + len * phi.cos());
            paint_segment(&mut labels, h, w, start, end, width / 2.0);
        }
    }

    if config.metal_insert {
        let (r, c) = ((insert_at / w) as f64, (insert_at % w) as f64);
        paint_disc(&mut labels, h, w, r, c, METAL_RADIUS, TissueLabel::MetalInsert, |l| l.is_liver());
    }

    let mut tac_rng = stream_rng(config.seed, 5);
    let liver_tac = config.liver_tac.sample(&mut tac_rng);
    let vessel_tac = config.vessel_tac.sample(&mut tac_rng);
    let liver_baseline = liver_tac.baseline();

    let mut phantom = DynamicPhantom {
        height: h,
        width: w,
        pixel_spacing: config.pixel_spacing,
        labels,
        tacs: BTreeMap::new(),
        seed: config.seed,
    };
    for label in phantom.present_labels() {
        let tac = match label {
            TissueLabel::Background => Tac::Constant { baseline: 0.0 },
            TissueLabel::Liver => liver_tac,
            TissueLabel::Vessel => vessel_tac,
            TissueLabel::Gallbladder => Tac::Constant {
                baseline: config.gallbladder_baseline,
            },
            TissueLabel::Embolised => Tac::Constant { baseline: liver_baseline },
            TissueLabel::MetalInsert => Tac::Constant {
                baseline: config.metal_factor * liver_baseline,
            },
        };
        phantom.tacs.insert(label, tac);
    }
    Ok(phantom)
}

#[allow(clippy::too_many_arguments)]
fn paint_disc(
    labels: &mut [TissueLabel],
    h: usize,
    w: usize,
    row: f64,
    col: f64,
    radius: f64,
    label: TissueLabel,
    allow: impl Fn(TissueLabel) -> bool,
) {
    let r0 = (row - radius).floor().max(0.0) as usize;
    let r1 = ((row + radius).ceil() as usize).min(h - 1);
    let c0 = (col - radius).floor().max(0.0) as usize;
    let c1 = ((col + radius).ceil() as usize).min(w - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let d = (r as f64 - row).hypot(c as f64 - col);
            if d <= radius && allow(labels[r * w + c]) {
                labels[r * w + c] = label;
            }
        }
    }
}

/// Marks liver pixels within `half_width` of the segment as vessel.
fn paint_segment(labels: &mut [TissueLabel], h: usize, w: usize, start: (f64, f64), end: (f64, f64), half_width: f64) {
    let (dy, dx) = (end.0 - start.0, end.1 - start.1);
    let len2 = dy * dy + dx * dx;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if labels[i] != TissueLabel::Liver {
                continue;
            }
            let (py, px) = (r as f64 - start.0, c as f64 - start.1);
            let s = if len2 > 0.0 { ((py * dy + px * dx) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = (py - s * dy).hypot(px - s * dx);
            if d <= half_width {
                labels[i] = TissueLabel::Vessel;
            }
        }
    }
}

fn keep_largest_liver_component(labels: &mut [TissueLabel], h: usize, w: usize) {
    let mask: Vec<bool> = labels.iter().map(|&l| l == TissueLabel::Liver).collect();
    let comps = label_components(&mask, h, w, Connectivity::Four);
    if let Some(keep) = comps.largest() {
        for (l, &id) in labels.iter_mut().zip(&comps.labels) {
            if id != 0 && id != keep {
                *l = TissueLabel::Background;
            }
        }
    }
}

fn nearest_liver_pixel(labels: &[TissueLabel], h: usize, w: usize, row: f64, col: f64) -> usize {
    (0..h * w)
        .filter(|&i| labels[i] == TissueLabel::Liver)
        .min_by(|&i, &j| {
            let di = ((i / w) as f64 - row).hypot((i % w) as f64 - col);
            let dj = ((j / w) as f64 - row).hypot((j % w) as f64 - col);
            di.total_cmp(&dj).then(i.cmp(&j))
        })
        .expect("liver is non-empty")
}

/// Grows a 4-connected region of exactly `count` pixels (if available) from
/// `seed`, always annexing the frontier pixel closest to the seed.
fn grow_region(labels: &mut [TissueLabel], h: usize, w: usize, seed: usize, count: usize, from: TissueLabel, to: TissueLabel) {
    let (sr, sc) = ((seed / w) as i64, (seed % w) as i64);
    let dist = |i: usize| {
        let (r, c) = ((i / w) as i64, (i % w) as i64);
        (r - sr).pow(2) + (c - sc).pow(2)
    };
    let mut queued = vec![false; h * w];
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0i64, seed)));
    queued[seed] = true;
    let mut taken = 0;
    while let Some(Reverse((_, i))) = heap.pop() {
        labels[i] = to;
        taken += 1;
        if taken == count {
            break;
        }
        let (r, c) = (i / w, i % w);
        let mut push = |j: usize| {
            if !queued[j] && labels[j] == from {
                queued[j] = true;
                heap.push(Reverse((dist(j), j)));
            }
        };
        if r > 0 {
            push(i - w);
        }
        if r + 1 < h {
            push(i + w);
        }
        if c > 0 {
            push(i - 1);
        }
        if c + 1 < w {
            push(i + 1);
        }
    }
}

/// Ground-truth attenuation image at time `t`.
pub fn sample_volume(phantom: &DynamicPhantom, t: f64) -> Result<Volume> {
    let mut lut = [0.0; 6];
    for (label, tac) in &phantom.tacs {
        lut[label.id() as usize] = eval_tac(tac, t)?;
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("negative sampling time {t}")));
    }
    Ok(Volume {
        height: phantom.height,
        width: phantom.width,
        pixel_spacing: phantom.pixel_spacing,
        data: phantom.labels.iter().map(|l| lut[l.id() as usize]).collect(),
    })
}
