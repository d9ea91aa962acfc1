//! Time separation technique.
//!
//! Every voxel's time-attenuation curve is modelled as a linear combination
//! of N orthonormal temporal basis functions, `x_v(t) = Σ_i w_{v,i} ψ_i(t)`,
//! and so is every detector pixel, `p_n(t) = Σ_j ω_{n,j} ψ_j(t)`. Because the
//! system matrix does not depend on time, orthonormality turns the
//! time-resolved problem into N independent static problems `A w_i = ω_i`.
//!
//! The pipeline is:
//! 1. build a basis ([`harmonic_basis`] or [`svd_basis`]),
//! 2. fit ω per (angle, detector bin) from the timed projections
//!    ([`fit_projection_coeffs`]),
//! 3. reconstruct one coefficient image per basis function
//!    ([`reconstruct_coeff_volumes`]),
//! 4. synthesise voxel curves and perfusion summaries from the coefficients.
//!
//! Inner products are plain sums over the basis time grid, so a constant
//! function normalises to `1/√T` for a grid of `T` samples.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, Volume};
use crate::phantom::{Tac, TacRanges};
use crate::projector::{Geometry, Sinogram, TimedSinogram};
use crate::recon::{reconstruct_static, ReconConfig, Reconstruction};
use crate::tensorio::{self, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    Harmonic,
    Svd,
}

impl BasisSource {
    pub fn name(self) -> &'static str {
        match self {
            BasisSource::Harmonic => "harmonic",
            BasisSource::Svd => "svd",
        }
    }
}

/// N orthonormal functions sampled on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet {
    /// `functions[i][k]` is ψ_i at `time_grid[k]`.
    pub functions: Vec<Vec<f64>>,
    pub time_grid: Vec<f64>,
    pub period: f64,
    pub source: BasisSource,
    /// Singular values of the prior library, for SVD bases.
    pub singular_values: Option<Vec<f64>>,
}

/// Tolerance for timestamps that fall a rounding error outside the grid.
const GRID_SLACK: f64 = 1e-9;

impl BasisSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.functions
            .iter()
            .map(|a| self.functions.iter().map(|b| dot(a, b)).collect())
            .collect()
    }

    /// `max |⟨ψ_i, ψ_j⟩ − δ_ij|`
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.gram().iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let grid = &self.time_grid;
        let (first, last) = (grid[0], grid[grid.len() - 1]);
        if !(t >= first - GRID_SLACK && t <= last + GRID_SLACK) {
            return Err(Error::Domain(format!(
                "time {t} outside the basis grid [{first}, {last}]"
            )));
        }
        if grid.len() == 1 {
            return Ok((0, 0.0));
        }
        let t = t.clamp(first, last);
        let k = grid.partition_point(|&g| g <= t).clamp(1, grid.len() - 1) - 1;
        let f = (t - grid[k]) / (grid[k + 1] - grid[k]);
        Ok((k, f))
    }

    /// All basis functions at `t`, linearly interpolated on the grid.
    pub fn eval_all(&self, t: f64) -> Result<Vec<f64>> {
        let (k, f) = self.locate(t)?;
        Ok(self
            .functions
            .iter()
            .map(|psi| if f == 0.0 { psi[k] } else { (1.0 - f) * psi[k] + f * psi[k + 1] })
            .collect())
    }

    pub fn eval(&self, i: usize, t: f64) -> Result<f64> {
        if i >= self.len() {
            return Err(Error::Index(format!("basis function {i} of {}", self.len())));
        }
        Ok(self.eval_all(t)?[i])
    }

    /// Coefficients of `curve` (sampled on the grid) in this basis.
    pub fn project_curve(&self, curve: &[f64]) -> Result<Vec<f64>> {
        if curve.len() != self.time_grid.len() {
            return Err(Error::Shape(format!(
                "curve has {} samples, grid has {}",
                curve.len(),
                self.time_grid.len()
            )));
        }
        Ok(self.functions.iter().map(|psi| dot(psi, curve)).collect())
    }

    /// Writes `<stem>_time.tsr`, `<stem>_matrix.tsr` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        tensorio::write_tensor(&dir.join(format!("{stem}_time.tsr")), &Tensor::from_f64(vec![self.time_grid.len()], &self.time_grid))?;
        let flat: Vec<f64> = self.functions.iter().flatten().copied().collect();
        tensorio::write_tensor(
            &dir.join(format!("{stem}_matrix.tsr")),
            &Tensor::from_f64(vec![self.len(), self.time_grid.len()], &flat),
        )?;
        let meta = BasisMeta {
            source: self.source,
            t_total: self.period,
            n: self.len(),
            singular_values: self.singular_values.clone(),
        };
        tensorio::write_json(&dir.join(format!("{stem}.json")), &meta)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let meta: BasisMeta = tensorio::read_json(&dir.join(format!("{stem}.json")))?;
        let time = tensorio::read_tensor(&dir.join(format!("{stem}_time.tsr")))?;
        let matrix = tensorio::read_tensor(&dir.join(format!("{stem}_matrix.tsr")))?;
        let time_grid = time.to_f64();
        if matrix.dims() != [meta.n as u64, time_grid.len() as u64] {
            return Err(Error::Format(format!("basis matrix dims {:?} disagree with metadata", matrix.dims())));
        }
        let values = matrix.to_f64();
        Ok(Self {
            functions: values.chunks(time_grid.len()).map(|c| c.to_vec()).collect(),
            time_grid,
            period: meta.t_total,
            source: meta.source,
            singular_values: meta.singular_values,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisMeta {
    pub source: BasisSource,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
}

/// `samples` uniformly spaced instants covering `[0, t_total]`.
pub fn uniform_grid(t_total: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|k| t_total * k as f64 / (n - 1) as f64).collect(),
    }
}

fn check_grid(time_grid: &[f64]) -> Result<()> {
    if time_grid.is_empty() {
        return Err(Error::Config("basis time grid is empty".into()));
    }
    if time_grid.iter().any(|t| !t.is_finite()) || time_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("basis time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// The five raw harmonics `1, sin(2πt/T), cos(2πt/T), sin(4πt/T), cos(4πt/T)`.
pub fn raw_harmonics(t: f64, period: f64) -> [f64; 5] {
    let w = 2.0 * PI * t / period;
    [1.0, w.sin(), w.cos(), (2.0 * w).sin(), (2.0 * w).cos()]
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass.
fn orthonormalise(raw: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    for (i, mut v) in raw.into_iter().enumerate() {
        let start = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = dot(&v, &v).sqrt();
        if !(n > 1e-10 * start.max(1.0)) {
            return Err(Error::Config(format!(
                "basis function {i} is linearly dependent on the previous ones on this grid"
            )));
        }
        v.iter_mut().for_each(|a| *a /= n);
        out.push(v);
    }
    Ok(out)
}

/// Five-harmonic analytical basis, orthonormalised on `time_grid` in the order
/// constant, sin, cos, sin(2·), cos(2·).
pub fn harmonic_basis(time_grid: &[f64], t_total: f64) -> Result<BasisSet> {
    if !(t_total > 0.0) {
        return Err(Error::Config(format!("basis period must be positive, got {t_total}")));
    }
    check_grid(time_grid)?;
    if time_grid[0] < 0.0 || time_grid[time_grid.len() - 1] > t_total + GRID_SLACK {
        return Err(Error::Config(format!("time grid must lie within [0, {t_total}]")));
    }
    if time_grid.len() < 5 {
        return Err(Error::Config("five harmonics need at least five grid samples".into()));
    }
    let raw: Vec<Vec<f64>> = (0..5)
        .map(|i| time_grid.iter().map(|&t| raw_harmonics(t, t_total)[i]).collect())
        .collect();
    Ok(BasisSet {
        functions: orthonormalise(raw)?,
        time_grid: time_grid.to_vec(),
        period: t_total,
        source: BasisSource::Harmonic,
        singular_values: None,
    })
}

/// First `n` right-singular vectors of a library of prior TACs (one curve per
/// row, sampled on `time_grid`), ordered by decreasing singular value. Each
/// vector's sign is chosen to give it a non-negative sum, so the leading
/// function follows the dominant static signal.
pub fn svd_basis(library: &[Vec<f64>], time_grid: &[f64], n: usize) -> Result<BasisSet> {
    check_grid(time_grid)?;
    let m = library.len();
    let t = time_grid.len();
    if n == 0 {
        return Err(Error::Config("basis size must be at least 1".into()));
    }
    if n > m.min(t) {
        return Err(Error::Config(format!(
            "cannot extract {n} components from a {m}x{t} library"
        )));
    }
    if let Some(row) = library.iter().find(|r| r.len() != t) {
        return Err(Error::Config(format!("library curve has {} samples, grid has {t}", row.len())));
    }
    if library.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("library contains non-finite values".into()));
    }
    let mat = DMatrix::from_fn(m, t, |i, j| library[i][j]);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut functions = Vec::with_capacity(n);
    for &k in order.iter().take(n) {
        let mut psi: Vec<f64> = v_t.row(k).iter().copied().collect();
        let sum: f64 = psi.iter().sum();
        let flip = if sum.abs() > 1e-12 {
            sum < 0.0
        } else {
            let peak = psi.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            peak < 0.0
        };
        if flip {
            psi.iter_mut().for_each(|v| *v = -*v);
        }
        functions.push(psi);
    }
    Ok(BasisSet {
        functions,
        time_grid: time_grid.to_vec(),
        period: time_grid[t - 1],
        source: BasisSource::Svd,
        singular_values: Some(order.iter().map(|&k| sv[k]).collect()),
    })
}

/// Samples `count` gamma-variate curves per range set on `time_grid`; the
/// stand-in for TACs measured in earlier CT perfusion scans.
pub fn prior_tac_library(ranges: &[&TacRanges], count: usize, time_grid: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(ranges.len() * count);
    for r in ranges {
        for _ in 0..count {
            let tac: Tac = r.sample(&mut rng);
            out.push(
                time_grid
                    .iter()
                    .map(|&t| crate::phantom::eval_tac(&tac, t))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
    }
    Ok(out)
}

/// `count` flat curves with levels spread evenly over `levels`, standing in
/// for non-enhancing tissue in a prior library. Without them the constant
/// function is poorly represented by an SVD basis of enhancing curves.
pub fn flat_curve_library(count: usize, levels: [f64; 2], time_grid: &[f64]) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let f = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
            vec![levels[0] + f * (levels[1] - levels[0]); time_grid.len()]
        })
        .collect()
}

/// Fitted projection-domain coefficients, one static sinogram per basis
/// function over the distinct acquisition angles.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionCoefficients {
    /// Distinct angles (degrees), ascending.
    pub angles: Vec<f64>,
    pub bins: usize,
    /// `coeffs[j][a * bins + k]` is ω_j at angle `a`, bin `k`.
    pub coeffs: Vec<Vec<f64>>,
    pub basis: BasisSet,
}

impl ProjectionCoefficients {
    pub fn sinogram(&self, j: usize) -> Sinogram {
        Sinogram {
            angles: self.angles.clone(),
            bins: self.bins,
            data: self.coeffs[j].clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.iter().map(|v| v * factor).collect()).collect(),
            ..self.clone()
        }
    }
}

fn angle_key(angle: f64) -> i64 {
    (angle * 1e6).round() as i64
}

/// Least-squares fit of the basis to each detector pixel's time series.
///
/// Rows sharing an angle are fitted together: one pseudo-inverse of the
/// design matrix `Φ[s][j] = ψ_j(t_s)` serves every bin of that angle. The
/// pseudo-inverse yields the least-norm solution, so all-zero bins fit to
/// all-zero coefficients.
pub fn fit_projection_coeffs(sino: &TimedSinogram, basis: &BasisSet) -> Result<ProjectionCoefficients> {
    let n = basis.len();
    let bins = sino.geometry.detector_bins;
    if n == 0 {
        return Err(Error::Config("empty basis".into()));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, row) in sino.rows.iter().enumerate() {
        if row.data.len() != bins {
            return Err(Error::Shape(format!("row {i} has {} bins, expected {bins}", row.data.len())));
        }
        groups.entry(angle_key(row.angle)).or_default().push(i);
    }
    if groups.is_empty() {
        return Err(Error::Input("timed sinogram has no rows".into()));
    }

    let per_angle: Vec<(f64, Vec<Vec<f64>>)> = groups
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|idx| -> Result<(f64, Vec<Vec<f64>>)> {
            let angle = sino.rows[idx[0]].angle;
            let mut times: Vec<f64> = idx.iter().map(|&i| sino.rows[i].timestamp).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            if times.len() < n {
                return Err(Error::Underdetermined(format!(
                    "angle {angle}° sampled at {} distinct times, basis has {n} functions",
                    times.len()
                )));
            }
            let mut design = DMatrix::zeros(idx.len(), n);
            for (s, &i) in idx.iter().enumerate() {
                for (j, v) in basis.eval_all(sino.rows[i].timestamp)?.into_iter().enumerate() {
                    design[(s, j)] = v;
                }
            }
            let svd = design.svd(true, true);
            let smax = svd.singular_values.max();
            let pinv = svd
                .pseudo_inverse(smax * 1e-12 * idx.len().max(n) as f64)
                .map_err(|e| Error::Underdetermined(e.to_string()))?;
            let mut omega = vec![vec![0.0; bins]; n];
            for (s, &i) in idx.iter().enumerate() {
                let data = &sino.rows[i].data;
                for (j, out) in omega.iter_mut().enumerate() {
                    let w = pinv[(j, s)];
                    if w != 0.0 {
                        out.iter_mut().zip(data).for_each(|(o, d)| *o += w * d);
                    }
                }
            }
            Ok((angle, omega))
        })
        .collect::<Result<_>>()?;

    let mut coeffs = vec![Vec::with_capacity(per_angle.len() * bins); n];
    for (_, omega) in &per_angle {
        for (j, row) in omega.iter().enumerate() {
            coeffs[j].extend_from_slice(row);
        }
    }
    Ok(ProjectionCoefficients {
        angles: per_angle.iter().map(|(a, _)| *a).collect(),
        bins,
        coeffs,
        basis: basis.clone(),
    })
}

/// Reconstructed coefficient images `w_i`, one per basis function.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVolumes {
    pub volumes: Vec<Volume>,
    pub basis: BasisSet,
    /// Number of static solves that produced `volumes`.
    pub solves: usize,
}

/// Solves `A w_i = ω_i` for every basis function with the standard static
/// reconstruction.
pub fn reconstruct_coeff_volumes(pc: &ProjectionCoefficients, geometry: &Geometry, config: &ReconConfig) -> Result<CoefficientVolumes> {
    reconstruct_coeff_volumes_with(pc, |sino| reconstruct_static(sino, geometry, config))
}

/// As [`reconstruct_coeff_volumes`] with a caller-supplied static solver.
pub fn reconstruct_coeff_volumes_with<F>(pc: &ProjectionCoefficients, solve: F) -> Result<CoefficientVolumes>
where
    F: Fn(&Sinogram) -> Result<Reconstruction> + Sync,
{
    if pc.coeffs.len() != pc.basis.len() {
        return Err(Error::Shape(format!(
            "{} coefficient sinograms for a basis of {}",
            pc.coeffs.len(),
            pc.basis.len()
        )));
    }
    let recs: Vec<Reconstruction> = (0..pc.coeffs.len())
        .into_par_iter()
        .map(|j| solve(&pc.sinogram(j)))
        .collect::<Result<_>>()?;
    let solves = recs.len();
    Ok(CoefficientVolumes {
        volumes: recs.into_iter().map(|r| r.volume).collect(),
        basis: pc.basis.clone(),
        solves,
    })
}

impl CoefficientVolumes {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            volumes: self.volumes.iter().map(|v| v.scaled(factor)).collect(),
            ..self.clone()
        }
    }

    fn dims(&self) -> (usize, usize) {
        self.volumes.first().map_or((0, 0), |v| (v.height, v.width))
    }
}

/// Voxel TAC `Σ_i w_i[pixel] ψ_i(t)` at each requested time.
pub fn synthesize_tac(cv: &CoefficientVolumes, pixel: (usize, usize), times: &[f64]) -> Result<Vec<f64>> {
    let (h, w) = cv.dims();
    let (r, c) = pixel;
    if r >= h || c >= w {
        return Err(Error::Index(format!("pixel ({r}, {c}) outside {h}x{w}")));
    }
    let weights: Vec<f64> = cv.volumes.iter().map(|v| v.get(r, c)).collect();
    times
        .iter()
        .map(|&t| Ok(dot(&weights, &cv.basis.eval_all(t)?)))
        .collect()
}

/// The first coefficient image, used as the CBCT-TST segmentation input.
pub fn first_coeff_image(cv: &CoefficientVolumes) -> Result<Volume> {
    cv.volumes
        .first()
        .cloned()
        .ok_or_else(|| Error::Input("no coefficient volumes".into()))
}

/// Per-pixel time-to-peak, baseline-subtracted peak and area under the curve.
#[derive(Clone, Debug, PartialEq)]
pub struct PerfusionMaps {
    /// seconds
    pub ttp: Volume,
    pub peak: Volume,
    /// attenuation·seconds
    pub auc: Volume,
}

/// Summaries of the synthesised TAC `s(t)` with baseline `b = min_t s(t)`:
/// `ttp = argmax s`, `peak = max s − b`, `auc = ∫ (s − b) dt` (trapezoid).
pub fn perfusion_surrogates(cv: &CoefficientVolumes, times: &[f64]) -> Result<PerfusionMaps> {
    if times.len() < 2 {
        return Err(Error::Input(format!("need at least 2 time samples, got {}", times.len())));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("time samples must be non-decreasing".into()));
    }
    let psi: Vec<Vec<f64>> = times.iter().map(|&t| cv.basis.eval_all(t)).collect::<Result<_>>()?;
    let (h, w) = cv.dims();
    let spacing = cv.volumes.first().map_or(1.0, |v| v.pixel_spacing);
    let mut ttp = Volume::zeros(h, w, spacing);
    let mut peak = Volume::zeros(h, w, spacing);
    let mut auc = Volume::zeros(h, w, spacing);
    let mut weights = vec![0.0; cv.volumes.len()];
    let mut curve = vec![0.0; times.len()];
    for i in 0..h * w {
        for (wt, v) in weights.iter_mut().zip(&cv.volumes) {
            *wt = v.data[i];
        }
        for (s, p) in curve.iter_mut().zip(&psi) {
            *s = dot(&weights, p);
        }
        let base = curve.iter().copied().fold(f64::INFINITY, f64::min);
        let (arg, max) = curve
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
        let area: f64 = times
            .windows(2)
            .zip(curve.windows(2))
            .map(|(t, s)| (t[1] - t[0]) * ((s[0] - base) + (s[1] - base)) / 2.0)
            .sum();
        ttp.data[i] = times[arg];
        peak.data[i] = max - base;
        auc.data[i] = area;
    }
    Ok(PerfusionMaps { ttp, peak, auc })
}
