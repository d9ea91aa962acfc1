//! Iterative least-squares reconstruction of `A x = p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dot, norm};
use crate::projector::{Geometry, LinearOperator, Projector, Sinogram, TimedSinogram};

pub use crate::grid::Volume;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Cgls,
    Sirt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub solver: Solver,
    pub max_iters: usize,
    /// Relative residual `‖A x − p‖ / ‖p‖` at which iteration stops.
    pub tolerance: f64,
    pub nonneg_clamp: bool,
    /// Weight λ of the optional `λ‖x‖²` penalty (CGLS only).
    #[serde(default)]
    pub tikhonov: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Cgls,
            max_iters: 50,
            tolerance: 1e-6,
            nonneg_clamp: false,
            tikhonov: 0.0,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if !(self.tikhonov >= 0.0) {
            return Err(Error::Config("tikhonov weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub volume: Volume,
    /// `‖A x_k − p‖` for k = 0 (zero image) up to the last iterate; with a
    /// Tikhonov weight the penalty term is included.
    pub residuals: Vec<f64>,
}

impl Reconstruction {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// CGLS on `min ‖A x − b‖² + λ‖x‖²` from a zero start.
pub fn cgls<A: LinearOperator + ?Sized>(op: &A, b: &[f64], max_iters: usize, tolerance: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = op.cols();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = norm(b);
    let mut history = vec![b_norm];
    if b_norm == 0.0 {
        return (x, history);
    }
    let mut s = vec![0.0; n];
    op.apply_adjoint(&r, &mut s);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    let mut q = vec![0.0; op.rows()];

    for _ in 0..max_iters {
        if gamma == 0.0 {
            break;
        }
        op.apply(&p, &mut q);
        let delta = dot(&q, &q) + lambda * dot(&p, &p);
        if delta == 0.0 {
            break;
        }
        let alpha = gamma / delta;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        op.apply_adjoint(&r, &mut s);
        if lambda > 0.0 {
            for (si, xi) in s.iter_mut().zip(&x) {
                *si -= lambda * xi;
            }
        }
        let gamma_next = dot(&s, &s);
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        let res = (dot(&r, &r) + lambda * dot(&x, &x)).sqrt();
        history.push(res);
        // stop on the data residual or, for inconsistent data, on the
        // normal-equation residual
        if res <= tolerance * b_norm || gamma.sqrt() <= tolerance * gamma0.sqrt() {
            break;
        }
    }
    (x, history)
}

/// Simultaneous iterative reconstruction with row/column-sum normalisation.
pub fn sirt<A: LinearOperator + ?Sized>(op: &A, b: &[f64], max_iters: usize, tolerance: f64, clamp: bool) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (op.rows(), op.cols());
    let mut row_sums = vec![0.0; m];
    op.apply(&vec![1.0; n], &mut row_sums);
    let mut col_sums = vec![0.0; n];
    op.apply_adjoint(&vec![1.0; m], &mut col_sums);
    let inv = |v: f64| if v > 0.0 { 1.0 / v } else { 0.0 };

    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    let mut history = vec![b_norm];
    if b_norm == 0.0 {
        return (x, history);
    }
    let mut ax = vec![0.0; m];
    let mut r = b.to_vec();
    let mut upd = vec![0.0; n];
    for _ in 0..max_iters {
        for (ri, rs) in r.iter_mut().zip(&row_sums) {
            *ri *= inv(*rs);
        }
        op.apply_adjoint(&r, &mut upd);
        for ((xi, ui), cs) in x.iter_mut().zip(&upd).zip(&col_sums) {
            *xi += ui * inv(*cs);
            if clamp && *xi < 0.0 {
                *xi = 0.0;
            }
        }
        op.apply(&x, &mut ax);
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(&ax) {
            *ri = bi - ai;
        }
        let res = norm(&r);
        history.push(res);
        if res <= tolerance * b_norm {
            break;
        }
    }
    (x, history)
}

fn check_sinogram(sino: &Sinogram, geometry: &Geometry) -> Result<()> {
    if sino.angles.is_empty() || sino.data.is_empty() {
        return Err(Error::Input("no projection rows to reconstruct".into()));
    }
    if sino.bins != geometry.detector_bins || sino.data.len() != sino.angles.len() * sino.bins {
        return Err(Error::Shape(format!(
            "sinogram with {} angles x {} bins ({} values) does not match {} detector bins",
            sino.angles.len(),
            sino.bins,
            sino.data.len(),
            geometry.detector_bins
        )));
    }
    if sino.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("projection data contains NaN or infinite values".into()));
    }
    Ok(())
}

/// Treats every row as acquired at the same instant and solves the static
/// problem with the configured solver.
pub fn reconstruct_static(sino: &Sinogram, geometry: &Geometry, config: &ReconConfig) -> Result<Reconstruction> {
    config.validate()?;
    check_sinogram(sino, geometry)?;
    let op = Projector::new(geometry, &sino.angles)?;
    let (mut x, residuals) = match config.solver {
        Solver::Cgls => cgls(&op, &sino.data, config.max_iters, config.tolerance, config.tikhonov),
        Solver::Sirt => sirt(&op, &sino.data, config.max_iters, config.tolerance, config.nonneg_clamp),
    };
    if config.nonneg_clamp {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(Reconstruction {
        volume: Volume::from_vec(geometry.height, geometry.width, geometry.pixel_spacing, x)?,
        residuals,
    })
}

/// Straightforward reconstruction: one static solve per sweep.
pub fn reconstruct_sweeps(sino: &TimedSinogram, config: &ReconConfig) -> Result<Vec<Reconstruction>> {
    let n_sweeps = sino.protocol.n_sweeps;
    (0..n_sweeps)
        .into_par_iter()
        .map(|k| {
            let rows = sino.sweep(k);
            if rows.angles.is_empty() {
                return Err(Error::Input(format!("sweep {k} has no projection rows")));
            }
            reconstruct_static(&rows, &sino.geometry, config)
        })
        .collect()
}

/// Residual history as `iter,residual` CSV text.
pub fn residual_csv(residuals: &[f64]) -> String {
    let mut out = String::from("iter,residual\n");
    for (i, r) in residuals.iter().enumerate() {
        out.push_str(&format!("{i},{r:e}\n"));
    }
    out
}
