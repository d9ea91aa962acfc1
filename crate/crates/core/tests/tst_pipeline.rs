use std::collections::BTreeMap;

use perfrec::grid::correlation;
use perfrec::phantom::{build_phantom, eval_tac, sample_volume, DynamicPhantom, LiverShape, PhantomConfig, Tac, TissueLabel};
use perfrec::projector::{forward_project, make_protocol, project_dynamic, Geometry, ScanProtocol, TimedSinogram};
use perfrec::recon::{reconstruct_static, ReconConfig};
use perfrec::tst::{
    fit_projection_coeffs, flat_curve_library, harmonic_basis, prior_tac_library, reconstruct_coeff_volumes,
    svd_basis, synthesize_tac, uniform_grid,
};

const N: usize = 32;

fn config(seed: u64) -> PhantomConfig {
    PhantomConfig {
        height: N,
        width: N,
        liver: LiverShape {
            center: [16.0, 16.0],
            semi_axes: [9.0, 11.0],
            rotation_deg: 20.0,
            harmonic_jitter: 0.05,
        },
        vessel_count: 2,
        seed,
        ..PhantomConfig::default()
    }
}

fn protocol() -> ScanProtocol {
    make_protocol(8, 180.0, 3.0, 4.0, 1.0, true).unwrap()
}

fn solver() -> ReconConfig {
    ReconConfig {
        max_iters: 1500,
        tolerance: 1e-12,
        ..ReconConfig::default()
    }
}

fn with_curves(base: DynamicPhantom, f: impl Fn(TissueLabel) -> Tac) -> DynamicPhantom {
    let tacs: BTreeMap<_, _> = base.present_labels().into_iter().map(|l| (l, f(l))).collect();
    base.with_tacs(tacs).unwrap()
}

fn in_span(base: DynamicPhantom, period: f64) -> DynamicPhantom {
    with_curves(base, |l| {
        let (baseline, c) = match l {
            TissueLabel::Background => return Tac::Constant { baseline: 0.0 },
            TissueLabel::Liver => (0.2, [0.04, -0.02, 0.01, 0.0]),
            TissueLabel::Vessel => (0.3, [0.1, 0.05, -0.04, 0.02]),
            _ => (0.12, [0.0, 0.01, 0.0, 0.0]),
        };
        Tac::Harmonic {
            baseline,
            period,
            coefficients: c,
        }
    })
}

fn scaled(sino: &TimedSinogram, factor: f64) -> TimedSinogram {
    let mut out = sino.clone();
    for row in &mut out.rows {
        row.data.iter_mut().for_each(|v| *v *= factor);
    }
    out
}

#[test]
fn static_phantom_gives_flat_curves() {
    let protocol = protocol();
    let t_total = protocol.total_duration();
    let phantom = with_curves(build_phantom(&config(2)).unwrap(), |l| Tac::Constant {
        baseline: if l == TissueLabel::Background { 0.0 } else { 0.1 + 0.05 * l.id() as f64 },
    });
    let geometry = Geometry::for_image(N, N, 1.0);
    let sino = project_dynamic(&phantom, &protocol, &geometry, 0.0, 0).unwrap();
    let basis = harmonic_basis(&uniform_grid(t_total, 256), t_total).unwrap();
    let pc = fit_projection_coeffs(&sino, &basis).unwrap();
    let cv = reconstruct_coeff_volumes(&pc, &geometry, &solver()).unwrap();
    let times = uniform_grid(t_total, 50);
    for r in 0..N {
        for c in 0..N {
            if phantom.label(r, c) != TissueLabel::Liver {
                continue;
            }
            let tac = synthesize_tac(&cv, (r, c), &times).unwrap();
            let mean = tac.iter().sum::<f64>() / tac.len() as f64;
            let spread = tac.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            assert!(spread <= 1e-3 * mean, "({r},{c}) spread {spread:e}");
        }
    }
}

#[test]
fn coefficients_are_linear_in_the_data() {
    let protocol = protocol();
    let t_total = protocol.total_duration();
    let phantom = in_span(build_phantom(&config(4)).unwrap(), t_total);
    let geometry = Geometry::for_image(N, N, 1.0);
    let sino = project_dynamic(&phantom, &protocol, &geometry, 0.0, 0).unwrap();
    let basis = harmonic_basis(&uniform_grid(t_total, 128), t_total).unwrap();
    let once = fit_projection_coeffs(&sino, &basis).unwrap();
    let twice = fit_projection_coeffs(&scaled(&sino, 2.0), &basis).unwrap();
    for (a, b) in once.coeffs.iter().flatten().zip(twice.coeffs.iter().flatten()) {
        assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn harmonic_first_coefficient_is_the_temporal_mean() {
    let protocol = protocol();
    let t_total = protocol.total_duration();
    let phantom = in_span(build_phantom(&config(6)).unwrap(), t_total);
    let geometry = Geometry::for_image(N, N, 1.0);
    let sino = project_dynamic(&phantom, &protocol, &geometry, 0.0, 0).unwrap();
    let grid = uniform_grid(t_total, 256);
    let basis = harmonic_basis(&grid, t_total).unwrap();
    let psi1 = basis.functions[0][0];
    assert!(basis.functions[0].iter().all(|&v| (v - psi1).abs() < 1e-12), "first function is constant");
    let cv = reconstruct_coeff_volumes(&fit_projection_coeffs(&sino, &basis).unwrap(), &geometry, &solver()).unwrap();

    // the other harmonics sum to zero over the grid, so the grid mean of an
    // in-span curve is w1 ψ1
    let mut worst: f64 = 0.0;
    for r in 0..N {
        for c in 0..N {
            let tac = phantom.tac_at(r, c);
            let mean = grid.iter().map(|&t| eval_tac(tac, t).unwrap()).sum::<f64>() / grid.len() as f64;
            worst = worst.max((cv.volumes[0].get(r, c) * psi1 - mean).abs());
        }
    }
    assert!(worst <= 1e-3, "worst {worst:e}");
}

#[test]
fn svd_first_coefficient_tracks_static_image() {
    let mut cfg = config(8);
    cfg.liver_tac.amplitude = [0.004, 0.008];
    cfg.vessel_tac.amplitude = [0.02, 0.04];
    let phantom = build_phantom(&cfg).unwrap();
    let protocol = protocol();
    let t_total = protocol.total_duration();
    let geometry = Geometry::for_image(N, N, 1.0);
    let recon = ReconConfig {
        max_iters: 200,
        ..ReconConfig::default()
    };
    let sino = project_dynamic(&phantom, &protocol, &geometry, 0.0, 0).unwrap();
    let grid = uniform_grid(t_total, 256);
    let mut library = prior_tac_library(&[&cfg.liver_tac, &cfg.vessel_tac], 20, &grid, 31).unwrap();
    library.extend(flat_curve_library(20, [0.05, 0.35], &grid));
    let basis = svd_basis(&library, &grid, 5).unwrap();
    let cv = reconstruct_coeff_volumes(&fit_projection_coeffs(&sino, &basis).unwrap(), &geometry, &recon).unwrap();

    let frames: Vec<_> = grid.iter().step_by(8).map(|&t| sample_volume(&phantom, t).unwrap()).collect();
    let mut mean = frames[0].clone();
    for f in &frames[1..] {
        mean.data.iter_mut().zip(&f.data).for_each(|(m, v)| *m += v);
    }
    mean.data.iter_mut().for_each(|m| *m /= frames.len() as f64);
    let angles: Vec<f64> = (0..protocol.angles_per_sweep()).map(|k| k as f64 * protocol.angular_step).collect();
    let reference = reconstruct_static(&forward_project(&mean, &geometry, &angles).unwrap(), &geometry, &recon).unwrap();
    let corr = correlation(&cv.volumes[0].data, &reference.volume.data);
    assert!(corr.abs() >= 0.9, "corr {corr}");
}
