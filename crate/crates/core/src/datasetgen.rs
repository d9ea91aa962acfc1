//! Synthetic multi-modality liver datasets.
//!
//! For every subject a phantom is drawn and three kinds of images are
//! produced, each paired with the phantom's liver mask:
//!
//! * `ct`: densely sampled, low-noise static reconstructions at several
//!   bolus phases,
//! * `cbct`: straightforward per-sweep reconstructions of the timed
//!   multi-sweep acquisition, noisier and optionally truncated,
//! * `cbct_tst`: first-coefficient images of the time separation technique,
//!   one per basis source.
//!
//! Optional test-only slices add a high-attenuation insert and angular
//! undersampling to provoke streak artefacts.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Volume;
use crate::phantom::{build_phantom, sample_volume, DynamicPhantom, PhantomConfig, Range};
use crate::projector::{forward_project, make_protocol, project_dynamic, Geometry, ScanProtocol, TimedSinogram};
use crate::recon::{reconstruct_static, ReconConfig};
use crate::segeval::Mask;
use crate::tensorio;
use crate::tst::{
    first_coeff_image, fit_projection_coeffs, flat_curve_library, harmonic_basis, prior_tac_library, reconstruct_coeff_volumes, svd_basis,
    uniform_grid, BasisSet, BasisSource,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Ct,
    Cbct,
    CbctTst,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Ct => "ct",
            Modality::Cbct => "cbct",
            Modality::CbctTst => "cbct_tst",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldScheme {
    KfoldLeaveOneOut,
    KfoldLeaveTwoOut,
}

impl FoldScheme {
    pub fn name(self) -> &'static str {
        match self {
            FoldScheme::KfoldLeaveOneOut => "kfold_leave_one_out",
            FoldScheme::KfoldLeaveTwoOut => "kfold_leave_two_out",
        }
    }
}

/// Per-subject perturbations applied to the template phantom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectVariation {
    /// Maximum shift of the liver centre, pixels.
    pub center_jitter: f64,
    /// Multiplier range for both liver semi-axes.
    pub axis_scale: Range,
    pub rotation_deg: Range,
    pub embolised_fraction: Range,
    pub vessel_count: [usize; 2],
}

impl Default for SubjectVariation {
    fn default() -> Self {
        Self {
            center_jitter: 1.5,
            axis_scale: [0.85, 1.0],
            rotation_deg: [-30.0, 30.0],
            embolised_fraction: [0.05, 0.2],
            vessel_count: [2, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    pub n_sweeps: usize,
    pub arc_degrees: f64,
    pub angular_step: f64,
    pub sweep_duration: f64,
    pub pause_duration: f64,
    pub alternate_direction: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        // ten alternating 200° sweeps in 52 s
        Self {
            n_sweeps: 10,
            arc_degrees: 200.0,
            angular_step: 0.8,
            sweep_duration: 4.0,
            pause_duration: 4.0 / 3.0,
            alternate_direction: true,
        }
    }
}

impl ProtocolParams {
    pub fn build(&self) -> Result<ScanProtocol> {
        make_protocol(
            self.n_sweeps,
            self.arc_degrees,
            self.angular_step,
            self.sweep_duration,
            self.pause_duration,
            self.alternate_direction,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtParams {
    pub images_per_subject: usize,
    pub angles: usize,
    pub noise_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbctParams {
    pub images_per_subject: usize,
    pub noise_sigma: f64,
    /// Detector half-width in mm.
    pub truncation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TstParams {
    pub bases: Vec<BasisSource>,
    pub n_basis: usize,
    pub grid_samples: usize,
    /// Prior curves per tissue class for SVD bases.
    pub library_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArtefactParams {
    pub enabled: bool,
    pub slices_per_subject: usize,
    /// Keep every n-th projection of each sweep.
    pub undersample: usize,
}

impl Default for CtParams {
    fn default() -> Self {
        Self {
            images_per_subject: 5,
            angles: 180,
            noise_sigma: 0.002,
        }
    }
}

impl Default for CbctParams {
    fn default() -> Self {
        Self {
            images_per_subject: 4,
            noise_sigma: 0.05,
            truncation: Some(30.0),
        }
    }
}

impl Default for TstParams {
    fn default() -> Self {
        Self {
            bases: vec![BasisSource::Harmonic, BasisSource::Svd],
            n_basis: 5,
            grid_samples: 256,
            library_size: 40,
        }
    }
}

impl Default for ArtefactParams {
    fn default() -> Self {
        Self {
            enabled: true,
            slices_per_subject: 1,
            undersample: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub n_subjects: usize,
    pub phantom: PhantomConfig,
    pub variation: SubjectVariation,
    pub protocol: ProtocolParams,
    pub ct: CtParams,
    pub cbct: CbctParams,
    pub tst: TstParams,
    pub recon: ReconConfig,
    pub artefacts: ArtefactParams,
    pub fold_schemes: Vec<FoldScheme>,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_subjects: 4,
            phantom: PhantomConfig::default(),
            variation: SubjectVariation::default(),
            protocol: ProtocolParams::default(),
            ct: CtParams::default(),
            cbct: CbctParams::default(),
            tst: TstParams::default(),
            recon: ReconConfig::default(),
            artefacts: ArtefactParams::default(),
            fold_schemes: vec![FoldScheme::KfoldLeaveOneOut, FoldScheme::KfoldLeaveTwoOut],
            seed: 0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::Config("a suite needs at least two subjects".into()));
        }
        if self.fold_schemes.contains(&FoldScheme::KfoldLeaveTwoOut) && self.n_subjects < 3 {
            return Err(Error::Config("leave-two-out folds need at least three subjects".into()));
        }
        let (ct, cbct, tst) = (self.ct.images_per_subject, self.cbct.images_per_subject, self.tst.bases.len());
        if !(ct >= cbct && cbct >= tst && tst >= 1) {
            return Err(Error::Config(format!(
                "per-subject counts must satisfy ct >= cbct >= cbct_tst >= 1, got {ct}, {cbct}, {tst}"
            )));
        }
        if cbct > self.protocol.n_sweeps {
            return Err(Error::Config("more CBCT images requested than sweeps".into()));
        }
        if self.ct.angles == 0 {
            return Err(Error::Config("CT needs at least one angle".into()));
        }
        if !(self.ct.noise_sigma >= 0.0 && self.cbct.noise_sigma >= 0.0) {
            return Err(Error::Config("noise levels must be >= 0".into()));
        }
        if self.artefacts.enabled && (self.artefacts.undersample == 0 || self.artefacts.slices_per_subject > cbct) {
            return Err(Error::Config(
                "artefact slices need undersample >= 1 and at most one slice per CBCT image".into(),
            ));
        }
        let v = &self.variation;
        for (name, r) in [
            ("axis_scale", v.axis_scale),
            ("rotation_deg", v.rotation_deg),
            ("embolised_fraction", v.embolised_fraction),
        ] {
            if !(r[0] <= r[1]) {
                return Err(Error::Config(format!("variation.{name} range is not ordered")));
            }
        }
        if v.vessel_count[0] > v.vessel_count[1] || !(v.center_jitter >= 0.0) {
            return Err(Error::Config("variation.vessel_count must be ordered, center_jitter >= 0".into()));
        }
        self.recon.validate()?;
        self.protocol.build()?;
        Ok(())
    }
}

/// splitmix64 over (master, tag, index); independent of generation order.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_PHANTOM: u64 = 1;
const TAG_VARIATION: u64 = 2;
const TAG_CT_NOISE: u64 = 3;
const TAG_CBCT_NOISE: u64 = 4;
const TAG_LIBRARY: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSeeds {
    pub subject: String,
    pub phantom: u64,
    pub variation: u64,
    pub ct_noise: u64,
    pub cbct_noise: u64,
    pub library: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRole {
    pub fold: usize,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject: String,
    pub modality: Modality,
    pub index: usize,
    /// Paths relative to the suite root.
    pub image: String,
    pub mask: String,
    /// What the image shows: bolus phase, sweep or basis source.
    pub source: String,
    pub test_only: bool,
    /// For artefact slices, the index of the clean CBCT entry they mirror.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs_with: Option<usize>,
    pub folds: BTreeMap<String, Vec<FoldRole>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub seed_lineage: Vec<SubjectSeeds>,
    pub folds: BTreeMap<String, Vec<Fold>>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn count(&self, modality: Modality, include_test_only: bool) -> usize {
        self.entries
            .iter()
            .filter(|e| e.modality == modality && (include_test_only || !e.test_only))
            .count()
    }
}

/// An image and its ground-truth mask, before being written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub modality: Modality,
    pub index: usize,
    pub source: String,
    pub image: Volume,
    pub mask: Mask,
    pub test_only: bool,
    pub pairs_with: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SubjectData {
    pub id: String,
    pub seeds: SubjectSeeds,
    pub phantom: DynamicPhantom,
    pub phantom_config: PhantomConfig,
    pub slices: Vec<Slice>,
}

#[derive(Clone, Debug)]
pub struct SuiteData {
    pub config: SuiteConfig,
    pub subjects: Vec<SubjectData>,
}

pub fn subject_id(k: usize) -> String {
    format!("subject_{k:02}")
}

pub fn make_folds(subjects: &[String], scheme: FoldScheme) -> Result<Vec<Fold>> {
    let n = subjects.len();
    let test_sets: Vec<Vec<usize>> = match scheme {
        FoldScheme::KfoldLeaveOneOut => {
            if n < 2 {
                return Err(Error::Config("leave-one-out needs at least two subjects".into()));
            }
            (0..n).map(|i| vec![i]).collect()
        }
        FoldScheme::KfoldLeaveTwoOut => {
            if n < 3 {
                return Err(Error::Config("leave-two-out needs at least three subjects".into()));
            }
            (0..n).flat_map(|i| (i + 1..n).map(move |j| vec![i, j])).collect()
        }
    };
    Ok(test_sets
        .into_iter()
        .enumerate()
        .map(|(index, test)| Fold {
            index,
            train: (0..n).filter(|i| !test.contains(i)).map(|i| subjects[i].clone()).collect(),
            test: test.iter().map(|&i| subjects[i].clone()).collect(),
        })
        .collect())
}

fn subject_config(config: &SuiteConfig, seeds: &SubjectSeeds) -> PhantomConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.variation);
    let v = &config.variation;
    let mut draw = |r: Range| if r[1] > r[0] { rng.random_range(r[0]..=r[1]) } else { r[0] };
    let scale = draw(v.axis_scale);
    let rotation = draw(v.rotation_deg);
    let embolised = draw(v.embolised_fraction);
    let dr = draw([-v.center_jitter, v.center_jitter]);
    let dc = draw([-v.center_jitter, v.center_jitter]);
    let vessels = rng.random_range(v.vessel_count[0]..=v.vessel_count[1]);
    let mut pc = config.phantom.clone();
    pc.seed = seeds.phantom;
    pc.liver.semi_axes = [pc.liver.semi_axes[0] * scale, pc.liver.semi_axes[1] * scale];
    pc.liver.rotation_deg += rotation;
    pc.liver.center = [pc.liver.center[0] + dr, pc.liver.center[1] + dc];
    pc.embolised_fraction = embolised;
    pc.vessel_count = vessels;
    pc.metal_insert = false;
    pc
}

fn geometry(pc: &PhantomConfig) -> Geometry {
    Geometry::for_image(pc.height, pc.width, pc.pixel_spacing)
}

/// Evenly spread picks of `count` indices from `0..n`.
fn spread(count: usize, n: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![0; count];
    }
    (0..count)
        .map(|k| ((k * (n - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Keeps every `stride`-th projection of each sweep.
fn undersample(sino: &TimedSinogram, stride: usize) -> TimedSinogram {
    let per_sweep = sino.protocol.angles_per_sweep();
    let keep: Vec<bool> = (0..sino.rows.len()).map(|i| (i % per_sweep) % stride == 0).collect();
    let mut out = sino.clone();
    out.rows = sino.rows.iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r.clone()).collect();
    out.protocol.schedule = sino.protocol.schedule.iter().zip(&keep).filter(|(_, &k)| k).map(|(e, _)| *e).collect();
    out
}

fn build_basis(config: &SuiteConfig, pc: &PhantomConfig, source: BasisSource, t_total: f64, library_seed: u64) -> Result<BasisSet> {
    let grid = uniform_grid(t_total, config.tst.grid_samples);
    match source {
        BasisSource::Harmonic => harmonic_basis(&grid, t_total),
        BasisSource::Svd => {
            let mut library = prior_tac_library(&[&pc.liver_tac, &pc.vessel_tac], config.tst.library_size, &grid, library_seed)?;
            // non-enhancing tissue (embolised, gallbladder) also appears in prior scans
            let levels = [pc.gallbladder_baseline.min(pc.liver_tac.baseline[0]), pc.vessel_tac.baseline[1]];
            library.extend(flat_curve_library(config.tst.library_size, levels, &grid));
            svd_basis(&library, &grid, config.tst.n_basis)
        }
    }
}

fn generate_subject(config: &SuiteConfig, k: usize) -> Result<SubjectData> {
    let id = subject_id(k);
    let seeds = SubjectSeeds {
        subject: id.clone(),
        phantom: derive_seed(config.seed, TAG_PHANTOM, k as u64),
        variation: derive_seed(config.seed, TAG_VARIATION, k as u64),
        ct_noise: derive_seed(config.seed, TAG_CT_NOISE, k as u64),
        cbct_noise: derive_seed(config.seed, TAG_CBCT_NOISE, k as u64),
        library: derive_seed(config.seed, TAG_LIBRARY, k as u64),
    };
    let pc = subject_config(config, &seeds);
    let phantom = build_phantom(&pc)?;
    let mask = Mask::from_bools(phantom.height, phantom.width, &phantom.liver_mask())?;
    let protocol = config.protocol.build()?;
    let t_total = protocol.total_duration();
    let mut slices = Vec::new();

    // CT: static, dense, low noise, spread over the bolus passage
    let ct_geom = geometry(&pc);
    let ct_angles: Vec<f64> = (0..config.ct.angles).map(|a| a as f64 * 180.0 / config.ct.angles as f64).collect();
    let mut ct_rng = ChaCha8Rng::seed_from_u64(seeds.ct_noise);
    let normal = rand_distr::Normal::new(0.0, config.ct.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    for i in 0..config.ct.images_per_subject {
        let t = t_total * (i as f64 + 0.5) / config.ct.images_per_subject as f64;
        let mut sino = forward_project(&sample_volume(&phantom, t)?, &ct_geom, &ct_angles)?;
        if config.ct.noise_sigma > 0.0 {
            sino.data.iter_mut().for_each(|v| *v += rand_distr::Distribution::sample(&normal, &mut ct_rng));
        }
        let rec = reconstruct_static(&sino, &ct_geom, &config.recon)?;
        slices.push(Slice {
            modality: Modality::Ct,
            index: i,
            source: format!("phase_t={t:.3}"),
            image: rec.volume,
            mask: mask.clone(),
            test_only: false,
            pairs_with: None,
        });
    }

    // CBCT: straightforward per-sweep reconstructions
    let mut cbct_geom = geometry(&pc);
    cbct_geom.truncation = config.cbct.truncation;
    let sino = project_dynamic(&phantom, &protocol, &cbct_geom, config.cbct.noise_sigma, seeds.cbct_noise)?;
    let sweeps = spread(config.cbct.images_per_subject, protocol.n_sweeps);
    for (i, &s) in sweeps.iter().enumerate() {
        let rec = reconstruct_static(&sino.sweep(s), &cbct_geom, &config.recon)?;
        slices.push(Slice {
            modality: Modality::Cbct,
            index: i,
            source: format!("sweep_{s}"),
            image: rec.volume,
            mask: mask.clone(),
            test_only: false,
            pairs_with: None,
        });
    }

    // CBCT TST: first coefficient image per basis source
    for (i, &source) in config.tst.bases.iter().enumerate() {
        let basis = build_basis(config, &pc, source, t_total, seeds.library)?;
        let pc_coeffs = fit_projection_coeffs(&sino, &basis)?;
        let cv = reconstruct_coeff_volumes(&pc_coeffs, &cbct_geom, &config.recon)?;
        slices.push(Slice {
            modality: Modality::CbctTst,
            index: i,
            source: source.name().to_string(),
            image: first_coeff_image(&cv)?,
            mask: mask.clone(),
            test_only: false,
            pairs_with: None,
        });
    }

    Ok(SubjectData {
        id,
        seeds,
        phantom,
        phantom_config: pc,
        slices,
    })
}

/// Builds every subject's clean slices in memory.
pub fn build_suite(config: &SuiteConfig) -> Result<SuiteData> {
    config.validate()?;
    let subjects = (0..config.n_subjects)
        .into_par_iter()
        .map(|k| generate_subject(config, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteData {
        config: config.clone(),
        subjects,
    })
}

/// Adds test-only CBCT slices of each subject's phantom with a metal-like
/// insert, reconstructed from angularly undersampled sweeps.
pub fn inject_artifact_slices(suite: &mut SuiteData) -> Result<()> {
    let config = suite.config.clone();
    if !config.artefacts.enabled {
        return Ok(());
    }
    let extra: Vec<Vec<Slice>> = suite
        .subjects
        .par_iter()
        .map(|subject| -> Result<Vec<Slice>> {
            let pc = PhantomConfig {
                metal_insert: true,
                ..subject.phantom_config.clone()
            };
            let phantom = build_phantom(&pc)?;
            let mask = Mask::from_bools(phantom.height, phantom.width, &phantom.liver_mask())?;
            let protocol = config.protocol.build()?;
            let mut geom = geometry(&pc);
            geom.truncation = config.cbct.truncation;
            let sino = project_dynamic(&phantom, &protocol, &geom, config.cbct.noise_sigma, subject.seeds.cbct_noise)?;
            let sparse = undersample(&sino, config.artefacts.undersample);
            let sweeps = spread(config.cbct.images_per_subject, protocol.n_sweeps);
            (0..config.artefacts.slices_per_subject)
                .map(|i| {
                    let s = sweeps[i];
                    let rec = reconstruct_static(&sparse.sweep(s), &geom, &config.recon)?;
                    Ok(Slice {
                        modality: Modality::Cbct,
                        index: config.cbct.images_per_subject + i,
                        source: format!("artefact_sweep_{s}"),
                        image: rec.volume,
                        mask: mask.clone(),
                        test_only: true,
                        pairs_with: Some(i),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    for (subject, slices) in suite.subjects.iter_mut().zip(extra) {
        subject.slices.extend(slices);
    }
    Ok(())
}

fn slice_paths(subject: &str, slice: &Slice) -> (String, String) {
    let stem = format!("{subject}/{}/{:03}", slice.modality.name(), slice.index);
    (format!("{stem}.tsr"), format!("{stem}.mask.tsr"))
}

/// Manifest for the slices currently held by `suite`.
pub fn manifest(suite: &SuiteData) -> Result<DatasetManifest> {
    let ids: Vec<String> = suite.subjects.iter().map(|s| s.id.clone()).collect();
    let mut folds = BTreeMap::new();
    for &scheme in &suite.config.fold_schemes {
        folds.insert(scheme.name().to_string(), make_folds(&ids, scheme)?);
    }
    let mut entries = Vec::new();
    for subject in &suite.subjects {
        for slice in &subject.slices {
            let (image, mask) = slice_paths(&subject.id, slice);
            let mut roles = BTreeMap::new();
            for (scheme, scheme_folds) in &folds {
                let list: Vec<FoldRole> = scheme_folds
                    .iter()
                    .filter_map(|f| {
                        if f.test.contains(&subject.id) {
                            Some(FoldRole {
                                fold: f.index,
                                role: Role::Test,
                            })
                        } else if !slice.test_only {
                            Some(FoldRole {
                                fold: f.index,
                                role: Role::Train,
                            })
                        } else {
                            None
                        }
                    })
                    .collect();
                roles.insert(scheme.clone(), list);
            }
            entries.push(ManifestEntry {
                subject: subject.id.clone(),
                modality: slice.modality,
                index: slice.index,
                image,
                mask,
                source: slice.source.clone(),
                test_only: slice.test_only,
                pairs_with: slice.pairs_with,
                folds: roles,
            });
        }
    }
    Ok(DatasetManifest {
        seed: suite.config.seed,
        seed_lineage: suite.subjects.iter().map(|s| s.seeds.clone()).collect(),
        folds,
        entries,
    })
}

/// Writes `<out>/<subject>/<modality>/<index>.tsr` with sibling `.mask.tsr`
/// files and `<out>/manifest.json`.
pub fn write_suite(suite: &SuiteData, out: &Path) -> Result<DatasetManifest> {
    let manifest = manifest(suite)?;
    for subject in &suite.subjects {
        for slice in &subject.slices {
            let (image, mask) = slice_paths(&subject.id, slice);
            tensorio::write_volume(&out.join(image), &slice.image)?;
            tensorio::write_mask(&out.join(mask), &slice.mask)?;
        }
    }
    tensorio::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Builds the suite, injects artefact slices when enabled and writes it.
pub fn generate_suite(config: &SuiteConfig, out: &Path) -> Result<DatasetManifest> {
    let mut suite = build_suite(config)?;
    inject_artifact_slices(&mut suite)?;
    write_suite(&suite, out)
}

/// Standard deviation over the pixels where `mask` is set.
pub fn masked_std(v: &Volume, mask: &[bool]) -> f64 {
    let vals: Vec<f64> = v.data.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| *x).collect();
    crate::segeval::population_variance(&vals).map_or(0.0, f64::sqrt)
}
