//! End-to-end pipelines: von Mises-Fisher densities, the sliced CDT
//! interpolations through both spherical transforms, synthetic dataset
//! generation, sliced-CDT feature extraction and cross-validated linear
//! classification.

use crate::classify::{self, ClassifierKind};
use crate::error::{CoreError, Result};
use crate::geometry::UnitVector;
use crate::harmonic::{SemicircleTransform, VerticalSliceTransform};
use crate::inversion::{pd_invert, PdParams};
use crate::ot1d::{ccdt, cdt, pushforward_density_at, Flavor, Measure1D};
use crate::quadrature::{GridDensity, SphereGrid};
use crate::rng::SplitMix64;
use crate::sliced::{semicircle_row_measure, vslice_row_measure};
use crate::util::parallel_map;
use std::f64::consts::{PI, TAU};

/// One von Mises-Fisher component.
#[derive(Debug, Clone)]
pub struct VmfTerm {
    pub weight: f64,
    pub kappa: f64,
    pub mean: UnitVector,
}

/// A vMF mixture with optional symmetrization at the equatorial plane.
#[derive(Debug, Clone)]
pub struct VmfSpec {
    pub terms: Vec<VmfTerm>,
    pub symmetrize: bool,
}

impl VmfSpec {
    pub fn single(kappa: f64, mean: UnitVector) -> Self {
        Self {
            terms: vec![VmfTerm {
                weight: 1.0,
                kappa,
                mean,
            }],
            symmetrize: false,
        }
    }

    pub fn mixture(terms: Vec<VmfTerm>) -> Result<Self> {
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::domain(format!("mixture weights sum to {total}")));
        }
        Ok(Self {
            terms,
            symmetrize: false,
        })
    }

    pub fn symmetrized(mut self) -> Self {
        self.symmetrize = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(CoreError::domain(
                "vMF spec needs at least one term".to_string(),
            ));
        }
        for t in &self.terms {
            if !(t.kappa > 0.0) {
                return Err(CoreError::domain(format!(
                    "concentration {} must be > 0",
                    t.kappa
                )));
            }
            if t.weight < 0.0 {
                return Err(CoreError::domain(
                    "mixture weights must be nonnegative".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Pointwise density value; the normalization kappa/(4 pi sinh kappa)
    /// is evaluated as kappa e^{kappa(d-1)} / (2 pi (1 - e^{-2 kappa}))
    /// which neither overflows nor cancels for any kappa > 0.
    pub fn density_at(&self, xi: &UnitVector) -> f64 {
        let eval = |point: &UnitVector| -> f64 {
            self.terms
                .iter()
                .map(|t| {
                    let d = t.mean.dot(point).clamp(-1.0, 1.0);
                    let denom = -(-2.0 * t.kappa).exp_m1();
                    t.weight * t.kappa * (t.kappa * (d - 1.0)).exp() / (TAU * denom)
                })
                .sum()
        };
        if self.symmetrize {
            0.5 * (eval(xi) + eval(&xi.mirror_equator()))
        } else {
            eval(xi)
        }
    }
}

/// Samples the (mixture) density onto a sphere grid.
pub fn vmf_density(spec: &VmfSpec, grid: &SphereGrid) -> Result<GridDensity> {
    spec.validate()?;
    let values = grid.nodes.iter().map(|xi| spec.density_at(xi)).collect();
    GridDensity::new(grid.meta(), values)
}

/// Inversion mode of the sliced-CDT interpolations.
#[derive(Debug, Clone)]
pub enum InterpMode {
    /// truncated Moore-Penrose pseudoinverse (may dip negative)
    Pinv,
    /// KL-regularized primal-dual inversion (lands exactly in the simplex)
    Regularized(PdParams),
}

/// Turns a clipped slice into a strictly positive CDT reference by
/// flooring zeros at a tiny fraction of the peak and renormalizing.
fn ensure_positive_reference(measure: Measure1D) -> Result<Measure1D> {
    match &measure.repr {
        crate::ot1d::Repr::Density {
            nodes,
            weights,
            values,
        } => {
            let peak = values.iter().cloned().fold(0.0f64, f64::max);
            if !(peak > 0.0) {
                return Err(CoreError::numeric(
                    "reference slice has no positive part".to_string(),
                ));
            }
            let floor = 1e-12 * peak;
            if values.iter().all(|&v| v >= floor) {
                return Ok(measure);
            }
            let floored: Vec<f64> = values.iter().map(|&v| v.max(floor)).collect();
            let (fixed, _) =
                Measure1D::density_renormalized(measure.flavor, nodes, weights, &floored)?;
            Ok(fixed)
        }
        _ => Ok(measure),
    }
}

/// Internal refinement factor for the per-slice transport: transform rows
/// are (trigonometric) polynomials in the slice variable, so they can be
/// evaluated exactly on a grid this much finer before running the CDT.
const SLICE_REFINE: usize = 8;

/// Sliced-CDT interpolation through the vertical slice transform:
/// interval displacement interpolation per psi row on an exactly refined
/// latitude grid, read back at the cylinder nodes, then inversion.
pub fn vcdt_interpolate(
    vt: &VerticalSliceTransform,
    mu: &GridDensity,
    nu: &GridDensity,
    delta: f64,
    mode: &InterpMode,
) -> Result<GridDensity> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(CoreError::domain(format!("delta {delta} outside [0, 1]")));
    }
    let fine = crate::quadrature::gauss_legendre(SLICE_REFINE * (vt.bandlimit() + 1) - 1);
    let rows_mu = vt.forward_on_t_nodes(mu, &fine.nodes)?;
    let rows_nu = vt.forward_on_t_nodes(nu, &fine.nodes)?;
    let np = vt.cylinder.psis.len();
    let nt = vt.cylinder.ts.len();
    let mut h = vec![0.0; vt.cylinder.len()];
    for i in 0..np {
        let scaled_mu: Vec<f64> = rows_mu[i].iter().map(|&v| v * TAU).collect();
        let scaled_nu: Vec<f64> = rows_nu[i].iter().map(|&v| v * TAU).collect();
        let (ref_raw, _) = Measure1D::density_renormalized(
            Flavor::Interval,
            &fine.nodes,
            &fine.weights,
            &scaled_mu,
        )?;
        let reference = ensure_positive_reference(ref_raw)?;
        let (subject, _) = Measure1D::density_renormalized(
            Flavor::Interval,
            &fine.nodes,
            &fine.weights,
            &scaled_nu,
        )?;
        let disp = cdt(&subject, &reference)?.scaled(delta);
        let mut values = pushforward_density_at(&disp, &reference, &vt.cylinder.ts)?;
        // exact unit mass per slice keeps the inversion data consistent
        let mass: f64 = values
            .iter()
            .zip(&vt.cylinder.ring_weights)
            .map(|(&v, &w)| v * w)
            .sum();
        if !(mass > 0.0) {
            return Err(CoreError::numeric(
                "interpolated slice lost all mass".to_string(),
            ));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        for j in 0..nt {
            // back to the transform scale: rows of V f carry 1/(2 pi)
            h[vt.cylinder.node_index(i, j)] = values[j] / TAU;
        }
    }
    let h = GridDensity::new(vt.cylinder.meta(), h)?;
    match mode {
        InterpMode::Pinv => vt.pseudo_inverse(&h),
        InterpMode::Regularized(params) => {
            let sol = pd_invert(vt, &h.values, params)?;
            GridDensity::new(vt.sphere().meta(), sol.primal)
        }
    }
}

/// Sliced-CDT interpolation through the semicircle transform: circular
/// displacement interpolation per zenith on an exactly refined gamma
/// grid, read back at the SO(3) nodes, then inversion.
pub fn wcdt_interpolate(
    st: &SemicircleTransform,
    mu: &GridDensity,
    nu: &GridDensity,
    delta: f64,
    mode: &InterpMode,
) -> Result<GridDensity> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(CoreError::domain(format!("delta {delta} outside [0, 1]")));
    }
    let gl = st.so3.gammas.len();
    let fine_count = SLICE_REFINE * gl;
    let fine_nodes: Vec<f64> = (0..fine_count)
        .map(|g| TAU * g as f64 / fine_count as f64)
        .collect();
    let fine_weights = vec![TAU / fine_count as f64; fine_count];
    let rows_mu = st.forward_on_gamma_grid(mu, fine_count)?;
    let rows_nu = st.forward_on_gamma_grid(nu, fine_count)?;
    let zenith_count = st.so3.sphere.len();
    let indices: Vec<usize> = (0..zenith_count).collect();
    let rows: Vec<Result<Vec<f64>>> = parallel_map(&indices, |&m| -> Result<Vec<f64>> {
        let scaled_mu: Vec<f64> = rows_mu[m].iter().map(|&v| v * 4.0 * PI).collect();
        let scaled_nu: Vec<f64> = rows_nu[m].iter().map(|&v| v * 4.0 * PI).collect();
        let (ref_raw, _) = Measure1D::density_renormalized(
            Flavor::Circle,
            &fine_nodes,
            &fine_weights,
            &scaled_mu,
        )?;
        let reference = ensure_positive_reference(ref_raw)?;
        let (subject, _) = Measure1D::density_renormalized(
            Flavor::Circle,
            &fine_nodes,
            &fine_weights,
            &scaled_nu,
        )?;
        let disp = ccdt(&subject, &reference)?.scaled(delta);
        let mut values = pushforward_density_at(&disp, &reference, &st.so3.gammas)?;
        let mass: f64 = values.iter().map(|&v| v * TAU / gl as f64).sum();
        if !(mass > 0.0) {
            return Err(CoreError::numeric(
                "interpolated slice lost all mass".to_string(),
            ));
        }
        for v in values.iter_mut() {
            *v /= mass;
        }
        Ok(values)
    });
    let mut h = vec![0.0; st.so3.len()];
    for (m, row) in rows.into_iter().enumerate() {
        let row = row?;
        for g in 0..gl {
            // rows of W f carry 1/(4 pi)
            h[st.so3.node_index(m, g)] = row[g] / (4.0 * PI);
        }
    }
    let h = GridDensity::new(st.so3.meta(), h)?;
    match mode {
        InterpMode::Pinv => st.pseudo_inverse(&h),
        InterpMode::Regularized(params) => {
            let sol = pd_invert(st, &h.values, params)?;
            GridDensity::new(st.sphere().meta(), sol.primal)
        }
    }
}

/// The five synthetic dataset layouts: each pairs a first class against a
/// second class of vMF mixtures with constrained means.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DatasetSpec {
    /// layout id, 1 through 5
    pub id: u8,
    /// samples per class; two classes per dataset
    pub per_class: usize,
    pub seed: u64,
    pub bandlimit: usize,
    pub kappa: f64,
}

impl DatasetSpec {
    pub fn new(id: u8, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&id) {
            return Err(CoreError::config(format!("dataset id {id} outside 1..=5")));
        }
        Ok(Self {
            id,
            per_class: 50,
            seed,
            bandlimit: 16,
            kappa: 50.0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LabeledDensity {
    pub density: GridDensity,
    pub label: u8,
    pub spec: VmfSpec,
}

fn random_orthogonal(rng: &mut SplitMix64, eta: &UnitVector) -> UnitVector {
    loop {
        let r = rng.unit_vector();
        let proj = r.dot(eta);
        let x = r.x - proj * eta.x;
        let y = r.y - proj * eta.y;
        let z = r.z - proj * eta.z;
        if let Ok(v) = UnitVector::new(x, y, z) {
            return v;
        }
    }
}

enum MixtureRule {
    FixedDistance(f64),
    Free,
    EquatorMirror,
    AxisMirror,
}

fn mixture_spec(rng: &mut SplitMix64, kappa: f64, rule: &MixtureRule) -> VmfSpec {
    let eta1 = rng.unit_vector();
    let eta2 = match rule {
        MixtureRule::FixedDistance(dist) => {
            let u = random_orthogonal(rng, &eta1);
            let (s, c) = dist.sin_cos();
            UnitVector::new(
                c * eta1.x + s * u.x,
                c * eta1.y + s * u.y,
                c * eta1.z + s * u.z,
            )
            .expect("unit by construction")
        }
        MixtureRule::Free => rng.unit_vector(),
        MixtureRule::EquatorMirror => eta1.mirror_equator(),
        MixtureRule::AxisMirror => eta1.mirror_axis(),
    };
    VmfSpec {
        terms: vec![
            VmfTerm {
                weight: 0.5,
                kappa,
                mean: eta1,
            },
            VmfTerm {
                weight: 0.5,
                kappa,
                mean: eta2,
            },
        ],
        symmetrize: false,
    }
}

/// Generates the labeled densities of one dataset, deterministically from
/// the seed.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<LabeledDensity>> {
    if !(1..=5).contains(&spec.id) {
        return Err(CoreError::config(format!(
            "dataset id {} outside 1..=5",
            spec.id
        )));
    }
    let grid = crate::quadrature::sphere_grid(spec.bandlimit);
    let mut rng = SplitMix64::new(spec.seed);
    let kappa = spec.kappa;
    let mut specs: Vec<(VmfSpec, u8)> = Vec::with_capacity(2 * spec.per_class);
    for _ in 0..spec.per_class {
        let first = match spec.id {
            1..=4 => VmfSpec::single(kappa, rng.unit_vector()),
            _ => mixture_spec(&mut rng, kappa, &MixtureRule::EquatorMirror),
        };
        specs.push((first, 0));
    }
    for _ in 0..spec.per_class {
        let rule = match spec.id {
            1 => MixtureRule::FixedDistance(PI / 2.0),
            2 => MixtureRule::Free,
            3 => MixtureRule::EquatorMirror,
            4 => MixtureRule::AxisMirror,
            _ => MixtureRule::AxisMirror,
        };
        specs.push((mixture_spec(&mut rng, kappa, &rule), 1));
    }
    let samples = parallel_map(&specs, |(vmf, label)| {
        vmf_density(vmf, &grid).map(|density| LabeledDensity {
            density,
            label: *label,
            spec: vmf.clone(),
        })
    });
    samples.into_iter().collect()
}

/// Feature map selector for classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FeatureKind {
    /// raw density samples
    Raw,
    /// interval CDTs of the vertical slices, concatenated over psi
    VerticalCdt,
    /// circular CDTs of the semicircle slices, concatenated over zeniths
    SemicircleCdt,
}

/// Holds the transforms and uniform references needed by the feature maps.
pub struct FeaturePipeline {
    pub vt: VerticalSliceTransform,
    pub st: SemicircleTransform,
    uniform_interval: Measure1D,
    uniform_circle: Measure1D,
}

impl FeaturePipeline {
    pub fn new(bandlimit: usize) -> Result<Self> {
        let vt = VerticalSliceTransform::new(
            crate::quadrature::sphere_grid(bandlimit),
            crate::quadrature::cylinder_grid(bandlimit),
        )?;
        let st = SemicircleTransform::new(
            crate::quadrature::sphere_grid(bandlimit),
            crate::quadrature::so3_grid(bandlimit, 2 * bandlimit + 1)?,
        )?;
        let uniform_interval = Measure1D::interval_density(
            &vt.cylinder.ts,
            &vt.cylinder.ring_weights,
            &vec![0.5; vt.cylinder.ts.len()],
        )?;
        let gl = st.so3.gammas.len();
        let uniform_circle = Measure1D::circle_density(
            &st.so3.gammas,
            &vec![TAU / gl as f64; gl],
            &vec![1.0 / TAU; gl],
        )?;
        Ok(Self {
            vt,
            st,
            uniform_interval,
            uniform_circle,
        })
    }

    /// CDT feature vector of one density.
    pub fn extract(&self, f: &GridDensity, kind: FeatureKind) -> Result<Vec<f64>> {
        match kind {
            FeatureKind::Raw => Ok(f.values.clone()),
            FeatureKind::VerticalCdt => {
                let vf = self.vt.forward(f)?;
                let np = self.vt.cylinder.psis.len();
                let mut features = Vec::with_capacity(self.vt.cylinder.len());
                for i in 0..np {
                    let (slice, _) = vslice_row_measure(&self.vt, &vf, i)?;
                    let h = cdt(&slice, &self.uniform_interval)?;
                    features.extend_from_slice(&h.values);
                }
                Ok(features)
            }
            FeatureKind::SemicircleCdt => {
                let wf = self.st.forward(f)?;
                let mut features = Vec::with_capacity(self.st.so3.len());
                for m in 0..self.st.so3.sphere.len() {
                    let (slice, _) = semicircle_row_measure(&self.st, &wf, m)?;
                    let h = ccdt(&slice, &self.uniform_circle)?;
                    features.extend_from_slice(&h.values);
                }
                Ok(features)
            }
        }
    }

    /// Feature matrix for a whole dataset (parallel over samples).
    pub fn extract_all(
        &self,
        samples: &[LabeledDensity],
        kind: FeatureKind,
    ) -> Result<Vec<Vec<f64>>> {
        parallel_map(samples, |s| self.extract(&s.density, kind))
            .into_iter()
            .collect()
    }
}

/// A full classification experiment: which dataset to generate, which
/// feature map to apply and how to cross-validate. Serializable so runs
/// can be described by a JSON file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub features: FeatureKind,
    pub folds: usize,
    pub pca_dim: usize,
}

impl ExperimentConfig {
    /// Generates the dataset, extracts features and cross-validates.
    pub fn run(&self) -> Result<(f64, f64)> {
        let data = generate_dataset(&self.dataset)?;
        let labels: Vec<u8> = data.iter().map(|s| s.label).collect();
        let features = match self.features {
            FeatureKind::Raw => data.iter().map(|s| s.density.values.clone()).collect(),
            kind => FeaturePipeline::new(self.dataset.bandlimit)?.extract_all(&data, kind)?,
        };
        crossvalidate(&features, &labels, self.folds, self.pca_dim)
    }
}

/// Cross-validated linear classification of a labeled feature matrix.
pub fn crossvalidate(
    features: &[Vec<f64>],
    labels: &[u8],
    folds: usize,
    pca_dim: usize,
) -> Result<(f64, f64)> {
    classify::crossvalidate(features, labels, folds, pca_dim, ClassifierKind::Svm)
}
