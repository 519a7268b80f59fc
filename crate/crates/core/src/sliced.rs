//! Sliced Wasserstein distances on the sphere: the vertical sliced
//! distance (slices over horizontal directions, interval transport per
//! slice) and the semicircular sliced distance (slices over zeniths,
//! circular transport per slice).

use crate::error::{CoreError, Result};
use crate::geometry::rot_z;
use crate::harmonic::{
    pushforward_semicircle, pushforward_vslice, DiscreteMeasureS2, SemicircleTransform,
    VerticalSliceTransform,
};
use crate::ot1d::{wasserstein_circle, wasserstein_interval, Flavor, Measure1D};
use crate::quadrature::{cylinder_grid, so3_grid, sphere_grid, GridDensity, GridMeta};
use crate::util::comp_sum;
use std::f64::consts::TAU;

/// Probability measure on the sphere, either atomic or a grid density.
#[derive(Debug, Clone)]
pub enum SphereMeasure {
    Atoms(DiscreteMeasureS2),
    Density(GridDensity),
}

/// Slicing parameters: the transport exponent, the number of uniform
/// psi-slices for the vertical distance (atomic inputs), and the zenith
/// grid band-limit for the semicircular distance (atomic inputs). Density
/// inputs always use the slice sets of their discrete transforms.
#[derive(Debug, Clone)]
pub struct SlicedConfig {
    pub p: f64,
    pub psi_slices: usize,
    pub zenith_bandlimit: usize,
    /// warn when a clipped slice loses more than this much mass
    pub clip_warn_mass: f64,
}

impl Default for SlicedConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            psi_slices: 64,
            zenith_bandlimit: 16,
            clip_warn_mass: 1e-8,
        }
    }
}

impl SlicedConfig {
    fn validate(&self) -> Result<()> {
        if self.p < 1.0 || !self.p.is_finite() {
            return Err(CoreError::config(format!(
                "p = {} must be finite and >= 1",
                self.p
            )));
        }
        if self.psi_slices == 0 {
            return Err(CoreError::config("need at least one slice".to_string()));
        }
        Ok(())
    }
}

/// Extracts the psi-row `i` of a cylinder sample vector as a probability
/// measure on the interval (clipping small negative dips and
/// renormalizing). Returns the measure and the clipped mass.
pub fn vslice_row_measure(
    vt: &VerticalSliceTransform,
    vf: &GridDensity,
    i: usize,
) -> Result<(Measure1D, f64)> {
    vf.expect_meta(vt.cylinder.meta())?;
    let nt = vt.cylinder.ts.len();
    let mut values = Vec::with_capacity(nt);
    for j in 0..nt {
        values.push(vf.values[vt.cylinder.node_index(i, j)] * TAU);
    }
    Measure1D::density_renormalized(
        Flavor::Interval,
        &vt.cylinder.ts,
        &vt.cylinder.ring_weights,
        &values,
    )
}

/// Extracts the gamma-circle at zenith node `m` of an SO(3) sample vector
/// as a probability measure on the circle.
pub fn semicircle_row_measure(
    st: &SemicircleTransform,
    wf: &GridDensity,
    m: usize,
) -> Result<(Measure1D, f64)> {
    wf.expect_meta(st.so3.meta())?;
    let gl = st.so3.gammas.len();
    let weights = vec![TAU / gl as f64; gl];
    let mut values = Vec::with_capacity(gl);
    for g in 0..gl {
        values.push(wf.values[st.so3.node_index(m, g)] * 4.0 * std::f64::consts::PI);
    }
    Measure1D::density_renormalized(Flavor::Circle, &st.so3.gammas, &weights, &values)
}

fn warn_clip(total: f64, worst: f64, count: usize, threshold: f64, what: &str) {
    if worst > threshold {
        eprintln!(
            "warning: clipped negative mass from {count} {what} slices \
             (total {total:.3e}, worst {worst:.3e})"
        );
    }
}

#[derive(Default)]
struct ClipStats {
    total: f64,
    worst: f64,
    count: usize,
}

impl ClipStats {
    fn add(&mut self, clipped: f64, threshold: f64) {
        if clipped > threshold {
            self.total += clipped;
            self.worst = self.worst.max(clipped);
            self.count += 1;
        }
    }
}

/// Vertical sliced Wasserstein distance VSW_p between probability
/// measures on the sphere.
pub fn vsw(mu: &SphereMeasure, nu: &SphereMeasure, cfg: &SlicedConfig) -> Result<f64> {
    cfg.validate()?;
    match (mu, nu) {
        (SphereMeasure::Atoms(a), SphereMeasure::Atoms(b)) => {
            let k = cfg.psi_slices;
            let costs: Vec<f64> = (0..k)
                .map(|i| {
                    let psi = TAU * (i + 1) as f64 / k as f64;
                    let pa = pushforward_vslice(a, psi);
                    let pb = pushforward_vslice(b, psi);
                    wasserstein_interval(&pa, &pb, cfg.p).map(|d| d.powf(cfg.p))
                })
                .collect::<Result<_>>()?;
            Ok((comp_sum(costs) * TAU / k as f64).powf(1.0 / cfg.p))
        }
        (SphereMeasure::Density(f), SphereMeasure::Density(g)) => {
            f.expect_meta(g.meta)?;
            let bl = match f.meta {
                GridMeta::Sphere { bandlimit } => bandlimit,
                _ => {
                    return Err(CoreError::shape(
                        "vsw expects sphere grid densities".to_string(),
                    ))
                }
            };
            let vt = VerticalSliceTransform::new(sphere_grid(bl), cylinder_grid(bl))?;
            vsw_densities(&vt, f, g, cfg)
        }
        _ => Err(CoreError::shape(
            "vsw needs both measures in the same representation".to_string(),
        )),
    }
}

/// Density variant with a caller-provided transform (reused across calls).
pub fn vsw_densities(
    vt: &VerticalSliceTransform,
    f: &GridDensity,
    g: &GridDensity,
    cfg: &SlicedConfig,
) -> Result<f64> {
    cfg.validate()?;
    let vf = vt.forward(f)?;
    let vg = vt.forward(g)?;
    let np = vt.cylinder.psis.len();
    let dpsi = TAU / np as f64;
    let mut costs = Vec::with_capacity(np);
    let mut clip = ClipStats::default();
    for i in 0..np {
        let (ma, ca) = vslice_row_measure(vt, &vf, i)?;
        let (mb, cb) = vslice_row_measure(vt, &vg, i)?;
        clip.add(ca, cfg.clip_warn_mass);
        clip.add(cb, cfg.clip_warn_mass);
        costs.push(wasserstein_interval(&ma, &mb, cfg.p)?.powf(cfg.p));
    }
    warn_clip(clip.total, clip.worst, clip.count, cfg.clip_warn_mass, "vertical");
    Ok((comp_sum(costs) * dpsi).powf(1.0 / cfg.p))
}

/// Semicircular sliced Wasserstein distance SSW_p.
pub fn ssw(mu: &SphereMeasure, nu: &SphereMeasure, cfg: &SlicedConfig) -> Result<f64> {
    cfg.validate()?;
    match (mu, nu) {
        (SphereMeasure::Atoms(a), SphereMeasure::Atoms(b)) => {
            let zeniths = sphere_grid(cfg.zenith_bandlimit);
            let costs: Vec<f64> = (0..zeniths.len())
                .map(|m| {
                    let (alpha, beta) = zeniths.angles(m);
                    let pa = pushforward_semicircle(a, alpha, beta);
                    let pb = pushforward_semicircle(b, alpha, beta);
                    wasserstein_circle(&pa, &pb, cfg.p).map(|d| zeniths.weights[m] * d.powf(cfg.p))
                })
                .collect::<Result<_>>()?;
            Ok(comp_sum(costs).powf(1.0 / cfg.p))
        }
        (SphereMeasure::Density(f), SphereMeasure::Density(g)) => {
            f.expect_meta(g.meta)?;
            let bl = match f.meta {
                GridMeta::Sphere { bandlimit } => bandlimit,
                _ => {
                    return Err(CoreError::shape(
                        "ssw expects sphere grid densities".to_string(),
                    ))
                }
            };
            let st = SemicircleTransform::new(sphere_grid(bl), so3_grid(bl, 2 * bl + 1)?)?;
            ssw_densities(&st, f, g, cfg)
        }
        _ => Err(CoreError::shape(
            "ssw needs both measures in the same representation".to_string(),
        )),
    }
}

/// Density variant with a caller-provided transform.
pub fn ssw_densities(
    st: &SemicircleTransform,
    f: &GridDensity,
    g: &GridDensity,
    cfg: &SlicedConfig,
) -> Result<f64> {
    cfg.validate()?;
    let wf = st.forward(f)?;
    let wg = st.forward(g)?;
    let zeniths = &st.so3.sphere;
    let mut costs = Vec::with_capacity(zeniths.len());
    let mut clip = ClipStats::default();
    for m in 0..zeniths.len() {
        let (ma, ca) = semicircle_row_measure(st, &wf, m)?;
        let (mb, cb) = semicircle_row_measure(st, &wg, m)?;
        clip.add(ca, cfg.clip_warn_mass);
        clip.add(cb, cfg.clip_warn_mass);
        costs.push(zeniths.weights[m] * wasserstein_circle(&ma, &mb, cfg.p)?.powf(cfg.p));
    }
    warn_clip(clip.total, clip.worst, clip.count, cfg.clip_warn_mass, "semicircle");
    Ok(comp_sum(costs).powf(1.0 / cfg.p))
}

/// Rotates an atomic measure around the vertical axis.
pub fn rotate_atoms_z(mu: &DiscreteMeasureS2, alpha: f64) -> DiscreteMeasureS2 {
    mu.rotated(&rot_z(alpha))
}

/// Rotates a sphere grid density around the vertical axis by a whole
/// number of azimuth grid steps (an exact index permutation).
pub fn rotate_density_z_steps(f: &GridDensity, steps: i64) -> Result<GridDensity> {
    let bl = match f.meta {
        GridMeta::Sphere { bandlimit } => bandlimit,
        _ => {
            return Err(CoreError::shape(
                "expected a sphere grid density".to_string(),
            ))
        }
    };
    let np = 2 * bl + 2;
    let rings = bl + 1;
    let mut values = vec![0.0; f.values.len()];
    for j in 0..rings {
        for i in 0..np {
            // (R_3(alpha))_# f sampled at phi_i reads f at phi_i - alpha
            let src = (i as i64 - steps).rem_euclid(np as i64) as usize;
            values[j * np + i] = f.values[j * np + src];
        }
    }
    GridDensity::new(f.meta, values)
}

/// Checks the exact invariance of VSW under rotations aligned with the
/// psi grid: rotating both inputs by `steps` grid steps must reproduce
/// the distance to 1e-12.
pub fn vsw_axis_invariance_check(
    mu: &SphereMeasure,
    nu: &SphereMeasure,
    steps: i64,
    cfg: &SlicedConfig,
) -> Result<bool> {
    let base = vsw(mu, nu, cfg)?;
    let alpha = TAU * steps as f64 / cfg.psi_slices as f64;
    let rotated = match (mu, nu) {
        (SphereMeasure::Atoms(a), SphereMeasure::Atoms(b)) => vsw(
            &SphereMeasure::Atoms(rotate_atoms_z(a, alpha)),
            &SphereMeasure::Atoms(rotate_atoms_z(b, alpha)),
            cfg,
        )?,
        (SphereMeasure::Density(f), SphereMeasure::Density(g)) => vsw(
            &SphereMeasure::Density(rotate_density_z_steps(f, steps)?),
            &SphereMeasure::Density(rotate_density_z_steps(g, steps)?),
            cfg,
        )?,
        _ => {
            return Err(CoreError::shape(
                "invariance check needs matching representations".to_string(),
            ))
        }
    };
    Ok((base - rotated).abs() <= 1e-12 * base.max(1.0))
}
