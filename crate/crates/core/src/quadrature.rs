//! Quadrature grids on the sphere, the cylinder T x I and SO(3), plus
//! weighted inner products against them.
//!
//! A band-limit N grid integrates all spherical (or rotational) harmonics
//! of degree up to 2N exactly: equispaced nodes in the periodic angles and
//! Gauss-Legendre nodes in the latitude variable. Node indices are
//! "j-major": latitude ring j is the slow index, the periodic angle i the
//! fast one. The SO(3) grid is the product of a sphere grid in the first
//! two Euler angles with a uniform gamma grid, gamma fastest.

use crate::error::{CoreError, Result};
use crate::geometry::{sph, UnitVector};
use crate::special::{legendre_p_derivative, legendre_p_unchecked};
use crate::util::{comp_sum, comp_sum_c};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gauss-Legendre rule with N+1 nodes, exact for polynomials of degree
/// up to 2N+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussLegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Computes the (N+1)-point rule from the roots of the (N+1)st Legendre
/// polynomial by Newton iteration with Chebyshev-type initial guesses.
pub fn gauss_legendre(bandlimit: usize) -> GaussLegendreRule {
    let deg = bandlimit + 1;
    let mut nodes = Vec::with_capacity(deg);
    let mut weights = Vec::with_capacity(deg);
    for i in 0..deg {
        let mut x = (PI * (i as f64 + 0.75) / (deg as f64 + 0.5)).cos();
        for _ in 0..100 {
            let p = legendre_p_unchecked(deg, x);
            let dp = legendre_p_derivative(deg, x).expect("|x| <= 1 during Newton");
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre_p_derivative(deg, x).expect("|x| <= 1 at a root");
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    GaussLegendreRule { nodes, weights }
}

/// Quadrature nodes and weights on the sphere with band-limit N:
/// 2N+2 equispaced azimuths times N+1 Gauss-Legendre latitudes,
/// M = 2(N+1)^2 nodes in total, weights summing to 4 pi.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub bandlimit: usize,
    /// Azimuth nodes phi_i = (i+1) pi/(N+1), i = 0..2N+1.
    pub phis: Vec<f64>,
    /// Gauss-Legendre latitude nodes t_j (ascending) with rule weights r_j.
    pub ts: Vec<f64>,
    pub ring_weights: Vec<f64>,
    /// Unit vectors in node order m(i,j) = j*(2N+2) + i.
    pub nodes: Vec<UnitVector>,
    /// Per-node quadrature weights w_m = pi r_j / (N+1).
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn num_rings(&self) -> usize {
        self.ts.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.phis.len() + i
    }

    /// Spherical coordinates (phi, theta) of node m.
    pub fn angles(&self, m: usize) -> (f64, f64) {
        let i = m % self.phis.len();
        let j = m / self.phis.len();
        (self.phis[i], self.ts[j].clamp(-1.0, 1.0).acos())
    }

    /// Evaluates a function of the node angles into a sample vector.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> GridDensity {
        let values = (0..self.len())
            .map(|m| {
                let (phi, theta) = self.angles(m);
                f(phi, theta)
            })
            .collect();
        GridDensity {
            meta: GridMeta::Sphere {
                bandlimit: self.bandlimit,
            },
            values,
        }
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta::Sphere {
            bandlimit: self.bandlimit,
        }
    }
}

pub fn sphere_grid(bandlimit: usize) -> SphereGrid {
    let rule = gauss_legendre(bandlimit);
    let np = 2 * bandlimit + 2;
    let phis: Vec<f64> = (0..np)
        .map(|i| (i + 1) as f64 * PI / (bandlimit as f64 + 1.0))
        .collect();
    let mut nodes = Vec::with_capacity(np * rule.nodes.len());
    let mut weights = Vec::with_capacity(np * rule.nodes.len());
    for (&t, &r) in rule.nodes.iter().zip(&rule.weights) {
        let theta = t.clamp(-1.0, 1.0).acos();
        for &phi in &phis {
            nodes.push(sph(phi, theta));
            weights.push(PI * r / (bandlimit as f64 + 1.0));
        }
    }
    SphereGrid {
        bandlimit,
        phis,
        ts: rule.nodes,
        ring_weights: rule.weights,
        nodes,
        weights,
    }
}

/// Quadrature on the cylinder T x I: equispaced psi nodes times
/// Gauss-Legendre t nodes, weights summing to 4 pi.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub bandlimit: usize,
    pub psis: Vec<f64>,
    pub ts: Vec<f64>,
    pub ring_weights: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CylinderGrid {
    pub fn len(&self) -> usize {
        self.psis.len() * self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.psis.len() + i
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta::Cylinder {
            bandlimit: self.bandlimit,
        }
    }
}

pub fn cylinder_grid(bandlimit: usize) -> CylinderGrid {
    let rule = gauss_legendre(bandlimit);
    let np = 2 * bandlimit + 2;
    let psis: Vec<f64> = (0..np)
        .map(|i| (i + 1) as f64 * PI / (bandlimit as f64 + 1.0))
        .collect();
    let mut weights = Vec::with_capacity(np * rule.nodes.len());
    for &r in &rule.weights {
        for _ in 0..np {
            weights.push(PI * r / (bandlimit as f64 + 1.0));
        }
    }
    CylinderGrid {
        bandlimit,
        psis,
        ts: rule.nodes,
        ring_weights: rule.weights,
        weights,
    }
}

/// Product quadrature on SO(3): a sphere grid in the Euler angles
/// (alpha, beta) times a uniform gamma grid of size G >= 2N+1, with node
/// index l(m, g) = m*G + g. Weights sum to 8 pi^2 and integrate all
/// rotational harmonics of degree up to 2N exactly.
#[derive(Debug, Clone)]
pub struct So3Grid {
    pub sphere: SphereGrid,
    pub gammas: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn so3_grid(bandlimit: usize, gamma_count: usize) -> Result<So3Grid> {
    if gamma_count < 2 * bandlimit + 1 {
        return Err(CoreError::config(format!(
            "gamma grid size {gamma_count} below 2N+1 = {} breaks exactness",
            2 * bandlimit + 1
        )));
    }
    let sphere = sphere_grid(bandlimit);
    let gammas: Vec<f64> = (0..gamma_count)
        .map(|g| std::f64::consts::TAU * g as f64 / gamma_count as f64)
        .collect();
    let gamma_w = std::f64::consts::TAU / gamma_count as f64;
    let mut weights = Vec::with_capacity(sphere.len() * gamma_count);
    for m in 0..sphere.len() {
        for _ in 0..gamma_count {
            weights.push(sphere.weights[m] * gamma_w);
        }
    }
    Ok(So3Grid {
        sphere,
        gammas,
        weights,
    })
}

impl So3Grid {
    pub fn bandlimit(&self) -> usize {
        self.sphere.bandlimit
    }

    pub fn len(&self) -> usize {
        self.sphere.len() * self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node_index(&self, m: usize, g: usize) -> usize {
        m * self.gammas.len() + g
    }

    /// Euler angles (alpha, beta, gamma) of node l.
    pub fn euler(&self, l: usize) -> (f64, f64, f64) {
        let g = l % self.gammas.len();
        let m = l / self.gammas.len();
        let (alpha, beta) = self.sphere.angles(m);
        (alpha, beta, self.gammas[g])
    }

    pub fn meta(&self) -> GridMeta {
        GridMeta::So3 {
            bandlimit: self.sphere.bandlimit,
            gamma_count: self.gammas.len(),
        }
    }
}

/// Identifies which grid a sample vector lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMeta {
    Sphere {
        bandlimit: usize,
    },
    Cylinder {
        bandlimit: usize,
    },
    So3 {
        bandlimit: usize,
        gamma_count: usize,
    },
}

impl GridMeta {
    pub fn len(&self) -> usize {
        match self {
            GridMeta::Sphere { bandlimit } | GridMeta::Cylinder { bandlimit } => {
                2 * (bandlimit + 1) * (bandlimit + 1)
            }
            GridMeta::So3 {
                bandlimit,
                gamma_count,
            } => 2 * (bandlimit + 1) * (bandlimit + 1) * gamma_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bandlimit(&self) -> usize {
        match self {
            GridMeta::Sphere { bandlimit }
            | GridMeta::Cylinder { bandlimit }
            | GridMeta::So3 { bandlimit, .. } => *bandlimit,
        }
    }
}

/// Real sample vector bound to one grid, interpreted as a density with
/// respect to the weighted counting measure of that grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub meta: GridMeta,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(meta: GridMeta, values: Vec<f64>) -> Result<Self> {
        if meta.len() != values.len() {
            return Err(CoreError::shape(format!(
                "grid expects {} samples, got {}",
                meta.len(),
                values.len()
            )));
        }
        Ok(Self { meta, values })
    }

    pub fn expect_meta(&self, meta: GridMeta) -> Result<()> {
        if self.meta != meta {
            return Err(CoreError::shape(format!(
                "sample vector bound to {:?}, expected {:?}",
                self.meta, meta
            )));
        }
        Ok(())
    }

    /// Total integral against the supplied grid weights.
    pub fn mass(&self, weights: &[f64]) -> Result<f64> {
        weighted_dot(&self.values, &vec![1.0; self.values.len()], weights)
    }
}

/// Weighted inner product of real sample vectors.
pub fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() != w.len() {
        return Err(CoreError::shape(format!(
            "weighted_dot lengths {} / {} / {}",
            a.len(),
            b.len(),
            w.len()
        )));
    }
    Ok(comp_sum(
        a.iter().zip(b).zip(w).map(|((&x, &y), &wm)| wm * x * y),
    ))
}

/// Weighted inner product conjugating the second argument.
pub fn weighted_dot_c(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Result<Complex64> {
    if a.len() != b.len() || a.len() != w.len() {
        return Err(CoreError::shape(format!(
            "weighted_dot lengths {} / {} / {}",
            a.len(),
            b.len(),
            w.len()
        )));
    }
    Ok(comp_sum_c(
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((&x, &y), &wm)| wm * x * y.conj()),
    ))
}

/// Serializable descriptor of a grid: every node, weight and the index
/// convention, for consumers that do not rebuild grids from band-limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub meta: GridMeta,
    pub index_convention: String,
    /// Node coordinates: (phi, theta) / (psi, t) / (alpha, beta, gamma).
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl GridDescriptor {
    pub fn from_sphere(grid: &SphereGrid) -> Self {
        let nodes = (0..grid.len())
            .map(|m| {
                let (phi, theta) = grid.angles(m);
                vec![phi, theta]
            })
            .collect();
        GridDescriptor {
            meta: grid.meta(),
            index_convention: "m(i,j) = j*(2N+2) + i, ring index j slow".to_string(),
            nodes,
            weights: grid.weights.clone(),
        }
    }

    pub fn from_cylinder(grid: &CylinderGrid) -> Self {
        let mut nodes = Vec::with_capacity(grid.len());
        for &t in &grid.ts {
            for &psi in &grid.psis {
                nodes.push(vec![psi, t]);
            }
        }
        GridDescriptor {
            meta: grid.meta(),
            index_convention: "l(i,j) = j*(2N+2) + i, latitude index j slow".to_string(),
            nodes,
            weights: grid.weights.clone(),
        }
    }

    pub fn from_so3(grid: &So3Grid) -> Self {
        let nodes = (0..grid.len())
            .map(|l| {
                let (a, b, g) = grid.euler(l);
                vec![a, b, g]
            })
            .collect();
        GridDescriptor {
            meta: grid.meta(),
            index_convention: "l(m,g) = m*G + g, sphere node m slow, gamma fast".to_string(),
            nodes,
            weights: grid.weights.clone(),
        }
    }
}
