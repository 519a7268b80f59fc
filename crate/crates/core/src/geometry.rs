//! Coordinates and operators on the sphere and the rotation group:
//! spherical parameterization, Euler rotations, the slicing operator and
//! the azimuth/zenith operators of the semicircle geometry.

use crate::error::{CoreError, Result};
use crate::util::wrap_2pi;
use serde::{Deserialize, Serialize};

const POLE_EPS: f64 = 1e-12;

/// A point on the unit sphere; renormalized on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-14 {
            return Err(CoreError::domain(format!(
                "cannot normalize ({x}, {y}, {z}) to the unit sphere"
            )));
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Geodesic distance arccos of the clamped inner product.
    pub fn geodesic_distance(&self, other: &UnitVector) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }

    /// Reflection at the equatorial plane, (x, y, -z).
    pub fn mirror_equator(&self) -> UnitVector {
        UnitVector {
            x: self.x,
            y: self.y,
            z: -self.z,
        }
    }

    /// Point reflection through the vertical axis, (-x, -y, z).
    pub fn mirror_axis(&self) -> UnitVector {
        UnitVector {
            x: -self.x,
            y: -self.y,
            z: self.z,
        }
    }
}

/// Proper rotation of R^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

/// Euler angles (alpha, beta, gamma) with alpha, gamma in [0, 2pi) and
/// beta in [0, pi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI + 1e-12).contains(&beta) {
            return Err(CoreError::domain(format!("beta {beta} outside [0, pi]")));
        }
        Ok(Self {
            alpha: wrap_2pi(alpha),
            beta: beta.min(std::f64::consts::PI),
            gamma: wrap_2pi(gamma),
        })
    }
}

impl Rotation {
    /// Validates orthogonality and unit determinant to 1e-12.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Rotation(m);
        let rt = r.transpose();
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for k in 0..3 {
                    dot += rt.0[i][k] * m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-12 {
                    return Err(CoreError::domain("matrix is not orthogonal".to_string()));
                }
            }
        }
        if (r.det() - 1.0).abs() > 1e-12 {
            return Err(CoreError::domain(
                "matrix determinant is not +1".to_string(),
            ));
        }
        Ok(r)
    }

    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn transpose(&self) -> Rotation {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, other: &Rotation) -> Rotation {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += self.0[i][k] * other.0[k][j];
                }
            }
        }
        Rotation(out)
    }

    pub fn apply(&self, v: &UnitVector) -> UnitVector {
        let m = &self.0;
        UnitVector {
            x: m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            y: m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            z: m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        }
    }
}

/// Rotation around the vertical axis by `alpha`.
pub fn rot_z(alpha: f64) -> Rotation {
    let (s, c) = alpha.sin_cos();
    Rotation([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

/// Rotation around the second axis by `beta`.
pub fn rot_y(beta: f64) -> Rotation {
    let (s, c) = beta.sin_cos();
    Rotation([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
}

/// Spherical coordinates (cos phi sin theta, sin phi sin theta, cos theta).
pub fn sph(phi: f64, theta: f64) -> UnitVector {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    UnitVector {
        x: cp * st,
        y: sp * st,
        z: ct,
    }
}

/// Azimuth angle in [0, 2pi); returns 0 at both poles so that the pair
/// (azi, zen) stays within the bijection domain of `sph`.
pub fn azi(xi: &UnitVector) -> f64 {
    if xi.x.hypot(xi.y) <= POLE_EPS {
        return 0.0;
    }
    wrap_2pi(xi.y.atan2(xi.x))
}

/// Zenith angle in [0, pi].
pub fn zen(xi: &UnitVector) -> f64 {
    xi.z.clamp(-1.0, 1.0).acos()
}

/// Euler-angle rotation R_3(alpha) R_2(beta) R_3(gamma).
pub fn euler_matrix(e: &EulerAngles) -> Rotation {
    rot_z(e.alpha).mul(&rot_y(e.beta)).mul(&rot_z(e.gamma))
}

/// Slicing operator: signed distance of the vertical plane through `xi`
/// with horizontal normal direction psi, clamped to [-1, 1].
pub fn slice_op(psi: f64, xi: &UnitVector) -> f64 {
    (psi.cos() * xi.x + psi.sin() * xi.y).clamp(-1.0, 1.0)
}

/// Azimuth operator: azimuth of `xi` after rotating the zenith
/// sph(alpha, beta) back to the north pole.
pub fn azimuth_op(alpha: f64, beta: f64, xi: &UnitVector) -> f64 {
    let q = euler_matrix(&EulerAngles {
        alpha: wrap_2pi(alpha),
        beta,
        gamma: 0.0,
    });
    azi(&q.transpose().apply(xi))
}

/// Zenith operator companion of `azimuth_op`.
pub fn zenith_op(alpha: f64, beta: f64, xi: &UnitVector) -> f64 {
    let q = euler_matrix(&EulerAngles {
        alpha: wrap_2pi(alpha),
        beta,
        gamma: 0.0,
    });
    zen(&q.transpose().apply(xi))
}
