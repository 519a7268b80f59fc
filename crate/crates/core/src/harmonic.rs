//! Discrete spherical harmonic analysis/synthesis and the two spherical
//! transforms: the vertical slice transform onto the cylinder T x I and
//! the normalized semicircle transform onto SO(3). Forward, adjoint and
//! truncated Moore-Penrose pseudoinverse are all evaluated through the
//! closed-form singular values; push-forwards handle atomic measures.
//!
//! Everything is direct summation with precomputed associated-Legendre
//! and Wigner-d tables per grid; at the default band-limits this is fast
//! enough that no fast transform is warranted.

use crate::error::{CoreError, Result};
use crate::geometry::{azimuth_op, slice_op, UnitVector};
use crate::ot1d::Measure1D;
use crate::quadrature::{CylinderGrid, GridDensity, So3Grid, SphereGrid};
use crate::special::{
    legendre_p_unchecked, ln_double_factorial, ln_factorial, norm_assoc_legendre_table,
    wigner_d_unchecked,
};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Triangular array of spherical harmonic coefficients c_n^k,
/// 0 <= n <= N, |k| <= n.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    pub bandlimit: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicCoeffs {
    pub fn zeros(bandlimit: usize) -> Self {
        Self {
            bandlimit,
            coeffs: vec![Complex64::ZERO; (bandlimit + 1) * (bandlimit + 1)],
        }
    }

    fn idx(&self, n: usize, k: i64) -> usize {
        debug_assert!(n <= self.bandlimit && k.unsigned_abs() as usize <= n);
        n * n + (n as i64 + k) as usize
    }

    pub fn get(&self, n: usize, k: i64) -> Complex64 {
        self.coeffs[self.idx(n, k)]
    }

    pub fn set(&mut self, n: usize, k: i64, value: Complex64) {
        let i = self.idx(n, k);
        self.coeffs[i] = value;
    }

    /// True when the coefficients belong to a real-valued field:
    /// c_n^{-k} = (-1)^k conj(c_n^k).
    pub fn is_real_field(&self, tol: f64) -> bool {
        for n in 0..=self.bandlimit {
            for k in 0..=(n as i64) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let expect = sign * self.get(n, k).conj();
                if (self.get(n, -k) - expect).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Spherical analysis/synthesis bound to one sphere grid, with the
/// normalized associated Legendre tables cached per latitude ring.
#[derive(Debug, Clone)]
pub struct SphereHarmonics {
    pub grid: SphereGrid,
    /// ring_tables[j][n(n+1)/2 + k] = N_n^k(t_j), k >= 0
    ring_tables: Vec<Vec<f64>>,
}

impl SphereHarmonics {
    pub fn new(grid: SphereGrid) -> Self {
        let bl = grid.bandlimit;
        let ring_tables = grid
            .ts
            .iter()
            .map(|&t| norm_assoc_legendre_table(bl, t))
            .collect();
        Self { grid, ring_tables }
    }

    fn nal(&self, j: usize, n: usize, k: usize) -> f64 {
        self.ring_tables[j][n * (n + 1) / 2 + k]
    }

    /// Quadrature approximation of the coefficients <f, Y_n^k>; exact for
    /// band-limited samples by the 2N-exactness of the grid.
    pub fn analyze(&self, f: &GridDensity) -> Result<HarmonicCoeffs> {
        f.expect_meta(self.grid.meta())?;
        let bl = self.grid.bandlimit;
        let np = self.grid.num_phi();
        let mut coeffs = HarmonicCoeffs::zeros(bl);
        // ring-wise Fourier sums F_k(j) = sum_i w f e^{-ik phi_i}
        for j in 0..self.grid.num_rings() {
            let mut ring_fourier = vec![Complex64::ZERO; bl + 1];
            for i in 0..np {
                let m = self.grid.node_index(i, j);
                let wf = self.grid.weights[m] * f.values[m];
                let phi = self.grid.phis[i];
                for (k, rf) in ring_fourier.iter_mut().enumerate() {
                    *rf += wf * Complex64::from_polar(1.0, -(k as f64) * phi);
                }
            }
            for n in 0..=bl {
                for k in 0..=n {
                    let term = self.nal(j, n, k) * ring_fourier[k];
                    let idx = coeffs.idx(n, k as i64);
                    coeffs.coeffs[idx] += term;
                }
            }
        }
        // real samples: c_n^{-k} = (-1)^k conj(c_n^k)
        for n in 0..=bl {
            for k in 1..=(n as i64) {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let v = sign * coeffs.get(n, k).conj();
                coeffs.set(n, -k, v);
            }
        }
        Ok(coeffs)
    }

    /// Pointwise synthesis sum; returns the real part of the field.
    pub fn synthesize(&self, coeffs: &HarmonicCoeffs) -> Result<GridDensity> {
        if coeffs.bandlimit != self.grid.bandlimit {
            return Err(CoreError::shape(format!(
                "coefficients band-limit {} does not match grid {}",
                coeffs.bandlimit, self.grid.bandlimit
            )));
        }
        let bl = self.grid.bandlimit;
        let np = self.grid.num_phi();
        let mut values = vec![0.0; self.grid.len()];
        for j in 0..self.grid.num_rings() {
            // G_k(j) = sum_n c_n^k N_n^{|k|}(t_j) (with the k<0 phase)
            let mut gk = vec![Complex64::ZERO; 2 * bl + 1];
            for n in 0..=bl {
                for k in -(n as i64)..=(n as i64) {
                    let ka = k.unsigned_abs() as usize;
                    let sign = if k < 0 && ka % 2 == 1 { -1.0 } else { 1.0 };
                    gk[(k + bl as i64) as usize] += coeffs.get(n, k) * sign * self.nal(j, n, ka);
                }
            }
            for i in 0..np {
                let phi = self.grid.phis[i];
                let mut acc = Complex64::ZERO;
                for (ki, &g) in gk.iter().enumerate() {
                    let k = ki as i64 - bl as i64;
                    acc += g * Complex64::from_polar(1.0, k as f64 * phi);
                }
                values[self.grid.node_index(i, j)] = acc.re;
            }
        }
        GridDensity::new(self.grid.meta(), values)
    }
}

/// Convenience wrappers matching the operation names of the public API.
pub fn analyze_s2(f: &GridDensity, grid: &SphereGrid) -> Result<HarmonicCoeffs> {
    SphereHarmonics::new(grid.clone()).analyze(f)
}

pub fn synthesize_s2(coeffs: &HarmonicCoeffs, grid: &SphereGrid) -> Result<GridDensity> {
    SphereHarmonics::new(grid.clone()).synthesize(coeffs)
}

/// Singular value v_n^k of the vertical slice transform (n + k even):
/// (-1)^{(n+k)/2} sqrt((n-k)!/(n+k)!) (n+k-1)!!/(n-k)!!, in log space.
pub fn sv_vertical(n: usize, k: i64) -> Result<f64> {
    let nn = n as i64;
    if k.abs() > nn {
        return Err(CoreError::index(format!("order |{k}| exceeds degree {n}")));
    }
    if (nn + k).rem_euclid(2) != 0 {
        return Err(CoreError::index(format!(
            "vertical slice singular value needs n + k even, got ({n}, {k})"
        )));
    }
    let ln = 0.5 * (ln_factorial((nn - k) as usize) - ln_factorial((nn + k) as usize))
        + ln_double_factorial(nn + k - 1)?
        - ln_double_factorial(nn - k)?;
    let sign = if ((nn + k) / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(sign * ln.exp())
}

/// Singular-value coefficient lambda_n^j of the semicircle transform:
/// zero for j = 0 (n >= 1) and for n + j odd; lambda_0^0 = 2 (4 pi)^{-3/2}.
pub fn lambda_semicircle(n: usize, j: i64) -> Result<f64> {
    let nn = n as i64;
    if j.abs() > nn {
        return Err(CoreError::index(format!("order |{j}| exceeds degree {n}")));
    }
    if n == 0 {
        return Ok(2.0 * (4.0 * PI).powf(-1.5));
    }
    if j == 0 || (nn + j).rem_euclid(2) != 0 {
        return Ok(0.0);
    }
    let ja = j.abs();
    let ln = -(4.0 * PI).ln()
        + 0.5
            * (((2 * n + 1) as f64 / (4.0 * PI)).ln() + ln_factorial((nn - ja) as usize)
                - ln_factorial((nn + ja) as usize))
        + (ja as f64).ln()
        + ln_double_factorial(nn - 2)?
        + ln_double_factorial(nn + ja - 1)?
        - ln_double_factorial(nn - ja)?
        - ln_double_factorial(nn + 1)?
        + if n.is_multiple_of(2) {
            2f64.ln()
        } else {
            PI.ln()
        };
    let magnitude = ln.exp();
    // lambda_n^j = (-1)^j |lambda| for j > 0; lambda_n^{-j} = (-1)^j lambda_n^j
    let sign = if j > 0 && j % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * magnitude)
}

/// Singular value w_n of the semicircle transform:
/// w_n^2 = sum_j |lambda_n^j|^2 8 pi^2 / (2n+1).
pub fn sv_semicircle(n: usize) -> f64 {
    let mut acc = 0.0;
    for j in -(n as i64)..=(n as i64) {
        let lam = lambda_semicircle(n, j).expect("|j| <= n");
        acc += lam * lam;
    }
    (acc * 8.0 * PI * PI / (2 * n + 1) as f64).sqrt()
}

/// Vertical slice transform bound to a sphere/cylinder grid pair of equal
/// band-limit, with precomputed Legendre tables.
#[derive(Debug, Clone)]
pub struct VerticalSliceTransform {
    pub harmonics: SphereHarmonics,
    pub cylinder: CylinderGrid,
    /// b[n][j] = sqrt((2n+1)/(4 pi)) P_n(t_j) on the cylinder latitudes
    basis_t: Vec<Vec<f64>>,
    /// v[n][k] for n + k even, 0 otherwise (k >= 0)
    sv: Vec<Vec<f64>>,
}

impl VerticalSliceTransform {
    pub fn new(sphere: SphereGrid, cylinder: CylinderGrid) -> Result<Self> {
        if sphere.bandlimit != cylinder.bandlimit {
            return Err(CoreError::config(format!(
                "band-limits differ: sphere {} vs cylinder {}",
                sphere.bandlimit, cylinder.bandlimit
            )));
        }
        let bl = sphere.bandlimit;
        let mut basis_t = Vec::with_capacity(bl + 1);
        for n in 0..=bl {
            let norm = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
            basis_t.push(
                cylinder
                    .ts
                    .iter()
                    .map(|&t| norm * legendre_p_unchecked(n, t))
                    .collect(),
            );
        }
        let mut sv = Vec::with_capacity(bl + 1);
        for n in 0..=bl {
            let mut row = vec![0.0; n + 1];
            for (k, slot) in row.iter_mut().enumerate() {
                if (n + k).is_multiple_of(2) {
                    *slot = sv_vertical(n, k as i64)?;
                }
            }
            sv.push(row);
        }
        Ok(Self {
            harmonics: SphereHarmonics::new(sphere),
            cylinder,
            basis_t,
            sv,
        })
    }

    pub fn bandlimit(&self) -> usize {
        self.cylinder.bandlimit
    }

    pub fn sphere(&self) -> &SphereGrid {
        &self.harmonics.grid
    }

    pub fn singular_value(&self, n: usize, k: i64) -> f64 {
        let ka = k.unsigned_abs() as usize;
        let base = self.sv[n][ka];
        if base == 0.0 {
            return 0.0;
        }
        // v_n^{-k} = (-1)^k v_n^k
        if k < 0 && ka % 2 == 1 {
            -base
        } else {
            base
        }
    }

    /// Discrete vertical slice transform: sum of v_n^k <f, Y_n^k>_w B_n^k
    /// over n <= N with n + k even.
    pub fn forward(&self, f: &GridDensity) -> Result<GridDensity> {
        let coeffs = self.harmonics.analyze(f)?;
        self.synthesize_cylinder(&coeffs, |n, k| self.singular_value(n, k))
    }

    /// Adjoint of the discrete transform.
    pub fn adjoint(&self, g: &GridDensity) -> Result<GridDensity> {
        let d = self.analyze_cylinder(g)?;
        let mut coeffs = HarmonicCoeffs::zeros(self.bandlimit());
        for n in 0..=self.bandlimit() {
            for k in -(n as i64)..=(n as i64) {
                coeffs.set(n, k, self.singular_value(n, k) * d.get(n, k));
            }
        }
        self.harmonics.synthesize(&coeffs)
    }

    /// Truncated Moore-Penrose pseudoinverse; reconstructs even
    /// band-limited functions exactly.
    pub fn pseudo_inverse(&self, g: &GridDensity) -> Result<GridDensity> {
        let d = self.analyze_cylinder(g)?;
        let mut coeffs = HarmonicCoeffs::zeros(self.bandlimit());
        for n in 0..=self.bandlimit() {
            for k in -(n as i64)..=(n as i64) {
                let v = self.singular_value(n, k);
                if v != 0.0 {
                    coeffs.set(n, k, d.get(n, k) / v);
                }
            }
        }
        self.harmonics.synthesize(&coeffs)
    }

    /// Evaluates the transform of `f` on arbitrary latitude nodes: each
    /// psi row of V_D f is a polynomial of degree <= N in t, so this is
    /// exact refinement, not interpolation. Rows are returned psi-major.
    pub fn forward_on_t_nodes(&self, f: &GridDensity, ts: &[f64]) -> Result<Vec<Vec<f64>>> {
        let coeffs = self.harmonics.analyze(f)?;
        let bl = self.bandlimit();
        let np = self.cylinder.psis.len();
        // basis values on the requested nodes
        let mut basis = Vec::with_capacity(bl + 1);
        for n in 0..=bl {
            let norm = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
            basis.push(
                ts.iter()
                    .map(|&t| norm * legendre_p_unchecked(n, t))
                    .collect::<Vec<f64>>(),
            );
        }
        let mut hk = vec![vec![Complex64::ZERO; ts.len()]; bl + 1];
        for n in 0..=bl {
            for k in 0..=(n as i64) {
                let v = self.singular_value(n, k);
                if v == 0.0 {
                    continue;
                }
                let c = coeffs.get(n, k) * v;
                for (s, slot) in hk[k as usize].iter_mut().enumerate() {
                    *slot += c * basis[n][s];
                }
            }
        }
        let mut rows = Vec::with_capacity(np);
        for i in 0..np {
            let psi = self.cylinder.psis[i];
            let mut row = Vec::with_capacity(ts.len());
            for s in 0..ts.len() {
                let mut acc = hk[0][s].re;
                for k in 1..=bl {
                    acc += 2.0 * (hk[k][s] * Complex64::from_polar(1.0, k as f64 * psi)).re;
                }
                row.push(acc);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// <g, B_n^k>_w for all (n, k); the cylinder-side analysis.
    fn analyze_cylinder(&self, g: &GridDensity) -> Result<HarmonicCoeffs> {
        g.expect_meta(self.cylinder.meta())?;
        let bl = self.bandlimit();
        let np = self.cylinder.psis.len();
        let mut out = HarmonicCoeffs::zeros(bl);
        for j in 0..self.cylinder.ts.len() {
            let mut ring_fourier = vec![Complex64::ZERO; bl + 1];
            for i in 0..np {
                let l = self.cylinder.node_index(i, j);
                let wg = self.cylinder.weights[l] * g.values[l];
                let psi = self.cylinder.psis[i];
                for (k, rf) in ring_fourier.iter_mut().enumerate() {
                    *rf += wg * Complex64::from_polar(1.0, -(k as f64) * psi);
                }
            }
            for n in 0..=bl {
                for k in 0..=n {
                    let idx = out.idx(n, k as i64);
                    out.coeffs[idx] += self.basis_t[n][j] * ring_fourier[k];
                }
            }
        }
        for n in 0..=bl {
            for k in 1..=(n as i64) {
                let v = out.get(n, k).conj();
                out.set(n, -k, v);
            }
        }
        Ok(out)
    }

    /// Pointwise sum of weight(n, k) c_n^k B_n^k on the cylinder grid.
    fn synthesize_cylinder(
        &self,
        coeffs: &HarmonicCoeffs,
        weight: impl Fn(usize, i64) -> f64,
    ) -> Result<GridDensity> {
        let bl = self.bandlimit();
        let np = self.cylinder.psis.len();
        let nt = self.cylinder.ts.len();
        let mut values = vec![0.0; self.cylinder.len()];
        // H_k(j) = sum_n weight(n,k) c_n^k b_n(t_j)
        let mut hk = vec![vec![Complex64::ZERO; nt]; bl + 1];
        for n in 0..=bl {
            for k in 0..=(n as i64) {
                let w = weight(n, k);
                if w == 0.0 {
                    continue;
                }
                let c = coeffs.get(n, k) * w;
                let row = &self.basis_t[n];
                for (j, slot) in hk[k as usize].iter_mut().enumerate() {
                    *slot += c * row[j];
                }
            }
        }
        for j in 0..nt {
            for i in 0..np {
                let psi = self.cylinder.psis[i];
                let mut acc = hk[0][j].re;
                for k in 1..=bl {
                    acc += 2.0 * (hk[k][j] * Complex64::from_polar(1.0, k as f64 * psi)).re;
                }
                values[self.cylinder.node_index(i, j)] = acc;
            }
        }
        GridDensity::new(self.cylinder.meta(), values)
    }
}

/// Nonzero entries (j, lambda_n^j) per degree.
#[derive(Debug, Clone)]
struct LambdaRow {
    js: Vec<i64>,
    lambdas: Vec<f64>,
}

/// Normalized semicircle transform bound to a sphere grid and an SO(3)
/// product grid, with Wigner-d tables precomputed per beta ring.
#[derive(Debug, Clone)]
pub struct SemicircleTransform {
    pub harmonics: SphereHarmonics,
    pub so3: So3Grid,
    lambda_rows: Vec<LambdaRow>,
    /// w_n^2 per degree
    w_sq: Vec<f64>,
    /// dtab[n][((b * (2n+1)) + (k+n)) * js_len + jidx] = d_n^{k,j}(t_b)
    dtab: Vec<Vec<f64>>,
    /// e^{i k alpha_i} for k = 0..N (negative k by conjugation)
    exp_alpha: Vec<Vec<Complex64>>,
    /// e^{i j gamma_g} for j = 0..N
    exp_gamma: Vec<Vec<Complex64>>,
}

impl SemicircleTransform {
    pub fn new(sphere: SphereGrid, so3: So3Grid) -> Result<Self> {
        if sphere.bandlimit != so3.bandlimit() {
            return Err(CoreError::config(format!(
                "band-limits differ: sphere {} vs SO(3) {}",
                sphere.bandlimit,
                so3.bandlimit()
            )));
        }
        let bl = sphere.bandlimit;
        let mut lambda_rows = Vec::with_capacity(bl + 1);
        let mut w_sq = Vec::with_capacity(bl + 1);
        for n in 0..=bl {
            let mut js = Vec::new();
            let mut lambdas = Vec::new();
            for j in -(n as i64)..=(n as i64) {
                let lam = lambda_semicircle(n, j)?;
                if lam != 0.0 {
                    js.push(j);
                    lambdas.push(lam);
                }
            }
            let wn = sv_semicircle(n);
            w_sq.push(wn * wn);
            lambda_rows.push(LambdaRow { js, lambdas });
        }
        let mut dtab = Vec::with_capacity(bl + 1);
        for (n, row) in lambda_rows.iter().enumerate() {
            let js_len = row.js.len();
            let width = 2 * n + 1;
            let mut table = vec![0.0; so3.sphere.ts.len() * width * js_len];
            for (b, &t) in so3.sphere.ts.iter().enumerate() {
                for k in -(n as i64)..=(n as i64) {
                    for (jidx, &j) in row.js.iter().enumerate() {
                        let slot = ((b * width) + (k + n as i64) as usize) * js_len + jidx;
                        table[slot] = wigner_d_unchecked(n, k, j, t);
                    }
                }
            }
            dtab.push(table);
        }
        let exp_alpha = so3
            .sphere
            .phis
            .iter()
            .map(|&a| {
                (0..=bl)
                    .map(|k| Complex64::from_polar(1.0, k as f64 * a))
                    .collect()
            })
            .collect();
        let exp_gamma = so3
            .gammas
            .iter()
            .map(|&g| {
                (0..=bl)
                    .map(|j| Complex64::from_polar(1.0, j as f64 * g))
                    .collect()
            })
            .collect();
        Ok(Self {
            harmonics: SphereHarmonics::new(sphere),
            so3,
            lambda_rows,
            w_sq,
            dtab,
            exp_alpha,
            exp_gamma,
        })
    }

    pub fn bandlimit(&self) -> usize {
        self.harmonics.grid.bandlimit
    }

    pub fn sphere(&self) -> &SphereGrid {
        &self.harmonics.grid
    }

    pub fn lambda(&self, n: usize, j: i64) -> f64 {
        lambda_semicircle(n, j).unwrap_or(0.0)
    }

    pub fn w_squared(&self, n: usize) -> f64 {
        self.w_sq[n]
    }

    fn dval(&self, n: usize, b: usize, k: i64, jidx: usize) -> f64 {
        let width = 2 * n + 1;
        let js_len = self.lambda_rows[n].js.len();
        self.dtab[n][((b * width) + (k + n as i64) as usize) * js_len + jidx]
    }

    fn exp_a(&self, i: usize, k: i64) -> Complex64 {
        let base = self.exp_alpha[i][k.unsigned_abs() as usize];
        if k < 0 {
            base.conj()
        } else {
            base
        }
    }

    fn exp_g(&self, g: usize, j: i64) -> Complex64 {
        let base = self.exp_gamma[g][j.unsigned_abs() as usize];
        if j < 0 {
            base.conj()
        } else {
            base
        }
    }

    /// Discrete semicircle transform:
    /// sum_{n,k,j} lambda_n^j <f, Y_n^k>_w conj(D_n^{k,j}) at the grid nodes.
    pub fn forward(&self, f: &GridDensity) -> Result<GridDensity> {
        let coeffs = self.harmonics.analyze(f)?;
        let bl = self.bandlimit();
        let np = self.so3.sphere.num_phi();
        let gl = self.so3.gammas.len();
        let mut values = vec![0.0; self.so3.len()];
        let mut row_fourier = vec![Complex64::ZERO; 2 * bl + 1];
        for m in 0..self.so3.sphere.len() {
            let i = m % np;
            let b = m / np;
            row_fourier.iter_mut().for_each(|v| *v = Complex64::ZERO);
            for n in 0..=bl {
                let row = &self.lambda_rows[n];
                for (jidx, (&j, &lam)) in row.js.iter().zip(&row.lambdas).enumerate() {
                    let mut u = Complex64::ZERO;
                    for k in -(n as i64)..=(n as i64) {
                        u += coeffs.get(n, k) * self.dval(n, b, k, jidx) * self.exp_a(i, k);
                    }
                    row_fourier[(j + bl as i64) as usize] += lam * u;
                }
            }
            for g in 0..gl {
                let mut acc = Complex64::ZERO;
                for (ji, &rf) in row_fourier.iter().enumerate() {
                    if rf != Complex64::ZERO {
                        let j = ji as i64 - bl as i64;
                        acc += rf * self.exp_g(g, j);
                    }
                }
                values[self.so3.node_index(m, g)] = acc.re;
            }
        }
        GridDensity::new(self.so3.meta(), values)
    }

    /// Evaluates the transform of `f` on a refined uniform gamma grid of
    /// `gamma_count` nodes per zenith: each zenith row is a trigonometric
    /// polynomial of degree <= N in gamma, so this is exact refinement.
    /// Rows are returned zenith-major.
    pub fn forward_on_gamma_grid(
        &self,
        f: &GridDensity,
        gamma_count: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let coeffs = self.harmonics.analyze(f)?;
        let bl = self.bandlimit();
        let np = self.so3.sphere.num_phi();
        let mut rows = Vec::with_capacity(self.so3.sphere.len());
        let mut row_fourier = vec![Complex64::ZERO; 2 * bl + 1];
        for m in 0..self.so3.sphere.len() {
            let i = m % np;
            let b = m / np;
            row_fourier.iter_mut().for_each(|v| *v = Complex64::ZERO);
            for n in 0..=bl {
                let row = &self.lambda_rows[n];
                for (jidx, (&j, &lam)) in row.js.iter().zip(&row.lambdas).enumerate() {
                    let mut u = Complex64::ZERO;
                    for k in -(n as i64)..=(n as i64) {
                        u += coeffs.get(n, k) * self.dval(n, b, k, jidx) * self.exp_a(i, k);
                    }
                    row_fourier[(j + bl as i64) as usize] += lam * u;
                }
            }
            let mut row = Vec::with_capacity(gamma_count);
            for g in 0..gamma_count {
                let gamma = std::f64::consts::TAU * g as f64 / gamma_count as f64;
                let mut acc = Complex64::ZERO;
                for (ji, &rf) in row_fourier.iter().enumerate() {
                    if rf != Complex64::ZERO {
                        let j = ji as i64 - bl as i64;
                        acc += rf * Complex64::from_polar(1.0, j as f64 * gamma);
                    }
                }
                row.push(acc.re);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Inner products <g, conj(D_n^{k,j})>_w for the nonzero-lambda (n, j).
    /// Returned as per-degree matrices indexed like the Wigner table.
    fn analyze_so3(&self, g: &GridDensity) -> Result<Vec<Vec<Complex64>>> {
        g.expect_meta(self.so3.meta())?;
        let bl = self.bandlimit();
        let np = self.so3.sphere.num_phi();
        let gl = self.so3.gammas.len();
        let gamma_w = std::f64::consts::TAU / gl as f64;
        // A_j(m) = (2 pi / G) sum_g g(m, gamma) e^{-i j gamma}
        let msize = self.so3.sphere.len();
        let mut a = vec![vec![Complex64::ZERO; msize]; 2 * bl + 1];
        for m in 0..msize {
            for gi in 0..gl {
                let val = g.values[self.so3.node_index(m, gi)] * gamma_w;
                for j in -(bl as i64)..=(bl as i64) {
                    a[(j + bl as i64) as usize][m] += val * self.exp_g(gi, j).conj();
                }
            }
        }
        let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(bl + 1);
        for n in 0..=bl {
            let row = &self.lambda_rows[n];
            let width = 2 * n + 1;
            let mut mat = vec![Complex64::ZERO; width * row.js.len()];
            for m in 0..msize {
                let i = m % np;
                let b = m / np;
                let wm = self.so3.sphere.weights[m];
                for k in -(n as i64)..=(n as i64) {
                    let phase = wm * self.exp_a(i, k).conj();
                    for (jidx, &j) in row.js.iter().enumerate() {
                        let d = self.dval(n, b, k, jidx);
                        if d != 0.0 {
                            mat[(k + n as i64) as usize * row.js.len() + jidx] +=
                                phase * d * a[(j + bl as i64) as usize][m];
                        }
                    }
                }
            }
            out.push(mat);
        }
        Ok(out)
    }

    fn combine(&self, inner: &[Vec<Complex64>], scale: impl Fn(usize) -> f64) -> HarmonicCoeffs {
        let bl = self.bandlimit();
        let mut coeffs = HarmonicCoeffs::zeros(bl);
        for n in 0..=bl {
            let row = &self.lambda_rows[n];
            let s = scale(n);
            for k in -(n as i64)..=(n as i64) {
                let mut acc = Complex64::ZERO;
                for (jidx, &lam) in row.lambdas.iter().enumerate() {
                    acc += lam * inner[n][(k + n as i64) as usize * row.js.len() + jidx];
                }
                coeffs.set(n, k, acc * s);
            }
        }
        coeffs
    }

    /// Adjoint of the discrete semicircle transform.
    pub fn adjoint(&self, g: &GridDensity) -> Result<GridDensity> {
        let inner = self.analyze_so3(g)?;
        let coeffs = self.combine(&inner, |_| 1.0);
        self.harmonics.synthesize(&coeffs)
    }

    /// Truncated Moore-Penrose pseudoinverse; reconstructs band-limited
    /// functions exactly.
    pub fn pseudo_inverse(&self, g: &GridDensity) -> Result<GridDensity> {
        let inner = self.analyze_so3(g)?;
        let coeffs = self.combine(&inner, |n| 1.0 / self.w_sq[n]);
        self.harmonics.synthesize(&coeffs)
    }
}

/// Discrete probability measure on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasureS2 {
    atoms: Vec<(UnitVector, f64)>,
}

impl DiscreteMeasureS2 {
    pub fn new(atoms: Vec<(UnitVector, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(CoreError::domain(
                "measure needs at least one atom".to_string(),
            ));
        }
        if atoms.iter().any(|&(_, m)| m < 0.0 || !m.is_finite()) {
            return Err(CoreError::domain(
                "atom masses must be nonnegative".to_string(),
            ));
        }
        let total: f64 = atoms.iter().map(|&(_, m)| m).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::domain(format!(
                "atom masses sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(UnitVector, f64)] {
        &self.atoms
    }

    pub fn rotated(&self, q: &crate::geometry::Rotation) -> Self {
        Self {
            atoms: self.atoms.iter().map(|(xi, m)| (q.apply(xi), *m)).collect(),
        }
    }
}

/// Push-forward of an atomic measure under the slicing operator:
/// atoms (S_psi(xi_i), m_i) on the interval.
pub fn pushforward_vslice(mu: &DiscreteMeasureS2, psi: f64) -> Measure1D {
    let atoms: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .map(|(xi, m)| (slice_op(psi, xi), *m))
        .collect();
    Measure1D::interval_atoms(&atoms).expect("slice positions lie in [-1, 1]")
}

/// Push-forward of an atomic measure under the azimuth operator of the
/// zenith sph(alpha, beta): atoms on the circle.
pub fn pushforward_semicircle(mu: &DiscreteMeasureS2, alpha: f64, beta: f64) -> Measure1D {
    let atoms: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .map(|(xi, m)| (azimuth_op(alpha, beta, xi), *m))
        .collect();
    Measure1D::circle_atoms(&atoms).expect("azimuths lie on the circle")
}
