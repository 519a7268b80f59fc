//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line once its tolerance holds. Desk scale is band-limit 16
//! unless a criterion states otherwise.

use num_complex::Complex64;
use sphereot_core::geometry::{euler_matrix, sph, EulerAngles, UnitVector};
use sphereot_core::harmonic::{
    lambda_semicircle, sv_semicircle, sv_vertical, synthesize_s2, DiscreteMeasureS2,
    HarmonicCoeffs, SemicircleTransform, VerticalSliceTransform,
};
use sphereot_core::inversion::{pd_invert, project_simplex, PdParams, WeightedOp};
use sphereot_core::ot1d::{
    cdf, cdt, quantile_lp_cost, wasserstein_circle, wasserstein_interval, Measure1D, Repr,
};
use sphereot_core::pipelines::{
    crossvalidate, generate_dataset, vcdt_interpolate, vmf_density, wcdt_interpolate, DatasetSpec,
    FeatureKind, FeaturePipeline, InterpMode, VmfSpec,
};
use sphereot_core::quadrature::{
    cylinder_grid, gauss_legendre, so3_grid, sphere_grid, weighted_dot, weighted_dot_c,
    GridDensity, SphereGrid,
};
use sphereot_core::rng::SplitMix64;
use sphereot_core::sliced::{
    rotate_atoms_z, ssw, vsw, vsw_axis_invariance_check, SlicedConfig, SphereMeasure,
};
use sphereot_core::special::{lambert_w, legendre_p, sph_harmonic, wigner_big_d};
use sphereot_core::util::{rel_l1, rel_l2};
use std::f64::consts::{PI, TAU};

const DESK_BANDLIMIT: usize = 16;

fn harmonic_samples(grid: &SphereGrid, n: usize, k: i64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|m| {
            let (phi, theta) = grid.angles(m);
            sph_harmonic(n, k, phi, theta).unwrap()
        })
        .collect()
}

fn random_band_limited(grid: &SphereGrid, rng: &mut SplitMix64, even_only: bool) -> GridDensity {
    let bl = grid.bandlimit;
    let mut coeffs = HarmonicCoeffs::zeros(bl);
    for n in 0..=bl {
        for k in 0..=(n as i64) {
            if even_only && (n as i64 + k) % 2 != 0 {
                continue;
            }
            let v = if k == 0 {
                Complex64::new(rng.uniform(-1.0, 1.0), 0.0)
            } else {
                Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
            };
            coeffs.set(n, k, v);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs.set(n, -k, sign * v.conj());
        }
    }
    synthesize_s2(&coeffs, grid).unwrap()
}

fn random_atoms(rng: &mut SplitMix64, count: usize) -> DiscreteMeasureS2 {
    let mut atoms: Vec<(UnitVector, f64)> = (0..count)
        .map(|_| (rng.unit_vector(), rng.uniform(0.1, 1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    DiscreteMeasureS2::new(atoms).unwrap()
}

#[test]
fn criterion_01_quadrature_exactness() {
    // discrete orthonormality of the spherical harmonics at desk scale
    let grid = sphere_grid(DESK_BANDLIMIT);
    let samples: Vec<Vec<Complex64>> = (0..=DESK_BANDLIMIT)
        .flat_map(|n| (-(n as i64)..=(n as i64)).map(move |k| (n, k)))
        .map(|(n, k)| harmonic_samples(&grid, n, k))
        .collect();
    let mut worst: f64 = 0.0;
    for (a, sa) in samples.iter().enumerate() {
        for (b, sb) in samples.iter().enumerate().skip(a) {
            let dot = weighted_dot_c(sa, sb, &grid.weights).unwrap();
            let expect = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - Complex64::new(expect, 0.0)).norm());
        }
    }
    assert!(worst <= 1e-10, "orthonormality defect {worst}");

    // full rotational-harmonic orthogonality on a smaller product grid
    let bl = 6;
    let grid = so3_grid(bl, 2 * bl + 1).unwrap();
    let mut d_samples = Vec::new();
    for n in 0..=bl {
        for k in -(n as i64)..=(n as i64) {
            for j in -(n as i64)..=(n as i64) {
                let vals: Vec<Complex64> = (0..grid.len())
                    .map(|l| {
                        let (a, b, g) = grid.euler(l);
                        wigner_big_d(n, k, j, a, b, g).unwrap()
                    })
                    .collect();
                d_samples.push((n, k, j, vals));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (idx, (n, k, j, sa)) in d_samples.iter().enumerate() {
        for (n2, k2, j2, sb) in d_samples.iter().skip(idx) {
            // bilinear (non-conjugated) pairing: sum w D D
            let dot = weighted_dot_c(
                sa,
                &sb.iter().map(|z| z.conj()).collect::<Vec<_>>(),
                &grid.weights,
            )
            .unwrap();
            let expect = if n == n2 && *k == -*k2 && *j == -*j2 {
                let sign = if (k - j).rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                };
                sign * 8.0 * PI * PI / (2.0 * *n as f64 + 1.0)
            } else {
                0.0
            };
            worst = worst.max((dot - Complex64::new(expect, 0.0)).norm());
        }
    }
    assert!(worst <= 1e-9, "SO(3) orthogonality defect {worst}");

    // spot-check the desk-scale SO(3) grid on random Hermitian pairings
    let grid = so3_grid(DESK_BANDLIMIT, 2 * DESK_BANDLIMIT + 1).unwrap();
    let mut rng = SplitMix64::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..150 {
        let n = rng.uniform_usize(DESK_BANDLIMIT + 1);
        let k = rng.uniform_usize(2 * n + 1) as i64 - n as i64;
        let j = rng.uniform_usize(2 * n + 1) as i64 - n as i64;
        let n2 = rng.uniform_usize(DESK_BANDLIMIT + 1);
        let k2 = rng.uniform_usize(2 * n2 + 1) as i64 - n2 as i64;
        let j2 = rng.uniform_usize(2 * n2 + 1) as i64 - n2 as i64;
        let mut dot = Complex64::ZERO;
        for l in 0..grid.len() {
            let (a, b, g) = grid.euler(l);
            dot += grid.weights[l]
                * wigner_big_d(n, k, j, a, b, g).unwrap()
                * wigner_big_d(n2, k2, j2, a, b, g).unwrap().conj();
        }
        let expect = if n == n2 && k == k2 && j == j2 {
            8.0 * PI * PI / (2.0 * n as f64 + 1.0)
        } else {
            0.0
        };
        worst = worst.max((dot - Complex64::new(expect, 0.0)).norm());
    }
    assert!(worst <= 1e-9, "desk-scale SO(3) spot defect {worst}");
    println!("[acceptance] criterion 1 (quadrature exactness): PASS");
}

/// Arc integral of the vertical slice transform at one cylinder point.
fn vslice_arc_integral(
    f: &dyn Fn(&UnitVector) -> Complex64,
    degree: usize,
    psi: f64,
    t: f64,
) -> Complex64 {
    let u = [psi.cos(), psi.sin(), 0.0];
    let v = [-psi.sin(), psi.cos(), 0.0];
    let w = [0.0, 0.0, 1.0];
    let r = (1.0 - t * t).max(0.0).sqrt();
    let steps = 8 * (degree + 2);
    let mut acc = Complex64::ZERO;
    for s in 0..steps {
        let ang = TAU * s as f64 / steps as f64;
        let xi = UnitVector::new(
            t * u[0] + r * (ang.cos() * v[0] + ang.sin() * w[0]),
            t * u[1] + r * (ang.cos() * v[1] + ang.sin() * w[1]),
            t * u[2] + r * (ang.cos() * v[2] + ang.sin() * w[2]),
        )
        .unwrap();
        acc += f(&xi);
    }
    acc / steps as f64
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 32)
}

#[test]
fn criterion_02_singular_values_vs_integral_oracles() {
    // exact statements first
    let l00 = lambda_semicircle(0, 0).unwrap();
    assert_eq!(l00, 2.0 * (4.0 * PI).powf(-1.5), "lambda_0^0 must be exact");
    assert!((sv_semicircle(0) - 1.0 / TAU.sqrt()).abs() <= 1e-12, "w_0");

    // v_n^k against the arc integral of the slice transform on Y_n^k
    let mut rng = SplitMix64::new(2);
    for n in 0..=8usize {
        for k in (-(n as i64)..=(n as i64)).filter(|k| (n as i64 + k) % 2 == 0) {
            let psi = rng.uniform(0.0, TAU);
            let t = rng.uniform(-0.9, 0.9);
            let oracle = vslice_arc_integral(
                &|xi| {
                    sph_harmonic(
                        n,
                        k,
                        sphereot_core::geometry::azi(xi),
                        sphereot_core::geometry::zen(xi),
                    )
                    .unwrap()
                },
                n,
                psi,
                t,
            );
            let basis = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt()
                * legendre_p(n, t).unwrap()
                * Complex64::from_polar(1.0, k as f64 * psi);
            let v = sv_vertical(n, k).unwrap();
            assert!(
                (oracle - v * basis).norm() <= 1e-6,
                "v_{n}^{k}: {oracle} vs {}",
                v * basis
            );
        }
    }

    // lambda_n^j against the latitudinal integral of Y_n^j
    for n in 0..=10usize {
        for j in -(n as i64)..=(n as i64) {
            let integrand = |theta: f64| sph_harmonic(n, j, 0.0, theta).unwrap().re * theta.sin();
            let oracle = adaptive_simpson(&integrand, 0.0, PI, 1e-14) / (4.0 * PI);
            let lam = lambda_semicircle(n, j).unwrap();
            assert!(
                (lam - oracle).abs() <= 1e-10,
                "lambda_{n}^{j}: {lam} vs {oracle}"
            );
        }
    }
    println!("[acceptance] criterion 2 (singular values vs integral oracles): PASS");
}

#[test]
fn criterion_03_pseudo_inverse_round_trips() {
    let mut rng = SplitMix64::new(3);
    let vt =
        VerticalSliceTransform::new(sphere_grid(DESK_BANDLIMIT), cylinder_grid(DESK_BANDLIMIT))
            .unwrap();
    let f = random_band_limited(vt.sphere(), &mut rng, true);
    let back = vt.pseudo_inverse(&vt.forward(&f).unwrap()).unwrap();
    let verr = f
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(verr <= 1e-8, "vertical round-trip max error {verr}");

    let st = SemicircleTransform::new(
        sphere_grid(DESK_BANDLIMIT),
        so3_grid(DESK_BANDLIMIT, 2 * DESK_BANDLIMIT + 1).unwrap(),
    )
    .unwrap();
    let f = random_band_limited(st.sphere(), &mut rng, false);
    let back = st.pseudo_inverse(&st.forward(&f).unwrap()).unwrap();
    let werr = f
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(werr <= 1e-8, "semicircle round-trip max error {werr}");
    println!("[acceptance] criterion 3 (pseudoinverse round-trips): PASS");
}

#[test]
fn criterion_04_mass_conservation() {
    let mut rng = SplitMix64::new(4);
    let vt =
        VerticalSliceTransform::new(sphere_grid(DESK_BANDLIMIT), cylinder_grid(DESK_BANDLIMIT))
            .unwrap();
    let st = SemicircleTransform::new(
        sphere_grid(DESK_BANDLIMIT),
        so3_grid(DESK_BANDLIMIT, 2 * DESK_BANDLIMIT + 1).unwrap(),
    )
    .unwrap();
    for _ in 0..5 {
        let f = random_band_limited(vt.sphere(), &mut rng, false);
        let mass_in = f.mass(&vt.sphere().weights).unwrap();
        let v_out = vt.forward(&f).unwrap().mass(&vt.cylinder.weights).unwrap();
        assert!(
            (mass_in - v_out).abs() <= 1e-9 * mass_in.abs().max(1.0),
            "vertical mass {mass_in} vs {v_out}"
        );
        let w_out = st.forward(&f).unwrap().mass(&st.so3.weights).unwrap();
        assert!(
            (mass_in - w_out).abs() <= 1e-9 * mass_in.abs().max(1.0),
            "semicircle mass {mass_in} vs {w_out}"
        );
    }
    println!("[acceptance] criterion 4 (mass conservation): PASS");
}

/// North-west corner transport cost on sorted atoms.
fn nw_corner_cost(mu: &Measure1D, nu: &Measure1D, p: f64) -> f64 {
    let (xs, ms) = match &mu.repr {
        Repr::Atoms { positions, masses } => (positions.clone(), masses.clone()),
        _ => panic!("oracle needs atoms"),
    };
    let (ys, ns) = match &nu.repr {
        Repr::Atoms { positions, masses } => (positions.clone(), masses.clone()),
        _ => panic!("oracle needs atoms"),
    };
    let mut i = 0;
    let mut j = 0;
    let mut ri = ms[0];
    let mut rj = ns[0];
    let mut cost = 0.0;
    loop {
        let mv = ri.min(rj);
        cost += mv * (xs[i] - ys[j]).abs().powf(p);
        ri -= mv;
        rj -= mv;
        if ri <= 1e-15 {
            i += 1;
            if i >= xs.len() {
                break;
            }
            ri = ms[i];
        }
        if rj <= 1e-15 {
            j += 1;
            if j >= ys.len() {
                break;
            }
            rj = ns[j];
        }
    }
    cost.powf(1.0 / p)
}

fn random_interval_atoms(rng: &mut SplitMix64, n: usize) -> Measure1D {
    let mut atoms: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.uniform(-1.0, 1.0), rng.uniform(0.1, 1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    Measure1D::interval_atoms(&atoms).unwrap()
}

fn random_circle_atoms(rng: &mut SplitMix64, n: usize) -> Measure1D {
    let mut atoms: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.uniform(0.0, TAU), rng.uniform(0.1, 1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= total;
    }
    Measure1D::circle_atoms(&atoms).unwrap()
}

#[test]
fn criterion_05_one_dimensional_transport_oracles() {
    let mut rng = SplitMix64::new(5);
    // interval distance against the north-west corner rule
    for _ in 0..100 {
        let na = 1 + rng.uniform_usize(8);
        let nb = 1 + rng.uniform_usize(8);
        let mu = random_interval_atoms(&mut rng, na);
        let nu = random_interval_atoms(&mut rng, nb);
        for &p in &[1.0, 2.0, 3.0] {
            let fast = wasserstein_interval(&mu, &nu, p).unwrap();
            let slow = nw_corner_cost(&mu, &nu, p);
            assert!((fast - slow).abs() <= 1e-12, "p={p}: {fast} vs {slow}");
        }
    }
    // circular distance against refined dense-theta brute force
    for _ in 0..30 {
        let na = 1 + rng.uniform_usize(6);
        let nb = 1 + rng.uniform_usize(6);
        let mu = random_circle_atoms(&mut rng, na);
        let nu = random_circle_atoms(&mut rng, nb);
        let fmu = cdf(&mu);
        let fnu = cdf(&nu);
        for &p in &[1.0, 2.0] {
            let fast = wasserstein_circle(&mu, &nu, p).unwrap();
            let mut lo = -1.0;
            let mut hi = 1.0;
            let mut best = f64::INFINITY;
            for _pass in 0..3 {
                let mut best_theta = lo;
                for i in 0..=10_000 {
                    let theta = lo + (hi - lo) * i as f64 / 10_000.0;
                    let val = quantile_lp_cost(&fmu, &fnu, p, theta);
                    if val < best {
                        best = val;
                        best_theta = theta;
                    }
                }
                let span = (hi - lo) / 10_000.0;
                lo = best_theta - 2.0 * span;
                hi = best_theta + 2.0 * span;
            }
            let slow = best.powf(1.0 / p);
            assert!((fast - slow).abs() <= 1e-6, "p={p}: {fast} vs {slow}");
        }
    }
    // CDT isometry identity on smooth grid densities
    let n = 2000;
    let rule = gauss_legendre(n - 1);
    let make = |shape: &dyn Fn(f64) -> f64| {
        let mut vals: Vec<f64> = rule.nodes.iter().map(|&t| shape(t)).collect();
        let mass: f64 = rule.weights.iter().zip(&vals).map(|(w, v)| w * v).sum();
        for v in vals.iter_mut() {
            *v /= mass;
        }
        Measure1D::interval_density(&rule.nodes, &rule.weights, &vals).unwrap()
    };
    let omega = make(&|_| 1.0);
    let mu = make(&|t| 0.8 + 0.3 * (2.0 * t).sin());
    let nu = make(&|t| 0.7 + 0.3 * (1.5 * t + 0.4).cos());
    for &p in &[1.0, 2.0] {
        let w = wasserstein_interval(&mu, &nu, p).unwrap();
        let hmu = cdt(&mu, &omega).unwrap();
        let hnu = cdt(&nu, &omega).unwrap();
        let (nodes, weights, values) = match &omega.repr {
            Repr::Density {
                nodes,
                weights,
                values,
            } => (nodes, weights, values),
            _ => unreachable!(),
        };
        let mut acc = 0.0;
        for (i, (&w, &v)) in weights.iter().zip(values).enumerate() {
            acc += w * v * (hmu.values[i] - hnu.values[i]).abs().powf(p);
        }
        let _ = nodes;
        let norm = acc.powf(1.0 / p);
        assert!((w - norm).abs() <= 1e-6, "isometry p={p}: {w} vs {norm}");
    }
    println!("[acceptance] criterion 5 (1-D transport oracles): PASS");
}

#[test]
fn criterion_06_sliced_metric_axioms() {
    let mut rng = SplitMix64::new(6);
    let vcfg = SlicedConfig {
        p: 2.0,
        psi_slices: 16,
        ..Default::default()
    };
    let scfg = SlicedConfig {
        p: 2.0,
        zenith_bandlimit: 4,
        ..Default::default()
    };
    for trial in 0..200 {
        let a = SphereMeasure::Atoms(random_atoms(&mut rng, 3));
        let b = SphereMeasure::Atoms(random_atoms(&mut rng, 3));
        let c = SphereMeasure::Atoms(random_atoms(&mut rng, 3));
        let vab = vsw(&a, &b, &vcfg).unwrap();
        let vba = vsw(&b, &a, &vcfg).unwrap();
        assert_eq!(vab, vba, "VSW symmetry, trial {trial}");
        let vac = vsw(&a, &c, &vcfg).unwrap();
        let vcb = vsw(&c, &b, &vcfg).unwrap();
        assert!(vab - (vac + vcb) <= 1e-10, "VSW triangle, trial {trial}");

        let sab = ssw(&a, &b, &scfg).unwrap();
        let sba = ssw(&b, &a, &scfg).unwrap();
        assert!((sab - sba).abs() <= 1e-12, "SSW symmetry, trial {trial}");
        let sac = ssw(&a, &c, &scfg).unwrap();
        let scb = ssw(&c, &b, &scfg).unwrap();
        assert!(sab - (sac + scb) <= 1e-10, "SSW triangle, trial {trial}");
        if trial < 10 {
            assert!(vsw(&a, &a, &vcfg).unwrap() <= 1e-12);
            assert!(ssw(&a, &a, &scfg).unwrap() <= 1e-9);
        }
    }
    println!("[acceptance] criterion 6 (sliced metric axioms): PASS");
}

#[test]
fn criterion_07_rotation_invariances() {
    let mut rng = SplitMix64::new(7);
    let vcfg = SlicedConfig {
        p: 2.0,
        psi_slices: 32,
        ..Default::default()
    };
    for _ in 0..10 {
        let a = SphereMeasure::Atoms(random_atoms(&mut rng, 4));
        let b = SphereMeasure::Atoms(random_atoms(&mut rng, 4));
        let steps = 1 + rng.uniform_usize(31) as i64;
        assert!(vsw_axis_invariance_check(&a, &b, steps, &vcfg).unwrap());
    }

    let scfg = SlicedConfig {
        p: 2.0,
        zenith_bandlimit: DESK_BANDLIMIT,
        ..Default::default()
    };
    let a = random_atoms(&mut rng, 5);
    let b = random_atoms(&mut rng, 5);
    let base = ssw(
        &SphereMeasure::Atoms(a.clone()),
        &SphereMeasure::Atoms(b.clone()),
        &scfg,
    )
    .unwrap();
    for _ in 0..5 {
        let q = euler_matrix(
            &EulerAngles::new(
                rng.uniform(0.0, TAU),
                rng.uniform(0.0, PI),
                rng.uniform(0.0, TAU),
            )
            .unwrap(),
        );
        let rotated = ssw(
            &SphereMeasure::Atoms(a.rotated(&q)),
            &SphereMeasure::Atoms(b.rotated(&q)),
            &scfg,
        )
        .unwrap();
        let drift = (rotated - base).abs() / base;
        assert!(drift <= 0.05, "SSW drift {drift}");
    }
    // grid-aligned vertical rotations leave VSW exactly unchanged; a half
    // step only matches to the trapezoid error (sanity guard)
    let a = SphereMeasure::Atoms(random_atoms(&mut rng, 4));
    let b = SphereMeasure::Atoms(random_atoms(&mut rng, 4));
    let base = vsw(&a, &b, &vcfg).unwrap();
    let half = TAU * 0.5 / vcfg.psi_slices as f64;
    let (aa, bb) = match (&a, &b) {
        (SphereMeasure::Atoms(x), SphereMeasure::Atoms(y)) => {
            (rotate_atoms_z(x, half), rotate_atoms_z(y, half))
        }
        _ => unreachable!(),
    };
    let shifted = vsw(&SphereMeasure::Atoms(aa), &SphereMeasure::Atoms(bb), &vcfg).unwrap();
    assert!((base - shifted).abs() <= 0.5 / vcfg.psi_slices as f64 * base.max(1.0));
    println!("[acceptance] criterion 7 (rotation invariances): PASS");
}

/// Exhaustive active-set projection oracle for small dimensions.
#[allow(clippy::needless_range_loop)]
fn simplex_oracle(f: &[f64], w: &[f64]) -> Vec<f64> {
    let m = f.len();
    for mask in 1u32..(1 << m) {
        let mut mass = 0.0;
        let mut weight = 0.0;
        for i in 0..m {
            if mask & (1 << i) != 0 {
                mass += w[i] * f[i];
                weight += w[i];
            }
        }
        let lambda = (1.0 - mass) / weight;
        let mut ok = true;
        for i in 0..m {
            let active = mask & (1 << i) != 0;
            if active && f[i] + lambda <= 0.0 {
                ok = false;
            }
            if !active && f[i] + lambda > 1e-12 {
                ok = false;
            }
        }
        if ok {
            return f
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if mask & (1 << i) != 0 {
                        x + lambda
                    } else {
                        0.0
                    }
                })
                .collect();
        }
    }
    panic!("oracle found no valid support");
}

#[test]
fn criterion_08_regularized_inversion() {
    // simplex projection against the exhaustive QP oracle
    let mut rng = SplitMix64::new(8);
    for _ in 0..100 {
        let m = 2 + rng.uniform_usize(5);
        let f: Vec<f64> = (0..m).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let w: Vec<f64> = (0..m).map(|_| rng.uniform(0.2, 3.0)).collect();
        let fast = project_simplex(&f, &w).unwrap();
        let slow = simplex_oracle(&f, &w);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    // reference-parameter inversion of the semicircle transform of a vMF
    let st = SemicircleTransform::new(
        sphere_grid(DESK_BANDLIMIT),
        so3_grid(DESK_BANDLIMIT, 2 * DESK_BANDLIMIT + 1).unwrap(),
    )
    .unwrap();
    let truth = vmf_density(&VmfSpec::single(50.0, sph(0.7, 1.1)), st.sphere()).unwrap();
    let g = st.forward(&truth).unwrap();
    let params = PdParams {
        rho: 0.1,
        sigma: 1.0,
        tau: 0.25,
        max_iter: 200,
        ..Default::default()
    };
    let sol = pd_invert(&st, &g.values, &params).unwrap();
    // feasibility is exact: nonnegative, weighted mass 1
    assert!(sol.primal.iter().all(|&v| v >= 0.0));
    let mass = weighted_dot(
        &sol.primal,
        &vec![1.0; sol.primal.len()],
        st.domain_weights(),
    )
    .unwrap();
    assert!((mass - 1.0).abs() <= 1e-12, "simplex mass {mass}");

    // supplementary capability check: with a lighter entropy weight the
    // same solver and budget reach the stated accuracy
    let light = PdParams {
        rho: 0.01,
        sigma: 1.0,
        tau: 0.25,
        max_iter: 200,
        ..Default::default()
    };
    let sol_light = pd_invert(&st, &g.values, &light).unwrap();
    let err_light = rel_l1(&sol_light.primal, &truth.values, st.domain_weights());
    assert!(err_light <= 0.1, "rho=0.01 relative L1 error {err_light}");

    // the criterion as stated: rho = 0.1, 200 iterations, <= 0.1 in L1.
    // This bound is not attainable: the rho = 0.1 entropy term biases the
    // minimizer by ~0.23 relative L1 for concentrated densities even with
    // perfectly band-limited data (kappa = 20 gives pinv error 0.003 but
    // regularized error 0.227), the converged rho = 0.1 iterate reaches
    // objective 1.2389 < 1.2641 (the truth's own objective value) yet sits
    // at 0.144 in L1, and at 200 iterations the error is ~0.26.
    let err = rel_l1(&sol.primal, &truth.values, st.domain_weights());
    if err <= 0.1 {
        println!("[acceptance] criterion 8 (regularized inversion): PASS");
    } else {
        println!(
            "[acceptance] criterion 8 (regularized inversion): FAIL \
             (relative L1 {err:.3} at rho=0.1/200 against the generating \
             density; feasibility, the projection oracle and the rho=0.01 \
             capability check all hold)"
        );
    }
    assert!(
        err <= 0.1,
        "relative L1 error {err} at rho=0.1/200 iterations; the stated \
         tolerance conflicts with the entropic bias of the rho=0.1 \
         objective itself - the solver provably minimizes the objective \
         and reaches 0.067 at rho=0.01"
    );
}

#[test]
fn criterion_09_interpolation_endpoints() {
    let kappa = 20.0;
    let vt =
        VerticalSliceTransform::new(sphere_grid(DESK_BANDLIMIT), cylinder_grid(DESK_BANDLIMIT))
            .unwrap();
    let mu = vmf_density(
        &VmfSpec::single(kappa, sph(0.4, 1.2)).symmetrized(),
        vt.sphere(),
    )
    .unwrap();
    let nu = vmf_density(
        &VmfSpec::single(kappa, sph(2.9, 1.9)).symmetrized(),
        vt.sphere(),
    )
    .unwrap();
    let at0 = vcdt_interpolate(&vt, &mu, &nu, 0.0, &InterpMode::Pinv).unwrap();
    let e0 = rel_l2(&at0.values, &mu.values, &vt.sphere().weights);
    assert!(e0 <= 0.05, "V-CDT delta=0 error {e0}");
    let at1 = vcdt_interpolate(&vt, &mu, &nu, 1.0, &InterpMode::Pinv).unwrap();
    let e1 = rel_l2(&at1.values, &nu.values, &vt.sphere().weights);
    assert!(e1 <= 0.05, "V-CDT delta=1 error {e1}");

    let st = SemicircleTransform::new(
        sphere_grid(DESK_BANDLIMIT),
        so3_grid(DESK_BANDLIMIT, 2 * DESK_BANDLIMIT + 1).unwrap(),
    )
    .unwrap();
    let mu = vmf_density(&VmfSpec::single(kappa, sph(0.4, 1.2)), st.sphere()).unwrap();
    let nu = vmf_density(&VmfSpec::single(kappa, sph(1.9, 1.7)), st.sphere()).unwrap();
    let at0 = wcdt_interpolate(&st, &mu, &nu, 0.0, &InterpMode::Pinv).unwrap();
    let e0 = rel_l2(&at0.values, &mu.values, &st.sphere().weights);
    assert!(e0 <= 0.05, "W-CDT delta=0 error {e0}");
    let at1 = wcdt_interpolate(&st, &mu, &nu, 1.0, &InterpMode::Pinv).unwrap();
    let e1 = rel_l2(&at1.values, &nu.values, &st.sphere().weights);
    assert!(e1 <= 0.05, "W-CDT delta=1 error {e1}");
    println!("[acceptance] criterion 9 (interpolation endpoints): PASS");
}

#[test]
fn criterion_10_classification() {
    let pipe = FeaturePipeline::new(DESK_BANDLIMIT).unwrap();
    let run = |id: u8, seed: u64, kind: FeatureKind| -> (f64, f64) {
        let spec = DatasetSpec::new(id, seed).unwrap();
        let data = generate_dataset(&spec).unwrap();
        let labels: Vec<u8> = data.iter().map(|s| s.label).collect();
        let features = pipe.extract_all(&data, kind).unwrap();
        crossvalidate(&features, &labels, 10, 50).unwrap()
    };
    let (acc1, std1) = run(1, 2024, FeatureKind::VerticalCdt);
    assert!(acc1 >= 0.90, "dataset 1 V-CDT accuracy {acc1} +- {std1}");
    let (acc4, std4) = run(4, 2025, FeatureKind::VerticalCdt);
    assert!(acc4 >= 0.90, "dataset 4 V-CDT accuracy {acc4} +- {std4}");
    let (acc5, std5) = run(5, 2026, FeatureKind::SemicircleCdt);
    assert!(acc5 >= 0.90, "dataset 5 W-CDT accuracy {acc5} +- {std5}");
    let (raw1, stdr) = run(1, 2024, FeatureKind::Raw);
    assert!(raw1 <= 0.75, "dataset 1 raw baseline {raw1} +- {stdr}");
    println!(
        "[acceptance] criterion 10 (classification): PASS \
         (v#1 {acc1:.3}, v#4 {acc4:.3}, w#5 {acc5:.3}, raw#1 {raw1:.3})"
    );
}

#[test]
fn criterion_11_lambert_w_and_prox() {
    let mut zs = vec![0.0];
    for i in 0..=240 {
        zs.push(10f64.powf(-6.0 + 12.0 * i as f64 / 240.0));
    }
    for z in zs {
        let y = lambert_w(z).unwrap();
        assert!((y * y.exp() - z).abs() <= 1e-13 * z.max(1.0), "z={z}");
    }
    // prox optimality residual against the per-component Newton oracle
    let mut rng = SplitMix64::new(11);
    for _ in 0..300 {
        let x = rng.uniform(-6.0, 6.0);
        let sigma = rng.uniform(0.05, 3.0);
        let a = rng.uniform(0.05, 2.0);
        let b = rng.uniform(1e-6, 2.0);
        let y = sphereot_core::inversion::prox_kl_conjugate(&[x], sigma, a, &[b]).unwrap()[0];
        // Newton on sigma b e^{y/a} + y - x = 0
        let mut oracle = x.min(0.0) - 1.0;
        for _ in 0..200 {
            let e = sigma * b * (oracle / a).exp();
            let step = (e - x + oracle) / (e / a + 1.0);
            oracle -= step;
            if step.abs() < 1e-15 * oracle.abs().max(1.0) {
                break;
            }
        }
        assert!(
            (y - oracle).abs() <= 1e-9,
            "x={x} sigma={sigma} a={a} b={b}"
        );
    }
    println!("[acceptance] criterion 11 (Lambert W and prox residuals): PASS");
}

/// Reference-scale smoke test (band-limit 44, the published experiment
/// scale). Not part of the desk-scale acceptance run; execute with
/// `cargo test -p sphereot-core --test acceptance -- --ignored`.
#[test]
#[ignore]
fn paper_scale_round_trip_smoke() {
    let bl = 44;
    let mut rng = SplitMix64::new(44);
    let vt = VerticalSliceTransform::new(sphere_grid(bl), cylinder_grid(bl)).unwrap();
    let f = random_band_limited(vt.sphere(), &mut rng, true);
    let back = vt.pseudo_inverse(&vt.forward(&f).unwrap()).unwrap();
    let verr = f
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(verr <= 1e-7, "vertical round-trip at N=44: {verr}");

    let st = SemicircleTransform::new(sphere_grid(bl), so3_grid(bl, 2 * bl + 1).unwrap()).unwrap();
    let f = random_band_limited(st.sphere(), &mut rng, false);
    let back = st.pseudo_inverse(&st.forward(&f).unwrap()).unwrap();
    let werr = f
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(werr <= 1e-7, "semicircle round-trip at N=44: {werr}");
    println!("[smoke] paper-scale round trips: PASS");
}
