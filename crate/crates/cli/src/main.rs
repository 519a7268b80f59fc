//! Command-line front end: transforms, inversion, sliced distances,
//! interpolation, vMF generation, dataset generation and classification,
//! all through deterministic file-based I/O.

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphereot_core::error::CoreError;
use sphereot_core::geometry::sph;
use sphereot_core::harmonic::{SemicircleTransform, VerticalSliceTransform};
use sphereot_core::inversion::{pd_invert, PdParams, WeightedOp};
use sphereot_core::io;
use sphereot_core::pipelines::{
    generate_dataset, vcdt_interpolate, vmf_density, wcdt_interpolate, DatasetSpec, FeatureKind,
    FeaturePipeline, InterpMode, VmfSpec, VmfTerm,
};
use sphereot_core::quadrature::{cylinder_grid, so3_grid, sphere_grid, GridDensity, GridMeta};
use sphereot_core::sliced::{ssw_densities, vsw_densities, SlicedConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sphereot",
    about = "Sliced optimal transport on the 2-sphere",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformOp {
    /// vertical slice transform (sphere -> cylinder)
    V,
    /// normalized semicircle transform (sphere -> SO(3))
    W,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InvertMode {
    /// truncated Moore-Penrose pseudoinverse
    Pinv,
    /// KL-regularized primal-dual inversion
    Reg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Vsw,
    Ssw,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Features {
    Raw,
    V,
    W,
}

#[derive(Args)]
struct PdArgs {
    /// regularization weight of the entropy term
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// dual step size
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// primal step size
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// iteration budget
    #[arg(long, default_value_t = 200)]
    iters: usize,
}

impl PdArgs {
    fn params(&self) -> PdParams {
        PdParams {
            rho: self.rho,
            sigma: self.sigma,
            tau: self.tau,
            max_iter: self.iters,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Apply a forward spherical transform to a sphere density file
    Transform {
        #[arg(long, value_enum)]
        op: TransformOp,
        /// gamma grid size for the SO(3) output (default 2N+1)
        #[arg(long)]
        gamma: Option<usize>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Invert a transformed density back onto the sphere
    Invert {
        #[arg(long, value_enum)]
        op: TransformOp,
        #[arg(long, value_enum)]
        mode: InvertMode,
        #[command(flatten)]
        pd: PdArgs,
        /// write the objective trace of the regularized mode as CSV
        #[arg(long)]
        trace: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Sliced Wasserstein distance between two sphere density files
    Distance {
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        a: PathBuf,
        b: PathBuf,
    },
    /// Sliced-CDT displacement interpolation between two densities
    Interpolate {
        #[arg(long, value_enum)]
        op: TransformOp,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum)]
        mode: InvertMode,
        #[command(flatten)]
        pd: PdArgs,
        mu: PathBuf,
        nu: PathBuf,
        output: PathBuf,
    },
    /// Sample a von Mises-Fisher density (or mixture) onto a sphere grid
    GenVmf {
        /// concentration of the single component
        #[arg(long, default_value_t = 50.0)]
        kappa: f64,
        /// mean direction as "phi,theta"
        #[arg(long, default_value = "0,0")]
        mean: String,
        /// mixture components "weight:phi,theta[:kappa]"; overrides --mean
        #[arg(long)]
        mix: Vec<String>,
        #[arg(long)]
        symmetrize: bool,
        #[arg(long, default_value_t = 16)]
        bandlimit: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate one of the five synthetic vMF datasets
    GenDataset {
        #[arg(long)]
        id: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        bandlimit: usize,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Cross-validated linear classification of a dataset file
    Classify {
        #[arg(long, value_enum)]
        features: Features,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 50)]
        pca: usize,
        #[arg(long)]
        data: PathBuf,
        /// append "features,dataset,mean,std" to this CSV
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                CoreError::Numeric(_) => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}

fn run(command: Command) -> Result<(), CoreError> {
    match command {
        Command::Transform {
            op,
            gamma,
            input,
            output,
        } => {
            let f = io::read_grid_density(&input)?;
            let bl = require_sphere(&f)?;
            match op {
                TransformOp::V => {
                    let vt = VerticalSliceTransform::new(sphere_grid(bl), cylinder_grid(bl))?;
                    io::write_grid_density(&output, &vt.forward(&f)?)?;
                }
                TransformOp::W => {
                    let g = gamma.unwrap_or(2 * bl + 1);
                    let st = SemicircleTransform::new(sphere_grid(bl), so3_grid(bl, g)?)?;
                    io::write_grid_density(&output, &st.forward(&f)?)?;
                }
            }
            Ok(())
        }
        Command::Invert {
            op,
            mode,
            pd,
            trace,
            input,
            output,
        } => {
            let g = io::read_grid_density(&input)?;
            let result = match (op, &g.meta) {
                (TransformOp::V, GridMeta::Cylinder { bandlimit }) => {
                    let vt = VerticalSliceTransform::new(
                        sphere_grid(*bandlimit),
                        cylinder_grid(*bandlimit),
                    )?;
                    match mode {
                        InvertMode::Pinv => vt.pseudo_inverse(&g)?,
                        InvertMode::Reg => regularized_invert(&vt, &g, &pd, trace.as_deref())?,
                    }
                }
                (
                    TransformOp::W,
                    GridMeta::So3 {
                        bandlimit,
                        gamma_count,
                    },
                ) => {
                    let st = SemicircleTransform::new(
                        sphere_grid(*bandlimit),
                        so3_grid(*bandlimit, *gamma_count)?,
                    )?;
                    match mode {
                        InvertMode::Pinv => st.pseudo_inverse(&g)?,
                        InvertMode::Reg => regularized_invert(&st, &g, &pd, trace.as_deref())?,
                    }
                }
                _ => {
                    return Err(CoreError::shape(format!(
                        "input grid {:?} does not match transform --op",
                        g.meta
                    )))
                }
            };
            io::write_grid_density(&output, &result)?;
            Ok(())
        }
        Command::Distance { metric, p, a, b } => {
            let fa = io::read_grid_density(&a)?;
            let fb = io::read_grid_density(&b)?;
            let bl = require_sphere(&fa)?;
            fb.expect_meta(fa.meta)?;
            let cfg = SlicedConfig {
                p,
                ..Default::default()
            };
            let value = match metric {
                Metric::Vsw => {
                    let vt = VerticalSliceTransform::new(sphere_grid(bl), cylinder_grid(bl))?;
                    vsw_densities(&vt, &fa, &fb, &cfg)?
                }
                Metric::Ssw => {
                    let st = SemicircleTransform::new(sphere_grid(bl), so3_grid(bl, 2 * bl + 1)?)?;
                    ssw_densities(&st, &fa, &fb, &cfg)?
                }
            };
            println!("{value}");
            Ok(())
        }
        Command::Interpolate {
            op,
            delta,
            mode,
            pd,
            mu,
            nu,
            output,
        } => {
            let fmu = io::read_grid_density(&mu)?;
            let fnu = io::read_grid_density(&nu)?;
            let bl = require_sphere(&fmu)?;
            fnu.expect_meta(fmu.meta)?;
            let interp_mode = match mode {
                InvertMode::Pinv => InterpMode::Pinv,
                InvertMode::Reg => InterpMode::Regularized(pd.params()),
            };
            let result = match op {
                TransformOp::V => {
                    let vt = VerticalSliceTransform::new(sphere_grid(bl), cylinder_grid(bl))?;
                    vcdt_interpolate(&vt, &fmu, &fnu, delta, &interp_mode)?
                }
                TransformOp::W => {
                    let st = SemicircleTransform::new(sphere_grid(bl), so3_grid(bl, 2 * bl + 1)?)?;
                    wcdt_interpolate(&st, &fmu, &fnu, delta, &interp_mode)?
                }
            };
            io::write_grid_density(&output, &result)?;
            Ok(())
        }
        Command::GenVmf {
            kappa,
            mean,
            mix,
            symmetrize,
            bandlimit,
            output,
        } => {
            let mut spec = if mix.is_empty() {
                let (phi, theta) = parse_angle_pair(&mean)?;
                VmfSpec::single(kappa, sph(phi, theta))
            } else {
                let terms = mix
                    .iter()
                    .map(|entry| parse_mix_term(entry, kappa))
                    .collect::<Result<Vec<_>, CoreError>>()?;
                VmfSpec::mixture(terms)?
            };
            if symmetrize {
                spec = spec.symmetrized();
            }
            let grid = sphere_grid(bandlimit);
            io::write_grid_density(&output, &vmf_density(&spec, &grid)?)?;
            Ok(())
        }
        Command::GenDataset {
            id,
            seed,
            bandlimit,
            per_class,
            output,
        } => {
            let spec = DatasetSpec {
                per_class,
                bandlimit,
                ..DatasetSpec::new(id, seed)?
            };
            let data = generate_dataset(&spec)?;
            let features: Vec<Vec<f64>> = data.iter().map(|s| s.density.values.clone()).collect();
            let labels: Vec<u8> = data.iter().map(|s| s.label).collect();
            let header = format!(
                "dataset={id} grid=sphere N={bandlimit} seed={seed} per_class={per_class} kappa={}",
                spec.kappa
            );
            io::write_feature_matrix(&output, Some(&header), &features, &labels)?;
            Ok(())
        }
        Command::Classify {
            features,
            folds,
            pca,
            data,
            results,
        } => {
            let matrix = io::read_feature_matrix(&data)?;
            let header = matrix
                .header
                .as_deref()
                .ok_or_else(|| CoreError::format("dataset file lacks a header".to_string()))?;
            let bandlimit = header
                .split_whitespace()
                .find_map(|t| t.strip_prefix("N=").and_then(|v| v.parse::<usize>().ok()))
                .ok_or_else(|| {
                    CoreError::format("dataset header lacks N=<band-limit>".to_string())
                })?;
            let dataset_id = header
                .split_whitespace()
                .find_map(|t| {
                    t.strip_prefix("dataset=")
                        .and_then(|v| v.parse::<u8>().ok())
                })
                .unwrap_or(0);
            let meta = GridMeta::Sphere { bandlimit };
            let kind = match features {
                Features::Raw => FeatureKind::Raw,
                Features::V => FeatureKind::VerticalCdt,
                Features::W => FeatureKind::SemicircleCdt,
            };
            let feature_rows: Vec<Vec<f64>> = if kind == FeatureKind::Raw {
                matrix.features
            } else {
                let pipe = FeaturePipeline::new(bandlimit)?;
                let densities = matrix
                    .features
                    .iter()
                    .map(|row| GridDensity::new(meta, row.clone()))
                    .collect::<Result<Vec<_>, CoreError>>()?;
                sphereot_core::util::parallel_map(&densities, |d| pipe.extract(d, kind))
                    .into_iter()
                    .collect::<Result<Vec<_>, CoreError>>()?
            };
            let (mean, std) =
                sphereot_core::pipelines::crossvalidate(&feature_rows, &matrix.labels, folds, pca)?;
            println!("mean_accuracy={mean} std={std}");
            if let Some(path) = results {
                let kind_name = match features {
                    Features::Raw => "raw",
                    Features::V => "v-cdt",
                    Features::W => "w-cdt",
                };
                io::append_result_row(&path, kind_name, dataset_id, mean, std)?;
            }
            Ok(())
        }
    }
}

fn regularized_invert(
    op: &dyn WeightedOp,
    g: &GridDensity,
    pd: &PdArgs,
    trace: Option<&std::path::Path>,
) -> Result<GridDensity, CoreError> {
    let sol = pd_invert(op, &g.values, &pd.params())?;
    if let Some(path) = trace {
        let mut text = String::from("iteration,objective\n");
        for (i, obj) in sol.objective_trace.iter().enumerate() {
            text.push_str(&format!("{i},{obj}\n"));
        }
        std::fs::write(path, text)?;
    }
    GridDensity::new(op.domain_meta(), sol.primal)
}

fn require_sphere(f: &GridDensity) -> Result<usize, CoreError> {
    match f.meta {
        GridMeta::Sphere { bandlimit } => Ok(bandlimit),
        other => Err(CoreError::shape(format!(
            "expected a sphere density, got {other:?}"
        ))),
    }
}

fn parse_angle_pair(text: &str) -> Result<(f64, f64), CoreError> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| CoreError::format(format!("expected \"phi,theta\", got {text:?}")))?;
    let phi = a
        .trim()
        .parse::<f64>()
        .map_err(|e| CoreError::format(format!("bad angle {a:?}: {e}")))?;
    let theta = b
        .trim()
        .parse::<f64>()
        .map_err(|e| CoreError::format(format!("bad angle {b:?}: {e}")))?;
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(CoreError::domain(format!("theta {theta} outside [0, pi]")));
    }
    Ok((phi, theta))
}

/// "weight:phi,theta" or "weight:phi,theta:kappa"
fn parse_mix_term(entry: &str, default_kappa: f64) -> Result<VmfTerm, CoreError> {
    let parts: Vec<&str> = entry.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(CoreError::format(format!(
            "mix term must be \"weight:phi,theta[:kappa]\", got {entry:?}"
        )));
    }
    let weight = parts[0]
        .trim()
        .parse::<f64>()
        .map_err(|e| CoreError::format(format!("bad weight {:?}: {e}", parts[0])))?;
    let (phi, theta) = parse_angle_pair(parts[1])?;
    let kappa = if parts.len() == 3 {
        parts[2]
            .trim()
            .parse::<f64>()
            .map_err(|e| CoreError::format(format!("bad kappa {:?}: {e}", parts[2])))?
    } else {
        default_kappa
    };
    Ok(VmfTerm {
        weight,
        kappa,
        mean: sph(phi, theta),
    })
}
