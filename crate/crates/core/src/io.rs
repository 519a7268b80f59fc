//! File formats: grid density CSV/JSON, 1-D measure CSV, feature
//! matrices and result tables.
//!
//! Grid density CSV: a header `# grid=<sphere|cylinder|so3> N=<int>
//! [G=<int>]`, then one sample per line in the grid's index order
//! (latitude ring / zenith slow, periodic angle fast, gamma fastest).

use crate::error::{CoreError, Result};
use crate::ot1d::{Flavor, Measure1D, Repr};
use crate::quadrature::{gauss_legendre, GridDensity, GridMeta};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub fn write_grid_density(path: &Path, density: &GridDensity) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    match density.meta {
        GridMeta::Sphere { bandlimit } => writeln!(out, "# grid=sphere N={bandlimit}")?,
        GridMeta::Cylinder { bandlimit } => writeln!(out, "# grid=cylinder N={bandlimit}")?,
        GridMeta::So3 {
            bandlimit,
            gamma_count,
        } => writeln!(out, "# grid=so3 N={bandlimit} G={gamma_count}")?,
    }
    for v in &density.values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_grid_density(path: &Path) -> Result<GridDensity> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::format("empty density file".to_string()))??;
    let meta = parse_density_header(&header)?;
    let mut values = Vec::with_capacity(meta.len());
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        values.push(
            trimmed
                .parse::<f64>()
                .map_err(|e| CoreError::format(format!("bad sample value {trimmed:?}: {e}")))?,
        );
    }
    GridDensity::new(meta, values)
}

fn parse_density_header(header: &str) -> Result<GridMeta> {
    let header = header.trim();
    if !header.starts_with('#') {
        return Err(CoreError::format(format!(
            "density header must start with '#', got {header:?}"
        )));
    }
    let mut grid = None;
    let mut n = None;
    let mut g = None;
    for token in header[1..].split_whitespace() {
        if let Some(v) = token.strip_prefix("grid=") {
            grid = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("N=") {
            n = Some(
                v.parse::<usize>()
                    .map_err(|e| CoreError::format(format!("bad band-limit in header: {e}")))?,
            );
        } else if let Some(v) = token.strip_prefix("G=") {
            g = Some(
                v.parse::<usize>()
                    .map_err(|e| CoreError::format(format!("bad gamma count in header: {e}")))?,
            );
        }
    }
    let bandlimit =
        n.ok_or_else(|| CoreError::format("header missing N=<band-limit>".to_string()))?;
    match grid.as_deref() {
        Some("sphere") => Ok(GridMeta::Sphere { bandlimit }),
        Some("cylinder") => Ok(GridMeta::Cylinder { bandlimit }),
        Some("so3") => {
            let gamma_count =
                g.ok_or_else(|| CoreError::format("so3 header missing G=<count>".to_string()))?;
            Ok(GridMeta::So3 {
                bandlimit,
                gamma_count,
            })
        }
        other => Err(CoreError::format(format!("unknown grid kind {other:?}"))),
    }
}

/// JSON alternative carrying explicit node coordinates next to the values.
#[derive(Debug, Serialize, Deserialize)]
pub struct GridDensityJson {
    pub meta: GridMeta,
    /// (phi, theta) / (psi, t) / (alpha, beta, gamma) per node
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

pub fn write_grid_density_json(path: &Path, density: &GridDensity) -> Result<()> {
    let nodes: Vec<Vec<f64>> = match density.meta {
        GridMeta::Sphere { bandlimit } => {
            let grid = crate::quadrature::sphere_grid(bandlimit);
            (0..grid.len())
                .map(|m| {
                    let (phi, theta) = grid.angles(m);
                    vec![phi, theta]
                })
                .collect()
        }
        GridMeta::Cylinder { bandlimit } => {
            let grid = crate::quadrature::cylinder_grid(bandlimit);
            let mut nodes = Vec::with_capacity(grid.len());
            for &t in &grid.ts {
                for &psi in &grid.psis {
                    nodes.push(vec![psi, t]);
                }
            }
            nodes
        }
        GridMeta::So3 {
            bandlimit,
            gamma_count,
        } => {
            let grid = crate::quadrature::so3_grid(bandlimit, gamma_count)?;
            (0..grid.len())
                .map(|l| {
                    let (a, b, g) = grid.euler(l);
                    vec![a, b, g]
                })
                .collect()
        }
    };
    let doc = GridDensityJson {
        meta: density.meta,
        nodes,
        values: density.values.clone(),
    };
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CoreError::format(format!("serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_grid_density_json(path: &Path) -> Result<GridDensity> {
    let text = std::fs::read_to_string(path)?;
    let doc: GridDensityJson =
        serde_json::from_str(&text).map_err(|e| CoreError::format(format!("parse: {e}")))?;
    GridDensity::new(doc.meta, doc.values)
}

/// Measure CSV: `# measure flavor=<interval|circle> kind=<atoms|density>
/// [weights=<gauss-legendre|uniform>]`, then `position,mass` or
/// `node,value` lines. Density weights are reconstructed from the layout.
pub fn write_measure(path: &Path, measure: &Measure1D) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let flavor = match measure.flavor {
        Flavor::Interval => "interval",
        Flavor::Circle => "circle",
    };
    match &measure.repr {
        Repr::Atoms { positions, masses } => {
            writeln!(out, "# measure flavor={flavor} kind=atoms")?;
            for (x, m) in positions.iter().zip(masses) {
                writeln!(out, "{x},{m}")?;
            }
        }
        Repr::Density { nodes, values, .. } => {
            let weights = match measure.flavor {
                Flavor::Interval => "gauss-legendre",
                Flavor::Circle => "uniform",
            };
            writeln!(
                out,
                "# measure flavor={flavor} kind=density weights={weights}"
            )?;
            for (x, v) in nodes.iter().zip(values) {
                writeln!(out, "{x},{v}")?;
            }
        }
    }
    Ok(())
}

pub fn read_measure(path: &Path) -> Result<Measure1D> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoreError::format("empty measure file".to_string()))??;
    let header = header.trim();
    if !header.starts_with('#') {
        return Err(CoreError::format(
            "measure header must start with '#'".to_string(),
        ));
    }
    let mut flavor = None;
    let mut kind = None;
    for token in header[1..].split_whitespace() {
        if let Some(v) = token.strip_prefix("flavor=") {
            flavor = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("kind=") {
            kind = Some(v.to_string());
        }
    }
    let flavor = match flavor.as_deref() {
        Some("interval") => Flavor::Interval,
        Some("circle") => Flavor::Circle,
        other => return Err(CoreError::format(format!("unknown flavor {other:?}"))),
    };
    let mut first = Vec::new();
    let mut second = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (a, b) = trimmed
            .split_once(',')
            .ok_or_else(|| CoreError::format(format!("expected 'a,b' line, got {trimmed:?}")))?;
        first.push(
            a.trim()
                .parse::<f64>()
                .map_err(|e| CoreError::format(format!("bad number {a:?}: {e}")))?,
        );
        second.push(
            b.trim()
                .parse::<f64>()
                .map_err(|e| CoreError::format(format!("bad number {b:?}: {e}")))?,
        );
    }
    match kind.as_deref() {
        Some("atoms") => {
            let atoms: Vec<(f64, f64)> =
                first.iter().cloned().zip(second.iter().cloned()).collect();
            match flavor {
                Flavor::Interval => Measure1D::interval_atoms(&atoms),
                Flavor::Circle => Measure1D::circle_atoms(&atoms),
            }
        }
        Some("density") => {
            let weights = reconstruct_weights(flavor, &first)?;
            match flavor {
                Flavor::Interval => Measure1D::interval_density(&first, &weights, &second),
                Flavor::Circle => Measure1D::circle_density(&first, &weights, &second),
            }
        }
        other => Err(CoreError::format(format!("unknown measure kind {other:?}"))),
    }
}

fn reconstruct_weights(flavor: Flavor, nodes: &[f64]) -> Result<Vec<f64>> {
    match flavor {
        Flavor::Interval => {
            // expect the Gauss-Legendre layout of matching size
            let rule = gauss_legendre(nodes.len().saturating_sub(1));
            for (a, b) in rule.nodes.iter().zip(nodes) {
                if (a - b).abs() > 1e-9 {
                    return Err(CoreError::format(
                        "interval density nodes are not a Gauss-Legendre layout".to_string(),
                    ));
                }
            }
            Ok(rule.weights)
        }
        Flavor::Circle => {
            let g = nodes.len();
            for (i, &x) in nodes.iter().enumerate() {
                if (x - TAU * i as f64 / g as f64).abs() > 1e-9 {
                    return Err(CoreError::format(
                        "circle density nodes are not the uniform layout".to_string(),
                    ));
                }
            }
            Ok(vec![TAU / g as f64; g])
        }
    }
}

/// Experiment configuration as JSON.
pub fn write_experiment_config(
    path: &Path,
    config: &crate::pipelines::ExperimentConfig,
) -> Result<()> {
    let text = serde_json::to_string_pretty(config)
        .map_err(|e| CoreError::format(format!("serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_experiment_config(path: &Path) -> Result<crate::pipelines::ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CoreError::format(format!("parse: {e}")))
}

/// Feature matrix CSV: one sample per row, features then the label in the
/// last column. An optional `# key=value ...` header carries metadata.
pub fn write_feature_matrix(
    path: &Path,
    header: Option<&str>,
    features: &[Vec<f64>],
    labels: &[u8],
) -> Result<()> {
    if features.len() != labels.len() {
        return Err(CoreError::shape("features and labels disagree".to_string()));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(h) = header {
        writeln!(out, "# {h}")?;
    }
    for (row, &label) in features.iter().zip(labels) {
        for v in row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{label}")?;
    }
    Ok(())
}

pub struct FeatureMatrix {
    pub header: Option<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

pub fn read_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut header = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            header = Some(rest.trim().to_string());
            continue;
        }
        let mut cells: Vec<&str> = trimmed.split(',').collect();
        let label_cell = cells
            .pop()
            .ok_or_else(|| CoreError::format("empty row".to_string()))?;
        let label = label_cell
            .trim()
            .parse::<u8>()
            .map_err(|e| CoreError::format(format!("bad label {label_cell:?}: {e}")))?;
        let row = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| CoreError::format(format!("bad feature {c:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(row);
        labels.push(label);
    }
    Ok(FeatureMatrix {
        header,
        features,
        labels,
    })
}

/// Result table row mirroring the success-rate tables: feature kind,
/// dataset id, mean accuracy, standard deviation.
pub fn append_result_row(
    path: &Path,
    feature_kind: &str,
    dataset_id: u8,
    mean: f64,
    std: f64,
) -> Result<()> {
    let exists = path.exists();
    let mut out = std::io::BufWriter::new(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?,
    );
    if !exists {
        writeln!(out, "features,dataset,mean_accuracy,std")?;
    }
    writeln!(out, "{feature_kind},{dataset_id},{mean},{std}")?;
    Ok(())
}
