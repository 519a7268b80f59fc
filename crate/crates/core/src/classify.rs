//! Deterministic linear classification: PCA through the Gram matrix,
//! an L2-regularized linear SVM trained by full-batch subgradient descent
//! with a fixed schedule, ridge regression as an independent cross-check,
//! and stratified k-fold cross-validation.

use crate::error::{CoreError, Result};
use crate::util::comp_sum;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted.
fn sym_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| a[i][i]).collect();
    (eig, v)
}

/// Principal component analysis fitted through the sample Gram matrix
/// (suited to many more features than samples).
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// component vectors, each of feature length
    pub components: Vec<Vec<f64>>,
}

impl Pca {
    pub fn fit(data: &[Vec<f64>], dim: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(CoreError::domain("PCA needs samples".to_string()));
        }
        let n = data.len();
        let d = data[0].len();
        let mut mean = vec![0.0; d];
        for x in data {
            if x.len() != d {
                return Err(CoreError::shape("ragged feature matrix".to_string()));
            }
            for (m, &xi) in mean.iter_mut().zip(x) {
                *m += xi / n as f64;
            }
        }
        let centered: Vec<Vec<f64>> = data
            .iter()
            .map(|x| x.iter().zip(&mean).map(|(&xi, &m)| xi - m).collect())
            .collect();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let g = comp_sum(centered[i].iter().zip(&centered[j]).map(|(&a, &b)| a * b));
                gram[i][j] = g;
                gram[j][i] = g;
            }
        }
        let (eig, vecs) = sym_eigen(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig[b].partial_cmp(&eig[a]).unwrap());
        let max_eig = eig[order[0]].max(0.0);
        let mut components = Vec::new();
        for &idx in order.iter().take(dim.min(n)) {
            let lam = eig[idx];
            if lam <= 1e-12 * max_eig.max(1.0) {
                break;
            }
            // covariance eigenvector: X^T u / sqrt(lambda)
            let mut comp = vec![0.0; d];
            for (i, row) in centered.iter().enumerate() {
                let u = vecs[i][idx];
                for (c, &xi) in comp.iter_mut().zip(row) {
                    *c += u * xi;
                }
            }
            let norm = comp_sum(comp.iter().map(|&c| c * c)).sqrt();
            if norm > 0.0 {
                for c in comp.iter_mut() {
                    *c /= norm;
                }
            }
            components.push(comp);
        }
        Ok(Self { mean, components })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|comp| {
                comp_sum(
                    comp.iter()
                        .zip(x)
                        .zip(&self.mean)
                        .map(|((&c, &xi), &m)| c * (xi - m)),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    /// hinge loss + L2, full-batch subgradient, fixed schedule
    Svm,
    /// ridge regression on +-1 targets
    Ridge,
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        comp_sum(self.weights.iter().zip(x).map(|(&w, &xi)| w * xi)) + self.bias
    }
}

/// Linear SVM by deterministic full-batch subgradient descent.
pub fn train_svm(x: &[Vec<f64>], y: &[f64], lambda: f64, epochs: usize) -> LinearModel {
    let n = x.len();
    let d = x[0].len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for t in 1..=epochs {
        let eta = 1.0 / (lambda * t as f64);
        let mut grad_w = vec![0.0; d];
        let mut grad_b = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let margin = yi * (comp_sum(w.iter().zip(xi).map(|(&a, &c)| a * c)) + b);
            if margin < 1.0 {
                for (g, &c) in grad_w.iter_mut().zip(xi) {
                    *g -= yi * c / n as f64;
                }
                grad_b -= yi / n as f64;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi -= eta * (lambda * *wi + g);
        }
        b -= eta * grad_b;
    }
    LinearModel {
        weights: w,
        bias: b,
    }
}

/// Ridge regression on +-1 targets, solved by Gaussian elimination with
/// partial pivoting on the normal equations (features are centered).
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> LinearModel {
    let n = x.len();
    let d = x[0].len();
    let mut mean_x = vec![0.0; d];
    let mut mean_y = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        for (m, &c) in mean_x.iter_mut().zip(xi) {
            *m += c / n as f64;
        }
        mean_y += yi / n as f64;
    }
    let mut a = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for (xi, &yi) in x.iter().zip(y) {
        let cx: Vec<f64> = xi.iter().zip(&mean_x).map(|(&c, &m)| c - m).collect();
        for i in 0..d {
            rhs[i] += cx[i] * (yi - mean_y);
            for j in i..d {
                a[i][j] += cx[i] * cx[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
        a[i][i] += lambda;
    }
    let beta = solve_linear(a, rhs);
    let bias = mean_y - comp_sum(beta.iter().zip(&mean_x).map(|(&b, &m)| b * m));
    LinearModel {
        weights: beta,
        bias,
    }
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        if diag.abs() < 1e-300 {
            continue;
        }
        for row in (col + 1)..n {
            let factor = a[row][col] / diag;
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = if a[row][row].abs() < 1e-300 {
            0.0
        } else {
            acc / a[row][row]
        };
    }
    x
}

/// Stratified k-fold cross-validation with train-only PCA. Labels are
/// binary (0/1). Returns mean accuracy and sample standard deviation
/// over folds.
pub fn crossvalidate(
    features: &[Vec<f64>],
    labels: &[u8],
    folds: usize,
    pca_dim: usize,
    kind: ClassifierKind,
) -> Result<(f64, f64)> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(CoreError::shape("features and labels disagree".to_string()));
    }
    if folds < 2 || folds > features.len() {
        return Err(CoreError::config(format!("cannot form {folds} folds")));
    }
    // stratified, deterministic: within each class, cycle fold indices
    let mut fold_of = vec![0usize; labels.len()];
    for class in [0u8, 1] {
        let mut counter = 0usize;
        for (i, &l) in labels.iter().enumerate() {
            if l == class {
                fold_of[i] = counter % folds;
                counter += 1;
            }
        }
    }
    let mut accuracies = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
        if test_idx.is_empty() || train_idx.is_empty() {
            return Err(CoreError::config("degenerate fold".to_string()));
        }
        let train: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
        let pca = Pca::fit(&train, pca_dim)?;
        let xtrain: Vec<Vec<f64>> = train.iter().map(|x| pca.transform(x)).collect();
        let ytrain: Vec<f64> = train_idx
            .iter()
            .map(|&i| if labels[i] == 1 { 1.0 } else { -1.0 })
            .collect();
        let model = match kind {
            ClassifierKind::Svm => train_svm(&xtrain, &ytrain, 1e-3, 400),
            ClassifierKind::Ridge => train_ridge(&xtrain, &ytrain, 1e-6),
        };
        let mut correct = 0usize;
        for &i in &test_idx {
            let score = model.predict(&pca.transform(&features[i]));
            let predicted = if score >= 0.0 { 1u8 } else { 0u8 };
            if predicted == labels[i] {
                correct += 1;
            }
        }
        accuracies.push(correct as f64 / test_idx.len() as f64);
    }
    let mean = comp_sum(accuracies.iter().copied()) / folds as f64;
    let var = comp_sum(accuracies.iter().map(|&a| (a - mean) * (a - mean))) / (folds as f64 - 1.0);
    Ok((mean, var.sqrt()))
}
