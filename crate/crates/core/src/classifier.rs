//! One-vs-rest linear SVM trained by dual coordinate descent.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ w·x̂ᵢ)` where
//! `x̂ = [x, 1]`, so the bias is part of `w` and regularized with it. The
//! dual is solved one coordinate at a time in a seeded random order.

use std::io::{Read, Write};

use rand::seq::SliceRandom;

use crate::readout::FeatureMatrix;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Upper bound on passes over the data per binary problem.
    pub max_passes: usize,
    /// Stop once the projected-gradient spread of a pass falls below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_passes: 1000,
            tolerance: 0.1,
            seed: 0,
        }
    }
}

/// Per-class weight vectors and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Original label of each class row.
    pub classes: Vec<usize>,
    pub dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c: f64,
}

const MAGIC: &[u8; 8] = b"SNNLSVM\0";
const VERSION: u32 = 1;

impl LinearModel {
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }

    /// Label with the highest score; the first class wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let s = self.scores(x)?;
        let mut best = 0;
        for (i, &v) in s.iter().enumerate() {
            if v > s[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    pub fn accuracy(&self, features: &FeatureMatrix, labels: &[usize]) -> Result<f64> {
        if features.rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.rows {
            return Err(Error::DimensionMismatch {
                expected: features.rows,
                actual: labels.len(),
            });
        }
        let mut correct = 0;
        for (row, &l) in features.iter_rows().zip(labels) {
            if self.predict(row)? == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / features.rows as f64)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.classes.len() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&self.c.to_le_bytes())?;
        for (k, c) in self.classes.iter().enumerate() {
            w.write_all(&(*c as u32).to_le_bytes())?;
            for v in &self.weights[k] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.biases[k].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        self.write_to(&mut b).expect("writing to memory");
        b
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::io("reading classifier", e))?;
        let mut cur = crate::model_io::Cursor::new(&bytes);
        if cur.take(8)? != MAGIC {
            return Err(Error::Format("not a classifier file".into()));
        }
        let version = cur.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported classifier version {version}")));
        }
        let k = cur.u32()? as usize;
        let dim = cur.u32()? as usize;
        let c = cur.f64()?;
        let mut classes = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        let mut biases = Vec::with_capacity(k);
        for _ in 0..k {
            classes.push(cur.u32()? as usize);
            weights.push((0..dim).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?);
            biases.push(cur.f64()?);
        }
        cur.finish()?;
        Ok(LinearModel {
            classes,
            dim,
            weights,
            biases,
            c,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits one binary classifier per distinct label.
pub fn fit(features: &FeatureMatrix, labels: &[usize], params: &SvmParams) -> Result<LinearModel> {
    if labels.len() != features.rows {
        return Err(Error::DimensionMismatch {
            expected: features.rows,
            actual: labels.len(),
        });
    }
    if !(params.c > 0.0) {
        return Err(Error::param("c", "must be positive"));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Classifier(format!(
            "need at least two classes, found {}",
            classes.len()
        )));
    }
    let norms: Vec<f64> = features.iter_rows().map(|r| dot(r, r) + 1.0).collect();
    let solve = |k: usize| binary_dual_cd(features, &norms, labels, classes[k], k, params);
    #[cfg(feature = "parallel")]
    let solved: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        (0..classes.len()).into_par_iter().map(solve).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let solved: Vec<(Vec<f64>, f64)> = (0..classes.len()).map(solve).collect();
    let (weights, biases) = solved.into_iter().unzip();
    Ok(LinearModel {
        classes,
        dim: features.cols,
        weights,
        biases,
        c: params.c,
    })
}

fn binary_dual_cd(
    x: &FeatureMatrix,
    norms: &[f64],
    labels: &[usize],
    positive: usize,
    stream: usize,
    p: &SvmParams,
) -> (Vec<f64>, f64) {
    let n = x.rows;
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect();
    let mut w = vec![0.0; x.cols];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng::stream(p.seed, Purpose::Svm, stream);
    for _ in 0..p.max_passes {
        order.shuffle(&mut r);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let xi = x.row(i);
            let g = y[i] * (dot(&w, xi) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == p.c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / norms[i]).clamp(0.0, p.c);
                let d = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(xi) {
                    *wj += d * xj;
                }
                b += d;
            }
        }
        if pg_max - pg_min < p.tolerance {
            break;
        }
    }
    (w, b)
}

/// Fraction of the most frequent label.
pub fn majority_share(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let max = labels.iter().copied().max().unwrap();
    let mut counts = vec![0usize; max + 1];
    labels.iter().for_each(|&l| counts[l] += 1);
    Ok(*counts.iter().max().unwrap() as f64 / labels.len() as f64)
}
