use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DistillError;

pub const DEFAULT_MARGIN: f64 = 1.0;

const STOCHASTIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StackSource {
    LanguageModel,
    ObjectModel,
}

/// Attention heads, each `query tokens x attended positions`, rows summing
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack {
    pub heads: Vec<DMatrix<f64>>,
    pub source: StackSource,
}

impl AttentionStack {
    pub fn new(heads: Vec<DMatrix<f64>>, source: StackSource) -> Result<Self, DistillError> {
        for (head, m) in heads.iter().enumerate() {
            if let Some(bad) = m.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return Err(DistillError::NotStochastic {
                    head,
                    detail: format!("entry {bad}"),
                });
            }
            for (r, row) in m.row_iter().enumerate() {
                let s = row.sum();
                if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    return Err(DistillError::NotStochastic {
                        head,
                        detail: format!("row {r} sums to {s}"),
                    });
                }
            }
        }
        Ok(AttentionStack { heads, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    Language,
    Object,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRepresentation {
    pub embedding: DVector<f64>,
    pub space: Space,
}

/// Maps object-space row vectors into language space: `v · W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    /// `V-dim x L-dim`.
    pub w: DMatrix<f64>,
}

impl ProjectionMatrix {
    pub fn zeros(v_dim: usize, l_dim: usize) -> Self {
        ProjectionMatrix {
            w: DMatrix::zeros(v_dim, l_dim),
        }
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.w.tr_mul(v)
    }
}

fn check_alignment(l: &AttentionStack, o: &AttentionStack, align: &[(usize, usize)]) -> Result<(), DistillError> {
    let mismatch = |m: String| Err(DistillError::ShapeMismatch(m));
    if l.heads.len() != o.heads.len() {
        return mismatch(format!("{} heads vs {}", l.heads.len(), o.heads.len()));
    }
    for (i, (a, b)) in l.heads.iter().zip(&o.heads).enumerate() {
        if a.ncols() != b.ncols() {
            return mismatch(format!("head {i}: {} columns vs {}", a.ncols(), b.ncols()));
        }
        if let Some((x, y)) = align.iter().find(|(x, y)| *x >= a.nrows() || *y >= b.nrows()) {
            return mismatch(format!("head {i}: aligned rows ({x}, {y}) out of range"));
        }
    }
    Ok(())
}

/// Sum over heads and aligned object-token rows of the squared distance
/// between language and object attention. `align` pairs a language row with
/// an object-model row.
pub fn attention_loss(l: &AttentionStack, o: &AttentionStack, align: &[(usize, usize)]) -> Result<f64, DistillError> {
    check_alignment(l, o, align)?;
    Ok(l.heads
        .iter()
        .zip(&o.heads)
        .map(|(a, b)| {
            align
                .iter()
                .map(|&(x, y)| (a.row(x) - b.row(y)).norm_squared())
                .sum::<f64>()
        })
        .sum())
}

/// Gradient of [`attention_loss`] with respect to each language head.
pub fn attention_loss_grad(
    l: &AttentionStack,
    o: &AttentionStack,
    align: &[(usize, usize)],
) -> Result<Vec<DMatrix<f64>>, DistillError> {
    check_alignment(l, o, align)?;
    Ok(l.heads
        .iter()
        .zip(&o.heads)
        .map(|(a, b)| {
            let mut g = DMatrix::zeros(a.nrows(), a.ncols());
            for &(x, y) in align {
                let d = (a.row(x) - b.row(y)) * 2.0;
                let mut row = g.row_mut(x);
                row += d;
            }
            g
        })
        .collect())
}

fn check_embedding(obj_l: &DVector<f64>, obj_v: &DVector<f64>, w: &ProjectionMatrix) -> Result<(), DistillError> {
    if w.w.nrows() != obj_v.len() || w.w.ncols() != obj_l.len() {
        return Err(DistillError::ShapeMismatch(format!(
            "W is {}x{}, objV has {} and objL {} entries",
            w.w.nrows(),
            w.w.ncols(),
            obj_v.len(),
            obj_l.len()
        )));
    }
    Ok(())
}

/// `‖objL − objV·W‖²`.
pub fn embedding_loss(obj_l: &DVector<f64>, obj_v: &DVector<f64>, w: &ProjectionMatrix) -> Result<f64, DistillError> {
    check_embedding(obj_l, obj_v, w)?;
    Ok((obj_l - w.project(obj_v)).norm_squared())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrad {
    pub w: DMatrix<f64>,
    pub obj_l: DVector<f64>,
    pub obj_v: DVector<f64>,
}

pub fn embedding_loss_grad(
    obj_l: &DVector<f64>,
    obj_v: &DVector<f64>,
    w: &ProjectionMatrix,
) -> Result<EmbeddingGrad, DistillError> {
    check_embedding(obj_l, obj_v, w)?;
    let r = obj_l - w.project(obj_v);
    Ok(EmbeddingGrad {
        w: obj_v * r.transpose() * -2.0,
        obj_l: &r * 2.0,
        obj_v: &w.w * &r * -2.0,
    })
}

pub fn mean_embedding_loss(pairs: &[(DVector<f64>, DVector<f64>)], w: &ProjectionMatrix) -> Result<f64, DistillError> {
    let mut total = 0.0;
    for (v, l) in pairs {
        total += embedding_loss(l, v, w)?;
    }
    Ok(total / pairs.len().max(1) as f64)
}

fn design(pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<(DMatrix<f64>, DMatrix<f64>), DistillError> {
    let Some((v0, l0)) = pairs.first() else {
        return Err(DistillError::ShapeMismatch("no pairs".into()));
    };
    let (vd, ld) = (v0.len(), l0.len());
    if let Some(i) = pairs.iter().position(|(v, l)| v.len() != vd || l.len() != ld) {
        return Err(DistillError::ShapeMismatch(format!(
            "pair {i} has different dimensions"
        )));
    }
    let x = DMatrix::from_fn(pairs.len(), vd, |r, c| pairs[r].0[c]);
    let y = DMatrix::from_fn(pairs.len(), ld, |r, c| pairs[r].1[c]);
    Ok((x, y))
}

/// Least-squares projection from `(objV, objL)` pairs. Rank-deficient inputs
/// yield [`DistillError::Degenerate`] carrying the minimum-norm solution.
pub fn fit_projection(pairs: &[(DVector<f64>, DVector<f64>)]) -> Result<ProjectionMatrix, DistillError> {
    let (x, y) = design(pairs)?;
    let needed = x.ncols();
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * needed.max(pairs.len()) as f64 * smax;
    let rank = svd.rank(eps);
    let w = svd
        .solve(&y, eps)
        .map_err(|e| DistillError::ShapeMismatch(e.to_string()))?;
    let fit = ProjectionMatrix { w };
    if rank < needed {
        log::warn!("projection fit is rank {rank} of {needed}; returning the minimum-norm solution");
        return Err(DistillError::Degenerate {
            rank,
            needed,
            solution: Box::new(fit),
        });
    }
    Ok(fit)
}

/// `‖XᵀX W − XᵀY‖_F` for the pairs' design matrices.
pub fn normal_equations_residual(
    pairs: &[(DVector<f64>, DVector<f64>)],
    w: &ProjectionMatrix,
) -> Result<f64, DistillError> {
    let (x, y) = design(pairs)?;
    Ok((x.tr_mul(&x) * &w.w - x.tr_mul(&y)).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GdParams {
    fn default() -> Self {
        GdParams {
            learning_rate: 0.05,
            iterations: 5000,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the mean embedding loss from a seeded
/// small random start.
pub fn fit_projection_gd(
    pairs: &[(DVector<f64>, DVector<f64>)],
    params: GdParams,
) -> Result<ProjectionMatrix, DistillError> {
    let (x, y) = design(pairs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = DMatrix::from_fn(x.ncols(), y.ncols(), |_, _| rng.random_range(-0.01..0.01));
    let n = pairs.len() as f64;
    let (xtx, xty) = (x.tr_mul(&x), x.tr_mul(&y));
    for _ in 0..params.iterations {
        let grad = (&xtx * &w - &xty) * (2.0 / n);
        w -= grad * params.learning_rate;
    }
    Ok(ProjectionMatrix { w })
}

/// `max(0, margin − good + bad)`.
pub fn margin_ranking(good: f64, bad: f64, margin: f64) -> f64 {
    (margin - good + bad).max(0.0)
}

/// Margin ranking loss summed over preference pairs.
pub fn contrastive_loss<P>(pairs: &[P], score: impl Fn(&P) -> (f64, f64), margin: f64) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let (g, b) = score(p);
            margin_ranking(g, b, margin)
        })
        .sum()
}

/// Weights of the contrastive, attention and embedding terms.
pub type Lambda = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub contrastive: f64,
    pub attention: f64,
    pub embedding: f64,
}

pub fn combined_loss(lambda: Lambda, terms: LossTerms) -> Result<f64, DistillError> {
    if lambda.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(DistillError::InvalidLambda);
    }
    Ok(lambda[0] * terms.contrastive + lambda[1] * terms.attention + lambda[2] * terms.embedding)
}
