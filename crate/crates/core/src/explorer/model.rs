use std::path::Path;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::probe::{Features, LabeledFeatures, ProbeSource, FEATURE_DIM};
use super::{ExplorerError, Label};

type Vector = SVector<f64, FEATURE_DIM>;
type Matrix = SMatrix<f64, FEATURE_DIM, FEATURE_DIM>;

pub const MODEL_FORMAT: &str = "stackeval-grounding";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEmbedding {
    /// Unit-length.
    pub vector: Vec<f64>,
    pub source: ProbeSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub epochs: usize,
    pub pairs_per_epoch: usize,
    pub learning_rate: f64,
    /// Cross-label pairs are penalized while their cosine exceeds this.
    pub margin: f64,
    pub k: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 200,
            pairs_per_epoch: 64,
            learning_rate: 0.5,
            margin: 0.0,
            k: 5,
        }
    }
}

/// Linear metric over standardized features plus the embedded training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingModel {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub params: TrainParams,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major `FEATURE_DIM x FEATURE_DIM`.
    pub transform: Vec<f64>,
    pub references: Vec<BehaviorEmbedding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub source: ProbeSource,
    pub label: Label,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub label: Label,
    pub neighbors: Vec<Neighbor>,
}

fn unit(y: &Vector) -> Vector {
    let n = y.norm();
    if n > 1e-12 {
        y / n
    } else {
        // a sample exactly at the training mean has no direction
        Vector::from_fn(|i, _| if i == 0 { 1.0 } else { 0.0 })
    }
}

/// Loss of one pair under transform `a` and its gradient with respect to `a`.
/// Same-label pairs pay `1 - cos`, cross-label pairs `max(0, cos - margin)`.
pub fn pair_loss(a: &Matrix, xi: &Vector, xj: &Vector, same: bool, margin: f64) -> (f64, Matrix) {
    let (yi, yj) = (a * xi, a * xj);
    let (ni, nj) = (yi.norm(), yj.norm());
    if ni < 1e-12 || nj < 1e-12 {
        return (0.0, Matrix::zeros());
    }
    let (ui, uj) = (yi / ni, yj / nj);
    let c = ui.dot(&uj);
    let (loss, dc) = if same {
        (1.0 - c, -1.0)
    } else if c > margin {
        (c - margin, 1.0)
    } else {
        return (0.0, Matrix::zeros());
    };
    let gi = (uj - ui * c) / ni;
    let gj = (ui - uj * c) / nj;
    (loss, (gi * xi.transpose() + gj * xj.transpose()) * dc)
}

impl GroundingModel {
    fn matrix(&self) -> Matrix {
        Matrix::from_row_slice(&self.transform)
    }

    fn standardize(&self, f: &Features) -> Vector {
        Vector::from_fn(|i, _| (f[i] - self.mean[i]) / self.scale[i])
    }

    pub fn embed(&self, features: &Features, source: ProbeSource) -> BehaviorEmbedding {
        let v = unit(&(self.matrix() * self.standardize(features)));
        BehaviorEmbedding {
            vector: v.iter().copied().collect(),
            source,
            label: None,
        }
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    /// Shapes present in the reference set.
    pub fn training_shapes(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.references.iter().map(|r| r.source.shape.as_str()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn check(&self) -> Result<(), ExplorerError> {
        let bad = |m: &str| Err(ExplorerError::Format(m.to_string()));
        if self.format != MODEL_FORMAT {
            return bad("not a grounding model");
        }
        if self.version != MODEL_VERSION {
            return bad(&format!("unsupported version {}", self.version));
        }
        if self.mean.len() != FEATURE_DIM
            || self.scale.len() != FEATURE_DIM
            || self.transform.len() != FEATURE_DIM * FEATURE_DIM
            || self
                .references
                .iter()
                .any(|r| r.vector.len() != FEATURE_DIM || r.label.is_none())
        {
            return bad("dimension mismatch");
        }
        if self.references.is_empty() || self.params.k == 0 {
            return bad("empty reference set");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ExplorerError> {
        let m: GroundingModel = serde_json::from_str(text).map_err(|e| ExplorerError::Format(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ExplorerError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self, ExplorerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Learns a linear metric in which same-label probes point the same way.
pub fn train_similarity(
    samples: &[LabeledFeatures],
    seed: u64,
    params: TrainParams,
) -> Result<GroundingModel, ExplorerError> {
    for label in [Label::Flat, Label::Round] {
        let n = samples.iter().filter(|s| s.label == label).count();
        if n < 2 {
            return Err(ExplorerError::InsufficientData(format!("{n} {label} samples")));
        }
    }
    if params.k == 0 {
        return Err(ExplorerError::InsufficientData("k must be positive".into()));
    }
    if samples.iter().any(|s| s.features.iter().any(|x| !x.is_finite())) {
        return Err(ExplorerError::InsufficientData("non-finite features".into()));
    }
    let n = samples.len() as f64;
    let mut mean = [0.0; FEATURE_DIM];
    let mut scale = [0.0; FEATURE_DIM];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(&s.features) {
            *m += x / n;
        }
    }
    for s in samples {
        for i in 0..FEATURE_DIM {
            scale[i] += (s.features[i] - mean[i]).powi(2) / n;
        }
    }
    for v in &mut scale {
        *v = if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 };
    }
    let xs: Vec<Vector> = samples
        .iter()
        .map(|s| Vector::from_fn(|i, _| (s.features[i] - mean[i]) / scale[i]))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Matrix::identity() + Matrix::from_fn(|_, _| rng.random_range(-0.01..0.01));
    for _ in 0..params.epochs {
        let mut grad = Matrix::zeros();
        for _ in 0..params.pairs_per_epoch {
            let i = rng.random_range(0..xs.len());
            let mut j = rng.random_range(0..xs.len() - 1);
            if j >= i {
                j += 1;
            }
            let same = samples[i].label == samples[j].label;
            grad += pair_loss(&a, &xs[i], &xs[j], same, params.margin).1;
        }
        a -= grad * (params.learning_rate / params.pairs_per_epoch as f64);
    }

    let mut model = GroundingModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        seed,
        params,
        mean: mean.to_vec(),
        scale: scale.to_vec(),
        transform: a.transpose().as_slice().to_vec(),
        references: Vec::new(),
    };
    model.references = samples
        .iter()
        .map(|s| BehaviorEmbedding {
            label: Some(s.label),
            ..model.embed(&s.features, s.source.clone())
        })
        .collect();
    Ok(model)
}

/// Majority label among the `k` references most cosine-similar to
/// `embedding`. An even `k` is reduced by one so there are no ties.
pub fn ground(model: &GroundingModel, embedding: &BehaviorEmbedding) -> Grounding {
    let mut scored: Vec<Neighbor> = model
        .references
        .iter()
        .enumerate()
        .filter_map(|(index, r)| {
            Some(Neighbor {
                index,
                source: r.source.clone(),
                label: r.label?,
                similarity: r.vector.iter().zip(&embedding.vector).map(|(a, b)| a * b).sum(),
            })
        })
        .collect();
    scored.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.index.cmp(&b.index)));
    let mut k = model.params.k.min(scored.len());
    if k % 2 == 0 {
        k = k.saturating_sub(1).max(1);
    }
    scored.truncate(k);
    let flat = scored.iter().filter(|n| n.label == Label::Flat).count();
    Grounding {
        label: if 2 * flat > scored.len() {
            Label::Flat
        } else {
            Label::Round
        },
        neighbors: scored,
    }
}
