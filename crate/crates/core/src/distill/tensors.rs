use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::losses::{
    attention_loss, combined_loss, contrastive_loss, embedding_loss, AttentionStack, Lambda, LossTerms,
    ProjectionMatrix, StackSource,
};
use super::DistillError;

pub const TENSOR_HEADER: &str = "stackeval-tensors 1";

/// Named dense matrices. Text form: the header line, then for each tensor a
/// `tensor <name> <rows> <cols>` line followed by `rows` lines of `cols`
/// numbers. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorFile {
    pub tensors: BTreeMap<String, DMatrix<f64>>,
}

impl TensorFile {
    pub fn insert(&mut self, name: &str, m: DMatrix<f64>) {
        self.tensors.insert(name.to_string(), m);
    }

    pub fn get(&self, name: &str) -> Result<&DMatrix<f64>, DistillError> {
        self.tensors
            .get(name)
            .ok_or_else(|| DistillError::MissingTensor(name.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, DistillError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line, detail: String| DistillError::Format { line, detail };
        match lines.next() {
            Some((_, l)) if l == TENSOR_HEADER => {}
            Some((n, l)) => return Err(err(n, format!("expected `{TENSOR_HEADER}`, found `{l}`"))),
            None => return Err(err(0, "empty file".into())),
        }
        let mut out = TensorFile::default();
        while let Some((n, line)) = lines.next() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kw, name, rows, cols] = parts[..] else {
                return Err(err(n, "expected `tensor <name> <rows> <cols>`".into()));
            };
            if kw != "tensor" {
                return Err(err(n, format!("expected `tensor`, found `{kw}`")));
            }
            let dim = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| err(n, format!("bad dimension `{s}`: {e}")))
            };
            let (rows, cols) = (dim(rows)?, dim(cols)?);
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (m, row) = lines.next().ok_or_else(|| err(n, format!("`{name}` ends early")))?;
                let before = data.len();
                for tok in row.split_whitespace() {
                    data.push(
                        tok.parse::<f64>()
                            .map_err(|e| err(m, format!("bad number `{tok}`: {e}")))?,
                    );
                }
                if data.len() - before != cols {
                    return Err(err(m, format!("expected {cols} values, found {}", data.len() - before)));
                }
            }
            if out.tensors.contains_key(name) {
                return Err(err(n, format!("duplicate tensor `{name}`")));
            }
            out.insert(name, DMatrix::from_row_slice(rows, cols, &data));
        }
        Ok(out)
    }

    pub fn render(&self) -> String {
        let mut s = format!("{TENSOR_HEADER}\n");
        for (name, m) in &self.tensors {
            let _ = writeln!(s, "tensor {name} {} {}", m.nrows(), m.ncols());
            for row in m.row_iter() {
                let vals: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(s, "{}", vals.join(" "));
            }
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self, DistillError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DistillError> {
        Ok(std::fs::write(path, self.render())?)
    }

    fn heads(&self, prefix: &str, source: StackSource) -> Result<AttentionStack, DistillError> {
        let mut heads = Vec::new();
        while let Some(m) = self.tensors.get(&format!("{prefix}.{}", heads.len())) {
            heads.push(m.clone());
        }
        if heads.is_empty() {
            return Err(DistillError::MissingTensor(format!("{prefix}.0")));
        }
        AttentionStack::new(heads, source)
    }

    fn vector(&self, name: &str) -> Result<DVector<f64>, DistillError> {
        let m = self.get(name)?;
        if m.nrows() != 1 {
            return Err(DistillError::ShapeMismatch(format!("`{name}` must be a single row")));
        }
        Ok(DVector::from_iterator(m.ncols(), m.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub lambda: Lambda,
    pub terms: LossTerms,
    pub combined: f64,
}

/// Evaluates every loss term stored in `file`.
///
/// Expected tensors: attention heads `att_l.0..` and `att_o.0..`, row
/// alignment `align` (k x 2, language row then object row), `obj_l` and
/// `obj_v` (single rows), projection `w` (V x L), and optionally `scores`
/// (n x 2, good then bad) for the ranking term.
pub fn evaluate(file: &TensorFile, lambda: Lambda, margin: f64) -> Result<LossBreakdown, DistillError> {
    let l = file.heads("att_l", StackSource::LanguageModel)?;
    let o = file.heads("att_o", StackSource::ObjectModel)?;
    let align_m = file.get("align")?;
    if align_m.ncols() != 2 {
        return Err(DistillError::ShapeMismatch("`align` must have 2 columns".into()));
    }
    let mut align = Vec::with_capacity(align_m.nrows());
    for r in align_m.row_iter() {
        let idx = |x: f64| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(DistillError::ShapeMismatch(format!(
                    "`align` entry {x} is not a row index"
                )))
            }
        };
        align.push((idx(r[0])?, idx(r[1])?));
    }
    let w = ProjectionMatrix {
        w: file.get("w")?.clone(),
    };
    let terms = LossTerms {
        attention: attention_loss(&l, &o, &align)?,
        embedding: embedding_loss(&file.vector("obj_l")?, &file.vector("obj_v")?, &w)?,
        contrastive: match file.tensors.get("scores") {
            Some(s) if s.ncols() == 2 => {
                let rows: Vec<(f64, f64)> = s.row_iter().map(|r| (r[0], r[1])).collect();
                contrastive_loss(&rows, |p| *p, margin)
            }
            Some(_) => return Err(DistillError::ShapeMismatch("`scores` must have 2 columns".into())),
            None => 0.0,
        },
    };
    Ok(LossBreakdown {
        lambda,
        terms,
        combined: combined_loss(lambda, terms)?,
    })
}
