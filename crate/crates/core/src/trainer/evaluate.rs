use serde::{Deserialize, Serialize};

use crate::data::{SegmentSet, N_CLASSES};
use crate::error::{Error, Result};
use crate::model::Model;

/// Items per inference batch; evaluation keeps the final partial batch.
pub const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; N_CLASSES]; N_CLASSES],
    pub predictions: Vec<usize>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Class probabilities for the given segments, `[n, 3]` row-major.
pub fn predict(model: &Model, set: &SegmentSet, indices: &[usize]) -> Result<Vec<[f64; N_CLASSES]>> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let p = model.predict_proba(&set.batch(chunk))?;
        out.extend(p.data().chunks(N_CLASSES).map(|r| [r[0], r[1], r[2]]));
    }
    Ok(out)
}

pub fn evaluate(model: &Model, set: &SegmentSet, indices: &[usize]) -> Result<Evaluation> {
    if indices.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let probs = predict(model, set, indices)?;
    let mut confusion = [[0; N_CLASSES]; N_CLASSES];
    let mut predictions = Vec::with_capacity(indices.len());
    let mut correct = 0;
    for (&i, p) in indices.iter().zip(&probs) {
        let truth = usize::from(set.labels()[i]);
        let guess = argmax(p);
        confusion[truth][guess] += 1;
        correct += usize::from(truth == guess);
        predictions.push(guess);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / indices.len() as f64,
        confusion,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0 / 3.0; 3]), 0);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }
}
