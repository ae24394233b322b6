use crate::error::{Error, Result};

/// Fraction of exact matches.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// `C × C` counts; entry `(i, j)` is true class `i` predicted as `j`.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut m = vec![vec![0; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        let bad = if l >= num_classes { l } else { p };
        if bad >= num_classes {
            return Err(Error::BadLabel {
                label: bad,
                num_classes,
            });
        }
        m[l][p] += 1;
    }
    Ok(m)
}
