use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A multivariate trajectory: `3J × T` coordinates, one column per frame,
/// rows ordered `x₁, y₁, z₁, x₂, …, z_J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSequence {
    id: String,
    joints: usize,
    coords: Matrix,
    pub label: Option<usize>,
    pub subject: Option<u32>,
    pub view: Option<u32>,
}

impl SkeletonSequence {
    /// `coords` must be `3J × T` with `T ≥ 2` and finite entries.
    pub fn new(id: impl Into<String>, joints: usize, coords: Matrix) -> Result<Self> {
        if joints == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                actual: 0,
            });
        }
        if coords.rows() != 3 * joints {
            return Err(Error::DimensionMismatch {
                expected: 3 * joints,
                actual: coords.rows(),
            });
        }
        if coords.cols() < 2 {
            return Err(Error::TooShort(coords.cols()));
        }
        if !coords.is_finite() {
            return Err(Error::NonFinite("sequence coordinates"));
        }
        Ok(SkeletonSequence {
            id: id.into(),
            joints,
            coords,
            label: None,
            subject: None,
            view: None,
        })
    }

    /// Builds from a list of frames, each of length `3J`.
    pub fn from_frames<F: AsRef<[f64]>>(id: impl Into<String>, joints: usize, frames: &[F]) -> Result<Self> {
        let t = frames.len();
        let mut coords = Matrix::zeros(3 * joints, t);
        for (col, frame) in frames.iter().enumerate() {
            let frame = frame.as_ref();
            if frame.len() != 3 * joints {
                return Err(Error::DimensionMismatch {
                    expected: 3 * joints,
                    actual: frame.len(),
                });
            }
            for (row, &v) in frame.iter().enumerate() {
                coords[(row, col)] = v;
            }
        }
        SkeletonSequence::new(id, joints, coords)
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_subject(mut self, subject: u32) -> Self {
        self.subject = Some(subject);
        self
    }

    pub fn with_view(mut self, view: u32) -> Self {
        self.view = Some(view);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn frames(&self) -> usize {
        self.coords.cols()
    }

    /// Row count of the trajectory matrix, `3J`.
    pub fn dim(&self) -> usize {
        self.coords.rows()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    /// Frame `t` as a `3J` vector.
    pub fn frame(&self, t: usize) -> Vec<f64> {
        self.coords.column(t)
    }

    /// Same metadata, frames reordered by `order` (a permutation or any
    /// index list of length ≥ 2).
    pub fn reorder_frames(&self, order: &[usize]) -> Result<Self> {
        let mut coords = Matrix::zeros(self.dim(), order.len());
        for r in 0..self.dim() {
            let src = self.coords.row(r);
            for (dst, &t) in coords.row_mut(r).iter_mut().zip(order) {
                *dst = src[t];
            }
        }
        let mut out = SkeletonSequence::new(self.id.clone(), self.joints, coords)?;
        out.label = self.label;
        out.subject = self.subject;
        out.view = self.view;
        Ok(out)
    }

    pub(crate) fn with_coords(&self, joints: usize, coords: Matrix) -> Result<Self> {
        let mut out = SkeletonSequence::new(self.id.clone(), joints, coords)?;
        out.label = self.label;
        out.subject = self.subject;
        out.view = self.view;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_become_columns() {
        let s = SkeletonSequence::from_frames("a", 1, &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(s.frames(), 2);
        assert_eq!(s.coords().row(0), &[1.0, 4.0]);
        assert_eq!(s.frame(1), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn single_frame_is_too_short() {
        let r = SkeletonSequence::from_frames("a", 1, &[[1.0, 2.0, 3.0]]);
        assert!(matches!(r, Err(Error::TooShort(1))));
    }

    #[test]
    fn wrong_row_count_is_rejected() {
        let r = SkeletonSequence::new("a", 2, Matrix::zeros(5, 3));
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 6, actual: 5 })));
    }

    #[test]
    fn non_finite_is_rejected() {
        let r = SkeletonSequence::from_frames("a", 1, &[[1.0, f64::INFINITY, 3.0], [0.0; 3]]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
