use super::SkeletonSequence;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Expresses every joint relative to the root joint and drops the root.
///
/// The output has `J − 1` joints, so its covariance is `3(J−1) × 3(J−1)`.
pub fn root_subtract(seq: &SkeletonSequence, root_index: usize) -> Result<SkeletonSequence> {
    let joints = seq.joints();
    if root_index >= joints {
        return Err(Error::BadRootIndex {
            index: root_index,
            joints,
        });
    }
    if joints == 1 {
        return Err(Error::DegenerateOutput);
    }
    let src = seq.coords();
    let t = seq.frames();
    let mut coords = Matrix::zeros(3 * (joints - 1), t);
    for (out_joint, j) in (0..joints).filter(|&j| j != root_index).enumerate() {
        for axis in 0..3 {
            let root = src.row(3 * root_index + axis);
            let row = src.row(3 * j + axis);
            for ((dst, &x), &r) in coords.row_mut(3 * out_joint + axis).iter_mut().zip(row).zip(root) {
                *dst = x - r;
            }
        }
    }
    seq.with_coords(joints - 1, coords)
}
