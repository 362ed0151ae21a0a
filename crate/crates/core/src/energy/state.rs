use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{Mat3, Vec3};

/// Stacked per-node affine transforms, the optimization variable.
///
/// Node `j` occupies rows `4j..4j+4` of a `4r x 3` matrix: the first three rows
/// hold `A_j^T`, the last row holds `t_j^T`, so that the row vector
/// `[(v - p_j)^T, 1] * X_j` equals `(A_j (v - p_j) + t_j)^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformState {
    matrix: DMatrix<f64>,
}

impl TransformState {
    pub fn identity(nodes: usize) -> Self {
        let mut matrix = DMatrix::zeros(4 * nodes, 3);
        for j in 0..nodes {
            for c in 0..3 {
                matrix[(4 * j + c, c)] = 1.0;
            }
        }
        TransformState { matrix }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() != 3 || matrix.nrows() % 4 != 0 {
            return Err(Error::InvalidInput(format!(
                "state must be 4r x 3, got {} x {}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("state has non-finite entries".into()));
        }
        Ok(TransformState { matrix })
    }

    pub fn from_affine(blocks: &[(Mat3, Vec3)]) -> Self {
        let mut s = Self::identity(blocks.len());
        for (j, (a, t)) in blocks.iter().enumerate() {
            s.set_node(j, a, t);
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.matrix.nrows() / 4
    }

    pub fn linear(&self, j: usize) -> Mat3 {
        self.matrix.fixed_view::<3, 3>(4 * j, 0).transpose()
    }

    pub fn translation(&self, j: usize) -> Vec3 {
        self.matrix.fixed_view::<1, 3>(4 * j + 3, 0).transpose()
    }

    pub fn set_node(&mut self, j: usize, a: &Mat3, t: &Vec3) {
        self.matrix.fixed_view_mut::<3, 3>(4 * j, 0).copy_from(&a.transpose());
        self.matrix.fixed_view_mut::<1, 3>(4 * j + 3, 0).copy_from(&t.transpose());
    }

    pub fn to_affine(&self) -> Vec<(Mat3, Vec3)> {
        (0..self.node_count())
            .map(|j| (self.linear(j), self.translation(j)))
            .collect()
    }

    /// `A_j (v - p_j) + p_j + t_j`.
    pub fn apply_node(&self, j: usize, v: &Vec3, p: &Vec3) -> Vec3 {
        self.linear(j) * (v - p) + p + self.translation(j)
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn affine_blocks_round_trip(vals in proptest::collection::vec(-5.0f64..5.0, 12 * 3)) {
            let blocks: Vec<(Mat3, Vec3)> = vals
                .chunks(12)
                .map(|c| (Mat3::from_row_slice(&c[..9]), Vec3::new(c[9], c[10], c[11])))
                .collect();
            let s = TransformState::from_affine(&blocks);
            prop_assert_eq!(s.to_affine(), blocks);
            let back = TransformState::from_matrix(s.as_matrix().clone()).unwrap();
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn row_layout_matches_affine_map() {
        let a = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let t = Vec3::new(-1.0, 0.5, 2.0);
        let s = TransformState::from_affine(&[(a, t)]);
        let d = Vec3::new(0.3, -0.7, 1.1);
        let row = nalgebra::RowVector4::new(d.x, d.y, d.z, 1.0);
        let got = row * s.as_matrix().fixed_view::<4, 3>(0, 0);
        assert!((got.transpose() - (a * d + t)).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TransformState::from_matrix(DMatrix::zeros(5, 3)).is_err());
        let mut m = DMatrix::zeros(4, 3);
        m[(0, 0)] = f64::NAN;
        assert!(TransformState::from_matrix(m).is_err());
    }
}
