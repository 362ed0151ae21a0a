use crate::energy::TransformState;
use crate::Mat3;

/// Closest rotation in Frobenius norm. When the orthogonal polar factor is a
/// reflection, the singular vector paired with the smallest singular value is
/// flipped; with tied smallest values the first one in SVD order is used.
pub fn project_rotation(a: &Mat3) -> Mat3 {
    let svd = a.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    if (u * v_t).determinant() < 0.0 {
        let k = svd.singular_values.imin();
        u.column_mut(k).neg_mut();
    }
    u * v_t
}

/// Sum over nodes of `|A_j - proj(A_j)|_F^2`.
pub fn energy_rot(state: &TransformState) -> f64 {
    (0..state.node_count())
        .map(|j| {
            let a = state.linear(j);
            (a - project_rotation(&a)).norm_squared()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        let axis = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let angle = rng.random_range(-3.1..3.1);
        *Rotation3::from_axis_angle(&Unit::new_normalize(axis + Vec3::new(1e-3, 0.0, 0.0)), angle)
            .matrix()
    }

    #[test]
    fn identity_and_scaling() {
        assert!((project_rotation(&Mat3::identity()) - Mat3::identity()).norm() < 1e-12);
        assert!((project_rotation(&(2.0 * Mat3::identity())) - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn reflection_is_corrected_to_a_minimizer() {
        let a = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        let r = project_rotation(&a);
        assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-9);
        assert!(r.determinant() > 0.0);
        let best = (a - r).norm();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            let q = random_rotation(&mut rng);
            assert!(best <= (a - q).norm() + 1e-12);
        }
    }

    #[test]
    fn rotation_energy_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rots: Vec<(Mat3, Vec3)> = (0..4).map(|_| (random_rotation(&mut rng), Vec3::zeros())).collect();
        assert!(energy_rot(&TransformState::from_affine(&rots)) < 1e-20);
        let s = TransformState::from_affine(&[(2.0 * Mat3::identity(), Vec3::zeros())]);
        assert!((energy_rot(&s) - 3.0).abs() < 1e-12);
        let a = Mat3::new(1.0, 0.2, 0.0, -0.1, 0.9, 0.3, 0.0, 0.4, 1.2);
        let b = Mat3::new(0.5, 0.0, 0.1, 0.0, 2.0, 0.0, 0.3, 0.0, 1.0);
        let both = TransformState::from_affine(&[(a, Vec3::zeros()), (b, Vec3::x())]);
        let sep = energy_rot(&TransformState::from_affine(&[(a, Vec3::zeros())]))
            + energy_rot(&TransformState::from_affine(&[(b, Vec3::zeros())]));
        assert!((energy_rot(&both) - sep).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_a_rotation(v in proptest::collection::vec(-3.0f64..3.0, 9)) {
            let a = Mat3::from_row_slice(&v);
            let r = project_rotation(&a);
            prop_assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-9);
            prop_assert!(r.determinant() > 0.0);
        }
    }
}
