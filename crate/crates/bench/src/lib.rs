//! Fixtures shared by the benchmarks.

use rnrr_core::eval::{random_node_rotations, synthesize_deformation};
use rnrr_core::geometry::{compute_normals, normalize_pair};
use rnrr_core::graph::build_graph;
use rnrr_core::sparse::SymmetricCsc;
use rnrr_core::{shapes, Sampler, Surface};

/// Normalized tube with normals and a deformed copy, as registration sees them.
pub fn tube_pair(rings: usize, segments: usize) -> (Surface, Surface) {
    let (s, _, _) = normalize_pair(&shapes::bumpy_tube(rings, segments), &shapes::bumpy_tube(rings, segments)).unwrap();
    let s = compute_normals(&s).unwrap();
    let g = build_graph(&s, 5.0 * s.mean_edge_length(), Sampler::Pca).unwrap();
    let state = random_node_rotations(&g, 10.0, 7);
    let (t, _) = synthesize_deformation(&s, &g, &state).unwrap();
    (s, compute_normals(&t).unwrap())
}

/// 5-point Laplacian plus identity on an n x n grid, shuffled so ordering matters.
pub fn grid_matrix(n: usize) -> SymmetricCsc {
    // 7919 is prime, so multiplying by it permutes the indices unless it divides n.
    assert!(n % 7919 != 0);
    let id = |i: usize, j: usize| (i * n + j) * 7919 % (n * n);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            entries.push((id(i, j), id(i, j)));
            if i + 1 < n {
                entries.push((id(i, j), id(i + 1, j)));
            }
            if j + 1 < n {
                entries.push((id(i, j), id(i, j + 1)));
            }
        }
    }
    let mut a = SymmetricCsc::from_pattern(n * n, entries.iter().copied());
    for &(p, q) in &entries {
        if p == q {
            a.add(p, p, 5.0);
        } else {
            a.add(p, q, -1.0);
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_matrix_is_a_permutation() {
        let a = grid_matrix(12);
        let d = a.to_dense();
        assert_eq!(d.nrows(), 144);
        assert_eq!(d, d.transpose());
        assert!(d.cholesky().is_some());
    }
}
