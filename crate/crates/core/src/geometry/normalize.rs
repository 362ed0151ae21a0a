use crate::error::{Error, Result};
use crate::geometry::surface::bounding_box;
use crate::geometry::Surface;
use crate::Vec3;

/// Maps a source/target pair into the shared normalized frame and back.
///
/// Forward: `x' = (x + shift) * scale`, with a separate shift per surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationRecord {
    pub centroid_shift_source: Vec3,
    pub centroid_shift_target: Vec3,
    pub scale: f64,
}

impl NormalizationRecord {
    pub fn identity() -> Self {
        NormalizationRecord {
            centroid_shift_source: Vec3::zeros(),
            centroid_shift_target: Vec3::zeros(),
            scale: 1.0,
        }
    }

    pub fn source_to_normalized(&self, p: &Vec3) -> Vec3 {
        (p + self.centroid_shift_source) * self.scale
    }

    pub fn target_to_normalized(&self, p: &Vec3) -> Vec3 {
        (p + self.centroid_shift_target) * self.scale
    }

    pub fn source_from_normalized(&self, p: &Vec3) -> Vec3 {
        p / self.scale - self.centroid_shift_source
    }

    /// Registered source points live in the target's frame, so results are
    /// mapped back with the target shift.
    pub fn target_from_normalized(&self, p: &Vec3) -> Vec3 {
        p / self.scale - self.centroid_shift_target
    }

    pub fn length_to_original(&self, d: f64) -> f64 {
        d / self.scale
    }

    pub fn length_to_normalized(&self, d: f64) -> f64 {
        d * self.scale
    }
}

fn shifted(surface: &Surface, shift: Vec3, scale: f64) -> Surface {
    let mut out = surface.clone();
    for v in &mut out.vertices {
        *v = (*v + shift) * scale;
    }
    out
}

/// Centers both surfaces at the origin and scales them by one common factor
/// so the union of their bounding boxes has unit diagonal.
pub fn normalize_pair(
    source: &Surface,
    target: &Surface,
) -> Result<(Surface, Surface, NormalizationRecord)> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidInput("cannot normalize an empty surface".into()));
    }
    let shift_s = -source.centroid();
    let shift_t = -target.centroid();
    let mut pts: Vec<Vec3> = source.vertices.iter().map(|v| v + shift_s).collect();
    pts.extend(target.vertices.iter().map(|v| v + shift_t));
    let (lo, hi) = bounding_box(&pts);
    let diag = (hi - lo).norm();
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(Error::Degenerate(
            "all points coincide; bounding box diagonal is zero".into(),
        ));
    }
    let scale = 1.0 / diag;
    let record = NormalizationRecord {
        centroid_shift_source: shift_s,
        centroid_shift_target: shift_t,
        scale,
    };
    Ok((
        shifted(source, shift_s, scale),
        shifted(target, shift_t, scale),
        record,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(offset: Vec3) -> Surface {
        let mut v = Vec::new();
        for i in 0..8 {
            v.push(Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64) + offset);
        }
        Surface::from_points(v).unwrap()
    }

    fn union_diag(a: &Surface, b: &Surface) -> f64 {
        let mut pts = a.vertices.clone();
        pts.extend_from_slice(&b.vertices);
        let (lo, hi) = bounding_box(&pts);
        (hi - lo).norm()
    }

    #[test]
    fn unit_cube_pair_has_unit_diagonal() {
        let c = cube(Vec3::zeros());
        let (s, t, rec) = normalize_pair(&c, &c).unwrap();
        assert!((union_diag(&s, &t) - 1.0).abs() < 1e-15);
        assert!((rec.scale - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn offset_cubes_recomputed_bbox() {
        let a = cube(Vec3::zeros());
        let b = cube(Vec3::new(5.0, -2.0, 1.0));
        let (s, t, _) = normalize_pair(&a, &b).unwrap();
        assert!((union_diag(&s, &t) - 1.0).abs() < 1e-12);
        assert!(s.centroid().norm() < 1e-12 && t.centroid().norm() < 1e-12);
    }

    #[test]
    fn normalizing_twice_is_idempotent() {
        let a = cube(Vec3::new(1.0, 2.0, 3.0));
        let (s, t, _) = normalize_pair(&a, &a).unwrap();
        let (_, _, rec2) = normalize_pair(&s, &t).unwrap();
        assert!((rec2.scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_recovers_original() {
        let a = cube(Vec3::new(10.0, -3.0, 7.0));
        let b = cube(Vec3::new(-4.0, 0.5, 2.0));
        let (s, t, rec) = normalize_pair(&a, &b).unwrap();
        for (n, o) in s.vertices.iter().zip(&a.vertices) {
            assert!((rec.source_from_normalized(n) - o).norm() < 1e-9);
        }
        for (n, o) in t.vertices.iter().zip(&b.vertices) {
            assert!((rec.target_from_normalized(n) - o).norm() < 1e-9);
        }
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let p = Surface::from_points(vec![Vec3::new(1.0, 1.0, 1.0); 3]).unwrap();
        assert!(matches!(normalize_pair(&p, &p), Err(Error::Degenerate(_))));
    }
}
