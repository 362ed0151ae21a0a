//! Procedural test surfaces.

use rand::Rng;

use crate::geometry::Surface;
use crate::Vec3;

/// Unit cube `[0,1]^3`, 8 vertices, 12 outward-facing triangles.
pub fn cube() -> Surface {
    let vertices = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    Surface::from_mesh(vertices, faces).expect("cube is valid")
}

/// Regular `nx` x `ny` vertex grid in the z = 0 plane with spacing `h`.
pub fn grid(nx: usize, ny: usize, h: f64) -> Surface {
    height_field(nx, ny, h, |_, _| 0.0)
}

/// Triangulated height field `z = f(x, y)` over a regular grid.
pub fn height_field(nx: usize, ny: usize, h: f64, f: impl Fn(f64, f64) -> f64) -> Surface {
    assert!(nx >= 2 && ny >= 2);
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64 * h, j as f64 * h);
            vertices.push(Vec3::new(x, y, f(x, y)));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // Alternate the diagonal to avoid a directional bias.
            if (i + j) % 2 == 0 {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    Surface::from_mesh(vertices, faces).expect("grid is valid")
}

/// An asymmetric bumpy sheet, `n x n` vertices over the unit square.
pub fn wavy_sheet(n: usize) -> Surface {
    let h = 1.0 / (n - 1) as f64;
    height_field(n, n, h, |x, y| {
        0.12 * (2.5 * x + 0.4).sin() * (1.8 * y + 0.9).cos() + 0.08 * x * x * y + 0.05 * (5.0 * y).sin()
    })
}

/// Latitude-longitude sphere of radius `r` with the poles as single vertices.
pub fn uv_sphere(lat: usize, lon: usize, r: f64) -> Surface {
    assert!(lat >= 2 && lon >= 3);
    let mut vertices = vec![Vec3::new(0.0, 0.0, r)];
    for i in 1..lat {
        let theta = std::f64::consts::PI * i as f64 / lat as f64;
        for j in 0..lon {
            let phi = std::f64::consts::TAU * j as f64 / lon as f64;
            vertices.push(r * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -r));
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * lon + j % lon;
    let mut faces = Vec::new();
    for j in 0..lon {
        faces.push([0, ring(1, j), ring(1, j + 1)]);
        faces.push([south, ring(lat - 1, j + 1), ring(lat - 1, j)]);
    }
    for i in 1..lat - 1 {
        for j in 0..lon {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    Surface::from_mesh(vertices, faces).expect("sphere is valid")
}

/// Open tube along x with an off-center bulge; `rings` x `segments` vertices.
pub fn bumpy_tube(rings: usize, segments: usize) -> Surface {
    assert!(rings >= 2 && segments >= 3);
    let mut vertices = Vec::with_capacity(rings * segments);
    for i in 0..rings {
        let x = i as f64 / (rings - 1) as f64 * 3.0;
        for j in 0..segments {
            let phi = std::f64::consts::TAU * j as f64 / segments as f64;
            let r = 0.35 + 0.12 * (-(x - 1.9).powi(2) * 4.0).exp() * (1.0 + 0.5 * phi.cos())
                + 0.03 * (3.0 * phi).sin();
            vertices.push(Vec3::new(x, r * phi.cos(), r * phi.sin()));
        }
    }
    let id = |i: usize, j: usize| i * segments + j % segments;
    let mut faces = Vec::new();
    for i in 0..rings - 1 {
        for j in 0..segments {
            faces.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    Surface::from_mesh(vertices, faces).expect("tube is valid")
}

/// Random jittered height-field mesh with roughly `target_vertices` vertices.
pub fn random_mesh<R: Rng>(rng: &mut R, target_vertices: usize) -> Surface {
    let nx = rng.random_range(6..=((target_vertices as f64).sqrt() as usize * 2).max(7));
    let ny = (target_vertices / nx).max(4);
    let h = 1.0 / (nx.max(ny) - 1) as f64;
    let a: f64 = rng.random_range(0.0..0.3);
    let b: f64 = rng.random_range(0.5..4.0);
    let c: f64 = rng.random_range(0.5..4.0);
    let mut s = height_field(nx, ny, h, |x, y| a * (b * x).sin() * (c * y).cos());
    for v in &mut s.vertices {
        v.x += rng.random_range(-0.25..0.25) * h;
        v.y += rng.random_range(-0.25..0.25) * h;
    }
    s
}

/// Straight polyline with `n` vertices spaced `h` apart along x.
pub fn polyline(n: usize, h: f64) -> Surface {
    let vertices = (0..n).map(|i| Vec3::new(i as f64 * h, 0.0, 0.0)).collect();
    let edges = (1..n).map(|i| [i - 1, i]).collect();
    Surface::from_edges(vertices, edges).expect("polyline is valid")
}
