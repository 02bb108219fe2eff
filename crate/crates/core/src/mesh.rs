//! Direction meshes on the unit sphere restricted to the positive orthant.

use std::collections::BTreeMap;

/// `m` directions spanning the closed quarter circle from `e1` to `e2`.
pub fn quarter_circle(m: usize) -> Vec<[f64; 2]> {
    assert!(m >= 2);
    (0..m)
        .map(|j| {
            let theta = std::f64::consts::FRAC_PI_2 * j as f64 / (m - 1) as f64;
            snap2([theta.cos(), theta.sin()])
        })
        .collect()
}

/// `m` directions strictly inside the open quarter circle.
pub fn open_arc(m: usize) -> Vec<[f64; 2]> {
    assert!(m >= 1);
    (1..=m)
        .map(|j| {
            let theta = std::f64::consts::FRAC_PI_2 * j as f64 / (m + 1) as f64;
            [theta.cos(), theta.sin()]
        })
        .collect()
}

fn snap2(mut v: [f64; 2]) -> [f64; 2] {
    for c in &mut v {
        if c.abs() < 1e-15 {
            *c = 0.0;
        }
    }
    v
}

/// Vertices of a subdivided icosahedron (level `n` has `10*4^n + 2`
/// vertices over the full sphere) that lie in the closed positive orthant.
/// Deterministically ordered.
pub fn icosphere_orthant(level: u32) -> Vec<[f64; 3]> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize3)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(&mut verts, &mut midpoints, a, b);
            let bc = midpoint(&mut verts, &mut midpoints, b, c);
            let ca = midpoint(&mut verts, &mut midpoints, c, a);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let mut orthant: Vec<[f64; 3]> = verts
        .into_iter()
        .filter(|v| v.iter().all(|&c| c >= -1e-9))
        .map(|v| normalize3([v[0].max(0.0), v[1].max(0.0), v[2].max(0.0)]))
        .collect();
    orthant.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    orthant.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
    orthant
}

fn midpoint(
    verts: &mut Vec<[f64; 3]>,
    cache: &mut BTreeMap<(usize, usize), usize>,
    a: usize,
    b: usize,
) -> usize {
    let key = (a.min(b), a.max(b));
    if let Some(&i) = cache.get(&key) {
        return i;
    }
    let m = normalize3([
        (verts[a][0] + verts[b][0]) / 2.0,
        (verts[a][1] + verts[b][1]) / 2.0,
        (verts[a][2] + verts[b][2]) / 2.0,
    ]);
    verts.push(m);
    let i = verts.len() - 1;
    cache.insert(key, i);
    i
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Directions strictly inside the orthant spherical triangle, from a
/// barycentric grid with `n` edge divisions projected to the sphere.
pub fn open_triangle_3d(n: usize) -> Vec<[f64; 3]> {
    assert!(n >= 3);
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..(n - i) {
            let k = n - i - j;
            let v = [
                i as f64 / n as f64,
                j as f64 / n as f64,
                k as f64 / n as f64,
            ];
            out.push(normalize3(v));
        }
    }
    out
}
