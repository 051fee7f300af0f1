//! Small fixed-size vector helpers over `[f64; 3]`.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    dist2(a, b).sqrt()
}

/// Unit vector; returns the zero vector for zero input.
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n == 0.0 {
        [0.0; 3]
    } else {
        scale(a, 1.0 / n)
    }
}

/// Dihedral angle in degrees over four points, range (-180, 180].
pub fn dihedral(p0: Vec3, p1: Vec3, p2: Vec3, p3: Vec3) -> f64 {
    let b0 = sub(p0, p1);
    let b1 = sub(p2, p1);
    let b2 = sub(p3, p2);
    let b1n = normalize(b1);
    let v = sub(b0, scale(b1n, dot(b0, b1n)));
    let w = sub(b2, scale(b1n, dot(b2, b1n)));
    let x = dot(v, w);
    let y = dot(cross(b1n, v), w);
    y.atan2(x).to_degrees()
}

/// Uniform-ish cell grid for fixed-radius neighbour queries.
pub struct CellGrid {
    cell: f64,
    origin: Vec3,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl CellGrid {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let mut dims = [1usize; 3];
        for k in 0..3 {
            dims[k] = (((hi[k] - lo[k]) / cell).floor() as usize + 1).max(1);
        }
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; ncell + 1];
        let idx: Vec<usize> = points
            .iter()
            .map(|p| Self::flat(dims, Self::coords(lo, cell, dims, *p)))
            .collect();
        for &c in &idx {
            counts[c + 1] += 1;
        }
        for i in 0..ncell {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, &c) in idx.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        CellGrid {
            cell,
            origin: lo,
            dims,
            starts: counts,
            items,
        }
    }

    fn coords(origin: Vec3, cell: f64, dims: [usize; 3], p: Vec3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let v = ((p[k] - origin[k]) / cell).floor();
            c[k] = if v < 0.0 {
                0
            } else {
                (v as usize).min(dims[k] - 1)
            };
        }
        c
    }

    fn flat(dims: [usize; 3], c: [usize; 3]) -> usize {
        (c[0] * dims[1] + c[1]) * dims[2] + c[2]
    }

    /// Calls `f` with every indexed point id whose cell lies within `radius` of `p`.
    /// Candidates still need an exact distance check.
    pub fn for_each_candidate(&self, p: Vec3, radius: f64, mut f: impl FnMut(usize)) {
        let reach = (radius / self.cell).ceil() as i64;
        let mut center = [0i64; 3];
        for k in 0..3 {
            center[k] = ((p[k] - self.origin[k]) / self.cell).floor() as i64;
        }
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for k in 0..3 {
            let a = center[k] - reach;
            let b = center[k] + reach;
            if b < 0 || a > self.dims[k] as i64 - 1 {
                return;
            }
            lo[k] = a.max(0) as usize;
            hi[k] = b.min(self.dims[k] as i64 - 1) as usize;
        }
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let c = Self::flat(self.dims, [x, y, z]);
                    for &i in &self.items[self.starts[c]..self.starts[c + 1]] {
                        f(i);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dihedral_of_planar_trans_is_180() {
        let d = dihedral([1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]);
        assert!((d.abs() - 180.0).abs() < 1e-9, "{d}");
        let d = dihedral([0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1.0]);
        assert!((d - 90.0).abs() < 1e-9 || (d + 90.0).abs() < 1e-9);
    }

    #[test]
    fn grid_finds_all_neighbours() {
        let pts: Vec<Vec3> = (0..200)
            .map(|i| {
                let t = i as f64;
                [(t * 0.37).sin() * 9.0, (t * 0.11).cos() * 7.0, (t * 0.05) - 5.0]
            })
            .collect();
        let grid = CellGrid::new(&pts, 2.5);
        for (i, p) in pts.iter().enumerate() {
            let mut got = Vec::new();
            grid.for_each_candidate(*p, 4.0, |j| {
                if j != i && dist(*p, pts[j]) < 4.0 {
                    got.push(j)
                }
            });
            got.sort();
            let want: Vec<usize> = (0..pts.len())
                .filter(|&j| j != i && dist(*p, pts[j]) < 4.0)
                .collect();
            assert_eq!(got, want);
        }
    }
}
