//! Small fixed-size vector helpers shared by the geometric kernels.

pub type Point3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}

pub fn normalize(a: Point3) -> Point3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of a 3×3 matrix; the caller guarantees a non-zero determinant.
pub fn inv3(m: &Mat3) -> Mat3 {
    let d = det3(m);
    let inv_d = 1.0 / d;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_d,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_d,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_d,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_d,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_d,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_d,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_d,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_d,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_d,
        ],
    ]
}

pub fn mat_vec(m: &Mat3, v: Point3) -> Point3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Spatial hash for merging points that coincide up to an absolute tolerance.
///
/// Cells have the size of the tolerance and lookups scan the 27 neighbouring
/// cells, so any stored point within `tol` (max-norm) of the query is found.
#[derive(Debug)]
pub struct PointIndex {
    tol: f64,
    cells: std::collections::HashMap<[i64; 3], Vec<(Point3, usize)>>,
}

impl PointIndex {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            cells: std::collections::HashMap::new(),
        }
    }

    fn cell(&self, p: Point3) -> [i64; 3] {
        [
            (p[0] / self.tol).floor() as i64,
            (p[1] / self.tol).floor() as i64,
            (p[2] / self.tol).floor() as i64,
        ]
    }

    /// Returns the id of a stored point within tolerance, preferring the lowest id.
    pub fn find(&self, p: Point3) -> Option<usize> {
        let c = self.cell(p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &(q, id) in bucket {
                            let close = (0..3).all(|k| (q[k] - p[k]).abs() <= self.tol);
                            if close && best.map_or(true, |b| id < b) {
                                best = Some(id);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    pub fn insert(&mut self, p: Point3, id: usize) {
        let c = self.cell(p);
        self.cells.entry(c).or_default().push((p, id));
    }

    /// Looks the point up and inserts it under `next_id` if absent.
    pub fn find_or_insert(&mut self, p: Point3, next_id: usize) -> (usize, bool) {
        match self.find(p) {
            Some(id) => (id, false),
            None => {
                self.insert(p, next_id);
                (next_id, true)
            }
        }
    }
}
