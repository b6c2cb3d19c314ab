//! Unscrambled Sobol sequences with Joe–Kuo direction numbers
//! (`new-joe-kuo-6.21201`), generated in Gray-code order.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(degree s, polynomial coefficients a, initial m_1..m_s)` for dimensions 2..
const JOE_KUO: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Largest supported dimension.
pub const MAX_DIM: usize = JOE_KUO.len() + 1;

/// Largest number of points a single matrix may hold.
pub const MAX_POINTS: usize = 1 << 30;

fn directions(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1u32 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut val = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                val ^= v[k - j];
            }
        }
        v[k] = val;
    }
    v
}

/// `n` points of a `dim`-dimensional Sobol sequence, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolMatrix {
    dim: usize,
    points: Vec<f64>,
}

impl SobolMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.points
    }
}

/// First `n` points of the unscrambled sequence, starting at the origin.
pub fn sobol_points(dim: usize, n: usize) -> Result<SobolMatrix> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::UnsupportedDimension { dim, max: MAX_DIM });
    }
    if n == 0 || n > MAX_POINTS {
        return Err(Error::Domain(format!("sobol point count {n} out of range")));
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(directions).collect();
    let scale = 1.0 / (1u64 << 32) as f64;
    let mut state = vec![0u32; dim];
    let mut points = Vec::with_capacity(n * dim);
    points.extend(std::iter::repeat_n(0.0, dim));
    for i in 1..n {
        // Gray code: flip the direction of the lowest zero bit of i-1.
        let c = (!(i as u32 - 1)).trailing_zeros() as usize;
        for (x, d) in state.iter_mut().zip(&dirs) {
            *x ^= d[c];
            points.push(*x as f64 * scale);
        }
    }
    Ok(SobolMatrix { dim, points })
}

/// Sobol points mapped affinely onto the box `lower..upper`.
pub fn sobol_in_box(lower: &[f64], upper: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    let m = sobol_points(lower.len(), n)?;
    Ok(m.rows()
        .map(|u| {
            u.iter()
                .zip(lower.iter().zip(upper))
                .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
                .collect()
        })
        .collect())
}
