//! Dense two-phase simplex with Bland's rule. Slow but independent of the
//! library; only meant for small oracle problems.

#![allow(clippy::needless_range_loop)]

const EPS: f64 = 1e-11;

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    t[row].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row && r[col] != 0.0 {
            let f = r[col];
            r.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
        }
    }
}

/// Runs simplex iterations on tableau `t` (objective in the last row) with
/// entering columns restricted to `0..allowed`.
fn iterate(t: &mut [Vec<f64>], basis: &mut [usize], allowed: usize) -> Option<()> {
    let m = basis.len();
    let rhs = t[0].len() - 1;
    loop {
        let col = (0..allowed).find(|&j| t[m][j] < -EPS)?;
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if t[i][col] > EPS {
                let ratio = t[i][rhs] / t[i][col];
                let better = match best {
                    None => true,
                    Some((r, k)) => ratio < r - EPS || (ratio <= r + EPS && basis[i] < basis[k]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let (_, row) = best?;
        pivot(t, row, col);
        basis[row] = col;
        if t[m][..allowed].iter().all(|&z| z >= -EPS) {
            return Some(());
        }
    }
}

/// Minimizes `c.x` subject to `A x = b`, `x >= 0`, with `b >= 0`.
/// Returns `None` if infeasible or unbounded.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (m, n) = (a.len(), c.len());
    assert!(b.iter().all(|&v| v >= 0.0));
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    // phase 1: minimize the sum of artificials
    for j in 0..width {
        if j < n || j == width - 1 {
            t[m][j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    if t[m][..n + m].iter().any(|&z| z < -EPS) {
        let _ = iterate(&mut t, &mut basis, n + m);
    }
    if -t[m][width - 1] > 1e-9 {
        return None;
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
        }
    }
    // phase 2
    for j in 0..width {
        let cb: f64 = (0..m)
            .map(|i| if basis[i] < n { c[basis[i]] * t[i][j] } else { 0.0 })
            .sum();
        t[m][j] = if j < n {
            c[j] - cb
        } else if j == width - 1 {
            -cb
        } else {
            0.0
        };
    }
    if t[m][..n].iter().any(|&z| z < -EPS) {
        iterate(&mut t, &mut basis, n)?;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    Some((c.iter().zip(&x).map(|(c, x)| c * x).sum(), x))
}

/// Worst-case expectation over the total-variation ball, as an LP over the
/// atoms plus one extra atom carrying `u_inf`.
///
/// Variables: q_0..q_M, s_0..s_M, then slacks. Rows: sum q = 1;
/// sum s + slack = delta; q_i - s_i + slack = p_i; q_i + s_i - surplus = p_i.
pub fn tv_worst_case(u: &[f64], p: &[f64], u_inf: f64, delta: f64) -> f64 {
    let k = u.len() + 1;
    let vals: Vec<f64> = std::iter::once(u_inf).chain(u.iter().copied()).collect();
    let probs: Vec<f64> = std::iter::once(0.0).chain(p.iter().copied()).collect();
    let n = 2 * k + 1 + 2 * k;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = vec![0.0; n];
    row[..k].iter_mut().for_each(|v| *v = 1.0);
    a.push(row);
    b.push(1.0);
    let mut row = vec![0.0; n];
    row[k..2 * k].iter_mut().for_each(|v| *v = 1.0);
    row[2 * k] = 1.0;
    a.push(row);
    b.push(delta);
    for i in 0..k {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row[k + i] = -1.0;
        row[2 * k + 1 + i] = 1.0;
        a.push(row);
        b.push(probs[i]);
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row[k + i] = 1.0;
        row[3 * k + 1 + i] = -1.0;
        a.push(row);
        b.push(probs[i]);
    }
    let mut c = vec![0.0; n];
    c[..k].copy_from_slice(&vals);
    solve(&a, &b, &c)
        .expect("the nominal distribution is always feasible")
        .0
}
