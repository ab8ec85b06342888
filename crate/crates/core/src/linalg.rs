//! Small dense linear algebra and exact integer-lattice predicates.
//!
//! The abelianization rank k is tiny (≤ the number of standard generators),
//! so everything here is plain O(k³) code: Gaussian elimination for Newton
//! steps, cyclic Jacobi for Hessian eigenvalue estimates, and exact integer
//! arithmetic for the coercivity preconditions of the mgf minimizer.

#![allow(clippy::needless_range_loop)] // index-style loops mirror the matrix algebra

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the matrix is numerically singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for j in col..=n {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = m[col][n];
        for j in col + 1..n {
            s -= m[col][j] * x[j];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[0][0]];
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1e-300);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off.sqrt() < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[i][p];
                    let miq = m[i][q];
                    m[i][p] = c * mip - s * miq;
                    m[i][q] = s * mip + c * miq;
                }
                for i in 0..n {
                    let mpi = m[p][i];
                    let mqi = m[q][i];
                    m[p][i] = c * mpi - s * mqi;
                    m[q][i] = s * mpi + c * mqi;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

pub fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    symmetric_eigenvalues(a)[0]
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Row-reduces integer vectors into echelon form, preserving the generated
/// lattice. Returns the pivot rows (one per pivot column actually hit).
fn lattice_echelon(points: &[Vec<i64>], k: usize) -> Vec<Vec<i128>> {
    let mut rows: Vec<Option<Vec<i128>>> = vec![None; k];
    for p in points {
        let mut v: Vec<i128> = p.iter().map(|&x| x as i128).collect();
        for col in 0..k {
            if v[col] == 0 {
                continue;
            }
            match &rows[col] {
                None => {
                    rows[col] = Some(std::mem::take(&mut v));
                    break;
                }
                Some(row) => {
                    let (g, s, t) = ext_gcd(row[col], v[col]);
                    let rc = row[col] / g;
                    let vc = v[col] / g;
                    let combined: Vec<i128> =
                        row.iter().zip(&v).map(|(&r, &w)| s * r + t * w).collect();
                    let reduced: Vec<i128> =
                        row.iter().zip(&v).map(|(&r, &w)| rc * w - vc * r).collect();
                    rows[col] = Some(combined);
                    v = reduced;
                }
            }
        }
    }
    rows.into_iter().flatten().collect()
}

/// Rank over ℚ of the given integer points.
pub fn integer_rank(points: &[Vec<i64>], k: usize) -> usize {
    lattice_echelon(points, k).len()
}

/// Whether the ℤ-span of the points is all of ℤᵏ (lattice index one).
pub fn integer_span_is_full(points: &[Vec<i64>], k: usize) -> bool {
    let rows = lattice_echelon(points, k);
    if rows.len() < k {
        return false;
    }
    // Index of the spanned lattice = |product of echelon pivots|.
    let mut index: i128 = 1;
    for (col, row) in rows.iter().enumerate() {
        let pivot = row.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        // Echelon rows are keyed by their first nonzero column.
        debug_assert!(row[..col].iter().all(|&x| x == 0) || pivot != 0);
        index = index.saturating_mul(pivot.abs());
        if index > 1 {
            return false;
        }
    }
    index == 1
}

/// Determinant of a small integer matrix (Bareiss fraction-free elimination).
fn int_det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for col in 0..n - 1 {
        if a[col][col] == 0 {
            let swap = (col + 1..n).find(|&r| a[r][col] != 0);
            match swap {
                Some(r) => {
                    a.swap(col, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for row in col + 1..n {
            for j in col + 1..n {
                a[row][j] = (a[row][j] * a[col][col] - a[row][col] * a[col][j]) / prev;
            }
            a[row][col] = 0;
        }
        prev = a[col][col];
    }
    sign * a[n - 1][n - 1]
}

/// Exact null direction of a (k-1)×k integer matrix via cofactor expansion;
/// `None` when the rows do not have full rank k-1.
fn null_direction(rows: &[&Vec<i64>], k: usize) -> Option<Vec<i128>> {
    debug_assert_eq!(rows.len() + 1, k);
    let mut d = vec![0i128; k];
    let mut nonzero = false;
    for skip in 0..k {
        let minor: Vec<Vec<i128>> = rows
            .iter()
            .map(|r| {
                (0..k)
                    .filter(|&j| j != skip)
                    .map(|j| r[j] as i128)
                    .collect()
            })
            .collect();
        let det = int_det(&minor);
        d[skip] = if skip % 2 == 0 { det } else { -det };
        nonzero |= det != 0;
    }
    if nonzero {
        Some(d)
    } else {
        None
    }
}

/// Exact test that the origin lies in the interior of the convex hull of the
/// given integer points.
///
/// Decided combinatorially: the polar cone {d : ⟨d,m⟩ ≥ 0 ∀m} is nonzero iff
/// it has an extreme ray orthogonal to some (k-1)-subset of the points, so it
/// suffices to test the exact null directions of all such subsets (both
/// signs), plus a rank check for the degenerate case.
pub fn origin_interior_of_hull(points: &[Vec<i64>], k: usize) -> bool {
    if points.is_empty() || k == 0 {
        return false;
    }
    if integer_rank(points, k) < k {
        return false;
    }
    if k == 1 {
        return points.iter().any(|p| p[0] > 0) && points.iter().any(|p| p[0] < 0);
    }

    let mut subset: Vec<usize> = (0..k - 1).collect();
    let n = points.len();
    if n < k - 1 {
        return false;
    }
    loop {
        let rows: Vec<&Vec<i64>> = subset.iter().map(|&i| &points[i]).collect();
        if let Some(d) = null_direction(&rows, k) {
            for dir in [&d, &d.iter().map(|&x| -x).collect::<Vec<_>>()] {
                let all_nonneg = points.iter().all(|m| {
                    m.iter()
                        .zip(dir)
                        .map(|(&mi, &di)| mi as i128 * di)
                        .sum::<i128>()
                        >= 0
                });
                if all_nonneg {
                    return false;
                }
            }
        }
        // next (k-1)-combination in lexicographic order
        let mut i = k - 1;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if subset[i] != i + n - (k - 1) {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..k - 1 {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![5.0, 10.0];
        let x = solve(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let a = vec![vec![3.0, 0.0], vec![0.0, -1.0]];
        let e = symmetric_eigenvalues(&a);
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_2x2_symmetric() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let e = symmetric_eigenvalues(&a);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn span_detects_index() {
        // {±2} spans 2ℤ, not ℤ.
        assert!(!integer_span_is_full(&[vec![2], vec![-2]], 1));
        assert!(integer_span_is_full(&[vec![2], vec![-3]], 1));
        assert!(integer_span_is_full(
            &[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
            2
        ));
        // (1,1) and (1,-1) span an index-2 sublattice of ℤ².
        assert!(!integer_span_is_full(&[vec![1, 1], vec![1, -1]], 2));
        assert!(integer_span_is_full(
            &[vec![1, 1], vec![1, -1], vec![0, 1]],
            2
        ));
    }

    #[test]
    fn interior_in_one_dimension() {
        assert!(origin_interior_of_hull(&[vec![1], vec![-1]], 1));
        assert!(!origin_interior_of_hull(&[vec![1], vec![2]], 1));
        assert!(!origin_interior_of_hull(&[vec![0]], 1));
    }

    #[test]
    fn interior_in_two_dimensions() {
        let cross = vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]];
        assert!(origin_interior_of_hull(&cross, 2));
        // All in the closed upper half-plane: 0 on the boundary.
        let half = vec![vec![1, 0], vec![-1, 0], vec![0, 1]];
        assert!(!origin_interior_of_hull(&half, 2));
        // Rank-deficient: everything on a line.
        let line = vec![vec![1, 1], vec![-1, -1]];
        assert!(!origin_interior_of_hull(&line, 2));
        // Triangle strictly around the origin.
        let tri = vec![vec![2, 1], vec![-1, 1], vec![-1, -3]];
        assert!(origin_interior_of_hull(&tri, 2));
    }

    #[test]
    fn interior_in_three_dimensions() {
        let octa = vec![
            vec![1, 0, 0],
            vec![-1, 0, 0],
            vec![0, 1, 0],
            vec![0, -1, 0],
            vec![0, 0, 1],
            vec![0, 0, -1],
        ];
        assert!(origin_interior_of_hull(&octa, 3));
        let no_down = vec![
            vec![1, 0, 0],
            vec![-1, 0, 0],
            vec![0, 1, 0],
            vec![0, -1, 0],
            vec![0, 0, 1],
        ];
        assert!(!origin_interior_of_hull(&no_down, 3));
    }
}
