//! Locating the unit vectors `delta_d^i` that lie in `Aff(y_1, ..., y_k)`.
//!
//! The fast path reduces the differences `y_s - y_1` to column echelon form,
//! moves the pivot coordinates to the bottom so the basis reads `[V; I_b]`,
//! and then needs only one residual vector `y = y~_1 - V y-_1` to test every
//! coordinate: a non-pivot coordinate `i` is a hit when `y` is the unit vector
//! at `i`, and the `j`-th pivot coordinate is a hit when `y = -v~_j`.

use std::collections::BTreeSet;

use crate::linalg::{
    affine_from_points, dist_to_affine, rank_and_echelon, AffineSubspace, LinalgError, Matrix,
    Vector, RELATIVE_PIVOT,
};

/// The permuted basis `[V; I_b]` and the split of `y_1` it induces.
#[derive(Debug, Clone)]
pub struct SearchBasis {
    pub b: usize,
    /// `permutation[p]` is the original coordinate placed at position `p`;
    /// pivot coordinates occupy the last `b` positions.
    pub permutation: Vec<usize>,
    /// `(d - b) x b` top block.
    pub v_tilde: Matrix,
    pub y1_tilde: Vector,
    pub y1_bar: Vector,
}

/// Unit-vector indices (1-based) found, plus the work spent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub indices: BTreeSet<usize>,
    pub dim: usize,
    pub flops: u64,
}

fn check_points(points: &[Vector]) -> Result<usize, LinalgError> {
    let d = points.first().ok_or(LinalgError::NoPoints)?.len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(LinalgError::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    Ok(d)
}

/// Pivot threshold for the difference matrix: relative to its largest
/// entry, but never below the equality tolerance.
fn pivot_threshold(diffs: &Matrix, tol: f64) -> f64 {
    (RELATIVE_PIVOT * diffs.amax()).max(tol)
}

/// Builds the permuted basis for `points` (requires at least one point).
pub fn search_basis(points: &[Vector], tol: f64) -> Result<(SearchBasis, u64), LinalgError> {
    let d = check_points(points)?;
    let y1 = &points[0];
    let mut diffs = Matrix::zeros(d, points.len() - 1);
    for (k, p) in points[1..].iter().enumerate() {
        diffs.set_column(k, &(p - y1));
    }
    let echelon = rank_and_echelon(&diffs, pivot_threshold(&diffs, tol));
    let b = echelon.rank;

    let mut is_pivot = vec![false; d];
    for &r in &echelon.pivot_rows {
        is_pivot[r] = true;
    }
    let permutation: Vec<usize> = (0..d)
        .filter(|&r| !is_pivot[r])
        .chain(echelon.pivot_rows.iter().copied())
        .collect();

    let top = d - b;
    let v_tilde = Matrix::from_fn(top, b, |p, j| echelon.columns[(permutation[p], j)]);
    let y1_tilde = Vector::from_fn(top, |p, _| y1[permutation[p]]);
    let y1_bar = Vector::from_fn(b, |p, _| y1[permutation[top + p]]);
    Ok((
        SearchBasis {
            b,
            permutation,
            v_tilde,
            y1_tilde,
            y1_bar,
        },
        echelon.flops,
    ))
}

fn linf_dist_to_unit(y: &Vector, i: usize) -> f64 {
    y.iter()
        .enumerate()
        .map(|(p, &v)| if p == i { (v - 1.0).abs() } else { v.abs() })
        .fold(0.0, f64::max)
}

/// Echelon-based search with operation counting.
pub fn boolean_vector_search_report(points: &[Vector], tol: f64) -> Result<SearchReport, LinalgError> {
    let (basis, mut flops) = search_basis(points, tol)?;
    let d = basis.permutation.len();
    let top = d - basis.b;
    let mut indices = BTreeSet::new();

    if basis.b == 0 {
        // All points coincide: test y_1 directly.
        let y1 = &points[0];
        if let Some(i) = (0..d).find(|&i| linf_dist_to_unit(y1, i) <= tol) {
            indices.insert(i + 1);
        }
        flops += d as u64;
        return Ok(SearchReport {
            indices,
            dim: 0,
            flops,
        });
    }

    let y = &basis.y1_tilde - &basis.v_tilde * &basis.y1_bar;
    flops += (top * basis.b) as u64;

    if top > 0 {
        let (argmax, _) = y.argmax();
        if linf_dist_to_unit(&y, argmax) <= tol {
            indices.insert(basis.permutation[argmax] + 1);
        }
        flops += top as u64;
    }

    for j in 0..basis.b {
        let hit = basis
            .v_tilde
            .column(j)
            .iter()
            .zip(y.iter())
            .all(|(&v, &yy)| (v + yy).abs() <= tol);
        if hit {
            indices.insert(basis.permutation[top + j] + 1);
        }
        flops += top as u64;
    }

    Ok(SearchReport {
        indices,
        dim: basis.b,
        flops,
    })
}

/// Indices `i` (1-based) with `delta_d^i` in `Aff(points)`, equality tested
/// in the sup norm at `tol`.
pub fn boolean_vector_search(points: &[Vector], tol: f64) -> Result<BTreeSet<usize>, LinalgError> {
    Ok(boolean_vector_search_report(points, tol)?.indices)
}

/// Same search over an explicit affine subspace.
pub fn search_subspace(subspace: &AffineSubspace, tol: f64) -> BTreeSet<usize> {
    boolean_vector_search(&subspace.generators(), tol).expect("generators share one dimension")
}

/// Reference implementation: test every unit vector's distance to
/// `Aff(points)`.
pub fn boolean_vector_search_bruteforce(
    points: &[Vector],
    tol: f64,
) -> Result<BTreeSet<usize>, LinalgError> {
    let d = check_points(points)?;
    let mut diffs = Matrix::zeros(d, points.len() - 1);
    for (k, p) in points[1..].iter().enumerate() {
        diffs.set_column(k, &(p - &points[0]));
    }
    let aff = affine_from_points(points, pivot_threshold(&diffs, tol))?;
    let mut out = BTreeSet::new();
    for i in 0..d {
        let mut e = Vector::zeros(d);
        e[i] = 1.0;
        if dist_to_affine(&e, &aff)? <= tol {
            out.insert(i + 1);
        }
    }
    Ok(out)
}
