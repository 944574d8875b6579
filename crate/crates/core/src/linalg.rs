//! Dense linear algebra: column echelon reduction, pseudoinverses, affine
//! projectors and affine subspaces.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Singular values at or below this are treated as zero when forming
/// pseudoinverses of lifted (0/1-valued) matrices.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// Relative factor applied to the largest absolute entry to get a pivot
/// threshold.
pub const RELATIVE_PIVOT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at least one point is required")]
    NoPoints,
    #[error("target dimension {target} exceeds ambient dimension {ambient}")]
    TargetTooLarge { target: usize, ambient: usize },
}

/// `RELATIVE_PIVOT * max |a_ij|`.
pub fn relative_pivot_tol(a: &Matrix) -> f64 {
    RELATIVE_PIVOT * a.amax()
}

/// Column-reduced echelon form of a matrix.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rank: usize,
    /// `rows x rank`; column `j` has a 1 in row `pivot_rows[j]` and every
    /// column is 0 in the other pivot rows.
    pub columns: Matrix,
    /// 0-based, strictly increasing.
    pub pivot_rows: Vec<usize>,
    /// Multiply-add count spent in the reduction.
    pub flops: u64,
}

/// Gauss-Jordan elimination on the columns of `a` with full pivoting.
/// Candidate pivots with magnitude `<= pivot_tol` count as zero.
pub fn rank_and_echelon(a: &Matrix, pivot_tol: f64) -> Echelon {
    let rows = a.nrows();
    let mut work: Vec<Vector> = a.column_iter().map(|c| c.into_owned()).collect();
    let mut remaining: Vec<usize> = (0..work.len()).collect();
    let mut is_pivot_row = vec![false; rows];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut flops = 0u64;

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (slot, &c) in remaining.iter().enumerate() {
            for r in (0..rows).filter(|&r| !is_pivot_row[r]) {
                let v = work[c][r].abs();
                if v > pivot_tol && best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((slot, r, v));
                }
            }
        }
        flops += (remaining.len() * rows) as u64;
        let Some((slot, r, _)) = best else { break };
        let c = remaining.swap_remove(slot);
        let scale = work[c][r];
        work[c] /= scale;
        work[c][r] = 1.0;
        let pivot_col = work[c].clone();
        for &j in remaining.iter().chain(pivots.iter().map(|(_, pc)| pc)) {
            let factor = work[j][r];
            if factor != 0.0 {
                work[j].axpy(-factor, &pivot_col, 1.0);
                work[j][r] = 0.0;
            }
        }
        flops += ((remaining.len() + pivots.len() + 1) * rows) as u64;
        is_pivot_row[r] = true;
        pivots.push((r, c));
    }

    pivots.sort_unstable();
    let rank = pivots.len();
    let mut columns = Matrix::zeros(rows, rank);
    for (k, &(_, c)) in pivots.iter().enumerate() {
        columns.set_column(k, &work[c]);
    }
    for (k, &(r, _)) in pivots.iter().enumerate() {
        for j in 0..rank {
            columns[(r, j)] = if j == k { 1.0 } else { 0.0 };
        }
    }
    Echelon {
        rank,
        columns,
        pivot_rows: pivots.into_iter().map(|(r, _)| r).collect(),
        flops,
    }
}

/// Thin SVD `a = U diag(s) V^T` with `s` descending.
pub fn thin_svd(a: &Matrix) -> (Matrix, Vector, Matrix) {
    let fa = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = fa.thin_svd().expect("SVD converges");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    (
        Matrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        Vector::from_fn(s.nrows(), |i, _| s[i]),
        Matrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    )
}

/// Numerical rank from singular values, with threshold relative to the
/// largest singular value.
pub fn numerical_rank(a: &Matrix, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let (_, sv, _) = thin_svd(a);
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Moore-Penrose pseudoinverse; singular values `<= tol` are dropped.
pub fn pseudoinverse(a: &Matrix, tol: f64) -> Matrix {
    if a.is_empty() || a.amax() == 0.0 {
        return Matrix::zeros(a.ncols(), a.nrows());
    }
    let (u, s, v) = thin_svd(a);
    let inv = s.map(|x| if x > tol { 1.0 / x } else { 0.0 });
    v * Matrix::from_diagonal(&inv) * u.transpose()
}

/// `H y = z` held by one node, with its cached pseudoinverse.
#[derive(Debug, Clone)]
pub struct LocalLinearEquation {
    h: Matrix,
    z: Vector,
    h_pinv: Matrix,
}

impl LocalLinearEquation {
    pub fn new(h: Matrix, z: Vector) -> Result<Self, LinalgError> {
        if h.nrows() != z.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: h.nrows(),
                got: z.len(),
            });
        }
        let h_pinv = pseudoinverse(&h, DEFAULT_PINV_TOL);
        Ok(Self { h, z, h_pinv })
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    pub fn h_pinv(&self) -> &Matrix {
        &self.h_pinv
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    /// `(I - H^+ H) y + H^+ z`: the nearest point of `{y : H y = z}` when that
    /// set is nonempty.
    pub fn project(&self, y: &Vector) -> Result<Vector, LinalgError> {
        if y.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(self.project_unchecked(y))
    }

    pub(crate) fn project_unchecked(&self, y: &Vector) -> Vector {
        let residual = &self.h * y - &self.z;
        y - &self.h_pinv * residual
    }

    /// `||H y - z||_2`.
    pub fn residual(&self, y: &Vector) -> f64 {
        (&self.h * y - &self.z).norm()
    }

    /// The projector `I - H^+ H` onto the null space of `H`.
    pub fn null_projector(&self) -> Matrix {
        Matrix::identity(self.dim(), self.dim()) - &self.h_pinv * &self.h
    }
}

/// The stacked system `H y = z` of all nodes; only used centrally, as an
/// oracle or for diagnostics.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    h: Matrix,
    z: Vector,
    h_pinv: Matrix,
}

impl StackedSystem {
    pub fn new(eqs: &[LocalLinearEquation]) -> Result<Self, LinalgError> {
        let dim = eqs.first().ok_or(LinalgError::NoPoints)?.dim();
        let total: usize = eqs.iter().map(|e| e.h.nrows()).sum();
        let mut h = Matrix::zeros(total, dim);
        let mut z = Vector::zeros(total);
        let mut row = 0;
        for eq in eqs {
            if eq.dim() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: eq.dim(),
                });
            }
            let k = eq.h.nrows();
            h.view_mut((row, 0), (k, dim)).copy_from(&eq.h);
            z.rows_mut(row, k).copy_from(&eq.z);
            row += k;
        }
        let h_pinv = pseudoinverse(&h, DEFAULT_PINV_TOL);
        Ok(Self { h, z, h_pinv })
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.h, 1e-10)
    }

    /// Rank of `[H | z]`.
    pub fn augmented_rank(&self) -> usize {
        let mut aug = self.h.clone().insert_column(self.h.ncols(), 0.0);
        aug.set_column(self.h.ncols(), &self.z);
        numerical_rank(&aug, 1e-10)
    }

    pub fn is_consistent(&self) -> bool {
        self.rank() == self.augmented_rank()
    }

    /// Dimension of the solution set when consistent.
    pub fn solution_dim(&self) -> usize {
        self.h.ncols() - self.rank()
    }

    /// Projection onto `{y : H y = z}` (least-squares point if inconsistent).
    pub fn project(&self, y: &Vector) -> Vector {
        y - &self.h_pinv * (&self.h * y - &self.z)
    }
}

/// `offset + span(basis)` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    offset: Vector,
    basis: Matrix,
}

impl AffineSubspace {
    /// A single point (dimension 0).
    pub fn point(offset: Vector) -> Self {
        let d = offset.len();
        Self {
            offset,
            basis: Matrix::zeros(d, 0),
        }
    }

    /// `offset + span(directions)`; `directions` must be linearly
    /// independent.
    pub fn from_directions(offset: Vector, directions: &Matrix) -> Result<Self, LinalgError> {
        if directions.nrows() != offset.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: offset.len(),
                got: directions.nrows(),
            });
        }
        if directions.ncols() == 0 {
            return Ok(Self::point(offset));
        }
        let q = directions.clone().qr().q();
        let basis = q.columns(0, directions.ncols()).into_owned();
        Ok(Self { offset, basis })
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    /// Orthonormal direction vectors as columns.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    fn check(&self, y: &Vector) -> Result<(), LinalgError> {
        if y.len() != self.ambient_dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.ambient_dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Orthogonal projection of `y` onto the subspace.
    pub fn project(&self, y: &Vector) -> Result<Vector, LinalgError> {
        self.check(y)?;
        let rel = y - &self.offset;
        Ok(&self.offset + &self.basis * (self.basis.transpose() * rel))
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> Result<bool, LinalgError> {
        Ok(dist_to_affine(y, self)? <= tol)
    }

    /// `offset, offset + b_1, ..., offset + b_dim`: an affinely independent
    /// generating set.
    pub fn generators(&self) -> Vec<Vector> {
        std::iter::once(self.offset.clone())
            .chain(self.basis.column_iter().map(|b| &self.offset + b))
            .collect()
    }
}

fn difference_matrix(points: &[Vector]) -> Result<Matrix, LinalgError> {
    let first = points.first().ok_or(LinalgError::NoPoints)?;
    let d = first.len();
    let mut diffs = Matrix::zeros(d, points.len() - 1);
    for (k, p) in points[1..].iter().enumerate() {
        if p.len() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        diffs.set_column(k, &(p - first));
    }
    Ok(diffs)
}

/// `Aff(points)`: offset `points[0]` and the span of `points[s] - points[0]`,
/// with rank decided at pivot threshold `tol`.
pub fn affine_from_points(points: &[Vector], tol: f64) -> Result<AffineSubspace, LinalgError> {
    let diffs = difference_matrix(points)?;
    let echelon = rank_and_echelon(&diffs, tol);
    AffineSubspace::from_directions(points[0].clone(), &echelon.columns)
}

/// Euclidean distance from `y` to `a`.
pub fn dist_to_affine(y: &Vector, a: &AffineSubspace) -> Result<f64, LinalgError> {
    Ok((y - a.project(y)?).norm())
}

/// The `target_dim`-dimensional affine subspace minimizing the sum of
/// squared distances to `points`: centroid plus the leading principal
/// directions. Directions beyond the data rank are filled from the
/// orthogonal complement.
pub fn best_affine_fit(points: &[Vector], target_dim: usize) -> Result<AffineSubspace, LinalgError> {
    let first = points.first().ok_or(LinalgError::NoPoints)?;
    let d = first.len();
    if target_dim > d {
        return Err(LinalgError::TargetTooLarge {
            target: target_dim,
            ambient: d,
        });
    }
    let mut centroid = Vector::zeros(d);
    for p in points {
        if p.len() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        centroid += p;
    }
    centroid /= points.len() as f64;
    if target_dim == 0 {
        return Ok(AffineSubspace::point(centroid));
    }

    let mut centered = Matrix::zeros(d, points.len());
    for (k, p) in points.iter().enumerate() {
        centered.set_column(k, &(p - &centroid));
    }
    let (u, sv, _) = thin_svd(&centered);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let mut chosen: Vec<Vector> = order
        .iter()
        .take(target_dim)
        .map(|&k| u.column(k).into_owned())
        .collect();
    let mut e = 0;
    while chosen.len() < target_dim {
        // Gram-Schmidt a standard basis vector against what we have.
        let mut v = Vector::zeros(d);
        v[e] = 1.0;
        for _ in 0..2 {
            for q in &chosen {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            chosen.push(v / norm);
        }
        e += 1;
    }
    let basis = Matrix::from_columns(&chosen);
    Ok(AffineSubspace {
        offset: centroid,
        basis,
    })
}

/// Smallest-dimension least-squares fit whose summed point distances stay
/// within `budget`. Dimensions are tried in ascending order.
pub fn min_dimension_fit(points: &[Vector], budget: f64) -> Result<AffineSubspace, LinalgError> {
    let d = points.first().ok_or(LinalgError::NoPoints)?.len();
    for b in 0..d {
        let fit = best_affine_fit(points, b)?;
        let total: f64 = points
            .iter()
            .map(|p| dist_to_affine(p, &fit))
            .sum::<Result<f64, _>>()?;
        if total <= budget {
            return Ok(fit);
        }
    }
    best_affine_fit(points, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    fn vecf(data: &[f64]) -> Vector {
        Vector::from_column_slice(data)
    }

    #[test]
    fn echelon_identity() {
        let e = rank_and_echelon(&Matrix::identity(3, 3), 1e-12);
        assert_eq!(e.rank, 3);
        assert_eq!(e.pivot_rows, vec![0, 1, 2]);
        assert_eq!(e.columns, Matrix::identity(3, 3));
    }

    #[test]
    fn echelon_proportional_columns() {
        let e = rank_and_echelon(&mat(2, 2, &[1., 2., 2., 4.]), 1e-12);
        assert_eq!(e.rank, 1);
    }

    #[test]
    fn echelon_of_lifted_matrix() {
        let m = mat(
            2,
            8,
            &[
                0., 1., 0., 0., 0., 0., 0., 0., //
                1., 0., 1., 1., 1., 1., 1., 1.,
            ],
        );
        let e = rank_and_echelon(&m, 1e-12);
        assert_eq!(e.rank, 2);
        assert_eq!(e.columns, Matrix::identity(2, 2));
    }

    #[test]
    fn echelon_structure_on_rank_deficient_matrix() {
        // Columns c0, c1, c0 + 2 c1 in R^4.
        let a = mat(4, 3, &[1., 0., 1., 2., 1., 4., 0., 3., 6., 5., 1., 7.]);
        let e = rank_and_echelon(&a, 1e-10);
        assert_eq!(e.rank, 2);
        for (k, &r) in e.pivot_rows.iter().enumerate() {
            for j in 0..e.rank {
                assert_eq!(e.columns[(r, j)], if j == k { 1.0 } else { 0.0 });
            }
        }
        // Every original column is a combination of the echelon columns,
        // with coefficients read off the pivot rows.
        for col in a.column_iter() {
            let coeffs = Vector::from_iterator(e.rank, e.pivot_rows.iter().map(|&r| col[r]));
            let recon = &e.columns * coeffs;
            assert_relative_eq!(recon, col.into_owned(), epsilon = 1e-12);
        }
    }

    #[test]
    fn echelon_empty_matrix() {
        let e = rank_and_echelon(&Matrix::zeros(4, 0), 1e-10);
        assert_eq!(e.rank, 0);
        assert_eq!(e.columns.shape(), (4, 0));
    }

    #[test]
    fn pinv_examples() {
        let inv = pseudoinverse(&mat(2, 2, &[2., 0., 0., 4.]), 1e-12);
        assert_relative_eq!(inv, mat(2, 2, &[0.5, 0., 0., 0.25]), epsilon = 1e-14);
        let row = pseudoinverse(&mat(1, 2, &[1., 1.]), 1e-12);
        assert_relative_eq!(row, mat(2, 1, &[0.5, 0.5]), epsilon = 1e-14);
        let zero = pseudoinverse(&Matrix::zeros(2, 3), 1e-12);
        assert_eq!(zero, Matrix::zeros(3, 2));
    }

    #[test]
    fn projection_examples() {
        let eq = LocalLinearEquation::new(Matrix::identity(2, 2), vecf(&[3., -1.])).unwrap();
        assert_relative_eq!(eq.project(&vecf(&[9., 9.])).unwrap(), vecf(&[3., -1.]));

        let eq = LocalLinearEquation::new(mat(2, 2, &[1., 0., 0., 0.]), vecf(&[3., 0.])).unwrap();
        let p = eq.project(&vecf(&[5., 7.])).unwrap();
        assert_relative_eq!(p, vecf(&[3., 7.]), epsilon = 1e-14);
        assert_relative_eq!(eq.project(&p).unwrap(), p, epsilon = 1e-14);

        assert_eq!(
            eq.project(&vecf(&[1., 2., 3.])).unwrap_err(),
            LinalgError::DimensionMismatch { expected: 2, got: 3 }
        );
    }

    #[test]
    fn local_equation_rejects_bad_rhs() {
        assert!(LocalLinearEquation::new(Matrix::identity(2, 2), vecf(&[1.])).is_err());
    }

    #[test]
    fn affine_from_points_examples() {
        let p = vecf(&[1., 2., 3.]);
        let a = affine_from_points(std::slice::from_ref(&p), 1e-9).unwrap();
        assert_eq!(a.dim(), 0);
        assert_eq!(a.offset(), &p);

        let pts: Vec<Vector> = (0..3)
            .map(|i| {
                let mut v = Vector::zeros(3);
                v[i] = 1.0;
                v
            })
            .collect();
        let a = affine_from_points(&pts, 1e-9).unwrap();
        assert_eq!(a.dim(), 2);
        assert!(a.contains(&vecf(&[1. / 3., 1. / 3., 1. / 3.]), 1e-12).unwrap());
        assert!(!a.contains(&vecf(&[0., 0., 0.]), 1e-3).unwrap());
    }

    #[test]
    fn dist_examples() {
        let line = AffineSubspace::from_directions(vecf(&[0., 0.]), &mat(2, 1, &[1., 0.])).unwrap();
        assert_relative_eq!(dist_to_affine(&vecf(&[3., 4.]), &line).unwrap(), 4.0);
        assert_eq!(dist_to_affine(&vecf(&[0., 0.]), &line).unwrap(), 0.0);
        assert!(dist_to_affine(&vecf(&[0., 0., 1.]), &line).is_err());
    }

    #[test]
    fn best_fit_collinear_and_full() {
        let pts: Vec<Vector> = (0..5).map(|t| vecf(&[t as f64, 2.0 * t as f64 + 1.0, -1.0])).collect();
        let fit = best_affine_fit(&pts, 1).unwrap();
        for p in &pts {
            assert!(dist_to_affine(p, &fit).unwrap() < 1e-12);
        }
        let fit = best_affine_fit(&pts, 3).unwrap();
        assert_eq!(fit.dim(), 3);
        assert!(dist_to_affine(&vecf(&[9., -4., 2.]), &fit).unwrap() < 1e-12);
        assert_eq!(
            best_affine_fit(&pts, 4).unwrap_err(),
            LinalgError::TargetTooLarge { target: 4, ambient: 3 }
        );
    }

    #[test]
    fn min_dimension_fit_recovers_line() {
        let pts: Vec<Vector> = (0..4).map(|t| vecf(&[t as f64, 0.5, 1.0 - t as f64, 2.0])).collect();
        let fit = min_dimension_fit(&pts, 1e-9).unwrap();
        assert_eq!(fit.dim(), 1);
        let fit = min_dimension_fit(&pts, 100.0).unwrap();
        assert_eq!(fit.dim(), 0);
    }

    #[test]
    fn stacked_consistency() {
        let a = LocalLinearEquation::new(mat(1, 2, &[1., 1.]), vecf(&[1.])).unwrap();
        let b = LocalLinearEquation::new(mat(1, 2, &[1., 1.]), vecf(&[2.])).unwrap();
        let c = LocalLinearEquation::new(mat(1, 2, &[1., -1.]), vecf(&[0.])).unwrap();
        assert!(!StackedSystem::new(&[a.clone(), b]).unwrap().is_consistent());
        let s = StackedSystem::new(&[a, c]).unwrap();
        assert!(s.is_consistent());
        assert_eq!(s.solution_dim(), 0);
        assert_relative_eq!(s.project(&vecf(&[7., 3.])), vecf(&[0.5, 0.5]), epsilon = 1e-12);
    }
}
