//! Bijections between `{0,1}^m` and the unit vectors of `R^{2^m}`, and the
//! 2 x 2^m matrix representation of a Boolean mapping.
//!
//! Indices are 1-based throughout, matching the `delta_{2^m}^i` notation:
//! assignment `[x1 .. xm]` maps to `i = sum x_k 2^{m-k} + 1`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::formula::{BooleanSystem, Formula, FormulaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("empty bit vector")]
    Empty,
    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },
    #[error("m = {0} is outside the supported range 1..=63")]
    BadWidth(usize),
}

fn check_width(m: usize) -> Result<(), IndexError> {
    if m == 0 || m > 63 {
        return Err(IndexError::BadWidth(m));
    }
    Ok(())
}

/// `sum x_k 2^{m-k} + 1`.
pub fn btoi(x: &[bool]) -> Result<usize, IndexError> {
    if x.is_empty() {
        return Err(IndexError::Empty);
    }
    check_width(x.len())?;
    Ok(x.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize) + 1)
}

/// Inverse of [`btoi`].
pub fn itob(i: usize, m: usize) -> Result<Vec<bool>, IndexError> {
    check_width(m)?;
    let max = 1usize << m;
    if i == 0 || i > max {
        return Err(IndexError::OutOfRange { index: i, max });
    }
    let code = i - 1;
    Ok((0..m).map(|k| (code >> (m - 1 - k)) & 1 == 1).collect())
}

/// Index of the single nonzero entry of `Theta_m(x)`.
pub fn theta(x: &[bool]) -> Result<usize, IndexError> {
    btoi(x)
}

/// Dense `Theta_m(x)` as a unit vector of length `2^m`.
pub fn theta_dense(x: &[bool]) -> Result<DVector<f64>, IndexError> {
    let i = theta(x)?;
    let mut v = DVector::zeros(1 << x.len());
    v[i - 1] = 1.0;
    Ok(v)
}

/// `Upsilon_m(delta_{2^m}^i) = itob(i)`.
pub fn upsilon(i: usize, m: usize) -> Result<Vec<bool>, IndexError> {
    itob(i, m)
}

/// Renders an assignment as a bit string, `x1` first.
pub fn bits_to_string(x: &[bool]) -> String {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// One column of a [`BooleanMatrix`]: `delta_2^1` or `delta_2^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitColumn {
    /// `delta_2^1 = (1, 0)^T`, the image of the value 0.
    First,
    /// `delta_2^2 = (0, 1)^T`, the image of the value 1.
    Second,
}

impl UnitColumn {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            UnitColumn::Second
        } else {
            UnitColumn::First
        }
    }

    pub fn to_bit(self) -> bool {
        self == UnitColumn::Second
    }

    /// 0-based row holding the 1 entry.
    pub fn row(self) -> usize {
        self as usize
    }
}

/// `M_g` for a Boolean mapping `g: {0,1}^m -> {0,1}`, stored as column tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanMatrix {
    m: usize,
    columns: Vec<UnitColumn>,
}

impl BooleanMatrix {
    /// Wraps a truth table of length `2^m` (entry `i` is `g(itob(i+1))`).
    pub fn from_truth_table(m: usize, table: &[bool]) -> Result<Self, IndexError> {
        check_width(m)?;
        if table.len() != 1 << m {
            return Err(IndexError::OutOfRange {
                index: table.len(),
                max: 1 << m,
            });
        }
        Ok(Self {
            m,
            columns: table.iter().copied().map(UnitColumn::from_bit).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> &[UnitColumn] {
        &self.columns
    }

    /// Integer rows `[top, bottom]`, for exact comparison.
    pub fn rows(&self) -> [Vec<u8>; 2] {
        let top = self.columns.iter().map(|c| (c.row() == 0) as u8).collect();
        let bottom = self.columns.iter().map(|c| (c.row() == 1) as u8).collect();
        [top, bottom]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(2, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            dense[(c.row(), j)] = 1.0;
        }
        dense
    }

    /// `M_g Theta_m(x)` without densifying: the tag of column `theta(x)`.
    pub fn apply(&self, x: &[bool]) -> Result<UnitColumn, IndexError> {
        if x.len() != self.m {
            return Err(IndexError::OutOfRange {
                index: x.len(),
                max: self.m,
            });
        }
        Ok(self.columns[theta(x)? - 1])
    }
}

/// Builds `M_f` column by column: column `i` is `delta_2^{f(itob(i)) + 1}`.
pub fn boolean_matricization(f: &Formula, m: usize) -> Result<BooleanMatrix, FormulaError> {
    let table = f.truth_table(m)?;
    BooleanMatrix::from_truth_table(m, &table).map_err(|_| FormulaError::LengthMismatch {
        got: m,
        need: f.max_var().max(1),
    })
}

/// Stacks per-node blocks into the `2n x 2^m` matrix of the network system.
pub fn stack_dense(blocks: &[BooleanMatrix]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.columns.len());
    let mut out = DMatrix::zeros(2 * blocks.len(), cols);
    for (k, block) in blocks.iter().enumerate() {
        out.view_mut((2 * k, 0), (2, cols)).copy_from(&block.to_dense());
    }
    out
}

/// Number of distinct output tuples `(f_1(x), ..., f_n(x))` over all `x`.
pub fn chi0(system: &BooleanSystem) -> usize {
    let m = system.m();
    let tables: Vec<Vec<bool>> = system
        .equations()
        .iter()
        .map(|eq| eq.formula.truth_table(m).expect("system formulas are within range"))
        .collect();
    (0..1usize << m)
        .map(|i| tables.iter().map(|t| t[i]).collect::<Vec<bool>>())
        .collect::<BTreeSet<_>>()
        .len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn btoi_examples() {
        assert_eq!(btoi(&bits("000")).unwrap(), 1);
        assert_eq!(btoi(&bits("100")).unwrap(), 5);
        assert_eq!(btoi(&bits("101")).unwrap(), 6);
        assert_eq!(btoi(&[]).unwrap_err(), IndexError::Empty);
    }

    #[test]
    fn itob_examples() {
        assert_eq!(itob(1, 3).unwrap(), bits("000"));
        assert_eq!(itob(3, 3).unwrap(), bits("010"));
        assert_eq!(itob(8, 3).unwrap(), bits("111"));
        assert_eq!(
            itob(9, 3).unwrap_err(),
            IndexError::OutOfRange { index: 9, max: 8 }
        );
        assert!(itob(0, 3).is_err());
        assert!(itob(1, 0).is_err());
    }

    #[test]
    fn theta_upsilon_examples() {
        assert_eq!(theta(&[false]).unwrap(), 1);
        assert_eq!(theta(&[true]).unwrap(), 2);
        assert_eq!(theta(&bits("100")).unwrap(), 5);
        assert_eq!(upsilon(1, 3).unwrap(), bits("000"));
        assert_eq!(upsilon(5, 3).unwrap(), bits("100"));
        assert_eq!(upsilon(6, 3).unwrap(), bits("101"));
        assert!(upsilon(17, 3).is_err());
    }

    #[test]
    fn theta_matches_kronecker_product() {
        // delta_2^{x1+1} (x) ... (x) delta_2^{xm+1}, computed literally.
        for m in 1..=4 {
            for i in 1..=(1 << m) {
                let x = itob(i, m).unwrap();
                let mut kron = DMatrix::from_element(1, 1, 1.0);
                for &b in &x {
                    let d2 = if b {
                        DMatrix::from_column_slice(2, 1, &[0.0, 1.0])
                    } else {
                        DMatrix::from_column_slice(2, 1, &[1.0, 0.0])
                    };
                    kron = kron.kronecker(&d2);
                }
                let dense = theta_dense(&x).unwrap();
                assert_eq!(kron.column(0), dense.column(0));
            }
        }
    }

    #[test]
    fn matricization_example_one_first_equation() {
        let f = parse_formula("x1 | x2 | !x3", 3).unwrap();
        let mf = boolean_matricization(&f, 3).unwrap();
        assert_eq!(
            mf.rows(),
            [vec![0, 1, 0, 0, 0, 0, 0, 0], vec![1, 0, 1, 1, 1, 1, 1, 1]]
        );
    }

    #[test]
    fn matricization_example_two_third_equation() {
        let f = parse_formula("x1 & x3", 3).unwrap();
        let mf = boolean_matricization(&f, 3).unwrap();
        assert_eq!(
            mf.rows(),
            [vec![1, 1, 1, 1, 1, 0, 1, 0], vec![0, 0, 0, 0, 0, 1, 0, 1]]
        );
    }

    #[test]
    fn matricization_of_constant() {
        let mf = boolean_matricization(&Formula::Const(false), 2).unwrap();
        assert!(mf.columns().iter().all(|&c| c == UnitColumn::First));
        assert_eq!(mf.to_dense().row(0).sum(), 4.0);
    }

    #[test]
    fn apply_agrees_with_dense_product() {
        let f = parse_formula("x1 -> (x2 <-> x3)", 3).unwrap();
        let mf = boolean_matricization(&f, 3).unwrap();
        let dense = mf.to_dense();
        for i in 1..=8 {
            let x = itob(i, 3).unwrap();
            let tag = mf.apply(&x).unwrap();
            let prod = &dense * theta_dense(&x).unwrap();
            assert_eq!(prod[tag.row()], 1.0);
            assert_eq!(tag.to_bit(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn stacking_places_blocks() {
        let a = boolean_matricization(&parse_formula("x1", 1).unwrap(), 1).unwrap();
        let b = boolean_matricization(&parse_formula("!x1", 1).unwrap(), 1).unwrap();
        let h = stack_dense(&[a, b]);
        assert_eq!(h, DMatrix::from_row_slice(4, 2, &[1., 0., 0., 1., 0., 1., 1., 0.]));
    }

    #[test]
    fn chi0_examples() {
        let ex2 = BooleanSystem::parse(
            3,
            &[("(x1 | x2) & !x3", true), ("(x1 -> x2) | x3", false), ("x1 & x3", false)],
        )
        .unwrap();
        assert_eq!(chi0(&ex2), 4);
        let constant = BooleanSystem::parse(2, &[("0", false)]).unwrap();
        assert_eq!(chi0(&constant), 1);
    }

    #[test]
    fn chi0_example_one_matches_enumeration() {
        let sys = BooleanSystem::parse(
            3,
            &[("x1 | x2 | !x3", true), ("x1 & (x1 <-> x2)", false), ("x2 & x3", false)],
        )
        .unwrap();
        // Hand enumeration of (f1, f2, f3) over 000..111:
        // 000:(1,0,0) 001:(0,0,0) 010:(1,0,0) 011:(1,0,1)
        // 100:(1,0,0) 101:(1,0,0) 110:(1,1,0) 111:(1,1,1)
        assert_eq!(chi0(&sys), 5);
    }
}
