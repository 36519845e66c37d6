//! Exact linear algebra over the rationals.
//!
//! Matrices are dense row-major `Vec<Vec<BigRational>>`; sizes stay below a
//! few dozen rows at the supported truncation levels.

use num::{BigRational, One, Zero};

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<BigRational>>;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = BigRational::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in c..cols {
                    let delta = factor.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut work = m.clone();
    rref(&mut work).len()
}

/// Solves `a x = b` and insists on a unique solution.
///
/// Extra (consistent) rows are allowed; an underdetermined or inconsistent
/// system is reported as [`Error::LinearSystem`].
pub fn solve_unique(a: &Matrix, b: &[BigRational]) -> Result<Vec<BigRational>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} right-hand sides",
            a.len(),
            b.len()
        )));
    }
    let unknowns = a.first().map_or(0, Vec::len);
    let mut aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&unknowns) {
        return Err(Error::LinearSystem("inconsistent system".into()));
    }
    if pivots.len() < unknowns {
        return Err(Error::LinearSystem(format!(
            "underdetermined: rank {} < {} unknowns",
            pivots.len(),
            unknowns
        )));
    }
    let mut x = vec![BigRational::zero(); unknowns];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = aug[row][unknowns].clone();
    }
    Ok(x)
}

/// Inverse of a square matrix.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    let mut aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
        return Err(Error::LinearSystem("singular matrix".into()));
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}
