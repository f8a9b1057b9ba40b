//! Exact scalars, integer vectors and matrices.
//!
//! Everything downstream (prices, valuations, determinants, LP pivots) runs on
//! arbitrary-precision rationals; there is no floating point anywhere in the
//! crate. `Rat` is always in lowest terms with a positive denominator, which
//! `num-rational` guarantees on construction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(Int::from(n), Int::from(d))
}

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(Int::from(v))
}

/// Renders a rational as `n` or `n/d`.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `7`, `-3/4`, or an exact decimal such as `0.5` (decimal digits are
/// converted over powers of ten; binary floating point is never consulted).
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer = Int::from_str(n.trim()).map_err(|e| format!("bad numerator {n:?}: {e}"))?;
        let denom = Int::from_str(d.trim()).map_err(|e| format!("bad denominator {d:?}: {e}"))?;
        if denom.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Rat::new(numer, denom));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let sign = if whole.trim_start().starts_with('-') { -1 } else { 1 };
        let whole_int = if whole.is_empty() || whole == "-" || whole == "+" {
            Int::zero()
        } else {
            Int::from_str(whole).map_err(|e| format!("bad decimal {s:?}: {e}"))?
        };
        if frac.is_empty() {
            return Ok(Rat::from_integer(whole_int));
        }
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal fraction in {s:?}"));
        }
        let frac_int = Int::from_str(frac).map_err(|e| format!("bad decimal {s:?}: {e}"))?;
        let scale = Int::from(10u32).pow(frac.len() as u32);
        let magnitude = Rat::from_integer(whole_int.abs()) + Rat::new(frac_int, scale);
        return Ok(if sign < 0 { -magnitude } else { magnitude });
    }
    Int::from_str(s)
        .map(Rat::from_integer)
        .map_err(|e| format!("bad rational {s:?}: {e}"))
}

/// Integer vector indexed by a fixed index set (goods, items, or bundles).
/// Equality and ordering are componentwise/lexicographic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntVector(pub Vec<Int>);

impl IntVector {
    pub fn zeros(n: usize) -> Self {
        IntVector(vec![Int::zero(); n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![Int::zero(); n];
        v[i] = Int::one();
        IntVector(v)
    }

    pub fn from_i64s(vals: &[i64]) -> Self {
        IntVector(vals.iter().map(|&v| Int::from(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &IntVector) -> IntVector {
        assert_eq!(self.len(), other.len());
        IntVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &IntVector) -> IntVector {
        assert_eq!(self.len(), other.len());
        IntVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn neg(&self) -> IntVector {
        IntVector(self.0.iter().map(|a| -a).collect())
    }

    pub fn dot_int(&self, other: &IntVector) -> Int {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .fold(Int::zero(), |acc, (a, b)| acc + a * b)
    }

    /// All components in {-1, 0, 1}.
    pub fn in_unit_box(&self) -> bool {
        self.0.iter().all(|c| c.abs() <= Int::one())
    }

    /// Divides out the gcd of the components and flips the sign so the first
    /// nonzero component is positive. The zero vector is returned unchanged.
    pub fn primitive_normalized(&self) -> IntVector {
        let mut g = Int::zero();
        for c in &self.0 {
            g = g.gcd(c);
        }
        if g.is_zero() {
            return self.clone();
        }
        let mut v: Vec<Int> = self.0.iter().map(|c| c / &g).collect();
        if let Some(first) = v.iter().find(|c| !c.is_zero()) {
            if first.is_negative() {
                for c in &mut v {
                    *c = -&*c;
                }
            }
        }
        IntVector(v)
    }

    pub fn to_i64s(&self) -> Vec<i64> {
        self.0
            .iter()
            .map(|c| i64::try_from(c).expect("component fits in i64"))
            .collect()
    }
}

impl fmt::Debug for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Dense integer matrix, row-major. Dimensions are fixed at construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Int>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Int>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        IntMatrix { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix::new(rows, cols, vec![Int::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Int::one();
        }
        m
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[IntVector]) -> Self {
        assert!(!columns.is_empty(), "need at least one column");
        let rows = columns[0].len();
        assert!(columns.iter().all(|c| c.len() == rows));
        let mut m = IntMatrix::zero(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for i in 0..rows {
                *m.at_mut(i, j) = col.0[i].clone();
            }
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> &Int {
        &self.entries[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Int {
        &mut self.entries[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> IntVector {
        IntVector((0..self.rows).map(|r| self.at(r, c).clone()).collect())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zero(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                *out.at_mut(ri, ci) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn to_rational(&self) -> RationalMatrix {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| Rat::from_integer(e.clone())).collect(),
        }
    }
}

/// Dense rational matrix, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rat>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        RationalMatrix { rows, cols, entries }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        RationalMatrix::new(rows, cols, vec![Rat::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RationalMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> &Rat {
        &self.entries[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Rat {
        &mut self.entries[r * self.cols + c]
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut out = RationalMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RationalMatrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = Rat::zero();
                for k in 0..self.cols {
                    acc += self.at(r, k) * other.at(k, c);
                }
                *out.at_mut(r, c) = acc;
            }
        }
        out
    }

    /// Applies the matrix to a rational column vector.
    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = Rat::zero();
                for c in 0..self.cols {
                    acc += self.at(r, c) * &v[c];
                }
                acc
            })
            .collect()
    }
}

/// Exact determinant by Bareiss fraction-free elimination. The empty matrix
/// has determinant 1.
pub fn bareiss_determinant(m: &IntMatrix) -> Result<Int, MatrixError> {
    if m.rows != m.cols {
        return Err(MatrixError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(Int::one());
    }
    let mut a: Vec<Vec<Int>> = (0..n)
        .map(|r| (0..n).map(|c| m.at(r, c).clone()).collect())
        .collect();
    let mut sign = Int::one();
    let mut prev = Int::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            // Pivot on a lower row; swapping flips the sign.
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(Int::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                a[i][j] = q;
            }
            a[i][k] = Int::zero();
        }
        prev = a[k][k].clone();
    }
    Ok(sign * a[n - 1][n - 1].clone())
}

/// Exact inverse by Gauss-Jordan elimination.
pub fn rational_inverse(m: &RationalMatrix) -> Result<RationalMatrix, MatrixError> {
    if m.rows != m.cols {
        return Err(MatrixError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let mut a = m.clone();
    let mut inv = RationalMatrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !a.at(r, col).is_zero())
            .ok_or(MatrixError::Singular)?;
        if pivot_row != col {
            for c in 0..n {
                let tmp = a.at(pivot_row, c).clone();
                *a.at_mut(pivot_row, c) = a.at(col, c).clone();
                *a.at_mut(col, c) = tmp;
                let tmp = inv.at(pivot_row, c).clone();
                *inv.at_mut(pivot_row, c) = inv.at(col, c).clone();
                *inv.at_mut(col, c) = tmp;
            }
        }
        let pivot = a.at(col, col).clone();
        for c in 0..n {
            *a.at_mut(col, c) = a.at(col, c) / &pivot;
            *inv.at_mut(col, c) = inv.at(col, c) / &pivot;
        }
        for r in 0..n {
            if r == col || a.at(r, col).is_zero() {
                continue;
            }
            let factor = a.at(r, col).clone();
            for c in 0..n {
                let av = a.at(col, c) * &factor;
                *a.at_mut(r, c) = a.at(r, c) - av;
                let iv = inv.at(col, c) * &factor;
                *inv.at_mut(r, c) = inv.at(r, c) - iv;
            }
        }
    }
    Ok(inv)
}

/// A square submatrix whose determinant falls outside {-1, 0, 1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuViolation {
    pub row_indices: Vec<usize>,
    pub column_indices: Vec<usize>,
    pub determinant: Int,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TuVerdict {
    TotallyUnimodular,
    Violation(TuViolation),
}

impl TuVerdict {
    pub fn is_tu(&self) -> bool {
        matches!(self, TuVerdict::TotallyUnimodular)
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    // Lexicographic order, so the first violation found is the canonical one.
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Decides total unimodularity by enumerating every square submatrix of the
/// column matrix, smallest first. On failure the witness is the
/// lexicographically least (rows, columns) pair among the minimal-size
/// violations.
pub fn is_totally_unimodular(vectors: &[IntVector]) -> TuVerdict {
    if vectors.is_empty() {
        return TuVerdict::TotallyUnimodular;
    }
    let m = IntMatrix::from_columns(vectors);
    let max_k = m.rows.min(m.cols);
    for k in 1..=max_k {
        for rows in subsets_of_size(m.rows, k) {
            for cols in subsets_of_size(m.cols, k) {
                let sub = m.submatrix(&rows, &cols);
                let det = bareiss_determinant(&sub).expect("square by construction");
                if det.abs() > Int::one() {
                    return TuVerdict::Violation(TuViolation {
                        row_indices: rows,
                        column_indices: cols,
                        determinant: det,
                    });
                }
            }
        }
    }
    TuVerdict::TotallyUnimodular
}

/// Deduplicates and sorts a collection of vectors.
pub fn sorted_unique(vectors: impl IntoIterator<Item = IntVector>) -> Vec<IntVector> {
    let set: BTreeSet<IntVector> = vectors.into_iter().collect();
    set.into_iter().collect()
}
