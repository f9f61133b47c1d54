//! Dense matrices, probability vectors, and information-theoretic distances.
//!
//! Everything downstream (mechanisms, joint distributions, abstraction
//! errors) reduces to a handful of operations on small dense matrices:
//! validated column-stochastic matrices, Kronecker products, column
//! normalization, and the Kullback-Leibler / Jensen-Shannon divergences in
//! nats. Distributions and stochastic-matrix columns are validated to the
//! shared [`STOCHASTIC_TOLERANCE`]; computed values are stored as-is, never
//! silently renormalized.

use thiserror::Error;

/// Absolute tolerance for probability normalization checks: a vector is
/// accepted as a distribution when its entries lie in `[-1e-9, 1 + 1e-9]`
/// and sum to 1 within `1e-9`.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Maximum value the Jensen-Shannon distance can take (disjoint supports):
/// `sqrt(ln 2)`.
pub fn jsd_max() -> f64 {
    std::f64::consts::LN_2.sqrt()
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("distributions have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(
        "KL divergence is undefined: q is zero at index {index} where p is {p_value}"
    )]
    UndefinedDivergence { index: usize, p_value: f64 },
    #[error("a distribution must have at least one entry")]
    EmptyDistribution,
    #[error("probability at index {index} is {value}, outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within {STOCHASTIC_TOLERANCE:e}")]
    NotNormalized { sum: f64 },
    #[error("a matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("matrix data has {len} entries, expected {rows} x {cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("entry ({row}, {col}) is {value}, outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("column {col} sums to {sum}, expected 1 within {STOCHASTIC_TOLERANCE:e}")]
    ColumnNotNormalized { col: usize, sum: f64 },
    #[error("matrix has {cols} columns but the distribution has {len} entries")]
    ApplyMismatch { cols: usize, len: usize },
    #[error("column {col} has no mass; cannot normalize a zero column")]
    ZeroColumn { col: usize },
    #[error("entry ({row}, {col}) is {value}; normalization requires nonnegative entries")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row}, {col}) is {value}, expected exactly 0 or 1")]
    NotBinary { row: usize, col: usize, value: f64 },
    #[error("column {col} must contain exactly one unit entry, found {found}")]
    NotColumnDeterministic { col: usize, found: usize },
    #[error("row {row} is never hit; the map is not surjective")]
    NotSurjective { row: usize },
}

fn in_unit_interval(value: f64) -> bool {
    value.is_finite() && value >= -STOCHASTIC_TOLERANCE && value <= 1.0 + STOCHASTIC_TOLERANCE
}

// ---------------------------------------------------------------------------
// Matrix

/// Plain dense row-major matrix. Carries no probabilistic invariants; used
/// as the input to column normalization and as the unconstrained view of the
/// validated matrix types.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if rows == 0 || cols == 0 {
            return Err(NumericsError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(NumericsError::ShapeMismatch { rows, cols, len: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row vectors; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(NumericsError::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(NumericsError::RaggedRows { row: r, expected: cols, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.entry(r, c));
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.entry(r, col)).collect()
    }
}

// ---------------------------------------------------------------------------
// Distribution

/// A validated probability vector: nonnegative entries summing to 1 within
/// [`STOCHASTIC_TOLERANCE`]. Entries are stored exactly as given.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, NumericsError> {
        if probs.is_empty() {
            return Err(NumericsError::EmptyDistribution);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !in_unit_interval(value) {
                return Err(NumericsError::ProbabilityOutOfRange { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(NumericsError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// A point mass on `index` out of `len` outcomes.
    pub fn point_mass(len: usize, index: usize) -> Result<Self, NumericsError> {
        if len == 0 {
            return Err(NumericsError::EmptyDistribution);
        }
        debug_assert!(index < len);
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// The uniform distribution over `len` outcomes.
    pub fn uniform(len: usize) -> Result<Self, NumericsError> {
        if len == 0 {
            return Err(NumericsError::EmptyDistribution);
        }
        Ok(Self { probs: vec![1.0 / len as f64; len] })
    }

    /// Internal constructor for vectors produced by closed operations
    /// (marginalization, stochastic-matrix application) whose result is
    /// normalized by construction.
    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.probs.iter()
    }
}

// ---------------------------------------------------------------------------
// StochasticMatrix

/// A column-stochastic matrix: entries in `[0, 1]`, every column summing to
/// 1 within [`STOCHASTIC_TOLERANCE`]. `entry(r, c)` reads as the probability
/// of row outcome `r` given column condition `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: Matrix,
}

impl StochasticMatrix {
    pub fn new(matrix: Matrix) -> Result<Self, NumericsError> {
        for col in 0..matrix.cols() {
            let mut sum = 0.0;
            for row in 0..matrix.rows() {
                let value = matrix.entry(row, col);
                if !in_unit_interval(value) {
                    return Err(NumericsError::EntryOutOfRange { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(NumericsError::ColumnNotNormalized { col, sum });
            }
        }
        Ok(Self { inner: matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericsError> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// The `n x n` identity.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { inner: Matrix { rows: n, cols: n, data } }
    }

    pub(crate) fn new_unchecked(matrix: Matrix) -> Self {
        Self { inner: matrix }
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.inner.entry(row, col)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    /// Column `col` as a distribution over row outcomes.
    pub fn column_distribution(&self, col: usize) -> Distribution {
        Distribution::new_unchecked(self.inner.column(col))
    }

    /// Matrix-vector product: mixes the columns by `input`. The result is a
    /// distribution over row outcomes (stochastic matrices are closed under
    /// application to distributions).
    pub fn apply(&self, input: &Distribution) -> Result<Distribution, NumericsError> {
        if input.len() != self.cols() {
            return Err(NumericsError::ApplyMismatch { cols: self.cols(), len: input.len() });
        }
        let mut out = vec![0.0; self.rows()];
        for (col, &weight) in input.iter().enumerate() {
            for (row, slot) in out.iter_mut().enumerate() {
                *slot += self.entry(row, col) * weight;
            }
        }
        Ok(Distribution::new_unchecked(out))
    }

    /// Kronecker product, row-major convention: `self` indexes the slower
    /// coordinate of both the row and the column space. Column-stochasticity
    /// is preserved (each product column is an outer product of two columns
    /// summing to 1).
    pub fn kronecker(&self, other: &StochasticMatrix) -> StochasticMatrix {
        let rows = self.rows() * other.rows();
        let cols = self.cols() * other.cols();
        let mut data = vec![0.0; rows * cols];
        for r1 in 0..self.rows() {
            for c1 in 0..self.cols() {
                let a = self.entry(r1, c1);
                for r2 in 0..other.rows() {
                    for c2 in 0..other.cols() {
                        let row = r1 * other.rows() + r2;
                        let col = c1 * other.cols() + c2;
                        data[row * cols + col] = a * other.entry(r2, c2);
                    }
                }
            }
        }
        StochasticMatrix { inner: Matrix { rows, cols, data } }
    }
}

// ---------------------------------------------------------------------------
// BinaryStochasticMatrix

/// A column-deterministic 0/1 matrix: every column has exactly one unit
/// entry. Stored as the assignment vector `column -> row`, which makes the
/// (exactly satisfied) invariant structural rather than numeric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryStochasticMatrix {
    rows: usize,
    assignment: Vec<usize>,
}

impl BinaryStochasticMatrix {
    pub fn new(rows: usize, assignment: Vec<usize>) -> Result<Self, NumericsError> {
        if rows == 0 || assignment.is_empty() {
            return Err(NumericsError::EmptyMatrix);
        }
        for (col, &row) in assignment.iter().enumerate() {
            if row >= rows {
                return Err(NumericsError::NotColumnDeterministic { col, found: 0 });
            }
        }
        Ok(Self { rows, assignment })
    }

    /// Validates that `matrix` has exactly-0/1 entries with one unit entry
    /// per column, and extracts the assignment vector.
    pub fn from_matrix(matrix: &Matrix) -> Result<Self, NumericsError> {
        let mut assignment = Vec::with_capacity(matrix.cols());
        for col in 0..matrix.cols() {
            let mut hit = None;
            let mut found = 0usize;
            for row in 0..matrix.rows() {
                let value = matrix.entry(row, col);
                if value == 1.0 {
                    found += 1;
                    hit = Some(row);
                } else if value != 0.0 {
                    return Err(NumericsError::NotBinary { row, col, value });
                }
            }
            if found != 1 {
                return Err(NumericsError::NotColumnDeterministic { col, found });
            }
            assignment.push(hit.expect("found == 1 implies a hit"));
        }
        Ok(Self { rows: matrix.rows(), assignment })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.assignment.len()
    }

    /// The row that column `col` maps to.
    pub fn image(&self, col: usize) -> usize {
        self.assignment[col]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// True when every row is hit by at least one column.
    pub fn is_surjective(&self) -> bool {
        self.surjectivity_gap().is_none()
    }

    /// The first row with an empty preimage, if any.
    pub fn surjectivity_gap(&self) -> Option<usize> {
        let mut hit = vec![false; self.rows];
        for &row in &self.assignment {
            hit[row] = true;
        }
        hit.iter().position(|&h| !h)
    }

    /// Columns mapping to `row`, in ascending order.
    pub fn preimage(&self, row: usize) -> Vec<usize> {
        (0..self.cols()).filter(|&c| self.assignment[c] == row).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let rows = self.rows;
        let cols = self.cols();
        let mut data = vec![0.0; rows * cols];
        for (col, &row) in self.assignment.iter().enumerate() {
            data[row * cols + col] = 1.0;
        }
        Matrix { rows, cols, data }
    }

    pub fn to_stochastic(&self) -> StochasticMatrix {
        StochasticMatrix { inner: self.to_matrix() }
    }

    /// Kronecker product on assignment vectors; `self` indexes the slower
    /// coordinate, matching [`StochasticMatrix::kronecker`].
    pub fn kronecker(&self, other: &BinaryStochasticMatrix) -> BinaryStochasticMatrix {
        let rows = self.rows * other.rows;
        let mut assignment = Vec::with_capacity(self.cols() * other.cols());
        for &r1 in &self.assignment {
            for &r2 in &other.assignment {
                assignment.push(r1 * other.rows + r2);
            }
        }
        BinaryStochasticMatrix { rows, assignment }
    }

    /// Pushes a distribution over columns forward through the map.
    pub fn push_forward(&self, input: &Distribution) -> Result<Distribution, NumericsError> {
        if input.len() != self.cols() {
            return Err(NumericsError::ApplyMismatch { cols: self.cols(), len: input.len() });
        }
        let mut out = vec![0.0; self.rows];
        for (col, &row) in self.assignment.iter().enumerate() {
            out[row] += input.get(col);
        }
        Ok(Distribution::new_unchecked(out))
    }
}

// ---------------------------------------------------------------------------
// Divergences

/// Kullback-Leibler divergence `sum_i p_i ln(p_i / q_i)` in nats, with the
/// convention `0 * ln(0 / q) = 0`. Undefined (an error) when `q` lacks mass
/// somewhere `p` has it.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, NumericsError> {
    if p.len() != q.len() {
        return Err(NumericsError::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut sum = 0.0;
    for (index, (&p_i, &q_i)) in p.iter().zip(q.iter()).enumerate() {
        if p_i <= 0.0 {
            continue;
        }
        if q_i <= 0.0 {
            return Err(NumericsError::UndefinedDivergence { index, p_value: p_i });
        }
        sum += p_i * (p_i / q_i).ln();
    }
    Ok(sum)
}

/// Jensen-Shannon distance: `sqrt(0.5 KL(p||m) + 0.5 KL(q||m))` with
/// `m = (p + q) / 2`, in nats. Always defined; symmetric; ranges over
/// `[0, sqrt(ln 2)]`.
///
/// The two KL terms are evaluated jointly per index as
/// `p ln(2p/(p+q)) + q ln(2q/(p+q))` via `ln_1p((p-q)/(p+q))`, which keeps
/// the result accurate (~1e-16 instead of ~1e-8 after the square root) when
/// `p` and `q` agree up to floating-point noise.
pub fn jsd_distance(p: &Distribution, q: &Distribution) -> Result<f64, NumericsError> {
    if p.len() != q.len() {
        return Err(NumericsError::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut acc = 0.0;
    for (&p_i, &q_i) in p.iter().zip(q.iter()) {
        let s = p_i + q_i;
        if s <= 0.0 {
            continue;
        }
        let d = p_i - q_i;
        let p_term = if p_i > 0.0 { p_i * (d / s).ln_1p() } else { 0.0 };
        let q_term = if q_i > 0.0 { q_i * (-d / s).ln_1p() } else { 0.0 };
        // Add the two contributions in a value-canonical order so the
        // result is bit-for-bit symmetric in its arguments.
        acc += if p_i <= q_i { p_term + q_term } else { q_term + p_term };
    }
    // The divergence is nonnegative; clamp away negative rounding residue
    // before the square root.
    Ok((0.5 * acc).max(0.0).sqrt())
}

/// Normalizes each column of a nonnegative matrix to unit mass. Errors on
/// negative entries and on columns with no mass.
pub fn l1_normalize_columns(matrix: &Matrix) -> Result<StochasticMatrix, NumericsError> {
    let mut data = vec![0.0; matrix.rows() * matrix.cols()];
    for col in 0..matrix.cols() {
        let mut sum = 0.0;
        for row in 0..matrix.rows() {
            let value = matrix.entry(row, col);
            if value < 0.0 || !value.is_finite() {
                return Err(NumericsError::NegativeEntry { row, col, value });
            }
            sum += value;
        }
        if sum <= 0.0 {
            return Err(NumericsError::ZeroColumn { col });
        }
        for row in 0..matrix.rows() {
            data[row * matrix.cols() + col] = matrix.entry(row, col) / sum;
        }
    }
    Ok(StochasticMatrix {
        inner: Matrix { rows: matrix.rows(), cols: matrix.cols(), data },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(values: &[f64]) -> Distribution {
        Distribution::new(values.to_vec()).expect("valid test distribution")
    }

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual} (tolerance {tol:e})"
        );
    }

    #[test]
    fn kl_matches_hand_computed_values() {
        let v = kl_divergence(&dist(&[0.88, 0.12]), &dist(&[0.84, 0.16])).unwrap();
        assert_close(v, 0.0064157650644920475, 1e-12);
        let v = kl_divergence(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])).unwrap();
        assert_close(v, 0.14384103622589042, 1e-12);
    }

    #[test]
    fn kl_of_a_distribution_with_itself_is_zero() {
        let p = dist(&[0.3, 0.2, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_zero_numerator_terms_are_dropped() {
        let v = kl_divergence(&dist(&[0.0, 1.0]), &dist(&[0.5, 0.5])).unwrap();
        assert_close(v, std::f64::consts::LN_2, 1e-12);
    }

    #[test]
    fn kl_undefined_when_q_lacks_support() {
        let err = kl_divergence(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap_err();
        assert_eq!(err, NumericsError::UndefinedDivergence { index: 1, p_value: 0.5 });
    }

    #[test]
    fn kl_rejects_length_mismatch() {
        let err = kl_divergence(&dist(&[1.0]), &dist(&[0.5, 0.5])).unwrap_err();
        assert_eq!(err, NumericsError::LengthMismatch { left: 1, right: 2 });
    }

    #[test]
    fn jsd_matches_hand_computed_values() {
        let v = jsd_distance(&dist(&[0.88, 0.12]), &dist(&[0.8, 0.2])).unwrap();
        assert_close(v, 0.07749949674606985, 1e-12);
        let v = jsd_distance(&dist(&[0.38, 0.62]), &dist(&[0.3, 0.7])).unwrap();
        assert_close(v, 0.05976004996362527, 1e-12);
        let v = jsd_distance(&dist(&[0.76, 0.24]), &dist(&[0.2, 0.8])).unwrap();
        assert_close(v, 0.4081737268337849, 1e-12);
    }

    #[test]
    fn jsd_of_disjoint_supports_is_sqrt_ln2() {
        let v = jsd_distance(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap();
        assert_close(v, jsd_max(), 1e-15);
        assert_close(jsd_max(), 0.8325546111576977, 1e-15);
    }

    #[test]
    fn jsd_of_equal_distributions_is_exactly_zero() {
        let p = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(jsd_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn jsd_is_tiny_for_inputs_equal_up_to_rounding() {
        // 0.8*0.9 + 0.2*0.8 differs from the literal 0.88 by one ulp; the
        // distance must reflect that gap (~1e-16), not log-evaluation noise.
        let computed = dist(&[0.8f64 * 0.9 + 0.2 * 0.8, 0.8 * 0.1 + 0.2 * 0.2]);
        let literal = dist(&[0.88, 0.12]);
        let v = jsd_distance(&computed, &literal).unwrap();
        assert!(v < 1e-12, "expected ~1e-16 for near-identical inputs, got {v}");
    }

    #[test]
    fn distribution_rejects_bad_input() {
        assert_eq!(Distribution::new(vec![]).unwrap_err(), NumericsError::EmptyDistribution);
        assert!(matches!(
            Distribution::new(vec![0.5, 0.6]).unwrap_err(),
            NumericsError::NotNormalized { .. }
        ));
        assert!(matches!(
            Distribution::new(vec![-0.2, 1.2]).unwrap_err(),
            NumericsError::ProbabilityOutOfRange { index: 0, .. }
        ));
        assert!(matches!(
            Distribution::new(vec![f64::NAN, 1.0]).unwrap_err(),
            NumericsError::ProbabilityOutOfRange { .. }
        ));
    }

    #[test]
    fn distribution_accepts_tolerance_sized_noise() {
        let d = Distribution::new(vec![0.5, 0.5 + 0.5e-9]).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn point_mass_and_uniform() {
        let p = Distribution::point_mass(4, 2).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        let u = Distribution::uniform(8).unwrap();
        assert_eq!(u.get(3), 0.125);
    }

    #[test]
    fn stochastic_matrix_validates_columns() {
        let ok = StochasticMatrix::from_rows(&[vec![0.88, 0.38], vec![0.12, 0.62]]);
        assert!(ok.is_ok());
        let err =
            StochasticMatrix::from_rows(&[vec![0.9, 0.8], vec![0.2, 0.2]]).unwrap_err();
        assert!(matches!(err, NumericsError::ColumnNotNormalized { col: 0, .. }));
        let err =
            StochasticMatrix::from_rows(&[vec![1.5, 0.5], vec![-0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, NumericsError::EntryOutOfRange { row: 0, col: 0, .. }));
    }

    #[test]
    fn apply_mixes_columns() {
        let m = StochasticMatrix::from_rows(&[vec![0.88, 0.38], vec![0.12, 0.62]]).unwrap();
        let out = m.apply(&dist(&[0.2, 0.8])).unwrap();
        assert_close(out.get(0), 0.48, 1e-12);
        assert_close(out.get(1), 0.52, 1e-12);
        let err = m.apply(&dist(&[1.0])).unwrap_err();
        assert_eq!(err, NumericsError::ApplyMismatch { cols: 2, len: 1 });
    }

    #[test]
    fn kronecker_structure_of_half_column_with_two_identities() {
        // ((0.5, 0.5)^T (x) I2 (x) I2): an 8x4 matrix whose column c carries
        // 0.5 at rows c and c + 4.
        let half = StochasticMatrix::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let left = half.kronecker(&StochasticMatrix::identity(2));
        let m = left.kronecker(&StochasticMatrix::identity(2));
        assert_eq!((m.rows(), m.cols()), (8, 4));
        for col in 0..4 {
            for row in 0..8 {
                let expected = if row == col || row == col + 4 { 0.5 } else { 0.0 };
                assert_eq!(m.entry(row, col), expected, "entry ({row}, {col})");
            }
        }
    }

    #[test]
    fn kronecker_of_identities_is_identity() {
        let m = StochasticMatrix::identity(2).kronecker(&StochasticMatrix::identity(3));
        assert_eq!(m, StochasticMatrix::identity(6));
    }

    #[test]
    fn l1_normalize_spreads_uniformly_over_ones() {
        // The transpose of an all-ones row normalizes to a uniform column.
        let ones = Matrix::from_rows(&[vec![1.0; 8]]).unwrap();
        let inv = l1_normalize_columns(&ones.transpose()).unwrap();
        assert_eq!((inv.rows(), inv.cols()), (8, 1));
        for row in 0..8 {
            assert_eq!(inv.entry(row, 0), 0.125);
        }
    }

    #[test]
    fn l1_normalize_rejects_zero_and_negative_columns() {
        let zero = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            l1_normalize_columns(&zero).unwrap_err(),
            NumericsError::ZeroColumn { col: 0 }
        );
        let negative = Matrix::from_rows(&[vec![-1.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            l1_normalize_columns(&negative).unwrap_err(),
            NumericsError::NegativeEntry { row: 0, col: 0, .. }
        ));
    }

    #[test]
    fn binary_matrix_round_trips_through_dense_form() {
        let b = BinaryStochasticMatrix::new(2, vec![0, 1, 1, 0]).unwrap();
        let dense = b.to_matrix();
        assert_eq!(BinaryStochasticMatrix::from_matrix(&dense).unwrap(), b);
        assert!(b.is_surjective());
        assert_eq!(b.preimage(1), vec![1, 2]);
    }

    #[test]
    fn binary_matrix_rejects_non_deterministic_columns() {
        let half = Matrix::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        assert!(matches!(
            BinaryStochasticMatrix::from_matrix(&half).unwrap_err(),
            NumericsError::NotBinary { .. }
        ));
        let double = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(
            BinaryStochasticMatrix::from_matrix(&double).unwrap_err(),
            NumericsError::NotColumnDeterministic { col: 0, found: 2 }
        );
    }

    #[test]
    fn binary_matrix_detects_surjectivity_gap() {
        let b = BinaryStochasticMatrix::new(3, vec![0, 2, 0]).unwrap();
        assert_eq!(b.surjectivity_gap(), Some(1));
    }

    #[test]
    fn binary_kronecker_matches_dense_kronecker() {
        let a = BinaryStochasticMatrix::new(2, vec![1, 0]).unwrap();
        let b = BinaryStochasticMatrix::new(2, vec![0, 0, 1, 1]).unwrap();
        let lhs = a.kronecker(&b).to_stochastic();
        let rhs = a.to_stochastic().kronecker(&b.to_stochastic());
        assert_eq!(lhs, rhs);
    }

    // ------------------------------------------------------------------
    // property tests

    fn arb_distribution(len: usize) -> impl Strategy<Value = Distribution> {
        // Integer cuts over a fixed grid: entries are exact multiples of
        // 1e-6 and always pass validation.
        proptest::collection::vec(0u32..=1_000_000, len - 1).prop_map(move |mut cuts| {
            cuts.sort_unstable();
            let mut probs = Vec::with_capacity(len);
            let mut prev = 0u32;
            for &c in &cuts {
                probs.push((c - prev) as f64 / 1e6);
                prev = c;
            }
            probs.push((1_000_000 - prev) as f64 / 1e6);
            Distribution::new(probs).expect("grid cuts always normalize")
        })
    }

    proptest! {
        #[test]
        fn jsd_is_symmetric_bounded_and_finite(
            (p, q) in (2usize..6).prop_flat_map(|n| (arb_distribution(n), arb_distribution(n)))
        ) {
            let pq = jsd_distance(&p, &q).unwrap();
            let qp = jsd_distance(&q, &p).unwrap();
            prop_assert_eq!(pq, qp);
            prop_assert!(pq.is_finite());
            prop_assert!((0.0..=jsd_max() + 1e-12).contains(&pq));
        }

        #[test]
        fn kl_is_nonnegative_on_shared_support(
            (p, q) in (2usize..6).prop_flat_map(|n| (arb_distribution(n), arb_distribution(n)))
        ) {
            if let Ok(v) = kl_divergence(&p, &q) {
                prop_assert!(v >= -1e-12, "KL must be nonnegative, got {}", v);
            }
        }

        #[test]
        fn kronecker_preserves_column_stochasticity(
            (a, b) in (
                (1usize..4, 1usize..4).prop_flat_map(|(r, c)| arb_stochastic(r + 1, c)),
                (1usize..4, 1usize..4).prop_flat_map(|(r, c)| arb_stochastic(r + 1, c)),
            )
        ) {
            let product = a.kronecker(&b);
            prop_assert_eq!(product.rows(), a.rows() * b.rows());
            for col in 0..product.cols() {
                let sum: f64 = (0..product.rows()).map(|r| product.entry(r, col)).sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn apply_preserves_normalization(
            (m, input) in (2usize..5, 2usize..5).prop_flat_map(|(r, c)| {
                (arb_stochastic(r, c), arb_distribution(c))
            })
        ) {
            let out = m.apply(&input).unwrap();
            let sum: f64 = out.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    fn arb_stochastic(rows: usize, cols: usize) -> impl Strategy<Value = StochasticMatrix> {
        proptest::collection::vec(arb_distribution(rows), cols).prop_map(move |columns| {
            let mut data = vec![0.0; rows * cols];
            for (c, column) in columns.iter().enumerate() {
                for r in 0..rows {
                    data[r * cols + c] = column.get(r);
                }
            }
            StochasticMatrix::new(Matrix::new(rows, cols, data).unwrap()).unwrap()
        })
    }
}
