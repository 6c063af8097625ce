//! Dense row-major linear algebra, elementwise activations, and the
//! deterministic random-number generator shared by every stochastic
//! component (weight init, data synthesis, shuffling).
//!
//! Everything is plain 64-bit arithmetic with no BLAS or SIMD so that
//! results are reproducible bit-for-bit across platforms.

use crate::error::{Error, Result};

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "matrix data length {} does not equal {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Convenience constructor for tests and small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// W·x for an x of length `cols`.
    pub fn matvec(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            self.cols,
            x.len(),
            "matvec: {}x{} matrix against vector of length {}",
            self.rows,
            self.cols,
            x.len()
        );
        let mut out = vec![0.0; self.rows];
        for (r, out_r) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x.as_slice()) {
                acc += w * xv;
            }
            *out_r = acc;
        }
        DenseVector::from_vec(out)
    }

    /// Wᵀ·v for a v of length `rows`. Used by the backward passes.
    pub fn matvec_transpose(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(
            self.rows,
            v.len(),
            "matvec_transpose: {}x{} matrix against vector of length {}",
            self.rows,
            self.cols,
            v.len()
        );
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let vr = v.as_slice()[r];
            for (o, w) in out.iter_mut().zip(row) {
                *o += vr * w;
            }
        }
        DenseVector::from_vec(out)
    }

    /// Accumulates the outer product u·vᵀ into self (gradient accumulation).
    pub fn add_outer(&mut self, u: &DenseVector, v: &DenseVector) {
        assert_eq!(self.rows, u.len(), "add_outer: row mismatch");
        assert_eq!(self.cols, v.len(), "add_outer: col mismatch");
        for r in 0..self.rows {
            let ur = u.as_slice()[r];
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, vv) in row.iter_mut().zip(v.as_slice()) {
                *w += ur * vv;
            }
        }
    }
}

/// Dense vector of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(len: usize) -> Self {
        DenseVector { data: vec![0.0; len] }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        DenseVector { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> DenseVector {
        DenseVector {
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), other.len(), "hadamard: length mismatch");
        DenseVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.len(), other.len(), "add: length mismatch");
        DenseVector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &DenseVector) {
        assert_eq!(self.len(), other.len(), "add_assign: length mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&self, s: f64) -> DenseVector {
        self.map(|x| x * s)
    }

    pub fn concat(&self, other: &DenseVector) -> DenseVector {
        let mut data = Vec::with_capacity(self.len() + other.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        DenseVector { data }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// Gate pre-activation W·x + U·h + b with dimension checks that name the
/// offending operand.
pub fn affine(
    w: &DenseMatrix,
    x: &DenseVector,
    u: &DenseMatrix,
    h: &DenseVector,
    b: &DenseVector,
) -> Result<DenseVector> {
    if w.cols() != x.len() {
        return Err(Error::dims(format!(
            "affine: W is {}x{} but x has length {}",
            w.rows(),
            w.cols(),
            x.len()
        )));
    }
    if u.rows() != w.rows() || u.cols() != h.len() {
        return Err(Error::dims(format!(
            "affine: U is {}x{} but W has {} rows and h has length {}",
            u.rows(),
            u.cols(),
            w.rows(),
            h.len()
        )));
    }
    if b.len() != w.rows() {
        return Err(Error::dims(format!(
            "affine: b has length {} but W has {} rows",
            b.len(),
            w.rows()
        )));
    }
    let wx = w.matvec(x);
    let uh = u.matvec(h);
    let mut out = wx;
    for ((o, uv), bv) in out
        .as_mut_slice()
        .iter_mut()
        .zip(uh.as_slice())
        .zip(b.as_slice())
    {
        *o = *o + uv + bv;
    }
    Ok(out)
}

/// W·x + b, the classifier-head form.
pub fn linear(w: &DenseMatrix, x: &DenseVector, b: &DenseVector) -> Result<DenseVector> {
    if w.cols() != x.len() {
        return Err(Error::dims(format!(
            "linear: W is {}x{} but x has length {}",
            w.rows(),
            w.cols(),
            x.len()
        )));
    }
    if b.len() != w.rows() {
        return Err(Error::dims(format!(
            "linear: b has length {} but W has {} rows",
            b.len(),
            w.rows()
        )));
    }
    let mut out = w.matvec(x);
    for (o, bv) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *o += bv;
    }
    Ok(out)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Elementwise logistic sigmoid.
pub fn sigmoid(v: &DenseVector) -> DenseVector {
    v.map(sigmoid_scalar)
}

/// Elementwise hyperbolic tangent.
pub fn tanh_act(v: &DenseVector) -> DenseVector {
    v.map(f64::tanh)
}

/// splitmix64 generator. Small state, full 64-bit period, and trivially
/// portable, which makes every downstream artifact reproducible from a
/// single seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform strictly inside (0, 1); safe as a log argument.
    fn unit_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Standard normal via Box–Muller (cosine branch). Consumes exactly two
    /// generator outputs per sample so the stream layout stays fixed.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.unit_open();
        let u2 = self.unit_open();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below: empty range");
        (self.next_u64() % n as u64) as usize
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}
