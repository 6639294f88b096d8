use super::GanError;
use crate::linalg::Matrix;

/// Batch of feature maps, laid out `(n, c, h, w)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(dims: (usize, usize, usize, usize), data: Vec<f64>) -> Result<Self, GanError> {
        let (n, c, h, w) = dims;
        if n * c * h * w != data.len() {
            return Err(GanError::ShapeMismatch(format!(
                "{} values for dims {:?}",
                data.len(),
                dims
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(GanError::ShapeMismatch("non-finite tensor entries".into()));
        }
        Ok(Self { n, c, h, w, data })
    }

    pub fn zeros(dims: (usize, usize, usize, usize)) -> Self {
        let (n, c, h, w) = dims;
        Self {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    /// `n` flat vectors viewed as `(n, len, 1, 1)`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GanError> {
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(GanError::ShapeMismatch("ragged rows".into()));
        }
        Self::new((rows.len(), len, 1, 1), rows.concat())
    }

    /// Stacks single-channel matrices into `(n, 1, rows, cols)`.
    pub fn from_matrices(ms: &[Matrix]) -> Result<Self, GanError> {
        let (r, c) = ms.first().map_or((0, 0), |m| (m.rows(), m.cols()));
        if ms.iter().any(|m| m.rows() != r || m.cols() != c) {
            return Err(GanError::ShapeMismatch("matrices differ in shape".into()));
        }
        let data = ms.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
        Self::new((ms.len(), 1, r, c), data)
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn sample_len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let len = self.sample_len();
        &self.data[i * len..(i + 1) * len]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [f64] {
        let len = self.sample_len();
        &mut self.data[i * len..(i + 1) * len]
    }

    /// Single-channel sample `i` as an `h × w` matrix.
    pub fn matrix(&self, i: usize) -> Matrix {
        assert_eq!(self.c, 1, "matrix view needs one channel");
        Matrix::from_vec(self.h, self.w, self.sample(i).to_vec()).expect("finite tensor")
    }

    /// Samples picked by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let data = idx.iter().flat_map(|&i| self.sample(i).iter().copied()).collect();
        Self {
            n: idx.len(),
            c: self.c,
            h: self.h,
            w: self.w,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
