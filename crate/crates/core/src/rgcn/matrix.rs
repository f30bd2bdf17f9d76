use rand::Rng;

/// Row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows.checked_mul(cols)?).then_some(DenseMatrix { rows, cols, data })
    }

    /// Uniform samples in `[-bound, bound]`.
    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        DenseMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `out += scale * x`.
pub(crate) fn axpy(out: &mut [f64], scale: f64, x: &[f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += scale * v;
    }
}

/// `out += x · m` for a row vector `x` of length `m.rows()`.
pub(crate) fn add_row_times(out: &mut [f64], x: &[f64], m: &DenseMatrix) {
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            axpy(out, xk, m.row(k));
        }
    }
}

/// `out += y · mᵀ` for a row vector `y` of length `m.cols()`.
pub(crate) fn add_row_times_transpose(out: &mut [f64], y: &[f64], m: &DenseMatrix) {
    for (k, o) in out.iter_mut().enumerate() {
        *o += m.row(k).iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `g += xᵀ y` (outer product accumulation).
pub(crate) fn add_outer(g: &mut DenseMatrix, x: &[f64], y: &[f64]) {
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            axpy(g.row_mut(k), xk, y);
        }
    }
}
