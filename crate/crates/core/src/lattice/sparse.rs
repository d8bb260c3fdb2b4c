//! Compressed sparse row matrices over complex doubles, sized for lattice
//! operators (a handful of nonzeros per row).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square sparse matrix in CSR form.
#[derive(Clone, Debug)]
pub struct DiscreteOp {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl DiscreteOp {
    pub fn zeros(n: usize) -> Self {
        DiscreteOp {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        DiscreteOp {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        DiscreteOp {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: values.to_vec(),
        }
    }

    /// Build from per-row (column, value) lists; duplicates are merged.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if Some(c) == last {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        let mut out = DiscreteOp {
            n,
            indptr,
            indices,
            data,
        };
        out.prune(1e-300);
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    fn prune(&mut self, tol: f64) {
        let mut indptr = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        indptr.push(0);
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k].norm() > tol {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![ZERO; self.n];
        for r in 0..self.n {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * v[self.indices[k]];
            }
            out[r] = acc;
        }
        out
    }

    /// CSR-by-CSR product via a sparse accumulator row.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices: Vec<usize> = Vec::new();
        let mut data: Vec<C64> = Vec::new();
        indptr.push(0);
        let mut marker = vec![usize::MAX; n];
        let mut values = vec![ZERO; n];
        let mut cols: Vec<usize> = Vec::new();
        for r in 0..n {
            cols.clear();
            for ka in self.indptr[r]..self.indptr[r + 1] {
                let a = self.data[ka];
                let mid = self.indices[ka];
                for kb in other.indptr[mid]..other.indptr[mid + 1] {
                    let c = other.indices[kb];
                    if marker[c] != r {
                        marker[c] = r;
                        values[c] = ZERO;
                        cols.push(c);
                    }
                    values[c] += a * other.data[kb];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if values[c].norm() > 1e-300 {
                    indices.push(c);
                    data.push(values[c]);
                }
            }
            indptr.push(indices.len());
        }
        DiscreteOp {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut rows: Vec<Vec<(usize, C64)>> = Vec::with_capacity(n);
        for r in 0..n {
            let mut row = Vec::with_capacity(
                self.indptr[r + 1] - self.indptr[r] + other.indptr[r + 1] - other.indptr[r],
            );
            for k in self.indptr[r]..self.indptr[r + 1] {
                row.push((self.indices[k], self.data[k]));
            }
            for k in other.indptr[r]..other.indptr[r + 1] {
                row.push((other.indices[k], other.data[k]));
            }
            rows.push(row);
        }
        DiscreteOp::from_rows(n, rows)
    }

    pub fn scaled(&self, k: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= k;
        }
        out
    }

    pub fn add_diagonal(&self, shift: C64) -> Self {
        let diag = DiscreteOp::diagonal(&vec![shift; self.n]);
        self.add(&diag)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for r in 0..n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                rows[self.indices[k]].push((r, self.data[k].conj()));
            }
        }
        DiscreteOp::from_rows(n, rows)
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).scaled(C64::new(0.5, 0.0))
    }

    /// Largest entry of `A - A†`.
    pub fn hermitian_defect(&self) -> f64 {
        let diff = self.add(&self.adjoint().scaled(C64::new(-1.0, 0.0)));
        diff.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `A + A†` (skewness defect).
    pub fn skew_defect(&self) -> f64 {
        let sum = self.add(&self.adjoint());
        sum.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::<C64>::zeros((self.n, self.n));
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[[r, self.indices[k]]] += self.data[k];
            }
        }
        out
    }

    /// Dense real part; errors when any imaginary entry survives.
    pub fn to_dense_real(&self) -> Result<Array2<f64>> {
        let mut out = Array2::<f64>::zeros((self.n, self.n));
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = self.data[k];
                if v.im.abs() > 1e-9 {
                    return Err(CoreError::SolverBreakdown(format!(
                        "matrix has imaginary entry {v} where a real one was expected"
                    )));
                }
                out[[r, self.indices[k]]] += v.re;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
