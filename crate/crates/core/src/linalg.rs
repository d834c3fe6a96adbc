use serde::Serialize;

/// Square row-major matrix. Only used for small verification-sized objects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        (0..n).for_each(|i| m.data[i * n + i] = 1.0);
        m
    }

    pub fn filled(n: usize, value: f64) -> Self {
        DenseMatrix { n, data: vec![value; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n * other.n;
        let mut out = Self::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                let s = self.get(i, j);
                if s == 0.0 {
                    continue;
                }
                for p in 0..other.n {
                    for q in 0..other.n {
                        out.data[(i * other.n + p) * n + j * other.n + q] = s * other.get(p, q);
                    }
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, scale: f64, other: &DenseMatrix) {
        assert_eq!(self.n, other.n);
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += scale * b);
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let s = self.get(i, k);
                if s == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += s * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        (0..self.n).map(|i| y[i] * (0..self.n).map(|j| self.get(i, j) * y[j]).sum::<f64>()).sum()
    }
}
