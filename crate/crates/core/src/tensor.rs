//! Dense component tables of coefficient functions.

use alloc::vec::Vec;

use crate::coeff::{is_zero, Expr, ZeroVerdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Expr>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: alloc::vec![Expr::zero(); n],
        }
    }

    /// Fills every component from `f(index)`.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let mut t = Tensor::zeros(shape);
        let mut idx = alloc::vec![0usize; shape.len()];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (i, &n) in idx.iter().zip(&self.shape) {
            debug_assert!(*i < n);
            off = off * n + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Expr) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[Expr] {
        &self.data
    }

    /// All multi-indices in row-major order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = alloc::vec![0usize; self.shape.len()];
        for _ in 0..self.data.len() {
            out.push(idx.clone());
            for d in (0..self.shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < self.shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape);
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape, other.shape);
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, k: &Expr) -> Tensor {
        self.map(|e| e.mul(k))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    /// Components that are not exactly zero, with their indices.
    pub fn nonzero(&self) -> Vec<(Vec<usize>, Expr)> {
        self.indices()
            .into_iter()
            .zip(&self.data)
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, e)| (i, e.clone()))
            .collect()
    }

    /// Weakest zero verdict over all components, together with the index of
    /// the first component that is not zero (if any).
    pub fn zero_verdict(&self) -> (ZeroVerdict, Option<Vec<usize>>) {
        let mut worst = ZeroVerdict::ExactZero {
            caveats: Vec::new(),
        };
        for (idx, e) in self.indices().into_iter().zip(&self.data) {
            if e.is_zero() {
                continue;
            }
            let v = is_zero(e).unwrap_or(ZeroVerdict::NonZero {
                witness: Default::default(),
                value: f64::NAN,
            });
            match v {
                ZeroVerdict::NonZero { .. } => return (v, Some(idx)),
                ZeroVerdict::NumericZero { .. } if worst.is_exact() => worst = v,
                _ => {}
            }
        }
        (worst, None)
    }
}
