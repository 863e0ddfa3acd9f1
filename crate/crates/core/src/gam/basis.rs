//! B-spline bases with difference penalties.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// B-spline basis on `[lo, hi]`; the knot vector extends `degree` intervals beyond each end
/// with the boundary spacing repeated. Outside `[lo, hi]` the basis is continued linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    knots: Vec<f64>,
    degree: usize,
    lo: f64,
    hi: f64,
}

impl BSplineBasis {
    /// `dim` functions with equally spaced knots. Degree is cubic unless `dim < 4`.
    pub fn uniform(lo: f64, hi: f64, dim: usize) -> Self {
        assert!(dim >= 3 && hi > lo, "basis needs dim ≥ 3 and a nonempty range");
        let degree = 3.min(dim - 1);
        let segments = dim - degree;
        let h = (hi - lo) / segments as f64;
        let interior = (1..segments).map(|i| lo + h * i as f64).collect::<Vec<_>>();
        Self::with_interior(lo, hi, &interior, degree)
    }

    /// Cubic basis with the given interior knots (strictly inside `(lo, hi)`).
    pub fn with_interior(lo: f64, hi: f64, interior: &[f64], degree: usize) -> Self {
        let mut inner = vec![lo];
        inner.extend(interior.iter().copied().filter(|k| *k > lo && *k < hi));
        inner.push(hi);
        let h_lo = inner[1] - inner[0];
        let h_hi = inner[inner.len() - 1] - inner[inner.len() - 2];
        let mut knots: Vec<f64> = (1..=degree).rev().map(|i| lo - h_lo * i as f64).collect();
        knots.extend(&inner);
        knots.extend((1..=degree).map(|i| hi + h_hi * i as f64));
        Self {
            knots,
            degree,
            lo,
            hi,
        }
    }

    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot-interval index containing `x ∈ [lo, hi]`.
    fn span(&self, x: f64) -> usize {
        let first = self.degree;
        let last = self.knots.len() - self.degree - 2;
        let mut j = first;
        while j < last && x >= self.knots[j + 1] {
            j += 1;
        }
        j
    }

    /// Cox–de Boor: values of all degree-`p` functions at `x` (x inside the domain).
    fn values_at_degree(&self, x: f64, p: usize) -> Vec<f64> {
        let t = &self.knots;
        let j = self.span(x);
        let mut b = vec![0.0; t.len() - 1];
        b[j] = 1.0;
        for k in 1..=p {
            let mut next = vec![0.0; t.len() - 1 - k];
            for i in 0..next.len() {
                let mut v = 0.0;
                let d1 = t[i + k] - t[i];
                if d1 > 0.0 && b[i] != 0.0 {
                    v += (x - t[i]) / d1 * b[i];
                }
                let d2 = t[i + k + 1] - t[i + 1];
                if d2 > 0.0 && b[i + 1] != 0.0 {
                    v += (t[i + k + 1] - x) / d2 * b[i + 1];
                }
                next[i] = v;
            }
            b = next;
        }
        b
    }

    fn derivative_inside(&self, x: f64) -> Vec<f64> {
        let p = self.degree;
        let t = &self.knots;
        let lower = self.values_at_degree(x, p - 1);
        (0..self.dim())
            .map(|i| {
                let mut v = 0.0;
                let d1 = t[i + p] - t[i];
                if d1 > 0.0 {
                    v += p as f64 / d1 * lower[i];
                }
                let d2 = t[i + p + 1] - t[i + 1];
                if d2 > 0.0 {
                    v -= p as f64 / d2 * lower[i + 1];
                }
                v
            })
            .collect()
    }

    /// Basis values at `x`, with linear continuation outside `[lo, hi]`.
    /// The flag reports whether `x` was outside the range.
    pub fn eval(&self, x: f64) -> (Vec<f64>, bool) {
        if x < self.lo || x > self.hi {
            let edge = if x < self.lo { self.lo } else { self.hi };
            let base = self.values_at_degree(edge, self.degree);
            let slope = self.derivative_inside(edge);
            let dx = x - edge;
            let vals = base.iter().zip(&slope).map(|(b, s)| b + s * dx).collect();
            (vals, true)
        } else {
            (self.values_at_degree(x, self.degree), false)
        }
    }
}

/// `DᵀD` for the `order`-th difference operator on `dim` coefficients.
pub fn difference_penalty(dim: usize, order: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(dim, dim);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, dim, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d.transpose() * d
}

/// Row-wise Kronecker product of two basis rows.
pub fn tensor_row(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Null-space basis `Z` (p × (p−1)) of the constraint `cᵀβ = 0`, from a Householder
/// reflection of `c`.
pub fn sum_to_zero_basis(c: &[f64]) -> DMatrix<f64> {
    let p = c.len();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = c.to_vec();
    let sign = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign * norm;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    DMatrix::from_fn(p, p - 1, |i, j| {
        let col = j + 1;
        let id = if i == col { 1.0 } else { 0.0 };
        if vv > 0.0 {
            id - 2.0 * v[i] * v[col] / vv
        } else {
            id
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let b = BSplineBasis::uniform(-2.0, 5.0, 8);
        assert_eq!(b.dim(), 8);
        for k in 0..=70 {
            let x = -2.0 + 0.1 * k as f64;
            let (v, out) = b.eval(x);
            assert!(!out);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12, "x={x}");
            assert!(v.iter().all(|w| *w >= -1e-15));
        }
    }

    #[test]
    fn linear_continuation_outside() {
        let b = BSplineBasis::uniform(0.0, 1.0, 6);
        let coef: Vec<f64> = (0..6).map(|i| (i as f64).powi(2)).collect();
        let f = |x: f64| -> f64 { b.eval(x).0.iter().zip(&coef).map(|(v, c)| v * c).sum() };
        let (_, out) = b.eval(1.5);
        assert!(out);
        let slope = (f(1.0) - f(1.0 - 1e-6)) / 1e-6;
        assert!((f(1.5) - (f(1.0) + 0.5 * slope)).abs() < 1e-4);
        let second = f(2.0) - 2.0 * f(1.5) + f(1.0);
        assert!(second.abs() < 1e-9);
    }

    #[test]
    fn second_difference_annihilates_linear() {
        let p = difference_penalty(7, 2);
        let lin: Vec<f64> = (0..7).map(|i| 3.0 - 0.5 * i as f64).collect();
        let v = nalgebra::DVector::from_vec(lin);
        assert!((v.transpose() * &p * &v)[(0, 0)].abs() < 1e-12);
        assert_eq!(p.nrows(), 7);
    }

    #[test]
    fn householder_null_space() {
        let c = [2.0, -1.0, 0.5, 3.0];
        let z = sum_to_zero_basis(&c);
        assert_eq!(z.shape(), (4, 3));
        let cv = nalgebra::DVector::from_row_slice(&c);
        assert!((cv.transpose() * &z).norm() < 1e-12);
        let ztz = z.transpose() * &z;
        assert!((ztz - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn nonuniform_interior_knots() {
        let b = BSplineBasis::with_interior(0.0, 100.0, &[30.0, 82.0, 150.0], 3);
        assert_eq!(b.dim(), 6);
        let (v, _) = b.eval(100.0);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
