//! Dense row-major tensors and the elementwise/matrix primitives built on
//! them.
//!
//! Values are stored as `f64`. Every constructor and public operation
//! rejects non-finite data, so a `Tensor` held by a caller is always
//! finite. Shapes are lists of positive dimensions; the empty shape `[]`
//! denotes a scalar.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_finite(data: &[f64], what: &str) -> Result<()> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite value in {what}")));
    }
    Ok(())
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "zero-sized dimension in shape {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} implies {numel} elements but {} were given",
                data.len()
            )));
        }
        check_finite(&data, "tensor data")?;
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; numel],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let numel: usize = shape.iter().product();
        Tensor::new(shape, vec![value; numel])
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Tensor::new(vec![], vec![value])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dimension("cannot build a tensor from zero rows".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("rows differ in length".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to raw values. Callers that write through this must
    /// keep the data finite; optimizer updates re-validate afterwards.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn scalar_value(&self) -> Result<f64> {
        if !self.is_scalar() {
            return Err(Error::Dimension(format!(
                "expected scalar, found shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    /// Rows and columns of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::Dimension(format!(
                "expected a matrix, found shape {other:?}"
            ))),
        }
    }

    pub fn get2(&self, r: usize, c: usize) -> f64 {
        let cols = self.shape[1];
        self.data[r * cols + c]
    }

    pub fn set2(&mut self, r: usize, c: usize, v: f64) {
        let cols = self.shape[1];
        self.data[r * cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Tensor> {
        Tensor::new(shape, self.data.clone())
    }
}

/// Standard matrix product with `f64` accumulation.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2()?;
    let (k2, n) = b.dims2()?;
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: {:?} x {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[kk * n..(kk + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    check_finite(&out, "matmul result")?;
    Ok(Tensor {
        shape: vec![m, n],
        data: out,
    })
}

pub fn transpose(a: &Tensor) -> Result<Tensor> {
    let (m, n) = a.dims2()?;
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data[i * n + j];
        }
    }
    Ok(Tensor {
        shape: vec![n, m],
        data: out,
    })
}

fn zip_op(a: &Tensor, b: &Tensor, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape != b.shape {
        return Err(Error::Dimension(format!(
            "{what} requires equal shapes: {:?} vs {:?}",
            a.shape, b.shape
        )));
    }
    let data: Vec<f64> = a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect();
    check_finite(&data, what)?;
    Ok(Tensor {
        shape: a.shape.clone(),
        data,
    })
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    zip_op(a, b, "add", |x, y| x + y)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    zip_op(a, b, "sub", |x, y| x - y)
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    zip_op(a, b, "mul", |x, y| x * y)
}

fn map_op(a: &Tensor, what: &str, f: impl Fn(f64) -> f64) -> Result<Tensor> {
    let data: Vec<f64> = a.data.iter().map(|&x| f(x)).collect();
    check_finite(&data, what)?;
    Ok(Tensor {
        shape: a.shape.clone(),
        data,
    })
}

pub fn tanh(a: &Tensor) -> Result<Tensor> {
    map_op(a, "tanh", f64::tanh)
}

pub fn sigmoid(a: &Tensor) -> Result<Tensor> {
    map_op(a, "sigmoid", sigmoid_scalar)
}

pub fn log_sigmoid(a: &Tensor) -> Result<Tensor> {
    map_op(a, "log_sigmoid", log_sigmoid_scalar)
}

pub fn scale(a: &Tensor, c: f64) -> Result<Tensor> {
    if !c.is_finite() {
        return Err(Error::Numeric("non-finite scale factor".into()));
    }
    map_op(a, "scale", |x| x * c)
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log σ(x) = −softplus(−x), with the softplus branch split at zero so
/// large-magnitude inputs neither overflow nor collapse to −inf.
pub fn log_sigmoid_scalar(x: f64) -> f64 {
    x.min(0.0) - (-x.abs()).exp().ln_1p()
}

/// Concatenate along `axis`. All parts must agree on every other dimension.
pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::Argument("concat of zero tensors".into()));
    }
    let rank = parts[0].rank();
    if axis >= rank {
        return Err(Error::Dimension(format!(
            "concat axis {axis} out of range for rank {rank}"
        )));
    }
    let mut out_shape = parts[0].shape.clone();
    out_shape[axis] = 0;
    for p in parts {
        if p.rank() != rank {
            return Err(Error::Dimension("concat parts differ in rank".into()));
        }
        for (d, (&a, &b)) in p.shape.iter().zip(&parts[0].shape).enumerate() {
            if d != axis && a != b {
                return Err(Error::Dimension(format!(
                    "concat parts disagree on non-concat dimension {d}: {:?} vs {:?}",
                    p.shape, parts[0].shape
                )));
            }
        }
        out_shape[axis] += p.shape[axis];
    }
    let inner: usize = parts[0].shape[axis + 1..].iter().product();
    let outer: usize = parts[0].shape[..axis].iter().product();
    let mut data = Vec::with_capacity(out_shape.iter().product());
    for o in 0..outer {
        for p in parts {
            let chunk = p.shape[axis] * inner;
            data.extend_from_slice(&p.data[o * chunk..(o + 1) * chunk]);
        }
    }
    Tensor::new(out_shape, data)
}

/// Sub-tensor covering `[start, end)` along `axis`.
pub fn slice(a: &Tensor, axis: usize, start: usize, end: usize) -> Result<Tensor> {
    if axis >= a.rank() {
        return Err(Error::Dimension(format!(
            "slice axis {axis} out of range for rank {}",
            a.rank()
        )));
    }
    if start >= end || end > a.shape[axis] {
        return Err(Error::Argument(format!(
            "slice range {start}..{end} invalid for dimension {}",
            a.shape[axis]
        )));
    }
    let inner: usize = a.shape[axis + 1..].iter().product();
    let outer: usize = a.shape[..axis].iter().product();
    let stride = a.shape[axis] * inner;
    let mut out_shape = a.shape.clone();
    out_shape[axis] = end - start;
    let mut data = Vec::with_capacity(out_shape.iter().product());
    for o in 0..outer {
        let base = o * stride;
        data.extend_from_slice(&a.data[base + start * inner..base + end * inner]);
    }
    Tensor::new(out_shape, data)
}

pub fn dot(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.numel() != b.numel() {
        return Err(Error::Dimension(format!(
            "dot requires equal element counts: {:?} vs {:?}",
            a.shape, b.shape
        )));
    }
    let v = a.data.iter().zip(&b.data).map(|(&x, &y)| x * y).sum();
    if !f64::is_finite(v) {
        return Err(Error::Numeric("non-finite dot product".into()));
    }
    Ok(v)
}

pub fn norm(a: &Tensor) -> f64 {
    a.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; either vector being zero yields 0.
pub fn cosine(a: &Tensor, b: &Tensor) -> Result<f64> {
    let d = dot(a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(d / (na * nb))
}

pub fn cosine_slices(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: f64 = a.iter().map(|&x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    d / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_identity_preserves() {
        let eye = t2(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let m = t2(&[&[2.0, -1.0, 4.0], &[0.5, 3.0, 7.0], &[9.0, 8.0, -2.0]]);
        assert_eq!(matmul(&eye, &m).unwrap(), m);
    }

    #[test]
    fn matmul_hand_example() {
        let a = t2(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = t2(&[&[1.0], &[1.0]]);
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[3.0, 7.0]);
        assert_eq!(c.shape(), &[2, 1]);
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::zeros(vec![2, 3]);
        let b = Tensor::zeros(vec![2, 2]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2, 2]"), "{msg}");
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(Tensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::new(vec![1], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn elementwise_basics() {
        let z = Tensor::scalar(0.0).unwrap();
        assert_eq!(tanh(&z).unwrap().data()[0], 0.0);
        assert_eq!(sigmoid(&z).unwrap().data()[0], 0.5);
        let a = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(add(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn log_sigmoid_is_stable_for_large_negative_inputs() {
        let v = log_sigmoid_scalar(-50.0);
        assert!(v.is_finite());
        assert!((v - (-50.0)).abs() < 1e-9, "{v}");
        // And for large positive inputs it approaches 0 from below.
        let p = log_sigmoid_scalar(50.0);
        assert!(p < 0.0 && p > -1e-20);
    }

    #[test]
    fn concat_examples() {
        let a = Tensor::new(vec![300], vec![0.25; 300]).unwrap();
        let out = concat(&[&a, &a, &a], 0).unwrap();
        assert_eq!(out.shape(), &[900]);

        let x = Tensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(concat(&[&x], 0).unwrap(), x);

        let a = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![3], vec![3.0, 4.0, 5.0]).unwrap();
        let c = concat(&[&a, &b], 0).unwrap();
        assert_eq!(c.data(), &[1.0, 2.0, 3.0, 4.0, 5.0]);

        let m = t2(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let n = t2(&[&[5.0], &[6.0]]);
        let wide = concat(&[&m, &n], 1).unwrap();
        assert_eq!(wide.shape(), &[2, 3]);
        assert_eq!(wide.data(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let tall = concat(&[&m, &m], 0).unwrap();
        assert_eq!(tall.shape(), &[4, 2]);
        assert!(concat(&[&m, &n], 0).is_err());
    }

    #[test]
    fn slice_rows_and_cols() {
        let m = t2(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let r = slice(&m, 0, 1, 2).unwrap();
        assert_eq!(r.data(), &[4.0, 5.0, 6.0]);
        let c = slice(&m, 1, 1, 3).unwrap();
        assert_eq!(c.data(), &[2.0, 3.0, 5.0, 6.0]);
        assert!(slice(&m, 0, 2, 2).is_err());
    }

    #[test]
    fn cosine_conventions() {
        let a = Tensor::new(vec![2], vec![1.0, 0.0]).unwrap();
        let b = Tensor::new(vec![2], vec![0.0, 1.0]).unwrap();
        let z = Tensor::zeros(vec![2]);
        assert_eq!(cosine(&a, &a).unwrap(), 1.0);
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
        assert_eq!(cosine(&a, &z).unwrap(), 0.0);
    }
}
