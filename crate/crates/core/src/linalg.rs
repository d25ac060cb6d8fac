//! Dense kernels with a fixed accumulation order.
//!
//! Every output element is accumulated over the shared dimension in
//! ascending index order, independent of the number of rows. Appending rows
//! to an operand therefore never changes the values of the existing rows,
//! which the augmented-graph no-op check relies on.

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result, Scalar};

/// `a · b`
pub fn matmul<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<Array2<T>> {
    let (n, k) = a.dim();
    let (k2, m) = b.dim();
    if k != k2 {
        return Err(Error::Shape(format!("matmul {n}x{k} by {k2}x{m}")));
    }
    let mut out = Array2::<T>::zeros((n, m));
    for i in 0..n {
        let mut row = out.row_mut(i);
        for p in 0..k {
            let av = a[[i, p]];
            if av == T::zero() {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(b.row(p).iter()) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// `aᵀ · b`, accumulated over rows of `a` and `b` in order.
pub fn matmul_tn<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<Array2<T>> {
    let (n, k) = a.dim();
    let (n2, m) = b.dim();
    if n != n2 {
        return Err(Error::Shape(format!("matmul_tn {n}x{k}ᵀ by {n2}x{m}")));
    }
    let mut out = Array2::<T>::zeros((k, m));
    for i in 0..n {
        let brow = b.row(i);
        for p in 0..k {
            let av = a[[i, p]];
            if av == T::zero() {
                continue;
            }
            for (o, &bv) in out.row_mut(p).iter_mut().zip(brow.iter()) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ`
pub fn matmul_nt<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<Array2<T>> {
    let (n, k) = a.dim();
    let (m, k2) = b.dim();
    if k != k2 {
        return Err(Error::Shape(format!("matmul_nt {n}x{k} by {m}x{k2}ᵀ")));
    }
    let mut out = Array2::<T>::zeros((n, m));
    for i in 0..n {
        let arow = a.row(i);
        for j in 0..m {
            let mut acc = T::zero();
            for (&x, &y) in arow.iter().zip(b.row(j).iter()) {
                acc += x * y;
            }
            out[[i, j]] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn products_agree_with_ndarray() {
        let a = array![[1.0, 2.0, 0.0], [-1.0, 0.5, 3.0]];
        let b = array![[2.0, 1.0], [0.0, -1.0], [4.0, 0.25]];
        assert_eq!(matmul(a.view(), b.view()).unwrap(), a.dot(&b));
        assert_eq!(matmul_tn(b.view(), b.view()).unwrap(), b.t().dot(&b));
        assert_eq!(matmul_nt(a.view(), a.view()).unwrap(), a.dot(&a.t()));
    }

    #[test]
    fn appending_rows_keeps_existing_rows_bitwise() {
        let a = array![[0.1, 0.7], [0.3, 0.9]];
        let b = array![[1.0 / 3.0, 0.2], [0.6, 1.0 / 7.0]];
        let small = matmul(a.view(), b.view()).unwrap();
        let tall = ndarray::concatenate![ndarray::Axis(0), a, array![[5.0, 6.0]]];
        let big = matmul(tall.view(), b.view()).unwrap();
        assert_eq!(small.row(0), big.row(0));
        assert_eq!(small.row(1), big.row(1));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = array![[1.0, 2.0]];
        assert!(matches!(matmul(a.view(), a.view()), Err(Error::Shape(_))));
    }
}
