use num_complex::Complex;
use num_traits::{One, Zero};

use super::cmat::{CMat, CVec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Partial-pivoting LU factorization `P M = L U` packed into one matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: CMat<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Real> Lu<T> {
    /// Fails with `Singular` when a pivot falls below `n·ε·‖M‖_max`.
    pub fn new(m: &CMat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let floor = T::epsilon() * T::from_usize(n.max(1)).unwrap() * m.norm_max();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= floor || best == T::zero() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn pivots(&self) -> CVec<T> {
        self.lu.diag()
    }

    pub fn swaps(&self) -> usize {
        self.swaps
    }

    pub fn det(&self) -> Complex<T> {
        let d = self.pivots().into_iter().fold(Complex::one(), |a, b| a * b);
        if self.swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn solve_vec(&self, b: &[Complex<T>]) -> CVec<T> {
        let n = self.lu.rows();
        let mut x: CVec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    /// Solves `M X = B`.
    pub fn solve(&self, b: &CMat<T>) -> CMat<T> {
        let cols: Vec<CVec<T>> = (0..b.cols()).map(|j| self.solve_vec(&b.col(j))).collect();
        CMat::from_fn(b.rows(), b.cols(), |i, j| cols[j][i])
    }

    pub fn inverse(&self) -> CMat<T> {
        self.solve(&CMat::identity(self.lu.rows()))
    }
}

impl<T: Real> CMat<T> {
    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::new(self)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(self.lu()?.inverse())
    }

    /// `self⁻¹ · b`.
    pub fn solve(&self, b: &Self) -> Result<Self> {
        Ok(self.lu()?.solve(b))
    }

    /// `b · self⁻¹`, via the transposed system.
    pub fn solve_right(&self, b: &Self) -> Result<Self> {
        Ok(self.transpose().lu()?.solve(&b.transpose()).transpose())
    }

    pub fn det(&self) -> Result<Complex<T>> {
        match self.lu() {
            Ok(lu) => Ok(lu.det()),
            Err(Error::Singular) => Ok(Complex::zero()),
            Err(e) => Err(e),
        }
    }
}
