//! Orthonormal DCT-II along the time axis.
//!
//! A `K×L` pose sequence (one row per pose parameter, one column per frame)
//! maps to a `K×C` coefficient matrix by projecting every row onto the first
//! `C` DCT-II basis vectors. With `C = L` the transform is orthogonal, so
//! decoding is the exact inverse and norms are preserved.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Mat;

/// `C×L` matrix whose rows are orthonormal DCT-II basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DctBasis {
    length: usize,
    coeffs: usize,
    basis: Mat,
}

impl DctBasis {
    pub fn new(length: usize, coeffs: usize) -> Result<Self> {
        if length == 0 || coeffs == 0 || coeffs > length {
            return Err(Error::Config(format!(
                "DCT needs 1 <= coeffs <= length, got coeffs={coeffs} length={length}"
            )));
        }
        let l = length as f64;
        let basis = Mat::from_fn(coeffs, length, |k, n| {
            let scale = if k == 0 {
                (1.0 / l).sqrt()
            } else {
                (2.0 / l).sqrt()
            };
            scale * (PI * (2 * n + 1) as f64 * k as f64 / (2.0 * l)).cos()
        });
        Ok(DctBasis {
            length,
            coeffs,
            basis,
        })
    }

    /// Full-rank basis (`C = L`).
    pub fn full(length: usize) -> Result<Self> {
        Self::new(length, length)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn coeffs(&self) -> usize {
        self.coeffs
    }

    pub fn matrix(&self) -> &Mat {
        &self.basis
    }

    pub fn encode(&self, seq: &Mat) -> Result<FreqMatrix> {
        if seq.cols() != self.length {
            return Err(Error::dim(
                "dct_encode",
                seq.shape(),
                (self.coeffs, self.length),
            ));
        }
        Ok(FreqMatrix(seq.matmul_nt(&self.basis)?))
    }

    pub fn decode(&self, freq: &FreqMatrix) -> Result<Mat> {
        self.decode_mat(freq.as_mat())
    }

    pub fn decode_mat(&self, freq: &Mat) -> Result<Mat> {
        if freq.cols() != self.coeffs {
            return Err(Error::dim(
                "idct_decode",
                freq.shape(),
                (self.coeffs, self.length),
            ));
        }
        freq.matmul(&self.basis)
    }
}

/// `K×C` DCT coefficients of a pose sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqMatrix(pub Mat);

impl FreqMatrix {
    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn params(&self) -> usize {
        self.0.rows()
    }

    pub fn coeffs(&self) -> usize {
        self.0.cols()
    }
}
