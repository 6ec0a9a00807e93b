//! Sparse sensor field, DCT measurement basis and signature sequences.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;

use crate::rng::{self, tag};
use crate::{Error, Result};

/// Entry `(t, k)` of the orthonormal type-II DCT matrix of size `n`.
#[inline]
pub fn dct_entry(n: usize, t: usize, k: usize) -> f64 {
    let nf = n as f64;
    let alpha = if t == 0 { libm::sqrt(1.0 / nf) } else { libm::sqrt(2.0 / nf) };
    alpha * libm::cos(PI * (t as f64) * (2 * k + 1) as f64 / (2.0 * nf))
}

/// Orthonormal type-II DCT matrix `D` with `D[t][k] = a_t cos(pi t (2k+1) / 2K)`.
pub fn dct_matrix(k: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::InvalidDimension("DCT size must be at least 1"));
    }
    Ok(DMatrix::from_fn(k, k, |t, j| dct_entry(k, t, j)))
}

/// Ground truth for one Monte-Carlo run.
///
/// `basis` is `M x K`; its column `k` is the measurement vector `b_k` of node
/// `k` and its rows are `M` distinct rows of the `K x K` DCT. The target field
/// is `v = basis^T s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub num_nodes: usize,
    pub basis_dim: usize,
    pub sparsity: usize,
    pub seed: u64,
    /// DCT rows (frequencies) spanning the field, ascending.
    pub basis_rows: Vec<usize>,
    /// Nonzero positions of `s`, ascending.
    pub support: Vec<usize>,
    /// `+1` / `-1` for each support entry.
    pub signs: Vec<i8>,
    pub sparse: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub target: DVector<f64>,
}

impl Scene {
    /// Draws a scene. Each artifact uses its own child stream of `seed`.
    pub fn generate(num_nodes: usize, basis_dim: usize, sparsity: usize, seed: u64) -> Result<Self> {
        if num_nodes == 0 || basis_dim == 0 {
            return Err(Error::InvalidDimension("K and M must be positive"));
        }
        if basis_dim > num_nodes {
            return Err(Error::InvalidConfig("M must not exceed K"));
        }
        if sparsity > basis_dim {
            return Err(Error::InvalidConfig("S must not exceed M"));
        }
        let mut rows_rng = rng::stream(seed, &[tag::SCENE, tag::BASIS_ROWS]);
        let mut basis_rows = index::sample(&mut rows_rng, num_nodes, basis_dim).into_vec();
        basis_rows.sort_unstable();

        let mut support_rng = rng::stream(seed, &[tag::SCENE, tag::SUPPORT]);
        let mut support = index::sample(&mut support_rng, basis_dim, sparsity).into_vec();
        support.sort_unstable();

        let mut sign_rng = rng::stream(seed, &[tag::SCENE, tag::SIGNS]);
        let signs = (0..sparsity).map(|_| if sign_rng.random::<bool>() { 1 } else { -1 }).collect();

        Self::from_parts(num_nodes, basis_dim, seed, basis_rows, support, signs)
    }

    /// Rebuilds a scene from its discrete description; no floats are needed.
    pub fn from_parts(
        num_nodes: usize,
        basis_dim: usize,
        seed: u64,
        basis_rows: Vec<usize>,
        support: Vec<usize>,
        signs: Vec<i8>,
    ) -> Result<Self> {
        if basis_rows.len() != basis_dim {
            return Err(Error::LengthMismatch { expected: basis_dim, actual: basis_rows.len() });
        }
        if signs.len() != support.len() {
            return Err(Error::LengthMismatch { expected: support.len(), actual: signs.len() });
        }
        if basis_rows.iter().any(|&r| r >= num_nodes) || has_duplicates(&basis_rows) {
            return Err(Error::InvalidConfig("basis rows must be distinct DCT rows below K"));
        }
        if support.iter().any(|&j| j >= basis_dim) || has_duplicates(&support) {
            return Err(Error::InvalidConfig("support must be distinct indices below M"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidConfig("signs must be +1 or -1"));
        }

        let mut sparse = DVector::zeros(basis_dim);
        for (&j, &sg) in support.iter().zip(&signs) {
            sparse[j] = f64::from(sg);
        }
        let basis = DMatrix::from_fn(basis_dim, num_nodes, |i, k| dct_entry(num_nodes, basis_rows[i], k));
        let target = basis.tr_mul(&sparse);
        Ok(Self {
            num_nodes,
            basis_dim,
            sparsity: support.len(),
            seed,
            basis_rows,
            support,
            signs,
            sparse,
            basis,
            target,
        })
    }

    /// Measurement vector `b_k`.
    pub fn measurement_vector(&self, node: usize) -> nalgebra::DVectorView<'_, f64> {
        self.basis.column(node)
    }
}

fn has_duplicates(xs: &[usize]) -> bool {
    let mut sorted = xs.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Convenience wrapper matching [`Scene::generate`].
pub fn generate_scene(num_nodes: usize, basis_dim: usize, sparsity: usize, seed: u64) -> Result<Scene> {
    Scene::generate(num_nodes, basis_dim, sparsity, seed)
}

/// Unit-norm QPSK signature sequences, one column per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureBook {
    pub length: usize,
    /// `L x K`, entries in `{(+-1 +- j) / sqrt(2L)}`.
    pub signatures: DMatrix<Complex64>,
}

impl SignatureBook {
    pub fn num_nodes(&self) -> usize {
        self.signatures.ncols()
    }

    pub fn signature(&self, node: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.signatures.column(node)
    }

    /// `c_a^H c_b`.
    pub fn cross_correlation(&self, a: usize, b: usize) -> Complex64 {
        self.signature(a).iter().zip(self.signature(b).iter()).map(|(x, y)| x.conj() * y).sum()
    }
}

pub fn generate_signatures(length: usize, num_nodes: usize, seed: u64) -> Result<SignatureBook> {
    if length == 0 || num_nodes == 0 {
        return Err(Error::InvalidDimension("L and K must be positive"));
    }
    let scale = 1.0 / libm::sqrt(2.0 * length as f64);
    let mut rng = rng::stream(seed, &[tag::SIGNATURES]);
    // column-major fill: node by node
    let signatures = DMatrix::from_fn(length, num_nodes, |_, _| {
        let bits: u8 = rng.random_range(0..4);
        let re = if bits & 1 == 0 { scale } else { -scale };
        let im = if bits & 2 == 0 { scale } else { -scale };
        Complex64::new(re, im)
    });
    Ok(SignatureBook { length, signatures })
}
