//! Dense operators on the doubled (charge ⊗ mode) space.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MomentumGrid;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Mode basis underlying an [`OperatorMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisSpec {
    /// Momentum grid nodes.
    Momentum(MomentumGrid),
    /// Transverse oscillator levels `n = 0..levels`.
    Oscillator { levels: usize },
    /// Oscillator levels ⊗ longitudinal momentum grid; mode index `n * n_pz + k`.
    OscillatorMomentum { levels: usize, pz: MomentumGrid },
    /// Anything else (tests, user-supplied matrices).
    Generic { modes: usize },
}

impl BasisSpec {
    pub fn mode_dim(&self) -> usize {
        match *self {
            BasisSpec::Momentum(g) => g.len(),
            BasisSpec::Oscillator { levels } => levels,
            BasisSpec::OscillatorMomentum { levels, pz } => levels * pz.len(),
            BasisSpec::Generic { modes } => modes,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.mode_dim()
    }
}

/// The charge metric `η = diag(+1, …, +1, −1, …, −1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChargeMetric {
    modes: usize,
}

impl ChargeMetric {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn sign(&self, index: usize) -> f64 {
        if index < self.modes {
            1.0
        } else {
            -1.0
        }
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        v.iter().enumerate().map(|(i, x)| x * self.sign(i)).collect()
    }

    /// `⟨u|η|v⟩`.
    pub fn inner(&self, u: &[C], v: &[C]) -> C {
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * self.sign(i))
            .sum()
    }

    pub fn to_operator(&self, basis: BasisSpec) -> OperatorMatrix {
        let n = 2 * self.modes;
        OperatorMatrix {
            basis,
            data: DMatrix::from_fn(n, n, |i, j| if i == j { C::new(self.sign(i), 0.0) } else { ZERO }),
        }
    }
}

/// Square complex matrix of size `2M` acting on charge ⊗ modes.
///
/// Row/column index `c * M + i`: `c = 0` is the upper Feshbach–Villars
/// component, `c = 1` the lower.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    basis: BasisSpec,
    data: DMatrix<C>,
}

impl OperatorMatrix {
    pub fn zeros(basis: BasisSpec) -> Self {
        let n = basis.dim();
        Self {
            basis,
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let n = basis.dim();
        Self {
            basis,
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_dense(basis: BasisSpec, data: DMatrix<C>) -> Result<Self> {
        let n = basis.dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::dimension(format!(
                "{}x{} matrix for a basis of dimension {n}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { basis, data })
    }

    /// Assemble from the four `M×M` charge blocks `[[B00, B01], [B10, B11]]`.
    pub fn from_blocks(basis: BasisSpec, blocks: [[&DMatrix<C>; 2]; 2]) -> Result<Self> {
        let m = basis.mode_dim();
        let mut data = DMatrix::zeros(2 * m, 2 * m);
        for (a, row) in blocks.iter().enumerate() {
            for (b, blk) in row.iter().enumerate() {
                if blk.nrows() != m || blk.ncols() != m {
                    return Err(Error::dimension(format!("charge block must be {m}x{m}")));
                }
                data.view_mut((a * m, b * m), (m, m)).copy_from(*blk);
            }
        }
        Ok(Self { basis, data })
    }

    /// Charge-invariant operator `I_charge ⊗ Õ`.
    pub fn from_mode_operator(basis: BasisSpec, mode: &DMatrix<C>) -> Result<Self> {
        let z = DMatrix::zeros(mode.nrows(), mode.ncols());
        Self::from_blocks(basis, [[mode, &z], [&z, mode]])
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn mode_dim(&self) -> usize {
        self.dim() / 2
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[(i, j)]
    }

    /// Charge block `(a, b)` as an `M×M` matrix.
    pub fn block(&self, a: usize, b: usize) -> DMatrix<C> {
        let m = self.mode_dim();
        self.data.view((a * m, b * m), (m, m)).into_owned()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::dimension(format!(
                "basis mismatch: {:?} vs {:?}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            basis: self.basis,
            data: sparse_aware_mul(&self.data, &other.data),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            basis: self.basis,
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            basis: self.basis,
            data: &self.data - &other.data,
        })
    }

    pub fn scale(&self, factor: C) -> Self {
        Self {
            basis: self.basis,
            data: &self.data * factor,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis,
            data: self.data.adjoint(),
        }
    }

    /// `η O† η`, the adjoint with respect to the charge inner product.
    pub fn eta_adjoint(&self) -> Self {
        let eta = ChargeMetric::new(self.mode_dim());
        let mut data = self.data.adjoint();
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                data[(i, j)] *= eta.sign(i) * eta.sign(j);
            }
        }
        Self {
            basis: self.basis,
            data,
        }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }

    /// `H† η = η H` within `tol` (absolute, entrywise).
    pub fn is_pseudo_hermitian(&self, tol: f64) -> bool {
        self.eta_adjoint()
            .max_abs_diff(self)
            .map(|d| d <= tol)
            .unwrap_or(false)
    }

    /// Same kernel on both charge blocks and no charge mixing.
    pub fn is_charge_invariant(&self, tol: f64) -> bool {
        let (b00, b11) = (self.block(0, 0), self.block(1, 1));
        let off = self.block(0, 1).iter().chain(self.block(1, 0).iter()).fold(0.0f64, |m, z| m.max(z.norm()));
        let diag = b00.iter().zip(b11.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        off <= tol && diag <= tol
    }

    /// True when no entry couples two different modes.
    pub fn is_mode_local(&self, tol: f64) -> bool {
        let m = self.mode_dim();
        (0..self.dim()).all(|j| {
            (0..self.dim()).all(|i| i % m == j % m || self.data[(i, j)].norm() <= tol)
        })
    }

    pub fn apply(&self, v: &[C]) -> Result<Vec<C>> {
        if v.len() != self.dim() {
            return Err(Error::dimension(format!(
                "vector of length {} for operator of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![ZERO; self.dim()];
        for (j, x) in v.iter().enumerate() {
            if *x == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.data.column(j).iter()) {
                *o += a * x;
            }
        }
        Ok(out)
    }

    /// Raw dump: row-major, `(re, im)` little-endian `f64` pairs, no header.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.dim();
        let mut buf = Vec::with_capacity(16 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.data[(i, j)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Inverse of [`OperatorMatrix::write_binary`].
    pub fn read_binary<R: Read>(basis: BasisSpec, mut r: R) -> Result<Self> {
        let n = basis.dim();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 16 * n * n {
            return Err(Error::dimension(format!(
                "dump holds {} bytes, expected {} for dimension {n}",
                bytes.len(),
                16 * n * n
            )));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let data = DMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            C::new(f(k), f(k + 1))
        });
        Ok(Self { basis, data })
    }
}

/// Matrix product that skips zero entries of both factors.
///
/// Most operators here are block-sparse (ladders, mode-local sign operators),
/// so this beats a dense product by orders of magnitude at dimension 2048.
pub(crate) fn sparse_aware_mul(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    let (n, inner, m) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(inner, b.nrows());
    let nnz = a.iter().filter(|z| **z != ZERO).count();
    let sparse_cols: Option<Vec<Vec<(usize, C)>>> = (4 * nnz < n * inner).then(|| {
        (0..inner)
            .map(|k| {
                a.column(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != ZERO)
                    .map(|(i, z)| (i, *z))
                    .collect()
            })
            .collect()
    });
    let a_slice = a.as_slice();
    let b_slice = b.as_slice();
    let cols: Vec<Vec<C>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut out = vec![ZERO; n];
            for k in 0..inner {
                let bkj = b_slice[j * inner + k];
                if bkj == ZERO {
                    continue;
                }
                match &sparse_cols {
                    Some(cols) => {
                        for &(i, aik) in &cols[k] {
                            out[i] += aik * bkj;
                        }
                    }
                    None => {
                        for (o, aik) in out.iter_mut().zip(&a_slice[k * n..(k + 1) * n]) {
                            *o += aik * bkj;
                        }
                    }
                }
            }
            out
        })
        .collect();
    DMatrix::from_vec(n, m, cols.concat())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic(m: usize) -> BasisSpec {
        BasisSpec::Generic { modes: m }
    }

    fn sample(m: usize, seed: u64) -> OperatorMatrix {
        let n = 2 * m;
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let data = DMatrix::from_fn(n, n, |_, _| {
            let r = next();
            if r.abs() < 0.2 {
                ZERO
            } else {
                C::new(r, next())
            }
        });
        OperatorMatrix::from_dense(generic(m), data).unwrap()
    }

    #[test]
    fn product_matches_dense() {
        for seed in 0..4 {
            let (a, b) = (sample(5, seed), sample(5, seed + 10));
            let want = a.matrix() * b.matrix();
            let got = a.mul(&b).unwrap();
            assert!((got.matrix() - want).iter().all(|z| z.norm() < 1e-13));
        }
        // Sparse path.
        let mut a = OperatorMatrix::zeros(generic(6));
        a.data[(1, 3)] = C::new(2.0, 1.0);
        a.data[(7, 0)] = C::new(-1.0, 0.5);
        let b = sample(6, 3);
        let got = a.mul(&b).unwrap();
        assert!((got.matrix() - a.matrix() * b.matrix()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn basis_mismatch_rejected() {
        let a = OperatorMatrix::identity(generic(4));
        let b = OperatorMatrix::identity(BasisSpec::Oscillator { levels: 4 });
        assert!(matches!(a.mul(&b), Err(Error::Dimension(_))));
        assert!(matches!(a.commutator(&b), Err(Error::Dimension(_))));
        assert!(OperatorMatrix::from_dense(generic(3), DMatrix::zeros(5, 5)).is_err());
    }

    #[test]
    fn commutator_algebra() {
        let a = sample(4, 1);
        let b = sample(4, 2);
        assert_eq!(a.commutator(&a).unwrap().max_abs(), 0.0);
        let ab = a.commutator(&b).unwrap();
        let ba = b.commutator(&a).unwrap();
        assert!(ab.add(&ba).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn metric_properties() {
        let eta = ChargeMetric::new(3);
        let e = eta.to_operator(generic(3));
        assert_eq!(e.mul(&e).unwrap(), OperatorMatrix::identity(generic(3)));
        assert!(e.is_pseudo_hermitian(0.0));
        let v = vec![C::new(1.0, 0.0); 6];
        assert_eq!(eta.inner(&v, &v), ZERO);
    }

    #[test]
    fn binary_round_trip() {
        let a = sample(3, 7);
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 * 36);
        // Row-major: second pair is entry (0, 1).
        let re01 = f64::from_le_bytes(buf[16..24].try_into().unwrap());
        assert_eq!(re01, a.get(0, 1).re);
        let b = OperatorMatrix::read_binary(generic(3), buf.as_slice()).unwrap();
        assert_eq!(a, b);
        assert!(OperatorMatrix::read_binary(generic(4), buf.as_slice()).is_err());
    }

    #[test]
    fn charge_invariance() {
        let mode = DMatrix::from_fn(3, 3, |i, j| C::new((i + 2 * j) as f64, 0.0));
        let o = OperatorMatrix::from_mode_operator(generic(3), &mode).unwrap();
        assert!(o.is_charge_invariant(0.0));
        assert_eq!(o.block(1, 1), mode);
        assert!(!sample(3, 4).is_charge_invariant(1e-3));
    }
}
