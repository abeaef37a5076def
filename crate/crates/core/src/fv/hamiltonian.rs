//! Feshbach–Villars Hamiltonians and standard operators in finite bases.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::operator::{BasisSpec, OperatorMatrix};
use crate::error::{Error, Result};
use crate::grid::{spectral_derivative_matrix, MomentumGrid};
use crate::spectral::EnergyModel;
use crate::units::UnitSystem;

type C = Complex64;

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// Kinetic mode operator `π² / (2m)` for the given basis.
fn kinetic(model: &EnergyModel, basis: &BasisSpec) -> Result<DMatrix<C>> {
    let u = model.units;
    let mc2 = u.rest_energy();
    let b = model.b();
    match *basis {
        BasisSpec::Momentum(g) => {
            if b != 0.0 {
                return Err(Error::config("a magnetic model needs an oscillator basis"));
            }
            Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                g.len(),
                g.nodes().iter().map(|p| re(p * p / (2.0 * u.mass))),
            )))
        }
        BasisSpec::Oscillator { levels } => {
            check_levels(levels)?;
            let num = number_operator(levels);
            Ok((num * re(2.0) + DMatrix::identity(levels, levels)) * re(0.5 * b * mc2))
        }
        BasisSpec::OscillatorMomentum { levels, pz } => {
            check_levels(levels)?;
            let num = number_operator(levels);
            let n_pz = pz.len();
            let mut k = DMatrix::zeros(levels * n_pz, levels * n_pz);
            for n in 0..levels {
                let trans = 0.5 * b * mc2 * (2.0 * num[(n, n)].re + 1.0);
                for (j, p) in pz.nodes().iter().enumerate() {
                    let i = n * n_pz + j;
                    k[(i, i)] = re(trans + p * p / (2.0 * u.mass));
                }
            }
            Ok(k)
        }
        BasisSpec::Generic { .. } => Err(Error::config("cannot build a Hamiltonian on a generic basis")),
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < 2 {
        return Err(Error::resolution("oscillator basis needs at least 2 levels", Some(2)));
    }
    Ok(())
}

/// `a† a` formed from the truncated ladder matrices (exact on every level).
fn number_operator(levels: usize) -> DMatrix<C> {
    let a = ladder_matrix(levels);
    a.adjoint() * a
}

/// Truncated annihilation matrix, `a_{n,n+1} = sqrt(n+1)`.
pub fn ladder_matrix(levels: usize) -> DMatrix<C> {
    DMatrix::from_fn(levels, levels, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { re(0.0) })
}

/// `H = τ3 mc² + (τ3 + iτ2) π²/(2m)`:
/// blocks `[[mc² + k, k], [−k, −mc² − k]]`.
pub fn build_hamiltonian(model: &EnergyModel, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let k = kinetic(model, basis)?;
    let m = k.nrows();
    let mc2 = model.units.rest_energy();
    let a = &k + DMatrix::identity(m, m) * re(mc2);
    let neg_a = -&a;
    let neg_k = -&k;
    OperatorMatrix::from_blocks(*basis, [[&a, &k], [&neg_k, &neg_a]])
}

/// Standard position `x = iħ ∂/∂p` (spectral derivative), charge-invariant.
pub fn position_operator(grid: &MomentumGrid, units: &UnitSystem) -> Result<OperatorMatrix> {
    OperatorMatrix::from_mode_operator(BasisSpec::Momentum(*grid), &position_kernel(grid, units))
}

/// Mode kernel of `iħ ∂/∂p` on the grid.
pub fn position_kernel(grid: &MomentumGrid, units: &UnitSystem) -> DMatrix<C> {
    let n = grid.len();
    let d = spectral_derivative_matrix(n, grid.spacing());
    DMatrix::from_fn(n, n, |i, j| C::new(0.0, units.hbar * d[i * n + j]))
}

/// Momentum `p`, diagonal and charge-invariant.
pub fn momentum_operator(grid: &MomentumGrid) -> Result<OperatorMatrix> {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(grid.len(), grid.nodes().into_iter().map(re)));
    OperatorMatrix::from_mode_operator(BasisSpec::Momentum(*grid), &d)
}

/// Newton–Wigner position in the Feshbach–Villars frame:
/// `iħ ∂/∂p ⊗ I + iħ c²p/(2E²) ⊗ τ1`.
///
/// The second term is the connection of the p-dependent energy eigenvectors.
pub fn newton_wigner_position(grid: &MomentumGrid, units: &UnitSystem) -> Result<OperatorMatrix> {
    let x = position_kernel(grid, units);
    let n = grid.len();
    let conn = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let p = grid.node(i);
            let e = units.energy(p);
            C::new(0.0, units.hbar * units.c * units.c * p / (2.0 * e * e))
        } else {
            re(0.0)
        }
    });
    OperatorMatrix::from_blocks(BasisSpec::Momentum(*grid), [[&x, &conn], [&conn, &x]])
}

/// Multiplication by the Gaussian potential `V(q) = v0 exp(−q²/(2 w²))`.
///
/// Matrix elements `⟨p_i|V|p_j⟩ Δp = Δp v0 w / (sqrt(2π) ħ) exp(−w²(p_i−p_j)²/(2ħ²))`.
pub fn gaussian_potential_operator(
    grid: &MomentumGrid,
    units: &UnitSystem,
    v0: f64,
    width: f64,
) -> Result<OperatorMatrix> {
    if !(width > 0.0) {
        return Err(Error::domain("potential width must be positive"));
    }
    let n = grid.len();
    let h = units.hbar;
    let pref = grid.spacing() * v0 * width / ((2.0 * std::f64::consts::PI).sqrt() * h);
    let k = DMatrix::from_fn(n, n, |i, j| {
        let dp = grid.node(i) - grid.node(j);
        re(pref * (-width * width * dp * dp / (2.0 * h * h)).exp())
    });
    OperatorMatrix::from_mode_operator(BasisSpec::Momentum(*grid), &k)
}

/// Transverse annihilation operator `a ⊗ I_pz ⊗ I_charge`.
pub fn ladder_operator(basis: &BasisSpec) -> Result<OperatorMatrix> {
    match *basis {
        BasisSpec::Oscillator { levels } => OperatorMatrix::from_mode_operator(*basis, &ladder_matrix(levels)),
        BasisSpec::OscillatorMomentum { levels, pz } => {
            let a = ladder_matrix(levels);
            let id = DMatrix::<C>::identity(pz.len(), pz.len());
            OperatorMatrix::from_mode_operator(*basis, &a.kronecker(&id))
        }
        _ => Err(Error::config("ladder operator needs an oscillator basis")),
    }
}

/// Longitudinal position `I_n ⊗ iħ ∂/∂p_z ⊗ I_charge`.
pub fn longitudinal_position(basis: &BasisSpec, units: &UnitSystem) -> Result<OperatorMatrix> {
    match *basis {
        BasisSpec::OscillatorMomentum { levels, pz } => {
            let id = DMatrix::<C>::identity(levels, levels);
            OperatorMatrix::from_mode_operator(*basis, &id.kronecker(&position_kernel(&pz, units)))
        }
        _ => Err(Error::config("longitudinal position needs an oscillator ⊗ p_z basis")),
    }
}

/// Mode block `K̃` when `H² = I_charge ⊗ K̃` (within a relative tolerance).
pub(crate) fn squared_mode_block(h: &OperatorMatrix) -> Result<(OperatorMatrix, Option<DMatrix<C>>)> {
    let h2 = h.mul(h)?;
    let scale = h2.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let k = h2.block(0, 0);
    let ok = h2.is_charge_invariant(tol) && {
        let kh = k.adjoint();
        k.iter().zip(kh.iter()).all(|(a, b)| (a - b).norm() <= tol)
    };
    Ok((h2, ok.then_some(k)))
}

/// Eigenpairs of a Hermitian matrix, with a fast path for diagonal input.
pub(crate) fn hermitian_eigen(k: &DMatrix<C>) -> (Vec<f64>, Option<DMatrix<C>>) {
    let n = k.nrows();
    let scale = k.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let diagonal = (0..n).all(|j| (0..n).all(|i| i == j || k[(i, j)].norm() <= 1e-15 * scale));
    if diagonal {
        ((0..n).map(|i| k[(i, i)].re).collect(), None)
    } else {
        let eig = SymmetricEigen::new(k.clone());
        (eig.eigenvalues.iter().copied().collect(), Some(eig.eigenvectors))
    }
}

/// Sorted eigenvalues of a Hamiltonian whose square is charge-invariant.
///
/// Each eigenvalue `k` of `K̃` yields a pair of `H`-eigenvalues `±sqrt(k)`; the
/// split within a degenerate cluster is read from the trace of `H` restricted
/// to it.
pub fn spectrum(h: &OperatorMatrix) -> Result<Vec<f64>> {
    let (_, k) = squared_mode_block(h)?;
    let k = k.ok_or_else(|| Error::config("spectrum needs H² = I ⊗ K with K Hermitian"))?;
    let (vals, vecs) = hermitian_eigen(&k);
    let m = vals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let vmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::with_capacity(2 * m);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && (vals[order[end]] - vals[order[start]]).abs() <= 1e-10 * vmax {
            end += 1;
        }
        let cluster = &order[start..end];
        let kv = cluster.iter().map(|&i| vals[i]).sum::<f64>() / cluster.len() as f64;
        if kv <= 0.0 {
            return Err(Error::numerical(format!("H² has non-positive eigenvalue {kv:e}")));
        }
        let e = kv.sqrt();
        let mut trace = 0.0;
        for &i in cluster {
            for c in 0..2 {
                let blk = h.block(c, c);
                trace += match &vecs {
                    None => blk[(i, i)].re,
                    Some(u) => {
                        let col = u.column(i);
                        (col.adjoint() * &blk * col)[(0, 0)].re
                    }
                };
            }
        }
        let d = cluster.len() as f64;
        let plus = ((2.0 * d + trace / e) / 2.0).round() as usize;
        let minus = 2 * cluster.len() - plus.min(2 * cluster.len());
        out.extend(std::iter::repeat_n(e, plus.min(2 * cluster.len())));
        out.extend(std::iter::repeat_n(-e, minus));
        start = end;
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// The lowest `count` positive eigenvalues.
pub fn positive_levels(h: &OperatorMatrix, count: usize) -> Result<Vec<f64>> {
    if count > h.mode_dim() {
        return Err(Error::resolution(
            format!("{count} levels requested from a basis of {} modes", h.mode_dim()),
            Some(count),
        ));
    }
    let s = spectrum(h)?;
    Ok(s.into_iter().filter(|e| *e > 0.0).take(count).collect())
}
