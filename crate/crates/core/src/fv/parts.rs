//! Sign operator, even/odd decomposition and the energy (Foldy–Wouthuysen) frame.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::hamiltonian::{hermitian_eigen, squared_mode_block};
use super::operator::{ChargeMetric, OperatorMatrix};
use crate::error::{Error, Result};
use crate::spectral::{chi_from_energies, eps_from_energies};

type C = Complex64;

/// `Λ = H (H²)^{-1/2}`.
///
/// When `H² = I ⊗ K̃` with `K̃` Hermitian (every Hamiltonian built by this
/// crate) the inverse square root comes from a Hermitian eigendecomposition
/// of `K̃`; otherwise a scaled Newton iteration is used.
pub fn sign_operator(h: &OperatorMatrix) -> Result<OperatorMatrix> {
    let (_, k) = squared_mode_block(h)?;
    let Some(k) = k else {
        return newton_sign(h);
    };
    let (vals, vecs) = hermitian_eigen(&k);
    let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vmin = vals.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(vmin > 1e-24 * vmax) {
        return Err(Error::numerical(format!(
            "H is near-singular: smallest |eigenvalue| {:.3e} vs largest {:.3e}",
            vmin.max(0.0).sqrt(),
            vmax.sqrt()
        )));
    }
    let inv_sqrt = match vecs {
        None => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|v| C::new(v.sqrt().recip(), 0.0)),
        )),
        Some(u) => {
            let mut scaled = u.clone();
            for (j, v) in vals.iter().enumerate() {
                scaled.column_mut(j).scale_mut(v.sqrt().recip());
            }
            scaled * u.adjoint()
        }
    };
    h.mul(&OperatorMatrix::from_mode_operator(*h.basis(), &inv_sqrt)?)
}

fn newton_sign(h: &OperatorMatrix) -> Result<OperatorMatrix> {
    let basis = *h.basis();
    let mut x = h.matrix().clone();
    for _ in 0..100 {
        let inv = x
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("H is singular"))?;
        let mu = (inv.norm() / x.norm()).sqrt();
        let next = (&x * C::new(mu, 0.0) + inv * C::new(1.0 / mu, 0.0)) * C::new(0.5, 0.0);
        let change = (&next - &x).norm();
        x = next;
        if change <= 1e-14 * x.norm() {
            let out = OperatorMatrix::from_dense(basis, x)?;
            let dev = out.mul(&out)?.max_abs_diff(&OperatorMatrix::identity(basis))?;
            if dev > 1e-8 {
                return Err(Error::numerical(format!("sign iteration converged to Λ² ≠ I ({dev:.2e})")));
            }
            return Ok(out);
        }
    }
    Err(Error::numerical("sign iteration did not converge (eigenvalues near the imaginary axis?)"))
}

fn sandwich(o: &OperatorMatrix, lambda: &OperatorMatrix) -> Result<OperatorMatrix> {
    lambda.mul(o)?.mul(lambda)
}

/// `½ (O + Λ O Λ)`.
pub fn even_part(o: &OperatorMatrix, lambda: &OperatorMatrix) -> Result<OperatorMatrix> {
    Ok(o.add(&sandwich(o, lambda)?)?.scale(C::new(0.5, 0.0)))
}

/// `½ (O − Λ O Λ)`.
pub fn odd_part(o: &OperatorMatrix, lambda: &OperatorMatrix) -> Result<OperatorMatrix> {
    Ok(o.sub(&sandwich(o, lambda)?)?.scale(C::new(0.5, 0.0)))
}

/// Per-mode η-normalised eigenvectors of a mode-local Hamiltonian.
///
/// Column `i` of the transform holds the positive-energy vector of mode `i`
/// (first component real positive), column `M + i` the negative-energy one
/// (second component real positive). For the free Hamiltonian this is
/// `[[cosh θ, −sinh θ], [−sinh θ, cosh θ]]` with `θ = ½ ln(E/mc²)`.
#[derive(Debug, Clone)]
pub struct EnergyFrame {
    energies: Vec<f64>,
    v: OperatorMatrix,
    v_inv: OperatorMatrix,
}

impl EnergyFrame {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        let basis = *h.basis();
        let m = h.mode_dim();
        if !h.is_mode_local(1e-14 * h.max_abs()) {
            return Err(Error::config("energy frame needs a Hamiltonian without inter-mode coupling"));
        }
        let mut v = OperatorMatrix::zeros(basis).into_matrix();
        let mut energies = Vec::with_capacity(m);
        for i in 0..m {
            let (h00, h01, h10, h11) = (h.get(i, i), h.get(i, m + i), h.get(m + i, i), h.get(m + i, m + i));
            let half_tr = (h00 + h11) * 0.5;
            let disc = (half_tr * half_tr - (h00 * h11 - h01 * h10)).sqrt();
            let (lp, lm) = (half_tr + disc, half_tr - disc);
            let (lp, lm) = if lp.re >= lm.re { (lp, lm) } else { (lm, lp) };
            let scale = lp.norm().max(lm.norm());
            if lp.im.abs() > 1e-12 * scale || lm.im.abs() > 1e-12 * scale || !(lp.re > 0.0 && lm.re < 0.0) {
                return Err(Error::numerical(format!("mode {i} has eigenvalues {lp}, {lm}")));
            }
            energies.push(lp.re);
            for (col, lam, positive) in [(i, lp, true), (m + i, lm, false)] {
                let u1 = [h01, lam - h00];
                let u2 = [lam - h11, h10];
                let norm = |u: &[C; 2]| u[0].norm_sqr() - u[1].norm_sqr();
                let u = if norm(&u1).abs() >= norm(&u2).abs() { u1 } else { u2 };
                let n = norm(&u);
                if (n > 0.0) != positive || n == 0.0 {
                    return Err(Error::numerical(format!("mode {i}: eigenvector has wrong charge sign")));
                }
                let pivot = if positive { u[0] } else { u[1] };
                let phase = pivot.conj() / pivot.norm();
                let s = phase / n.abs().sqrt();
                v[(i, col)] = u[0] * s;
                v[(m + i, col)] = u[1] * s;
            }
        }
        let v = OperatorMatrix::from_dense(basis, v)?;
        let v_inv = v.eta_adjoint();
        Ok(Self { energies, v, v_inv })
    }

    /// Positive eigenvalue of each mode.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn transform(&self) -> &OperatorMatrix {
        &self.v
    }

    /// `V⁻¹ O V`; even operators become block-diagonal.
    pub fn to_energy_frame(&self, o: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.v_inv.mul(o)?.mul(&self.v)
    }

    /// `V O V⁻¹`.
    pub fn from_energy_frame(&self, o: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.v.mul(o)?.mul(&self.v_inv)
    }

    /// Positive-energy block of `O` after moving it to the energy frame.
    pub fn positive_block(&self, o: &OperatorMatrix) -> Result<DMatrix<C>> {
        Ok(self.to_energy_frame(o)?.block(0, 0))
    }
}

/// Deviations of the matrix-oracle even/odd parts from the ε/χ-scaled kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelReport {
    /// `max |even − ε∘Ã| / max |Ã|` over all energy-frame blocks.
    pub even_deviation: f64,
    /// `max |odd − χ∘Ã| / max |Ã|`.
    pub odd_deviation: f64,
    /// `max |Ã|`.
    pub kernel_scale: f64,
    /// `max |odd part|` (absolute).
    pub odd_magnitude: f64,
}

impl KernelReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.even_deviation < tol && self.odd_deviation < tol
    }
}

/// Compare the even/odd parts of a charge-invariant operator `I ⊗ Ã` with
/// the kernels `ε(E_i, E_j) Ã_ij` and `χ(E_i, E_j) Ã_ij` in the energy frame.
pub fn kernel_relation_check(o: &OperatorMatrix, h: &OperatorMatrix) -> Result<KernelReport> {
    let scale = o.max_abs();
    if !o.is_charge_invariant(1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::domain("kernel relation needs a charge-invariant operator"));
    }
    let lambda = sign_operator(h)?;
    let frame = EnergyFrame::new(h)?;
    let even = frame.to_energy_frame(&even_part(o, &lambda)?)?;
    let odd_raw = odd_part(o, &lambda)?;
    let odd = frame.to_energy_frame(&odd_raw)?;
    let a = o.block(0, 0);
    let e = frame.energies();
    let m = a.nrows();
    let (mut de, mut dodd) = (0.0f64, 0.0f64);
    for (bi, bj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let diag_block = bi == bj;
        for i in 0..m {
            for j in 0..m {
                let eps = eps_from_energies(e[i], e[j]);
                let chi = chi_from_energies(e[i], e[j]);
                let (we, wo) = if diag_block {
                    (a[(i, j)] * eps, C::new(0.0, 0.0))
                } else {
                    (C::new(0.0, 0.0), a[(i, j)] * chi)
                };
                de = de.max((even.get(bi * m + i, bj * m + j) - we).norm());
                dodd = dodd.max((odd.get(bi * m + i, bj * m + j) - wo).norm());
            }
        }
    }
    let s = scale.max(f64::MIN_POSITIVE);
    Ok(KernelReport {
        even_deviation: de / s,
        odd_deviation: dodd / s,
        kernel_scale: scale,
        odd_magnitude: odd_raw.max_abs(),
    })
}

/// Expectation `⟨v|η O|v⟩ / ⟨v|η|v⟩` in the charge inner product.
pub fn charge_expectation(o: &OperatorMatrix, v: &[C]) -> Result<C> {
    let eta = ChargeMetric::new(o.mode_dim());
    let ov = o.apply(v)?;
    let norm = eta.inner(v, v);
    if norm.norm() == 0.0 {
        return Err(Error::domain("state has zero charge norm"));
    }
    Ok(eta.inner(v, &ov) / norm)
}
