//! Relativistic Wigner transform of per-branch wavefunctions.
//!
//! The even components weight the momentum kernel `ψ*(p+P/2) ψ(p−P/2)` with
//! `ε(p+P/2, p−P/2)`, the odd ones weight the cross kernel `ψ±* ψ∓` with `χ`.
//! Forcing `ε ≡ 1` gives the textbook (non-relativistic) Wigner function.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FourierPair, PhaseSpaceGrid};
use crate::spectral::EnergyModel;
use crate::states::{Branch, ChargeBranchState};
use crate::units::UnitSystem;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Interference factor used by the even transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsilonModel {
    Relativistic,
    /// `ε ≡ 1`: the standard Wigner function of the branch wavefunction.
    Unity,
}

/// Which cross product an odd component is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OddOrdering {
    /// `ψ₊*(p+P/2) ψ₋(p−P/2)`.
    PlusMinus,
    /// `ψ₋*(p+P/2) ψ₊(p−P/2)`.
    MinusPlus,
}

/// Real field `W(p_k, q_l)`, rows indexed by momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseSpaceGrid,
    values: Array2<f64>,
}

/// Complex field on a phase-space grid (odd components, symbols).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: PhaseSpaceGrid,
    values: Array2<C>,
}

fn check_shape(grid: &PhaseSpaceGrid, shape: &[usize]) -> Result<()> {
    if shape != [grid.n_p(), grid.n_q()] {
        return Err(Error::dimension(format!(
            "field of shape {shape:?} on a {}x{} grid",
            grid.n_p(),
            grid.n_q()
        )));
    }
    Ok(())
}

impl WignerField {
    pub fn new(grid: PhaseSpaceGrid, values: Array2<f64>) -> Result<Self> {
        check_shape(&grid, values.shape())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// `∫ W dp dq`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_area()
    }

    /// `∫ W dq` as a function of `p`.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        self.values.rows().into_iter().map(|r| r.sum() * self.grid.q_spacing()).collect()
    }

    /// Weighted sum `Σ w_i W_i` (density-matrix mixtures are linear in W).
    pub fn mix(parts: &[(f64, &WignerField)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::domain("empty mixture"))?.1;
        let mut values = Array2::zeros(first.values.raw_dim());
        for (w, f) in parts {
            if f.grid != first.grid {
                return Err(Error::dimension("mixture of fields on different grids"));
            }
            values.scaled_add(*w, &f.values);
        }
        Ok(Self { grid: first.grid, values })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::dimension("fields on different grids"));
        }
        Ok(Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0f64, |m, a, b| m.max((a - b).abs())))
    }

    /// Long format: `q,p,W` rows after `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "q,p,W")?;
        for (k, row) in self.values.rows().into_iter().enumerate() {
            let p = self.grid.momentum().node(k);
            for (l, v) in row.iter().enumerate() {
                writeln!(w, "{:.10e},{:.10e},{:.10e}", self.grid.q_node(l), p, v)?;
            }
        }
        Ok(())
    }

    /// Contour-ready matrix: first row holds the q nodes, first column the p nodes.
    pub fn write_matrix_csv<W: Write>(&self, mut w: W, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        let qs: Vec<String> = self.grid.q_nodes().iter().map(|q| format!("{q:.10e}")).collect();
        writeln!(w, "p\\q,{}", qs.join(","))?;
        for (k, row) in self.values.rows().into_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
            writeln!(w, "{:.10e},{}", self.grid.momentum().node(k), vals.join(","))?;
        }
        Ok(())
    }
}

impl ComplexField {
    pub fn new(grid: PhaseSpaceGrid, values: Array2<C>) -> Result<Self> {
        check_shape(&grid, values.shape())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<C> {
        &self.values
    }

    pub fn into_values(self) -> Array2<C> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::dimension("fields on different grids"));
        }
        Ok(Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0f64, |m, a, b| m.max((a - b).norm())))
    }

    /// Real part, checking that the imaginary part is negligible.
    pub fn to_real(&self, tol: f64) -> Result<WignerField> {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let im = self.values.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if im > tol * scale {
            return Err(Error::numerical(format!("field is not real: max |Im| = {im:.3e}")));
        }
        WignerField::new(self.grid, self.values.mapv(|z| z.re))
    }
}

impl From<&WignerField> for ComplexField {
    fn from(w: &WignerField) -> Self {
        Self {
            grid: w.grid,
            values: w.values.mapv(|x| C::new(x, 0.0)),
        }
    }
}

/// All four components of a state's relativistic Wigner function.
#[derive(Debug, Clone)]
pub struct WignerComponents {
    pub even_plus: Option<WignerField>,
    pub even_minus: Option<WignerField>,
    pub odd_plus: Option<ComplexField>,
    pub odd_minus: Option<ComplexField>,
    pub epsilon: EpsilonModel,
}

/// Transform engine bound to a conjugate grid.
#[derive(Debug, Clone)]
pub struct WignerTransform {
    fourier: FourierPair,
    model: EnergyModel,
}

impl WignerTransform {
    pub fn new(grid: PhaseSpaceGrid, units: UnitSystem) -> Result<Self> {
        Ok(Self {
            fourier: FourierPair::new(grid, units.hbar)?,
            model: EnergyModel::free(units),
        })
    }

    /// Engine on the grid conjugate to the state's momentum grid.
    pub fn for_state(state: &ChargeBranchState) -> Result<Self> {
        let grid = PhaseSpaceGrid::conjugate(*state.grid(), state.units().hbar);
        Self::new(grid, *state.units())
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        self.fourier.grid()
    }

    pub fn fourier(&self) -> &FourierPair {
        &self.fourier
    }

    fn check_state(&self, state: &ChargeBranchState) -> Result<()> {
        if state.grid() != self.grid().momentum() {
            return Err(Error::dimension("state grid differs from the transform grid"));
        }
        Ok(())
    }

    /// Amplitude on the doubled grid `p_k/2`-spaced: even indices are the
    /// nodes, odd indices the spectrally interpolated midpoints.
    pub fn refine(&self, phi: &[C]) -> Result<Vec<C>> {
        let h = self.fourier.hbar();
        let half = self.grid().p_spacing() / 2.0;
        let mut psi = self.fourier.wavefunction(phi)?;
        for (l, z) in psi.iter_mut().enumerate() {
            *z *= C::from_polar(1.0, -half * self.grid().q_node(l) / h);
        }
        let mid = self.fourier.momentum_amplitude(&psi)?;
        Ok(phi.iter().zip(&mid).flat_map(|(a, b)| [*a, *b]).collect())
    }

    /// `W(p_k, ·) = (2πħ)^{-1} ∫ F(p+P/2, p−P/2) a*(p+P/2) b(p−P/2) e^{−iPq/ħ} dP`.
    fn transform(&self, a: &[C], b: &[C], factor: impl Fn(f64, f64) -> f64 + Sync) -> Result<Array2<C>> {
        let n = self.grid().n_p();
        let fa = self.refine(a)?;
        let fb = if std::ptr::eq(a, b) { fa.clone() } else { self.refine(b)? };
        let h = self.fourier.hbar();
        let pref = (2.0 * PI * h).sqrt().recip();
        let m = self.grid().momentum();
        let rows: Vec<Vec<C>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let pk = m.node(k);
                let mut kern = vec![ZERO; n];
                for (j, slot) in kern.iter_mut().enumerate().skip(1) {
                    let ia = 2 * k as i64 + j as i64 - n as i64 / 2;
                    let ib = 2 * k as i64 - j as i64 + n as i64 / 2;
                    if ia < 0 || ib < 0 || ia >= 2 * n as i64 || ib >= 2 * n as i64 {
                        continue;
                    }
                    let big_p = m.node(j);
                    let f = factor(pk + big_p / 2.0, pk - big_p / 2.0);
                    *slot = fa[ia as usize].conj() * fb[ib as usize] * f;
                }
                let mut out = self.fourier.forward(&kern).expect("length checked");
                out.iter_mut().for_each(|z| *z *= pref);
                out
            })
            .collect();
        Ok(Array2::from_shape_vec((n, n), rows.concat()).expect("square"))
    }

    /// Even component of one branch.
    pub fn even(&self, state: &ChargeBranchState, branch: Branch, eps: EpsilonModel) -> Result<WignerField> {
        self.check_state(state)?;
        let phi = state.component(branch);
        if phi.iter().all(|z| *z == ZERO) {
            return Err(Error::domain(format!("{branch:?} branch is empty")));
        }
        let model = self.model;
        let raw = match eps {
            EpsilonModel::Relativistic => self.transform(phi, phi, |p1, p2| model.eps_factor(p1, p2))?,
            EpsilonModel::Unity => self.transform(phi, phi, |_, _| 1.0)?,
        };
        ComplexField::new(*self.grid(), raw)?.to_real(1e-10)
    }

    /// Odd component; identically zero unless both branches are occupied.
    pub fn odd(&self, state: &ChargeBranchState, ordering: OddOrdering) -> Result<ComplexField> {
        self.check_state(state)?;
        let (a, b) = match ordering {
            OddOrdering::PlusMinus => (state.plus(), state.minus()),
            OddOrdering::MinusPlus => (state.minus(), state.plus()),
        };
        let model = self.model;
        ComplexField::new(*self.grid(), self.transform(a, b, |p1, p2| model.chi_factor(p1, p2))?)
    }

    /// Every component that is not identically zero for this state.
    pub fn components(&self, state: &ChargeBranchState, eps: EpsilonModel) -> Result<WignerComponents> {
        let occupied = |b: Branch| state.component(b).iter().any(|z| *z != ZERO);
        let even = |b: Branch| -> Result<Option<WignerField>> {
            if occupied(b) {
                self.even(state, b, eps).map(Some)
            } else {
                Ok(None)
            }
        };
        let both = occupied(Branch::Positive) && occupied(Branch::Negative);
        Ok(WignerComponents {
            even_plus: even(Branch::Positive)?,
            even_minus: even(Branch::Negative)?,
            odd_plus: if both { Some(self.odd(state, OddOrdering::PlusMinus)?) } else { None },
            odd_minus: if both { Some(self.odd(state, OddOrdering::MinusPlus)?) } else { None },
            epsilon: eps,
        })
    }

    /// Momentum kernel `K(p_k, P_j) = ∫ W(p_k, q) e^{iP_j q/ħ} dq`, recovered
    /// by the inverse transform of each row.
    pub fn kernel(&self, w: &WignerField) -> Result<Array2<C>> {
        if w.grid() != self.grid() {
            return Err(Error::dimension("field grid differs from the transform grid"));
        }
        let n = self.grid().n_p();
        let scale = (2.0 * PI * self.fourier.hbar()).sqrt();
        let rows: Vec<Vec<C>> = w
            .values()
            .rows()
            .into_iter()
            .map(|r| {
                let v: Vec<C> = r.iter().map(|x| C::new(*x, 0.0)).collect();
                let mut out = self.fourier.inverse(&v).expect("length checked");
                out.iter_mut().for_each(|z| *z *= scale);
                out
            })
            .collect();
        Ok(Array2::from_shape_vec((n, n), rows.concat()).expect("square"))
    }
}

/// `∫ A W dp dq` for a sampled symbol.
pub fn expectation(symbol: &Array2<f64>, w: &WignerField) -> Result<f64> {
    check_shape(w.grid(), symbol.shape())?;
    Ok(Zip::from(symbol).and(w.values()).fold(0.0, |s, a, b| s + a * b) * w.grid().cell_area())
}

/// `∫ A(p, q) W dp dq` for a symbol given as a function.
pub fn expectation_fn(w: &WignerField, a: impl Fn(f64, f64) -> f64) -> f64 {
    let g = w.grid();
    let qs = g.q_nodes();
    let mut s = 0.0;
    for (k, row) in w.values().rows().into_iter().enumerate() {
        let p = g.momentum().node(k);
        s += row.iter().zip(&qs).map(|(v, q)| v * a(p, *q)).sum::<f64>();
    }
    s * g.cell_area()
}

/// First and second phase-space moments of a Wigner field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub norm: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    /// `∫q²W − (∫qW)²`; negative values are reported as they are.
    pub var_q: f64,
    pub var_p: f64,
    pub var_q_negative: bool,
}

pub fn moments(w: &WignerField) -> Moments {
    let norm = expectation_fn(w, |_, _| 1.0);
    let mean_q = expectation_fn(w, |_, q| q) / norm;
    let mean_p = expectation_fn(w, |p, _| p) / norm;
    let var_q = expectation_fn(w, |_, q| q * q) / norm - mean_q * mean_q;
    let var_p = expectation_fn(w, |p, _| p * p) / norm - mean_p * mean_p;
    Moments {
        norm,
        mean_q,
        mean_p,
        var_q,
        var_p,
        var_q_negative: var_q < 0.0,
    }
}

/// Outcome of the pure-state criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    /// `max |LHS − RHS|` over the window.
    pub max_deviation: f64,
    pub max_lhs: f64,
    pub max_rhs: f64,
    /// Mixed second derivative of the kernel phase (diagnostic only).
    pub max_phase_curvature: f64,
    pub points: usize,
}

/// Check `∂²/∂p1∂p2 ln|ρ(p1, p2)| = −c⁴p1p2 / (E1 E2 (E1+E2)²)` on the
/// kernel reconstructed from `w`.
///
/// With `p1,2 = p̄ ± P/2` the mixed derivative is `¼∂²_p̄ − ∂²_P`, taken by
/// central differences with steps `Δp` and `2Δp` and Richardson-combined.
/// Only points where the kernel exceeds `1e-6` of its maximum on the whole
/// stencil enter the window.
pub fn purity_check(w: &WignerField, transform: &WignerTransform) -> Result<PurityReport> {
    let kern = transform.kernel(w)?;
    let n = kern.nrows();
    let kmax = kern.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let thresh = 1e-6 * kmax;
    let dp = transform.grid().p_spacing();
    let m = transform.grid().momentum();
    let model = transform.model;
    let log_abs = kern.mapv(|z| z.norm().ln());
    let mut report = PurityReport {
        max_deviation: 0.0,
        max_lhs: 0.0,
        max_rhs: 0.0,
        max_phase_curvature: 0.0,
        points: 0,
    };
    for k in 2..n - 2 {
        for j in 3..n - 2 {
            let stencil = [(0i64, 0i64), (1, 0), (-1, 0), (2, 0), (-2, 0), (0, 1), (0, -1), (0, 2), (0, -2)];
            if stencil
                .iter()
                .any(|(a, b)| kern[[(k as i64 + a) as usize, (j as i64 + b) as usize]].norm() <= thresh)
            {
                continue;
            }
            let l = |a: i64, b: i64| log_abs[[(k as i64 + a) as usize, (j as i64 + b) as usize]];
            let d = |s: i64| {
                let sf = s as f64;
                (l(s, 0) - 2.0 * l(0, 0) + l(-s, 0)) / (4.0 * sf * sf * dp * dp)
                    - (l(0, s) - 2.0 * l(0, 0) + l(0, -s)) / (sf * sf * dp * dp)
            };
            let lhs = (4.0 * d(1) - d(2)) / 3.0;
            let (pb, big_p) = (m.node(k), m.node(j));
            let rhs = model.purity_rhs(pb + big_p / 2.0, pb - big_p / 2.0);
            let z = |a: usize, b: usize| kern[[a, b]];
            let c0 = z(k, j) * z(k, j);
            let phase = (z(k + 1, j) * z(k - 1, j) / c0).arg() / (4.0 * dp * dp)
                - (z(k, j + 1) * z(k, j - 1) / c0).arg() / (dp * dp);
            report.max_deviation = report.max_deviation.max((lhs - rhs).abs());
            report.max_lhs = report.max_lhs.max(lhs.abs());
            report.max_rhs = report.max_rhs.max(rhs.abs());
            report.max_phase_curvature = report.max_phase_curvature.max(phase.abs());
            report.points += 1;
        }
    }
    if report.points == 0 {
        return Err(Error::domain("kernel below threshold everywhere; logarithm undefined"));
    }
    Ok(report)
}

/// Amplification `ε(p_a, p_b) >= 1` of interference terms between
/// momentum eigenstates.
pub fn interference_gain(model: &EnergyModel, p_a: f64, p_b: f64) -> f64 {
    model.eps_factor(p_a, p_b)
}
