//! Moyal star product on a phase-space grid.
//!
//! Convention: `A ⋆ B = A exp((iħ/2)(←∂q →∂p − ←∂p →∂q)) B`. Products with
//! functions of one variable act on Fourier modes of the other factor as exact
//! shifts, e.g. `f(p) ⋆ e^{iκq} = f(p + ħκ/2) e^{iκq}`. Two sampled fields are
//! multiplied by twisted convolution of their Fourier coefficients.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::symbol::{Func, MatrixSymbol, Polynomial, Symbol};
use crate::error::{Error, Result};
use crate::grid::{fft_index, wavenumbers, PhaseSpaceGrid};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Coefficients below this fraction of the largest one are treated as zero
/// by the field-field product.
const SPARSITY: f64 = 1e-12;

/// Pairs of coefficients above which the field-field product gives up.
const MAX_PAIRS: usize = 1 << 31;

/// 2×2 matrix of sampled fields.
pub type FieldMatrix = [[Array2<C>; 2]; 2];

#[derive(Clone)]
struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }
}

/// Star-product algebra of symbols sampled on one grid at fixed `ħ`.
///
/// Sampled fields are treated as periodic, band-limited functions; the grid
/// does not have to be conjugate.
#[derive(Clone)]
pub struct MoyalAlgebra {
    grid: PhaseSpaceGrid,
    hbar: f64,
    p_nodes: Vec<f64>,
    q_nodes: Vec<f64>,
    /// Wavenumbers conjugate to p (length n_p).
    xi: Vec<f64>,
    /// Wavenumbers conjugate to q (length n_q).
    kappa: Vec<f64>,
    plan_p: Plans,
    plan_q: Plans,
}

impl fmt::Debug for MoyalAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MoyalAlgebra")
            .field("grid", &self.grid)
            .field("hbar", &self.hbar)
            .finish()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// First derivative by fourth-order Richardson central differences.
fn closure_derivative(f: &Func, x: f64) -> C {
    let h = 1e-3 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) * (8.0 / (12.0 * h)) - (f(x + 2.0 * h) - f(x - 2.0 * h)) / (12.0 * h)
}

impl MoyalAlgebra {
    pub fn new(grid: PhaseSpaceGrid, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::domain(format!("ħ must be positive, got {hbar}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            hbar,
            p_nodes: grid.p_nodes(),
            q_nodes: grid.q_nodes(),
            xi: wavenumbers(grid.n_p(), grid.p_spacing()),
            kappa: wavenumbers(grid.n_q(), grid.q_spacing()),
            plan_p: Plans::new(&mut planner, grid.n_p()),
            plan_q: Plans::new(&mut planner, grid.n_q()),
        })
    }

    /// Same grid and plans at a different `ħ`.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::domain(format!("ħ must be positive, got {hbar}")));
        }
        Ok(Self { hbar, ..self.clone() })
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn shape(&self) -> (usize, usize) {
        self.grid.shape()
    }

    fn check(&self, a: &Array2<C>) -> Result<()> {
        if a.dim() != self.shape() {
            return Err(Error::dimension(format!(
                "field of shape {:?} on a {:?} grid",
                a.dim(),
                self.shape()
            )));
        }
        Ok(())
    }

    /// Sample any symbol on the grid, rows indexed by momentum.
    pub fn sample(&self, s: &Symbol) -> Result<Array2<C>> {
        let (np, nq) = self.shape();
        Ok(match s {
            Symbol::Polynomial(poly) => {
                Array2::from_shape_fn((np, nq), |(k, l)| poly.eval(self.p_nodes[k], self.q_nodes[l]))
            }
            Symbol::Momentum(f) => {
                let col: Vec<C> = self.p_nodes.iter().map(|&p| f(p)).collect();
                Array2::from_shape_fn((np, nq), |(k, _)| col[k])
            }
            Symbol::Position(g) => {
                let row: Vec<C> = self.q_nodes.iter().map(|&q| g(q)).collect();
                Array2::from_shape_fn((np, nq), |(_, l)| row[l])
            }
            Symbol::Field(a) => {
                self.check(a)?;
                a.clone()
            }
        })
    }

    /// Multiply the q-spectrum of every row: bin `m` of row `k` by `mult(k, m)`.
    pub(crate) fn q_multiplier(&self, a: &Array2<C>, mult: impl Fn(usize, usize) -> C + Sync) -> Array2<C> {
        let nq = self.grid.n_q();
        let mut out = a.as_standard_layout().into_owned();
        let plans = &self.plan_q;
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut row)| {
                let buf = row.as_slice_mut().expect("standard layout");
                plans.fwd.process(buf);
                for (m, v) in buf.iter_mut().enumerate() {
                    *v *= mult(k, m) / nq as f64;
                }
                plans.inv.process(buf);
            });
        out
    }

    /// Multiply the p-spectrum of every column: bin `m` of column `l` by `mult(l, m)`.
    pub(crate) fn p_multiplier(&self, a: &Array2<C>, mult: impl Fn(usize, usize) -> C + Sync) -> Array2<C> {
        let np = self.grid.n_p();
        let mut t = a.t().as_standard_layout().into_owned();
        let plans = &self.plan_p;
        t.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(l, mut col)| {
                let buf = col.as_slice_mut().expect("standard layout");
                plans.fwd.process(buf);
                for (m, v) in buf.iter_mut().enumerate() {
                    *v *= mult(l, m) / np as f64;
                }
                plans.inv.process(buf);
            });
        t.t().as_standard_layout().into_owned()
    }

    /// Normalized 2D spectrum `a = Σ c_ij e^{i(ξ_i p + κ_j q)}` (up to the
    /// grid-origin phase).
    fn spectrum(&self, a: &Array2<C>) -> Array2<C> {
        let mut s = a.as_standard_layout().into_owned();
        let (np, nq) = self.shape();
        s.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
            self.plan_q.fwd.process(row.as_slice_mut().expect("standard layout"));
        });
        let mut t = s.t().as_standard_layout().into_owned();
        t.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut col| {
            self.plan_p.fwd.process(col.as_slice_mut().expect("standard layout"));
        });
        t.t().as_standard_layout().into_owned() / C::new((np * nq) as f64, 0.0)
    }

    fn from_spectrum(&self, s: &Array2<C>) -> Array2<C> {
        let mut t = s.t().as_standard_layout().into_owned();
        t.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut col| {
            self.plan_p.inv.process(col.as_slice_mut().expect("standard layout"));
        });
        let mut out = t.t().as_standard_layout().into_owned();
        out.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
            self.plan_q.inv.process(row.as_slice_mut().expect("standard layout"));
        });
        out
    }

    /// Spectral mixed derivative `∂_q^dq ∂_p^dp` of a sampled field.
    /// Nyquist modes are dropped for odd orders.
    pub fn field_derivative(&self, a: &Array2<C>, dq: u32, dp: u32) -> Result<Array2<C>> {
        self.check(a)?;
        if dq == 0 && dp == 0 {
            return Ok(a.clone());
        }
        let (np, nq) = self.shape();
        let factor = |k: f64, order: u32, nyquist: bool| -> C {
            if order == 0 {
                C::new(1.0, 0.0)
            } else if nyquist && order % 2 == 1 {
                ZERO
            } else {
                C::new(0.0, k).powu(order)
            }
        };
        let mut out = a.clone();
        if dq > 0 {
            out = self.q_multiplier(&out, |_, m| factor(self.kappa[m], dq, 2 * m == nq));
        }
        if dp > 0 {
            out = self.p_multiplier(&out, |_, m| factor(self.xi[m], dp, 2 * m == np));
        }
        Ok(out)
    }

    /// `(∂_q s, ∂_p s)` sampled on the grid. Closures are differentiated by
    /// fourth-order central differences, polynomials exactly, fields spectrally.
    pub fn gradient(&self, s: &Symbol) -> Result<(Array2<C>, Array2<C>)> {
        let (np, nq) = self.shape();
        Ok(match s {
            Symbol::Polynomial(poly) => (
                self.sample(&Symbol::Polynomial(poly.derivative(1, 0)))?,
                self.sample(&Symbol::Polynomial(poly.derivative(0, 1)))?,
            ),
            Symbol::Momentum(f) => {
                let col: Vec<C> = self.p_nodes.iter().map(|&p| closure_derivative(f, p)).collect();
                (Array2::zeros((np, nq)), Array2::from_shape_fn((np, nq), |(k, _)| col[k]))
            }
            Symbol::Position(g) => {
                let row: Vec<C> = self.q_nodes.iter().map(|&q| closure_derivative(g, q)).collect();
                (Array2::from_shape_fn((np, nq), |(_, l)| row[l]), Array2::zeros((np, nq)))
            }
            Symbol::Field(a) => (self.field_derivative(a, 1, 0)?, self.field_derivative(a, 0, 1)?),
        })
    }

    /// `Σ c_i s_i`, keeping exact representations when all terms share one.
    pub fn combine(&self, terms: &[(C, &Symbol)]) -> Result<Symbol> {
        if terms.iter().all(|(_, s)| matches!(s, Symbol::Polynomial(_))) {
            let mut acc = Polynomial::zero();
            for (c, s) in terms {
                if let Symbol::Polynomial(p) = s {
                    acc = acc.add(&p.scale(*c));
                }
            }
            return Ok(Symbol::Polynomial(acc));
        }
        let live: Vec<(C, &Symbol)> = terms.iter().filter(|(_, s)| !s.is_zero()).copied().collect();
        if !live.is_empty() && live.iter().all(|(_, s)| matches!(s, Symbol::Momentum(_))) {
            let fs: Vec<(C, Func)> = live
                .iter()
                .map(|(c, s)| match s {
                    Symbol::Momentum(f) => (*c, f.clone()),
                    _ => unreachable!(),
                })
                .collect();
            return Ok(Symbol::Momentum(Arc::new(move |p| fs.iter().map(|(c, f)| c * f(p)).sum())));
        }
        if !live.is_empty() && live.iter().all(|(_, s)| matches!(s, Symbol::Position(_))) {
            let gs: Vec<(C, Func)> = live
                .iter()
                .map(|(c, s)| match s {
                    Symbol::Position(g) => (*c, g.clone()),
                    _ => unreachable!(),
                })
                .collect();
            return Ok(Symbol::Position(Arc::new(move |q| gs.iter().map(|(c, g)| c * g(q)).sum())));
        }
        let mut acc = Array2::zeros(self.shape());
        for (c, s) in live {
            let a = self.sample(s)?;
            acc.zip_mut_with(&a, |x, y| *x += c * y);
        }
        Ok(Symbol::Field(acc))
    }

    /// `A ⋆ B`.
    pub fn star(&self, a: &Symbol, b: &Symbol) -> Result<Symbol> {
        use Symbol::*;
        if a.is_zero() || b.is_zero() {
            return Ok(Symbol::zero());
        }
        let h = self.hbar;
        Ok(match (a, b) {
            (Polynomial(x), Polynomial(y)) => Polynomial(x.star(y, h)),
            (Momentum(f), Momentum(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Momentum(Arc::new(move |p| f(p) * g(p)))
            }
            (Position(f), Position(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Position(Arc::new(move |q| f(q) * g(q)))
            }
            (Polynomial(x), Momentum(f)) | (Momentum(f), Polynomial(x)) => {
                if x.degree_q() > 0 {
                    return Err(Error::Unsupported(
                        "star product of a q-dependent polynomial with a momentum closure".into(),
                    ));
                }
                let (x, f) = (x.clone(), f.clone());
                Momentum(Arc::new(move |p| x.eval(p, 0.0) * f(p)))
            }
            (Polynomial(x), Position(g)) if x.degree_p() == 0 => {
                let (x, g) = (x.clone(), g.clone());
                Position(Arc::new(move |q| x.eval(0.0, q) * g(q)))
            }
            (Position(g), Polynomial(x)) if x.degree_p() == 0 => {
                let (x, g) = (x.clone(), g.clone());
                Position(Arc::new(move |q| x.eval(0.0, q) * g(q)))
            }
            (Polynomial(x), Position(_)) => Field(self.poly_field(x, &self.sample(b)?, true)?),
            (Position(_), Polynomial(x)) => Field(self.poly_field(x, &self.sample(a)?, false)?),
            (Momentum(f), Position(_)) => Field(self.momentum_left(f, &self.sample(b)?)),
            (Position(_), Momentum(f)) => Field(self.momentum_right(&self.sample(a)?, f)),
            (Momentum(f), Field(y)) => {
                self.check(y)?;
                Field(self.momentum_left(f, y))
            }
            (Field(x), Momentum(f)) => {
                self.check(x)?;
                Field(self.momentum_right(x, f))
            }
            (Position(g), Field(y)) => {
                self.check(y)?;
                Field(self.position_left(g, y))
            }
            (Field(x), Position(g)) => {
                self.check(x)?;
                Field(self.position_right(x, g))
            }
            (Polynomial(x), Field(y)) => Field(self.poly_field(x, y, true)?),
            (Field(x), Polynomial(y)) => Field(self.poly_field(y, x, false)?),
            (Field(x), Field(y)) => Field(self.field_field(x, y)?),
        })
    }

    /// `f(p) ⋆ F`: mode κ of F picks up `f(p + ħκ/2)`.
    fn momentum_left(&self, f: &Func, y: &Array2<C>) -> Array2<C> {
        let h = self.hbar;
        self.q_multiplier(y, |k, m| f(self.p_nodes[k] + 0.5 * h * self.kappa[m]))
    }

    /// `F ⋆ f(p)`: mode κ of F picks up `f(p − ħκ/2)`.
    fn momentum_right(&self, x: &Array2<C>, f: &Func) -> Array2<C> {
        let h = self.hbar;
        self.q_multiplier(x, |k, m| f(self.p_nodes[k] - 0.5 * h * self.kappa[m]))
    }

    /// `g(q) ⋆ F`: mode ξ of F picks up `g(q − ħξ/2)`.
    fn position_left(&self, g: &Func, y: &Array2<C>) -> Array2<C> {
        let h = self.hbar;
        self.p_multiplier(y, |l, m| g(self.q_nodes[l] - 0.5 * h * self.xi[m]))
    }

    /// `F ⋆ g(q)`: mode ξ of F picks up `g(q + ħξ/2)`.
    fn position_right(&self, x: &Array2<C>, g: &Func) -> Array2<C> {
        let h = self.hbar;
        self.p_multiplier(x, |l, m| g(self.q_nodes[l] + 0.5 * h * self.xi[m]))
    }

    /// Terminating series for a polynomial times a field; `poly_left` selects
    /// `P ⋆ F` over `F ⋆ P`.
    fn poly_field(&self, poly: &Polynomial, field: &Array2<C>, poly_left: bool) -> Result<Array2<C>> {
        self.check(field)?;
        let order = poly.degree_q() + poly.degree_p();
        let mut out = Array2::zeros(self.shape());
        let mut pref = C::new(1.0, 0.0);
        for n in 0..=order {
            if n > 0 {
                pref *= C::new(0.0, self.hbar / 2.0) / n as f64;
            }
            for k in 0..=n {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                // Left factor gets ∂q^{n-k} ∂p^k, right factor ∂p^{n-k} ∂q^k.
                let (pq, pp, fq, fp) = if poly_left { (n - k, k, k, n - k) } else { (k, n - k, n - k, k) };
                let dpoly = poly.derivative(pq, pp);
                if dpoly.is_zero() {
                    continue;
                }
                let pa = self.sample(&Symbol::Polynomial(dpoly))?;
                let fa = self.field_derivative(field, fq, fp)?;
                let c = pref * binomial(n, k) * sign;
                Zip::from(&mut out).and(&pa).and(&fa).for_each(|o, &x, &y| *o += c * x * y);
            }
        }
        Ok(out)
    }

    fn nonzero_modes(&self, s: &Array2<C>) -> Vec<(i64, i64, C)> {
        let (np, nq) = self.shape();
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let cut = SPARSITY * peak;
        let mut out = Vec::new();
        for ((i, j), &v) in s.indexed_iter() {
            if v.norm() > cut && v.norm() > 0.0 {
                out.push((fft_index(i, np), fft_index(j, nq), v));
            }
        }
        out
    }

    /// Twisted convolution of two band-limited fields.
    fn field_field(&self, x: &Array2<C>, y: &Array2<C>) -> Result<Array2<C>> {
        self.check(x)?;
        self.check(y)?;
        let (np, nq) = self.shape();
        let ma = self.nonzero_modes(&self.spectrum(x));
        let mb = self.nonzero_modes(&self.spectrum(y));
        if ma.is_empty() || mb.is_empty() {
            return Ok(Array2::zeros((np, nq)));
        }
        let band = |m: &[(i64, i64, C)]| {
            m.iter()
                .fold((0i64, 0i64), |(bp, bq), &(i, j, _)| (bp.max(i.abs()), bq.max(j.abs())))
        };
        let (ap, aq) = band(&ma);
        let (bp, bq) = band(&mb);
        if ap + bp >= (np / 2) as i64 || aq + bq >= (nq / 2) as i64 {
            let need = (2 * (ap + bp).max(aq + bq) + 2) as usize;
            return Err(Error::resolution(
                format!(
                    "star product of fields aliases: bands ({ap},{aq}) + ({bp},{bq}) exceed half the grid ({np}x{nq})"
                ),
                Some(need.next_power_of_two()),
            ));
        }
        if ma.len().saturating_mul(mb.len()) > MAX_PAIRS {
            return Err(Error::resolution(
                format!("star product of fields needs {} x {} mode pairs", ma.len(), mb.len()),
                None,
            ));
        }
        let dxi = self.xi[1];
        let dkappa = self.kappa[1];
        let half_h = 0.5 * self.hbar;
        let wrap = |i: i64, n: usize| i.rem_euclid(n as i64) as usize;
        // Chunks are reduced in order so the result is deterministic.
        let partials: Vec<Array2<C>> = ma
            .par_chunks(64)
            .map(|chunk| {
                let mut acc = Array2::<C>::zeros((np, nq));
                for &(i1, j1, a) in chunk {
                    for &(i2, j2, b) in &mb {
                        let phase = half_h * dxi * dkappa * (i1 * j2 - j1 * i2) as f64;
                        acc[[wrap(i1 + i2, np), wrap(j1 + j2, nq)]] += a * b * C::from_polar(1.0, phase);
                    }
                }
                acc
            })
            .collect();
        let mut total = Array2::<C>::zeros((np, nq));
        for part in &partials {
            total += part;
        }
        Ok(self.from_spectrum(&total))
    }

    /// `{A, B}_M = (A⋆B − B⋆A)/(iħ)`.
    pub fn moyal_bracket(&self, a: &Symbol, b: &Symbol) -> Result<Symbol> {
        let ab = self.star(a, b)?;
        let ba = self.star(b, a)?;
        let s = C::new(0.0, -1.0 / self.hbar);
        self.combine(&[(s, &ab), (-s, &ba)])
    }

    /// Symmetrized product `(A⋆B + B⋆A)/2`.
    pub fn anti_moyal_bracket(&self, a: &Symbol, b: &Symbol) -> Result<Symbol> {
        let ab = self.star(a, b)?;
        let ba = self.star(b, a)?;
        let half = C::new(0.5, 0.0);
        self.combine(&[(half, &ab), (half, &ba)])
    }

    /// Classical bracket `∂qA ∂pB − ∂pA ∂qB`, sampled.
    pub fn poisson_bracket(&self, a: &Symbol, b: &Symbol) -> Result<Array2<C>> {
        let (aq, ap) = self.gradient(a)?;
        let (bq, bp) = self.gradient(b)?;
        Ok(&aq * &bp - &ap * &bq)
    }

    /// Matrix star product `(A⋆B)_ij = Σ_k A_ik ⋆ B_kj`.
    pub fn matrix_star(&self, a: &MatrixSymbol, b: &MatrixSymbol) -> Result<[[Symbol; 2]; 2]> {
        let one = C::new(1.0, 0.0);
        let entry = |i: usize, j: usize| -> Result<Symbol> {
            let t0 = self.star(&a.entries[i][0], &b.entries[0][j])?;
            let t1 = self.star(&a.entries[i][1], &b.entries[1][j])?;
            self.combine(&[(one, &t0), (one, &t1)])
        };
        Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
    }

    /// Matrix Moyal bracket `(A⋆B − B⋆A)/(iħ)` with matrix multiplication order kept.
    pub fn matrix_moyal_bracket(&self, a: &MatrixSymbol, b: &MatrixSymbol) -> Result<FieldMatrix> {
        let ab = self.matrix_star(a, b)?;
        let ba = self.matrix_star(b, a)?;
        let s = C::new(0.0, -1.0 / self.hbar);
        let entry = |i: usize, j: usize| -> Result<Array2<C>> {
            let d = self.combine(&[(s, &ab[i][j]), (-s, &ba[i][j])])?;
            self.sample(&d)
        };
        Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
    }

    /// Matrix Poisson bracket `Σ_k (∂qA_ik ∂pB_kj − ∂pA_ik ∂qB_kj)`.
    pub fn matrix_poisson_bracket(&self, a: &MatrixSymbol, b: &MatrixSymbol) -> Result<FieldMatrix> {
        let ga: Vec<Vec<(Array2<C>, Array2<C>)>> = a
            .entries
            .iter()
            .map(|row| row.iter().map(|s| self.gradient(s)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let gb: Vec<Vec<(Array2<C>, Array2<C>)>> = b
            .entries
            .iter()
            .map(|row| row.iter().map(|s| self.gradient(s)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let entry = |i: usize, j: usize| -> Array2<C> {
            let mut acc = Array2::zeros(self.shape());
            for k in 0..2 {
                let (aq, ap) = &ga[i][k];
                let (bq, bp) = &gb[k][j];
                acc = acc + aq * bp - ap * bq;
            }
            acc
        };
        Ok([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
    }
}
