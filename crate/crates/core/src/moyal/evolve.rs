//! Exact spectral propagators for the even and odd Wigner components, and an
//! independent time-stepping reference.
//!
//! Momentum-diagonal Hamiltonians act on the q-Fourier modes of a Wigner
//! component independently. With `ħκ = −P` the mode of the even component
//! carries `ψ*(p+P/2) ψ(p−P/2)` and picks up
//! `exp(−(i/ħ)[E(p+ħκ/2) − E(p−ħκ/2)] t)`. The odd component carries one
//! conjugated factor from each branch, so the two energies add.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::star::MoyalAlgebra;
use super::symbol::Symbol;
use crate::error::{Error, Result};
use crate::grid::{wavenumbers, PhaseSpaceGrid};
use crate::wigner::{ComplexField, OddOrdering, WignerField};

type C = Complex64;

/// Largest `Δt·max|ΔE|/ħ` accepted by the time-stepping reference.
pub const CFL_LIMIT: f64 = 0.5;

/// Relative growth of the L² norm treated as instability.
const GROWTH_LIMIT: f64 = 1e-3;

/// Apply `mult(k, m)` to bin `m` of the q-spectrum of row `k`.
fn propagate_rows(grid: &PhaseSpaceGrid, values: &Array2<C>, mult: impl Fn(usize, usize) -> C + Sync) -> Array2<C> {
    let n = grid.n_q();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut out = values.as_standard_layout().into_owned();
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(k, mut row)| {
            let buf = row.as_slice_mut().expect("standard layout");
            fwd.process(buf);
            for (m, v) in buf.iter_mut().enumerate() {
                *v *= mult(k, m) / n as f64;
            }
            inv.process(buf);
        });
    out
}

/// Energy differences `E(p_k + ħκ_m/2) − E(p_k − ħκ_m/2)` (sign = −1) or sums (sign = +1).
fn energy_table(grid: &PhaseSpaceGrid, energy: &(impl Fn(f64) -> f64 + Sync), hbar: f64, sign: f64) -> Array2<f64> {
    let p = grid.p_nodes();
    let kappa = wavenumbers(grid.n_q(), grid.q_spacing());
    Array2::from_shape_fn(grid.shape(), |(k, m)| {
        let s = 0.5 * hbar * kappa[m];
        energy(p[k] + s) + sign * energy(p[k] - s)
    })
}

fn check_inputs(grid: &PhaseSpaceGrid, t: f64, hbar: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::domain(format!("time must be finite, got {t}")));
    }
    grid.require_conjugate(hbar)
}

/// Propagate an even component by `t` under `E(p)`.
///
/// The κ = 0 column is untouched, so the phase-space integral is conserved
/// to rounding.
pub fn evolve_even(w: &WignerField, energy: impl Fn(f64) -> f64 + Sync, t: f64, hbar: f64) -> Result<WignerField> {
    let grid = *w.grid();
    check_inputs(&grid, t, hbar)?;
    let table = energy_table(&grid, &energy, hbar, -1.0);
    let complex = w.values().mapv(|v| C::new(v, 0.0));
    let out = propagate_rows(&grid, &complex, |k, m| C::from_polar(1.0, -table[[k, m]] * t / hbar));
    WignerField::new(grid, out.mapv(|v| v.re))
}

/// Propagate an odd component built with `ordering` by `t`.
///
/// `MinusPlus` (`ψ₋* ψ₊`) modes pick up `exp(−(i/ħ)[E(p+ħκ/2) + E(p−ħκ/2)] t)`;
/// `PlusMinus` is its conjugate partner and rotates the other way.
pub fn evolve_odd(
    w: &ComplexField,
    energy: impl Fn(f64) -> f64 + Sync,
    t: f64,
    hbar: f64,
    ordering: OddOrdering,
) -> Result<ComplexField> {
    let grid = *w.grid();
    check_inputs(&grid, t, hbar)?;
    let table = energy_table(&grid, &energy, hbar, 1.0);
    let dir = match ordering {
        OddOrdering::MinusPlus => -1.0,
        OddOrdering::PlusMinus => 1.0,
    };
    let out = propagate_rows(&grid, w.values(), |k, m| C::from_polar(1.0, dir * table[[k, m]] * t / hbar));
    ComplexField::new(grid, out)
}

/// `∂_t W = {E(p), W}_M` evaluated with the star product.
pub fn even_time_derivative(w: &WignerField, energy: impl Fn(f64) -> f64 + Send + Sync + 'static, hbar: f64) -> Result<WignerField> {
    let alg = MoyalAlgebra::new(*w.grid(), hbar)?;
    let field = Symbol::Field(w.values().mapv(|v| C::new(v, 0.0)));
    let b = alg.moyal_bracket(&Symbol::momentum(energy), &field)?;
    WignerField::new(*w.grid(), alg.sample(&b)?.mapv(|v| v.re))
}

/// Second-order (Heun) integration of `∂_t W = {E, W}_M` with `steps` equal
/// steps.
///
/// The bracket generator is diagonal on q-Fourier modes, so the stepping is
/// carried out there. Stability requires `Δt·max|ΔE|/ħ ≤ 0.5` over the grid;
/// larger steps are rejected up front, and L² growth beyond 1e−3 during the
/// run is reported as instability.
pub fn evolve_timestep_reference(
    w: &WignerField,
    energy: impl Fn(f64) -> f64 + Sync,
    t: f64,
    steps: usize,
    hbar: f64,
) -> Result<WignerField> {
    let grid = *w.grid();
    check_inputs(&grid, t, hbar)?;
    if steps == 0 {
        return Err(Error::StepSize("at least one step is required".into()));
    }
    if t == 0.0 {
        return Ok(w.clone());
    }
    let dt = t / steps as f64;
    let table = energy_table(&grid, &energy, hbar, -1.0);
    let worst = table.iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt.abs() / hbar;
    if worst > CFL_LIMIT {
        return Err(Error::StepSize(format!(
            "Δt·max|ΔE|/ħ = {worst:.3} exceeds {CFL_LIMIT}; use at least {} steps",
            (steps as f64 * worst / CFL_LIMIT).ceil()
        )));
    }
    // One Heun step on a mode with generator z: 1 + z + z²/2.
    let amp = table.mapv(|de| {
        let z = C::new(0.0, -de * dt / hbar);
        1.0 + z + z * z / 2.0
    });

    let n = grid.n_q();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut spec = w.values().mapv(|v| C::new(v, 0.0));
    spec.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        fwd.process(row.as_slice_mut().expect("standard layout"));
    });
    let norm0: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
    for step in 0..steps {
        spec.zip_mut_with(&amp, |c, a| *c *= a);
        let norm: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        if norm0 > 0.0 && (norm / norm0).sqrt() - 1.0 > GROWTH_LIMIT {
            return Err(Error::StepSize(format!(
                "norm grew by {:.2e} after {} of {steps} steps",
                (norm / norm0).sqrt() - 1.0,
                step + 1
            )));
        }
    }
    spec.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut row| {
        let buf = row.as_slice_mut().expect("standard layout");
        inv.process(buf);
        for v in buf.iter_mut() {
            *v /= n as f64;
        }
    });
    WignerField::new(grid, spec.mapv(|v| v.re))
}
