//! How far the matrix Moyal bracket stays from the matrix Poisson bracket as
//! `ħ → 0`.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::star::{FieldMatrix, MoyalAlgebra};
use super::symbol::MatrixSymbol;
use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;

/// Gap `max |{A,B}_M − {A,B}_P|` per `ħ`, with the fitted power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLimitReport {
    pub hbars: Vec<f64>,
    pub gaps: Vec<f64>,
    /// `max |{A,B}_M|` per `ħ`.
    pub bracket_norms: Vec<f64>,
    /// Least-squares slope of `ln gap` against `ln ħ`; `None` when every gap
    /// is zero.
    pub exponent: Option<f64>,
    /// Every Moyal bracket vanished exactly.
    pub identically_zero: bool,
}

fn max_norm(m: &FieldMatrix) -> f64 {
    m.iter()
        .flatten()
        .map(|a| a.iter().fold(0.0f64, |acc, v| acc.max(v.norm())))
        .fold(0.0, f64::max)
}

fn max_gap(a: &FieldMatrix, b: &FieldMatrix) -> f64 {
    let mut gap = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            gap = Zip::from(&a[i][j]).and(&b[i][j]).fold(gap, |m, x, y| m.max((x - y).norm()));
        }
    }
    gap
}

/// Slope of `ln y` against `ln x` by ordinary least squares over positive `y`.
pub(crate) fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Scan `ħ` and compare the matrix Moyal bracket with the Poisson one.
///
/// Pointwise-commuting symbols converge like `ħ²`; otherwise the
/// commutator term makes the Moyal bracket grow like `1/ħ`.
pub fn classical_limit_gap(
    a: &MatrixSymbol,
    b: &MatrixSymbol,
    grid: PhaseSpaceGrid,
    hbars: &[f64],
) -> Result<ClassicalLimitReport> {
    if hbars.is_empty() {
        return Err(Error::config("classical-limit scan needs at least one ħ"));
    }
    let mut alg = MoyalAlgebra::new(grid, hbars[0])?;
    let mut poisson = None;
    let mut gaps = Vec::with_capacity(hbars.len());
    let mut norms = Vec::with_capacity(hbars.len());
    for &h in hbars {
        alg = alg.with_hbar(h)?;
        if poisson.is_none() {
            poisson = Some(alg.matrix_poisson_bracket(a, b)?);
        }
        let m = alg.matrix_moyal_bracket(a, b)?;
        gaps.push(max_gap(&m, poisson.as_ref().expect("set above")));
        norms.push(max_norm(&m));
    }
    let identically_zero = norms.iter().all(|&v| v == 0.0);
    let exponent = log_log_slope(hbars, &gaps);
    Ok(ClassicalLimitReport {
        hbars: hbars.to_vec(),
        gaps,
        bracket_norms: norms,
        exponent,
        identically_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MomentumGrid;
    use crate::moyal::Symbol;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(MomentumGrid::new(64, 8.0).unwrap(), 64, 8.0).unwrap()
    }

    const HBARS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

    fn f() -> Symbol {
        Symbol::position(|q| (-q * q / 2.0).exp())
    }

    fn g() -> Symbol {
        Symbol::momentum(|p| (-p * p / 4.0).exp())
    }

    #[test]
    fn diagonal_symbols_reach_poisson() {
        let a = MatrixSymbol::diagonal(f(), g());
        let b = MatrixSymbol::diagonal(g(), f());
        let r = classical_limit_gap(&a, &b, grid(), &HBARS).unwrap();
        let e = r.exponent.unwrap();
        assert!((e - 2.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn pauli_symbols_diverge() {
        let a = MatrixSymbol::sigma_x(f());
        let b = MatrixSymbol::sigma_y(g());
        let r = classical_limit_gap(&a, &b, grid(), &HBARS).unwrap();
        let e = r.exponent.unwrap();
        assert!((e + 1.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn self_bracket_vanishes() {
        let a = MatrixSymbol::new([[f(), g()], [g(), f()]]);
        let r = classical_limit_gap(&a, &a, grid(), &HBARS).unwrap();
        assert!(r.identically_zero, "{r:?}");
        assert_eq!(r.exponent, None);
    }

    #[test]
    fn slope_fit() {
        let x = [1.0, 2.0, 4.0];
        let y = [3.0, 12.0, 48.0];
        assert!((log_log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }
}
