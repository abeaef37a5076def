//! Wavefunctions stored per charge branch: Gaussian packets, relativistic
//! coherent states, displaced number states and Fock expansions of the
//! magnetic rotator.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{spectral_derivative, MomentumGrid};
use crate::spectral::EnergyModel;
use crate::units::UnitSystem;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Sign of the charge (equivalently of the energy) of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Momentum amplitudes `φ₊`, `φ₋` on a grid.
///
/// Physical states occupy one branch; two-branch states exist only to probe
/// the odd Wigner components.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeBranchState {
    grid: MomentumGrid,
    units: UnitSystem,
    plus: Vec<C>,
    minus: Vec<C>,
}

impl ChargeBranchState {
    pub fn new(grid: MomentumGrid, units: UnitSystem, plus: Vec<C>, minus: Vec<C>) -> Result<Self> {
        if plus.len() != grid.len() || minus.len() != grid.len() {
            return Err(Error::dimension(format!(
                "amplitudes of length {}/{} on a {}-node grid",
                plus.len(),
                minus.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, units, plus, minus })
    }

    /// One occupied branch, the other identically zero.
    pub fn single(grid: MomentumGrid, units: UnitSystem, branch: Branch, amp: Vec<C>) -> Result<Self> {
        let zeros = vec![ZERO; amp.len()];
        match branch {
            Branch::Positive => Self::new(grid, units, amp, zeros),
            Branch::Negative => Self::new(grid, units, zeros, amp),
        }
    }

    /// Equal-weight particle/antiparticle superposition (diagnostics only).
    pub fn two_branch(a: &Self, b: &Self) -> Result<Self> {
        if a.grid != b.grid {
            return Err(Error::dimension("states live on different grids"));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = a.plus.iter().zip(&b.plus).map(|(x, y)| (x + y) * s).collect();
        let minus = a.minus.iter().zip(&b.minus).map(|(x, y)| (x + y) * s).collect();
        Self::new(a.grid, a.units, plus, minus)
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    pub fn plus(&self) -> &[C] {
        &self.plus
    }

    pub fn minus(&self) -> &[C] {
        &self.minus
    }

    pub fn component(&self, branch: Branch) -> &[C] {
        match branch {
            Branch::Positive => &self.plus,
            Branch::Negative => &self.minus,
        }
    }

    fn sq_norm(&self, v: &[C]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// `(∫|φ₊|², ∫|φ₋|²)`.
    pub fn branch_norms(&self) -> (f64, f64) {
        (self.sq_norm(&self.plus), self.sq_norm(&self.minus))
    }

    /// `∫(|φ₊|² − |φ₋|²) dp`.
    pub fn charge_norm(&self) -> f64 {
        let (a, b) = self.branch_norms();
        a - b
    }

    /// The occupied branch of a superselected state.
    pub fn branch(&self) -> Option<Branch> {
        match (self.plus.iter().any(|z| *z != ZERO), self.minus.iter().any(|z| *z != ZERO)) {
            (true, false) => Some(Branch::Positive),
            (false, true) => Some(Branch::Negative),
            _ => None,
        }
    }

    fn require_branch(&self, branch: Branch) -> Result<&[C]> {
        let v = self.component(branch);
        if v.iter().all(|z| *z == ZERO) {
            return Err(Error::domain(format!("{branch:?} branch is empty")));
        }
        Ok(v)
    }

    /// `⟨f(p)⟩` over one branch, normalised by that branch's norm.
    pub fn momentum_mean(&self, branch: Branch, f: impl Fn(f64) -> f64) -> Result<f64> {
        let v = self.require_branch(branch)?;
        let num: f64 = v.iter().enumerate().map(|(k, z)| z.norm_sqr() * f(self.grid.node(k))).sum();
        let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Ok(num / den)
    }

    /// Newton–Wigner position mean `⟨iħ ∂/∂p⟩` (spectral derivative).
    pub fn position_mean(&self, branch: Branch) -> Result<f64> {
        let v = self.require_branch(branch)?;
        let d = spectral_derivative(v, self.grid.spacing());
        let num: C = v.iter().zip(&d).map(|(a, b)| a.conj() * b * C::new(0.0, self.units.hbar)).sum();
        let den: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Ok(num.re / den)
    }

    /// Free evolution: `φ₊ e^{−iE t/ħ}`, `φ₋ e^{+iE t/ħ}`.
    pub fn evolved(&self, t: f64) -> Self {
        let mut out = self.clone();
        for (k, (a, b)) in out.plus.iter_mut().zip(out.minus.iter_mut()).enumerate() {
            let w = self.units.energy(self.grid.node(k)) * t / self.units.hbar;
            let ph = C::from_polar(1.0, -w);
            *a *= ph;
            *b *= ph.conj();
        }
        out
    }

    /// `inner(a, b) = ∫ φ_a^* φ_b dp` on one branch.
    pub fn overlap(&self, other: &Self, branch: Branch) -> Result<C> {
        if self.grid != other.grid {
            return Err(Error::dimension("states live on different grids"));
        }
        let s: C = self
            .component(branch)
            .iter()
            .zip(other.component(branch))
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.spacing())
    }

    /// `p,re,im` rows for one branch, preceded by `#` metadata lines.
    pub fn write_csv<W: Write>(&self, mut w: W, branch: Branch, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "p,re,im")?;
        for (k, z) in self.component(branch).iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.grid.node(k), z.re, z.im)?;
        }
        Ok(())
    }
}

/// Gaussian packet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    /// Position width; the momentum density has standard deviation `ħ/(√2 σ)`.
    pub sigma: f64,
    pub p_bar: f64,
    pub q_bar: f64,
    pub branch: Branch,
}

impl GaussianSpec {
    /// Packet centred at the origin with `σ = λ_c / λ`.
    pub fn from_localization(lambda: f64, units: &UnitSystem) -> Result<Self> {
        Ok(Self {
            sigma: units.width_for_localization(lambda)?,
            p_bar: 0.0,
            q_bar: 0.0,
            branch: Branch::Positive,
        })
    }

    pub fn localization(&self, units: &UnitSystem) -> f64 {
        units.compton_length() / self.sigma
    }
}

fn check_resolution(grid: &MomentumGrid, units: &UnitSystem, sigma: f64, p_bar: f64, q_bar: f64, extra: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let h = units.hbar;
    let dp_max = h / (4.0 * sigma);
    if grid.spacing() >= dp_max {
        let need = (2.0 * grid.p_max() / dp_max).ceil() as usize;
        return Err(Error::resolution(
            format!("Δp = {:.4e} does not resolve width σ = {sigma} (need Δp < {dp_max:.4e})", grid.spacing()),
            Some(need.next_power_of_two()),
        ));
    }
    let support = p_bar.abs() + (6.0 + extra) * h / sigma;
    if grid.p_max() <= support {
        let need = (2.0 * support / grid.spacing()).ceil() as usize + 1;
        return Err(Error::resolution(
            format!("p_max = {} does not cover the packet support {support:.4e}", grid.p_max()),
            Some(need.next_power_of_two()),
        ));
    }
    if grid.conjugate_q_max(h) <= q_bar.abs() + (6.0 + extra) * sigma {
        return Err(Error::resolution(
            format!("position window {:.4e} too small for q̄ = {q_bar}", grid.conjugate_q_max(h)),
            None,
        ));
    }
    Ok(())
}

/// `φ(p) = (σ²/(πħ²))^{1/4} exp(−σ²(p−p̄)²/(2ħ²) − i q̄ p/ħ)` on one branch.
pub fn gaussian_state(spec: &GaussianSpec, grid: &MomentumGrid, units: &UnitSystem) -> Result<ChargeBranchState> {
    displaced_number_state(0, spec.q_bar, spec.p_bar, spec.sigma, spec.branch, grid, units)
}

/// Parameters of a free relativistic coherent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentSpec {
    pub alpha: C,
    pub sigma: f64,
    pub branch: Branch,
}

impl CoherentSpec {
    /// `(q̄, p̄) = (√2 σ Re α, √2 ħ Im α / σ)`.
    pub fn center(&self, hbar: f64) -> (f64, f64) {
        let s2 = 2f64.sqrt();
        (s2 * self.sigma * self.alpha.re, s2 * hbar * self.alpha.im / self.sigma)
    }

    pub fn gaussian(&self, hbar: f64) -> GaussianSpec {
        let (q_bar, p_bar) = self.center(hbar);
        GaussianSpec {
            sigma: self.sigma,
            p_bar,
            q_bar,
            branch: self.branch,
        }
    }
}

/// Eigenstate of the even annihilation operator within one branch, which
/// acts there as `(q_NW/σ + iσp/ħ)/√2`: a Gaussian centred per
/// [`CoherentSpec::center`].
pub fn free_coherent_state(spec: &CoherentSpec, grid: &MomentumGrid, units: &UnitSystem) -> Result<ChargeBranchState> {
    gaussian_state(&spec.gaussian(units.hbar), grid, units)
}

fn hermite(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Hermite–Gaussian of width `σ` displaced to `(q̄, p̄)`:
/// `(−i)^n (σ/ħ)^{1/2} (2^n n! √π)^{−1/2} H_n(x) e^{−x²/2} e^{−i q̄ p/ħ}`,
/// `x = σ(p − p̄)/ħ`.
pub fn displaced_number_state(
    n: usize,
    q_bar: f64,
    p_bar: f64,
    sigma: f64,
    branch: Branch,
    grid: &MomentumGrid,
    units: &UnitSystem,
) -> Result<ChargeBranchState> {
    if n > 12 {
        return Err(Error::domain(format!("number states are limited to n <= 12, got {n}")));
    }
    check_resolution(grid, units, sigma, p_bar, q_bar, (2.0 * n as f64 + 1.0).sqrt() - 1.0)?;
    let h = units.hbar;
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let norm = (sigma / h).sqrt() / (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
    let phase_n = C::new(0.0, -1.0).powu(n as u32);
    let amp = grid
        .nodes()
        .iter()
        .map(|&p| {
            let x = sigma * (p - p_bar) / h;
            phase_n * C::from_polar(norm * hermite(n, x) * (-0.5 * x * x).exp(), -q_bar * p / h)
        })
        .collect();
    ChargeBranchState::single(*grid, *units, branch, amp)
}

/// Positive-branch state expanded over Landau levels `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExpansion {
    coeffs: Vec<C>,
}

impl FockExpansion {
    pub fn new(coeffs: Vec<C>) -> Result<Self> {
        let norm: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if coeffs.is_empty() || !(norm > 0.0) {
            return Err(Error::domain("Fock expansion needs a nonzero coefficient"));
        }
        let s = norm.sqrt().recip();
        Ok(Self {
            coeffs: coeffs.into_iter().map(|z| z * s).collect(),
        })
    }

    pub fn coefficients(&self) -> &[C] {
        &self.coeffs
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `|c_{n_max}|²`.
    pub fn tail(&self) -> f64 {
        self.coeffs.last().map_or(0.0, |z| z.norm_sqr())
    }
}

/// Unnormalised `αⁿ / (√(n!) f(n)!)` by recursion.
fn rotator_coefficients(alpha: C, model: &EnergyModel, n_max: usize) -> Vec<C> {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(C::new(1.0, 0.0));
    for n in 1..=n_max {
        let f = model.level_eps(n - 1, n);
        let next = c[n - 1] * alpha / ((n as f64).sqrt() * f);
        c.push(next);
    }
    c
}

/// Nonlinear coherent state of the rotator: eigenstate of the even ladder
/// operator, `c_n ∝ αⁿ / (√(n!) f(n)!)`.
pub fn rotator_coherent_state(alpha: C, model: &EnergyModel, n_max: usize) -> Result<FockExpansion> {
    if n_max > 512 {
        return Err(Error::domain(format!("n_max is limited to 512, got {n_max}")));
    }
    let raw = rotator_coefficients(alpha, model, n_max);
    let state = FockExpansion::new(raw)?;
    if state.tail() >= 1e-12 {
        let long = FockExpansion::new(rotator_coefficients(alpha, model, 4096))?;
        let total: f64 = long.coeffs.iter().map(|z| z.norm_sqr()).sum();
        let suggested = long
            .coeffs
            .iter()
            .enumerate()
            .skip(n_max)
            .find(|(_, z)| z.norm_sqr() / total < 1e-12 && z.norm_sqr() > 0.0)
            .map_or(4096, |(n, _)| n);
        return Err(Error::Truncation {
            message: format!("|c_n_max|² = {:.3e} with n_max = {n_max}", state.tail()),
            suggested,
        });
    }
    Ok(state)
}

/// Drift-based effective mass of a slowly moving Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMass {
    pub lambda: f64,
    pub p_bar: f64,
    /// `p̄ / (m v)` with `v` from the Newton–Wigner centroid drift.
    pub ratio: f64,
    /// Same with `v = ⟨c² p / E⟩` by quadrature.
    pub ratio_quadrature: f64,
    pub grid_nodes: usize,
}

/// `m_eff / m` for a Gaussian packet of localization `λ` and mean momentum
/// `p̄`, from the centroid velocity over unit time.
pub fn effective_mass_ratio(lambda: f64, p_bar: f64, units: &UnitSystem) -> Result<EffectiveMass> {
    if p_bar == 0.0 || !p_bar.is_finite() {
        return Err(Error::domain("effective mass needs a nonzero mean momentum"));
    }
    let spec = GaussianSpec {
        p_bar,
        ..GaussianSpec::from_localization(lambda, units)?
    };
    let grid = MomentumGrid::for_packet(spec.sigma, p_bar, units)?;
    let state = gaussian_state(&spec, &grid, units)?;
    let t = spec.sigma / units.c;
    let x0 = state.position_mean(Branch::Positive)?;
    let x1 = state.evolved(t).position_mean(Branch::Positive)?;
    let v = (x1 - x0) / t;
    let vq = state.momentum_mean(Branch::Positive, |p| units.velocity(p))?;
    Ok(EffectiveMass {
        lambda,
        p_bar,
        ratio: p_bar / (units.mass * v),
        ratio_quadrature: p_bar / (units.mass * vq),
        grid_nodes: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nat() -> UnitSystem {
        UnitSystem::natural()
    }

    #[test]
    fn gaussian_norm_and_moments() {
        let u = nat();
        let spec = GaussianSpec::from_localization(8.0, &u).unwrap();
        let g = MomentumGrid::new(512, 80.0).unwrap();
        let s = gaussian_state(&spec, &g, &u).unwrap();
        assert!((s.charge_norm() - 1.0).abs() < 1e-10);
        assert_eq!(s.branch(), Some(Branch::Positive));
        let var = s.momentum_mean(Branch::Positive, |p| p * p).unwrap();
        assert_relative_eq!(var.sqrt(), 8.0 / 2f64.sqrt(), max_relative = 1e-2);
    }

    #[test]
    fn unresolved_grid_rejected() {
        let u = nat();
        let coarse = MomentumGrid::new(16, 2.0).unwrap();
        let spec = GaussianSpec::from_localization(1.0, &u).unwrap();
        match gaussian_state(&spec, &coarse, &u) {
            Err(Error::Resolution { required, .. }) => assert!(required.is_some()),
            other => panic!("{other:?}"),
        }
        let narrow = MomentumGrid::new(1024, 3.0).unwrap();
        assert!(gaussian_state(&spec, &narrow, &u).is_err());
    }

    #[test]
    fn shifted_position_mean() {
        let u = nat();
        let spec = GaussianSpec {
            q_bar: 3.0,
            ..GaussianSpec::from_localization(1.0, &u).unwrap()
        };
        let g = MomentumGrid::for_packet(spec.sigma, 0.0, &u).unwrap();
        let s = gaussian_state(&spec, &g, &u).unwrap();
        assert!((s.position_mean(Branch::Positive).unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_center() {
        let spec = CoherentSpec {
            alpha: C::new(1.0, 1.0) / 2f64.sqrt(),
            sigma: 1.0,
            branch: Branch::Positive,
        };
        let (q, p) = spec.center(1.0);
        assert_relative_eq!(q, 1.0, epsilon = 1e-15);
        assert_relative_eq!(p, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn number_states_orthonormal() {
        let u = nat();
        let g = MomentumGrid::new(256, 16.0).unwrap();
        let states: Vec<_> = (0..=4)
            .map(|n| displaced_number_state(n, 0.5, -0.3, 1.0, Branch::Positive, &g, &u).unwrap())
            .collect();
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let o = a.overlap(b, Branch::Positive).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((o - want).norm() < 1e-10, "({i},{j}) {o}");
            }
        }
        assert!(displaced_number_state(13, 0.0, 0.0, 1.0, Branch::Positive, &g, &u).is_err());
    }

    #[test]
    fn number_state_kinetic_energy() {
        let u = nat();
        let g = MomentumGrid::new(256, 16.0).unwrap();
        let s = displaced_number_state(1, 0.0, 0.0, 1.0, Branch::Positive, &g, &u).unwrap();
        let t = s.momentum_mean(Branch::Positive, |p| p * p / 2.0).unwrap();
        assert!((t - 0.75).abs() < 1e-8);
        let s0 = displaced_number_state(0, 1.0, 2.0, 1.0, Branch::Positive, &g, &u).unwrap();
        let c = free_coherent_state(
            &CoherentSpec {
                alpha: C::new(1.0 / 2f64.sqrt(), 2.0 / 2f64.sqrt()),
                sigma: 1.0,
                branch: Branch::Positive,
            },
            &g,
            &u,
        )
        .unwrap();
        for (a, b) in s0.plus().iter().zip(c.plus()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rotator_coefficients_limit() {
        let m = EnergyModel::landau(nat(), 1e-12).unwrap();
        let alpha = C::new(1.5, 0.5);
        let st = rotator_coherent_state(alpha, &m, 64).unwrap();
        let norm = (-alpha.norm_sqr() / 2.0).exp();
        let mut fact = 1.0;
        for (n, c) in st.coefficients().iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let want = alpha.powu(n as u32) / fact.sqrt() * norm;
            assert!((c - want).norm() < 1e-6);
        }
        let zero = rotator_coherent_state(C::new(0.0, 0.0), &m, 8).unwrap();
        assert_eq!(zero.coefficients()[0], C::new(1.0, 0.0));
    }

    #[test]
    fn rotator_truncation_suggests_size() {
        let m = EnergyModel::landau(nat(), 0.5).unwrap();
        match rotator_coherent_state(C::new(6.0, 0.0), &m, 20) {
            Err(Error::Truncation { suggested, .. }) => assert!(suggested > 20 && suggested < 512),
            other => panic!("{other:?}"),
        }
        assert!(rotator_coherent_state(C::new(1.0, 0.0), &m, 513).is_err());
    }

    #[test]
    fn nonrelativistic_energy_limit() {
        let u = nat();
        let spec = GaussianSpec::from_localization(0.01, &u).unwrap();
        let g = MomentumGrid::for_packet(spec.sigma, 0.0, &u).unwrap();
        let s = gaussian_state(&spec, &g, &u).unwrap();
        let e = s.momentum_mean(Branch::Positive, |p| u.energy(p) - 1.0).unwrap();
        let k = s.momentum_mean(Branch::Positive, |p| p * p / 2.0).unwrap();
        assert_relative_eq!(e, k, max_relative = 1e-3);
    }

    #[test]
    fn effective_mass_grows_with_localization() {
        let u = nat();
        let lo = effective_mass_ratio(0.05, 0.01, &u).unwrap();
        let hi = effective_mass_ratio(4.0, 0.01, &u).unwrap();
        assert!((lo.ratio - 1.0).abs() < 0.01);
        assert!(hi.ratio > 1.05, "{hi:?} {lo:?}");
        assert_relative_eq!(hi.ratio, hi.ratio_quadrature, max_relative = 1e-8);
        assert_relative_eq!(lo.ratio, lo.ratio_quadrature, max_relative = 1e-8);
    }
}
