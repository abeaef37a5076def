//! Phase-space symbols: exact polynomials, functions of one variable, and
//! sampled fields.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

type C = Complex64;

/// Polynomial `Σ c_ij q^i p^j` with complex coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: BTreeMap<(u32, u32), C>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `c q^i p^j`.
    pub fn monomial(q_pow: u32, p_pow: u32, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if c != C::new(0.0, 0.0) {
            terms.insert((q_pow, p_pow), c);
        }
        Self { terms }
    }

    pub fn q() -> Self {
        Self::monomial(1, 0, C::new(1.0, 0.0))
    }

    pub fn p() -> Self {
        Self::monomial(0, 1, C::new(1.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), C)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn coefficient(&self, q_pow: u32, p_pow: u32) -> C {
        self.terms.get(&(q_pow, p_pow)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_q(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn degree_p(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    fn insert(&mut self, key: (u32, u32), c: C) {
        let e = self.terms.entry(key).or_default();
        *e += c;
        if *e == C::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.insert(k, v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C) -> Self {
        let mut out = Self::zero();
        for (k, v) in self.terms() {
            out.insert(k, v * c);
        }
        out
    }

    /// Ordinary (commutative) product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((i1, j1), a) in self.terms() {
            for ((i2, j2), b) in other.terms() {
                out.insert((i1 + i2, j1 + j2), a * b);
            }
        }
        out
    }

    /// `∂_q^dq ∂_p^dp`.
    pub fn derivative(&self, dq: u32, dp: u32) -> Self {
        let mut out = Self::zero();
        for ((i, j), c) in self.terms() {
            if i >= dq && j >= dp {
                out.insert((i - dq, j - dp), c * falling(i, dq) * falling(j, dp));
            }
        }
        out
    }

    pub fn eval(&self, p: f64, q: f64) -> C {
        self.terms()
            .map(|((i, j), c)| c * q.powi(i as i32) * p.powi(j as i32))
            .sum()
    }

    /// Exact Moyal product; the series terminates at the total degree.
    pub fn star(&self, other: &Self, hbar: f64) -> Self {
        let order = (self.degree_q() + self.degree_p()).min(other.degree_q() + other.degree_p());
        let mut out = Self::zero();
        let mut pref = C::new(1.0, 0.0);
        for n in 0..=order {
            if n > 0 {
                pref *= C::new(0.0, hbar / 2.0) / n as f64;
            }
            for k in 0..=n {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let a = self.derivative(n - k, k);
                let b = other.derivative(k, n - k);
                out = out.add(&a.mul(&b).scale(pref * binomial(n, k) * sign));
            }
        }
        out
    }
}

/// Function of a single real variable.
pub type Func = Arc<dyn Fn(f64) -> C + Send + Sync>;

/// A scalar phase-space symbol.
///
/// Functions of `p` alone or `q` alone are kept as closures so products with
/// them can use exact shifted evaluations instead of truncated gradient
/// series.
#[derive(Clone)]
pub enum Symbol {
    Polynomial(Polynomial),
    Momentum(Func),
    Position(Func),
    /// Samples on the algebra's grid, indexed `[p, q]`.
    Field(Array2<C>),
}

impl Symbol {
    pub fn momentum(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Symbol::Momentum(Arc::new(move |p| C::new(f(p), 0.0)))
    }

    pub fn position(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Symbol::Position(Arc::new(move |q| C::new(f(q), 0.0)))
    }

    pub fn constant(c: f64) -> Self {
        Symbol::Polynomial(Polynomial::constant(C::new(c, 0.0)))
    }

    pub fn zero() -> Self {
        Symbol::Polynomial(Polynomial::zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Symbol::Polynomial(p) if p.is_zero())
    }

    /// Multiply by a complex constant without changing representation.
    pub fn scale(&self, c: C) -> Self {
        match self {
            Symbol::Polynomial(p) => Symbol::Polynomial(p.scale(c)),
            Symbol::Momentum(f) => {
                let f = f.clone();
                Symbol::Momentum(Arc::new(move |p| f(p) * c))
            }
            Symbol::Position(f) => {
                let f = f.clone();
                Symbol::Position(Arc::new(move |q| f(q) * c))
            }
            Symbol::Field(a) => Symbol::Field(a * c),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Polynomial(p) => f.debug_tuple("Polynomial").field(p).finish(),
            Symbol::Momentum(_) => f.write_str("Momentum(<fn>)"),
            Symbol::Position(_) => f.write_str("Position(<fn>)"),
            Symbol::Field(a) => write!(f, "Field({}x{})", a.nrows(), a.ncols()),
        }
    }
}

impl From<Polynomial> for Symbol {
    fn from(p: Polynomial) -> Self {
        Symbol::Polynomial(p)
    }
}

/// 2×2 matrix of scalar symbols, `entries[row][col]`.
#[derive(Debug, Clone)]
pub struct MatrixSymbol {
    pub entries: [[Symbol; 2]; 2],
}

impl MatrixSymbol {
    pub fn new(entries: [[Symbol; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn diagonal(a: Symbol, b: Symbol) -> Self {
        Self::new([[a, Symbol::zero()], [Symbol::zero(), b]])
    }

    /// `σ_x s`.
    pub fn sigma_x(s: Symbol) -> Self {
        Self::new([[Symbol::zero(), s.clone()], [s, Symbol::zero()]])
    }

    /// `σ_y s`.
    pub fn sigma_y(s: Symbol) -> Self {
        Self::new([
            [Symbol::zero(), s.scale(C::new(0.0, -1.0))],
            [s.scale(C::new(0.0, 1.0)), Symbol::zero()],
        ])
    }

    /// `σ_z s`.
    pub fn sigma_z(s: Symbol) -> Self {
        Self::diagonal(s.clone(), s.scale(C::new(-1.0, 0.0)))
    }
}
