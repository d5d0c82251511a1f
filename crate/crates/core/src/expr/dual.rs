//! Forward-mode scalar types: plain `f64`, first-order duals with a fixed
//! block of seed lanes, and second-order duals carrying one mixed partial.
//!
//! All arithmetic is written so the operation order is identical regardless
//! of which seed lane holds which variable; in particular the mixed partial
//! of `Dual2` is built from commutative groupings only, so swapping the two
//! seeds reproduces the exact same bits.

use super::ExprError;

/// Number of derivative lanes carried by [`Dual`]. Charts are validated
/// against this bound when they are constructed.
pub const MAX_SEEDS: usize = 8;

/// Shared arithmetic surface for evaluation: implemented by `f64`, [`Dual`]
/// and [`Dual2`]. Fallible operations return `DomainError` at the value
/// level (derivatives blow up exactly where the value does for the
/// functions in the grammar, except `sqrt` at zero which is checked
/// separately).
pub trait Scalar: Copy + std::fmt::Debug {
    fn from_f64(c: f64) -> Self;
    /// The underlying point value (drops derivative information).
    fn value(&self) -> f64;

    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn neg(self) -> Self;
    fn div(self, o: Self) -> Result<Self, ExprError>;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Result<Self, ExprError>;
    fn sqrt(self) -> Result<Self, ExprError>;
    /// Integer power by binary exponentiation; defined for negative bases.
    fn powi(self, k: i32) -> Result<Self, ExprError>;
    /// Real power as `exp(e·ln(b))`; requires a strictly positive base.
    fn powf(self, e: Self) -> Result<Self, ExprError>;
    fn atan2(self, x: Self) -> Result<Self, ExprError>;
}

fn domain(op: &'static str, value: f64) -> ExprError {
    ExprError::DomainError { op, value }
}

fn powi_unsigned<T: Scalar>(base: T, mut k: u32) -> T {
    // Binary exponentiation; k >= 1.
    let mut acc: Option<T> = None;
    let mut sq = base;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => sq,
                Some(a) => a.mul(sq),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        sq = sq.mul(sq);
    }
    acc.expect("k >= 1")
}

fn powi_generic<T: Scalar>(base: T, k: i32) -> Result<T, ExprError> {
    if k == 0 {
        return Ok(T::from_f64(1.0));
    }
    let p = powi_unsigned(base, k.unsigned_abs());
    if k > 0 {
        Ok(p)
    } else {
        T::from_f64(1.0).div(p)
    }
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn mul(self, o: Self) -> Self {
        self * o
    }
    fn neg(self) -> Self {
        -self
    }
    fn div(self, o: Self) -> Result<Self, ExprError> {
        if o == 0.0 {
            return Err(domain("division", 0.0));
        }
        Ok(self / o)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Result<Self, ExprError> {
        if self <= 0.0 {
            return Err(domain("log", self));
        }
        Ok(f64::ln(self))
    }
    fn sqrt(self) -> Result<Self, ExprError> {
        if self < 0.0 {
            return Err(domain("sqrt", self));
        }
        Ok(f64::sqrt(self))
    }
    fn powi(self, k: i32) -> Result<Self, ExprError> {
        powi_generic(self, k)
    }
    fn powf(self, e: Self) -> Result<Self, ExprError> {
        if self <= 0.0 {
            return Err(domain("pow", self));
        }
        Ok((e * f64::ln(self)).exp())
    }
    fn atan2(self, x: Self) -> Result<Self, ExprError> {
        if self == 0.0 && x == 0.0 {
            return Err(domain("atan2", 0.0));
        }
        Ok(f64::atan2(self, x))
    }
}

/// First-order dual number with [`MAX_SEEDS`] derivative lanes. Every lane
/// is propagated through every operation, so a value is differentiated with
/// respect to up to eight coordinates in a single pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_SEEDS],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual {
            v,
            d: [0.0; MAX_SEEDS],
        }
    }

    /// A variable with value `v`, seeded in lane `lane`.
    pub fn seeded(v: f64, lane: usize) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        d[lane] = 1.0;
        Dual { v, d }
    }

    fn map(self, v: f64, f1: f64) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = f1 * self.d[k];
        }
        Dual { v, d }
    }
}

impl Scalar for Dual {
    fn from_f64(c: f64) -> Self {
        Dual::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(self, o: Self) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = self.d[k] + o.d[k];
        }
        Dual { v: self.v + o.v, d }
    }
    fn sub(self, o: Self) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = self.d[k] - o.d[k];
        }
        Dual { v: self.v - o.v, d }
    }
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = self.v * o.d[k] + self.d[k] * o.v;
        }
        Dual { v: self.v * o.v, d }
    }
    fn neg(self) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = -self.d[k];
        }
        Dual { v: -self.v, d }
    }
    fn div(self, o: Self) -> Result<Self, ExprError> {
        if o.v == 0.0 {
            return Err(domain("division", 0.0));
        }
        let inv = 1.0 / o.v;
        let inv2 = inv * inv;
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = (self.d[k] * o.v - self.v * o.d[k]) * inv2;
        }
        // Value divided directly so the value lane agrees bit-for-bit with
        // plain evaluation.
        Ok(Dual {
            v: self.v / o.v,
            d,
        })
    }
    fn sin(self) -> Self {
        self.map(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.map(self.v.cos(), -self.v.sin())
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        self.map(t, 1.0 + t * t)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.map(e, e)
    }
    fn ln(self) -> Result<Self, ExprError> {
        if self.v <= 0.0 {
            return Err(domain("log", self.v));
        }
        Ok(self.map(self.v.ln(), 1.0 / self.v))
    }
    fn sqrt(self) -> Result<Self, ExprError> {
        if self.v < 0.0 {
            return Err(domain("sqrt", self.v));
        }
        let s = self.v.sqrt();
        if self.v == 0.0 {
            // The derivative of sqrt is unbounded at zero; only a constant
            // zero (all lanes zero) passes through.
            if self.d.iter().any(|&x| x != 0.0) {
                return Err(domain("sqrt", 0.0));
            }
            return Ok(Dual::constant(0.0));
        }
        Ok(self.map(s, 0.5 / s))
    }
    fn powi(self, k: i32) -> Result<Self, ExprError> {
        powi_generic(self, k)
    }
    fn powf(self, e: Self) -> Result<Self, ExprError> {
        if self.v <= 0.0 {
            return Err(domain("pow", self.v));
        }
        Ok(e.mul(self.ln()?).exp())
    }
    fn atan2(self, x: Self) -> Result<Self, ExprError> {
        let y = self;
        let r2 = y.v * y.v + x.v * x.v;
        if r2 == 0.0 {
            return Err(domain("atan2", 0.0));
        }
        let inv = 1.0 / r2;
        let mut d = [0.0; MAX_SEEDS];
        for k in 0..MAX_SEEDS {
            d[k] = (x.v * y.d[k] - y.v * x.d[k]) * inv;
        }
        Ok(Dual {
            v: y.v.atan2(x.v),
            d,
        })
    }
}

impl std::ops::Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Scalar::add(self, o)
    }
}
impl std::ops::Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Scalar::sub(self, o)
    }
}
impl std::ops::Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Scalar::mul(self, o)
    }
}
impl std::ops::Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Scalar::neg(self)
    }
}

/// Second-order dual carrying the value, two directional first partials
/// (seeds `i` and `j`) and the single mixed partial `∂_i∂_j`. One evaluation
/// per seed pair reconstructs a full Hessian.
///
/// The `dij` update of every operation is grouped so that exchanging the
/// roles of the two seeds permutes only operands of commutative IEEE
/// operations: mixed partials are symmetric bit-for-bit, not just up to
/// rounding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub di: f64,
    pub dj: f64,
    pub dij: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Dual2 {
            v,
            di: 0.0,
            dj: 0.0,
            dij: 0.0,
        }
    }

    /// A variable seeded in the `i` slot, the `j` slot, or both (the
    /// diagonal case `i = j`).
    pub fn seeded(v: f64, in_i: bool, in_j: bool) -> Self {
        Dual2 {
            v,
            di: if in_i { 1.0 } else { 0.0 },
            dj: if in_j { 1.0 } else { 0.0 },
            dij: 0.0,
        }
    }

    /// Chain rule through a unary function with first and second derivative
    /// `f1`, `f2` at the point value.
    fn chain(self, v: f64, f1: f64, f2: f64) -> Self {
        Dual2 {
            v,
            di: f1 * self.di,
            dj: f1 * self.dj,
            dij: f1 * self.dij + f2 * (self.di * self.dj),
        }
    }
}

impl Scalar for Dual2 {
    fn from_f64(c: f64) -> Self {
        Dual2::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn add(self, o: Self) -> Self {
        Dual2 {
            v: self.v + o.v,
            di: self.di + o.di,
            dj: self.dj + o.dj,
            dij: self.dij + o.dij,
        }
    }
    fn sub(self, o: Self) -> Self {
        Dual2 {
            v: self.v - o.v,
            di: self.di - o.di,
            dj: self.dj - o.dj,
            dij: self.dij - o.dij,
        }
    }
    fn mul(self, o: Self) -> Self {
        Dual2 {
            v: self.v * o.v,
            di: self.v * o.di + self.di * o.v,
            dj: self.v * o.dj + self.dj * o.v,
            dij: (self.v * o.dij + self.dij * o.v) + (self.di * o.dj + self.dj * o.di),
        }
    }
    fn neg(self) -> Self {
        Dual2 {
            v: -self.v,
            di: -self.di,
            dj: -self.dj,
            dij: -self.dij,
        }
    }
    fn div(self, o: Self) -> Result<Self, ExprError> {
        if o.v == 0.0 {
            return Err(domain("division", 0.0));
        }
        // self * (1/o), with 1/o expanded by the chain rule; the value lane
        // is then divided directly to agree with plain evaluation.
        let w = 1.0 / o.v;
        let inv = o.chain(w, -w * w, 2.0 * w * w * w);
        let mut out = self.mul(inv);
        out.v = self.v / o.v;
        Ok(out)
    }
    fn sin(self) -> Self {
        let s = self.v.sin();
        self.chain(s, self.v.cos(), -s)
    }
    fn cos(self) -> Self {
        let c = self.v.cos();
        self.chain(c, -self.v.sin(), -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let f1 = 1.0 + t * t;
        self.chain(t, f1, 2.0 * t * f1)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Result<Self, ExprError> {
        if self.v <= 0.0 {
            return Err(domain("log", self.v));
        }
        let w = 1.0 / self.v;
        Ok(self.chain(self.v.ln(), w, -w * w))
    }
    fn sqrt(self) -> Result<Self, ExprError> {
        if self.v < 0.0 {
            return Err(domain("sqrt", self.v));
        }
        if self.v == 0.0 {
            if self.di != 0.0 || self.dj != 0.0 || self.dij != 0.0 {
                return Err(domain("sqrt", 0.0));
            }
            return Ok(Dual2::constant(0.0));
        }
        let s = self.v.sqrt();
        let f1 = 0.5 / s;
        Ok(self.chain(s, f1, -0.5 * f1 / self.v))
    }
    fn powi(self, k: i32) -> Result<Self, ExprError> {
        powi_generic(self, k)
    }
    fn powf(self, e: Self) -> Result<Self, ExprError> {
        if self.v <= 0.0 {
            return Err(domain("pow", self.v));
        }
        Ok(e.mul(self.ln()?).exp())
    }
    fn atan2(self, x: Self) -> Result<Self, ExprError> {
        let y = self;
        let r2 = y.v * y.v + x.v * x.v;
        if r2 == 0.0 {
            return Err(domain("atan2", 0.0));
        }
        let inv = 1.0 / r2;
        let inv2 = inv * inv;
        let fy = x.v * inv;
        let fx = -y.v * inv;
        let fyy = -2.0 * x.v * y.v * inv2;
        let fxx = 2.0 * x.v * y.v * inv2;
        let fxy = (y.v * y.v - x.v * x.v) * inv2;
        Ok(Dual2 {
            v: y.v.atan2(x.v),
            di: fy * y.di + fx * x.di,
            dj: fy * y.dj + fx * x.dj,
            dij: (fy * y.dij + fx * x.dij)
                + (fyy * (y.di * y.dj) + fxx * (x.di * x.dj))
                + fxy * ((y.di * x.dj) + (y.dj * x.di)),
        })
    }
}

impl std::ops::Add for Dual2 {
    type Output = Dual2;
    fn add(self, o: Dual2) -> Dual2 {
        Scalar::add(self, o)
    }
}
impl std::ops::Sub for Dual2 {
    type Output = Dual2;
    fn sub(self, o: Dual2) -> Dual2 {
        Scalar::sub(self, o)
    }
}
impl std::ops::Mul for Dual2 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        Scalar::mul(self, o)
    }
}
impl std::ops::Neg for Dual2 {
    type Output = Dual2;
    fn neg(self) -> Dual2 {
        Scalar::neg(self)
    }
}
