//! Exact scalars for stabilizer amplitudes.
//!
//! Every amplitude of a (possibly projected) stabilizer state, and every inner
//! product between two such states, is either zero or `ω^m · 2^(-p/2)` with
//! `ω = e^(iπ/4)`. [`ExactScalar`] stores exactly that. Intermediate sums that
//! arise while updating amplitudes live in [`RingSum`], an element of
//! `Z[ω] · 2^(-k/2)`, and are folded back into an [`ExactScalar`] once the
//! sum is known to be a monomial again.

use std::fmt;
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Zero or `ω^m · 2^(-p/2)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    zero: bool,
    m: u8,
    p: i32,
}

impl ExactScalar {
    pub const ZERO: ExactScalar = ExactScalar { zero: true, m: 0, p: 0 };
    pub const ONE: ExactScalar = ExactScalar { zero: false, m: 0, p: 0 };

    /// `ω^m · 2^(-p/2)`; `m` is reduced mod 8.
    pub fn new(m: i32, p: i32) -> Self {
        ExactScalar {
            zero: false,
            m: m.rem_euclid(8) as u8,
            p,
        }
    }

    /// `i^k`.
    pub fn i_pow(k: i32) -> Self {
        Self::new(2 * k, 0)
    }

    /// `±1`.
    pub fn sign(negative: bool) -> Self {
        if negative {
            Self::new(4, 0)
        } else {
            Self::ONE
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Power of ω, in `0..8`. Meaningless for zero.
    pub fn phase(&self) -> u8 {
        self.m
    }

    /// Power of `2^(-1/2)` in the magnitude. Meaningless for zero.
    pub fn sqrt2_exponent(&self) -> i32 {
        self.p
    }

    pub fn conj(self) -> Self {
        if self.zero {
            return self;
        }
        Self::new(-(self.m as i32), self.p)
    }

    /// `|self|` as an exact scalar (phase dropped).
    pub fn magnitude(self) -> Self {
        if self.zero {
            return self;
        }
        Self::new(0, self.p)
    }

    /// `|self|^2`, i.e. `2^(-p)`.
    pub fn norm_sqr(self) -> Self {
        if self.zero {
            return self;
        }
        Self::new(0, 2 * self.p)
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self) -> Self {
        assert!(!self.zero, "inverse of exact zero");
        Self::new(-(self.m as i32), -self.p)
    }

    /// Multiply by `2^(-e/2)`.
    pub fn scale_sqrt2(self, e: i32) -> Self {
        if self.zero {
            return self;
        }
        Self::new(self.m as i32, self.p + e)
    }

    pub fn to_complex(self) -> Complex64 {
        if self.zero {
            return Complex64::new(0.0, 0.0);
        }
        // unit components of ω^m; odd m carries an extra 2^(-1/2)
        let (re, im): (f64, f64) = match self.m {
            0 => (1.0, 0.0),
            1 => (1.0, 1.0),
            2 => (0.0, 1.0),
            3 => (-1.0, 1.0),
            4 => (-1.0, 0.0),
            5 => (-1.0, -1.0),
            6 => (0.0, -1.0),
            _ => (1.0, -1.0),
        };
        let e = self.p + (self.m & 1) as i32;
        let mag = pow_sqrt_half(e);
        Complex64::new(re * mag, im * mag)
    }
}

/// `2^(-e/2)` with at most one rounding.
fn pow_sqrt_half(e: i32) -> f64 {
    if e % 2 == 0 {
        2f64.powi(-e / 2)
    } else {
        R * 2f64.powi(-(e - 1) / 2)
    }
}

impl Mul for ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: ExactScalar) -> ExactScalar {
        if self.zero || rhs.zero {
            return ExactScalar::ZERO;
        }
        ExactScalar::new(self.m as i32 + rhs.m as i32, self.p + rhs.p)
    }
}

impl Div for ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: ExactScalar) -> ExactScalar {
        if self.zero {
            return ExactScalar::ZERO;
        }
        self * rhs.inv()
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        if self.zero {
            return self;
        }
        ExactScalar::new(self.m as i32 + 4, self.p)
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            write!(f, "0")
        } else {
            write!(f, "w^{}*2^(-{}/2)", self.m, self.p)
        }
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `(c0 + c1 ω + c2 ω² + c3 ω³) · 2^(-k/2)` with integer coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingSum {
    c: [i64; 4],
    k: i32,
}

impl Default for RingSum {
    fn default() -> Self {
        RingSum { c: [0; 4], k: 0 }
    }
}

impl RingSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.c == [0; 4]
    }

    /// Multiply the coefficient vector by `√2 = ω − ω³`.
    fn times_sqrt2(c: [i64; 4]) -> [i64; 4] {
        [c[1] - c[3], c[0] + c[2], c[1] + c[3], c[2] - c[0]]
    }

    fn raise_to(&mut self, k: i32) {
        while self.k < k {
            self.c = Self::times_sqrt2(self.c);
            self.k += 1;
        }
    }

    pub fn add_exact(&mut self, s: ExactScalar) {
        if s.is_zero() {
            return;
        }
        let mut t = RingSum::from(s);
        if self.is_zero() {
            *self = t;
            return;
        }
        let k = self.k.max(t.k);
        self.raise_to(k);
        t.raise_to(k);
        for i in 0..4 {
            self.c[i] += t.c[i];
        }
    }

    /// Fold back into an [`ExactScalar`]; `None` if the value is not a
    /// monomial `ω^m 2^(-p/2)`.
    pub fn to_exact(mut self) -> Option<ExactScalar> {
        if self.is_zero() {
            return Some(ExactScalar::ZERO);
        }
        loop {
            let w = Self::times_sqrt2(self.c);
            if w.iter().all(|x| x % 2 == 0) {
                self.c = w.map(|x| x / 2);
                self.k -= 1;
            } else {
                break;
            }
        }
        let nz: Vec<usize> = (0..4).filter(|&i| self.c[i] != 0).collect();
        if nz.len() != 1 {
            return None;
        }
        let i = nz[0];
        match self.c[i] {
            1 => Some(ExactScalar::new(i as i32, self.k)),
            -1 => Some(ExactScalar::new(i as i32 + 4, self.k)),
            _ => None,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let scale = pow_sqrt_half(self.k);
        let c = self.c.map(|x| x as f64);
        let re = c[0] + R * (c[1] - c[3]);
        let im = c[2] + R * (c[1] + c[3]);
        Complex64::new(re * scale, im * scale)
    }
}

impl From<ExactScalar> for RingSum {
    fn from(s: ExactScalar) -> Self {
        if s.is_zero() {
            return RingSum::zero();
        }
        let mut c = [0i64; 4];
        let m = s.phase() as usize;
        if m < 4 {
            c[m] = 1;
        } else {
            c[m - 4] = -1;
        }
        RingSum {
            c,
            k: s.sqrt2_exponent(),
        }
    }
}
