//! Exact scalars: arbitrary-precision rationals, plus an extension with an
//! infinitesimal component used to encode strict bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

/// Exact rational scalar. Always in lowest terms with a positive denominator;
/// `num_rational` maintains both invariants on every operation.
pub type Rational = BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A rational extended with an infinitesimal: the pair `(real, delta)` stands
/// for `real + delta * δ` where δ is positive but smaller than any positive
/// rational. The derived ordering (lexicographic on `real`, then `delta`) is
/// exactly the order induced by that reading.
///
/// A strict constraint `a·x < b` is stored as the weak bound `(b, -1)`,
/// i.e. `a·x ≤ b - δ`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DeltaRational {
    pub real: Rational,
    pub delta: Rational,
}

impl DeltaRational {
    pub fn new(real: Rational, delta: Rational) -> Self {
        DeltaRational { real, delta }
    }

    pub fn from_real(real: Rational) -> Self {
        DeltaRational {
            real,
            delta: Rational::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_real(rat(n))
    }

    /// `real - δ`, the bound encoding `< real`.
    pub fn strict(real: Rational) -> Self {
        DeltaRational {
            real,
            delta: -rat(1),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.real.is_zero() && self.delta.is_zero()
    }

    /// `self >= 0` in the infinitesimal order: the real part is positive, or
    /// it is zero and the delta part is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.real.is_positive() || (self.real.is_zero() && !self.delta.is_negative())
    }

    pub fn is_negative(&self) -> bool {
        !self.is_nonnegative()
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        DeltaRational {
            real: &self.real * c,
            delta: &self.delta * c,
        }
    }

    pub fn add_scaled(&mut self, other: &DeltaRational, c: &Rational) {
        self.real += &other.real * c;
        self.delta += &other.delta * c;
    }
}

impl Add for DeltaRational {
    type Output = DeltaRational;
    fn add(self, rhs: DeltaRational) -> DeltaRational {
        DeltaRational {
            real: self.real + rhs.real,
            delta: self.delta + rhs.delta,
        }
    }
}

impl Sub for DeltaRational {
    type Output = DeltaRational;
    fn sub(self, rhs: DeltaRational) -> DeltaRational {
        DeltaRational {
            real: self.real - rhs.real,
            delta: self.delta - rhs.delta,
        }
    }
}

impl Neg for DeltaRational {
    type Output = DeltaRational;
    fn neg(self) -> DeltaRational {
        DeltaRational {
            real: -self.real,
            delta: -self.delta,
        }
    }
}

impl AddAssign for DeltaRational {
    fn add_assign(&mut self, rhs: DeltaRational) {
        self.real += rhs.real;
        self.delta += rhs.delta;
    }
}

impl SubAssign for DeltaRational {
    fn sub_assign(&mut self, rhs: DeltaRational) {
        self.real -= rhs.real;
        self.delta -= rhs.delta;
    }
}

impl fmt::Display for DeltaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.delta.is_zero() {
            write!(f, "{}", self.real)
        } else if self.delta.is_negative() {
            write!(f, "{} - {}δ", self.real, -&self.delta)
        } else {
            write!(f, "{} + {}δ", self.real, self.delta)
        }
    }
}

impl fmt::Debug for DeltaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}
