//! Minimal coefficient-ring interface shared by q-expansions and polynomials.
//!
//! Elements carry whatever context they need (a prime, a precision, a
//! discriminant), so zeros and ones are built from an existing element.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt::Debug;

pub trait Ring: Clone + Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn int_like(&self, n: &BigInt) -> Self;
    fn is_zero_elt(&self) -> bool;
    fn add_r(&self, o: &Self) -> Self;
    fn sub_r(&self, o: &Self) -> Self;
    fn mul_r(&self, o: &Self) -> Self;
    fn neg_r(&self) -> Self;

    fn scale_int(&self, n: i64) -> Self {
        self.mul_r(&self.int_like(&BigInt::from(n)))
    }

    /// Structural zero: safe to skip in products. Defaults to `is_zero_elt`.
    fn is_exact_zero_elt(&self) -> bool {
        self.is_zero_elt()
    }

    fn ring_name(&self) -> String;
}

pub trait Field: Ring {
    fn inv_r(&self) -> crate::Result<Self>;
}

impl Field for BigRational {
    fn inv_r(&self) -> crate::Result<Self> {
        if self.is_zero() {
            Err(crate::Error::DivisionByZero)
        } else {
            Ok(self.recip())
        }
    }
}

impl Ring for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn int_like(&self, n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn add_r(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_r(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_r(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_r(&self) -> Self {
        -self
    }
    fn ring_name(&self) -> String {
        "Q".into()
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Generalised binomial coefficient C(n, k) for any integer n and k >= 0.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(-1, 3), BigInt::from(-1));
        assert_eq!(binomial(-2, 2), BigInt::from(3));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(factorial(6), BigInt::from(720));
    }
}
