//! Exact scalar arithmetic for asymptotic exponents.
//!
//! Exponents that appear in polyhomogeneous expansions are generated by the
//! indicial roots `b_l = ½(−(d−2) + √((d−2)² + 4λ))` and
//! `c_l = ½((d−2) + √((d−2)² + 4λ))` together with integer and rational
//! shifts. Resonance detection (exact exponent collision) is what creates
//! logarithmic terms, so equality of exponents must be decided exactly and
//! must not depend on float rounding. We therefore carry exponents as
//! elements of the ring ℚ + Σ ℚ·√qᵢ with canonicalised radicands, which is
//! closed under every operation the calculus needs (addition, negation,
//! rational scaling).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Exact rational from an `f64` (every finite double is rational).
pub fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).expect("finite float expected")
}

pub fn rat_from_i64(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

/// Splits a nonnegative integer into `s² · q` with `q` square-free as far as
/// trial division by small primes can certify. Radicands in practice come
/// from `(d−2)² + 4λ` with small rational `λ`, so this is exhaustive there.
fn extract_square_part(n: &BigInt) -> (BigInt, BigInt) {
    debug_assert!(!n.is_negative());
    let mut square = BigInt::one();
    let mut rest = n.clone();
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(100_000u32);
    while &p * &p <= rest && p <= limit {
        let p2 = &p * &p;
        while (&rest % &p2).is_zero() {
            rest /= &p2;
            square *= &p;
        }
        p += 1u32;
    }
    // Whatever survived trial division may still be a perfect square.
    let root = rest.sqrt();
    if &root * &root == rest {
        square *= &root;
        rest = BigInt::one();
    }
    (square, rest)
}

/// Exact real scalar `rat + Σ coeffᵢ·√radᵢ` with canonical radicands.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alg {
    rat: Rat,
    /// radicand (integer > 1, square-free up to the trial-division bound)
    /// → rational coefficient; zero coefficients are pruned.
    surds: BTreeMap<BigInt, Rat>,
}

impl Alg {
    pub fn zero() -> Self {
        Alg { rat: Rat::zero(), surds: BTreeMap::new() }
    }

    pub fn from_rat(r: Rat) -> Self {
        Alg { rat: r, surds: BTreeMap::new() }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::from_rat(rat_from_i64(n))
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_rat(rat_from_f64(x))
    }

    /// Exact √r for rational `r ≥ 0`.
    pub fn sqrt_rat(r: &Rat) -> Self {
        assert!(!r.is_negative(), "negative radicand");
        if r.is_zero() {
            return Self::zero();
        }
        // √(n/d) = √(n·d)/d
        let m = r.numer() * r.denom();
        let (s, q) = extract_square_part(&m);
        let coeff = Rat::new(s, r.denom().clone());
        if q.is_one() {
            Self::from_rat(coeff)
        } else {
            let mut surds = BTreeMap::new();
            surds.insert(q, coeff);
            Alg { rat: Rat::zero(), surds }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.surds.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.surds.is_empty()
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        if self.surds.is_empty() {
            Some(&self.rat)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        let mut v = self.rat.to_f64().unwrap_or(f64::NAN);
        for (q, c) in &self.surds {
            v += c.to_f64().unwrap_or(f64::NAN) * q.to_f64().unwrap_or(f64::NAN).sqrt();
        }
        v
    }

    fn prune(mut self) -> Self {
        self.surds.retain(|_, c| !c.is_zero());
        self
    }

    /// Exact sign (−1, 0, +1), refining √-approximations until the sign is
    /// certain. Distinct square-free radicands are linearly independent over
    /// ℚ, so a nonzero normal form has nonzero value.
    pub fn sign(&self) -> i32 {
        if self.surds.is_empty() {
            return match self.rat.cmp(&Rat::zero()) {
                Ordering::Less => -1,
                Ordering::Equal => 0,
                Ordering::Greater => 1,
            };
        }
        let mut bits: u32 = 32;
        loop {
            // |√q − isqrt(q·4^bits)/2^bits| ≤ 2^{−bits}
            let scale = BigInt::one() << (2 * bits);
            let denom = Rat::from_integer(BigInt::one() << bits);
            let mut value = self.rat.clone();
            let mut err = Rat::zero();
            for (q, c) in &self.surds {
                let approx = Rat::from_integer((q * &scale).sqrt()) / &denom;
                value += c * approx;
                err += c.abs() / &denom;
            }
            if value.abs() > err {
                return if value.is_negative() { -1 } else { 1 };
            }
            bits *= 2;
            assert!(bits <= 4096, "sign refinement failed to converge");
        }
    }

    pub fn add(&self, other: &Alg) -> Alg {
        let mut surds = self.surds.clone();
        for (q, c) in &other.surds {
            *surds.entry(q.clone()).or_insert_with(Rat::zero) += c;
        }
        Alg { rat: &self.rat + &other.rat, surds }.prune()
    }

    pub fn sub(&self, other: &Alg) -> Alg {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Alg {
        Alg {
            rat: -self.rat.clone(),
            surds: self.surds.iter().map(|(q, c)| (q.clone(), -c.clone())).collect(),
        }
    }

    pub fn add_rat(&self, r: &Rat) -> Alg {
        Alg { rat: &self.rat + r, surds: self.surds.clone() }
    }

    pub fn add_i64(&self, n: i64) -> Alg {
        self.add_rat(&rat_from_i64(n))
    }

    pub fn scale_rat(&self, r: &Rat) -> Alg {
        Alg {
            rat: &self.rat * r,
            surds: self.surds.iter().map(|(q, c)| (q.clone(), c * r)).collect(),
        }
        .prune()
    }

    pub fn half(&self) -> Alg {
        self.scale_rat(&Rat::new(BigInt::one(), BigInt::from(2)))
    }

    pub fn cmp_exact(&self, other: &Alg) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        match self.sub(other).sign() {
            -1 => Ordering::Less,
            1 => Ordering::Greater,
            _ => Ordering::Equal,
        }
    }

    pub fn cmp_rat(&self, r: &Rat) -> Ordering {
        self.cmp_exact(&Alg::from_rat(r.clone()))
    }
}

impl PartialOrd for Alg {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_exact(other))
    }
}

impl Ord for Alg {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_exact(other)
    }
}

impl fmt::Debug for Alg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl fmt::Display for Alg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surds.is_empty() {
            return write!(f, "{}", self.rat);
        }
        write!(f, "{}", self.rat)?;
        for (q, c) in &self.surds {
            write!(f, " + {}·√{}", c, q)?;
        }
        Ok(())
    }
}

/// Complex exponent with exact real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent {
    pub re: Alg,
    pub im: Alg,
}

impl Exponent {
    pub fn real(re: Alg) -> Self {
        Exponent { re, im: Alg::zero() }
    }

    pub fn from_i64(n: i64) -> Self {
        Self::real(Alg::from_i64(n))
    }

    pub fn from_f64(x: f64) -> Self {
        Self::real(Alg::from_f64(x))
    }

    pub fn from_f64_pair(re: f64, im: f64) -> Self {
        Exponent { re: Alg::from_f64(re), im: Alg::from_f64(im) }
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    pub fn sub(&self, other: &Exponent) -> Exponent {
        Exponent { re: self.re.sub(&other.re), im: self.im.sub(&other.im) }
    }

    pub fn neg(&self) -> Exponent {
        Exponent { re: self.re.neg(), im: self.im.neg() }
    }

    pub fn add_i64(&self, n: i64) -> Exponent {
        Exponent { re: self.re.add_i64(n), im: self.im.clone() }
    }

    pub fn add_alg(&self, a: &Alg) -> Exponent {
        Exponent { re: self.re.add(a), im: self.im.clone() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_complex_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{:?}", self.re)
        } else {
            write!(f, "{:?}{:+?}i", self.re, self.im)
        }
    }
}

/// Integer decay order that may be infinite (Schwartz behaviour).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Order {
    Finite(u32),
    Inf,
}

impl Order {
    pub fn min(self, other: Order) -> Order {
        match (self, other) {
            (Order::Inf, o) | (o, Order::Inf) => o,
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a.min(b)),
        }
    }

    pub fn plus(self, n: u32) -> Order {
        match self {
            Order::Inf => Order::Inf,
            Order::Finite(a) => Order::Finite(a + n),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Order::Finite(_))
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{}", n),
            Order::Inf => write!(f, "inf"),
        }
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_canonicalisation() {
        // √8 = 2√2 and √(9/4) = 3/2
        let a = Alg::sqrt_rat(&rat_from_i64(8));
        let b = Alg::sqrt_rat(&rat_from_i64(2)).scale_rat(&rat_from_i64(2));
        assert_eq!(a, b);
        let c = Alg::sqrt_rat(&Rat::new(BigInt::from(9), BigInt::from(4)));
        assert_eq!(c.as_rat().unwrap(), &Rat::new(BigInt::from(3), BigInt::from(2)));
    }

    #[test]
    fn exact_equality_across_derivations() {
        // c_1 for d=3, λ=2: ½(1 + √9) = 2 exactly.
        let d_minus_2 = rat_from_i64(1);
        let disc = &d_minus_2 * &d_minus_2 + rat_from_i64(8);
        let c1 = Alg::sqrt_rat(&disc).add_rat(&d_minus_2).half();
        assert_eq!(c1, Alg::from_i64(2));
    }

    #[test]
    fn sign_of_surd_combinations() {
        // √2 + √3 − √5 > 0 but close-ish to zero territory for floats is fine
        let v = Alg::sqrt_rat(&rat_from_i64(2))
            .add(&Alg::sqrt_rat(&rat_from_i64(3)))
            .sub(&Alg::sqrt_rat(&rat_from_i64(5)));
        assert_eq!(v.sign(), 1);
        let w = v.sub(&v.clone());
        assert_eq!(w.sign(), 0);
        // √2 − 141421356/100000000 is positive (√2 = 1.41421356237…)
        let tight = Alg::sqrt_rat(&rat_from_i64(2))
            .sub(&Alg::from_rat(Rat::new(BigInt::from(141421356u64), BigInt::from(100000000u64))));
        assert_eq!(tight.sign(), 1);
    }

    #[test]
    fn ordering_is_total_and_exact() {
        let half = Alg::from_rat(Rat::new(BigInt::from(1), BigInt::from(2)));
        let sqrt2 = Alg::sqrt_rat(&rat_from_i64(2));
        assert!(half < sqrt2);
        assert!(sqrt2 < Alg::from_i64(2));
        assert_eq!(sqrt2.cmp_exact(&sqrt2), Ordering::Equal);
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 3.5_f64;
        assert_eq!(Alg::from_f64(x).to_f64(), x);
        let y = 0.1_f64; // not a dyadic rational but still an exact f64 value
        assert_eq!(Alg::from_f64(y).to_f64(), y);
    }
}
