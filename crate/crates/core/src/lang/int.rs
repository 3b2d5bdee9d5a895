//! Unbounded integers with an inline fast path.
//!
//! Values that fit in an `i64` are stored inline; anything larger spills to a
//! heap-allocated [`BigInt`]. The representation is kept normalized so that
//! structural equality coincides with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64),
    Big(Arc<BigInt>),
}

/// An arbitrary-precision integer.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Int(Repr);

impl Int {
    pub const ZERO: Int = Int(Repr::Small(0));
    pub const ONE: Int = Int(Repr::Small(1));

    pub fn small(v: i64) -> Int {
        Int(Repr::Small(v))
    }

    fn from_big(b: BigInt) -> Int {
        match b.to_i64() {
            Some(v) => Int(Repr::Small(v)),
            None => Int(Repr::Big(Arc::new(b))),
        }
    }

    fn to_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(v) => BigInt::from(*v),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(v) => *v < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0))
    }

    pub fn add(&self, other: &Int) -> Int {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(r) = a.checked_add(*b) {
                return Int::small(r);
            }
        }
        Int::from_big(self.to_big() + other.to_big())
    }

    pub fn sub(&self, other: &Int) -> Int {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(r) = a.checked_sub(*b) {
                return Int::small(r);
            }
        }
        Int::from_big(self.to_big() - other.to_big())
    }

    pub fn mul(&self, other: &Int) -> Int {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if let Some(r) = a.checked_mul(*b) {
                return Int::small(r);
            }
        }
        Int::from_big(self.to_big() * other.to_big())
    }

    pub fn neg(&self) -> Int {
        if let Repr::Small(a) = &self.0 {
            if let Some(r) = a.checked_neg() {
                return Int::small(r);
            }
        }
        Int::from_big(-self.to_big())
    }

    /// Floor division. `None` when the divisor is zero.
    pub fn div_floor(&self, other: &Int) -> Option<Int> {
        if other.is_zero() {
            return None;
        }
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if !(*a == i64::MIN && *b == -1) {
                return Some(Int::small(a.div_floor(b)));
            }
        }
        Some(Int::from_big(self.to_big().div_floor(&other.to_big())))
    }

    /// Remainder matching [`Int::div_floor`]; takes the sign of the divisor.
    pub fn mod_floor(&self, other: &Int) -> Option<Int> {
        if other.is_zero() {
            return None;
        }
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            if !(*a == i64::MIN && *b == -1) {
                return Some(Int::small(a.mod_floor(b)));
            }
        }
        Some(Int::from_big(self.to_big().mod_floor(&other.to_big())))
    }

    /// Bitwise and on the two's-complement representation.
    pub fn bitand(&self, other: &Int) -> Int {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &other.0) {
            return Int::small(a & b);
        }
        Int::from_big(self.to_big() & other.to_big())
    }

    /// `⌊log2 max(v, 1)⌋`: the bit length of the value minus one, clamped at zero.
    pub fn log2_floor(&self) -> Int {
        match &self.0 {
            Repr::Small(v) if *v <= 1 => Int::ZERO,
            Repr::Small(v) => Int::small(63 - v.leading_zeros() as i64),
            Repr::Big(b) if !b.is_positive() => Int::ZERO,
            Repr::Big(b) => Int::small(b.bits() as i64 - 1),
        }
    }

    pub fn pow2(exp: u32) -> Int {
        if exp < 63 {
            Int::small(1i64 << exp)
        } else {
            Int::from_big(BigInt::one() << exp as usize)
        }
    }

    /// Converts to a `usize` when the value is nonnegative and small enough.
    pub fn to_usize(&self) -> Option<usize> {
        self.as_i64().and_then(|v| usize::try_from(v).ok())
    }
}

impl Default for Int {
    fn default() -> Self {
        Int::ZERO
    }
}

impl From<i64> for Int {
    fn from(v: i64) -> Int {
        Int::small(v)
    }
}

impl From<BigInt> for Int {
    fn from(v: BigInt) -> Int {
        Int::from_big(v)
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Int) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Int) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid integer literal `{0}`")]
pub struct ParseIntError(pub String);

impl FromStr for Int {
    type Err = ParseIntError;

    fn from_str(s: &str) -> Result<Int, ParseIntError> {
        if let Ok(v) = s.parse::<i64>() {
            return Ok(Int::small(v));
        }
        s.parse::<BigInt>()
            .map(Int::from_big)
            .map_err(|_| ParseIntError(s.to_string()))
    }
}

impl serde::Serialize for Int {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Repr::Small(v) => s.serialize_i64(*v),
            Repr::Big(b) => s.serialize_str(&b.to_string()),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Int {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Int, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Int;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Int, E> {
                Ok(Int::small(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Int, E> {
                Ok(Int::from_big(BigInt::from(v)))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Int, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_division_rounds_toward_negative_infinity() {
        let d = |a: i64, b: i64| Int::small(a).div_floor(&Int::small(b)).unwrap();
        let m = |a: i64, b: i64| Int::small(a).mod_floor(&Int::small(b)).unwrap();
        assert_eq!(d(7, 2), Int::small(3));
        assert_eq!(d(-7, 2), Int::small(-4));
        assert_eq!(m(-7, 2), Int::small(1));
        assert_eq!(m(7, -2), Int::small(-1));
        assert!(Int::small(1).div_floor(&Int::ZERO).is_none());
    }

    #[test]
    fn overflow_spills_to_big_and_back() {
        let max = Int::small(i64::MAX);
        let big = max.add(&Int::ONE);
        assert!(big.as_i64().is_none());
        assert_eq!(big.sub(&Int::ONE), max);
        assert_eq!(big.sub(&Int::ONE).as_i64(), Some(i64::MAX));
        assert_eq!(Int::small(i64::MIN).neg().to_string(), "9223372036854775808");
        assert_eq!(
            Int::small(i64::MIN).div_floor(&Int::small(-1)).unwrap(),
            Int::small(i64::MIN).neg()
        );
    }

    #[test]
    fn log2_clamps_small_values() {
        let l = |v: i64| Int::small(v).log2_floor();
        assert_eq!(l(-5), Int::ZERO);
        assert_eq!(l(0), Int::ZERO);
        assert_eq!(l(1), Int::ZERO);
        assert_eq!(l(2), Int::ONE);
        assert_eq!(l(255), Int::small(7));
        assert_eq!(l(256), Int::small(8));
        assert_eq!(Int::pow2(100).log2_floor(), Int::small(100));
    }

    #[test]
    fn ordering_and_parsing_agree_across_representations() {
        let big: Int = "100000000000000000000".parse().unwrap();
        assert!(big > Int::small(i64::MAX));
        assert!(big.neg() < Int::small(i64::MIN));
        assert_eq!("-12".parse::<Int>().unwrap(), Int::small(-12));
        assert!("1x".parse::<Int>().is_err());
    }

    #[test]
    fn bitand_uses_twos_complement() {
        assert_eq!(Int::small(-1).bitand(&Int::small(6)), Int::small(6));
        assert_eq!(Int::small(5).bitand(&Int::small(3)), Int::small(1));
    }
}
