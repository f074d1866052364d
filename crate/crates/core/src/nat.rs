//! Arbitrary-precision naturals for scale sequences and bound functions.
//!
//! Scale values grow doubly exponentially, so magnitudes are kept as
//! [`BigUint`]. Everything that enumerates (branches, successor sets) narrows
//! to `u64` first and refuses values that do not fit.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Base-2 logarithm of a positive big natural, as `f64`.
pub fn log2(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 63 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let shift = bits - 63;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.log2() + shift as f64
}

/// `base^exp` with an explicit ceiling on the result size in bits.
pub fn pow_capped(base: &BigUint, exp: u64, max_bits: u64) -> Option<BigUint> {
    if base.is_zero() {
        return Some(if exp == 0 { BigUint::one() } else { BigUint::zero() });
    }
    let est = (log2(base) * exp as f64).ceil();
    if est > max_bits as f64 + 1.0 {
        return None;
    }
    let exp32 = u32::try_from(exp).ok()?;
    Some(base.pow(exp32))
}

/// A non-negative rational `num / den`, compared exactly.
#[derive(Clone, Debug, Serialize)]
pub struct Ratio {
    #[serde(with = "serde_nat")]
    pub num: BigUint,
    #[serde(with = "serde_nat")]
    pub den: BigUint,
}

impl Ratio {
    pub fn new(num: BigUint, den: BigUint) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Ratio { num, den }
    }

    pub fn to_f64(&self) -> f64 {
        (log2(&self.num) - log2(&self.den)).exp2()
    }

    /// `self < a / b`
    pub fn lt_frac(&self, a: &BigUint, b: &BigUint) -> bool {
        &self.num * b < a * &self.den
    }

    pub fn min(self, other: Ratio) -> Ratio {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

/// A finite sequence of positive naturals `v_0 .. v_{K-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundFn(Vec<BigUint>);

impl BoundFn {
    /// Builds a bound function; every value must be at least 1.
    pub fn new(values: Vec<BigUint>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| v.is_zero()) {
            return Err(Error::Malformed(format!("bound value at level {k} is 0")));
        }
        Ok(BoundFn(values))
    }

    pub fn from_u64s(values: &[u64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| BigUint::from(v)).collect())
    }

    pub fn constant(value: u64, window: usize) -> Result<Self> {
        Self::from_u64s(&vec![value; window])
    }

    pub fn window(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, k: usize) -> &BigUint {
        &self.0[k]
    }

    pub fn values(&self) -> &[BigUint] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &BigUint> {
        self.0.iter()
    }

    /// Narrows every value to `u64`.
    pub fn to_u64s(&self) -> Result<Vec<u64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(k, v)| {
                v.to_u64()
                    .ok_or_else(|| Error::TooLarge(format!("bound at level {k} has {} bits", v.bits())))
            })
            .collect()
    }

    /// Product of all values.
    pub fn product(&self) -> BigUint {
        self.0.iter().fold(BigUint::one(), |acc, v| acc * v)
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &BoundFn) -> bool {
        self.window() == other.window() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Restriction to the given levels, in the given order.
    pub fn select(&self, levels: &[usize]) -> BoundFn {
        BoundFn(levels.iter().map(|&k| self.0[k].clone()).collect())
    }

    pub fn pointwise(&self, other: &BoundFn, op: impl Fn(&BigUint, &BigUint) -> BigUint) -> Result<BoundFn> {
        if self.window() != other.window() {
            return Err(Error::WindowMismatch {
                expected: self.window(),
                got: other.window(),
            });
        }
        BoundFn::new(self.0.iter().zip(&other.0).map(|(a, b)| op(a, b)).collect())
    }
}

impl fmt::Debug for BoundFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter().map(|v| v.to_string())).finish()
    }
}

impl fmt::Display for BoundFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for BoundFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_nat::vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for BoundFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_nat::vec::deserialize(d)?;
        BoundFn::new(v).map_err(serde::de::Error::custom)
    }
}

/// JSON encoding of naturals: a plain number when it fits `u64`, otherwise a
/// decimal string.
pub mod serde_nat {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(u64),
        Str(String),
    }

    fn to_repr(v: &BigUint) -> serde_json::Value {
        match v.to_u64() {
            Some(x) => serde_json::Value::from(x),
            None => serde_json::Value::from(v.to_str_radix(10)),
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> std::result::Result<BigUint, E> {
        match r {
            Repr::Num(x) => Ok(BigUint::from(x)),
            Repr::Str(s) => {
                BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| E::custom(format!("not a natural number: {s:?}")))
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> std::result::Result<S::Ok, S::Error> {
            let items: Vec<serde_json::Value> = v.iter().map(to_repr).collect();
            items.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigUint>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_of_large_power() {
        let x = BigUint::one() << 65536u32;
        assert!((log2(&x) - 65536.0).abs() < 1e-9);
        assert!((log2(&BigUint::from(1024u32)) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn json_uses_strings_only_past_u64() {
        let b = BoundFn::new(vec![BigUint::from(3u32), BigUint::one() << 70u32]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"[3,"1180591620717411303424"]"#);
        let back: BoundFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn zero_is_rejected() {
        assert!(BoundFn::from_u64s(&[1, 0]).is_err());
    }
}
