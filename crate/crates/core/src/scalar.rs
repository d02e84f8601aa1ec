//! Floating-point abstraction used by the closed-form results.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the analytic formulas are evaluated in.
///
/// Everything in [`crate::theory`] is written against this trait so the same
/// code runs in `f32` for quick plotting grids and `f64` for the reference
/// values. The only operation not covered by [`Float`] is the complementary
/// error function, which we take from `libm`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn erfc(self) -> Self;

    /// Lossless-enough conversion of literals; panics only for values the
    /// type cannot represent at all, which never happens for the constants
    /// used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Ratio-type statistic that may be infinite or undefined.
///
/// WR and WO are quotients of proportions, so a zero denominator is a real
/// outcome (total dominance, all ties) rather than an error. Reports carry
/// the flag instead of an IEEE sentinel so the JSON stays unambiguous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioValue<T> {
    Finite(T),
    /// Numerator positive, denominator zero.
    Infinite,
    /// Numerator and denominator both zero.
    Undefined,
}

impl<T: Scalar> RatioValue<T> {
    pub fn from_parts(num: T, den: T) -> Self {
        if den > T::zero() {
            RatioValue::Finite(num / den)
        } else if num > T::zero() {
            RatioValue::Infinite
        } else {
            RatioValue::Undefined
        }
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            RatioValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// `true` when the ratio is known to exceed 1 (infinite counts).
    pub fn exceeds_one(&self) -> bool {
        match *self {
            RatioValue::Finite(v) => v > T::one(),
            RatioValue::Infinite => true,
            RatioValue::Undefined => false,
        }
    }

    pub fn flag(&self) -> &'static str {
        match self {
            RatioValue::Finite(_) => "finite",
            RatioValue::Infinite => "infinite",
            RatioValue::Undefined => "undefined",
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !matches!(self, RatioValue::Finite(_))
    }
}

impl<T: Scalar> serde::Serialize for RatioValue<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("RatioValue", 2)?;
        s.serialize_field("value", &self.finite().and_then(|v| v.to_f64()))?;
        s.serialize_field("flag", self.flag())?;
        s.end()
    }
}

impl<'de, T: Scalar> serde::Deserialize<'de> for RatioValue<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            value: Option<f64>,
            flag: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        match (raw.flag.as_str(), raw.value) {
            ("finite", Some(v)) => T::from_f64(v)
                .map(RatioValue::Finite)
                .ok_or_else(|| serde::de::Error::custom("value out of range")),
            ("infinite", None) => Ok(RatioValue::Infinite),
            ("undefined", None) => Ok(RatioValue::Undefined),
            (flag, value) => Err(serde::de::Error::custom(format!(
                "inconsistent ratio value: flag {flag:?} with value {value:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_flags() {
        assert_eq!(RatioValue::from_parts(1.0, 2.0), RatioValue::Finite(0.5));
        assert_eq!(RatioValue::from_parts(1.0, 0.0), RatioValue::<f64>::Infinite);
        assert_eq!(RatioValue::from_parts(0.0, 0.0), RatioValue::<f64>::Undefined);
        assert_eq!(RatioValue::from_parts(0.0, 3.0), RatioValue::Finite(0.0));
    }

    #[test]
    fn ratio_json_has_no_ieee_literals() {
        let s = serde_json::to_string(&RatioValue::<f64>::Infinite).unwrap();
        assert_eq!(s, r#"{"value":null,"flag":"infinite"}"#);
        let back: RatioValue<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, RatioValue::Infinite);
        let f: RatioValue<f64> = serde_json::from_str(r#"{"value":1.25,"flag":"finite"}"#).unwrap();
        assert_eq!(f, RatioValue::Finite(1.25));
        assert!(serde_json::from_str::<RatioValue<f64>>(r#"{"value":1.0,"flag":"infinite"}"#).is_err());
    }
}
