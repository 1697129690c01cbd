//! Exact rational numbers and their text form.
//!
//! Every quantity in the crate is a [`Q`]. The text form is `p/q` (or a bare
//! integer when the denominator is one); integers are accepted on input too.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Arbitrary-precision rational.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse rational from `{0}`")]
pub struct ParseRationalError(pub String);

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn half(x: &Q) -> Q {
    x / q(2)
}

pub fn midpoint(a: &Q, b: &Q) -> Q {
    (a + b) / q(2)
}

pub fn min_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_q<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}

/// Parses `p/q`, `-p/q` or an integer. Whitespace around the parts is ignored.
pub fn parse(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let t = text.trim();
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(Q::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| err())?;
            Ok(Q::from_integer(n))
        }
    }
}

/// Formats as `p/q`, or `p` for integers.
pub fn format(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decimal approximation for human-facing summaries only.
pub fn approx(x: &Q) -> f64 {
    let n: f64 = x.numer().to_string().parse().unwrap_or(f64::NAN);
    let d: f64 = x.denom().to_string().parse().unwrap_or(f64::NAN);
    n / d
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}

/// Display adapter printing `p/q`.
pub struct Show<'a>(pub &'a Q);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(self.0))
    }
}

struct QVisitor;

impl<'de> Visitor<'de> for QVisitor {
    type Value = Q;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer or a \"p/q\" string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Q, E> {
        Ok(q(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Q, E> {
        Ok(Q::from_integer(BigInt::from(v)))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Q, E> {
        Err(E::custom(format!(
            "floating point value {v} not accepted; use an integer or \"p/q\""
        )))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Q, E> {
        parse(v).map_err(E::custom)
    }
}

/// Serde adapter for `Q` fields: `#[serde(with = "crate::rational::serde_q")]`.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        d.deserialize_any(QVisitor)
    }
}

/// Serde adapter for `Option<Q>` fields; `null` maps to `None`.
pub mod serde_opt_q {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "serde_q")] Q);

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&format(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        let w: Option<Wrap> = Option::deserialize(d)?;
        Ok(w.map(|w| w.0))
    }
}

/// Serde adapter for `Vec<Q>` fields.
pub mod serde_vec_q {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "serde_q")] Q);

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(x.iter().map(format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let w: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(w.into_iter().map(|w| w.0).collect())
    }
}
