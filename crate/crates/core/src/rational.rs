//! Exact rational arithmetic for levels, weights and randomization constants.

use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

/// Parses `"0.05"`, `"1/20"`, `"5e-2"` or `"3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if s.contains('/') {
        return Rational::from_str(s).map_err(|e| Error::Parse(format!("`{s}`: {e}")));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("`{s}` is not a decimal number")));
    }
    let overflow = || Error::Parse(format!("`{s}` exceeds rational precision"));
    let mut numer: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer
            .checked_mul(10)
            .and_then(|v| v.checked_add(i128::from(c as u8 - b'0')))
            .ok_or_else(overflow)?;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i128
        .checked_pow(scale.unsigned_abs())
        .ok_or_else(overflow)?;
    let mut value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow).ok_or_else(overflow)?)
    } else {
        Rational::new(numer, pow)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `"num/den"` with a 6-significant-digit decimal, e.g. `1/6 (0.166667)`.
pub fn display_exact(r: &Rational) -> String {
    format!("{}/{} ({})", r.numer(), r.denom(), sig6(to_f64(r)))
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x.is_zero() {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn in_open_unit_interval(r: &Rational) -> bool {
    r.is_positive() && *r < Rational::from_integer(1)
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod serde_ratio {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `f64` that keeps infinities as strings (`"inf"`, `"-inf"`).
pub mod serde_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize, Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&Wrap(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
            Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}
