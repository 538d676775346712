//! Exact decimal coordinates.
//!
//! Chart sources write numbers as decimal literals. `Coord` keeps them exact
//! as `mantissa / 10^decimals` with the representation normalized (no
//! trailing zeros in the fraction), so parsing, comparison, arithmetic, and
//! re-serialization never round. Ground-truth answers derived from these
//! values are therefore symbolic, not floating-point.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// Largest number of digits accepted in a literal. Keeps every intermediate
/// product of two coordinates inside i128.
const MAX_DIGITS: usize = 18;

/// An exact decimal number: `mantissa / 10^decimals`, normalized so that
/// `decimals` is minimal (and 0 when the mantissa is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    mantissa: i64,
    decimals: u8,
}

fn pow10_i128(e: u8) -> i128 {
    10_i128.pow(u32::from(e))
}

impl Coord {
    /// Builds `mantissa / 10^decimals` and normalizes the representation.
    pub fn new(mut mantissa: i64, mut decimals: u8) -> Coord {
        if mantissa == 0 {
            decimals = 0;
        }
        while decimals > 0 && mantissa % 10 == 0 {
            mantissa /= 10;
            decimals -= 1;
        }
        Coord { mantissa, decimals }
    }

    pub fn from_int(v: i64) -> Coord {
        Coord::new(v, 0)
    }

    pub fn zero() -> Coord {
        Coord::from_int(0)
    }

    pub fn mantissa(self) -> i64 {
        self.mantissa
    }

    pub fn decimals(self) -> u8 {
        self.decimals
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0
    }

    /// The value as `(numerator, denominator)` with a positive denominator.
    pub fn as_fraction(self) -> (i128, i128) {
        (i128::from(self.mantissa), pow10_i128(self.decimals))
    }

    /// Parses a decimal literal: optional sign, digits, optional fraction.
    /// Rejects empty integer or fraction parts (".5", "5.") and literals
    /// longer than 18 digits.
    pub fn parse(text: &str) -> Result<Coord, String> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if body.is_empty() {
            return Err("expected a number".to_string());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid number `{text}`"));
        }
        if body.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())) {
            return Err(format!("invalid number `{text}`"));
        }
        if int_part.len() + frac_part.len() > MAX_DIGITS {
            return Err(format!("number `{text}` has more than {MAX_DIGITS} digits"));
        }
        let mut mantissa: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa * 10 + i64::from(b - b'0');
        }
        if neg {
            mantissa = -mantissa;
        }
        Ok(Coord::new(mantissa, frac_part.len() as u8))
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(i32::from(self.decimals))
    }

    fn checked_add_sub(self, other: Coord, sign: i128) -> Coord {
        let d = self.decimals.max(other.decimals);
        let a = i128::from(self.mantissa) * pow10_i128(d - self.decimals);
        let b = i128::from(other.mantissa) * pow10_i128(d - other.decimals);
        let m = a + sign * b;
        let m = i64::try_from(m).expect("coordinate arithmetic overflow");
        Coord::new(m, d)
    }
}

impl std::ops::Add for Coord {
    type Output = Coord;
    fn add(self, other: Coord) -> Coord {
        self.checked_add_sub(other, 1)
    }
}

impl std::ops::Sub for Coord {
    type Output = Coord;
    fn sub(self, other: Coord) -> Coord {
        self.checked_add_sub(other, -1)
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Coord) -> Ordering {
        let (an, ad) = self.as_fraction();
        let (bn, bd) = other.as_fraction();
        (an * bd).cmp(&(bn * ad))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Coord) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.decimals == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let digits = self.mantissa.unsigned_abs().to_string();
        let width = usize::from(self.decimals) + 1;
        let padded = format!("{digits:0>width$}");
        let split = padded.len() - usize::from(self.decimals);
        let sign = if self.mantissa < 0 { "-" } else { "" };
        write!(f, "{sign}{}.{}", &padded[..split], &padded[split..])
    }
}

impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Coord, D::Error> {
        let text = String::deserialize(d)?;
        Coord::parse(&text).map_err(D::Error::custom)
    }
}
