//! Numbers written as plain floats or as multiples of π ("pi/2", "-3pi/4", "2*pi").

use std::f64::consts::PI;

use serde::Deserialize;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let s = s.replace('π', "pi");
    let bad = || format!("cannot parse '{text}' as a number or multiple of pi");
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| bad()).and_then(finite(text));
    };
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let div = match tail {
        "" => 1.0,
        t => t.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if div == 0.0 {
        return Err(bad());
    }
    finite(text)(coef * PI / div)
}

fn finite(text: &str) -> impl Fn(f64) -> Result<f64, String> + '_ {
    move |v| if v.is_finite() { Ok(v) } else { Err(format!("'{text}' is not finite")) }
}

/// Config value that is either a TOML float or an angle expression.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Number {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Number::Float(v) => finite("value")(*v),
            Number::Int(v) => Ok(*v as f64),
            Number::Text(s) => parse_angle(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_forms() {
        for (s, v) in [
            ("pi", PI),
            ("pi/2", PI / 2.0),
            ("-pi/4", -PI / 4.0),
            ("5pi/4", 1.25 * PI),
            ("3*pi/4", 0.75 * PI),
            ("2 pi", 2.0 * PI),
            ("0.5", 0.5),
            ("-1e-3", -1e-3),
            ("0", 0.0),
        ] {
            assert!((parse_angle(s).unwrap() - v).abs() < 1e-15, "{s}");
        }
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pie", "pi/0", "x", "pi/", "nan", "inf"] {
            assert!(parse_angle(s).is_err(), "{s}");
        }
    }
}
