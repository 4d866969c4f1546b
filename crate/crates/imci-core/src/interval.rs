//! Confidence / credible interval type shared by every estimator.

use crate::prob::Prob;
use serde::Serialize;
use std::fmt;

/// Which construction produced an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "BAYES")]
    Bayes,
    #[serde(rename = "IM")]
    Im,
    #[serde(rename = "NIM")]
    Nim,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bayes => "BAYES",
            Method::Im => "IM",
            Method::Nim => "NIM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Method, String> {
        match s.to_ascii_lowercase().as_str() {
            "bayes" => Ok(Method::Bayes),
            "im" => Ok(Method::Im),
            "nim" => Ok(Method::Nim),
            other => Err(format!("unknown method '{other}' (expected bayes, im, or nim)")),
        }
    }
}

/// A closed interval for a constrained parameter, with its confidence or
/// credibility level and boundary-truncation flags.
///
/// `lower <= upper` always, and both endpoints are nonnegative for the
/// constrained models in this crate. The degenerate interval [0, 0] is a
/// legal output: when every candidate conflicts with the constraint the
/// boundary point is the answer, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    /// The level 1 - alpha.
    pub level: Prob,
    pub method: Method,
    /// The lower endpoint was clipped at the constraint boundary.
    pub truncated_lower: bool,
    /// The upper endpoint was clipped at the constraint boundary.
    pub truncated_upper: bool,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Closed-interval membership, used for coverage counting.
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.4}, {:.4}]", self.lower, self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_closed() {
        let iv = Interval {
            lower: 0.0,
            upper: 2.5,
            level: Prob::new(0.9).unwrap(),
            method: Method::Im,
            truncated_lower: true,
            truncated_upper: false,
        };
        assert!(iv.contains(0.0));
        assert!(iv.contains(2.5));
        assert!(!iv.contains(2.5000001));
        assert_eq!(iv.width(), 2.5);
    }

    #[test]
    fn method_parses_case_insensitively() {
        assert_eq!("NIM".parse::<Method>().unwrap(), Method::Nim);
        assert_eq!("bayes".parse::<Method>().unwrap(), Method::Bayes);
        assert!("eb".parse::<Method>().is_err());
    }
}
