use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base-case length used for wall-clock work.
pub const DEFAULT_BASE_CUTOFF: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Schoolbook,
    Karatsuba,
    Toom,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Schoolbook => "schoolbook",
            Method::Karatsuba => "karatsuba",
            Method::Toom => "toom",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schoolbook" => Ok(Method::Schoolbook),
            "karatsuba" => Ok(Method::Karatsuba),
            "toom" | "toomcook" | "toom-cook" => Ok(Method::Toom),
            other => Err(Error::InvalidPlan(format!("unknown method `{other}`"))),
        }
    }
}

/// A multiplication method together with how it is executed.
///
/// `k` is 1 for schoolbook, 2 for Karatsuba and 3 or 4 for Toom-Cook.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodPlan {
    pub method: Method,
    pub k: u32,
    pub workers: u32,
    pub base_cutoff: u32,
}

impl MethodPlan {
    pub fn schoolbook() -> Self {
        Self {
            method: Method::Schoolbook,
            k: 1,
            workers: 1,
            base_cutoff: 1,
        }
    }

    pub fn karatsuba(base_cutoff: u32) -> Self {
        Self {
            method: Method::Karatsuba,
            k: 2,
            workers: 1,
            base_cutoff,
        }
    }

    pub fn toom(k: u32, base_cutoff: u32) -> Self {
        Self {
            method: Method::Toom,
            k,
            workers: 1,
            base_cutoff,
        }
    }

    pub fn with_workers(self, workers: u32) -> Self {
        Self { workers, ..self }
    }

    pub fn with_cutoff(self, base_cutoff: u32) -> Self {
        Self { base_cutoff, ..self }
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidPlan("workers must be at least 1".into()));
        }
        if self.base_cutoff == 0 {
            return Err(Error::InvalidPlan("base_cutoff must be at least 1".into()));
        }
        match self.method {
            Method::Schoolbook => Ok(()),
            Method::Karatsuba if self.k == 2 => Ok(()),
            Method::Karatsuba => Err(Error::InvalidPlan(format!("karatsuba requires k = 2, got {}", self.k))),
            Method::Toom if (3..=4).contains(&self.k) => Ok(()),
            Method::Toom => Err(Error::InvalidPlan(format!(
                "toom-cook supports k in 3..=4, got {}",
                self.k
            ))),
        }
    }

    /// Short stable label such as `karatsuba`, `toom3x5` or `toom4/c16`.
    pub fn label(&self) -> String {
        let mut s = match self.method {
            Method::Toom => format!("toom{}", self.k),
            m => String::from(m.name()),
        };
        if self.workers != 1 {
            s.push_str(&format!("x{}", self.workers));
        }
        if self.method != Method::Schoolbook && self.base_cutoff != DEFAULT_BASE_CUTOFF {
            s.push_str(&format!("/c{}", self.base_cutoff));
        }
        s
    }
}

impl fmt::Display for MethodPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses the compact plan syntax `name[xWORKERS][/cCUTOFF]`, where `name` is
/// `schoolbook`, `karatsuba`, `toom3` or `toom4`. This is the inverse of
/// [`MethodPlan::label`].
impl FromStr for MethodPlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPlan(format!("cannot parse plan `{s}`"));
        let (head, cutoff) = match s.split_once("/c") {
            Some((h, c)) => (h, c.parse::<u32>().map_err(|_| bad())?),
            None => (s, DEFAULT_BASE_CUTOFF),
        };
        let (name, workers) = match head.rsplit_once('x') {
            Some((n, w)) if !w.is_empty() && w.bytes().all(|b| b.is_ascii_digit()) => {
                (n, w.parse::<u32>().map_err(|_| bad())?)
            }
            _ => (head, 1),
        };
        let plan = match name {
            "schoolbook" => MethodPlan::schoolbook(),
            "karatsuba" => MethodPlan::karatsuba(cutoff),
            _ => {
                let k = name
                    .strip_prefix("toom")
                    .ok_or_else(bad)?
                    .parse::<u32>()
                    .map_err(|_| bad())?;
                MethodPlan::toom(k, cutoff)
            }
        }
        .with_workers(workers);
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(MethodPlan::karatsuba(1).validate().is_ok());
        assert!(MethodPlan::toom(3, 1).validate().is_ok());
        assert!(MethodPlan::toom(4, 1).validate().is_ok());
        assert!(MethodPlan::toom(2, 1).validate().is_err());
        assert!(MethodPlan::toom(5, 1).validate().is_err());
        assert!(MethodPlan {
            k: 3,
            ..MethodPlan::karatsuba(1)
        }
        .validate()
        .is_err());
        assert!(MethodPlan::karatsuba(0).validate().is_err());
        assert!(MethodPlan::toom(3, 8).with_workers(0).validate().is_err());
    }

    #[test]
    fn labels_round_trip() {
        for plan in [
            MethodPlan::schoolbook(),
            MethodPlan::karatsuba(DEFAULT_BASE_CUTOFF),
            MethodPlan::karatsuba(1),
            MethodPlan::toom(3, DEFAULT_BASE_CUTOFF).with_workers(5),
            MethodPlan::toom(4, 16),
            MethodPlan::karatsuba(8).with_workers(3),
        ] {
            assert_eq!(plan.label().parse::<MethodPlan>().unwrap(), plan, "{}", plan.label());
        }
        assert_eq!("toom3x5".parse::<MethodPlan>().unwrap().workers, 5);
        assert!("toom7".parse::<MethodPlan>().is_err());
        assert!("fft".parse::<MethodPlan>().is_err());
    }
}
