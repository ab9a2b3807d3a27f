use std::fmt;

use crate::error::{Error, Result};

/// Ordered finite set of symbolic values. Values are addressed by their position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteDomain {
    values: Vec<String>,
}

impl FiniteDomain {
    pub fn new<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Result<Self> {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(Error::InvalidDomain {
                variable: String::new(),
                reason: "domain must contain at least one value".into(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if v.is_empty() || v.chars().any(|c| c.is_whitespace() || ",=:".contains(c)) {
                return Err(Error::InvalidDomain {
                    variable: String::new(),
                    reason: format!("value `{v}` is not a plain symbol"),
                });
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidDomain {
                    variable: String::new(),
                    reason: format!("duplicate value `{v}`"),
                });
            }
        }
        Ok(Self { values })
    }

    /// `{0, 1, ..., n-1}` rendered as decimal symbols.
    pub fn range(n: usize) -> Self {
        assert!(n >= 1, "domain must be nonempty");
        Self {
            values: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn binary() -> Self {
        Self::range(2)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn value(&self, index: usize) -> &str {
        &self.values[index]
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

impl fmt::Display for FiniteDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.values.join(", "))
    }
}

/// A named variable together with its domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub domain: FiniteDomain,
}

impl Variable {
    pub fn new(name: impl Into<String>, domain: FiniteDomain) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || ",=:{}|".contains(c)) {
            return Err(Error::InvalidArgument(format!(
                "variable name `{name}` must be a nonempty plain symbol"
            )));
        }
        Ok(Self { name, domain })
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, FiniteDomain::binary()).expect("valid name")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(FiniteDomain::new(Vec::<String>::new()).is_err());
        assert!(FiniteDomain::new(["a", "b", "a"]).is_err());
        let d = FiniteDomain::new(["lo", "hi"]).unwrap();
        assert_eq!(d.index_of("hi"), Some(1));
        assert_eq!(d.index_of("mid"), None);
    }

    #[test]
    fn variable_names_are_symbols() {
        assert!(Variable::new("", FiniteDomain::binary()).is_err());
        assert!(Variable::new("a b", FiniteDomain::binary()).is_err());
        assert!(Variable::new("Y_hat", FiniteDomain::binary()).is_ok());
    }
}
