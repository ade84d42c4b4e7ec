use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    GnnGenie,
    SwmmseGenie,
    GnnGmmH,
    GnnGmmY,
    SwmmseGmmH,
    SwmmseGmmY,
    IwmmseDftLs,
    IwmmseDftGmmEst,
}

impl MethodKind {
    pub const ALL: [MethodKind; 8] = [
        MethodKind::GnnGenie,
        MethodKind::SwmmseGenie,
        MethodKind::GnnGmmH,
        MethodKind::GnnGmmY,
        MethodKind::SwmmseGmmH,
        MethodKind::SwmmseGmmY,
        MethodKind::IwmmseDftLs,
        MethodKind::IwmmseDftGmmEst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::GnnGenie => "gnn-genie",
            MethodKind::SwmmseGenie => "swmmse-genie",
            MethodKind::GnnGmmH => "gnn-gmm-h",
            MethodKind::GnnGmmY => "gnn-gmm-y",
            MethodKind::SwmmseGmmH => "swmmse-gmm-h",
            MethodKind::SwmmseGmmY => "swmmse-gmm-y",
            MethodKind::IwmmseDftLs => "iwmmse-dft-ls",
            MethodKind::IwmmseDftGmmEst => "iwmmse-dft-gmmest",
        }
    }

    pub fn is_gnn(self) -> bool {
        matches!(self, MethodKind::GnnGenie | MethodKind::GnnGmmH | MethodKind::GnnGmmY)
    }

    pub fn is_iterative(self) -> bool {
        !self.is_gnn()
    }

    pub fn needs_gmm(self) -> bool {
        !matches!(
            self,
            MethodKind::GnnGenie | MethodKind::SwmmseGenie | MethodKind::IwmmseDftLs
        )
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    }
}

/// A method plus an optional iteration cap override, written `name@cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Method {
    pub kind: MethodKind,
    pub max_iters: Option<usize>,
}

impl Method {
    pub fn new(kind: MethodKind) -> Self {
        Self { kind, max_iters: None }
    }

    pub fn with_iters(kind: MethodKind, max_iters: usize) -> Self {
        Self {
            kind,
            max_iters: Some(max_iters),
        }
    }

    pub fn all() -> Vec<Method> {
        MethodKind::ALL.iter().copied().map(Method::new).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max_iters {
            Some(n) => write!(f, "{}@{n}", self.kind.name()),
            None => f.write_str(self.kind.name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, cap) = match s.split_once('@') {
            Some((n, c)) => (n, Some(c)),
            None => (s, None),
        };
        let unknown = || Error::UnknownMethod {
            name: s.to_string(),
            valid: MethodKind::valid_names(),
        };
        let lowered = name.to_ascii_lowercase().replace(['_', ' '], "-");
        let kind = MethodKind::ALL
            .iter()
            .copied()
            .find(|m| m.name() == lowered)
            .ok_or_else(unknown)?;
        let max_iters = match cap {
            None => None,
            Some(c) => {
                if !kind.is_iterative() {
                    return Err(Error::invalid(format!("{} takes no iteration cap", kind.name())));
                }
                let n: usize = c
                    .parse()
                    .map_err(|_| Error::invalid(format!("invalid iteration cap `{c}`")))?;
                if n == 0 {
                    return Err(Error::invalid("iteration cap must be at least 1"));
                }
                Some(n)
            }
        };
        Ok(Method { kind, max_iters })
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        return Err(Error::invalid("method list is empty"));
    }
    Ok(methods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::all() {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        let capped: Method = "swmmse-gmm-y@100".parse().unwrap();
        assert_eq!(capped, Method::with_iters(MethodKind::SwmmseGmmY, 100));
        assert_eq!(capped.to_string(), "swmmse-gmm-y@100");
    }

    #[test]
    fn unknown_name_lists_valid_methods() {
        match "gnn-magic".parse::<Method>() {
            Err(Error::UnknownMethod { valid, .. }) => assert!(valid.contains("iwmmse-dft-ls")),
            other => panic!("{other:?}"),
        }
        assert!("gnn-genie@10".parse::<Method>().is_err());
    }

    #[test]
    fn list_parsing() {
        let m = parse_methods("gnn-genie, swmmse-genie@20").unwrap();
        assert_eq!(m.len(), 2);
        assert!(parse_methods(" , ").is_err());
    }
}
