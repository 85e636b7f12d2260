//! Route-set solutions and their zero-separated permutation encoding.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;

/// A set of routes. The depot is implicit at both ends of every route.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Solution {
    routes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("non-canonical-separator at position {0}")]
    NonCanonicalSeparator(usize),
    #[error("duplicate-customer {0}")]
    DuplicateCustomer(usize),
    #[error("missing-customer {0}")]
    MissingCustomer(usize),
    #[error("unknown-customer {0}")]
    UnknownCustomer(usize),
}

impl DecodeError {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::NonCanonicalSeparator(_) => "non-canonical-separator",
            Self::DuplicateCustomer(_) => "duplicate-customer",
            Self::MissingCustomer(_) => "missing-customer",
            Self::UnknownCustomer(_) => "unknown-customer",
        }
    }
}

impl Solution {
    pub fn new(routes: Vec<Vec<usize>>) -> Self {
        Self { routes }
    }

    pub fn routes(&self) -> &[Vec<usize>] {
        &self.routes
    }

    pub fn routes_mut(&mut self) -> &mut Vec<Vec<usize>> {
        &mut self.routes
    }

    pub fn into_routes(self) -> Vec<Vec<usize>> {
        self.routes
    }

    /// Number of vehicles used.
    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn customer_count(&self) -> usize {
        self.routes.iter().map(Vec::len).sum()
    }

    /// Customers in visiting order across all routes.
    pub fn visits(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().flatten().copied()
    }

    /// Flat form: routes joined by a single `0`, no leading or trailing zero.
    pub fn encode(&self) -> Vec<usize> {
        let mut flat = Vec::with_capacity(self.customer_count() + self.routes.len());
        for (k, route) in self.routes.iter().enumerate() {
            if k > 0 {
                flat.push(0);
            }
            flat.extend_from_slice(route);
        }
        flat
    }

    /// Parses the canonical flat form against an instance's customer set.
    pub fn decode(flat: &[usize], inst: &Instance) -> Result<Self, DecodeError> {
        let mut routes = Vec::new();
        let mut current = Vec::new();
        let mut seen = HashSet::new();
        for (pos, &id) in flat.iter().enumerate() {
            if id == 0 {
                if current.is_empty() || pos + 1 == flat.len() {
                    return Err(DecodeError::NonCanonicalSeparator(pos));
                }
                routes.push(std::mem::take(&mut current));
                continue;
            }
            if !inst.is_customer(id) {
                return Err(DecodeError::UnknownCustomer(id));
            }
            if !seen.insert(id) {
                return Err(DecodeError::DuplicateCustomer(id));
            }
            current.push(id);
        }
        if !current.is_empty() {
            routes.push(current);
        }
        if let Some(missing) = inst.customers().find(|id| !seen.contains(id)) {
            return Err(DecodeError::MissingCustomer(missing));
        }
        Ok(Self { routes })
    }
}
