//! Scalar coefficient functions on coordinate charts.

mod eval;
mod expr;
mod gcd;
mod parse;
mod poly;
mod zero;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use eval::{eval, eval_atom, AtomValuation, NumericPoint, Valuation};
pub use expr::{atom_coord_derivative, Expr};
pub use gcd::gcd;
pub use poly::{Atom, Elementary, FuncAtom, Monomial, OpaqueAtom, Poly, Q};
pub use zero::{is_zero, is_zero_with, ZeroTestOptions, ZeroVerdict};

#[allow(unused_imports)]
pub(crate) use eval::q_to_f64;
#[allow(unused_imports)]
pub(crate) use poly::{q_frac, q_int};

use crate::error::CoeffError;

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A named coordinate chart together with the opaque symbols allowed on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    name: String,
    coords: Vec<Arc<str>>,
    opaque: BTreeSet<String>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(name: &str, coords: &[S]) -> Result<Self, CoeffError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(coords.len());
        for c in coords {
            let c = c.as_ref();
            if !valid_ident(c) || c.contains("__") {
                return Err(CoeffError::InvalidChart(alloc::format!("bad coordinate name `{c}`")));
            }
            if Elementary::from_name(c).is_some() || c == "diff" {
                return Err(CoeffError::InvalidChart(alloc::format!("`{c}` is reserved")));
            }
            if !seen.insert(c.to_string()) {
                return Err(CoeffError::InvalidChart(alloc::format!("duplicate coordinate `{c}`")));
            }
            out.push(Arc::from(c));
        }
        Ok(Chart {
            name: name.to_string(),
            coords: out,
            opaque: BTreeSet::new(),
        })
    }

    /// Chart with coordinates `prefix1..prefixn`.
    pub fn numbered(name: &str, prefix: &str, n: usize) -> Self {
        let coords: Vec<String> = (1..=n).map(|i| alloc::format!("{prefix}{i}")).collect();
        Chart::new(name, &coords).expect("numbered coordinates are valid")
    }

    /// Declares opaque function symbols usable in [`Chart::parse`].
    pub fn with_opaque<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self, CoeffError> {
        for n in names {
            let n = n.as_ref();
            if !valid_ident(n) || n.contains("__") || self.has_coord(n) {
                return Err(CoeffError::InvalidChart(alloc::format!("bad opaque symbol `{n}`")));
            }
            if Elementary::from_name(n).is_some() || n == "diff" {
                return Err(CoeffError::InvalidChart(alloc::format!("`{n}` is reserved")));
            }
            self.opaque.insert(n.to_string());
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Expr {
        Expr::coord(&self.coords[i])
    }

    pub fn coord_exprs(&self) -> Vec<Expr> {
        self.coords.iter().map(|c| Expr::coord(c)).collect()
    }

    pub fn has_coord(&self, name: &str) -> bool {
        self.coords.iter().any(|c| &**c == name)
    }

    pub fn has_opaque(&self, name: &str) -> bool {
        self.opaque.contains(name)
    }

    pub fn opaque_symbols(&self) -> impl Iterator<Item = &str> {
        self.opaque.iter().map(String::as_str)
    }

    pub fn parse(&self, src: &str) -> Result<Expr, CoeffError> {
        parse::parse(src, self)
    }

    pub fn differentiate(&self, e: &Expr, coord: &str) -> Result<Expr, CoeffError> {
        if !self.has_coord(coord) {
            return Err(CoeffError::UnknownCoordinate(coord.to_string()));
        }
        Ok(e.diff(coord))
    }

    /// The opaque symbol `name` applied to this chart's coordinates.
    pub fn opaque_field(&self, name: &str) -> Expr {
        Expr::opaque(name, self.coord_exprs(), Vec::new())
    }
}
