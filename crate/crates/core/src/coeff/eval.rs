//! Floating-point evaluation of coefficient expressions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use super::expr::Expr;
use super::poly::{Atom, Elementary, OpaqueAtom, Poly, Q};
use crate::error::EvalError;

/// Supplies numeric values for the free symbols of an expression.
pub trait Valuation {
    fn coord(&self, name: &str) -> Option<f64>;
    fn opaque(&self, atom: &OpaqueAtom) -> Option<f64>;
}

/// Coordinate values plus values of opaque symbols keyed by `(name, partials)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumericPoint {
    pub coords: BTreeMap<String, f64>,
    pub opaque: BTreeMap<(String, Vec<u32>), f64>,
}

impl NumericPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_coord(mut self, name: &str, v: f64) -> Self {
        self.coords.insert(name.to_string(), v);
        self
    }

    pub fn with_opaque(mut self, name: &str, partials: &[u32], v: f64) -> Self {
        let mut p = partials.to_vec();
        p.sort_unstable();
        self.opaque.insert((name.to_string(), p), v);
        self
    }

    pub fn set_coord(&mut self, name: &str, v: f64) {
        self.coords.insert(name.to_string(), v);
    }
}

impl Valuation for NumericPoint {
    fn coord(&self, name: &str) -> Option<f64> {
        self.coords.get(name).copied()
    }

    fn opaque(&self, atom: &OpaqueAtom) -> Option<f64> {
        self.opaque
            .get(&(atom.name.to_string(), atom.partials.clone()))
            .copied()
    }
}

/// Values for every atom, used by the sampler so that distinct opaque
/// applications are independent.
#[derive(Clone, Debug, Default)]
pub struct AtomValuation {
    pub values: BTreeMap<Atom, f64>,
}

impl Valuation for AtomValuation {
    fn coord(&self, name: &str) -> Option<f64> {
        self.values.get(&Atom::coord(name)).copied()
    }

    fn opaque(&self, atom: &OpaqueAtom) -> Option<f64> {
        self.values
            .get(&Atom::Opaque(alloc::sync::Arc::new(atom.clone())))
            .copied()
    }
}

pub(crate) fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn eval_atom(a: &Atom, v: &dyn Valuation) -> Result<f64, EvalError> {
    match a {
        Atom::Coord(c) => v
            .coord(c)
            .ok_or_else(|| EvalError::MissingCoordinate(c.to_string())),
        Atom::Opaque(o) => v.opaque(o).ok_or_else(|| EvalError::MissingOpaque(a.to_string())),
        Atom::Func(fa) => {
            let x = eval(&fa.arg, v)?;
            match fa.func {
                Elementary::Sin => Ok(libm::sin(x)),
                Elementary::Cos => Ok(libm::cos(x)),
                Elementary::Exp => Ok(libm::exp(x)),
                Elementary::Sqrt => {
                    if x < 0.0 {
                        Err(EvalError::Domain(alloc::format!("sqrt({x})")))
                    } else {
                        Ok(libm::sqrt(x))
                    }
                }
            }
        }
    }
}

fn eval_poly(p: &Poly, v: &dyn Valuation, cache: &mut BTreeMap<Atom, f64>) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (m, c) in p.terms() {
        let mut t = q_to_f64(c);
        for (a, e) in m.factors() {
            let x = match cache.get(a) {
                Some(x) => *x,
                None => {
                    let x = eval_atom(a, v)?;
                    cache.insert(a.clone(), x);
                    x
                }
            };
            t *= libm::pow(x, *e as f64);
        }
        acc += t;
    }
    Ok(acc)
}

/// IEEE evaluation of an expression.
pub fn eval(e: &Expr, v: &dyn Valuation) -> Result<f64, EvalError> {
    let mut cache = BTreeMap::new();
    let n = eval_poly(e.num(), v, &mut cache)?;
    if e.is_polynomial() {
        return Ok(n);
    }
    let d = eval_poly(e.den(), v, &mut cache)?;
    if d.abs() < 1e-300 {
        return Err(EvalError::Singular(d));
    }
    Ok(n / d)
}

impl Expr {
    pub fn eval(&self, v: &dyn Valuation) -> Result<f64, EvalError> {
        eval(self, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Chart;

    #[test]
    fn evaluates_sums_and_lookups() {
        let c = Chart::new("M", &["m1", "m2"]).unwrap().with_opaque(&["f"]).unwrap();
        let p = NumericPoint::new().with_coord("m1", 1.0).with_coord("m2", 2.0);
        assert_eq!(c.parse("m1 + m2").unwrap().eval(&p).unwrap(), 3.0);
        let p0 = NumericPoint::new().with_coord("m1", 0.0);
        assert!(matches!(
            c.parse("1/m1").unwrap().eval(&p0),
            Err(EvalError::Singular(_))
        ));
        let pf = NumericPoint::new().with_opaque("f", &[0], 0.5);
        assert_eq!(c.parse("f__1").unwrap().eval(&pf).unwrap(), 0.5);
        assert!(matches!(
            c.parse("sqrt(m1 - 3)").unwrap().eval(&p),
            Err(EvalError::Domain(_))
        ));
    }
}
