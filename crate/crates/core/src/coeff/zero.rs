//! Zero testing: exact canonical form first, seeded numeric sampling as fallback.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{eval, AtomValuation};
use super::expr::Expr;
use super::poly::{Atom, Poly};
use crate::error::EvalError;

/// Outcome of a zero test.
#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    /// The canonical form is the zero rational function (valid off the
    /// listed cancelled factors).
    ExactZero { caveats: Vec<Poly> },
    /// No exact cancellation, but every sample was below the residual tolerance.
    NumericZero {
        samples: usize,
        max_abs: f64,
        caveats: Vec<Poly>,
    },
    NonZero {
        witness: BTreeMap<String, f64>,
        value: f64,
    },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ZeroVerdict::ExactZero { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTestOptions {
    pub samples: usize,
    pub tolerance: f64,
    pub witness_threshold: f64,
    pub seed: u64,
    pub range: f64,
}

impl Default for ZeroTestOptions {
    fn default() -> Self {
        ZeroTestOptions {
            samples: 20,
            tolerance: 1e-9,
            witness_threshold: 1e-6,
            seed: 0x5eed,
            range: 2.0,
        }
    }
}

fn leaf_atoms(e: &Expr) -> Vec<Atom> {
    e.all_atoms()
        .into_iter()
        .filter(|a| !matches!(a, Atom::Func(_)))
        .collect()
}

fn describe(val: &AtomValuation) -> BTreeMap<String, f64> {
    val.values.iter().map(|(a, v)| (a.to_string(), *v)).collect()
}

/// Samples `e` at random points; returns the valuations together with values.
fn sample(e: &Expr, atoms: &[Atom], rng: &mut ChaCha8Rng, range: f64) -> Result<(AtomValuation, f64), EvalError> {
    let mut val = AtomValuation::default();
    for a in atoms {
        val.values.insert(a.clone(), rng.gen_range(-range..range));
    }
    let v = eval(e, &val)?;
    Ok((val, v))
}

pub fn is_zero(e: &Expr) -> Result<ZeroVerdict, EvalError> {
    is_zero_with(e, &ZeroTestOptions::default())
}

pub fn is_zero_with(e: &Expr, opts: &ZeroTestOptions) -> Result<ZeroVerdict, EvalError> {
    if e.is_zero() {
        return Ok(ZeroVerdict::ExactZero {
            caveats: e.caveats().to_vec(),
        });
    }
    let atoms = leaf_atoms(e);
    let exact = !e.has_transcendental();

    let mut ones = AtomValuation::default();
    for a in &atoms {
        ones.values.insert(a.clone(), 1.0);
    }
    if let Ok(v) = eval(e, &ones) {
        if v.abs() > opts.witness_threshold {
            return Ok(ZeroVerdict::NonZero {
                witness: describe(&ones),
                value: v,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut good = 0usize;
    let mut attempts = 0usize;
    let mut max_abs = 0.0f64;
    let mut best: Option<(AtomValuation, f64)> = None;
    let mut last_err = None;
    while good < opts.samples {
        if attempts >= 10 * opts.samples {
            if exact {
                break;
            }
            return Err(last_err.unwrap_or(EvalError::Singular(0.0)));
        }
        attempts += 1;
        match sample(e, &atoms, &mut rng, opts.range) {
            Ok((val, v)) if v.is_finite() => {
                good += 1;
                if v.abs() > max_abs || best.is_none() {
                    max_abs = max_abs.max(v.abs());
                    best = Some((val, v));
                }
                if v.abs() > opts.witness_threshold {
                    break;
                }
            }
            Ok(_) => last_err = Some(EvalError::Singular(f64::NAN)),
            Err(err) => last_err = Some(err),
        }
    }
    if exact || max_abs >= opts.tolerance {
        let (val, v) = best.unwrap_or((ones, f64::NAN));
        return Ok(ZeroVerdict::NonZero {
            witness: describe(&val),
            value: v,
        });
    }
    Ok(ZeroVerdict::NumericZero {
        samples: good,
        max_abs,
        caveats: e.caveats().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Chart;

    #[test]
    fn exact_numeric_and_nonzero() {
        let c = Chart::new("M", &["m1", "m2"]).unwrap();
        assert!(matches!(
            is_zero(&c.parse("m1 - m1").unwrap()).unwrap(),
            ZeroVerdict::ExactZero { .. }
        ));
        assert!(matches!(
            is_zero(&c.parse("sin(m1)^2 + cos(m1)^2 - 1").unwrap()).unwrap(),
            ZeroVerdict::NumericZero { .. }
        ));
        match is_zero(&c.parse("m1*m2").unwrap()).unwrap() {
            ZeroVerdict::NonZero { witness, value } => {
                assert_eq!(value, 1.0);
                assert_eq!(witness.get("m1"), Some(&1.0));
            }
            v => panic!("{v:?}"),
        }
    }
}
