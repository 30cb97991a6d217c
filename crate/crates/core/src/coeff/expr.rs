//! Scalar coefficient functions in rational canonical form.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{q_frac, q_int, Atom, Elementary, FuncAtom, Monomial, OpaqueAtom, Poly, Q};
use crate::error::CoeffError;

/// A coefficient function `num / den` with `den` glex-monic and coprime to `num`.
///
/// Equality and ordering ignore the recorded domain caveats: two expressions
/// are equal exactly when their canonical forms agree.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

struct Inner {
    num: Poly,
    den: Poly,
    /// Monic factors cancelled between numerator and denominator; the
    /// expression is only guaranteed to agree with its source where these
    /// do not vanish.
    caveats: Vec<Poly>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.num == other.0.num && self.0.den == other.0.den)
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0
            .num
            .cmp(&other.0.num)
            .then_with(|| self.0.den.cmp(&other.0.den))
    }
}

impl core::hash::Hash for Expr {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.num.hash(state);
        self.0.den.hash(state);
    }
}

impl core::fmt::Debug for Expr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

fn merge_caveats(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    let mut out: Vec<Poly> = a.iter().chain(b.iter()).cloned().collect();
    out.sort();
    out.dedup();
    out
}

impl Expr {
    fn raw(num: Poly, den: Poly, caveats: Vec<Poly>) -> Self {
        Expr(Arc::new(Inner { num, den, caveats }))
    }

    pub fn from_poly(p: Poly) -> Self {
        Expr::raw(p, Poly::one(), Vec::new())
    }

    /// Builds `num / den` in canonical form, cancelling common factors.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Self, CoeffError> {
        Self::from_parts_with(num, den, Vec::new())
    }

    fn from_parts_with(num: Poly, den: Poly, mut caveats: Vec<Poly>) -> Result<Self, CoeffError> {
        if den.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        if num.is_zero() {
            if !den.is_constant() {
                caveats.push(den.monic());
                caveats.sort();
                caveats.dedup();
            }
            return Ok(Expr::raw(Poly::zero(), Poly::one(), caveats));
        }
        if let Some(c) = den.constant_value() {
            return Ok(Expr::raw(num.scale(&c.recip()), Poly::one(), caveats));
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            caveats.push(g.clone());
            caveats.sort();
            caveats.dedup();
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        let (_, lc) = den.leading_term().expect("nonzero denominator");
        let inv = lc.recip();
        let (num, den) = if inv.is_one() {
            (num, den)
        } else {
            (num.scale(&inv), den.scale(&inv))
        };
        Ok(Expr::raw(num, den, caveats))
    }

    pub fn zero() -> Self {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        Expr::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::from_poly(Poly::constant(q_int(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Expr::from_poly(Poly::constant(q_frac(n, d)))
    }

    pub fn rational(q: Q) -> Self {
        Expr::from_poly(Poly::constant(q))
    }

    pub fn atom(a: Atom) -> Self {
        Expr::from_poly(Poly::atom(a))
    }

    pub fn coord(name: &str) -> Self {
        Expr::atom(Atom::coord(name))
    }

    /// An opaque symbol applied to `args` with formal partials in the given
    /// (zero-based) argument slots.
    pub fn opaque(name: &str, args: Vec<Expr>, mut partials: Vec<u32>) -> Self {
        partials.sort_unstable();
        Expr::atom(Atom::Opaque(Arc::new(OpaqueAtom {
            name: Arc::from(name),
            args,
            partials,
        })))
    }

    pub fn func(func: Elementary, arg: Expr) -> Self {
        if arg.is_zero() {
            match func {
                Elementary::Sin | Elementary::Sqrt => return Expr::zero(),
                Elementary::Cos | Elementary::Exp => return Expr::one(),
            }
        }
        if func == Elementary::Sqrt && arg.is_one() {
            return Expr::one();
        }
        Expr::atom(Atom::Func(Arc::new(FuncAtom { func, arg })))
    }

    pub fn sin(&self) -> Self {
        Expr::func(Elementary::Sin, self.clone())
    }

    pub fn cos(&self) -> Self {
        Expr::func(Elementary::Cos, self.clone())
    }

    pub fn exp(&self) -> Self {
        Expr::func(Elementary::Exp, self.clone())
    }

    pub fn sqrt(&self) -> Self {
        Expr::func(Elementary::Sqrt, self.clone())
    }

    pub fn num(&self) -> &Poly {
        &self.0.num
    }

    pub fn den(&self) -> &Poly {
        &self.0.den
    }

    /// Cancelled factors whose zero sets are excluded from the domain.
    pub fn caveats(&self) -> &[Poly] {
        &self.0.caveats
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.den.is_one() && self.0.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.0.den.is_one() {
            self.0.num.constant_value()
        } else {
            None
        }
    }

    pub fn has_transcendental(&self) -> bool {
        self.0.num.has_transcendental() || self.0.den.has_transcendental()
    }

    pub fn atoms(&self) -> alloc::collections::BTreeSet<Atom> {
        let mut s = self.0.num.atoms();
        s.extend(self.0.den.atoms());
        s
    }

    /// Atoms together with the atoms nested in opaque arguments and function arguments.
    pub fn all_atoms(&self) -> alloc::collections::BTreeSet<Atom> {
        let mut out = alloc::collections::BTreeSet::new();
        let mut stack: Vec<Atom> = self.atoms().into_iter().collect();
        while let Some(a) = stack.pop() {
            match &a {
                Atom::Opaque(o) => {
                    for e in &o.args {
                        stack.extend(e.atoms());
                    }
                }
                Atom::Func(f) => stack.extend(f.arg.atoms()),
                Atom::Coord(_) => {}
            }
            out.insert(a);
        }
        out
    }

    pub fn neg(&self) -> Expr {
        Expr::raw(self.0.num.neg(), self.0.den.clone(), self.0.caveats.clone())
    }

    pub fn scale(&self, k: &Q) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr::raw(self.0.num.scale(k), self.0.den.clone(), self.0.caveats.clone())
    }

    pub fn scale_int(&self, k: i64) -> Expr {
        self.scale(&q_int(k))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if other.is_zero() && other.0.caveats.is_empty() {
            return self.clone();
        }
        if self.is_zero() && self.0.caveats.is_empty() {
            return other.clone();
        }
        let cav = merge_caveats(&self.0.caveats, &other.0.caveats);
        if self.0.den == other.0.den {
            let num = self.0.num.add(&other.0.num);
            if self.0.den.is_one() {
                return Expr::raw(num, Poly::one(), cav);
            }
            return Expr::from_parts_with(num, self.0.den.clone(), cav).expect("nonzero den");
        }
        let num = self
            .0
            .num
            .mul(&other.0.den)
            .add(&other.0.num.mul(&self.0.den));
        let den = self.0.den.mul(&other.0.den);
        Expr::from_parts_with(num, den, cav).expect("nonzero den")
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let cav = merge_caveats(&self.0.caveats, &other.0.caveats);
        if self.is_zero() || other.is_zero() {
            return Expr::raw(Poly::zero(), Poly::one(), cav);
        }
        if self.0.den.is_one() && other.0.den.is_one() {
            return Expr::raw(self.0.num.mul(&other.0.num), Poly::one(), cav);
        }
        let num = self.0.num.mul(&other.0.num);
        let den = self.0.den.mul(&other.0.den);
        Expr::from_parts_with(num, den, cav).expect("nonzero den")
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Expr, CoeffError> {
        if other.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        let cav = merge_caveats(&self.0.caveats, &other.0.caveats);
        let num = self.0.num.mul(&other.0.den);
        let den = self.0.den.mul(&other.0.num);
        Expr::from_parts_with(num, den, cav)
    }

    pub fn recip(&self) -> Result<Expr, CoeffError> {
        Expr::one().checked_div(self)
    }

    pub fn powi(&self, k: i64) -> Result<Expr, CoeffError> {
        if k < 0 {
            return self.powi(-k)?.recip();
        }
        let k = u32::try_from(k).map_err(|_| CoeffError::Syntax {
            pos: 0,
            msg: "exponent too large".into(),
        })?;
        Ok(Expr::raw(
            self.0.num.pow(k),
            self.0.den.pow(k),
            self.0.caveats.clone(),
        ))
    }

    pub fn sum<'a, I: IntoIterator<Item = &'a Expr>>(items: I) -> Expr {
        let mut acc = Expr::zero();
        for e in items {
            acc = acc.add(e);
        }
        acc
    }

    /// Applies the derivation of the coefficient ring that sends each atom to
    /// the value returned by `d_atom` (chain rule through numerator and denominator).
    pub fn derive(&self, d_atom: &mut dyn FnMut(&Atom) -> Expr) -> Expr {
        let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
        let dnum = derive_poly(&self.0.num, d_atom, &mut cache);
        if self.0.den.is_one() {
            return dnum.with_caveats(&self.0.caveats);
        }
        let dden = derive_poly(&self.0.den, d_atom, &mut cache);
        let n = Expr::from_poly(self.0.num.clone());
        let d = Expr::from_poly(self.0.den.clone());
        let top = dnum.mul(&d).sub(&n.mul(&dden));
        top.checked_div(&d.mul(&d))
            .expect("nonzero den")
            .with_caveats(&self.0.caveats)
    }

    fn with_caveats(self, cav: &[Poly]) -> Expr {
        if cav.is_empty() {
            return self;
        }
        let merged = merge_caveats(&self.0.caveats, cav);
        Expr::raw(self.0.num.clone(), self.0.den.clone(), merged)
    }

    /// Partial derivative with respect to a coordinate symbol.
    pub fn diff(&self, coord: &str) -> Expr {
        self.derive(&mut |a| atom_coord_derivative(a, coord))
    }

    /// Replaces atoms. `f` returns the image of an atom, or `None` to keep it
    /// (in which case the substitution is still applied inside its arguments).
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Option<Expr>) -> Expr {
        let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
        let num = map_poly(&self.0.num, f, &mut cache);
        if self.0.den.is_one() {
            return num.with_caveats(&self.0.caveats);
        }
        let den = map_poly(&self.0.den, f, &mut cache);
        num.checked_div(&den)
            .expect("substitution sent the denominator to zero")
            .with_caveats(&self.0.caveats)
    }

    /// Fallible variant of [`Expr::map_atoms`] reporting a vanishing denominator.
    pub fn try_map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Option<Expr>) -> Result<Expr, CoeffError> {
        let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
        let num = map_poly(&self.0.num, f, &mut cache);
        if self.0.den.is_one() {
            return Ok(num.with_caveats(&self.0.caveats));
        }
        let den = map_poly(&self.0.den, f, &mut cache);
        Ok(num.checked_div(&den)?.with_caveats(&self.0.caveats))
    }

    /// Substitutes coordinate symbols by expressions.
    pub fn substitute_coords(&self, images: &BTreeMap<Arc<str>, Expr>) -> Expr {
        self.map_atoms(&mut |a| match a {
            Atom::Coord(c) => images.get(c).cloned(),
            _ => None,
        })
    }
}

fn derive_poly(p: &Poly, d_atom: &mut dyn FnMut(&Atom) -> Expr, cache: &mut BTreeMap<Atom, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for atom in p.atoms() {
        let da = match cache.get(&atom) {
            Some(v) => v.clone(),
            None => {
                let v = d_atom(&atom);
                cache.insert(atom.clone(), v.clone());
                v
            }
        };
        if da.is_zero() {
            continue;
        }
        let part = Expr::from_poly(p.partial(&atom));
        acc = acc.add(&part.mul(&da));
    }
    acc
}

fn map_atom(a: &Atom, f: &mut dyn FnMut(&Atom) -> Option<Expr>) -> Expr {
    if let Some(e) = f(a) {
        return e;
    }
    match a {
        Atom::Coord(_) => Expr::atom(a.clone()),
        Atom::Opaque(o) => {
            let args: Vec<Expr> = o.args.iter().map(|e| e.map_atoms(f)).collect();
            if args == o.args {
                Expr::atom(a.clone())
            } else {
                Expr::atom(Atom::Opaque(Arc::new(OpaqueAtom {
                    name: o.name.clone(),
                    args,
                    partials: o.partials.clone(),
                })))
            }
        }
        Atom::Func(fa) => {
            let arg = fa.arg.map_atoms(f);
            if arg == fa.arg {
                Expr::atom(a.clone())
            } else {
                Expr::func(fa.func, arg)
            }
        }
    }
}

fn map_poly(p: &Poly, f: &mut dyn FnMut(&Atom) -> Option<Expr>, cache: &mut BTreeMap<Atom, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in p.terms() {
        let mut term = Expr::rational(c.clone());
        for (a, e) in m.factors() {
            let img = match cache.get(a) {
                Some(v) => v.clone(),
                None => {
                    let v = map_atom(a, f);
                    cache.insert(a.clone(), v.clone());
                    v
                }
            };
            term = term.mul(&img.powi(*e as i64).expect("nonnegative power"));
        }
        acc = acc.add(&term);
    }
    acc
}

/// Derivative of a single atom with respect to a coordinate.
pub fn atom_coord_derivative(a: &Atom, coord: &str) -> Expr {
    match a {
        Atom::Coord(c) => {
            if &**c == coord {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Opaque(o) => {
            let mut acc = Expr::zero();
            for (slot, arg) in o.args.iter().enumerate() {
                let darg = arg.diff(coord);
                if darg.is_zero() {
                    continue;
                }
                let mut partials = o.partials.clone();
                partials.push(slot as u32);
                let d = Expr::opaque(&o.name, o.args.clone(), partials);
                acc = acc.add(&d.mul(&darg));
            }
            acc
        }
        Atom::Func(fa) => {
            let darg = fa.arg.diff(coord);
            if darg.is_zero() {
                return Expr::zero();
            }
            let outer = match fa.func {
                Elementary::Sin => fa.arg.cos(),
                Elementary::Cos => fa.arg.sin().neg(),
                Elementary::Exp => fa.arg.exp(),
                Elementary::Sqrt => {
                    let s = fa.arg.sqrt();
                    s.scale_int(2).recip().expect("sqrt atom is nonzero")
                }
            };
            outer.mul(&darg)
        }
    }
}

impl Monomial {
    pub fn to_expr(&self) -> Expr {
        Expr::from_poly(Poly::from_term(self.clone(), Q::one()))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$m(self, rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}
