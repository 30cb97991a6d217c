//! Free graded-commutative algebras over coefficient functions, graded
//! derivations and nilpotency checks.
//!
//! Monomials are stored as sorted generator-index lists (odd generators at
//! most once); the Koszul sign of reordering is absorbed into the coefficient.
//! Bigraded generators carry form and ghost degrees as metadata only; signs
//! always follow the total degree.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::coeff::{is_zero, Chart, Expr, ZeroVerdict};
use crate::error::AlgebraError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: i32,
    pub form: i32,
    pub ghost: i32,
}

impl Generator {
    pub fn new(name: &str, degree: i32) -> Self {
        Generator {
            name: name.to_string(),
            degree,
            form: degree,
            ghost: 0,
        }
    }

    pub fn bigraded(name: &str, form: i32, ghost: i32) -> Self {
        Generator {
            name: name.to_string(),
            degree: form + ghost,
            form,
            ghost,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

#[derive(Debug, PartialEq, Eq)]
struct GenInner {
    chart: Chart,
    gens: Vec<Generator>,
}

/// Ordered generators over a chart whose coordinates have degree zero.
#[derive(Clone, Debug)]
pub struct GeneratorSet(Arc<GenInner>);

impl PartialEq for GeneratorSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for GeneratorSet {}

impl GeneratorSet {
    pub fn new(chart: Chart, gens: Vec<Generator>) -> Result<Self, AlgebraError> {
        let mut seen = alloc::collections::BTreeSet::new();
        for g in &gens {
            if g.degree < 1 || chart.has_coord(&g.name) || !seen.insert(g.name.clone()) {
                return Err(AlgebraError::BadGeneratorName(g.name.clone()));
            }
        }
        if gens.len() > u16::MAX as usize {
            return Err(AlgebraError::BadGeneratorName("too many generators".into()));
        }
        Ok(GeneratorSet(Arc::new(GenInner { chart, gens })))
    }

    pub fn chart(&self) -> &Chart {
        &self.0.chart
    }

    pub fn gens(&self) -> &[Generator] {
        &self.0.gens
    }

    pub fn len(&self) -> usize {
        self.0.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.gens.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize, AlgebraError> {
        self.0
            .gens
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| AlgebraError::UnknownGenerator(name.to_string()))
    }

    pub fn degree(&self, idx: u16) -> i32 {
        self.0.gens[idx as usize].degree
    }

    fn odd(&self, idx: u16) -> bool {
        self.0.gens[idx as usize].is_odd()
    }

    pub fn mono_degree(&self, m: &[u16]) -> i32 {
        m.iter().map(|&i| self.degree(i)).sum()
    }

    /// Form and ghost degree of a monomial.
    pub fn mono_bidegree(&self, m: &[u16]) -> (i32, i32) {
        m.iter().fold((0, 0), |(f, g), &i| {
            let gen = &self.0.gens[i as usize];
            (f + gen.form, g + gen.ghost)
        })
    }

    /// Sorts a generator word, returning the Koszul sign or `None` when an odd
    /// generator repeats.
    pub fn sort_word(&self, word: &[u16]) -> Option<(i32, Vec<u16>)> {
        let mut v = word.to_vec();
        let mut sign = 1i32;
        // Insertion sort, tracking odd-odd transpositions.
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                if self.odd(v[j - 1]) && self.odd(v[j]) {
                    sign = -sign;
                }
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        for w in v.windows(2) {
            if w[0] == w[1] && self.odd(w[0]) {
                return None;
            }
        }
        Some((sign, v))
    }

    /// Product of two sorted monomials with its sign.
    pub fn mono_mul(&self, a: &[u16], b: &[u16]) -> Option<(i32, Vec<u16>)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let mut sign = 1i32;
        let (mut i, mut j) = (0, 0);
        // Number of odd generators of `a` not yet emitted.
        let mut odd_left_a = a.iter().filter(|&&g| self.odd(g)).count();
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
            if take_a {
                if j < b.len() && a[i] == b[j] && self.odd(a[i]) {
                    return None;
                }
                if self.odd(a[i]) {
                    odd_left_a -= 1;
                }
                out.push(a[i]);
                i += 1;
            } else {
                if self.odd(b[j]) && odd_left_a % 2 == 1 {
                    sign = -sign;
                }
                out.push(b[j]);
                j += 1;
            }
        }
        Some((sign, out))
    }
}

/// An element of the graded-commutative algebra: sorted monomial → coefficient.
#[derive(Clone, PartialEq, Eq)]
pub struct GradedElem {
    set: GeneratorSet,
    terms: BTreeMap<Vec<u16>, Expr>,
}

impl fmt::Debug for GradedElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradedElem({self})")
    }
}

impl fmt::Display for GradedElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c})")?;
            for &g in m {
                write!(f, "*{}", self.set.gens()[g as usize].name)?;
            }
        }
        Ok(())
    }
}

impl GradedElem {
    pub fn zero(set: &GeneratorSet) -> Self {
        GradedElem {
            set: set.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(set: &GeneratorSet, c: Expr) -> Self {
        let mut e = GradedElem::zero(set);
        e.add_term(Vec::new(), c);
        e
    }

    pub fn one(set: &GeneratorSet) -> Self {
        GradedElem::scalar(set, Expr::one())
    }

    pub fn generator(set: &GeneratorSet, idx: usize) -> Self {
        let mut e = GradedElem::zero(set);
        e.add_term(alloc::vec![idx as u16], Expr::one());
        e
    }

    pub fn named(set: &GeneratorSet, name: &str) -> Result<Self, AlgebraError> {
        Ok(GradedElem::generator(set, set.index(name)?))
    }

    /// `c` times a sorted monomial.
    pub fn monomial(set: &GeneratorSet, mono: Vec<u16>, c: Expr) -> Self {
        let mut e = GradedElem::zero(set);
        e.add_term(mono, c);
        e
    }

    /// Builds an element from unsorted generator words, applying Koszul signs.
    pub fn normal_form<S: AsRef<str>>(
        set: &GeneratorSet,
        raw: &[(Vec<S>, Expr)],
    ) -> Result<Self, AlgebraError> {
        let mut out = GradedElem::zero(set);
        for (word, c) in raw {
            let idx: Vec<u16> = word
                .iter()
                .map(|n| set.index(n.as_ref()).map(|i| i as u16))
                .collect::<Result<_, _>>()?;
            out.add_word(&idx, c.clone());
        }
        Ok(out)
    }

    /// Adds `c` times an unsorted word of generators.
    pub fn add_word(&mut self, word: &[u16], c: Expr) {
        if let Some((sign, m)) = self.set.sort_word(word) {
            let c = if sign < 0 { c.neg() } else { c };
            self.add_term(m, c);
        }
    }

    /// Adds `c` times a sorted monomial.
    pub fn add_term(&mut self, mono: Vec<u16>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn set(&self) -> &GeneratorSet {
        &self.set
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &Expr)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a sorted monomial.
    pub fn coeff(&self, mono: &[u16]) -> Expr {
        self.terms.get(mono).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient of a monomial given by (possibly unsorted) generator names,
    /// so that `self` contains `result * word` with the word in the given order.
    pub fn coeff_of<S: AsRef<str>>(&self, word: &[S]) -> Result<Expr, AlgebraError> {
        let idx: Vec<u16> = word
            .iter()
            .map(|n| self.set.index(n.as_ref()).map(|i| i as u16))
            .collect::<Result<_, _>>()?;
        Ok(match self.set.sort_word(&idx) {
            None => Expr::zero(),
            Some((sign, m)) => {
                let c = self.coeff(&m);
                if sign < 0 {
                    c.neg()
                } else {
                    c
                }
            }
        })
    }

    /// Degrees present in the element.
    pub fn degrees(&self) -> alloc::collections::BTreeSet<i32> {
        self.terms.keys().map(|m| self.set.mono_degree(m)).collect()
    }

    pub fn is_homogeneous_of(&self, deg: i32) -> bool {
        self.terms.keys().all(|m| self.set.mono_degree(m) == deg)
    }

    fn check_set(&self, other: &GradedElem) -> Result<(), AlgebraError> {
        if self.set == other.set {
            Ok(())
        } else {
            Err(AlgebraError::MixedGeneratorSets)
        }
    }

    pub fn try_add(&self, other: &GradedElem) -> Result<GradedElem, AlgebraError> {
        self.check_set(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn add(&self, other: &GradedElem) -> GradedElem {
        self.try_add(other).expect("same generator set")
    }

    pub fn add_assign(&mut self, other: &GradedElem) {
        debug_assert!(self.set == other.set);
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn neg(&self) -> GradedElem {
        GradedElem {
            set: self.set.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &GradedElem) -> GradedElem {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Expr) -> GradedElem {
        let mut out = GradedElem::zero(&self.set);
        if k.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.mul(k));
        }
        out
    }

    pub fn try_mul(&self, other: &GradedElem) -> Result<GradedElem, AlgebraError> {
        self.check_set(other)?;
        let mut out = GradedElem::zero(&self.set);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((sign, m)) = self.set.mono_mul(m1, m2) {
                    let c = c1.mul(c2);
                    out.add_term(m, if sign < 0 { c.neg() } else { c });
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &GradedElem) -> GradedElem {
        self.try_mul(other).expect("same generator set")
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: &mut dyn FnMut(&Expr) -> Expr) -> GradedElem {
        let mut out = GradedElem::zero(&self.set);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    /// Keeps the terms whose monomial satisfies `pred`.
    pub fn filter(&self, pred: &mut dyn FnMut(&[u16]) -> bool) -> GradedElem {
        GradedElem {
            set: self.set.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| pred(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Part of form/ghost bidegree `(form, ghost)`.
    pub fn bidegree_part(&self, form: i32, ghost: i32) -> GradedElem {
        let set = self.set.clone();
        self.filter(&mut |m| set.mono_bidegree(m) == (form, ghost))
    }

    /// Rewrites the element over another generator set with the same chart,
    /// mapping generator indices through `f`.
    pub fn reindex(&self, target: &GeneratorSet, f: &dyn Fn(u16) -> u16) -> GradedElem {
        let mut out = GradedElem::zero(target);
        for (m, c) in &self.terms {
            let w: Vec<u16> = m.iter().map(|&g| f(g)).collect();
            out.add_word(&w, c.clone());
        }
        out
    }

    /// Zero-tests every coefficient and returns the weakest verdict.
    pub fn zero_verdict(&self) -> ZeroVerdict {
        let mut worst = ZeroVerdict::ExactZero {
            caveats: Vec::new(),
        };
        for c in self.terms.values() {
            let v = match is_zero(c) {
                Ok(v) => v,
                Err(_) => ZeroVerdict::NonZero {
                    witness: BTreeMap::new(),
                    value: f64::NAN,
                },
            };
            match (&worst, &v) {
                (_, ZeroVerdict::NonZero { .. }) => return v,
                (ZeroVerdict::ExactZero { .. }, ZeroVerdict::NumericZero { .. }) => worst = v,
                _ => {}
            }
        }
        worst
    }
}

/// An algebra morphism between free graded-commutative algebras, given by the
/// images of generators and of coordinates.
#[derive(Clone, Debug)]
pub struct Morphism {
    pub target: GeneratorSet,
    /// Images of source coordinates as coefficient functions of the target chart.
    pub coord_images: BTreeMap<Arc<str>, Expr>,
    pub gen_images: Vec<GradedElem>,
}

impl Morphism {
    pub fn apply(&self, e: &GradedElem) -> GradedElem {
        let mut out = GradedElem::zero(&self.target);
        for (m, c) in &e.terms {
            let c = if self.coord_images.is_empty() {
                c.clone()
            } else {
                c.substitute_coords(&self.coord_images)
            };
            let mut acc = GradedElem::scalar(&self.target, c);
            for &g in m {
                if acc.is_zero() {
                    break;
                }
                acc = acc.mul(&self.gen_images[g as usize]);
            }
            out.add_assign(&acc);
        }
        out
    }
}

/// A graded derivation specified by its values on coordinates and generators.
#[derive(Clone, Debug)]
pub struct Derivation {
    set: GeneratorSet,
    degree: i32,
    coord_images: Vec<GradedElem>,
    gen_images: Vec<GradedElem>,
}

impl Derivation {
    pub fn new(
        set: &GeneratorSet,
        degree: i32,
        coord_images: Vec<GradedElem>,
        gen_images: Vec<GradedElem>,
    ) -> Result<Self, AlgebraError> {
        if coord_images.len() != set.chart().dim() || gen_images.len() != set.len() {
            return Err(AlgebraError::MixedGeneratorSets);
        }
        for (i, img) in coord_images.iter().enumerate() {
            if img.set != *set {
                return Err(AlgebraError::MixedGeneratorSets);
            }
            if let Some(&found) = img.degrees().iter().find(|&&d| d != degree) {
                return Err(AlgebraError::Inhomogeneous {
                    symbol: set.chart().coords()[i].to_string(),
                    expected: degree,
                    found,
                });
            }
        }
        for (g, img) in set.gens().iter().zip(&gen_images) {
            if img.set != *set {
                return Err(AlgebraError::MixedGeneratorSets);
            }
            let expected = g.degree + degree;
            if let Some(&found) = img.degrees().iter().find(|&&d| d != expected) {
                return Err(AlgebraError::Inhomogeneous {
                    symbol: g.name.clone(),
                    expected,
                    found,
                });
            }
        }
        Ok(Derivation {
            set: set.clone(),
            degree,
            coord_images,
            gen_images,
        })
    }

    pub fn set(&self) -> &GeneratorSet {
        &self.set
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn coord_image(&self, a: usize) -> &GradedElem {
        &self.coord_images[a]
    }

    pub fn gen_image(&self, g: usize) -> &GradedElem {
        &self.gen_images[g]
    }

    /// `D(f) = Σ_a ∂f/∂m^a D(m^a)` for a coefficient function `f`.
    pub fn apply_scalar(&self, f: &Expr) -> GradedElem {
        let mut out = GradedElem::zero(&self.set);
        for (a, coord) in self.set.chart().coords().iter().enumerate() {
            if self.coord_images[a].is_zero() {
                continue;
            }
            let df = f.diff(coord);
            if df.is_zero() {
                continue;
            }
            out.add_assign(&self.coord_images[a].scale(&df));
        }
        out
    }

    pub fn try_apply(&self, e: &GradedElem) -> Result<GradedElem, AlgebraError> {
        if e.set != self.set {
            return Err(AlgebraError::MixedGeneratorSets);
        }
        let mut out = GradedElem::zero(&self.set);
        let odd_d = self.degree.rem_euclid(2) == 1;
        for (m, c) in &e.terms {
            // Derivative of the coefficient.
            let dc = self.apply_scalar(c);
            if !dc.is_zero() {
                out.add_assign(&dc.mul(&GradedElem::monomial(&self.set, m.clone(), Expr::one())));
            }
            // Derivative of the monomial, factor by factor.
            let mut start = 0;
            while start < m.len() {
                let g = m[start];
                let mut end = start;
                while end < m.len() && m[end] == g {
                    end += 1;
                }
                let mult = (end - start) as i64;
                let img = &self.gen_images[g as usize];
                if !img.is_zero() {
                    let prefix_deg = self.set.mono_degree(&m[..start]);
                    let sign_neg = odd_d && prefix_deg.rem_euclid(2) == 1;
                    let mut coef = c.scale_int(mult);
                    if sign_neg {
                        coef = coef.neg();
                    }
                    let mut left = m[..start].to_vec();
                    left.extend(core::iter::repeat_n(g, end - start - 1));
                    let l = GradedElem::monomial(&self.set, left, coef);
                    let r = GradedElem::monomial(&self.set, m[end..].to_vec(), Expr::one());
                    out.add_assign(&l.mul(img).mul(&r));
                }
                start = end;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, e: &GradedElem) -> GradedElem {
        self.try_apply(e).expect("same generator set")
    }

    /// `D(D(s))` for every coordinate and generator `s`, by symbol name.
    pub fn square_residuals(&self) -> Vec<(String, GradedElem)> {
        let mut out = Vec::new();
        for (a, coord) in self.set.chart().coords().iter().enumerate() {
            out.push((coord.to_string(), self.apply(&self.coord_images[a])));
        }
        for (g, gen) in self.set.gens().iter().enumerate() {
            out.push((gen.name.clone(), self.apply(&self.gen_images[g])));
        }
        out
    }

    /// The residuals of [`Derivation::square_residuals`] that do not vanish exactly.
    pub fn square_check(&self) -> Vec<(String, GradedElem)> {
        self.square_residuals()
            .into_iter()
            .filter(|(_, r)| !r.is_zero())
            .collect()
    }

    /// Graded commutator `[D, E] = DE − (−1)^{|D||E|} ED`, returned through its
    /// values on coordinates and generators.
    pub fn commutator(&self, other: &Derivation) -> Result<Derivation, AlgebraError> {
        if self.set != other.set {
            return Err(AlgebraError::MixedGeneratorSets);
        }
        let sign_plus = (self.degree * other.degree).rem_euclid(2) == 0;
        let combine = |x: &GradedElem, y: &GradedElem| {
            if sign_plus {
                x.sub(y)
            } else {
                x.add(y)
            }
        };
        let coord_images = (0..self.set.chart().dim())
            .map(|a| {
                combine(
                    &self.apply(&other.coord_images[a]),
                    &other.apply(&self.coord_images[a]),
                )
            })
            .collect();
        let gen_images = (0..self.set.len())
            .map(|g| {
                combine(
                    &self.apply(&other.gen_images[g]),
                    &other.apply(&self.gen_images[g]),
                )
            })
            .collect();
        Derivation::new(&self.set, self.degree + other.degree, coord_images, gen_images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xis() -> GeneratorSet {
        GeneratorSet::new(
            Chart::numbered("M", "m", 2),
            alloc::vec![
                Generator::new("xi1", 1),
                Generator::new("xi2", 1),
                Generator::new("xibar1", 2),
                Generator::new("mbar1", 1),
                Generator::new("mbar2", 1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn koszul_normal_forms() {
        let s = xis();
        let e = GradedElem::normal_form(&s, &[(alloc::vec!["xi2", "xi1"], Expr::one())]).unwrap();
        assert_eq!(e.coeff(&[0, 1]), Expr::int(-1));
        let sq = GradedElem::normal_form(&s, &[(alloc::vec!["xi1", "xi1"], Expr::one())]).unwrap();
        assert!(sq.is_zero());
        let ev = GradedElem::normal_form(&s, &[(alloc::vec!["xibar1", "xi1"], Expr::one())]).unwrap();
        assert_eq!(ev.coeff(&[0, 2]), Expr::one());
    }

    #[test]
    fn de_rham_on_product() {
        // D(m) = mbar, D(mbar) = 0, D(xi) = 0.
        let s = xis();
        let z = GradedElem::zero(&s);
        let d = Derivation::new(
            &s,
            1,
            alloc::vec![GradedElem::named(&s, "mbar1").unwrap(), GradedElem::named(&s, "mbar2").unwrap()],
            alloc::vec![z.clone(), z.clone(), z.clone(), z.clone(), z],
        )
        .unwrap();
        let e = GradedElem::scalar(&s, Expr::coord("m1")).mul(&GradedElem::named(&s, "mbar2").unwrap());
        let de = d.apply(&e);
        assert_eq!(de.coeff_of(&["mbar1", "mbar2"]).unwrap(), Expr::one());
        assert!(d.square_check().is_empty());
    }

    #[test]
    fn leibniz_sign_on_odd_product() {
        let s = xis();
        let xi1 = GradedElem::named(&s, "xi1").unwrap();
        let xi2 = GradedElem::named(&s, "xi2").unwrap();
        let mb1 = GradedElem::named(&s, "mbar1").unwrap();
        let mb2 = GradedElem::named(&s, "mbar2").unwrap();
        let z = GradedElem::zero(&s);
        let d = Derivation::new(
            &s,
            1,
            alloc::vec![z.clone(), z.clone()],
            alloc::vec![mb1.mul(&mb2), xi1.mul(&mb1), z.clone(), z.clone(), z],
        )
        .unwrap();
        let lhs = d.apply(&xi1.mul(&xi2));
        let rhs = d.apply(&xi1).mul(&xi2).sub(&xi1.mul(&d.apply(&xi2)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn inhomogeneous_image_rejected() {
        let s = xis();
        let z = GradedElem::zero(&s);
        let bad = GradedElem::named(&s, "xibar1").unwrap();
        let r = Derivation::new(&s, 1, alloc::vec![bad, z.clone()], alloc::vec![z.clone(), z.clone(), z.clone(), z.clone(), z]);
        assert!(matches!(r, Err(AlgebraError::Inhomogeneous { .. })));
    }
}
