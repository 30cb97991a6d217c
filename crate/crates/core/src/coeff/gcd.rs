//! Multivariate polynomial gcd over `Q` via recursive primitive remainder sequences.

use alloc::vec::Vec;

use num_traits::Zero;

use super::poly::{Atom, Poly, Q};

/// Picks the largest atom occurring in either polynomial.
fn main_atom(a: &Poly, b: &Poly) -> Option<Atom> {
    let mut best: Option<Atom> = None;
    for p in [a, b] {
        for m in p.terms.keys() {
            if let Some((atom, _)) = m.0.last() {
                if best.as_ref().map(|x| atom > x).unwrap_or(true) {
                    best = Some(atom.clone());
                }
            }
        }
    }
    best
}

/// Monic gcd of two polynomials; `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let x = match main_atom(a, b) {
        Some(x) => x,
        None => return Poly::one(),
    };
    let da = a.degree_in(&x);
    let db = b.degree_in(&x);
    if da == 0 {
        return gcd(a, &content(&b.coefficients_in(&x)));
    }
    if db == 0 {
        return gcd(&content(&a.coefficients_in(&x)), b);
    }
    let ca_coeffs = a.coefficients_in(&x);
    let cb_coeffs = b.coefficients_in(&x);
    let ca = content(&ca_coeffs);
    let cb = content(&cb_coeffs);
    let g_content = gcd(&ca, &cb);
    let mut p = divide_all(&ca_coeffs, &ca);
    let mut q = divide_all(&cb_coeffs, &cb);
    if p.len() < q.len() {
        core::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = pseudo_rem(&p, &q);
        if r.iter().all(Poly::is_zero) {
            p = q;
            break;
        }
        if r.len() == 1 {
            // Nonzero remainder of degree zero: the primitive parts are coprime.
            p = alloc::vec![Poly::one()];
            break;
        }
        let c = content(&r);
        p = q;
        q = divide_all(&r, &c);
    }
    let prim = Poly::from_coefficients_in(&x, &p);
    let prim = {
        let c = content(&prim.coefficients_in(&x));
        prim.exact_div(&c).unwrap_or(prim)
    };
    prim.mul(&g_content).monic()
}

/// Gcd of a list of polynomials.
pub fn content(coeffs: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, c);
        if g.is_constant() {
            return Poly::one();
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

fn divide_all(coeffs: &[Poly], c: &Poly) -> Vec<Poly> {
    let mut out: Vec<Poly> = coeffs
        .iter()
        .map(|p| p.exact_div(c).expect("content divides every coefficient"))
        .collect();
    trim(&mut out);
    out
}

fn trim(v: &mut Vec<Poly>) {
    while v.len() > 1 && v.last().map(Poly::is_zero).unwrap_or(false) {
        v.pop();
    }
}

/// Pseudo-remainder of univariate polynomials given as coefficient lists
/// (lowest degree first) over the ring of polynomials in the other atoms.
fn pseudo_rem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let db = b.len() - 1;
    let lb = &b[db];
    let mut r: Vec<Poly> = a.to_vec();
    trim(&mut r);
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let shift = dr - db;
        for c in r.iter_mut() {
            *c = c.mul(lb);
        }
        for (i, bc) in b.iter().enumerate() {
            let t = bc.mul(&lr);
            r[i + shift] = r[i + shift].sub(&t);
        }
        debug_assert!(r[dr].is_zero());
        r.pop();
        trim(&mut r);
        if r.is_empty() {
            r.push(Poly::zero());
        }
    }
    // Keep coefficient growth in check with the rational content.
    let mut q = Q::zero();
    for c in &r {
        if !c.is_zero() {
            q = c.rational_content();
            break;
        }
    }
    if !q.is_zero() {
        let inv = num_traits::Inv::inv(q);
        for c in r.iter_mut() {
            *c = c.scale(&inv);
        }
    }
    r
}
