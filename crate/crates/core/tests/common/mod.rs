//! Independent oracles and random instance generators shared by the
//! integration tests.

#![allow(clippy::needless_range_loop)]

#![allow(dead_code)]

use acw_core::algebroid::{AdjustmentData, AlgebroidSpec};
use acw_core::coeff::{Chart, Expr};
use acw_core::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sections of the algebroid in the coordinate frame, vector fields in `∂_a`.
pub struct Invariant<'a> {
    pub spec: &'a AlgebroidSpec,
    pub adj: &'a AdjustmentData,
}

impl<'a> Invariant<'a> {
    fn coords(&self) -> Vec<String> {
        self.spec.base().coords().iter().map(|c| c.to_string()).collect()
    }

    /// `V(g) = V^a ∂_a g`.
    pub fn vf_apply(&self, v: &[Expr], g: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (a, c) in self.coords().iter().enumerate() {
            acc = acc.add(&v[a].mul(&g.diff(c)));
        }
        acc
    }

    pub fn vf_bracket(&self, x: &[Expr], y: &[Expr]) -> Vec<Expr> {
        (0..x.len())
            .map(|a| self.vf_apply(x, &y[a]).sub(&self.vf_apply(y, &x[a])))
            .collect()
    }

    pub fn anchor(&self, s: &[Expr]) -> Vec<Expr> {
        (0..self.spec.dim())
            .map(|a| {
                let mut acc = Expr::zero();
                for (be, sb) in s.iter().enumerate() {
                    acc = acc.add(&self.spec.rho(a, be).mul(sb));
                }
                acc
            })
            .collect()
    }

    /// Algebroid bracket extended from the frame by the Leibniz rule.
    pub fn bracket(&self, s1: &[Expr], s2: &[Expr]) -> Vec<Expr> {
        let r = self.spec.rank();
        let (x1, x2) = (self.anchor(s1), self.anchor(s2));
        (0..r)
            .map(|al| {
                let mut acc = self.vf_apply(&x1, &s2[al]).sub(&self.vf_apply(&x2, &s1[al]));
                for be in 0..r {
                    for ga in 0..r {
                        acc = acc.add(&self.spec.f(al, be, ga).mul(&s1[be]).mul(&s2[ga]));
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇_V s`, with `∇_{∂_a} e_β = ω^α_{aβ} e_α`.
    pub fn nabla(&self, v: &[Expr], s: &[Expr]) -> Vec<Expr> {
        let (r, n) = (self.spec.rank(), self.spec.dim());
        (0..r)
            .map(|al| {
                let mut acc = self.vf_apply(v, &s[al]);
                for a in 0..n {
                    for be in 0..r {
                        acc = acc.add(&v[a].mul(self.adj.omega(al, a, be)).mul(&s[be]));
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇^bas_ν V = ρ(∇_V ν) + [ρ(ν), V]`.
    pub fn basic_on_tm(&self, nu: &[Expr], v: &[Expr]) -> Vec<Expr> {
        let a = self.anchor(&self.nabla(v, nu));
        let b = self.vf_bracket(&self.anchor(nu), v);
        a.iter().zip(&b).map(|(x, y)| x.add(y)).collect()
    }

    /// `R^bas(ν₁, ν₂)(V)` from the defining formula.
    pub fn rbas(&self, n1: &[Expr], n2: &[Expr], v: &[Expr]) -> Vec<Expr> {
        let t1 = self.nabla(v, &self.bracket(n1, n2));
        let t2 = self.bracket(&self.nabla(v, n1), n2);
        let t3 = self.bracket(n1, &self.nabla(v, n2));
        let t4 = self.nabla(&self.basic_on_tm(n2, v), n1);
        let t5 = self.nabla(&self.basic_on_tm(n1, v), n2);
        (0..self.spec.rank())
            .map(|al| t1[al].sub(&t2[al]).sub(&t3[al]).sub(&t4[al]).add(&t5[al]))
            .collect()
    }

    /// Components on frame sections: `[α, β, γ, a]`.
    pub fn rbas_tensor(&self) -> Tensor {
        let (r, n) = (self.spec.rank(), self.spec.dim());
        let unit = |k: usize, len: usize| -> Vec<Expr> {
            (0..len).map(|i| if i == k { Expr::one() } else { Expr::zero() }).collect()
        };
        let mut t = Tensor::zeros(&[r, r, r, n]);
        for be in 0..r {
            for ga in 0..r {
                for a in 0..n {
                    let val = self.rbas(&unit(be, r), &unit(ga, r), &unit(a, n));
                    for (al, x) in val.into_iter().enumerate() {
                        t.set(&[al, be, ga, a], x);
                    }
                }
            }
        }
        t
    }
}

/// Random polynomial of total degree ≤ `deg` with small integer coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, chart: &Chart, deg: u32, density: f64) -> Expr {
    let n = chart.dim();
    let mut acc = Expr::zero();
    let mut monos: Vec<Vec<u32>> = vec![vec![0; n]];
    for _ in 0..deg {
        let mut next = Vec::new();
        for m in &monos {
            for a in 0..n {
                let mut m2 = m.clone();
                m2[a] += 1;
                next.push(m2);
            }
        }
        monos.extend(next);
    }
    monos.sort();
    monos.dedup();
    for m in monos {
        if !rng.gen_bool(density) {
            continue;
        }
        let mut c = rng.gen_range(-3i64..=3);
        if c == 0 {
            c = 1;
        }
        let mut term = Expr::int(c);
        for (a, &e) in m.iter().enumerate() {
            term = term.mul(&chart.coord(a).powi(e as i64).unwrap());
        }
        acc = acc.add(&term);
    }
    acc
}

fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Structure constants of a few small Lie algebras, with a faithful matrix representation
/// satisfying `[T_β, T_γ] = f^α_{βγ} T_α`.
pub fn small_lie_algebra(rng: &mut ChaCha8Rng, max_rank: usize) -> (Tensor, Vec<Vec<Vec<i64>>>) {
    loop {
        let pick = rng.gen_range(0..4);
        let (f, reps): (Tensor, Vec<Vec<Vec<i64>>>) = match pick {
            // so(3), T_α = −ε_α
            0 => (
                Tensor::from_fn(&[3, 3, 3], |i| Expr::int(levi_civita(i[0], i[1], i[2]))),
                (0..3)
                    .map(|al| (0..3).map(|b| (0..3).map(|c| -levi_civita(al, b, c)).collect()).collect())
                    .collect(),
            ),
            // affine line: [e1, e2] = e2, acting on R² by T1 = diag(0, 1)... as 2×2 matrices
            1 => {
                let mut f = Tensor::zeros(&[2, 2, 2]);
                f.set(&[1, 0, 1], Expr::one());
                f.set(&[1, 1, 0], Expr::int(-1));
                (f, vec![vec![vec![1, 0], vec![0, 0]], vec![vec![0, 1], vec![0, 0]]])
            }
            // abelian rank 1 acting by scaling
            2 => (Tensor::zeros(&[1, 1, 1]), vec![vec![vec![1, 0], vec![0, 2]]]),
            // Heisenberg: [e1, e2] = e3, strictly upper triangular 3×3
            _ => {
                let mut f = Tensor::zeros(&[3, 3, 3]);
                f.set(&[2, 0, 1], Expr::one());
                f.set(&[2, 1, 0], Expr::int(-1));
                let e = |r: usize, c: usize| {
                    let mut m = vec![vec![0i64; 3]; 3];
                    m[r][c] = 1;
                    m
                };
                (f, vec![e(0, 1), e(1, 2), e(0, 2)])
            }
        };
        if reps.len() <= max_rank {
            return (f, reps);
        }
    }
}

/// Action algebroid of a matrix representation on `R^n`: `ρ^a_α = −(T_α)^a_b m^b`.
pub fn action_algebroid(f: Tensor, reps: &[Vec<Vec<i64>>]) -> AlgebroidSpec {
    let r = reps.len();
    let n = reps[0].len();
    let base = Chart::numbered("Rn", "m", n);
    let anchor = Tensor::from_fn(&[r, n], |i| {
        let mut acc = Expr::zero();
        for b in 0..n {
            acc = acc.add(&base.coord(b).scale_int(-reps[i[0]][i[1]][b]));
        }
        acc
    });
    AlgebroidSpec::new(base, r, anchor, f).unwrap()
}

/// Tangent bundle of `R^n` in a unitriangular polynomial frame `e_α = E^a_α ∂_a`.
pub fn tangent_frame(rng: &mut ChaCha8Rng, n: usize) -> AlgebroidSpec {
    let base = Chart::numbered("Rn", "m", n);
    // E = 1 + strictly lower triangular entries depending on earlier coordinates only.
    let mut e = vec![vec![Expr::zero(); n]; n];
    for a in 0..n {
        e[a][a] = Expr::one();
        for al in 0..a {
            let sub = Chart::numbered("Rk", "m", a.max(1));
            let p = random_poly(rng, &sub, 1, 0.6);
            e[a][al] = if a == 0 { Expr::zero() } else { p };
        }
    }
    // Inverse of a unit lower triangular matrix by forward substitution.
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for c in 0..n {
        for a in 0..n {
            let mut v = if a == c { Expr::one() } else { Expr::zero() };
            for b in 0..a {
                v = v.sub(&e[a][b].mul(&inv[b][c]));
            }
            inv[a][c] = v;
        }
    }
    let vf_apply = |v: &[Expr], g: &Expr| {
        let mut acc = Expr::zero();
        for (a, va) in v.iter().enumerate() {
            acc = acc.add(&va.mul(&g.diff(base.coords()[a].as_ref())));
        }
        acc
    };
    let col = |al: usize| -> Vec<Expr> { (0..n).map(|a| e[a][al].clone()).collect() };
    let mut f = Tensor::zeros(&[n, n, n]);
    for be in 0..n {
        for ga in 0..n {
            let (x, y) = (col(be), col(ga));
            let br: Vec<Expr> = (0..n).map(|a| vf_apply(&x, &y[a]).sub(&vf_apply(&y, &x[a]))).collect();
            for al in 0..n {
                let mut acc = Expr::zero();
                for a in 0..n {
                    acc = acc.add(&inv[al][a].mul(&br[a]));
                }
                f.set(&[al, be, ga], acc);
            }
        }
    }
    let anchor = Tensor::from_fn(&[n, n], |i| e[i[1]][i[0]].clone());
    AlgebroidSpec::new(base, n, anchor, f).unwrap()
}

/// Lie algebra bundle with structure constants rescaled by a polynomial.
pub fn scaled_bundle(rng: &mut ChaCha8Rng, n: usize, max_rank: usize) -> AlgebroidSpec {
    let base = Chart::numbered("Rn", "m", n);
    let (f0, reps) = small_lie_algebra(rng, max_rank);
    let r = reps.len();
    let g = random_poly(rng, &base, 1, 0.7).add(&Expr::one());
    let f = f0.map(|e| e.mul(&g));
    AlgebroidSpec::new(base, r, Tensor::zeros(&[r, n]), f).unwrap()
}

/// A random valid algebroid with base dimension ≤ `max_dim` and rank ≤ `max_rank`.
pub fn random_algebroid(rng: &mut ChaCha8Rng, max_dim: usize, max_rank: usize) -> AlgebroidSpec {
    loop {
        let spec = match rng.gen_range(0..3) {
            0 => {
                let (f, reps) = small_lie_algebra(rng, max_rank);
                if reps[0].len() > max_dim {
                    continue;
                }
                action_algebroid(f, &reps)
            }
            1 => {
                let n = rng.gen_range(1..=max_dim.min(max_rank));
                tangent_frame(rng, n)
            }
            _ => {
                let n = rng.gen_range(1..=max_dim);
                scaled_bundle(rng, n, max_rank)
            }
        };
        return spec;
    }
}

/// Random connection and primitive with polynomial coefficients of degree ≤ `deg`.
pub fn random_adjustment(rng: &mut ChaCha8Rng, spec: &AlgebroidSpec, deg: u32) -> AdjustmentData {
    let (r, n) = (spec.rank(), spec.dim());
    let base = spec.base().clone();
    let omega = Tensor::from_fn(&[r, n, r], |_| {
        if rng.gen_bool(0.5) {
            random_poly(rng, &base, deg, 0.4)
        } else {
            Expr::zero()
        }
    });
    let mut zeta = Tensor::zeros(&[r, n, n]);
    for al in 0..r {
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(0.5) {
                    let p = random_poly(rng, &base, deg, 0.4);
                    zeta.set(&[al, a, b], p.clone());
                    zeta.set(&[al, b, a], p.neg());
                }
            }
        }
    }
    AdjustmentData::new(spec, omega, zeta).unwrap()
}

/// Central-difference check of `∂e/∂coord` at a point, relative tolerance `tol`.
pub fn central_difference_ok(
    e: &Expr,
    coord: &str,
    point: &acw_core::coeff::AtomValuation,
    h: f64,
    tol: f64,
) -> Result<bool, String> {
    use acw_core::coeff::{eval, Atom};
    let key = Atom::Coord(coord.into());
    let d = e.diff(coord);
    let mut plus = point.clone();
    let mut minus = point.clone();
    let x = *point.values.get(&key).ok_or("missing coordinate")?;
    plus.values.insert(key.clone(), x + h);
    minus.values.insert(key, x - h);
    let fd = (eval(e, &plus).map_err(|e| e.to_string())? - eval(e, &minus).map_err(|e| e.to_string())?) / (2.0 * h);
    let exact = eval(&d, point).map_err(|e| e.to_string())?;
    Ok((fd - exact).abs() <= tol * exact.abs().max(fd.abs()).max(1.0))
}
