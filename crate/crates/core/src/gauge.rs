//! Local connections with values in a Lie algebroid over a coordinate patch:
//! curvatures, flatness residuals, Bianchi identities, (higher) gauge
//! transformations and the closure of the gauge algebra.
//!
//! Fields are opaque functions of the patch coordinates, so every identity is
//! checked for all field configurations at once. Gauge parameters are treated
//! as commuting parameter functions: a variation `δ_c` is the degree-zero
//! derivation of the field jets determined by its values on the fields.
//!
//! The flat residuals and the full BRST variations are derived mechanically
//! from the Weil differential: generators are sent to superfields
//! `ξ ↦ A + θ c`, `m̄ ↦ A_M + θ c_M`, `ξ̄ ↦ B + θ λ + θ₂ χ` and the parts of
//! `Φ(d_W w) − dΦ(w)` linear in `θ` (resp. `θ₂`) are read off.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::algebroid::{derived_tensors, AdjustmentData, AlgebroidSpec, DerivedTensors, WeilAlgebra, WeilPresentation};
use crate::coeff::{Atom, Chart, Elementary, Expr, OpaqueAtom};
use crate::gca::{Derivation, Generator, GeneratorSet, GradedElem, Morphism};
use crate::tensor::Tensor;

/// A coordinate patch `x1..xd` with its de Rham complex.
#[derive(Clone, Debug)]
pub struct Patch {
    set: GeneratorSet,
    d: Derivation,
    /// Number of ghost generators placed before the `dx` generators.
    ghost_slots: usize,
}

impl Patch {
    pub fn new(dim: usize) -> Self {
        Patch::build(Chart::numbered("U", "x", dim), 0)
    }

    /// A patch with the coordinates of an existing chart.
    pub fn on_chart(chart: Chart) -> Self {
        Patch::build(chart, 0)
    }

    fn build(chart: Chart, ghost_slots: usize) -> Self {
        let d = chart.dim();
        let mut gens = Vec::new();
        if ghost_slots > 0 {
            gens.push(Generator::bigraded("theta", 0, 1));
            gens.push(Generator::bigraded("theta2", 0, 2));
        }
        for mu in 1..=d {
            gens.push(Generator::bigraded(&format!("dx{mu}"), 1, 0));
        }
        let set = GeneratorSet::new(chart, gens).expect("fresh names");
        let coord_images = (0..d)
            .map(|mu| GradedElem::generator(&set, ghost_slots + mu))
            .collect();
        let gen_images = (0..set.len()).map(|_| GradedElem::zero(&set)).collect();
        let der = Derivation::new(&set, 1, coord_images, gen_images).expect("de Rham");
        Patch {
            set,
            d: der,
            ghost_slots,
        }
    }

    /// The same patch with ghost generators `theta`, `theta2` in front.
    fn with_ghosts(&self) -> Patch {
        Patch::build(self.chart().clone(), 2)
    }

    pub fn chart(&self) -> &Chart {
        self.set.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.set
    }

    pub fn de_rham(&self) -> &Derivation {
        &self.d
    }

    pub fn d(&self, e: &GradedElem) -> GradedElem {
        self.d.apply(e)
    }

    pub fn dx(&self, mu: usize) -> GradedElem {
        GradedElem::generator(&self.set, self.ghost_slots + mu)
    }

    pub fn scalar(&self, e: Expr) -> GradedElem {
        GradedElem::scalar(&self.set, e)
    }

    pub fn zero(&self) -> GradedElem {
        GradedElem::zero(&self.set)
    }

    /// `Σ_μ comps[μ] dx^μ`.
    pub fn one_form(&self, comps: &[Expr]) -> GradedElem {
        let mut e = self.zero();
        for (mu, c) in comps.iter().enumerate() {
            e.add_term(alloc::vec![(self.ghost_slots + mu) as u16], c.clone());
        }
        e
    }

    /// `Σ_{μ<ν} comp(μ, ν) dx^μ dx^ν`.
    pub fn two_form(&self, mut comp: impl FnMut(usize, usize) -> Expr) -> GradedElem {
        let mut e = self.zero();
        let g = self.ghost_slots;
        for mu in 0..self.dim() {
            for nu in (mu + 1)..self.dim() {
                e.add_term(alloc::vec![(g + mu) as u16, (g + nu) as u16], comp(mu, nu));
            }
        }
        e
    }

    /// Component of a one-form along `dx^μ`.
    pub fn component1(&self, e: &GradedElem, mu: usize) -> Expr {
        e.coeff(&[(self.ghost_slots + mu) as u16])
    }

    /// Component of a two-form along `dx^μ dx^ν` for `μ < ν`.
    pub fn component2(&self, e: &GradedElem, mu: usize, nu: usize) -> Expr {
        let g = self.ghost_slots;
        e.coeff(&[(g + mu) as u16, (g + nu) as u16])
    }

    /// Opaque field `name(x1..xd)`.
    pub fn field(&self, name: &str) -> Expr {
        self.chart().opaque_field(name)
    }

    fn embed(&self, target: &Patch, e: &GradedElem) -> GradedElem {
        let shift = target.ghost_slots as u16 - self.ghost_slots as u16;
        e.reindex(&target.set, &|g| g + shift)
    }

    fn project(&self, source: &Patch, e: &GradedElem) -> GradedElem {
        let shift = source.ghost_slots as u16 - self.ghost_slots as u16;
        e.reindex(&self.set, &|g| g - shift)
    }
}

/// Opaque symbol names used for generic fields and ghosts.
pub mod names {
    use alloc::format;
    use alloc::string::String;

    pub fn phi(a: usize) -> String {
        format!("phi{}", a + 1)
    }
    pub fn a_g(al: usize, mu: usize) -> String {
        format!("A{}_{}", al + 1, mu + 1)
    }
    pub fn a_m(a: usize, mu: usize) -> String {
        format!("AM{}_{}", a + 1, mu + 1)
    }
    pub fn b(al: usize, mu: usize, nu: usize) -> String {
        format!("B{}_{}_{}", al + 1, mu + 1, nu + 1)
    }
    pub fn ghost(prefix: &str, i: usize) -> String {
        format!("{prefix}{}", i + 1)
    }
    pub fn lambda(al: usize, mu: usize) -> String {
        format!("lam{}_{}", al + 1, mu + 1)
    }
}

/// Connection data `(φ, A)`.
#[derive(Clone, Debug)]
pub struct Connection {
    pub phi: Vec<Expr>,
    pub a: Vec<GradedElem>,
}

impl Connection {
    /// Opaque `φ^a(x)` and `A^α_μ(x)`.
    pub fn generic(spec: &AlgebroidSpec, patch: &Patch) -> Self {
        let phi = (0..spec.dim()).map(|a| patch.field(&names::phi(a))).collect();
        let a = (0..spec.rank())
            .map(|al| {
                let comps: Vec<Expr> = (0..patch.dim()).map(|mu| patch.field(&names::a_g(al, mu))).collect();
                patch.one_form(&comps)
            })
            .collect();
        Connection { phi, a }
    }
}

/// Kinematical data `(φ, A_M, A_g, B)` of a flat connection with values in the tangent prolongation.
#[derive(Clone, Debug)]
pub struct PatchFieldConfig {
    pub phi: Vec<Expr>,
    pub a_m: Vec<GradedElem>,
    pub a_g: Vec<GradedElem>,
    pub b: Vec<GradedElem>,
}

impl PatchFieldConfig {
    pub fn generic(spec: &AlgebroidSpec, patch: &Patch) -> Self {
        let conn = Connection::generic(spec, patch);
        let a_m = (0..spec.dim())
            .map(|a| {
                let comps: Vec<Expr> = (0..patch.dim()).map(|mu| patch.field(&names::a_m(a, mu))).collect();
                patch.one_form(&comps)
            })
            .collect();
        let b = (0..spec.rank())
            .map(|al| patch.two_form(|mu, nu| patch.field(&names::b(al, mu, nu))))
            .collect();
        PatchFieldConfig {
            phi: conn.phi,
            a_m,
            a_g: conn.a,
            b,
        }
    }

    /// `A_M := E`, `B := F` for the given connection.
    pub fn from_curvatures(conn: &Connection, curv: &Curvatures) -> Self {
        PatchFieldConfig {
            phi: conn.phi.clone(),
            a_m: curv.e.clone(),
            a_g: conn.a.clone(),
            b: curv.f.clone(),
        }
    }
}

/// Gauge parameters `c_g`, `c_M`, `λ` and the higher parameter `χ`.
#[derive(Clone, Debug)]
pub struct GhostConfig {
    pub c_g: Vec<Expr>,
    pub c_m: Vec<Expr>,
    pub lambda: Vec<GradedElem>,
    pub chi: Vec<Expr>,
}

impl GhostConfig {
    pub fn generic(spec: &AlgebroidSpec, patch: &Patch) -> Self {
        GhostConfig {
            c_g: (0..spec.rank()).map(|al| patch.field(&names::ghost("c", al))).collect(),
            c_m: (0..spec.dim()).map(|a| patch.field(&names::ghost("cM", a))).collect(),
            lambda: (0..spec.rank())
                .map(|al| {
                    let comps: Vec<Expr> = (0..patch.dim()).map(|mu| patch.field(&names::lambda(al, mu))).collect();
                    patch.one_form(&comps)
                })
                .collect(),
            chi: (0..spec.rank()).map(|al| patch.field(&names::ghost("chi", al))).collect(),
        }
    }

    /// The truncation `c_M = λ = χ = 0`.
    pub fn truncated(&self, patch: &Patch) -> Self {
        GhostConfig {
            c_g: self.c_g.clone(),
            c_m: self.c_m.iter().map(|_| Expr::zero()).collect(),
            lambda: self.lambda.iter().map(|_| patch.zero()).collect(),
            chi: self.chi.iter().map(|_| Expr::zero()).collect(),
        }
    }

    pub fn zero(spec: &AlgebroidSpec, patch: &Patch) -> Self {
        GhostConfig {
            c_g: alloc::vec![Expr::zero(); spec.rank()],
            c_m: alloc::vec![Expr::zero(); spec.dim()],
            lambda: alloc::vec![patch.zero(); spec.rank()],
            chi: alloc::vec![Expr::zero(); spec.rank()],
        }
    }
}

/// Generic gauge parameter `prefix1..prefixr` as opaque functions.
pub fn generic_parameter(spec: &AlgebroidSpec, patch: &Patch, prefix: &str) -> Vec<Expr> {
    (0..spec.rank()).map(|al| patch.field(&names::ghost(prefix, al))).collect()
}

/// Structure functions and tensors composed with `φ`.
struct Pulled {
    spec: AlgebroidSpec,
    map: BTreeMap<Arc<str>, Expr>,
}

impl Pulled {
    fn new(spec: &AlgebroidSpec, phi: &[Expr]) -> Self {
        let map = spec
            .base()
            .coords()
            .iter()
            .cloned()
            .zip(phi.iter().cloned())
            .collect();
        Pulled {
            spec: spec.clone(),
            map,
        }
    }

    fn pull(&self, e: &Expr) -> Expr {
        if self.map.is_empty() || e.constant_value().is_some() {
            e.clone()
        } else {
            e.substitute_coords(&self.map)
        }
    }

    fn tensor(&self, t: &Tensor) -> Tensor {
        t.map(|e| self.pull(e))
    }

    fn rho(&self) -> Tensor {
        self.tensor(self.spec.anchor())
    }

    fn f(&self) -> Tensor {
        self.tensor(self.spec.bracket())
    }

    /// `∂_b ρ^a_α` at `[b, α, a]`.
    fn drho(&self) -> Tensor {
        let (r, n) = (self.spec.rank(), self.spec.dim());
        let base = self.spec.base().clone();
        Tensor::from_fn(&[n, r, n], |i| self.pull(&self.spec.rho(i[2], i[1]).diff(&base.coords()[i[0]])))
    }
}

/// Curvature components `(E, F)`.
#[derive(Clone, Debug)]
pub struct Curvatures {
    pub e: Vec<GradedElem>,
    pub f: Vec<GradedElem>,
}

/// `E^a = dφ^a − ρ^a_α A^α`,
/// `F^α = dA^α + ½ f^α_{βγ} A^β A^γ + ω^α_{aβ} E^a A^β + ½ ζ^α_{ab} E^a E^b`.
pub fn curvature_components(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, conn: &Connection) -> Curvatures {
    let (r, n) = (spec.rank(), spec.dim());
    assert_eq!(conn.phi.len(), n, "phi has the base dimension");
    assert_eq!(conn.a.len(), r, "A has the rank of the algebroid");
    let p = Pulled::new(spec, &conn.phi);
    let rho = p.rho();
    let f = p.f();
    let om = p.tensor(adj.omega_tensor());
    let z = p.tensor(adj.zeta_tensor());
    let half = Expr::frac(1, 2);
    let e: Vec<GradedElem> = (0..n)
        .map(|a| {
            let mut x = patch.d(&patch.scalar(conn.phi[a].clone()));
            for al in 0..r {
                x = x.sub(&conn.a[al].scale(rho.get(&[al, a])));
            }
            x
        })
        .collect();
    let fc: Vec<GradedElem> = (0..r)
        .map(|al| {
            let mut x = patch.d(&conn.a[al]);
            for be in 0..r {
                for ga in 0..r {
                    let k = f.get(&[al, be, ga]);
                    if !k.is_zero() {
                        x.add_assign(&conn.a[be].mul(&conn.a[ga]).scale(&k.mul(&half)));
                    }
                }
                for a in 0..n {
                    let k = om.get(&[al, a, be]);
                    if !k.is_zero() {
                        x.add_assign(&e[a].mul(&conn.a[be]).scale(k));
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let k = z.get(&[al, a, b]);
                    if !k.is_zero() {
                        x.add_assign(&e[a].mul(&e[b]).scale(&k.mul(&half)));
                    }
                }
            }
            x
        })
        .collect();
    Curvatures { e, f: fc }
}

/// Superfield images of the Weil generators.
fn weil_morphism(
    w: &WeilAlgebra,
    patch: &Patch,
    phi: &[Expr],
    images_xi: Vec<GradedElem>,
    images_mbar: Vec<GradedElem>,
    images_xibar: Vec<GradedElem>,
) -> Morphism {
    let coord_images = w
        .spec()
        .base()
        .coords()
        .iter()
        .cloned()
        .zip(phi.iter().cloned())
        .collect();
    let mut gen_images = images_xi;
    gen_images.extend(images_mbar);
    gen_images.extend(images_xibar);
    Morphism {
        target: patch.generators().clone(),
        coord_images,
        gen_images,
    }
}

/// `dΦ(s) − Φ(d_W s)` for `s` = coordinates, then `m̄`, `ξ`, `ξ̄` ... grouped by role.
fn morphism_defects(w: &WeilAlgebra, patch: &Patch, phi_map: &Morphism, phi: &[Expr]) -> [Vec<GradedElem>; 4] {
    let (r, n) = (w.spec().rank(), w.spec().dim());
    let ix = w.index();
    let d = w.differential();
    let coord: Vec<GradedElem> = (0..n)
        .map(|a| {
            let lhs = patch.d(&patch.scalar(phi[a].clone()));
            lhs.sub(&phi_map.apply(d.coord_image(a)))
        })
        .collect();
    let defect = |g: u16| {
        let img = &phi_map.gen_images[g as usize];
        patch.d(img).sub(&phi_map.apply(d.gen_image(g as usize)))
    };
    let mbar = (0..n).map(|a| defect(ix.mbar(a))).collect();
    let xi = (0..r).map(|al| defect(ix.xi(al))).collect();
    let xibar = (0..r).map(|al| defect(ix.xibar(al))).collect();
    [coord, mbar, xi, xibar]
}

/// Left-hand sides of the four flatness equations, in the order
/// `(φ, A_M, A_g, B)`, each indexed by the component.
pub fn flat_residuals(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, cfg: &PatchFieldConfig) -> [Vec<GradedElem>; 4] {
    let w = WeilAlgebra::build_unchecked(spec, adj, WeilPresentation::Shifted);
    let m = weil_morphism(&w, patch, &cfg.phi, cfg.a_g.clone(), cfg.a_m.clone(), cfg.b.clone());
    morphism_defects(&w, patch, &m, &cfg.phi)
}

/// Field variations `(δφ, δA_M, δA_g, δB)` and ghost variations `(δc_M, δc_g, δλ)`.
#[derive(Clone, Debug)]
pub struct FullVariation {
    pub phi: Vec<Expr>,
    pub a_m: Vec<GradedElem>,
    pub a_g: Vec<GradedElem>,
    pub b: Vec<GradedElem>,
    pub c_m: Vec<Expr>,
    pub c_g: Vec<Expr>,
    pub lambda: Vec<GradedElem>,
}

/// BRST variations read off from the superfield expansion of the Weil differential.
pub fn full_variation(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    cfg: &PatchFieldConfig,
    ghosts: &GhostConfig,
) -> FullVariation {
    let sp = patch.with_ghosts();
    let theta = GradedElem::generator(sp.generators(), 0);
    let theta2 = GradedElem::generator(sp.generators(), 1);
    let up = |e: &GradedElem| patch.embed(&sp, e);
    let s = |e: &Expr| sp.scalar(e.clone());
    let w = WeilAlgebra::build_unchecked(spec, adj, WeilPresentation::Shifted);
    let xi: Vec<GradedElem> = (0..spec.rank())
        .map(|al| up(&cfg.a_g[al]).add(&theta.mul(&s(&ghosts.c_g[al]))))
        .collect();
    let mbar: Vec<GradedElem> = (0..spec.dim())
        .map(|a| up(&cfg.a_m[a]).add(&theta.mul(&s(&ghosts.c_m[a]))))
        .collect();
    let xibar: Vec<GradedElem> = (0..spec.rank())
        .map(|al| {
            up(&cfg.b[al])
                .add(&theta.mul(&up(&ghosts.lambda[al])))
                .add(&theta2.mul(&s(&ghosts.chi[al])))
        })
        .collect();
    let m = weil_morphism(&w, &sp, &cfg.phi, xi, mbar, xibar);
    let [coord, mb, x, xb] = morphism_defects(&w, &sp, &m, &cfg.phi);
    // Variations are the θ-linear parts of Φ(d_W w) − dΦ(w), i.e. minus the defects.
    let theta_part = |e: &GradedElem| -> GradedElem {
        let lin = e.filter(&mut |mono| mono.first() == Some(&0) && !mono.contains(&1));
        let mut out = GradedElem::zero(sp.generators());
        for (mono, c) in lin.neg().terms() {
            out.add_term(mono[1..].to_vec(), c.clone());
        }
        patch.project(&sp, &out)
    };
    let theta2_part = |e: &GradedElem| -> GradedElem {
        let lin = e.filter(&mut |mono| !mono.contains(&0) && mono.iter().filter(|&&g| g == 1).count() == 1);
        let mut out = GradedElem::zero(sp.generators());
        for (mono, c) in lin.neg().terms() {
            out.add_term(mono[1..].to_vec(), c.clone());
        }
        patch.project(&sp, &out)
    };
    let scalar_of = |e: &GradedElem| e.coeff(&[]);
    FullVariation {
        phi: coord.iter().map(|e| scalar_of(&theta_part(e))).collect(),
        a_m: mb.iter().map(&theta_part).collect(),
        a_g: x.iter().map(&theta_part).collect(),
        b: xb.iter().map(theta_part).collect(),
        c_m: mb.iter().map(|e| scalar_of(&theta2_part(e))).collect(),
        c_g: x.iter().map(|e| scalar_of(&theta2_part(e))).collect(),
        lambda: xb.iter().map(theta2_part).collect(),
    }
}

/// The displayed BRST variations, transcribed with renamed bound indices.
pub fn full_variation_display(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    cfg: &PatchFieldConfig,
    ghosts: &GhostConfig,
) -> FullVariation {
    let (r, n) = (spec.rank(), spec.dim());
    let p = Pulled::new(spec, &cfg.phi);
    let rho = p.rho();
    let f = p.f();
    let drho = p.drho();
    let om = p.tensor(adj.omega_tensor());
    let z = p.tensor(adj.zeta_tensor());
    let t = derived_tensors(spec, adj);
    let rbas = p.tensor(&t.rbas);
    let cov = p.tensor(&t.r_nabla.add(&t.nabla_bas_zeta));
    let nz = p.tensor(&t.nabla_zeta);
    let dz = p.tensor(&t.dnabla_zeta);
    let half = Expr::frac(1, 2);
    let s = |e: &Expr| patch.scalar(e.clone());
    let cg: Vec<GradedElem> = ghosts.c_g.iter().map(s).collect();
    let cm: Vec<GradedElem> = ghosts.c_m.iter().map(s).collect();
    let (a_g, a_m, b, lam) = (&cfg.a_g, &cfg.a_m, &cfg.b, &ghosts.lambda);
    // (f + ρω)^α_{βγ} and ζρζ contractions.
    let fro = Tensor::from_fn(&[r, r, r], |i| {
        let mut k = f.get(&[i[0], i[1], i[2]]).clone();
        for a in 0..n {
            k = k.add(&rho.get(&[i[2], a]).mul(om.get(&[i[0], a, i[1]])));
        }
        k
    });
    let zrz = Tensor::from_fn(&[r, n, n, n], |i| {
        let mut k = Expr::zero();
        for d in 0..n {
            for be in 0..r {
                k = k.add(&z.get(&[i[0], i[1], d]).mul(rho.get(&[be, d])).mul(z.get(&[be, i[2], i[3]])));
            }
        }
        k
    });

    let phi_var = (0..n)
        .map(|a| {
            let mut k = ghosts.c_m[a].clone();
            for al in 0..r {
                k = k.add(&rho.get(&[al, a]).mul(&ghosts.c_g[al]));
            }
            k
        })
        .collect();

    // δA_g^α = dc^α + f^α_{βγ} A^β c^γ + λ^α − ω^α_{aβ}(c_M^a A^β − A_M^a c^β) − ζ^α_{ab} c_M^a A_M^b
    let inner_g = |al: usize| {
        let mut x = lam[al].clone();
        for a in 0..n {
            for be in 0..r {
                let k = om.get(&[al, a, be]);
                if k.is_zero() {
                    continue;
                }
                let term = cm[a].mul(&a_g[be]).sub(&a_m[a].mul(&cg[be]));
                x = x.sub(&term.scale(k));
            }
            for bb in 0..n {
                let k = z.get(&[al, a, bb]);
                if !k.is_zero() {
                    x = x.sub(&cm[a].mul(&a_m[bb]).scale(k));
                }
            }
        }
        x
    };
    let ag_var: Vec<GradedElem> = (0..r)
        .map(|al| {
            let mut x = patch.d(&cg[al]).add(&inner_g(al));
            for be in 0..r {
                for ga in 0..r {
                    let k = f.get(&[al, be, ga]);
                    if !k.is_zero() {
                        x = x.add(&a_g[be].mul(&cg[ga]).scale(k));
                    }
                }
            }
            x
        })
        .collect();
    // δA_M^a = dc_M^a − ρ^a_α(λ^α − ω(c_M A − A_M c) − ζ c_M A_M) + ∂_b ρ^a_α (c^α A_M^b − A^α c_M^b)
    let am_var: Vec<GradedElem> = (0..n)
        .map(|a| {
            let mut x = patch.d(&cm[a]);
            for al in 0..r {
                let k = rho.get(&[al, a]);
                if !k.is_zero() {
                    x = x.sub(&inner_g(al).scale(k));
                }
                for bb in 0..n {
                    let k = drho.get(&[bb, al, a]);
                    if !k.is_zero() {
                        let term = cg[al].mul(&a_m[bb]).sub(&a_g[al].mul(&cm[bb]));
                        x = x.add(&term.scale(k));
                    }
                }
            }
            x
        })
        .collect();
    // δB^α = dλ − (f+ρω)(c B − A λ) − (ω − ζρ)(c_M B − A_M λ)
    //        + (½ dζ − 3/2 ζρζ) c_M A_M A_M + Rbas (c A A_M + ½ A A c_M)
    //        + (R + ∇ζ)(c_M A_M A + ½ A_M A_M c)
    let b_var: Vec<GradedElem> = (0..r)
        .map(|al| {
            let mut x = patch.d(&lam[al]);
            for be in 0..r {
                for ga in 0..r {
                    let k = fro.get(&[al, be, ga]);
                    if !k.is_zero() {
                        let term = cg[be].mul(&b[ga]).sub(&a_g[be].mul(&lam[ga]));
                        x = x.sub(&term.scale(k));
                    }
                    for a in 0..n {
                        let k = rbas.get(&[al, be, ga, a]);
                        if !k.is_zero() {
                            let term = cg[be]
                                .mul(&a_g[ga])
                                .mul(&a_m[a])
                                .add(&a_g[be].mul(&a_g[ga]).mul(&cm[a]).scale(&half));
                            x = x.add(&term.scale(k));
                        }
                    }
                }
                for a in 0..n {
                    let k = nz.get(&[al, a, be]);
                    if !k.is_zero() {
                        let term = cm[a].mul(&b[be]).sub(&a_m[a].mul(&lam[be]));
                        x = x.sub(&term.scale(k));
                    }
                    for bb in 0..n {
                        let k = cov.get(&[al, a, bb, be]);
                        if !k.is_zero() {
                            let term = cm[a]
                                .mul(&a_m[bb])
                                .mul(&a_g[be])
                                .add(&a_m[a].mul(&a_m[bb]).mul(&cg[be]).scale(&half));
                            x = x.add(&term.scale(k));
                        }
                    }
                }
            }
            for a in 0..n {
                for bb in 0..n {
                    for c in 0..n {
                        let k = dz
                            .get(&[al, a, bb, c])
                            .mul(&half)
                            .sub(&zrz.get(&[al, a, bb, c]).mul(&Expr::frac(3, 2)));
                        if !k.is_zero() {
                            x = x.add(&cm[a].mul(&a_m[bb]).mul(&a_m[c]).scale(&k));
                        }
                    }
                }
            }
            x
        })
        .collect();
    // δc_M^a = −ρ^a_α χ^α, δc^α = χ^α,
    // δλ^α = −dχ^α − (f+ρω)^α_{βγ} A^β χ^γ − (ω − ζρ)^α_{aβ} A_M^a χ^β
    let cm_var = (0..n)
        .map(|a| {
            let mut k = Expr::zero();
            for al in 0..r {
                k = k.sub(&rho.get(&[al, a]).mul(&ghosts.chi[al]));
            }
            k
        })
        .collect();
    let cg_var = ghosts.chi.clone();
    let lam_var = (0..r)
        .map(|al| {
            let mut x = patch.d(&s(&ghosts.chi[al])).neg();
            for be in 0..r {
                for ga in 0..r {
                    let k = fro.get(&[al, be, ga]);
                    if !k.is_zero() {
                        x = x.sub(&a_g[be].scale(&k.mul(&ghosts.chi[ga])));
                    }
                }
                for a in 0..n {
                    let k = nz.get(&[al, a, be]);
                    if !k.is_zero() {
                        x = x.sub(&a_m[a].scale(&k.mul(&ghosts.chi[be])));
                    }
                }
            }
            x
        })
        .collect();
    FullVariation {
        phi: phi_var,
        a_m: am_var,
        a_g: ag_var,
        b: b_var,
        c_m: cm_var,
        c_g: cg_var,
        lambda: lam_var,
    }
}

/// Both displayed Bianchi identities for given `E`, `F` (which may be formal symbols).
pub fn bianchi_residuals_with(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    conn: &Connection,
    curv: &Curvatures,
) -> [Vec<GradedElem>; 2] {
    let (r, n) = (spec.rank(), spec.dim());
    let p = Pulled::new(spec, &conn.phi);
    let rho = p.rho();
    let f = p.f();
    let drho = p.drho();
    let om = p.tensor(adj.omega_tensor());
    let z = p.tensor(adj.zeta_tensor());
    let t = derived_tensors(spec, adj);
    let nz = p.tensor(&t.nabla_zeta);
    let dz = p.tensor(&t.dnabla_zeta);
    let half = Expr::frac(1, 2);
    let (a, e, fc) = (&conn.a, &curv.e, &curv.f);
    // 0 = dE^a + ρ^a_α(F^α − ω^α_{bβ} E^b A^β − ½ ζ^α_{bc} E^b E^c) − ∂_b ρ^a_α A^α E^b
    let first = (0..n)
        .map(|i| {
            let mut x = patch.d(&e[i]);
            for al in 0..r {
                let k = rho.get(&[al, i]);
                if !k.is_zero() {
                    let mut inner = fc[al].clone();
                    for bb in 0..n {
                        for be in 0..r {
                            let w = om.get(&[al, bb, be]);
                            if !w.is_zero() {
                                inner = inner.sub(&e[bb].mul(&a[be]).scale(w));
                            }
                        }
                        for c in 0..n {
                            let w = z.get(&[al, bb, c]);
                            if !w.is_zero() {
                                inner = inner.sub(&e[bb].mul(&e[c]).scale(&w.mul(&half)));
                            }
                        }
                    }
                    x = x.add(&inner.scale(k));
                }
                for bb in 0..n {
                    let k = drho.get(&[bb, al, i]);
                    if !k.is_zero() {
                        x = x.sub(&a[al].mul(&e[bb]).scale(k));
                    }
                }
            }
            x
        })
        .collect();
    // 0 = dF^α + (f + ρω)^α_{βγ} A^β F^γ + (ω − ζρ)^α_{aβ} E^a F^β − (⅙ dζ − ½ ζρζ)^α_{abc} E^a E^b E^c
    let second = (0..r)
        .map(|al| {
            let mut x = patch.d(&fc[al]);
            for be in 0..r {
                for ga in 0..r {
                    let mut k = f.get(&[al, be, ga]).clone();
                    for i in 0..n {
                        k = k.add(&rho.get(&[ga, i]).mul(om.get(&[al, i, be])));
                    }
                    if !k.is_zero() {
                        x = x.add(&a[be].mul(&fc[ga]).scale(&k));
                    }
                }
                for i in 0..n {
                    let k = nz.get(&[al, i, be]);
                    if !k.is_zero() {
                        x = x.add(&e[i].mul(&fc[be]).scale(k));
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let mut zrz = Expr::zero();
                        for d in 0..n {
                            for be in 0..r {
                                zrz = zrz.add(&z.get(&[al, i, d]).mul(rho.get(&[be, d])).mul(z.get(&[be, j, l])));
                            }
                        }
                        let k = dz.get(&[al, i, j, l]).mul(&Expr::frac(1, 6)).sub(&zrz.mul(&half));
                        if !k.is_zero() {
                            x = x.sub(&e[i].mul(&e[j]).mul(&e[l]).scale(&k));
                        }
                    }
                }
            }
            x
        })
        .collect();
    [first, second]
}

/// Bianchi residuals with `E`, `F` computed from the connection.
pub fn bianchi_residuals(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, conn: &Connection) -> [Vec<GradedElem>; 2] {
    let curv = curvature_components(spec, adj, patch, conn);
    bianchi_residuals_with(spec, adj, patch, conn, &curv)
}

/// A variation of the connection fields, extended to their jets.
#[derive(Clone, Debug)]
pub struct FieldVariation {
    /// Variation of each opaque base field by name (`phi{a}`, `A{α}_{μ}`, ...).
    rules: BTreeMap<String, Expr>,
    patch_coords: Vec<Arc<str>>,
}

impl FieldVariation {
    pub fn new(patch: &Patch, rules: BTreeMap<String, Expr>) -> Self {
        FieldVariation {
            rules,
            patch_coords: patch.chart().coords().to_vec(),
        }
    }

    /// The truncated gauge variation `δφ = ρc`, `δA = dc + f A c + ω E c`.
    pub fn gauge(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, conn: &Connection, c: &[Expr]) -> Self {
        let gv = gauge_variation(spec, adj, patch, conn, c);
        let mut rules = BTreeMap::new();
        for (a, v) in gv.phi.iter().enumerate() {
            rules.insert(names::phi(a), v.clone());
        }
        for (al, v) in gv.a.iter().enumerate() {
            for mu in 0..patch.dim() {
                rules.insert(names::a_g(al, mu), patch.component1(v, mu));
            }
        }
        FieldVariation::new(patch, rules)
    }

    fn is_patch_field(&self, o: &OpaqueAtom) -> bool {
        o.args.len() == self.patch_coords.len()
            && o.args.iter().zip(&self.patch_coords).all(|(a, c)| *a == Expr::coord(c))
    }

    fn atom_variation(&self, atom: &Atom) -> Expr {
        match atom {
            Atom::Coord(_) => Expr::zero(),
            Atom::Opaque(o) => match self.rules.get(&*o.name) {
                Some(v) if self.is_patch_field(o) => {
                    let mut out = v.clone();
                    for &slot in &o.partials {
                        out = out.diff(&self.patch_coords[slot as usize]);
                    }
                    out
                }
                _ => {
                    // Chain rule through the arguments.
                    let mut acc = Expr::zero();
                    for (slot, arg) in o.args.iter().enumerate() {
                        let darg = self.apply_expr(arg);
                        if darg.is_zero() {
                            continue;
                        }
                        let mut partials = o.partials.clone();
                        partials.push(slot as u32);
                        acc = acc.add(&Expr::opaque(&o.name, o.args.clone(), partials).mul(&darg));
                    }
                    acc
                }
            },
            Atom::Func(fa) => {
                let inner = self.apply_expr(&fa.arg);
                if inner.is_zero() {
                    return Expr::zero();
                }
                let outer = match fa.func {
                    Elementary::Sin => fa.arg.cos(),
                    Elementary::Cos => fa.arg.sin().neg(),
                    Elementary::Exp => fa.arg.exp(),
                    Elementary::Sqrt => fa.arg.sqrt().scale_int(2).recip().expect("sqrt atom is nonzero"),
                };
                outer.mul(&inner)
            }
        }
    }

    pub fn apply_expr(&self, e: &Expr) -> Expr {
        e.derive(&mut |a| self.atom_variation(a))
    }

    pub fn apply(&self, e: &GradedElem) -> GradedElem {
        e.map_coeffs(&mut |c| self.apply_expr(c))
    }
}

/// Replaces opaque fields (and their partials) by explicit functions of the patch coordinates.
pub fn substitute_fields(e: &Expr, patch: &Patch, images: &BTreeMap<String, Expr>) -> Expr {
    let coords = patch.chart().coords().to_vec();
    e.map_atoms(&mut |a| match a {
        Atom::Opaque(o) => images.get(&*o.name).map(|img| {
            let mut out = img.clone();
            for &slot in &o.partials {
                out = out.diff(&coords[slot as usize]);
            }
            out
        }),
        _ => None,
    })
}

pub fn substitute_fields_elem(e: &GradedElem, patch: &Patch, images: &BTreeMap<String, Expr>) -> GradedElem {
    e.map_coeffs(&mut |c| substitute_fields(c, patch, images))
}

#[derive(Clone, Debug)]
pub struct GaugeVariation {
    pub phi: Vec<Expr>,
    pub a: Vec<GradedElem>,
    /// `δE`, `δF` from the displayed formulas.
    pub e_display: Vec<GradedElem>,
    pub f_display: Vec<GradedElem>,
    /// `δE`, `δF` obtained by varying the curvature expressions.
    pub e_linear: Vec<GradedElem>,
    pub f_linear: Vec<GradedElem>,
}

fn displayed_field_variation(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    conn: &Connection,
    curv: &Curvatures,
    c: &[Expr],
) -> (Vec<Expr>, Vec<GradedElem>) {
    let (r, n) = (spec.rank(), spec.dim());
    let p = Pulled::new(spec, &conn.phi);
    let rho = p.rho();
    let f = p.f();
    let om = p.tensor(adj.omega_tensor());
    let phi = (0..n)
        .map(|a| {
            let mut k = Expr::zero();
            for al in 0..r {
                k = k.add(&rho.get(&[al, a]).mul(&c[al]));
            }
            k
        })
        .collect();
    let a = (0..r)
        .map(|al| {
            let mut x = patch.d(&patch.scalar(c[al].clone()));
            for be in 0..r {
                for ga in 0..r {
                    let k = f.get(&[al, be, ga]);
                    if !k.is_zero() {
                        x = x.add(&conn.a[be].scale(&k.mul(&c[ga])));
                    }
                }
                for i in 0..n {
                    let k = om.get(&[al, i, be]);
                    if !k.is_zero() {
                        x = x.add(&curv.e[i].scale(&k.mul(&c[be])));
                    }
                }
            }
            x
        })
        .collect();
    (phi, a)
}

/// `δ_c` on `(φ, A, E, F)`, with `δE`, `δF` computed both from the displayed
/// formulas and by linearizing the curvature components.
pub fn gauge_variation(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, conn: &Connection, c: &[Expr]) -> GaugeVariation {
    let (r, n) = (spec.rank(), spec.dim());
    assert_eq!(c.len(), r, "gauge parameter has the rank of the algebroid");
    let curv = curvature_components(spec, adj, patch, conn);
    let (phi, a) = displayed_field_variation(spec, adj, patch, conn, &curv, c);
    let p = Pulled::new(spec, &conn.phi);
    let rho = p.rho();
    let f = p.f();
    let drho = p.drho();
    let om = p.tensor(adj.omega_tensor());
    // δE^a = ∂_b ρ^a_α c^α E^b − ρ^a_α ω^α_{bβ} E^b c^β
    let e_display = (0..n)
        .map(|i| {
            let mut x = patch.zero();
            for bb in 0..n {
                let mut k = Expr::zero();
                for al in 0..r {
                    k = k.add(&drho.get(&[bb, al, i]).mul(&c[al]));
                    for be in 0..r {
                        k = k.sub(&rho.get(&[al, i]).mul(om.get(&[al, bb, be])).mul(&c[be]));
                    }
                }
                if !k.is_zero() {
                    x = x.add(&curv.e[bb].scale(&k));
                }
            }
            x
        })
        .collect();
    // δF^α = −(f^α_{βγ} + ρ^a_γ ω^α_{aβ}) c^β F^γ
    let f_display = (0..r)
        .map(|al| {
            let mut x = patch.zero();
            for ga in 0..r {
                let mut k = Expr::zero();
                for be in 0..r {
                    let mut s = f.get(&[al, be, ga]).clone();
                    for i in 0..n {
                        s = s.add(&rho.get(&[ga, i]).mul(om.get(&[al, i, be])));
                    }
                    k = k.sub(&s.mul(&c[be]));
                }
                if !k.is_zero() {
                    x = x.add(&curv.f[ga].scale(&k));
                }
            }
            x
        })
        .collect();
    let mut rules = BTreeMap::new();
    for (i, v) in phi.iter().enumerate() {
        rules.insert(names::phi(i), v.clone());
    }
    for (al, v) in a.iter().enumerate() {
        for mu in 0..patch.dim() {
            rules.insert(names::a_g(al, mu), patch.component1(v, mu));
        }
    }
    let delta = FieldVariation::new(patch, rules);
    let e_linear = curv.e.iter().map(|x| delta.apply(x)).collect();
    let f_linear = curv.f.iter().map(|x| delta.apply(x)).collect();
    GaugeVariation {
        phi,
        a,
        e_display,
        f_display,
        e_linear,
        f_linear,
    }
}

/// `δF_(linearized) + (f^α_{βγ} + ρ^a_γ ω^α_{aβ}) c^β F^γ`.
pub fn covariance_check(spec: &AlgebroidSpec, adj: &AdjustmentData, patch: &Patch, conn: &Connection, c: &[Expr]) -> Vec<GradedElem> {
    let gv = gauge_variation(spec, adj, patch, conn, c);
    gv.f_linear
        .iter()
        .zip(&gv.f_display)
        .map(|(lin, disp)| lin.sub(disp))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ClosureResult {
    /// `c₃^α = f^α_{βγ}(φ) c₁^β c₂^γ`.
    pub c3: Vec<Expr>,
    /// `[δ₁, δ₂]φ − δ₃φ`.
    pub residual_phi: Vec<Expr>,
    /// `[δ₁, δ₂]A − δ₃A`.
    pub residual_a: Vec<GradedElem>,
}

/// Commutator of two truncated gauge variations minus the variation with the
/// bracket parameter.
pub fn closure_residual(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    conn: &Connection,
    c1: &[Expr],
    c2: &[Expr],
) -> ClosureResult {
    let (r, n) = (spec.rank(), spec.dim());
    let p = Pulled::new(spec, &conn.phi);
    let f = p.f();
    let c3: Vec<Expr> = (0..r)
        .map(|al| {
            let mut k = Expr::zero();
            for be in 0..r {
                for ga in 0..r {
                    let s = f.get(&[al, be, ga]);
                    if !s.is_zero() {
                        k = k.add(&s.mul(&c1[be]).mul(&c2[ga]));
                    }
                }
            }
            k
        })
        .collect();
    let d1 = FieldVariation::gauge(spec, adj, patch, conn, c1);
    let d2 = FieldVariation::gauge(spec, adj, patch, conn, c2);
    let g1 = gauge_variation(spec, adj, patch, conn, c1);
    let g2 = gauge_variation(spec, adj, patch, conn, c2);
    let g3 = gauge_variation(spec, adj, patch, conn, &c3);
    let residual_phi = (0..n)
        .map(|a| {
            d1.apply_expr(&g2.phi[a])
                .sub(&d2.apply_expr(&g1.phi[a]))
                .sub(&g3.phi[a])
        })
        .collect();
    let residual_a = (0..r)
        .map(|al| d1.apply(&g2.a[al]).sub(&d2.apply(&g1.a[al])).sub(&g3.a[al]))
        .collect();
    ClosureResult {
        c3,
        residual_phi,
        residual_a,
    }
}

/// `Σ R^bas{}^α_{βγa}(φ) c₁^β c₂^γ E^a`, assembled directly from the tensor.
pub fn assembled_rbas_term(
    spec: &AlgebroidSpec,
    tensors: &DerivedTensors,
    patch: &Patch,
    conn: &Connection,
    curv: &Curvatures,
    c1: &[Expr],
    c2: &[Expr],
) -> Vec<GradedElem> {
    let (r, n) = (spec.rank(), spec.dim());
    let p = Pulled::new(spec, &conn.phi);
    let rbas = p.tensor(&tensors.rbas);
    (0..r)
        .map(|al| {
            let mut x = patch.zero();
            for be in 0..r {
                for ga in 0..r {
                    for a in 0..n {
                        let k = rbas.get(&[al, be, ga, a]);
                        if !k.is_zero() {
                            x = x.add(&curv.e[a].scale(&k.mul(&c1[be]).mul(&c2[ga])));
                        }
                    }
                }
            }
            x
        })
        .collect()
}

/// Coefficient `κ` in `[δ₁, δ₂]A − δ₃A = κ · R^bas(φ)(c₁, c₂) E`.
pub const CLOSURE_FACTOR: i64 = -1;

/// `[δ₁, δ₂]A − δ₃A − κ · R^bas(φ)(c₁, c₂) E`, with both sides computed
/// independently. Vanishes for every adjustment.
pub fn closure_check(
    spec: &AlgebroidSpec,
    adj: &AdjustmentData,
    patch: &Patch,
    conn: &Connection,
    c1: &[Expr],
    c2: &[Expr],
) -> (ClosureResult, Vec<GradedElem>) {
    let res = closure_residual(spec, adj, patch, conn, c1, c2);
    let curv = curvature_components(spec, adj, patch, conn);
    let t = derived_tensors(spec, adj);
    let term = assembled_rbas_term(spec, &t, patch, conn, &curv, c1, c2);
    let k = Expr::int(CLOSURE_FACTOR);
    let diff = res.residual_a.iter().zip(&term).map(|(x, y)| x.sub(&y.scale(&k))).collect();
    (res, diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abelian1() -> AlgebroidSpec {
        AlgebroidSpec::lie_algebra(1, Tensor::zeros(&[1, 1, 1])).unwrap()
    }

    #[test]
    fn abelian_curvature_is_da() {
        let spec = abelian1();
        let patch = Patch::new(2);
        let conn = Connection::generic(&spec, &patch);
        let adj = AdjustmentData::zero(&spec);
        let curv = curvature_components(&spec, &adj, &patch, &conn);
        assert_eq!(curv.f[0], patch.d(&conn.a[0]));
        let c = generic_parameter(&spec, &patch, "c");
        let gv = gauge_variation(&spec, &adj, &patch, &conn, &c);
        assert_eq!(gv.a[0], patch.d(&patch.scalar(c[0].clone())));
        assert!(gv.f_linear[0].is_zero());
    }

    #[test]
    fn abelian_chi_only() {
        let spec = abelian1();
        let patch = Patch::new(2);
        let adj = AdjustmentData::zero(&spec);
        let cfg = PatchFieldConfig::generic(&spec, &patch);
        let mut ghosts = GhostConfig::zero(&spec, &patch);
        ghosts.chi = generic_parameter(&spec, &patch, "chi");
        let v = full_variation(&spec, &adj, &patch, &cfg, &ghosts);
        let expect = patch.d(&patch.scalar(ghosts.chi[0].clone())).neg();
        assert_eq!(v.lambda[0], expect);
        assert!(v.a_g[0].is_zero());
        assert!(v.b[0].is_zero());
    }

    #[test]
    fn zero_ghosts_give_zero_variations() {
        let spec = abelian1();
        let patch = Patch::new(2);
        let adj = AdjustmentData::zero(&spec);
        let cfg = PatchFieldConfig::generic(&spec, &patch);
        let v = full_variation(&spec, &adj, &patch, &cfg, &GhostConfig::zero(&spec, &patch));
        assert!(v.a_g.iter().chain(&v.b).chain(&v.lambda).all(GradedElem::is_zero));
        assert!(v.phi.is_empty());
    }
}
