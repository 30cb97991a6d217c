//! Lie algebroids in a local frame: Chevalley–Eilenberg differential,
//! connection tensors and the split Weil algebra.
//!
//! Index conventions (all zero-based in code):
//! - anchor `ρ^a_α` is stored at `[α, a]`,
//! - bracket `f^α_{βγ}` at `[α, β, γ]`,
//! - connection `∇_{∂_a} e_β = ω^α_{aβ} e_α` at `[α, a, β]`,
//! - primitive `ζ^α_{ab}` at `[α, a, b]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::coeff::{Chart, Expr, ZeroVerdict};
use crate::error::SpecError;
use crate::gca::{Derivation, Generator, GeneratorSet, GradedElem, Morphism};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebroidSpec {
    base: Chart,
    rank: usize,
    anchor: Tensor,
    bracket: Tensor,
}

impl AlgebroidSpec {
    /// `anchor[α][a] = ρ^a_α`; `bracket` has shape `[r, r, r]` and must be
    /// antisymmetric in its last two slots.
    pub fn new(base: Chart, rank: usize, anchor: Tensor, bracket: Tensor) -> Result<Self, SpecError> {
        let n = base.dim();
        if anchor.shape() != [rank, n] {
            return Err(SpecError::Shape(format!(
                "anchor has shape {:?}, expected [{rank}, {n}]",
                anchor.shape()
            )));
        }
        if bracket.shape() != [rank, rank, rank] {
            return Err(SpecError::Shape(format!(
                "bracket has shape {:?}, expected [{rank}, {rank}, {rank}]",
                bracket.shape()
            )));
        }
        for al in 0..rank {
            for b in 0..rank {
                for c in b..rank {
                    if *bracket.get(&[al, b, c]) != bracket.get(&[al, c, b]).neg() {
                        return Err(SpecError::BracketNotAntisymmetric {
                            alpha: al + 1,
                            beta: b + 1,
                            gamma: c + 1,
                        });
                    }
                }
            }
        }
        Ok(AlgebroidSpec {
            base,
            rank,
            anchor,
            bracket,
        })
    }

    /// Lie algebra with structure constants over a zero-dimensional base.
    pub fn lie_algebra(rank: usize, bracket: Tensor) -> Result<Self, SpecError> {
        let base = Chart::new::<&str>("pt", &[]).expect("empty chart");
        AlgebroidSpec::new(base, rank, Tensor::zeros(&[rank, 0]), bracket)
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `ρ^a_α`.
    pub fn rho(&self, a: usize, alpha: usize) -> &Expr {
        self.anchor.get(&[alpha, a])
    }

    /// `f^α_{βγ}`.
    pub fn f(&self, alpha: usize, beta: usize, gamma: usize) -> &Expr {
        self.bracket.get(&[alpha, beta, gamma])
    }

    pub fn anchor(&self) -> &Tensor {
        &self.anchor
    }

    pub fn bracket(&self) -> &Tensor {
        &self.bracket
    }

    fn coord(&self, a: usize) -> &str {
        &self.base.coords()[a]
    }

    /// Generators `xi1..xir` of the Chevalley–Eilenberg algebra.
    pub fn ce_generators(&self) -> GeneratorSet {
        let gens = (1..=self.rank).map(|i| Generator::new(&format!("xi{i}"), 1)).collect();
        GeneratorSet::new(self.base.clone(), gens).expect("fresh generator names")
    }
}

/// `D(f) = ρ^a_α ξ^α ∂_a f`, `D(ξ^α) = −½ f^α_{βγ} ξ^β ξ^γ`.
pub fn build_ce(spec: &AlgebroidSpec) -> Derivation {
    let set = spec.ce_generators();
    let r = spec.rank();
    let coord_images = (0..spec.dim())
        .map(|a| {
            let mut e = GradedElem::zero(&set);
            for al in 0..r {
                e.add_term(alloc::vec![al as u16], spec.rho(a, al).clone());
            }
            e
        })
        .collect();
    let gen_images = (0..r)
        .map(|al| {
            let mut e = GradedElem::zero(&set);
            for b in 0..r {
                for c in (b + 1)..r {
                    e.add_term(alloc::vec![b as u16, c as u16], spec.f(al, b, c).neg());
                }
            }
            e
        })
        .collect();
    Derivation::new(&set, 1, coord_images, gen_images).expect("CE images are homogeneous")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualKind {
    /// `D²` on a coordinate: failure of the anchor to be a bracket morphism.
    AnchorMorphism,
    /// `D²` on a frame generator: the Jacobiator.
    Jacobiator,
}

#[derive(Clone, Debug)]
pub struct SymbolResidual {
    pub symbol: String,
    pub kind: ResidualKind,
    pub residual: GradedElem,
    pub verdict: ZeroVerdict,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub residuals: Vec<SymbolResidual>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.verdict.is_zero())
    }

    pub fn exact(&self) -> bool {
        self.residuals.iter().all(|r| r.verdict.is_exact())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SymbolResidual> {
        self.residuals.iter().filter(|r| !r.verdict.is_zero())
    }
}

/// Checks that the CE differential squares to zero.
pub fn validate(spec: &AlgebroidSpec) -> ValidationReport {
    let d = build_ce(spec);
    let n = spec.dim();
    let residuals = d
        .square_residuals()
        .into_iter()
        .enumerate()
        .map(|(i, (symbol, residual))| {
            let verdict = residual.zero_verdict();
            SymbolResidual {
                symbol,
                kind: if i < n {
                    ResidualKind::AnchorMorphism
                } else {
                    ResidualKind::Jacobiator
                },
                residual,
                verdict,
            }
        })
        .collect();
    ValidationReport { residuals }
}

/// A linear connection `ω^α_{aβ}` on the algebroid and a primitive `ζ^α_{ab}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjustmentData {
    omega: Tensor,
    zeta: Tensor,
}

impl AdjustmentData {
    /// `omega[α][a][β] = ω^α_{aβ}`, `zeta[α][a][b] = ζ^α_{ab}` (antisymmetric in `a, b`).
    pub fn new(spec: &AlgebroidSpec, omega: Tensor, zeta: Tensor) -> Result<Self, SpecError> {
        let (r, n) = (spec.rank(), spec.dim());
        if omega.shape() != [r, n, r] {
            return Err(SpecError::Shape(format!(
                "omega has shape {:?}, expected [{r}, {n}, {r}]",
                omega.shape()
            )));
        }
        if zeta.shape() != [r, n, n] {
            return Err(SpecError::Shape(format!(
                "zeta has shape {:?}, expected [{r}, {n}, {n}]",
                zeta.shape()
            )));
        }
        for al in 0..r {
            for a in 0..n {
                for b in a..n {
                    if *zeta.get(&[al, a, b]) != zeta.get(&[al, b, a]).neg() {
                        return Err(SpecError::ZetaNotAntisymmetric {
                            alpha: al + 1,
                            a: a + 1,
                            b: b + 1,
                        });
                    }
                }
            }
        }
        Ok(AdjustmentData { omega, zeta })
    }

    pub fn zero(spec: &AlgebroidSpec) -> Self {
        let (r, n) = (spec.rank(), spec.dim());
        AdjustmentData {
            omega: Tensor::zeros(&[r, n, r]),
            zeta: Tensor::zeros(&[r, n, n]),
        }
    }

    /// `ω^α_{aβ}`.
    pub fn omega(&self, alpha: usize, a: usize, beta: usize) -> &Expr {
        self.omega.get(&[alpha, a, beta])
    }

    /// `ζ^α_{ab}`.
    pub fn zeta(&self, alpha: usize, a: usize, b: usize) -> &Expr {
        self.zeta.get(&[alpha, a, b])
    }

    pub fn omega_tensor(&self) -> &Tensor {
        &self.omega
    }

    pub fn zeta_tensor(&self) -> &Tensor {
        &self.zeta
    }

    /// Same connection with `ζ` replaced.
    pub fn with_zeta(&self, zeta: Tensor) -> Self {
        AdjustmentData {
            omega: self.omega.clone(),
            zeta,
        }
    }

    /// Same connection with `ζ` scaled by `k`.
    pub fn scale_zeta(&self, k: &Expr) -> Self {
        self.with_zeta(self.zeta.scale(k))
    }
}

/// Curvature-type tensors of an adjustment candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedTensors {
    /// `(R_∇)^α_{abβ}` at `[α, a, b, β]`.
    pub r_nabla: Tensor,
    /// `(R^bas)^α_{βγa}` at `[α, β, γ, a]`.
    pub rbas: Tensor,
    /// `(∇^bas ζ)^α_{abβ}` at `[α, a, b, β]`.
    pub nabla_bas_zeta: Tensor,
    /// `(d^∇ ζ)^α_{abc}` at `[α, a, b, c]`.
    pub dnabla_zeta: Tensor,
    /// Coefficients `ω^α_{aβ} − ζ^α_{ab} ρ^b_β` of `∇^ζ` at `[α, a, β]`.
    pub nabla_zeta: Tensor,
}

fn sum_over(n: usize, mut f: impl FnMut(usize) -> Expr) -> Expr {
    let mut acc = Expr::zero();
    for i in 0..n {
        let t = f(i);
        if !t.is_zero() {
            acc = acc.add(&t);
        }
    }
    acc
}

/// Coordinate derivatives `∂_a` of a tensor, cached per component.
struct Partials {
    by_coord: Vec<Tensor>,
}

impl Partials {
    fn new(t: &Tensor, spec: &AlgebroidSpec) -> Self {
        let by_coord = (0..spec.dim())
            .map(|a| t.map(|e| e.diff(spec.coord(a))))
            .collect();
        Partials { by_coord }
    }

    fn get(&self, a: usize, idx: &[usize]) -> &Expr {
        self.by_coord[a].get(idx)
    }
}

pub fn r_nabla(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    let dom = Partials::new(&adj.omega, spec);
    Tensor::from_fn(&[r, n, n, r], |i| {
        let (al, a, b, be) = (i[0], i[1], i[2], i[3]);
        dom.get(a, &[al, b, be])
            .sub(dom.get(b, &[al, a, be]))
            .add(&sum_over(r, |g| {
                adj.omega(al, a, g)
                    .mul(adj.omega(g, b, be))
                    .sub(&adj.omega(al, b, g).mul(adj.omega(g, a, be)))
            }))
    })
}

pub fn basic_curvature(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    let df = Partials::new(&spec.bracket, spec);
    let drho = Partials::new(&spec.anchor, spec);
    let dom = Partials::new(&adj.omega, spec);
    let om = |al: usize, a: usize, be: usize| adj.omega(al, a, be);
    Tensor::from_fn(&[r, r, r, n], |i| {
        let (al, be, ga, a) = (i[0], i[1], i[2], i[3]);
        let mut t = df.get(a, &[al, be, ga]).clone();
        t = t.add(&sum_over(r, |d| spec.f(d, be, ga).mul(om(al, a, d))));
        // 2 ω^α_{b[β} ∂_a ρ^b_{γ]}
        t = t.add(&sum_over(n, |b| {
            om(al, b, be)
                .mul(drho.get(a, &[ga, b]))
                .sub(&om(al, b, ga).mul(drho.get(a, &[be, b])))
        }));
        // − 2 ω^α_{b[β} ω^δ_{a|γ]} ρ^b_δ
        t = t.sub(&sum_over(n, |b| {
            sum_over(r, |d| {
                om(al, b, be)
                    .mul(om(d, a, ga))
                    .sub(&om(al, b, ga).mul(om(d, a, be)))
                    .mul(spec.rho(b, d))
            })
        }));
        // + 2 (∂_b ω^α_{a[β}) ρ^b_{γ]}
        t = t.add(&sum_over(n, |b| {
            dom.get(b, &[al, a, be])
                .mul(spec.rho(b, ga))
                .sub(&dom.get(b, &[al, a, ga]).mul(spec.rho(b, be)))
        }));
        // − 2 f^α_{[β|δ} ω^δ_{a|γ]}
        t = t.sub(&sum_over(r, |d| {
            spec.f(al, be, d)
                .mul(om(d, a, ga))
                .sub(&spec.f(al, ga, d).mul(om(d, a, be)))
        }));
        t
    })
}

pub fn nabla_bas_zeta(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    let dz = Partials::new(&adj.zeta, spec);
    let drho = Partials::new(&spec.anchor, spec);
    let z = |al: usize, a: usize, b: usize| adj.zeta(al, a, b);
    Tensor::from_fn(&[r, n, n, r], |i| {
        let (al, a, b, be) = (i[0], i[1], i[2], i[3]);
        let mut t = sum_over(r, |g| spec.f(al, be, g).mul(z(g, a, b)));
        t = t.add(&sum_over(n, |c| spec.rho(c, be).mul(dz.get(c, &[al, a, b]))));
        t = t.add(&sum_over(n, |c| {
            sum_over(r, |g| adj.omega(al, c, be).mul(spec.rho(c, g)).mul(z(g, a, b)))
        }));
        // 2 ζ^α_{[a|c} (∂_{b]} ρ^c_β − ρ^c_γ ω^γ_{b]β})
        let x = |p: usize, q: usize| {
            sum_over(n, |c| {
                let inner = drho
                    .get(q, &[be, c])
                    .sub(&sum_over(r, |g| spec.rho(c, g).mul(adj.omega(g, q, be))));
                z(al, p, c).mul(&inner)
            })
        };
        t.add(&x(a, b)).sub(&x(b, a))
    })
}

pub fn dnabla_zeta(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    let dz = Partials::new(&adj.zeta, spec);
    Tensor::from_fn(&[r, n, n, n], |i| {
        let (al, a, b, c) = (i[0], i[1], i[2], i[3]);
        let cyc = [(a, b, c), (b, c, a), (c, a, b)];
        let mut t = Expr::zero();
        for (p, q, s) in cyc {
            t = t.add(dz.get(p, &[al, q, s]));
            t = t.add(&sum_over(r, |be| adj.omega(al, p, be).mul(adj.zeta(be, q, s))));
        }
        t
    })
}

pub fn nabla_zeta_coefficients(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    Tensor::from_fn(&[r, n, r], |i| {
        let (al, a, be) = (i[0], i[1], i[2]);
        adj.omega(al, a, be)
            .sub(&sum_over(n, |b| adj.zeta(al, a, b).mul(spec.rho(b, be))))
    })
}

pub fn derived_tensors(spec: &AlgebroidSpec, adj: &AdjustmentData) -> DerivedTensors {
    DerivedTensors {
        r_nabla: r_nabla(spec, adj),
        rbas: basic_curvature(spec, adj),
        nabla_bas_zeta: nabla_bas_zeta(spec, adj),
        dnabla_zeta: dnabla_zeta(spec, adj),
        nabla_zeta: nabla_zeta_coefficients(spec, adj),
    }
}

/// Which generator frame the curvature generators `ξ̄` refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeilPresentation {
    /// Curvature generators shifted by `½ ζ m̄ m̄` (the adjusted presentation).
    Shifted,
    /// Frame split by `∇` only; `ζ` is ignored.
    Pre,
}

/// The split Weil algebra of an algebroid with connection and primitive.
#[derive(Clone, Debug)]
pub struct WeilAlgebra {
    spec: AlgebroidSpec,
    adj: AdjustmentData,
    presentation: WeilPresentation,
    differential: Derivation,
}

/// Generators `xi1..xir, mbar1..mbarn, xibar1..xibarr` in this order.
pub fn weil_generators(spec: &AlgebroidSpec) -> GeneratorSet {
    let mut gens = Vec::new();
    for i in 1..=spec.rank() {
        gens.push(Generator::new(&format!("xi{i}"), 1));
    }
    for a in 1..=spec.dim() {
        gens.push(Generator::new(&format!("mbar{a}"), 1));
    }
    for i in 1..=spec.rank() {
        gens.push(Generator::new(&format!("xibar{i}"), 2));
    }
    GeneratorSet::new(spec.base().clone(), gens).expect("fresh generator names")
}

/// Index helpers for the Weil generator order.
#[derive(Clone, Copy, Debug)]
pub struct WeilIndex {
    pub rank: usize,
    pub dim: usize,
}

impl WeilIndex {
    pub fn xi(&self, al: usize) -> u16 {
        al as u16
    }
    pub fn mbar(&self, a: usize) -> u16 {
        (self.rank + a) as u16
    }
    pub fn xibar(&self, al: usize) -> u16 {
        (self.rank + self.dim + al) as u16
    }
}

impl WeilAlgebra {
    /// Builds the (shifted) Weil differential and checks that it squares to zero.
    pub fn build(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Result<Self, SpecError> {
        let w = WeilAlgebra::build_unchecked(spec, adj, WeilPresentation::Shifted);
        if let Some((sym, _)) = w.differential.square_check().into_iter().next() {
            return Err(SpecError::NotNilpotent(sym));
        }
        Ok(w)
    }

    /// Builds the differential in the requested presentation without checking nilpotency.
    pub fn build_unchecked(spec: &AlgebroidSpec, adj: &AdjustmentData, presentation: WeilPresentation) -> Self {
        let adj_used = match presentation {
            WeilPresentation::Shifted => adj.clone(),
            WeilPresentation::Pre => adj.with_zeta(Tensor::zeros(&[spec.rank(), spec.dim(), spec.dim()])),
        };
        let differential = weil_differential(spec, &adj_used);
        WeilAlgebra {
            spec: spec.clone(),
            adj: adj.clone(),
            presentation,
            differential,
        }
    }

    pub fn spec(&self) -> &AlgebroidSpec {
        &self.spec
    }

    pub fn adjustment(&self) -> &AdjustmentData {
        &self.adj
    }

    pub fn presentation(&self) -> WeilPresentation {
        self.presentation
    }

    pub fn differential(&self) -> &Derivation {
        &self.differential
    }

    pub fn generators(&self) -> &GeneratorSet {
        self.differential.set()
    }

    pub fn index(&self) -> WeilIndex {
        WeilIndex {
            rank: self.spec.rank(),
            dim: self.spec.dim(),
        }
    }

    /// Indices of the curvature generators `m̄`, `ξ̄`.
    pub fn curvature_generators(&self) -> Vec<u16> {
        let ix = self.index();
        (0..self.spec.dim())
            .map(|a| ix.mbar(a))
            .chain((0..self.spec.rank()).map(|al| ix.xibar(al)))
            .collect()
    }

    /// The projection to the CE algebra killing `m̄` and `ξ̄`.
    pub fn projection_to_ce(&self) -> Morphism {
        let ce = self.spec.ce_generators();
        let r = self.spec.rank();
        let gen_images = (0..self.generators().len())
            .map(|g| {
                if g < r {
                    GradedElem::generator(&ce, g)
                } else {
                    GradedElem::zero(&ce)
                }
            })
            .collect();
        Morphism {
            target: ce,
            coord_images: Default::default(),
            gen_images,
        }
    }

    /// `π(D_W s) − D_CE(π s)` for every coordinate and generator `s`.
    pub fn projection_residuals(&self) -> Vec<(String, GradedElem)> {
        let pi = self.projection_to_ce();
        let ce = build_ce(&self.spec);
        let d = &self.differential;
        let mut out = Vec::new();
        for (a, c) in self.spec.base().coords().iter().enumerate() {
            let lhs = pi.apply(d.coord_image(a));
            let rhs = ce.coord_image(a).clone();
            out.push((String::from(&**c), lhs.sub(&rhs)));
        }
        for (g, gen) in self.generators().gens().iter().enumerate() {
            let lhs = pi.apply(d.gen_image(g));
            let img_g = pi.apply(&GradedElem::generator(self.generators(), g));
            let rhs = ce.apply(&img_g);
            out.push((gen.name.clone(), lhs.sub(&rhs)));
        }
        out
    }
}

/// The four displayed lines of the Weil differential with bound indices renamed.
fn weil_differential(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Derivation {
    let set = weil_generators(spec);
    let (r, n) = (spec.rank(), spec.dim());
    let ix = WeilIndex { rank: r, dim: n };
    let t = derived_tensors(spec, adj);
    let half = Expr::frac(1, 2);
    let sixth = Expr::frac(1, 6);
    let drho = Partials::new(&spec.anchor, spec);
    let om = |al: usize, a: usize, be: usize| adj.omega(al, a, be);
    let z = |al: usize, a: usize, b: usize| adj.zeta(al, a, b);

    // D(m^a) = ρ^a_α ξ^α + m̄^a
    let coord_images: Vec<GradedElem> = (0..n)
        .map(|a| {
            let mut e = GradedElem::zero(&set);
            for al in 0..r {
                e.add_word(&[ix.xi(al)], spec.rho(a, al).clone());
            }
            e.add_word(&[ix.mbar(a)], Expr::one());
            e
        })
        .collect();

    let mut gen_images = Vec::with_capacity(set.len());
    // D(ξ^α) = −½ f^α_{βγ} ξ^β ξ^γ + ξ̄^α − ω^α_{aβ} m̄^a ξ^β − ½ ζ^α_{ab} m̄^a m̄^b
    for al in 0..r {
        let mut e = GradedElem::zero(&set);
        for b in 0..r {
            for c in 0..r {
                e.add_word(&[ix.xi(b), ix.xi(c)], spec.f(al, b, c).mul(&half).neg());
            }
        }
        e.add_word(&[ix.xibar(al)], Expr::one());
        for a in 0..n {
            for b in 0..r {
                e.add_word(&[ix.mbar(a), ix.xi(b)], om(al, a, b).neg());
            }
            for b in 0..n {
                e.add_word(&[ix.mbar(a), ix.mbar(b)], z(al, a, b).mul(&half).neg());
            }
        }
        gen_images.push(e);
    }
    // D(m̄^a) = −ρ^a_α ξ̄^α + ρ^a_α ω^α_{bβ} m̄^b ξ^β + ½ ρ^a_α ζ^α_{bc} m̄^b m̄^c + ∂_b ρ^a_α ξ^α m̄^b
    for a in 0..n {
        let mut e = GradedElem::zero(&set);
        for al in 0..r {
            e.add_word(&[ix.xibar(al)], spec.rho(a, al).neg());
        }
        for b in 0..n {
            for be in 0..r {
                let c = sum_over(r, |al| spec.rho(a, al).mul(om(al, b, be)));
                e.add_word(&[ix.mbar(b), ix.xi(be)], c);
            }
            for c in 0..n {
                let k = sum_over(r, |al| spec.rho(a, al).mul(z(al, b, c)));
                e.add_word(&[ix.mbar(b), ix.mbar(c)], k.mul(&half));
            }
            for al in 0..r {
                e.add_word(&[ix.xi(al), ix.mbar(b)], drho.get(b, &[al, a]).clone());
            }
        }
        gen_images.push(e);
    }
    // D(ξ̄^α) = −(f^α_{βγ} + ρ^a_γ ω^α_{aβ}) ξ^β ξ̄^γ − (ω^α_{aβ} − ζ^α_{ab} ρ^b_β) m̄^a ξ̄^β
    //          + ½ Rbas^α_{βγa} ξ^β ξ^γ m̄^a
    //          + (⅙ (d^∇ζ)^α_{abc} − ½ ζ^α_{ad} ρ^d_β ζ^β_{bc}) m̄^a m̄^b m̄^c
    //          + ½ (R_∇ + ∇^bas ζ)^α_{abβ} m̄^a m̄^b ξ^β
    for al in 0..r {
        let mut e = GradedElem::zero(&set);
        for be in 0..r {
            for ga in 0..r {
                let c = spec
                    .f(al, be, ga)
                    .add(&sum_over(n, |a| spec.rho(a, ga).mul(om(al, a, be))));
                e.add_word(&[ix.xi(be), ix.xibar(ga)], c.neg());
            }
        }
        for a in 0..n {
            for be in 0..r {
                e.add_word(&[ix.mbar(a), ix.xibar(be)], t.nabla_zeta.get(&[al, a, be]).neg());
            }
        }
        for be in 0..r {
            for ga in 0..r {
                for a in 0..n {
                    e.add_word(
                        &[ix.xi(be), ix.xi(ga), ix.mbar(a)],
                        t.rbas.get(&[al, be, ga, a]).mul(&half),
                    );
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let zrz = sum_over(n, |d| {
                        sum_over(r, |be| z(al, a, d).mul(spec.rho(d, be)).mul(z(be, b, c)))
                    });
                    let k = t.dnabla_zeta.get(&[al, a, b, c]).mul(&sixth).sub(&zrz.mul(&half));
                    e.add_word(&[ix.mbar(a), ix.mbar(b), ix.mbar(c)], k);
                }
                for be in 0..r {
                    let k = t
                        .r_nabla
                        .get(&[al, a, b, be])
                        .add(t.nabla_bas_zeta.get(&[al, a, b, be]))
                        .mul(&half);
                    e.add_word(&[ix.mbar(a), ix.mbar(b), ix.xi(be)], k);
                }
            }
        }
        gen_images.push(e);
    }
    Derivation::new(&set, 1, coord_images, gen_images).expect("Weil images are homogeneous")
}


#[cfg(test)]
mod weil_tests {
    use super::*;

    #[test]
    fn weil_nilpotent_on_action_with_connection() {
        let base = Chart::numbered("R3", "m", 3);
        let eps = |i: usize, j: usize, k: usize| ((j as i64 - i as i64) * (k as i64 - i as i64) * (k as i64 - j as i64)).signum();
        let anchor = Tensor::from_fn(&[3, 3], |i| {
            sum_over(3, |b| Expr::int(eps(i[0], i[1], b)).mul(&base.coord(b)))
        });
        let f = Tensor::from_fn(&[3, 3, 3], |i| Expr::int(eps(i[0], i[1], i[2])));
        let spec = AlgebroidSpec::new(base.clone(), 3, anchor, f).unwrap();
        assert!(validate(&spec).passed());
        let omega = Tensor::from_fn(&[3, 3, 3], |i| {
            let k = (i[0] * 9 + i[1] * 3 + i[2]) as i64;
            base.coord(i[1]).mul(&Expr::int(k % 5 - 2)).add(&Expr::int(k % 3 - 1))
        });
        let zeta = Tensor::from_fn(&[3, 3, 3], |i| {
            if i[1] == i[2] {
                return Expr::zero();
            }
            let (a, b, s) = if i[1] < i[2] { (i[1], i[2], 1) } else { (i[2], i[1], -1) };
            base.coord(i[0]).mul(&base.coord(a)).add(&Expr::int((a + 2 * b) as i64)).scale_int(s)
        });
        let adj = AdjustmentData::new(&spec, omega, zeta).unwrap();
        let w = WeilAlgebra::build_unchecked(&spec, &adj, WeilPresentation::Shifted);
        let res = w.differential().square_check();
        assert!(res.is_empty());
    }
}
