//! The three adjustment tiers and the `∇^ζ` cross-check of strictness.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::algebroid::{
    basic_curvature, dnabla_zeta, nabla_bas_zeta, nabla_zeta_coefficients, r_nabla, AdjustmentData,
    AlgebroidSpec,
};
use crate::coeff::{Expr, ZeroVerdict};
use crate::error::SpecError;
use crate::tensor::Tensor;

/// Ratio between the strictness residual computed through `∇^ζ` and the
/// condition-set normalization reported by [`check_strict`].
pub const NABLA_ZETA_FACTOR: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    None,
    Plain,
    Covariant,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Confidence {
    Exact,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `R^bas = 0`.
    Plain,
    /// `R_∇ + ∇^bas ζ = 0`.
    Covariant,
    /// `Alt(⅙ d^∇ζ − ½ ζρζ) = 0`.
    Strict,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Plain => "basic_curvature",
            Condition::Covariant => "curvature_plus_basic_zeta",
            Condition::Strict => "strict_cubic",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConditionResidual {
    pub condition: Condition,
    pub residual: Tensor,
    pub verdict: ZeroVerdict,
    /// Index of a component that does not vanish, when there is one.
    pub witness_index: Option<Vec<usize>>,
}

impl ConditionResidual {
    fn new(condition: Condition, residual: Tensor) -> Self {
        let (verdict, witness_index) = residual.zero_verdict();
        ConditionResidual {
            condition,
            residual,
            verdict,
            witness_index,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict.is_zero()
    }
}

#[derive(Clone, Debug)]
pub struct AdjustmentVerdict {
    pub tier: Tier,
    pub conditions: Vec<ConditionResidual>,
    pub confidence: Confidence,
}

impl AdjustmentVerdict {
    fn from_conditions(conditions: Vec<ConditionResidual>) -> Self {
        let mut tier = Tier::None;
        for c in &conditions {
            if !c.holds() {
                break;
            }
            tier = match c.condition {
                Condition::Plain => Tier::Plain,
                Condition::Covariant => Tier::Covariant,
                Condition::Strict => Tier::Strict,
            };
        }
        let confidence = if conditions.iter().all(|c| c.verdict.is_exact() || !c.holds()) {
            Confidence::Exact
        } else {
            Confidence::Numeric
        };
        AdjustmentVerdict {
            tier,
            conditions,
            confidence,
        }
    }

    pub fn condition(&self, c: Condition) -> Option<&ConditionResidual> {
        self.conditions.iter().find(|r| r.condition == c)
    }

    pub fn is_plain(&self) -> bool {
        self.tier >= Tier::Plain
    }

    pub fn is_covariant(&self) -> bool {
        self.tier >= Tier::Covariant
    }

    pub fn is_strict(&self) -> bool {
        self.tier >= Tier::Strict
    }
}

pub fn plain_residual(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    basic_curvature(spec, adj)
}

pub fn covariant_residual(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    r_nabla(spec, adj).add(&nabla_bas_zeta(spec, adj))
}

/// `(ζρζ)^α_{abc} = ζ^α_{ad} ρ^d_β ζ^β_{bc}` (not antisymmetrized).
fn zeta_rho_zeta(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let (r, n) = (spec.rank(), spec.dim());
    Tensor::from_fn(&[r, n, n, n], |i| {
        let (al, a, b, c) = (i[0], i[1], i[2], i[3]);
        let mut acc = Expr::zero();
        for d in 0..n {
            for be in 0..r {
                let t = adj.zeta(al, a, d).mul(spec.rho(d, be)).mul(adj.zeta(be, b, c));
                acc = acc.add(&t);
            }
        }
        acc
    })
}

fn antisymmetrize3(t: &Tensor) -> Tensor {
    const PERMS: [([usize; 3], i64); 6] = [
        ([0, 1, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([1, 0, 2], -1),
        ([0, 2, 1], -1),
        ([2, 1, 0], -1),
    ];
    let sixth = Expr::frac(1, 6);
    Tensor::from_fn(t.shape(), |i| {
        let abc = [i[1], i[2], i[3]];
        let mut acc = Expr::zero();
        for (p, s) in PERMS {
            acc = acc.add(&t.get(&[i[0], abc[p[0]], abc[p[1]], abc[p[2]]]).scale_int(s));
        }
        acc.mul(&sixth)
    })
}

/// Strictness residual in the normalization of the cubic `m̄m̄m̄` coefficient of
/// the Weil differential: `Alt_{abc}(⅙ (d^∇ζ)^α_{abc} − ½ ζ^α_{ad} ρ^d_β ζ^β_{bc})`.
pub fn strict_residual(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let d = dnabla_zeta(spec, adj);
    let zrz = zeta_rho_zeta(spec, adj);
    let raw = d.scale(&Expr::frac(1, 6)).sub(&zrz.scale(&Expr::frac(1, 2)));
    antisymmetrize3(&raw)
}

/// Strictness residual in the normalization `(d^∇ζ) − 3 ζρζ`, fully antisymmetrized.
pub fn strict_residual_definition(spec: &AlgebroidSpec, adj: &AdjustmentData) -> Tensor {
    let d = dnabla_zeta(spec, adj);
    let zrz = zeta_rho_zeta(spec, adj);
    antisymmetrize3(&d.sub(&zrz.scale(&Expr::int(3))))
}

pub fn check_plain(spec: &AlgebroidSpec, adj: &AdjustmentData) -> AdjustmentVerdict {
    AdjustmentVerdict::from_conditions(alloc::vec![ConditionResidual::new(
        Condition::Plain,
        plain_residual(spec, adj)
    )])
}

pub fn check_covariant(spec: &AlgebroidSpec, adj: &AdjustmentData) -> AdjustmentVerdict {
    AdjustmentVerdict::from_conditions(alloc::vec![
        ConditionResidual::new(Condition::Plain, plain_residual(spec, adj)),
        ConditionResidual::new(Condition::Covariant, covariant_residual(spec, adj)),
    ])
}

pub fn check_strict(spec: &AlgebroidSpec, adj: &AdjustmentData) -> AdjustmentVerdict {
    let strict = strict_residual(spec, adj);
    let definition = strict_residual_definition(spec, adj);
    assert_eq!(
        strict.scale(&Expr::int(NABLA_ZETA_FACTOR)),
        definition,
        "the two normalizations of the strictness condition must agree up to 6"
    );
    AdjustmentVerdict::from_conditions(alloc::vec![
        ConditionResidual::new(Condition::Plain, plain_residual(spec, adj)),
        ConditionResidual::new(Condition::Covariant, covariant_residual(spec, adj)),
        ConditionResidual::new(Condition::Strict, strict),
    ])
}

/// Runs all three tiers.
pub fn classify(spec: &AlgebroidSpec, adj: &AdjustmentData) -> AdjustmentVerdict {
    check_strict(spec, adj)
}

#[derive(Clone, Debug)]
pub struct CrosscheckReport {
    /// `d^{∇^ζ} ζ`, computed by treating `∇^ζ` as the connection.
    pub nabla_zeta_residual: Tensor,
    /// [`strict_residual`] for comparison.
    pub strict_residual: Tensor,
    /// Whether `nabla_zeta_residual == NABLA_ZETA_FACTOR · strict_residual` exactly.
    pub proportional: bool,
}

pub fn nabla_zeta_crosscheck(spec: &AlgebroidSpec, adj: &AdjustmentData) -> CrosscheckReport {
    let omega_zeta = nabla_zeta_coefficients(spec, adj);
    let shifted = AdjustmentData::new(spec, omega_zeta, adj.zeta_tensor().clone())
        .expect("zeta already validated");
    let nz = dnabla_zeta(spec, &shifted);
    let strict = strict_residual(spec, adj);
    let proportional = strict.scale(&Expr::int(NABLA_ZETA_FACTOR)) == nz;
    CrosscheckReport {
        nabla_zeta_residual: nz,
        strict_residual: strict,
        proportional,
    }
}

/// Pullback of an adjustment of `g` (over `M`) to an action algebroid `k`
/// over `N` along `ψ: N → M`, given by its components `ψ^a` in the coordinates
/// of `N`: `ω_k^α_{iβ} = ∂_iψ^a ω^α_{aβ}∘ψ` and `ζ_k = ψ^*ζ` as a 2-form.
pub fn pullback_adjustment(
    g: &AlgebroidSpec,
    adj: &AdjustmentData,
    k: &AlgebroidSpec,
    psi: &[Expr],
) -> Result<AdjustmentData, SpecError> {
    let (r, m, n) = (g.rank(), g.dim(), k.dim());
    if k.rank() != r {
        return Err(SpecError::Shape(format!("ranks differ: {} vs {}", r, k.rank())));
    }
    if psi.len() != m {
        return Err(SpecError::Shape(format!("ψ has {} components, the base has dimension {m}", psi.len())));
    }
    let images: BTreeMap<Arc<str>, Expr> = g.base().coords().iter().cloned().zip(psi.iter().cloned()).collect();
    let jac: Vec<Vec<Expr>> = psi
        .iter()
        .map(|p| k.base().coords().iter().map(|c| p.diff(c)).collect())
        .collect();
    let omega_psi = adj.omega_tensor().map(|e| e.substitute_coords(&images));
    let zeta_psi = adj.zeta_tensor().map(|e| e.substitute_coords(&images));
    let omega = Tensor::from_fn(&[r, n, r], |i| {
        let mut acc = Expr::zero();
        for a in 0..m {
            acc = acc.add(&jac[a][i[1]].mul(omega_psi.get(&[i[0], a, i[2]])));
        }
        acc
    });
    let zeta = Tensor::from_fn(&[r, n, n], |i| {
        let mut acc = Expr::zero();
        for a in 0..m {
            for b in 0..m {
                let z = zeta_psi.get(&[i[0], a, b]);
                if !z.is_zero() {
                    acc = acc.add(&jac[a][i[1]].mul(&jac[b][i[2]]).mul(z));
                }
            }
        }
        acc
    });
    AdjustmentData::new(k, omega, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Chart;

    #[test]
    fn lie_algebra_over_point_is_vacuously_strict() {
        let f = Tensor::zeros(&[2, 2, 2]);
        let spec = AlgebroidSpec::lie_algebra(2, f).unwrap();
        let v = classify(&spec, &AdjustmentData::zero(&spec));
        assert_eq!(v.tier, Tier::Strict);
        assert_eq!(v.confidence, Confidence::Exact);
    }

    #[test]
    fn nonplain_tangent_connection() {
        let base = Chart::numbered("R2", "m", 2);
        let anchor = Tensor::from_fn(&[2, 2], |i| Expr::int((i[0] == i[1]) as i64));
        let spec = AlgebroidSpec::new(base.clone(), 2, anchor, Tensor::zeros(&[2, 2, 2])).unwrap();
        let mut omega = Tensor::zeros(&[2, 2, 2]);
        omega.set(&[0, 1, 0], base.coord(1));
        let adj = AdjustmentData::new(&spec, omega, Tensor::zeros(&[2, 2, 2])).unwrap();
        let v = check_plain(&spec, &adj);
        assert_eq!(v.tier, Tier::None);
        assert!(v.conditions[0].witness_index.is_some());
    }
}
