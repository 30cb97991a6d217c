//! Čech cocycles of principal bundles with structure groupoid a matrix group
//! `BG` or a linear action groupoid `R^k ⋊ G`, together with their
//! connection data, audited at sampled points of a finite cover.
//!
//! Conventions: on an overlap `U_i ∩ U_j` the transition `g_ij` is written in
//! the coordinates of `U_i`, and
//! `g_ik = g_ij g_jk`, `A_j = g_ij⁻¹ A_i g_ij + g_ij⁻¹ d g_ij`,
//! `F_j = g_ij⁻¹ F_i g_ij`, and for a Higgs field `m_j = m_i ◁ g_ij = g_ij⁻¹ m_i`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebroid::{AdjustmentData, AlgebroidSpec};
use crate::coeff::{is_zero, Chart, Expr, NumericPoint};
use crate::error::CocycleError;
use crate::gauge::{curvature_components, Connection, Patch};
use crate::tensor::Tensor;

/// Axis-aligned box in the coordinates of a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Region { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| if h > l { rng.gen_range(l..h) } else { l })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct CoverPatch {
    pub name: String,
    pub chart: Chart,
    /// Where the patch's data may be sampled.
    pub domain: Region,
    /// The piece of a partition of the base assigned to this patch, for integration.
    pub integration: Option<Region>,
}

/// `U_i ∩ U_j`, sampled in the coordinates of `U_i`.
#[derive(Clone, Debug)]
pub struct Overlap {
    pub i: usize,
    pub j: usize,
    pub region: Region,
    /// Coordinates of `U_j` as functions of those of `U_i`.
    pub to_j: Vec<Expr>,
}

/// `U_i ∩ U_j ∩ U_k`, sampled in the coordinates of `U_i`.
#[derive(Clone, Debug)]
pub struct TripleOverlap {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub region: Region,
    pub to_j: Vec<Expr>,
    pub to_k: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct CoverSpec {
    pub name: String,
    pub patches: Vec<CoverPatch>,
    pub overlaps: Vec<Overlap>,
    pub triples: Vec<TripleOverlap>,
}

impl CoverSpec {
    fn overlap(&self, i: usize, j: usize) -> Option<&Overlap> {
        self.overlaps.iter().find(|o| o.i == i && o.j == j)
    }
}

/// Square matrix of coefficient expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    size: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(size: usize, entries: Vec<Expr>) -> Result<Self, CocycleError> {
        if entries.len() != size * size {
            return Err(CocycleError::Dimension(format!(
                "{} entries for a {size}×{size} matrix",
                entries.len()
            )));
        }
        Ok(ExprMatrix { size, entries })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut entries = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                entries.push(f(r, c));
            }
        }
        ExprMatrix { size, entries }
    }

    pub fn identity(size: usize) -> Self {
        ExprMatrix::from_fn(size, |r, c| if r == c { Expr::one() } else { Expr::zero() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.entries[r * self.size + c]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn mul(&self, other: &ExprMatrix) -> ExprMatrix {
        ExprMatrix::from_fn(self.size, |r, c| {
            let mut acc = Expr::zero();
            for k in 0..self.size {
                acc = acc.add(&self.get(r, k).mul(other.get(k, c)));
            }
            acc
        })
    }

    pub fn add(&self, other: &ExprMatrix) -> ExprMatrix {
        ExprMatrix::from_fn(self.size, |r, c| self.get(r, c).add(other.get(r, c)))
    }

    pub fn scale(&self, k: &Expr) -> ExprMatrix {
        ExprMatrix::from_fn(self.size, |r, c| self.get(r, c).mul(k))
    }

    pub fn diff(&self, coord: &str) -> ExprMatrix {
        ExprMatrix::from_fn(self.size, |r, c| self.get(r, c).diff(coord))
    }

    pub fn substitute_coords(&self, images: &BTreeMap<Arc<str>, Expr>) -> ExprMatrix {
        ExprMatrix::from_fn(self.size, |r, c| self.get(r, c).substitute_coords(images))
    }

    pub fn eval(&self, p: &NumericPoint) -> Result<Matrix, CocycleError> {
        let data = self
            .entries
            .iter()
            .map(|e| e.eval(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix { size: self.size, data })
    }
}

/// Square matrix of floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    size: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(size: usize) -> Self {
        let mut data = alloc::vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Matrix { size, data }
    }

    pub fn zeros(size: usize) -> Self {
        Matrix {
            size,
            data: alloc::vec![0.0; size * size],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.size + c]
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        let n = self.size;
        let mut out = Matrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.get(r, k) * o.get(k, c);
                }
                out.data[r * n + c] = acc;
            }
        }
        out
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        Matrix {
            size: self.size,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        Matrix {
            size: self.size,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix {
            size: self.size,
            data: self.data.iter().map(|a| a * k).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|r| (0..self.size).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.size;
        let mut a = self.data.clone();
        let mut inv = Matrix::identity(n).data;
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
            if a[piv * n + col].abs() < 1e-300 {
                return None;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    inv.swap(piv * n + k, col * n + k);
                }
            }
            let p = a[col * n + col];
            for k in 0..n {
                a[col * n + k] /= p;
                inv[col * n + k] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[r * n + col];
                    if f != 0.0 {
                        for k in 0..n {
                            a[r * n + k] -= f * a[col * n + k];
                            inv[r * n + k] -= f * inv[col * n + k];
                        }
                    }
                }
            }
        }
        Some(Matrix { size: n, data: inv })
    }
}

/// A matrix Lie algebra given by a basis `t_α`, with exact structure constants
/// `[t_β, t_γ] = f^α_{βγ} t_α`.
#[derive(Clone, Debug)]
pub struct MatrixAlgebra {
    size: usize,
    basis: Vec<ExprMatrix>,
    /// Left inverse of the basis: `coefficients = projector · vec(M)`.
    projector: Vec<Vec<Expr>>,
    spec: AlgebroidSpec,
}

fn invert_exact(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>, CocycleError> {
    let n = m.len();
    let mut a: Vec<Vec<Expr>> = m.to_vec();
    let mut inv: Vec<Vec<Expr>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { Expr::one() } else { Expr::zero() }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| CocycleError::Dimension("basis matrices are linearly dependent".into()))?;
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].recip()?;
        for k in 0..n {
            a[col][k] = a[col][k].mul(&p);
            inv[col][k] = inv[col][k].mul(&p);
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in 0..n {
                    a[r][k] = a[r][k].sub(&f.mul(&a[col][k]));
                    inv[r][k] = inv[r][k].sub(&f.mul(&inv[col][k]));
                }
            }
        }
    }
    Ok(inv)
}

impl MatrixAlgebra {
    pub fn new(size: usize, basis: Vec<ExprMatrix>) -> Result<Self, CocycleError> {
        let r = basis.len();
        if r == 0 || basis.iter().any(|b| b.size != size || b.entries.iter().any(|e| e.constant_value().is_none())) {
            return Err(CocycleError::Dimension("basis must consist of constant matrices of one size".into()));
        }
        let gram: Vec<Vec<Expr>> = (0..r)
            .map(|a| {
                (0..r)
                    .map(|b| {
                        let mut acc = Expr::zero();
                        for (x, y) in basis[a].entries.iter().zip(&basis[b].entries) {
                            acc = acc.add(&x.mul(y));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let ginv = invert_exact(&gram)?;
        let projector: Vec<Vec<Expr>> = (0..r)
            .map(|a| {
                (0..size * size)
                    .map(|k| {
                        let mut acc = Expr::zero();
                        for b in 0..r {
                            acc = acc.add(&ginv[a][b].mul(&basis[b].entries[k]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut alg = MatrixAlgebra {
            size,
            basis,
            projector,
            spec: AlgebroidSpec::lie_algebra(r, Tensor::zeros(&[r, r, r])).expect("zero bracket"),
        };
        let mut f = Tensor::zeros(&[r, r, r]);
        for be in 0..r {
            for ga in 0..r {
                let comm = alg.basis[be]
                    .mul(&alg.basis[ga])
                    .add(&alg.basis[ga].mul(&alg.basis[be]).scale(&Expr::int(-1)));
                let c = alg.decompose(&comm).ok_or_else(|| {
                    CocycleError::Dimension(format!("[t{}, t{}] leaves the span of the basis", be + 1, ga + 1))
                })?;
                for (al, x) in c.into_iter().enumerate() {
                    f.set(&[al, be, ga], x);
                }
            }
        }
        alg.spec = AlgebroidSpec::lie_algebra(r, f).map_err(|e| CocycleError::Dimension(e.to_string()))?;
        Ok(alg)
    }

    /// `so(2) ≅ u(1)` with generator `J = [[0, −1], [1, 0]]` standing for `i`.
    pub fn so2() -> Self {
        let j = ExprMatrix::new(2, alloc::vec![Expr::zero(), Expr::int(-1), Expr::one(), Expr::zero()]).expect("2×2");
        MatrixAlgebra::new(2, alloc::vec![j]).expect("so(2)")
    }

    /// `so(3)` with `(t_α)_{bc} = −ε_{αbc}`.
    pub fn so3() -> Self {
        let eps = |a: usize, b: usize, c: usize| -> i64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
                _ => 0,
            }
        };
        let basis = (0..3)
            .map(|al| ExprMatrix::from_fn(3, |b, c| Expr::int(-eps(al, b, c))))
            .collect();
        MatrixAlgebra::new(3, basis).expect("so(3)")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ExprMatrix] {
        &self.basis
    }

    /// The Lie algebra as an algebroid over a point.
    pub fn spec(&self) -> &AlgebroidSpec {
        &self.spec
    }

    /// Coefficients of `m` in the basis, if `m` lies in the span.
    pub fn decompose(&self, m: &ExprMatrix) -> Option<Vec<Expr>> {
        let c: Vec<Expr> = self
            .projector
            .iter()
            .map(|row| {
                let mut acc = Expr::zero();
                for (p, x) in row.iter().zip(&m.entries) {
                    if !p.is_zero() {
                        acc = acc.add(&p.mul(x));
                    }
                }
                acc
            })
            .collect();
        let diff = self.combine(&c).add(&m.scale(&Expr::int(-1)));
        diff.entries
            .iter()
            .all(|e| is_zero(e).map(|v| v.is_zero()).unwrap_or(false))
            .then_some(c)
    }

    /// `Σ c^α t_α`.
    pub fn combine(&self, c: &[Expr]) -> ExprMatrix {
        let mut out = ExprMatrix::from_fn(self.size, |_, _| Expr::zero());
        for (ca, t) in c.iter().zip(&self.basis) {
            out = out.add(&t.scale(ca));
        }
        out
    }

    fn combine_numeric(&self, c: &[f64]) -> Result<Matrix, CocycleError> {
        let mut out = Matrix::zeros(self.size);
        let p = NumericPoint::new();
        for (ca, t) in c.iter().zip(&self.basis) {
            out = out.add(&t.eval(&p)?.scale(*ca));
        }
        Ok(out)
    }

    /// Action algebroid of the right action `n ◁ g = g⁻¹ n` on `R^size`:
    /// `ρ^a_α = −(t_α)^a_b n^b`.
    pub fn action_algebroid(&self, base: Chart) -> Result<AlgebroidSpec, CocycleError> {
        if base.dim() != self.size {
            return Err(CocycleError::Dimension("Higgs target dimension differs from matrix size".into()));
        }
        let r = self.rank();
        let anchor = Tensor::from_fn(&[r, self.size], |i| {
            let mut acc = Expr::zero();
            for b in 0..self.size {
                acc = acc.sub(&self.basis[i[0]].get(i[1], b).mul(&base.coord(b)));
            }
            acc
        });
        AlgebroidSpec::new(base, r, anchor, self.spec.bracket().clone()).map_err(|e| CocycleError::Dimension(e.to_string()))
    }
}

/// Connection data on one patch: components `A^α_μ` in the patch coordinates
/// and, for action groupoids, the Higgs field.
#[derive(Clone, Debug)]
pub struct PatchConnection {
    pub a: Vec<Vec<Expr>>,
    pub higgs: Option<Vec<Expr>>,
}

#[derive(Clone, Debug)]
pub struct TransitionData {
    pub algebra: MatrixAlgebra,
    /// `g_ij` in the coordinates of `U_i`; `g_ii` defaults to the identity.
    pub g: BTreeMap<(usize, usize), ExprMatrix>,
    pub connections: Vec<PatchConnection>,
}

impl TransitionData {
    fn transition(&self, i: usize, j: usize) -> Option<ExprMatrix> {
        match self.g.get(&(i, j)) {
            Some(m) => Some(m.clone()),
            None if i == j => Some(ExprMatrix::identity(self.algebra.size)),
            None => None,
        }
    }

    /// The same data with the Higgs fields removed.
    pub fn forget_higgs(&self) -> TransitionData {
        let mut out = self.clone();
        for c in &mut out.connections {
            c.higgs = None;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleOptions {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            samples: 1000,
            seed: 0x5eed,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckSummary {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    /// Sample point with the largest residual.
    pub witness: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CocycleReport {
    pub checks: Vec<CheckSummary>,
    pub tolerance: f64,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_residual < self.tolerance)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.max_residual))
    }

    pub fn worst(&self) -> Option<&CheckSummary> {
        self.checks.iter().max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
    }
}

fn point_on(chart: &Chart, x: &[f64]) -> NumericPoint {
    let mut p = NumericPoint::new();
    for (c, v) in chart.coords().iter().zip(x) {
        p.set_coord(c, *v);
    }
    p
}

fn eval_all(es: &[Expr], p: &NumericPoint) -> Result<Vec<f64>, CocycleError> {
    es.iter().map(|e| e.eval(p).map_err(CocycleError::from)).collect()
}

/// Runs `residual` at seeded sample points of `region`, resampling on
/// evaluation failures.
fn sampled(
    name: String,
    chart: &Chart,
    region: &Region,
    opts: &SampleOptions,
    mut residual: impl FnMut(&[f64]) -> Result<f64, CocycleError>,
) -> Result<CheckSummary, CocycleError> {
    if region.dim() != chart.dim() {
        return Err(CocycleError::Dimension(format!("region of {name} does not match its chart")));
    }
    let salt = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
    let (mut good, mut attempts) = (0usize, 0usize);
    let mut best = (-1.0f64, Vec::new());
    while good < opts.samples {
        if attempts >= 10 * opts.samples.max(1) {
            return Err(CocycleError::Sampling(name));
        }
        attempts += 1;
        let x = region.sample(&mut rng);
        match residual(&x) {
            Ok(v) if v.is_finite() => {
                good += 1;
                if v > best.0 {
                    best = (v, x);
                }
            }
            _ => continue,
        }
    }
    let witness = chart.coords().iter().map(|c| c.to_string()).zip(best.1).collect();
    Ok(CheckSummary {
        name,
        samples: good,
        max_residual: best.0.max(0.0),
        witness,
    })
}

fn coord_map(target: &Chart, images: &[Expr]) -> BTreeMap<Arc<str>, Expr> {
    target.coords().iter().cloned().zip(images.iter().cloned()).collect()
}

/// Cocycle identities and Higgs compatibility at sampled points.
pub fn verify_cocycle(cover: &CoverSpec, data: &TransitionData, opts: &SampleOptions) -> Result<CocycleReport, CocycleError> {
    check_shapes(cover, data)?;
    let size = data.algebra.size;
    let mut checks = Vec::new();
    for (i, patch) in cover.patches.iter().enumerate() {
        if let Some(gii) = data.g.get(&(i, i)) {
            checks.push(sampled(format!("identity({})", patch.name), &patch.chart, &patch.domain, opts, |x| {
                let p = point_on(&patch.chart, x);
                Ok(gii.eval(&p)?.sub(&Matrix::identity(size)).max_abs())
            })?);
        }
    }
    for ov in &cover.overlaps {
        let (pi, pj) = (&cover.patches[ov.i], &cover.patches[ov.j]);
        let gij = data
            .transition(ov.i, ov.j)
            .ok_or_else(|| CocycleError::Dimension(format!("missing g_{}{}", pi.name, pj.name)))?;
        if let Some(gji) = data.transition(ov.j, ov.i) {
            checks.push(sampled(format!("inverse({},{})", pi.name, pj.name), &pi.chart, &ov.region, opts, |x| {
                let p = point_on(&pi.chart, x);
                let xj = eval_all(&ov.to_j, &p)?;
                let prod = gij.eval(&p)?.mul(&gji.eval(&point_on(&pj.chart, &xj))?);
                Ok(prod.sub(&Matrix::identity(size)).max_abs())
            })?);
        }
        if let (Some(mi), Some(mj)) = (&data.connections[ov.i].higgs, &data.connections[ov.j].higgs) {
            checks.push(sampled(format!("higgs({},{})", pi.name, pj.name), &pi.chart, &ov.region, opts, |x| {
                let p = point_on(&pi.chart, x);
                let pj_pt = point_on(&pj.chart, &eval_all(&ov.to_j, &p)?);
                let g = gij.eval(&p)?;
                let ginv = g.inverse().ok_or(CocycleError::Sampling("singular transition".into()))?;
                let expect = ginv.apply(&eval_all(mi, &p)?);
                let got = eval_all(mj, &pj_pt)?;
                Ok(expect.iter().zip(&got).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
            })?);
        }
    }
    for t in &cover.triples {
        let (pi, pj, pk) = (&cover.patches[t.i], &cover.patches[t.j], &cover.patches[t.k]);
        let missing = |a: usize, b: usize| CocycleError::Dimension(format!("missing g_{}{}", cover.patches[a].name, cover.patches[b].name));
        let gij = data.transition(t.i, t.j).ok_or_else(|| missing(t.i, t.j))?;
        let gjk = data.transition(t.j, t.k).ok_or_else(|| missing(t.j, t.k))?;
        let gik = data.transition(t.i, t.k).ok_or_else(|| missing(t.i, t.k))?;
        checks.push(sampled(
            format!("triple({},{},{})", pi.name, pj.name, pk.name),
            &pi.chart,
            &t.region,
            opts,
            |x| {
                let p = point_on(&pi.chart, x);
                let xj = point_on(&pj.chart, &eval_all(&t.to_j, &p)?);
                let lhs = gik.eval(&p)?;
                let rhs = gij.eval(&p)?.mul(&gjk.eval(&xj)?);
                let _ = pk;
                Ok(lhs.sub(&rhs).max_abs())
            },
        )?);
    }
    Ok(CocycleReport {
        checks,
        tolerance: opts.tolerance,
    })
}

fn check_shapes(cover: &CoverSpec, data: &TransitionData) -> Result<(), CocycleError> {
    if data.connections.len() != cover.patches.len() {
        return Err(CocycleError::Dimension(format!(
            "{} patches but {} connection blocks",
            cover.patches.len(),
            data.connections.len()
        )));
    }
    for ((i, j), g) in &data.g {
        if *i >= cover.patches.len() || *j >= cover.patches.len() || g.size != data.algebra.size {
            return Err(CocycleError::Dimension(format!("transition ({i},{j}) does not fit the cover")));
        }
    }
    for (patch, conn) in cover.patches.iter().zip(&data.connections) {
        if conn.a.len() != data.algebra.rank() || conn.a.iter().any(|c| c.len() != patch.chart.dim()) {
            return Err(CocycleError::Dimension(format!("connection on {} has the wrong shape", patch.name)));
        }
        if let Some(m) = &conn.higgs {
            if m.len() != data.algebra.size {
                return Err(CocycleError::Dimension(format!("Higgs field on {} has the wrong length", patch.name)));
            }
        }
    }
    Ok(())
}

/// Curvature data of one patch as coefficient expressions in its coordinates.
struct PatchCurvature {
    /// `E^a_μ` (empty without a Higgs field).
    e: Vec<Vec<Expr>>,
    /// `F^α_{μν}` for `μ < ν`, keyed by `(μ, ν)`.
    f: Vec<BTreeMap<(usize, usize), Expr>>,
}

fn patch_curvature(patch: &CoverPatch, conn: &PatchConnection, algebra: &MatrixAlgebra) -> Result<PatchCurvature, CocycleError> {
    let gp = Patch::on_chart(patch.chart.clone());
    let d = patch.chart.dim();
    let a: Vec<_> = conn.a.iter().map(|comps| gp.one_form(comps)).collect();
    let (spec, phi) = match &conn.higgs {
        Some(m) => (
            algebra.action_algebroid(Chart::numbered("N", "n", algebra.size))?,
            m.clone(),
        ),
        None => (algebra.spec.clone(), Vec::new()),
    };
    let adj = AdjustmentData::zero(&spec);
    let curv = curvature_components(&spec, &adj, &gp, &Connection { phi, a });
    let e = curv
        .e
        .iter()
        .map(|x| (0..d).map(|mu| gp.component1(x, mu)).collect())
        .collect();
    let f = curv
        .f
        .iter()
        .map(|x| {
            let mut m = BTreeMap::new();
            for mu in 0..d {
                for nu in (mu + 1)..d {
                    m.insert((mu, nu), gp.component2(x, mu, nu));
                }
            }
            m
        })
        .collect();
    Ok(PatchCurvature { e, f })
}

/// Gluing of connections, curvatures and (for action groupoids) covariant
/// derivatives of the Higgs field across every overlap.
pub fn glue_check(cover: &CoverSpec, data: &TransitionData, opts: &SampleOptions) -> Result<CocycleReport, CocycleError> {
    check_shapes(cover, data)?;
    let alg = &data.algebra;
    let curvatures = cover
        .patches
        .iter()
        .zip(&data.connections)
        .map(|(p, c)| patch_curvature(p, c, alg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut checks = Vec::new();
    for ov in &cover.overlaps {
        let (pi, pj) = (&cover.patches[ov.i], &cover.patches[ov.j]);
        let di = pi.chart.dim();
        let dj = pj.chart.dim();
        if ov.to_j.len() != dj {
            return Err(CocycleError::Dimension(format!("overlap map into {} has the wrong length", pj.name)));
        }
        let gij = data
            .transition(ov.i, ov.j)
            .ok_or_else(|| CocycleError::Dimension(format!("missing g_{}{}", pi.name, pj.name)))?;
        let dg: Vec<ExprMatrix> = pi.chart.coords().iter().map(|c| gij.diff(c)).collect();
        // jac[ν][μ] = ∂ x_j^ν / ∂ x_i^μ
        let jac: Vec<Vec<Expr>> = ov
            .to_j
            .iter()
            .map(|y| pi.chart.coords().iter().map(|c| y.diff(c)).collect())
            .collect();
        let (ci, cj) = (&data.connections[ov.i], &data.connections[ov.j]);
        let (ki, kj) = (&curvatures[ov.i], &curvatures[ov.j]);
        let eval_jac = |p: &NumericPoint| -> Result<Vec<Vec<f64>>, CocycleError> {
            jac.iter().map(|row| eval_all(row, p)).collect()
        };
        type Frame = (Matrix, Matrix, NumericPoint, Vec<Vec<f64>>);
        let frame = |p: &NumericPoint| -> Result<Frame, CocycleError> {
            let g = gij.eval(p)?;
            let ginv = g.inverse().ok_or(CocycleError::Sampling("singular transition".into()))?;
            let xj = point_on(&pj.chart, &eval_all(&ov.to_j, p)?);
            Ok((g, ginv, xj, eval_jac(p)?))
        };
        checks.push(sampled(format!("connection({},{})", pi.name, pj.name), &pi.chart, &ov.region, opts, |x| {
            let p = point_on(&pi.chart, x);
            let (g, ginv, pjp, jv) = frame(&p)?;
            let mut worst = 0.0f64;
            for mu in 0..di {
                let ai: Vec<f64> = ci.a.iter().map(|c| c[mu].eval(&p)).collect::<Result<_, _>>()?;
                let lhs = ginv.mul(&alg.combine_numeric(&ai)?).mul(&g).add(&ginv.mul(&dg[mu].eval(&p)?));
                let mut aj = alloc::vec![0.0; alg.rank()];
                for (al, comps) in cj.a.iter().enumerate() {
                    for nu in 0..dj {
                        aj[al] += comps[nu].eval(&pjp)? * jv[nu][mu];
                    }
                }
                worst = worst.max(lhs.sub(&alg.combine_numeric(&aj)?).max_abs());
            }
            Ok(worst)
        })?);
        checks.push(sampled(format!("curvature({},{})", pi.name, pj.name), &pi.chart, &ov.region, opts, |x| {
            let p = point_on(&pi.chart, x);
            let (g, ginv, pjp, jv) = frame(&p)?;
            let mut worst = 0.0f64;
            for mu in 0..di {
                for nu in (mu + 1)..di {
                    let fi: Vec<f64> = ki.f.iter().map(|m| m[&(mu, nu)].eval(&p)).collect::<Result<_, _>>()?;
                    let lhs = ginv.mul(&alg.combine_numeric(&fi)?).mul(&g);
                    let mut fj = alloc::vec![0.0; alg.rank()];
                    for (al, m) in kj.f.iter().enumerate() {
                        for (&(r, s), comp) in m {
                            let minor = jv[r][mu] * jv[s][nu] - jv[s][mu] * jv[r][nu];
                            if minor != 0.0 {
                                fj[al] += comp.eval(&pjp)? * minor;
                            }
                        }
                    }
                    worst = worst.max(lhs.sub(&alg.combine_numeric(&fj)?).max_abs());
                }
            }
            Ok(worst)
        })?);

        if !ki.e.is_empty() && !kj.e.is_empty() {
            checks.push(sampled(
                format!("covariant_derivative({},{})", pi.name, pj.name),
                &pi.chart,
                &ov.region,
                opts,
                |x| {
                    let p = point_on(&pi.chart, x);
                    let (_, ginv, pjp, jv) = frame(&p)?;
                    let mut worst = 0.0f64;
                    for mu in 0..di {
                        let ei: Vec<f64> = ki.e.iter().map(|c| c[mu].eval(&p)).collect::<Result<_, _>>()?;
                        let lhs = ginv.apply(&ei);
                        for (a, comps) in kj.e.iter().enumerate() {
                            let mut v = 0.0;
                            for nu in 0..dj {
                                v += comps[nu].eval(&pjp)? * jv[nu][mu];
                            }
                            worst = worst.max((lhs[a] - v).abs());
                        }
                    }
                    Ok(worst)
                },
            )?);
        }
    }
    Ok(CocycleReport {
        checks,
        tolerance: opts.tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub tolerance: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tolerance: 1e-11,
            max_depth: 40,
        }
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod (7, 15) panel: `(kronrod, |kronrod − gauss|)`.
fn gk15(f: &mut dyn FnMut(f64) -> Result<f64, CocycleError>, a: f64, b: f64) -> Result<(f64, f64), CocycleError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = GK_WEIGHTS[7] * fc;
    let mut g = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x)? + f(c + x)?;
        k += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G_WEIGHTS[i / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

fn adaptive(
    f: &mut dyn FnMut(f64) -> Result<f64, CocycleError>,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, CocycleError> {
    let (v, err) = gk15(f, a, b)?;
    if err <= tol || (b - a).abs() < 1e-12 {
        return Ok(v);
    }
    if depth == 0 {
        return Err(CocycleError::Quadrature(err));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive(f, a, m, 0.5 * tol, depth - 1)? + adaptive(f, m, b, 0.5 * tol, depth - 1)?)
}

/// Adaptive Gauss–Kronrod integral over a two-dimensional box.
pub fn integrate_box(
    f: &mut dyn FnMut(f64, f64) -> Result<f64, CocycleError>,
    region: &Region,
    opts: &QuadratureOptions,
) -> Result<f64, CocycleError> {
    if region.dim() != 2 {
        return Err(CocycleError::Dimension("integration needs a two-dimensional region".into()));
    }
    let (x0, x1, y0, y1) = (region.lo[0], region.hi[0], region.lo[1], region.hi[1]);
    let inner_tol = opts.tolerance / (x1 - x0).abs().max(1.0);
    let mut outer = |x: f64| adaptive(&mut |y| f(x, y), y0, y1, inner_tol, opts.max_depth);
    adaptive(&mut outer, x0, x1, opts.tolerance, opts.max_depth)
}

/// First Chern number `(i/2π) ∫ F` of a `U(1) ≅ SO(2)` bundle on a surface,
/// summed over the integration pieces of the patches. With `F = f J`, this is
/// `−(1/2π) Σ_i ∫ f_i`.
pub fn chern_number(cover: &CoverSpec, data: &TransitionData, opts: &QuadratureOptions) -> Result<f64, CocycleError> {
    check_shapes(cover, data)?;
    if data.algebra.rank() != 1 || data.algebra.size != 2 {
        return Err(CocycleError::Dimension("chern_number needs u(1) realized as so(2)".into()));
    }
    let mut total = 0.0;
    for (patch, conn) in cover.patches.iter().zip(&data.connections) {
        if patch.chart.dim() != 2 {
            return Err(CocycleError::Dimension(format!("patch {} is not two-dimensional", patch.name)));
        }
        let Some(region) = &patch.integration else {
            continue;
        };
        let curv = patch_curvature(patch, conn, &data.algebra)?;
        let f12 = curv.f[0][&(0, 1)].clone();
        let mut integrand = |x: f64, y: f64| -> Result<f64, CocycleError> {
            let p = point_on(&patch.chart, &[x, y]);
            Ok(f12.eval(&p)?)
        };
        total += integrate_box(&mut integrand, region, opts)?;
    }
    Ok(-total / (2.0 * core::f64::consts::PI))
}

/// Applies patchwise isomorphisms `h_i`:
/// `g'_ij = h_i⁻¹ g_ij h_j`, `A'_i = h_i⁻¹ A_i h_i + h_i⁻¹ d h_i`, `m'_i = h_i⁻¹ m_i`.
/// Each `h_i` is supplied with its inverse.
pub fn gauge_transform(
    cover: &CoverSpec,
    data: &TransitionData,
    h: &[ExprMatrix],
    h_inv: &[ExprMatrix],
) -> Result<TransitionData, CocycleError> {
    check_shapes(cover, data)?;
    if h.len() != cover.patches.len() || h_inv.len() != h.len() {
        return Err(CocycleError::Dimension("one isomorphism per patch is required".into()));
    }
    let alg = &data.algebra;
    let mut g = BTreeMap::new();
    for (&(i, j), gij) in &data.g {
        let hj = if i == j {
            h[j].clone()
        } else {
            let ov = cover
                .overlap(i, j)
                .ok_or_else(|| CocycleError::Dimension(format!("no overlap ({i},{j}) for a transition")))?;
            h[j].substitute_coords(&coord_map(&cover.patches[j].chart, &ov.to_j))
        };
        g.insert((i, j), h_inv[i].mul(gij).mul(&hj));
    }
    let mut connections = Vec::new();
    for (i, (patch, conn)) in cover.patches.iter().zip(&data.connections).enumerate() {
        let d = patch.chart.dim();
        let mut comps = alloc::vec![alloc::vec![Expr::zero(); d]; alg.rank()];
        for mu in 0..d {
            let ai: Vec<Expr> = conn.a.iter().map(|c| c[mu].clone()).collect();
            let m = h_inv[i]
                .mul(&alg.combine(&ai))
                .mul(&h[i])
                .add(&h_inv[i].mul(&h[i].diff(&patch.chart.coords()[mu])));
            let c = alg.decompose(&m).ok_or_else(|| {
                CocycleError::Dimension(format!("transformed connection on {} leaves the Lie algebra", patch.name))
            })?;
            for (al, x) in c.into_iter().enumerate() {
                comps[al][mu] = x;
            }
        }
        let higgs = conn.higgs.as_ref().map(|m| {
            (0..alg.size)
                .map(|r| {
                    let mut acc = Expr::zero();
                    for (c, mc) in m.iter().enumerate() {
                        acc = acc.add(&h_inv[i].get(r, c).mul(mc));
                    }
                    acc
                })
                .collect()
        });
        connections.push(PatchConnection { a: comps, higgs });
    }
    Ok(TransitionData {
        algebra: alg.clone(),
        g,
        connections,
    })
}
