//! Job configuration files (JSON or TOML) and their translation into engine
//! inputs. Expression fields use the coefficient grammar verbatim; indices in
//! tensor entries are 1-based.

use std::collections::BTreeMap;
use std::path::Path;

use acw_core::algebroid::{AdjustmentData, AlgebroidSpec};
use acw_core::cocycle::{
    CoverPatch, CoverSpec, ExprMatrix, MatrixAlgebra, Overlap, PatchConnection, Region, TransitionData, TripleOverlap,
};
use acw_core::coeff::{Chart, Expr, NumericPoint};
use acw_core::tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Markdown,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    /// Check names, or `["all"]`. Empty means every applicable check.
    #[serde(default)]
    pub checks: Vec<String>,
    /// Expected outcome per check name (or name prefix such as `adjust`);
    /// unlisted checks are expected to pass.
    #[serde(default)]
    pub expect: BTreeMap<String, bool>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub fixture: Option<FixtureRef>,
    pub algebroid: Option<AlgebroidBlock>,
    pub adjustment: Option<AdjustmentBlock>,
    pub fields: Option<FieldsBlock>,
    pub cover: Option<CoverBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Residual tolerance for sampled checks.
    pub numeric: f64,
    /// Relative tolerance of the finite-difference audit.
    pub fd: f64,
    /// Spot-check sample count.
    pub samples: usize,
    /// Sample count of the cocycle and gluing checks.
    pub cocycle_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            numeric: 1e-9,
            fd: 1e-6,
            samples: 50,
            cocycle_samples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

/// `f^{index[0]}_{index[1] index[2]} = value`; antisymmetric partners are implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub index: [usize; 3],
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidBlock {
    #[serde(default = "default_chart_name")]
    pub chart: String,
    pub coords: Vec<String>,
    #[serde(default)]
    pub opaque: Vec<String>,
    pub rank: usize,
    /// `anchor[α][a] = ρ^a_α`; omitted means the zero anchor.
    #[serde(default)]
    pub anchor: Vec<Vec<String>>,
    #[serde(default)]
    pub bracket: Vec<Entry>,
}

fn default_chart_name() -> String {
    "M".to_string()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustmentBlock {
    /// `ω^{α}_{a β}` with index `[α, a, β]`.
    #[serde(default)]
    pub omega: Vec<Entry>,
    /// `ζ^{α}_{a b}` with index `[α, a, b]`; antisymmetric in `a, b`.
    #[serde(default)]
    pub zeta: Vec<Entry>,
}

/// Patch used by the gauge and closure checks. Without explicit fields the
/// connection is generic (opaque `φ`, `A`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsBlock {
    pub patch_dim: Option<usize>,
    #[serde(default)]
    pub coords: Vec<String>,
    #[serde(default)]
    pub phi: Vec<String>,
    /// `a[α][μ]`.
    #[serde(default)]
    pub a: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    /// Constant expression; `pi` is available.
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionBlock {
    pub lo: Vec<Bound>,
    pub hi: Vec<Bound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Group {
    Named(String),
    /// Constant basis matrices `t_α` of the Lie algebra.
    Basis(Vec<Vec<Vec<String>>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchBlock {
    pub name: String,
    pub coords: Vec<String>,
    pub domain: RegionBlock,
    pub integration: Option<RegionBlock>,
    /// `a[α][μ]`.
    pub a: Vec<Vec<String>>,
    pub higgs: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapBlock {
    pub from: String,
    pub to: String,
    pub region: RegionBlock,
    /// Coordinates of `to` in terms of those of `from`; identity when omitted.
    #[serde(default)]
    pub to_coords: Vec<String>,
    /// `g_{from,to}` as rows of expressions in the `from` coordinates.
    pub transition: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleBlock {
    pub patches: [String; 3],
    pub region: RegionBlock,
    #[serde(default)]
    pub to_j: Vec<String>,
    #[serde(default)]
    pub to_k: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverBlock {
    #[serde(default = "default_cover_name")]
    pub name: String,
    pub group: Group,
    pub patches: Vec<PatchBlock>,
    #[serde(default)]
    pub overlaps: Vec<OverlapBlock>,
    #[serde(default)]
    pub triples: Vec<TripleBlock>,
}

fn default_cover_name() -> String {
    "X".to_string()
}

impl JobConfig {
    /// Reads a config file; `.toml` files are TOML, everything else JSON.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::config("config is not UTF-8"))?;
        let cfg = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(text)?
        } else {
            serde_json::from_str(text)?
        };
        Ok((cfg, bytes))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        if !(t.numeric > 0.0 && t.fd > 0.0) {
            return Err(CliError::config("tolerances must be positive"));
        }
        if t.samples == 0 || t.cocycle_samples == 0 {
            return Err(CliError::config("sample counts must be positive"));
        }
        let inputs = [self.fixture.is_some(), self.algebroid.is_some(), self.cover.is_some()];
        match inputs.iter().filter(|x| **x).count() {
            0 => return Err(CliError::config("one of `fixture`, `algebroid` or `cover` is required")),
            1 => {}
            _ => return Err(CliError::config("`fixture`, `algebroid` and `cover` are mutually exclusive")),
        }
        if self.adjustment.is_some() && self.algebroid.is_none() {
            return Err(CliError::config("`adjustment` requires an `algebroid` block"));
        }
        if self.fields.is_some() && self.cover.is_some() {
            return Err(CliError::config("`fields` applies to algebroid inputs only"));
        }
        Ok(())
    }
}

fn parse(chart: &Chart, src: &str, at: impl FnOnce() -> String) -> Result<Expr, CliError> {
    chart.parse(src).map_err(|source| CliError::Expr { at: at(), source })
}

fn index(i: usize, n: usize, what: &str) -> Result<usize, CliError> {
    if i == 0 || i > n {
        return Err(CliError::config(format!("{what} index {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

/// Fills an antisymmetric-in-the-last-two-slots tensor from entries.
fn antisymmetric(
    chart: &Chart,
    shape: [usize; 3],
    entries: &[Entry],
    what: &str,
) -> Result<Tensor, CliError> {
    let mut t = Tensor::zeros(&shape);
    for e in entries {
        let i = index(e.index[0], shape[0], what)?;
        let j = index(e.index[1], shape[1], what)?;
        let k = index(e.index[2], shape[2], what)?;
        let v = parse(chart, &e.value, || format!("{what}{:?}", e.index))?;
        if j == k {
            if !v.is_zero() {
                return Err(CliError::config(format!("{what}{:?} lies on the diagonal of an antisymmetric pair", e.index)));
            }
            continue;
        }
        t.set(&[i, j, k], v.clone());
        t.set(&[i, k, j], v.neg());
    }
    Ok(t)
}

impl AlgebroidBlock {
    pub fn chart(&self) -> Result<Chart, CliError> {
        let c = Chart::new(&self.chart, &self.coords).map_err(|source| CliError::Expr {
            at: "algebroid.coords".into(),
            source,
        })?;
        c.with_opaque(&self.opaque).map_err(|source| CliError::Expr {
            at: "algebroid.opaque".into(),
            source,
        })
    }

    pub fn build(&self) -> Result<AlgebroidSpec, CliError> {
        let chart = self.chart()?;
        let (r, n) = (self.rank, chart.dim());
        let mut anchor = Tensor::zeros(&[r, n]);
        if !self.anchor.is_empty() {
            if self.anchor.len() != r || self.anchor.iter().any(|row| row.len() != n) {
                return Err(CliError::config(format!("anchor must be {r} rows of {n} expressions")));
            }
            for (al, row) in self.anchor.iter().enumerate() {
                for (a, src) in row.iter().enumerate() {
                    anchor.set(&[al, a], parse(&chart, src, || format!("anchor[{}][{}]", al + 1, a + 1))?);
                }
            }
        }
        let bracket = antisymmetric(&chart, [r, r, r], &self.bracket, "bracket")?;
        Ok(AlgebroidSpec::new(chart, r, anchor, bracket)?)
    }
}

impl AdjustmentBlock {
    pub fn build(&self, spec: &AlgebroidSpec) -> Result<AdjustmentData, CliError> {
        let chart = spec.base();
        let (r, n) = (spec.rank(), spec.dim());
        let mut omega = Tensor::zeros(&[r, n, r]);
        for e in &self.omega {
            let i = [index(e.index[0], r, "omega")?, index(e.index[1], n, "omega")?, index(e.index[2], r, "omega")?];
            omega.set(&i, parse(chart, &e.value, || format!("omega{:?}", e.index))?);
        }
        let zeta = antisymmetric(chart, [r, n, n], &self.zeta, "zeta")?;
        Ok(AdjustmentData::new(spec, omega, zeta)?)
    }
}

fn constants() -> Chart {
    Chart::new("const", &["pi"]).expect("valid chart")
}

fn bound(b: &Bound, at: &str) -> Result<f64, CliError> {
    match b {
        Bound::Number(x) => Ok(*x),
        Bound::Text(s) => {
            let e = parse(&constants(), s, || at.to_string())?;
            let p = NumericPoint::new().with_coord("pi", std::f64::consts::PI);
            e.eval(&p).map_err(|e| CliError::config(format!("{at}: {e}")))
        }
    }
}

fn region(r: &RegionBlock, dim: usize, at: &str) -> Result<Region, CliError> {
    if r.lo.len() != dim || r.hi.len() != dim {
        return Err(CliError::config(format!("{at}: bounds must have {dim} entries")));
    }
    let lo = r.lo.iter().map(|b| bound(b, at)).collect::<Result<Vec<_>, _>>()?;
    let hi = r.hi.iter().map(|b| bound(b, at)).collect::<Result<Vec<_>, _>>()?;
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return Err(CliError::config(format!("{at}: lower bound above upper bound")));
    }
    Ok(Region::new(lo, hi))
}

fn matrix(chart: &Chart, rows: &[Vec<String>], size: usize, at: &str) -> Result<ExprMatrix, CliError> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(CliError::config(format!("{at}: expected a {size}x{size} matrix")));
    }
    let mut entries = Vec::with_capacity(size * size);
    for (i, row) in rows.iter().enumerate() {
        for (j, src) in row.iter().enumerate() {
            entries.push(parse(chart, src, || format!("{at}[{}][{}]", i + 1, j + 1))?);
        }
    }
    Ok(ExprMatrix::new(size, entries)?)
}

impl CoverBlock {
    fn algebra(&self) -> Result<MatrixAlgebra, CliError> {
        match &self.group {
            Group::Named(n) => match n.as_str() {
                "so2" => Ok(MatrixAlgebra::so2()),
                "so3" => Ok(MatrixAlgebra::so3()),
                other => Err(CliError::config(format!("unknown group `{other}`; use so2, so3 or a basis"))),
            },
            Group::Basis(basis) => {
                let size = basis.first().map_or(0, Vec::len);
                let c = constants();
                let mats = basis
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix(&c, m, size, &format!("cover.group[{}]", k + 1)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(MatrixAlgebra::new(size, mats)?)
            }
        }
    }

    pub fn build(&self) -> Result<(CoverSpec, TransitionData), CliError> {
        let algebra = self.algebra()?;
        let mut patches = Vec::new();
        let mut connections = Vec::new();
        for p in &self.patches {
            let at = format!("cover.patches[{}]", p.name);
            let chart = Chart::new(&p.name, &p.coords).map_err(|source| CliError::Expr { at: at.clone(), source })?;
            let d = chart.dim();
            let domain = region(&p.domain, d, &format!("{at}.domain"))?;
            let integration = p
                .integration
                .as_ref()
                .map(|r| region(r, d, &format!("{at}.integration")))
                .transpose()?;
            if p.a.len() != algebra.rank() || p.a.iter().any(|row| row.len() != d) {
                return Err(CliError::config(format!("{at}.a must be {} rows of {d} expressions", algebra.rank())));
            }
            let a = p
                .a
                .iter()
                .enumerate()
                .map(|(al, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(mu, s)| parse(&chart, s, || format!("{at}.a[{}][{}]", al + 1, mu + 1)))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let higgs = p
                .higgs
                .as_ref()
                .map(|m| {
                    m.iter()
                        .enumerate()
                        .map(|(k, s)| parse(&chart, s, || format!("{at}.higgs[{}]", k + 1)))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?;
            connections.push(PatchConnection { a, higgs });
            patches.push(CoverPatch {
                name: p.name.clone(),
                chart,
                domain,
                integration,
            });
        }
        let find = |name: &str| {
            patches
                .iter()
                .position(|p| p.name == name)
                .ok_or_else(|| CliError::config(format!("unknown patch `{name}`")))
        };
        let images = |from: usize, to: usize, srcs: &[String], at: &str| -> Result<Vec<Expr>, CliError> {
            let (cf, ct) = (&patches[from].chart, &patches[to].chart);
            if srcs.is_empty() {
                if cf.coords() != ct.coords() {
                    return Err(CliError::config(format!("{at}: coordinate images are required between different charts")));
                }
                return Ok(cf.coord_exprs());
            }
            if srcs.len() != ct.dim() {
                return Err(CliError::config(format!("{at}: expected {} coordinate images", ct.dim())));
            }
            srcs.iter().map(|s| parse(cf, s, || at.to_string())).collect()
        };
        let mut overlaps = Vec::new();
        let mut g = BTreeMap::new();
        for o in &self.overlaps {
            let at = format!("cover.overlaps[{}→{}]", o.from, o.to);
            let (i, j) = (find(&o.from)?, find(&o.to)?);
            let chart = &patches[i].chart;
            if let Some(t) = &o.transition {
                g.insert((i, j), matrix(chart, t, algebra.size(), &format!("{at}.transition"))?);
            }
            overlaps.push(Overlap {
                i,
                j,
                region: region(&o.region, chart.dim(), &format!("{at}.region"))?,
                to_j: images(i, j, &o.to_coords, &at)?,
            });
        }
        let mut triples = Vec::new();
        for t in &self.triples {
            let at = format!("cover.triples[{}]", t.patches.join(","));
            let (i, j, k) = (find(&t.patches[0])?, find(&t.patches[1])?, find(&t.patches[2])?);
            triples.push(TripleOverlap {
                i,
                j,
                k,
                region: region(&t.region, patches[i].chart.dim(), &format!("{at}.region"))?,
                to_j: images(i, j, &t.to_j, &at)?,
                to_k: images(i, k, &t.to_k, &at)?,
            });
        }
        let cover = CoverSpec {
            name: self.name.clone(),
            patches,
            overlaps,
            triples,
        };
        Ok((cover, TransitionData { algebra, g, connections }))
    }
}
