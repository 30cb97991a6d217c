//! Job assembly and execution.

use std::collections::BTreeMap;
use std::time::Instant;

use acw_core::adjust::{classify, nabla_zeta_crosscheck, AdjustmentVerdict, Condition, Tier};
use acw_core::algebroid::{validate, AdjustmentData, AlgebroidSpec};
use acw_core::catalog::{
    instantiate, spot_check, AlgebroidExpectation, AlgebroidFixture, CocycleExpectation,
    CocycleFixture, Fixture, FixtureBody, SpotOptions, SpotReport,
};
use acw_core::cocycle::{chern_number, glue_check, verify_cocycle, CocycleReport, QuadratureOptions, SampleOptions};
use acw_core::coeff::{Chart, ZeroVerdict};
use acw_core::gauge::{
    bianchi_residuals, closure_check, covariance_check, gauge_variation, generic_parameter, Connection, Patch,
};
use acw_core::gca::GradedElem;
use acw_core::tensor::Tensor;
use sha2::{Digest, Sha256};

use crate::config::{FieldsBlock, JobConfig, Tolerances};
use crate::error::CliError;
use crate::report::{CheckReport, Confidence, Report, ResidualSummary, Verdict};

/// Spacetime dimension of the generic patch used by gauge checks.
pub const DEFAULT_PATCH_DIM: usize = 3;

pub const DEFAULT_SEED: u64 = 1;

const ALGEBROID_CHECKS: &[&str] = &[
    "nilpotency",
    "adjust.plain",
    "adjust.covariant",
    "adjust.strict",
    "adjust.crosscheck",
    "gauge.delta_e",
    "gauge.covariance",
    "gauge.bianchi",
    "closure.identity",
    "closure.plain",
    "spot_check",
];

const COVER_CHECKS: &[&str] = &["nilpotency", "cocycle.verify", "cocycle.glue", "chern", "spot_check"];

const SAMPLED_CHECKS: &[&str] = &[
    "nilpotency",
    "adjust.plain",
    "adjust.covariant",
    "adjust.strict",
    "adjust.flat_connection",
    "spot_check",
];

/// Every check name the runner knows, in execution order.
pub fn known_checks() -> Vec<&'static str> {
    let mut out: Vec<&str> = Vec::new();
    for name in ALGEBROID_CHECKS.iter().chain(SAMPLED_CHECKS).chain(COVER_CHECKS) {
        if !out.contains(name) {
            out.push(name);
        }
    }
    out
}

fn selects(pattern: &str, name: &str) -> bool {
    pattern == "all" || name == pattern || name.strip_prefix(pattern).is_some_and(|r| r.starts_with('.'))
}

/// A fully resolved job.
#[derive(Clone, Debug)]
pub struct Job {
    pub input: String,
    pub digest: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Check patterns; empty selects everything applicable.
    pub checks: Vec<String>,
    pub expect: BTreeMap<String, bool>,
    pub fixture: Fixture,
    /// Expectations come from the catalog rather than defaulting to pass.
    pub catalog: bool,
    pub fields: Option<FieldsBlock>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn fixture_ref(name: &str, params: &BTreeMap<String, String>) -> String {
    let mut s = format!("fixture:{name}");
    for (k, v) in params {
        s.push_str(&format!(";{k}={v}"));
    }
    s
}

impl Job {
    pub fn from_fixture(name: &str, params: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let fixture = instantiate(name, params)?;
        let input = fixture_ref(name, params);
        Ok(Job {
            digest: digest(input.as_bytes()),
            input,
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            checks: Vec::new(),
            expect: BTreeMap::new(),
            fixture,
            catalog: true,
            fields: None,
        })
    }

    /// `bytes` is the raw config file, used for the input digest.
    pub fn from_config(cfg: JobConfig, label: &str, bytes: &[u8]) -> Result<Self, CliError> {
        cfg.validate()?;
        let (fixture, catalog) = if let Some(f) = &cfg.fixture {
            (instantiate(&f.name, &f.params)?, true)
        } else if let Some(a) = &cfg.algebroid {
            let spec = a.build()?;
            let adj = match &cfg.adjustment {
                Some(b) => b.build(&spec)?,
                None => AdjustmentData::zero(&spec),
            };
            let body = FixtureBody::Algebroid(AlgebroidFixture {
                spec,
                adj,
                expect: AlgebroidExpectation { valid: true, tier: None },
                pullback: None,
            });
            (synthetic(body), false)
        } else if let Some(c) = &cfg.cover {
            let (cover, data) = c.build()?;
            let expect = CocycleExpectation {
                cocycle: true,
                glue: true,
                chern: None,
            };
            (synthetic(FixtureBody::Cocycle(CocycleFixture { cover, data, expect })), false)
        } else {
            unreachable!("validated config has an input block")
        };
        let job = Job {
            input: label.to_string(),
            digest: digest(bytes),
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            tolerances: cfg.tolerances,
            checks: cfg.checks,
            expect: cfg.expect,
            fixture,
            catalog,
            fields: cfg.fields,
        };
        if let Some(f) = &job.fields {
            job.patch()?;
            if f.patch_dim == Some(0) {
                return Err(CliError::config("fields.patch_dim must be positive"));
            }
        }
        Ok(job)
    }

    fn applicable(&self) -> &'static [&'static str] {
        match &self.fixture.body {
            FixtureBody::Algebroid(_) => ALGEBROID_CHECKS,
            FixtureBody::Cocycle(_) => COVER_CHECKS,
            FixtureBody::Sampled(_) => SAMPLED_CHECKS,
        }
    }

    /// The checks to run, in execution order. The nilpotency audit is always first.
    pub fn selected(&self) -> Result<Vec<&'static str>, CliError> {
        let known = known_checks();
        let applicable = self.applicable();
        for p in &self.checks {
            if !known.iter().any(|n| selects(p, n)) {
                return Err(CliError::config(format!("unknown check `{p}`")));
            }
            if !applicable.iter().any(|n| selects(p, n)) {
                return Err(CliError::config(format!("check `{p}` does not apply to this input")));
            }
        }
        for k in self.expect.keys() {
            if !known.iter().any(|n| selects(k, n)) {
                return Err(CliError::config(format!("expectation for unknown check `{k}`")));
            }
        }
        Ok(applicable
            .iter()
            .copied()
            .filter(|n| *n == "nilpotency" || self.checks.is_empty() || self.checks.iter().any(|p| selects(p, n)))
            .collect())
    }

    fn explicit(&self, name: &str) -> Option<bool> {
        self.expect
            .iter()
            .filter(|(k, _)| selects(k, name) && k.as_str() != "all")
            .max_by_key(|(k, _)| k.len())
            .map(|(_, v)| *v)
            .or_else(|| self.expect.get("all").copied())
    }

    fn patch(&self) -> Result<(Patch, Option<Connection>), CliError> {
        let Some(f) = &self.fields else {
            return Ok((Patch::new(DEFAULT_PATCH_DIM), None));
        };
        if f.coords.is_empty() {
            if !f.phi.is_empty() || !f.a.is_empty() {
                return Err(CliError::config("explicit fields need `fields.coords`"));
            }
            return Ok((Patch::new(f.patch_dim.unwrap_or(DEFAULT_PATCH_DIM)), None));
        }
        if f.patch_dim.is_some_and(|d| d != f.coords.len()) {
            return Err(CliError::config("fields.patch_dim disagrees with fields.coords"));
        }
        let chart = Chart::new("U", &f.coords).map_err(|source| CliError::Expr {
            at: "fields.coords".into(),
            source,
        })?;
        let patch = Patch::on_chart(chart);
        if f.phi.is_empty() && f.a.is_empty() {
            return Ok((patch, None));
        }
        let FixtureBody::Algebroid(a) = &self.fixture.body else {
            return Err(CliError::config("`fields` applies to algebroid inputs only"));
        };
        let (n, r, d) = (a.spec.dim(), a.spec.rank(), patch.dim());
        if f.phi.len() != n || f.a.len() != r || f.a.iter().any(|row| row.len() != d) {
            return Err(CliError::config(format!(
                "fields need {n} phi components and {r} rows of {d} potential components"
            )));
        }
        let chart = patch.chart().clone();
        let parse = |s: &str, at: String| chart.parse(s).map_err(|source| CliError::Expr { at, source });
        let phi = f
            .phi
            .iter()
            .enumerate()
            .map(|(i, s)| parse(s, format!("fields.phi[{}]", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut a_forms = Vec::new();
        for (al, row) in f.a.iter().enumerate() {
            let comps = row
                .iter()
                .enumerate()
                .map(|(mu, s)| parse(s, format!("fields.a[{}][{}]", al + 1, mu + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            a_forms.push(patch.one_form(&comps));
        }
        Ok((patch, Some(Connection { phi, a: a_forms })))
    }

    fn spot_options(&self) -> SpotOptions {
        SpotOptions {
            samples: self.tolerances.samples,
            residual_tolerance: self.tolerances.numeric,
            derivative_tolerance: self.tolerances.fd,
            ..SpotOptions::default()
        }
    }

    fn sample_options(&self) -> SampleOptions {
        SampleOptions {
            samples: self.tolerances.cocycle_samples,
            seed: self.seed,
            tolerance: self.tolerances.numeric,
        }
    }
}

fn synthetic(body: FixtureBody) -> Fixture {
    Fixture {
        name: "config".to_string(),
        params: BTreeMap::new(),
        body,
    }
}

/// Outcome of one check before expectations are attached.
struct Outcome {
    pass: bool,
    confidence: Option<Confidence>,
    value: Option<f64>,
    residuals: Vec<ResidualSummary>,
}

impl Outcome {
    fn new(pass: bool, residuals: Vec<ResidualSummary>) -> Self {
        Outcome {
            pass,
            confidence: None,
            value: None,
            residuals,
        }
    }

    fn exact(mut self, exact: bool) -> Self {
        self.confidence = Some(if exact { Confidence::Exact } else { Confidence::Numeric });
        self
    }
}

fn verdict_summary(name: &str, v: &ZeroVerdict) -> ResidualSummary {
    match v {
        ZeroVerdict::ExactZero { .. } => ResidualSummary::new(name, 0.0),
        ZeroVerdict::NumericZero { max_abs, .. } => ResidualSummary::new(name, *max_abs),
        ZeroVerdict::NonZero { witness, value } => {
            ResidualSummary::new(name, value.abs()).with_witness(witness.iter().map(|(k, v)| (k, *v)))
        }
    }
}

/// Zero-tests a family of form-valued residuals.
fn forms_outcome(name: &str, xs: &[GradedElem]) -> Outcome {
    let mut exact = true;
    for (i, x) in xs.iter().enumerate() {
        let v = x.zero_verdict();
        match &v {
            ZeroVerdict::NonZero { .. } => {
                let s = verdict_summary(name, &v).with_detail(format!("component {} is {}", i + 1, x));
                return Outcome::new(false, vec![s]).exact(false);
            }
            ZeroVerdict::NumericZero { .. } => exact = false,
            ZeroVerdict::ExactZero { .. } => {}
        }
    }
    let max = xs
        .iter()
        .map(|x| match x.zero_verdict() {
            ZeroVerdict::NumericZero { max_abs, .. } => max_abs,
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    Outcome::new(true, vec![ResidualSummary::new(name, max)]).exact(exact)
}

fn condition_outcome(verdict: &AdjustmentVerdict, c: Condition) -> Outcome {
    let r = verdict.condition(c).expect("classify reports every condition");
    let mut s = verdict_summary(c.name(), &r.verdict);
    if let Some(idx) = &r.witness_index {
        let one_based: Vec<usize> = idx.iter().map(|i| i + 1).collect();
        s = s.with_detail(format!("nonzero component {:?}: {}", one_based, r.residual.get(idx)));
    }
    let t = match c {
        Condition::Plain => Tier::Plain,
        Condition::Covariant => Tier::Covariant,
        Condition::Strict => Tier::Strict,
    };
    let pass = verdict.tier >= t;
    if r.holds() && !pass {
        s = s.with_detail(format!("condition holds but a lower tier fails (tier {:?})", verdict.tier));
    }
    Outcome::new(pass, vec![s]).exact(r.verdict.is_exact() || !r.holds())
}

fn tensor_outcome(name: &str, t: &Tensor) -> Outcome {
    let (v, idx) = t.zero_verdict();
    let mut s = verdict_summary(name, &v);
    if let Some(idx) = idx {
        let one_based: Vec<usize> = idx.iter().map(|i| i + 1).collect();
        s = s.with_detail(format!("nonzero component {:?}: {}", one_based, t.get(&idx)));
    }
    Outcome::new(v.is_zero(), vec![s]).exact(v.is_exact() || !v.is_zero())
}

fn cocycle_outcome(rep: &CocycleReport) -> Outcome {
    let residuals = rep
        .checks
        .iter()
        .map(|c| {
            ResidualSummary::new(&c.name, c.max_residual)
                .with_witness(c.witness.iter().map(|(k, v)| (k, *v)))
                .with_detail(format!("{} samples", c.samples))
        })
        .collect();
    Outcome::new(rep.passed(), residuals).exact(false)
}

fn spot_outcome(rep: &SpotReport) -> Outcome {
    let mut residuals: Vec<ResidualSummary> = rep
        .residuals
        .iter()
        .map(|r| {
            let symbolic = match r.symbolic_zero {
                Some(true) => "symbolically zero",
                Some(false) => "symbolically nonzero",
                None => "no symbolic verdict",
            };
            let agree = if r.consistent { "consistent" } else { "inconsistent" };
            let mut s = ResidualSummary::new(&r.name, r.max_abs).with_detail(format!("{symbolic}, {agree}"));
            if r.max_abs > 0.0 {
                s = s.with_witness(r.witness.iter().map(|(k, v)| (k, *v)));
            }
            s
        })
        .collect();
    let d = &rep.derivatives;
    let mut s = ResidualSummary::new("derivatives", d.max_error).with_detail(format!(
        "{} finite-difference comparisons, {} failures",
        d.checked,
        d.failures.len()
    ));
    if let Some(f) = d.failures.first() {
        s = s.with_witness(f.point.iter().map(|(k, v)| (k, *v)));
    }
    residuals.push(s);
    if let Some(c) = &rep.cocycle {
        residuals.extend(cocycle_outcome(c).residuals);
    }
    let pass = rep.consistent() && rep.cocycle.as_ref().is_none_or(|c| c.passed());
    Outcome::new(pass, residuals).exact(false)
}

/// Lazily computed shared inputs of the algebroid checks.
struct AlgebroidState<'a> {
    spec: &'a AlgebroidSpec,
    adj: &'a AdjustmentData,
    verdict: Option<AdjustmentVerdict>,
    gauge: Option<(Patch, Connection)>,
}

impl<'a> AlgebroidState<'a> {
    fn verdict(&mut self) -> &AdjustmentVerdict {
        let (spec, adj) = (self.spec, self.adj);
        self.verdict.get_or_insert_with(|| classify(spec, adj))
    }

    fn gauge(&mut self, job: &Job) -> Result<(Patch, Connection), CliError> {
        if self.gauge.is_none() {
            let (patch, conn) = job.patch()?;
            let conn = conn.unwrap_or_else(|| Connection::generic(self.spec, &patch));
            self.gauge = Some((patch, conn));
        }
        Ok(self.gauge.clone().expect("set above"))
    }
}

fn tier_expectation(t: Option<Tier>, at_least: Tier) -> Option<bool> {
    t.map(|t| t >= at_least)
}

/// Runs a job. Errors here are input errors; failed checks go in the report.
pub fn run(job: &Job) -> Result<Report, CliError> {
    let selected = job.selected()?;
    let mut checks: Vec<CheckReport> = Vec::new();
    let mut record = |name: &str, catalog: Option<bool>, gate: bool, f: &mut dyn FnMut() -> Result<Outcome, CliError>| -> Result<bool, CliError> {
        let expected = job.explicit(name).or(if job.catalog { catalog } else { Some(true) });
        let gated = !gate && job.explicit(name).is_none() && !(job.catalog && catalog.is_some());
        let start = Instant::now();
        if gated {
            checks.push(CheckReport {
                name: name.to_string(),
                verdict: Verdict::Skipped,
                expected: None,
                confidence: None,
                value: None,
                residuals: Vec::new(),
                elapsed_ms: 0.0,
            });
            return Ok(false);
        }
        let o = f()?;
        checks.push(CheckReport {
            name: name.to_string(),
            verdict: if o.pass { Verdict::Pass } else { Verdict::Fail },
            expected,
            confidence: o.confidence,
            value: o.value,
            residuals: o.residuals,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(o.pass)
    };
    let has = |n: &str| selected.contains(&n);

    match &job.fixture.body {
        FixtureBody::Algebroid(a) => {
            let valid = record("nilpotency", Some(a.expect.valid), true, &mut || {
                let rep = validate(&a.spec);
                let residuals = rep
                    .residuals
                    .iter()
                    .filter(|r| !r.verdict.is_zero())
                    .map(|r| {
                        verdict_summary(&format!("{:?}", r.kind), &r.verdict)
                            .with_detail(format!("{:?} residual on {}: {}", r.kind, r.symbol, r.residual))
                    })
                    .collect::<Vec<_>>();
                let residuals = if residuals.is_empty() {
                    vec![ResidualSummary::new("square", 0.0)]
                } else {
                    residuals
                };
                Ok(Outcome::new(rep.passed(), residuals).exact(rep.exact() || !rep.passed()))
            })?;
            let tier = if a.expect.valid { a.expect.tier } else { None };
            let cat = |e: Option<bool>| e.filter(|_| valid);
            let mut st = AlgebroidState {
                spec: &a.spec,
                adj: &a.adj,
                verdict: None,
                gauge: None,
            };
            let st = std::cell::RefCell::new(&mut st);
            let mut plain = false;
            let mut covariant = false;
            for (name, cond, t) in [
                ("adjust.plain", Condition::Plain, Tier::Plain),
                ("adjust.covariant", Condition::Covariant, Tier::Covariant),
                ("adjust.strict", Condition::Strict, Tier::Strict),
            ] {
                if has(name) {
                    let ok = record(name, tier_expectation(tier, t), valid, &mut || {
                        Ok(condition_outcome(st.borrow_mut().verdict(), cond))
                    })?;
                    match cond {
                        Condition::Plain => plain = ok,
                        Condition::Covariant => covariant = ok,
                        Condition::Strict => {}
                    }
                }
            }
            if !has("adjust.plain") || !has("adjust.covariant") {
                let v = st.borrow_mut().verdict().tier;
                plain = valid && v >= Tier::Plain;
                covariant = valid && v >= Tier::Covariant;
            }
            if has("adjust.crosscheck") {
                record("adjust.crosscheck", cat(Some(true)), valid, &mut || {
                    let x = nabla_zeta_crosscheck(&a.spec, &a.adj);
                    let mut o = tensor_outcome("nabla_zeta_minus_6_strict", &x.nabla_zeta_residual.sub(&x.strict_residual.scale(&acw_core::coeff::Expr::int(acw_core::adjust::NABLA_ZETA_FACTOR))));
                    o.pass = x.proportional;
                    Ok(o)
                })?;
            }
            let cov_expect = tier_expectation(tier, Tier::Covariant);
            if has("gauge.delta_e") {
                record("gauge.delta_e", cat(Some(true)), valid, &mut || {
                    let (patch, conn) = st.borrow_mut().gauge(job)?;
                    let c = generic_parameter(&a.spec, &patch, "c");
                    let gv = gauge_variation(&a.spec, &a.adj, &patch, &conn, &c);
                    let diff: Vec<GradedElem> = gv.e_display.iter().zip(&gv.e_linear).map(|(x, y)| x.sub(y)).collect();
                    Ok(forms_outcome("displayed_minus_linearized", &diff))
                })?;
            }
            if has("gauge.covariance") {
                record("gauge.covariance", cov_expect, valid && covariant, &mut || {
                    let (patch, conn) = st.borrow_mut().gauge(job)?;
                    let c = generic_parameter(&a.spec, &patch, "c");
                    Ok(forms_outcome("delta_f_residual", &covariance_check(&a.spec, &a.adj, &patch, &conn, &c)))
                })?;
            }
            if has("gauge.bianchi") {
                let expect = cov_expect.filter(|e| *e);
                let gate = valid && (covariant || expect.is_some());
                record("gauge.bianchi", expect, gate, &mut || {
                    let (patch, conn) = st.borrow_mut().gauge(job)?;
                    let [e, f] = bianchi_residuals(&a.spec, &a.adj, &patch, &conn);
                    let mut o = forms_outcome("bianchi_e", &e);
                    let of = forms_outcome("bianchi_f", &f);
                    o.pass &= of.pass;
                    if of.confidence == Some(Confidence::Numeric) {
                        o.confidence = of.confidence;
                    }
                    o.residuals.extend(of.residuals);
                    Ok(o)
                })?;
            }
            let mut closure: Option<(Vec<acw_core::coeff::Expr>, Vec<GradedElem>, Vec<GradedElem>)> = None;
            let mut closure_data = |job: &Job| -> Result<_, CliError> {
                if closure.is_none() {
                    let (patch, conn) = st.borrow_mut().gauge(job)?;
                    let c1 = generic_parameter(&a.spec, &patch, "ca");
                    let c2 = generic_parameter(&a.spec, &patch, "cb");
                    let (res, diff) = closure_check(&a.spec, &a.adj, &patch, &conn, &c1, &c2);
                    closure = Some((res.residual_phi, res.residual_a, diff));
                }
                Ok(closure.clone().expect("set above"))
            };
            if has("closure.identity") {
                record("closure.identity", cat(Some(true)), valid, &mut || {
                    let (phi, _, diff) = closure_data(job)?;
                    let mut o = forms_outcome("commutator_minus_rbas_term", &diff);
                    if let Some(i) = phi.iter().position(|p| !p.is_zero()) {
                        o.pass = false;
                        o.residuals
                            .push(ResidualSummary::new("phi", f64::NAN).with_detail(format!("component {} is {}", i + 1, phi[i])));
                    }
                    Ok(o)
                })?;
            }
            if has("closure.plain") {
                record("closure.plain", tier_expectation(tier, Tier::Plain), valid && plain, &mut || {
                    let (_, res_a, _) = closure_data(job)?;
                    Ok(forms_outcome("commutator_on_a", &res_a))
                })?;
            }
            if has("spot_check") {
                record("spot_check", cat(Some(true)), valid, &mut || {
                    Ok(spot_outcome(&spot_check(&job.fixture, job.seed, &job.spot_options())?))
                })?;
            }
        }
        FixtureBody::Cocycle(c) => {
            record("nilpotency", Some(true), true, &mut || {
                let rep = validate(c.data.algebra.spec());
                Ok(Outcome::new(rep.passed(), vec![ResidualSummary::new("square", if rep.passed() { 0.0 } else { f64::NAN })])
                    .exact(rep.exact() || !rep.passed()))
            })?;
            let opts = job.sample_options();
            let mut cocycle_ok = true;
            if has("cocycle.verify") {
                cocycle_ok = record("cocycle.verify", Some(c.expect.cocycle), true, &mut || {
                    Ok(cocycle_outcome(&verify_cocycle(&c.cover, &c.data, &opts)?))
                })?;
            }
            let mut glue_ok = cocycle_ok;
            if has("cocycle.glue") {
                glue_ok = record("cocycle.glue", Some(c.expect.glue), cocycle_ok, &mut || {
                    Ok(cocycle_outcome(&glue_check(&c.cover, &c.data, &opts)?))
                })?;
            }
            if has("chern") {
                let expected_n = c.expect.chern;
                let catalog = job.catalog.then_some(expected_n.is_some());
                record("chern", catalog.or(Some(true)), glue_ok, &mut || {
                    let q = QuadratureOptions::default();
                    let v = chern_number(&c.cover, &c.data, &q)?;
                    let target = match expected_n {
                        Some(n) if job.catalog => n,
                        _ => v.round(),
                    };
                    let dist = (v - target).abs();
                    let mut o = Outcome::new(dist < 1e-6, vec![ResidualSummary::new("distance_to_integer", dist)
                        .with_detail(format!("nearest integer {}", v.round()))])
                    .exact(false);
                    o.value = Some(v);
                    Ok(o)
                })?;
            }
            if has("spot_check") {
                record("spot_check", Some(true), true, &mut || {
                    Ok(spot_outcome(&spot_check(&job.fixture, job.seed, &job.spot_options())?))
                })?;
            }
        }
        FixtureBody::Sampled(sf) => {
            let rep = spot_check(&job.fixture, job.seed, &job.spot_options())?;
            let tol = job.tolerances.numeric;
            let e = sf.expect;
            for (name, family, expected) in [
                ("nilpotency", "ce_square", e.valid),
                ("adjust.plain", "plain", e.plain),
                ("adjust.covariant", "covariant", e.covariant),
                ("adjust.strict", "strict", e.strict),
                ("adjust.flat_connection", "r_nabla", e.flat_connection),
            ] {
                if has(name) {
                    record(name, Some(expected), true, &mut || {
                        let r = rep.residuals.iter().find(|r| r.name == family);
                        let s = match r {
                            Some(r) => ResidualSummary::new(family, r.max_abs)
                                .with_witness(r.witness.iter().map(|(k, v)| (k, *v)))
                                .with_detail(format!("{} samples", rep.samples)),
                            None => ResidualSummary::new(family, f64::NAN).with_detail("family not sampled"),
                        };
                        let pass = r.is_some_and(|r| r.max_abs < tol);
                        Ok(Outcome::new(pass, vec![s]).exact(false))
                    })?;
                }
            }
            if has("spot_check") {
                record("spot_check", Some(true), true, &mut || Ok(spot_outcome(&rep)))?;
            }
        }
    }

    Ok(Report {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_digest: job.digest.clone(),
        input: job.input.clone(),
        seed: job.seed,
        checks,
    })
}
