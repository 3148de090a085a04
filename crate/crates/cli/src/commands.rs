use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use hypereg::counting::{product_density, relative_removal, RemovalKnobs};
use hypereg::geometry::{BoxCell, BoxPartition, EdgeGeometry};
use hypereg::measure::{EdgeFunction, HypergraphSystem};
use hypereg::norms::{cell_count, cut_norm, DEFAULT_BUDGET};
use hypereg::params::{p_dagger, stage_count, x_exponent};
use hypereg::pseudorandom::{check_direct, check_linear_forms, ConditionReport, PseudorandomFamily, Status, Witness};
use hypereg::regularity::{decompose, schedule, DecomposeCaps, GrowthFunction, LogValue, ScheduleInput};
use hypereg::zn::{check_zn_pseudo, gen_majorant, relative_szemeredi_demo, MajorantKind, ZnPseudoParams, ZnWeight};
use hypereg::OracleMode;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::fail::{input, Failure};
use crate::instance::{key_of, nested, parse_exponent, Instance};
use crate::report::{num, Body, Certificate, Sense};

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Instance file (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Where to write the report; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Exact-enumeration budget; overrides the instance's `params.budget`.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Seed; overrides the instance's `params.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Leave out the `meta` block (timings, thread count).
    #[arg(long, global = true)]
    pub no_meta: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Exact,
    Greedy,
    Sampled,
}

#[derive(Args, Debug, Clone)]
pub struct CutnormArgs {
    /// Edge key such as "1,2"; the first edge when absent.
    #[arg(long)]
    pub edge: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Also certify `‖f‖ ≤ δ` (a larger value is a violation with its witness).
    #[arg(long)]
    pub delta_threshold: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    /// `affine:a,b` or `table:v0,v1,...`.
    #[arg(long, default_value = "affine:4,1")]
    pub growth: String,
    /// Norm bound `C`; defaults to `params.C`, else the largest `‖f_e‖_p`.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<f64>,
    #[arg(long)]
    pub max_stages: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct PseudoArgs {
    /// Check the cyclic AP family of length `k` instead of the instance family.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Density of the random set behind the cyclic majorant.
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Check C1, C2a and C3 directly instead of the linear forms P1, P2.
    #[arg(long)]
    pub direct: bool,
}

#[derive(Args, Debug, Clone)]
pub struct RemoveArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Level defining the dense sets `E_e = [h_e ≥ level]`.
    #[arg(long)]
    pub delta_threshold: Option<f64>,
    /// Density bound `δ`; the observed density when absent.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ZnDemoArgs {
    #[arg(long, default_value_t = 101)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// Required mean of `f`.
    #[arg(long, default_value_t = 0.4)]
    pub delta_threshold: f64,
    /// Also check the majorant for pseudorandomness.
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_parser = parse_exponent, default_value = "inf")]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Number of vertices; the instance's when absent, else 3.
    #[arg(long)]
    pub n: Option<usize>,
    /// Uniformity; the instance's when absent, else 2.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value = "affine:4,1")]
    pub growth: String,
}

/// Everything a run echoes besides its results.
#[derive(Default)]
pub struct Session {
    pub inputs: Map<String, Value>,
    pub bytes: Option<Vec<u8>>,
}

impl Session {
    pub fn echo(&mut self, key: &str, v: Value) {
        self.inputs.insert(key.to_string(), v);
    }

    pub fn load(&mut self, g: &Global) -> Result<Instance, Failure> {
        let path = g.input.as_ref().ok_or_else(|| input("--input is required"))?;
        let inst = Instance::load(path)?;
        self.bytes = Some(inst.bytes.clone());
        Ok(inst)
    }

    fn seed(&mut self, g: &Global, inst: Option<&Instance>) -> u64 {
        let s = g.seed.or_else(|| inst.and_then(|i| i.file.params.seed)).unwrap_or(0);
        self.echo("seed", json!(s));
        s
    }

    fn budget(&mut self, g: &Global, inst: Option<&Instance>) -> u64 {
        let b = g.budget.or_else(|| inst.and_then(|i| i.file.params.budget)).unwrap_or(DEFAULT_BUDGET);
        self.echo("budget", json!(b));
        b
    }
}

pub fn parse_growth(s: &str) -> Result<GrowthFunction, Failure> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| input(format!("growth {s:?}: expected affine:a,b or table:v0,v1,...")))?;
    let vals = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| input(format!("growth {s:?}: bad number")))?;
    match (kind, vals.as_slice()) {
        ("affine", &[a, b]) => Ok(GrowthFunction::affine(a, b)?),
        ("table", _) => Ok(GrowthFunction::table(vals)?),
        _ => Err(input(format!("growth {s:?}: expected affine:a,b or table:v0,v1,..."))),
    }
}

fn exponent_json(p: f64) -> Value {
    num(p)
}

pub fn mode_of(status: Status, coverage: f64) -> OracleMode {
    match status {
        Status::Pass => OracleMode::Exact,
        Status::SampledPass => OracleMode::Sampled,
        Status::Fail if coverage >= 1.0 => OracleMode::Exact,
        Status::Fail => OracleMode::Sampled,
    }
}

pub fn partition_json(inst: &Instance, part: &BoxPartition<f64>) -> Value {
    Value::Array(part.cells().iter().map(|c| inst.cell_json(c)).collect())
}

pub fn partition_from_json(inst: &Instance, geom: &Arc<EdgeGeometry<f64>>, v: &Value) -> Result<BoxPartition<f64>, Failure> {
    let cells = v
        .as_array()
        .ok_or_else(|| input("partition witness must be an array of cells"))?
        .iter()
        .map(|c| inst.cell_from_json(geom, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoxPartition::new(Arc::clone(geom), cells)?)
}

fn edge_keys(sys: &HypergraphSystem<f64>, edges: &[usize]) -> Vec<String> {
    edges.iter().map(|&e| key_of(&sys.edges()[e])).collect()
}

fn witness_json(w: Option<&Witness>, value: f64, sys: &HypergraphSystem<f64>, inst: Option<&Instance>) -> Value {
    let bits = |m: &Vec<bool>| m.iter().map(|&b| u8::from(b)).collect::<Vec<_>>();
    let mut out = match w {
        None => json!({ "kind": "none" }),
        Some(Witness::Subfamily(g)) => json!({ "kind": "subfamily", "edges": edge_keys(sys, g) }),
        Some(Witness::Marginal { edge, subfamily }) => json!({
            "kind": "marginal",
            "edge": key_of(&sys.edges()[*edge]),
            "subfamily": edge_keys(sys, subfamily),
        }),
        Some(Witness::Cell { edge, masks }) => {
            let cell = inst.and_then(|i| {
                let geom = EdgeGeometry::new(sys.edge_face(*edge));
                BoxCell::new(geom, masks.clone()).ok().map(|c| i.cell_json(&c))
            });
            json!({ "kind": "cell", "edge": key_of(&sys.edges()[*edge]), "cell": cell })
        }
        Some(Witness::Choice { edge, exponents }) => json!({
            "kind": "choice",
            "edge": edge.map(|e| key_of(&sys.edges()[e])),
            "exponents": exponents.iter().map(bits).collect::<Vec<_>>(),
        }),
    };
    out["value"] = num(value);
    out
}

fn condition_cert(r: &ConditionReport<f64>, sys: &HypergraphSystem<f64>, inst: Option<&Instance>) -> Certificate {
    let mut c = Certificate::new(
        r.id.to_string(),
        Sense::Ge,
        0.0,
        r.worst_slack,
        mode_of(r.status, r.coverage),
        witness_json(r.witness.as_ref(), r.worst_value, sys, inst),
    );
    c.witness["status"] = json!(r.status.to_string());
    c.witness["coverage"] = num(r.coverage);
    c.witness["evaluated"] = json!(r.evaluated);
    c.holds = r.status.ok();
    c
}

fn log_json(v: &LogValue) -> Value {
    json!({
        "log10": num(v.log10),
        "log10Log10": v.log10_log10.map(num),
        "overflow": v.overflow,
        "value": v.value().map(num),
    })
}

pub fn cutnorm(g: &Global, a: &CutnormArgs, s: &mut Session) -> Result<Body, Failure> {
    let inst = s.load(g)?;
    let seed = s.seed(g, Some(&inst));
    let budget = s.budget(g, Some(&inst));
    let fs = inst.functions()?;
    let e = match &a.edge {
        Some(k) => inst.edge_index(k)?,
        None => 0,
    };
    let key = inst.edge_key(e);
    s.echo("edge", json!(key));
    s.echo("mode", json!(format!("{:?}", a.mode).to_lowercase()));
    s.echo("deltaThreshold", a.delta_threshold.map(num).unwrap_or(Value::Null));
    let mode = match a.mode {
        ModeArg::Exact => OracleMode::Exact,
        ModeArg::Greedy => OracleMode::Greedy,
        ModeArg::Sampled => return Err(input("the cut norm has no sampled oracle; use --mode exact or greedy")),
    };
    let f = &fs[e];
    let w = cut_norm(f, mode, seed, budget)?;
    let on_cell = f.integrate(Some(&w.cell))?.abs();
    let witness = json!({ "edge": key, "cell": inst.cell_json(&w.cell) });
    let mut body = Body::default();
    body.detail("value", num(w.value));
    body.detail("cells", num(cell_count(w.cell.geometry())));
    body.push(Certificate::new(format!("cutNorm[{key}]"), Sense::Eq, w.value, on_cell, w.mode, witness.clone()));
    if let Some(d) = a.delta_threshold {
        body.push(Certificate::new(format!("uniform[{key}]"), Sense::Le, d, w.value, w.mode, witness));
    }
    Ok(body)
}

pub fn decompose_cmd(g: &Global, a: &DecomposeArgs, s: &mut Session) -> Result<Body, Failure> {
    let inst = s.load(g)?;
    let seed = s.seed(g, Some(&inst));
    let budget = s.budget(g, Some(&inst));
    let fs = inst.functions()?;
    let params = &inst.file.params;
    let p = a.p.or(params.p.map(|e| e.0)).unwrap_or(2.0);
    let c = match a.c.or(params.c) {
        Some(c) => c,
        None => fs.iter().map(|f| f.lp_norm(p)).collect::<Result<Vec<_>, _>>()?.into_iter().fold(0.0, f64::max),
    };
    let sigma = a.sigma.or(params.sigma).unwrap_or(0.25);
    let growth = parse_growth(&a.growth)?;
    s.echo("c", num(c));
    s.echo("p", exponent_json(p));
    s.echo("sigma", num(sigma));
    s.echo("growth", json!(a.growth));
    s.echo("maxStages", a.max_stages.map(|m| json!(m)).unwrap_or(Value::Null));
    let caps = DecomposeCaps { max_stages: a.max_stages, budget, seed };
    let d = decompose(&inst.system, &fs, &growth, c, p, sigma, caps)?;
    let mut body = Body::default();
    for (e, ed) in d.edges.iter().enumerate() {
        let key = inst.edge_key(e);
        let pj = partition_json(&inst, &ed.p);
        let qj = partition_json(&inst, &ed.q);
        let ach = &ed.achieved;
        body.push(Certificate::new(
            format!("strNorm[{key}]"),
            Sense::Le,
            c,
            ach.str_norm_lp,
            OracleMode::Exact,
            json!({ "edge": key, "P": pj }),
        ));
        body.push(Certificate::new(
            format!("errNorm[{key}]"),
            Sense::Le,
            sigma,
            ach.err_norm,
            OracleMode::Exact,
            json!({ "edge": key, "P": pj, "Q": qj }),
        ));
        body.push(Certificate::new(
            format!("unfCut[{key}]"),
            Sense::Le,
            ach.one_over_fm,
            ach.unf_cut,
            ach.unf_mode,
            json!({ "edge": key, "Q": qj }),
        ));
    }
    body.detail("M", json!(d.m));
    body.detail("stages", json!(d.stages));
    body.detail("stageCap", json!(d.stage_cap));
    body.detail("certified", json!(d.certified));
    body.detail("cells", json!(d.edges.iter().map(|e| json!({ "P": e.p.len(), "Q": e.q.len() })).collect::<Vec<_>>()));
    if !d.certified {
        body.failure = Some(Failure::Budget(d.failure.clone().unwrap_or_else(|| "decomposition not certified".into())));
    }
    Ok(body)
}

fn cyclic_params(s: &mut Session, k: usize, c: f64, p: f64, eta: f64, budget: u64, seed: u64) -> ZnPseudoParams<f64> {
    s.echo("k", json!(k));
    s.echo("c", num(c));
    s.echo("p", exponent_json(p));
    s.echo("eta", num(eta));
    ZnPseudoParams { k, c, p, eta, budget, seed }
}

fn cyclic_checks(body: &mut Body, nu: &ZnWeight<f64>, params: &ZnPseudoParams<f64>) -> Result<(), Failure> {
    let rep = check_zn_pseudo(nu, None, params)?;
    let fam = hypereg::zn::zn_family(nu, None, params)?;
    let sys = fam.system();
    body.push(condition_cert(&rep.p1, sys, None));
    body.push(condition_cert(&rep.p2, sys, None));
    let mut cert = Certificate::new(
        "certificate",
        Sense::Le,
        params.c,
        rep.psi_norm,
        if rep.exact { OracleMode::Exact } else { OracleMode::Sampled },
        json!({ "kind": "none", "status": rep.status.to_string() }),
    );
    cert.holds = rep.status.ok();
    body.push(cert);
    body.detail("ell", json!(rep.ell));
    body.detail("exact", json!(rep.exact));
    body.detail("p1Tuples", json!(rep.p1_tuples));
    body.detail("p2Tuples", json!(rep.p2_tuples));
    body.detail("maxStdError", num(rep.max_std_error));
    body.detail("crossCheck", rep.cross_check.map(num).unwrap_or(Value::Null));
    Ok(())
}

pub fn check_pseudo(g: &Global, a: &PseudoArgs, s: &mut Session) -> Result<Body, Failure> {
    let cyclic = a.k.is_some() || a.n.is_some() || a.density.is_some();
    let inst = if cyclic && g.input.is_none() { None } else { Some(s.load(g)?) };
    let params = inst.as_ref().map(|i| i.file.params.clone()).unwrap_or_default();
    let seed = s.seed(g, inst.as_ref());
    let budget = s.budget(g, inst.as_ref());
    let c = a.c.or(params.c).unwrap_or(1.0);
    let p = a.p.or(params.p.map(|e| e.0)).unwrap_or(f64::INFINITY);
    let eta = a.eta.or(params.eta).unwrap_or(0.1);
    let mut body = Body::default();
    if cyclic {
        let (n, density) = (a.n.unwrap_or(5), a.density.unwrap_or(1.0));
        s.echo("route", json!("cyclic"));
        s.echo("n", json!(n));
        s.echo("density", num(density));
        let params = cyclic_params(s, a.k.unwrap_or(3), c, p, eta, budget, seed);
        let nu = gen_majorant::<f64>(n, density, MajorantKind::Set, seed)?;
        body.detail("nu", json!(nu.values().iter().map(|&v| num(v)).collect::<Vec<_>>()));
        cyclic_checks(&mut body, &nu, &params)?;
        return Ok(body);
    }
    let inst = inst.expect("loaded above");
    s.echo("route", json!(if a.direct { "direct" } else { "family" }));
    s.echo("c", num(c));
    s.echo("p", exponent_json(p));
    s.echo("eta", num(eta));
    let fam = inst.family(c, eta, p)?.ok_or_else(|| input("instance has no family block"))?;
    let sys = fam.system();
    body.detail("ell", json!(fam.ell()));
    if a.direct {
        for r in check_direct(&fam, budget, seed)? {
            body.push(condition_cert(&r, sys, Some(&inst)));
        }
    } else {
        let rep = check_linear_forms(&fam, budget, seed)?;
        body.push(condition_cert(&rep.p1, sys, Some(&inst)));
        body.push(condition_cert(&rep.p2, sys, Some(&inst)));
        let mut cert = condition_cert(&rep.certificate, sys, Some(&inst));
        cert.witness = json!({ "kind": "none", "status": rep.certificate.status.to_string(), "psiNorm": num(rep.psi_norm) });
        body.push(cert);
        body.detail("etaPrime", rep.eta_prime.map(num).unwrap_or(Value::Null));
    }
    Ok(body)
}

/// `∫∏ f_e` by summing over every point of the product space.
pub fn enumerate_density(sys: &HypergraphSystem<f64>, fs: &[EdgeFunction<f64>]) -> f64 {
    let full = sys.full_face();
    let proj: Vec<Vec<usize>> = (0..fs.len()).map(|e| full.projection(&sys.edge_face(e))).collect();
    (0..full.size())
        .map(|x| full.weights()[x] * proj.iter().zip(fs).map(|(p, f)| f.values()[p[x]]).product::<f64>())
        .sum()
}

/// Points of the product space lying in every `F_e`.
pub fn intersection_size(sys: &HypergraphSystem<f64>, masks: &[Vec<bool>]) -> usize {
    let full = sys.full_face();
    let proj: Vec<Vec<usize>> = (0..masks.len()).map(|e| full.projection(&sys.edge_face(e))).collect();
    (0..full.size()).filter(|&x| proj.iter().zip(masks).all(|(p, m)| m[p[x]])).count()
}

pub fn count(g: &Global, s: &mut Session) -> Result<Body, Failure> {
    let inst = s.load(g)?;
    let budget = s.budget(g, Some(&inst));
    let fs = inst.functions()?;
    let density = product_density(&inst.system, &fs)?;
    let points = inst.system.full_face().size() as u64;
    let mut body = Body::default();
    let keys: Vec<String> = (0..fs.len()).map(|e| inst.edge_key(e)).collect();
    // Full enumeration as an independent check when the product space fits the budget.
    let check = (points <= budget).then(|| enumerate_density(&inst.system, &fs));
    body.push(Certificate::new(
        "density",
        Sense::Eq,
        check.unwrap_or(density),
        density,
        OracleMode::Exact,
        json!({ "edges": keys, "enumerated": check.is_some() }),
    ));
    body.detail("density", num(density));
    body.detail("points", json!(points));
    Ok(body)
}

pub fn remove(g: &Global, a: &RemoveArgs, s: &mut Session) -> Result<Body, Failure> {
    let inst = s.load(g)?;
    let seed = s.seed(g, Some(&inst));
    let budget = s.budget(g, Some(&inst));
    let fs = inst.functions()?;
    let params = &inst.file.params;
    let c = params.c.unwrap_or(1.0);
    let p = params.p.map(|e| e.0).unwrap_or(f64::INFINITY);
    let eta = params.eta.unwrap_or(0.05);
    let epsilon = a.epsilon.or(params.epsilon).unwrap_or(0.2);
    for (k, v) in [("zeta", a.zeta), ("alpha", a.alpha), ("deltaThreshold", a.delta_threshold), ("delta", a.delta)] {
        s.echo(k, v.map(num).unwrap_or(Value::Null));
    }
    s.echo("c", num(c));
    s.echo("p", exponent_json(p));
    s.echo("eta", num(eta));
    s.echo("epsilon", num(epsilon));
    let fam = match inst.family(c, eta, p)? {
        Some(f) => f,
        None => {
            let nu = (0..fs.len()).map(|e| EdgeFunction::constant(inst.system.edge_face(e), 1.0)).collect();
            PseudorandomFamily::with_unit_models(inst.system.clone(), nu, c, eta, p)?
        }
    };
    let knobs = RemovalKnobs {
        delta: a.delta,
        alpha: a.alpha,
        zeta: a.zeta,
        threshold: a.delta_threshold,
        dense_epsilon: None,
        caps: DecomposeCaps { max_stages: None, budget, seed },
        cut_budget: budget,
        ..RemovalKnobs::default()
    };
    let r = relative_removal(&fam, &fs, epsilon, &knobs)?;
    let sys = &inst.system;
    let mut body = Body::default();
    let f_json: Map<String, Value> =
        r.f_masks.iter().enumerate().map(|(e, m)| (inst.edge_key(e), inst.atoms(&sys.edge_face(e), m))).collect();
    let points = sys.full_face().size() as u64;
    let (size, mode) = if points <= budget {
        (intersection_size(sys, &r.f_masks) as f64, OracleMode::Exact)
    } else {
        (if r.empty_intersection { 0.0 } else { 1.0 }, OracleMode::Exact)
    };
    body.push(Certificate::new("emptyIntersection", Sense::Le, 0.0, size, mode, json!({ "F": f_json })));
    let mut gh = Map::new();
    for (e, (term, t)) in r.terms.iter().zip(&r.truncations).enumerate() {
        let key = inst.edge_key(e);
        let face = sys.edge_face(e);
        let w = json!({ "edge": key, "F": inst.atoms(&face, &r.f_masks[e]) });
        body.push(Certificate::new(format!("leftover[{key}]"), Sense::Le, epsilon, r.leftover[e], OracleMode::Exact, w.clone()));
        for (name, v) in [("t1", term.t1), ("t2", term.t2), ("t3", term.t3)] {
            body.push(Certificate::new(format!("{name}[{key}]"), Sense::Le, term.budget, v, OracleMode::Exact, w.clone()));
        }
        gh.insert(key, json!({ "g": nested(&face, t.g.values()), "h": nested(&face, t.h.values()) }));
    }
    let tr = &r.trace;
    body.detail(
        "trace",
        json!({
            "epsilon": num(tr.epsilon), "zeta": num(tr.zeta), "delta": num(tr.delta), "alpha": num(tr.alpha),
            "sigma": num(tr.sigma), "threshold": num(tr.threshold), "denseEpsilon": num(tr.dense_epsilon),
            "densityF": num(tr.density_f), "densityG": num(tr.density_g), "densityH": num(tr.density_h), "gap": num(tr.gap),
        }),
    );
    body.detail("truncations", Value::Object(gh));
    body.detail("removedMass", json!(r.dense.removed_mass.iter().map(|&m| num(m)).collect::<Vec<_>>()));
    body.detail("denseMode", json!(r.dense.mode.to_string()));
    body.detail("stages", json!(r.decomposition.stages));
    body.detail("lowerCells", json!(r.k));
    Ok(body)
}

/// `f ≤ ν` built from the support of `ν`, taken in seeded order until the mean
/// reaches `target`.
pub fn demo_function(nu: &ZnWeight<f64>, target: f64, seed: u64) -> Result<ZnWeight<f64>, Failure> {
    let mut support: Vec<usize> = (0..nu.n()).filter(|&x| nu.values()[x] > 0.0).collect();
    support.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5A5A_5A5A));
    let mut values = vec![0.0; nu.n()];
    let mut sum = 0.0;
    for x in support {
        if sum / nu.n() as f64 >= target {
            break;
        }
        values[x] = nu.values()[x];
        sum += values[x];
    }
    if sum / (nu.n() as f64) < target {
        return Err(input(format!("the majorant has mean {}, below the target {target}", nu.mean())));
    }
    Ok(ZnWeight::new(values)?)
}

pub fn zn_demo(g: &Global, a: &ZnDemoArgs, s: &mut Session) -> Result<Body, Failure> {
    let inst = match &g.input {
        Some(_) => Some(s.load(g)?),
        None => None,
    };
    let seed = s.seed(g, inst.as_ref());
    let budget = s.budget(g, inst.as_ref());
    s.echo("n", json!(a.n));
    s.echo("density", num(a.density));
    s.echo("deltaThreshold", num(a.delta_threshold));
    s.echo("check", json!(a.check));
    let params = cyclic_params(s, a.k, a.c, a.p, a.eta, budget, seed);
    let nu = gen_majorant::<f64>(a.n, a.density, MajorantKind::Set, seed)?;
    let f = demo_function(&nu, a.delta_threshold, seed)?;
    let rep = relative_szemeredi_demo(&nu, &f, a.k, a.delta_threshold, None)?;
    let fj = json!({ "f": f.values().iter().map(|&v| num(v)).collect::<Vec<_>>() });
    let mut body = Body::default();
    body.push(Certificate::new("meanF", Sense::Ge, a.delta_threshold, rep.mean_f, OracleMode::Exact, fj.clone()));
    body.push(Certificate::new("lambda", Sense::Gt, 0.0, rep.lambda, OracleMode::Exact, fj.clone()));
    if let Some(l) = rep.lambda_fft {
        body.push(Certificate::new("lambdaFft", Sense::Eq, rep.lambda, l, OracleMode::Exact, fj));
    }
    body.detail("lambdaNu", num(rep.lambda_nu));
    body.detail("denseModel", num(rep.dense_model));
    body.detail("meanNu", num(nu.mean()));
    body.detail("nu", json!(nu.values().iter().map(|&v| num(v)).collect::<Vec<_>>()));
    if a.check {
        cyclic_checks(&mut body, &nu, &params)?;
    }
    Ok(body)
}

pub fn schedule_cmd(g: &Global, a: &ScheduleArgs, s: &mut Session) -> Result<Body, Failure> {
    let inst = match &g.input {
        Some(_) => Some(s.load(g)?),
        None => None,
    };
    let params = inst.as_ref().map(|i| i.file.params.clone()).unwrap_or_default();
    let input = ScheduleInput {
        c: a.c.or(params.c).unwrap_or(1.0),
        p: a.p.or(params.p.map(|e| e.0)).unwrap_or(f64::INFINITY),
        sigma: a.sigma.or(params.sigma).unwrap_or(0.25),
        gamma: a.gamma,
        n: a.n.or(inst.as_ref().map(|i| i.system.n())).unwrap_or(3),
        r: a.r.or(inst.as_ref().map(|i| i.system.r())).unwrap_or(2),
        depth: a.depth,
    };
    let growth = parse_growth(&a.growth)?;
    for (k, v) in [("c", num(input.c)), ("p", num(input.p)), ("sigma", num(input.sigma)), ("gamma", num(input.gamma))] {
        s.echo(k, v);
    }
    s.echo("n", json!(input.n));
    s.echo("r", json!(input.r));
    s.echo("depth", json!(input.depth));
    s.echo("growth", json!(a.growth));
    let t = schedule(&input, &growth)?;
    let mut body = Body::default();
    let none = json!({ "kind": "closed-form" });
    body.push(Certificate::new("x", Sense::Eq, x_exponent(input.c, input.p), t.x, OracleMode::Exact, none.clone()));
    body.push(Certificate::new("pDagger", Sense::Eq, p_dagger(input.p), t.p_dagger, OracleMode::Exact, none.clone()));
    if let Some(l) = t.stage_count.value().filter(|&l| l < 2f64.powi(53)) {
        let exact = stage_count(input.c, input.p, input.sigma, input.n, input.r) as f64;
        body.push(Certificate::new("stageCount", Sense::Eq, exact, l.round(), OracleMode::Exact, none));
    }
    body.detail("q", num(t.q));
    body.detail("stageCount", log_json(&t.stage_count));
    body.detail("betaGamma", log_json(&t.beta_gamma));
    body.detail("thetaGamma", log_json(&t.theta_gamma));
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            json!({
                "m": r.m, "N": log_json(&r.n_m), "NExact": r.n_m_exact, "eta": log_json(&r.eta_m),
                "vartheta": log_json(&r.vartheta_m), "alphaGamma": log_json(&r.alpha_m_gamma), "etaGamma": log_json(&r.eta_m_gamma),
            })
        })
        .collect();
    body.detail("rows", Value::Array(rows));
    Ok(body)
}
