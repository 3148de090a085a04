//! Re-checks a report from its echoed inputs and witnesses. Values are
//! recomputed by direct sums; the only search left is an exact cut norm for
//! `unfCut`, and only when it fits the budget.

use std::path::PathBuf;

use clap::Args;
use hypereg::counting::product_density;
use hypereg::geometry::EdgeGeometry;
use hypereg::measure::EdgeFunction;
use hypereg::norms::{cell_count, cut_norm};
use hypereg::params::p_dagger;
use hypereg::pseudorandom::{marginal, p1_integral, p2_integral, PseudorandomFamily};
use hypereg::regularity::{schedule, ScheduleInput};
use hypereg::zn::{ap_average, gen_majorant, zn_family, ApMode, MajorantKind, ZnPseudoParams, ZnWeight};
use hypereg::OracleMode;
use serde_json::{json, Value};

use crate::commands::{enumerate_density, intersection_size, parse_growth, partition_from_json, Global, Session};
use crate::fail::{input, Failure};
use crate::instance::Instance;
use crate::report::{digest, read_num, Body, Certificate, Sense};

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Report to re-check.
    #[arg(long)]
    pub report: PathBuf,
}

struct Ctx<'a> {
    report: &'a Value,
    inputs: &'a Value,
    inst: Option<&'a Instance>,
}

fn field(v: &Value, key: &str) -> Result<f64, Failure> {
    read_num(&v[key]).ok_or_else(|| input(format!("report: missing number {key:?}")))
}

fn text<'v>(v: &'v Value, key: &str) -> Result<&'v str, Failure> {
    v[key].as_str().ok_or_else(|| input(format!("report: missing string {key:?}")))
}

impl Ctx<'_> {
    fn inst(&self) -> Result<&Instance, Failure> {
        self.inst.ok_or_else(|| input("this report needs --input to be re-checked"))
    }

    fn num(&self, key: &str) -> Result<f64, Failure> {
        field(self.inputs, key)
    }

    fn uint(&self, key: &str) -> Result<u64, Failure> {
        self.inputs[key].as_u64().ok_or_else(|| input(format!("report: missing integer input {key:?}")))
    }

    fn edge_fn(&self, key: &str) -> Result<(usize, EdgeFunction<f64>), Failure> {
        let inst = self.inst()?;
        let e = inst.edge_index(key)?;
        Ok((e, inst.functions()?.swap_remove(e)))
    }

    fn complement(&self, e: usize, atoms: &Value) -> Result<Vec<bool>, Failure> {
        let inst = self.inst()?;
        Ok(inst.mask_from_atoms(&inst.system.edge_face(e), atoms)?.into_iter().map(|b| !b).collect())
    }

    fn cyclic_family(&self) -> Result<PseudorandomFamily<f64>, Failure> {
        let nu = gen_majorant::<f64>(self.uint("n")? as usize, self.num("density")?, MajorantKind::Set, self.uint("seed")?)?;
        let params = ZnPseudoParams {
            k: self.uint("k")? as usize,
            c: self.num("c")?,
            p: self.num("p")?,
            eta: self.num("eta")?,
            budget: self.uint("budget")?,
            seed: self.uint("seed")?,
        };
        Ok(zn_family(&nu, None, &params)?)
    }

    /// The quantity a condition witness claims, recomputed on `fam`.
    fn condition(&self, fam: &PseudorandomFamily<f64>, w: &Value) -> Result<Option<f64>, Failure> {
        let sys = fam.system();
        let edge = |k: &Value| -> Result<usize, Failure> {
            let key = k.as_str().ok_or_else(|| input("witness edge must be a key"))?;
            let mut vs: Vec<usize> = key.split(',').filter_map(|t| t.parse::<usize>().ok()).map(|v| v - 1).collect();
            vs.sort_unstable();
            sys.edge_index(&vs).ok_or_else(|| input(format!("witness names unknown edge {key}")))
        };
        let edges = |v: &Value| -> Result<Vec<usize>, Failure> {
            v.as_array().ok_or_else(|| input("witness edge list must be an array"))?.iter().map(edge).collect()
        };
        let value = match text(w, "kind")? {
            "choice" => {
                let exps: Vec<Vec<bool>> = w["exponents"]
                    .as_array()
                    .ok_or_else(|| input("choice witness needs exponents"))?
                    .iter()
                    .map(|row| row.as_array().map(|r| r.iter().map(|b| b.as_u64() == Some(1)).collect()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| input("exponent rows must be 0/1 arrays"))?;
                match &w["edge"] {
                    Value::Null => p1_integral(fam, &exps)?,
                    k => p2_integral(fam, edge(k)?, &exps)?,
                }
            }
            "subfamily" => fam.subfamily_density(&edges(&w["edges"])?)?,
            "marginal" => {
                let ell = fam.ell() as i32;
                marginal(fam, edge(&w["edge"])?, &edges(&w["subfamily"])?)?.map(|x| x.powi(ell))?.mean()
            }
            "cell" => {
                let e = edge(&w["edge"])?;
                let inst = self.inst()?;
                let geom = EdgeGeometry::new(sys.edge_face(e));
                let cell = inst.cell_from_json(&geom, &w["cell"])?;
                fam.nu()[e].sub(&fam.psi()[e])?.integrate(Some(&cell))?.abs()
            }
            _ => return Ok(None),
        };
        Ok(Some(value))
    }

    fn pseudo(&self, w: &Value) -> Result<Option<(f64, f64)>, Failure> {
        let fam = match text(self.inputs, "route").unwrap_or("cyclic") {
            "cyclic" => {
                if self.report["details"]["exact"] != json!(true) {
                    return Ok(None);
                }
                self.cyclic_family()?
            }
            _ => {
                let inst = self.inst()?;
                inst.family(self.num("c")?, self.num("eta")?, self.num("p")?)?
                    .ok_or_else(|| input("instance has no family block"))?
            }
        };
        let target = field(w, "value");
        Ok(match (self.condition(&fam, w)?, target) {
            (Some(v), Ok(t)) => Some((t, v)),
            _ => None,
        })
    }

    /// `(claimed, recomputed)` for one certificate, or `None` when it cannot be
    /// re-derived without a search.
    fn recheck(&self, stage: &str, cert: &Value) -> Result<Option<(f64, f64)>, Failure> {
        let name = text(cert, "name")?;
        let achieved = field(cert, "achieved")?;
        let w = &cert["witness"];
        let base = name.split('[').next().unwrap_or(name);
        let got = match (stage, base) {
            ("cutnorm", "cutNorm" | "uniform") => {
                let (e, f) = self.edge_fn(text(w, "edge")?)?;
                let geom = EdgeGeometry::new(self.inst()?.system.edge_face(e));
                let cell = self.inst()?.cell_from_json(&geom, &w["cell"])?;
                f.integrate(Some(&cell))?.abs()
            }
            ("decompose", "strNorm" | "errNorm" | "unfCut") => {
                let (e, f) = self.edge_fn(text(w, "edge")?)?;
                let p = self.num("p")?;
                let geom = EdgeGeometry::new(self.inst()?.system.edge_face(e));
                let part = |k: &str| partition_from_json(self.inst()?, &geom, &w[k]);
                match base {
                    "strNorm" => f.cond_exp(&part("P")?)?.lp_norm(p)?,
                    "errNorm" => f.cond_exp(&part("Q")?)?.sub(&f.cond_exp(&part("P")?)?)?.lp_norm(p_dagger(p))?,
                    _ => {
                        let budget = self.uint("budget")?;
                        if cell_count(&geom) > budget as f64 {
                            return Ok(None);
                        }
                        cut_norm(&f.sub(&f.cond_exp(&part("Q")?)?)?, OracleMode::Exact, 0, budget)?.value
                    }
                }
            }
            ("count", "density") => {
                let inst = self.inst()?;
                let fs = inst.functions()?;
                if inst.system.full_face().size() as u64 <= self.uint("budget")? {
                    enumerate_density(&inst.system, &fs)
                } else {
                    product_density(&inst.system, &fs)?
                }
            }
            ("remove", "emptyIntersection") => {
                let inst = self.inst()?;
                let f = w["F"].as_object().ok_or_else(|| input("witness F must map edges to atoms"))?;
                let mut masks = vec![Vec::new(); inst.system.edges().len()];
                for (k, atoms) in f {
                    let e = inst.edge_index(k)?;
                    masks[e] = inst.mask_from_atoms(&inst.system.edge_face(e), atoms)?;
                }
                intersection_size(&inst.system, &masks) as f64
            }
            ("remove", "leftover" | "t1" | "t2" | "t3") => {
                let key = text(w, "edge")?;
                let (e, f) = self.edge_fn(key)?;
                let out = self.complement(e, &w["F"])?;
                let face = f.face().clone();
                let inst = self.inst()?;
                let tr = &self.report["details"]["truncations"][key];
                let g = EdgeFunction::new(face.clone(), inst.values_from_nested(&face, &tr["g"])?)?;
                let h = EdgeFunction::new(face.clone(), inst.values_from_nested(&face, &tr["h"])?)?;
                match base {
                    "leftover" => f.integrate_mask(Some(&out)),
                    "t1" => h.integrate_mask(Some(&out)),
                    "t2" => g.sub(&h)?.integrate_mask(Some(&out)).abs(),
                    _ => f.sub(&g)?.integrate_mask(Some(&out)).abs(),
                }
            }
            ("zn-demo", "meanF" | "lambda" | "lambdaFft") => {
                let vals = w["f"]
                    .as_array()
                    .ok_or_else(|| input("witness f must be an array"))?
                    .iter()
                    .map(read_num)
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| input("witness f must hold numbers"))?;
                let f = ZnWeight::new(vals)?;
                let k = self.uint("k")? as usize;
                match base {
                    "meanF" => f.mean(),
                    "lambda" => ap_average(&f, k, ApMode::Direct)?,
                    _ => ap_average(&f, 3, ApMode::Fft)?,
                }
            }
            ("check-pseudo" | "zn-demo", "P1" | "P2" | "C1" | "C2a" | "C3") => return self.pseudo(w),
            ("schedule", "x" | "pDagger" | "stageCount") => {
                let input = ScheduleInput {
                    c: self.num("c")?,
                    p: self.num("p")?,
                    sigma: self.num("sigma")?,
                    gamma: self.num("gamma")?,
                    n: self.uint("n")? as usize,
                    r: self.uint("r")? as usize,
                    depth: self.uint("depth")? as usize,
                };
                let t = schedule(&input, &parse_growth(text(self.inputs, "growth")?)?)?;
                match base {
                    "x" => t.x,
                    "pDagger" => t.p_dagger,
                    _ => match t.stage_count.value() {
                        Some(v) => v.round(),
                        None => return Ok(None),
                    },
                }
            }
            _ => return Ok(None),
        };
        Ok(Some((achieved, got)))
    }
}

pub fn verify(g: &Global, a: &VerifyArgs, s: &mut Session) -> Result<Body, Failure> {
    let bytes = std::fs::read(&a.report).map_err(|e| input(format!("cannot read {}: {e}", a.report.display())))?;
    let report: Value = serde_json::from_slice(&bytes).map_err(|e| input(format!("report: {e}")))?;
    let stage = text(&report, "stage")?.to_string();
    s.echo("report", json!(crate::report::digest(Some(&bytes), &Value::Null)));
    s.echo("stage", json!(stage));
    let inst = match &g.input {
        Some(_) => Some(s.load(g)?),
        None => None,
    };
    let inputs = &report["inputs"];
    let ctx = Ctx { report: &report, inputs, inst: inst.as_ref() };

    let mut body = Body::default();
    let claimed = text(&report, "inputsDigest")?;
    let ours = digest(inst.as_ref().map(|i| i.bytes.as_slice()), inputs);
    body.push(Certificate::new(
        "inputsDigest",
        Sense::Eq,
        1.0,
        if claimed == ours { 1.0 } else { 0.0 },
        OracleMode::Exact,
        json!({ "claimed": claimed, "recomputed": ours }),
    ));

    let mut unchecked = Vec::new();
    for cert in report["certificates"].as_array().ok_or_else(|| input("report: certificates must be an array"))? {
        let name = text(cert, "name")?.to_string();
        let sense = Sense::parse(text(cert, "sense")?).ok_or_else(|| input(format!("{name}: unknown sense")))?;
        let stated = cert["holds"].as_bool().ok_or_else(|| input(format!("{name}: missing holds")))?;
        let sampled = text(cert, "oracleMode")? != "exact";
        // Condition checks carry their own status; for the rest the stated
        // verdict must follow from achieved and bound.
        let consistent = sampled
            || cert["witness"]["status"].is_string()
            || sense.holds(field(cert, "achieved")?, field(cert, "bound")?) == stated;
        match ctx.recheck(&stage, cert)? {
            Some((claim, got)) => {
                let mut c = Certificate::new(
                    format!("recheck:{name}"),
                    Sense::Eq,
                    claim,
                    got,
                    OracleMode::Exact,
                    json!({ "stated": stated }),
                );
                c.holds &= consistent;
                body.push(c);
            }
            None => {
                if !consistent {
                    body.push(Certificate::new(format!("recheck:{name}"), Sense::Eq, 1.0, 0.0, OracleMode::Exact, json!({ "stated": stated })));
                }
                unchecked.push(json!(name));
            }
        }
    }
    body.detail("unchecked", Value::Array(unchecked));
    body.detail("originalExitCode", report["exitCode"].clone());
    Ok(body)
}
