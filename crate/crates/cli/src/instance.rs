//! The JSON instance format. Vertices and edges are 1-based in the file and
//! 0-based once loaded.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use hypereg::measure::{DiscreteSpace, EdgeFunction, Face, HypergraphSystem};
use hypereg::pseudorandom::PseudorandomFamily;
use hypereg::geometry::{BoxCell, EdgeGeometry};
use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};
use std::sync::Arc;

use crate::fail::{input, Failure};

/// Probabilities must sum to 1 within this before they are renormalized.
pub const PROB_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub spaces: Vec<SpaceSpec>,
    pub edges: Vec<Vec<usize>>,
    #[serde(default)]
    pub functions: BTreeMap<String, Value>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub params: ParamsSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    /// Labels; numbers are accepted and kept as their decimal text.
    #[serde(default)]
    pub points: Option<Vec<Value>>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub nu: BTreeMap<String, Value>,
    #[serde(default)]
    pub psi: Option<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(rename = "C", alias = "c")]
    pub c: Option<f64>,
    pub p: Option<Exponent>,
    pub eta: Option<f64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

/// An exponent `p > 1`, written as a number or as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

pub fn parse_exponent(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let p = match t.as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => t.parse::<f64>().map_err(|_| format!("cannot read exponent {s:?}"))?,
    };
    if p > 1.0 {
        Ok(p)
    } else {
        Err(format!("exponent p = {p} must exceed 1"))
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(x) if x > 1.0 => x,
            Raw::Num(x) => return Err(serde::de::Error::custom(format!("exponent p = {x} must exceed 1"))),
            Raw::Text(s) => parse_exponent(&s).map_err(serde::de::Error::custom)?,
        };
        Ok(Exponent(p))
    }
}

pub struct Instance {
    pub file: InstanceFile,
    pub bytes: Vec<u8>,
    pub system: HypergraphSystem<f64>,
    pub labels: Vec<Vec<String>>,
}

fn label_text(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("point label {other} is neither a string nor a number")),
    }
}

/// Edge key: sorted comma-joined 1-based indices.
pub fn key_of(edge: &[usize]) -> String {
    edge.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn flatten(v: &Value, dims: &[usize], out: &mut Vec<f64>, at: &mut Vec<usize>) -> Result<(), String> {
    match dims.split_first() {
        None => match v.as_f64() {
            Some(x) => {
                out.push(x);
                Ok(())
            }
            None => Err(format!("expected a number at {at:?}, found {v}")),
        },
        Some((&m, rest)) => {
            let arr = v.as_array().ok_or_else(|| format!("expected an array of length {m} at {at:?}"))?;
            if arr.len() != m {
                return Err(format!("array of length {} at {at:?}, expected {m}", arr.len()));
            }
            for (i, item) in arr.iter().enumerate() {
                at.push(i);
                flatten(item, rest, out, at)?;
                at.pop();
            }
            Ok(())
        }
    }
}

/// Nested array in edge coordinate order, row-major.
pub fn nested(face: &Face<f64>, values: &[f64]) -> Value {
    fn build(dims: &[usize], values: &[f64]) -> Value {
        match dims.split_first() {
            None => crate::report::num(values[0]),
            Some((_, rest)) => {
                let stride: usize = rest.iter().product();
                Value::Array(values.chunks(stride).map(|c| build(rest, c)).collect())
            }
        }
    }
    build(&face.dims(), values)
}

impl Instance {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let bytes = std::fs::read(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(bytes)
    }

    pub fn parse(bytes: Vec<u8>) -> Result<Self, Failure> {
        let file: InstanceFile = serde_json::from_slice(&bytes).map_err(|e| input(format!("instance: {e}")))?;
        let mut spaces = Vec::with_capacity(file.spaces.len());
        let mut labels = Vec::with_capacity(file.spaces.len());
        for (i, s) in file.spaces.iter().enumerate() {
            let names: Vec<String> = match &s.points {
                Some(pts) => pts.iter().map(label_text).collect::<Result<_, _>>().map_err(|e| input(format!("space {}: {e}", i + 1)))?,
                None => (0..s.probs.len()).map(|k| k.to_string()).collect(),
            };
            // Validate at the file tolerance, then renormalize.
            DiscreteSpace::with_tolerance(i + 1, names.clone(), s.probs.clone(), PROB_TOLERANCE)?;
            let sum: f64 = s.probs.iter().sum();
            spaces.push(DiscreteSpace::new(names.clone(), s.probs.iter().map(|p| p / sum).collect())?);
            labels.push(names);
        }
        let n = spaces.len();
        let mut edges = Vec::with_capacity(file.edges.len());
        for (k, e) in file.edges.iter().enumerate() {
            if let Some(&bad) = e.iter().find(|&&v| v == 0 || v > n) {
                return Err(input(format!("edge {}: vertex {bad} outside 1..={n}", k + 1)));
            }
            let mut e0: Vec<usize> = e.iter().map(|v| v - 1).collect();
            e0.sort_unstable();
            edges.push(e0);
        }
        let system = HypergraphSystem::new(spaces, edges)?;
        let inst = Self { file, bytes, system, labels };
        for key in inst.file.functions.keys() {
            inst.edge_index(key)?;
        }
        if let Some(fam) = &inst.file.family {
            for key in fam.nu.keys().chain(fam.psi.iter().flat_map(|m| m.keys())) {
                inst.edge_index(key)?;
            }
        }
        Ok(inst)
    }

    pub fn edge_key(&self, e: usize) -> String {
        key_of(&self.system.edges()[e])
    }

    /// Index of the edge named by a key such as `"2,1"` or `"1,2"`.
    pub fn edge_index(&self, key: &str) -> Result<usize, Failure> {
        let mut vs = key
            .split(',')
            .map(|t| t.trim().parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| input(format!("bad edge key {key:?}")))?;
        vs.sort_unstable();
        self.system.edge_index(&vs).ok_or_else(|| input(format!("edge {key:?} is not an edge of the instance")))
    }

    fn table(&self, map: &BTreeMap<String, Value>, what: &str, e: usize) -> Result<Option<EdgeFunction<f64>>, Failure> {
        let face = self.system.edge_face(e);
        let entry = map.iter().find(|(k, _)| self.edge_index(k).ok() == Some(e));
        let Some((key, v)) = entry else { return Ok(None) };
        let mut out = Vec::with_capacity(face.size());
        flatten(v, &face.dims(), &mut out, &mut Vec::new()).map_err(|m| input(format!("{what} on edge {key}: {m}")))?;
        Ok(Some(EdgeFunction::new(face, out)?))
    }

    fn all(&self, map: &BTreeMap<String, Value>, what: &str) -> Result<Vec<EdgeFunction<f64>>, Failure> {
        (0..self.system.edges().len())
            .map(|e| self.table(map, what, e)?.ok_or_else(|| input(format!("no {what} for edge {}", self.edge_key(e)))))
            .collect()
    }

    /// Row-major values of a nested array laid out on `face`.
    pub fn values_from_nested(&self, face: &Face<f64>, v: &Value) -> Result<Vec<f64>, Failure> {
        let mut out = Vec::with_capacity(face.size());
        flatten(v, &face.dims(), &mut out, &mut Vec::new()).map_err(input)?;
        Ok(out)
    }

    pub fn functions(&self) -> Result<Vec<EdgeFunction<f64>>, Failure> {
        if self.file.functions.is_empty() {
            return Err(input("instance has no functions"));
        }
        self.all(&self.file.functions, "function")
    }

    /// The family block, with `ψ ≡ 1` where no model is given.
    pub fn family(&self, c: f64, eta: f64, p: f64) -> Result<Option<PseudorandomFamily<f64>>, Failure> {
        let Some(spec) = &self.file.family else { return Ok(None) };
        let nu = self.all(&spec.nu, "ν")?;
        let psi = (0..nu.len())
            .map(|e| {
                let given = match &spec.psi {
                    Some(m) => self.table(m, "ψ", e)?,
                    None => None,
                };
                Ok(given.unwrap_or_else(|| EdgeFunction::constant(self.system.edge_face(e), 1.0)))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        Ok(Some(PseudorandomFamily::new(self.system.clone(), nu, psi, c, eta, p)?))
    }

    /// Atom label tuples of the atoms of `face` selected by `mask`.
    pub fn atoms(&self, face: &Face<f64>, mask: &[bool]) -> Value {
        Value::Array(
            (0..face.size())
                .filter(|&x| mask[x])
                .map(|x| {
                    let d = face.unflatten(x);
                    Value::Array(face.coords().iter().zip(d).map(|(&c, di)| Value::String(self.labels[c][di].clone())).collect())
                })
                .collect(),
        )
    }

    pub fn mask_from_atoms(&self, face: &Face<f64>, atoms: &Value) -> Result<Vec<bool>, Failure> {
        let index: Vec<HashMap<&str, usize>> = face
            .coords()
            .iter()
            .map(|&c| self.labels[c].iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect())
            .collect();
        let mut mask = vec![false; face.size()];
        for a in atoms.as_array().ok_or_else(|| input("atom list must be an array"))? {
            let parts = a.as_array().filter(|p| p.len() == index.len()).ok_or_else(|| input(format!("bad atom {a}")))?;
            let digits = parts
                .iter()
                .zip(&index)
                .map(|(p, ix)| p.as_str().and_then(|s| ix.get(s).copied()))
                .collect::<Option<Vec<usize>>>()
                .ok_or_else(|| input(format!("unknown atom {a}")))?;
            mask[face.flatten(&digits)] = true;
        }
        Ok(mask)
    }

    pub fn cell_json(&self, cell: &BoxCell<f64>) -> Value {
        let faces: Vec<Value> = cell
            .geometry()
            .boundary()
            .iter()
            .zip(cell.masks())
            .map(|(f, m)| json!({ "coords": f.coords().iter().map(|c| c + 1).collect::<Vec<_>>(), "atoms": self.atoms(f, m) }))
            .collect();
        json!({ "faces": faces })
    }

    pub fn cell_from_json(&self, geom: &Arc<EdgeGeometry<f64>>, v: &Value) -> Result<BoxCell<f64>, Failure> {
        let faces = v["faces"].as_array().ok_or_else(|| input("cell witness has no faces"))?;
        if faces.len() != geom.boundary().len() {
            return Err(input("cell witness has the wrong number of faces"));
        }
        let masks = geom
            .boundary()
            .iter()
            .zip(faces)
            .map(|(f, fv)| self.mask_from_atoms(f, &fv["atoms"]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BoxCell::new(Arc::clone(geom), masks)?)
    }
}
