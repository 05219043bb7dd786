//! Model files in TOML and observation series in CSV.
//!
//! Model file keys: `n`, `m`, `a` (rows), `alpha` (one matrix per positive
//! coordinate), `b`, `beta` (drift column multiplying each `x_i`), `c`,
//! `gamma`, `l`, `lambda`, and an optional `[[jumps]]` array. Indices are
//! zero-based.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JumpKind, JumpLaw, JumpSpec, ModelSpec, StateSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n: usize,
    m: usize,
    a: Vec<Vec<f64>>,
    #[serde(default)]
    alpha: Vec<Vec<Vec<f64>>>,
    b: Vec<f64>,
    beta: Vec<Vec<f64>>,
    #[serde(default)]
    c: f64,
    #[serde(default)]
    gamma: Vec<f64>,
    #[serde(default)]
    l: f64,
    lambda: Vec<f64>,
    #[serde(default)]
    jumps: Vec<JumpFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpFile {
    /// `constant` or `linear`
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    intensity: f64,
    /// `exponential` or `point_mass`
    law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coord: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    at: Option<Vec<f64>>,
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be a {n}x{n} array of rows")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::Config(format!("{what} must have length {n}, got {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn rows_of(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    mat.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ModelFile {
    fn into_spec(self) -> Result<ModelSpec> {
        let space = StateSpace::new(self.n, self.m).map_err(|e| Error::Config(e.to_string()))?;
        let n = self.n;
        let mut spec = ModelSpec::zero(space);
        spec.a = matrix(&self.a, n, "a")?;
        if self.alpha.len() != self.m {
            return Err(Error::Config(format!("alpha must list {} matrices, got {}", self.m, self.alpha.len())));
        }
        for (i, al) in self.alpha.iter().enumerate() {
            spec.alpha[i] = matrix(al, n, &format!("alpha[{i}]"))?;
        }
        spec.b = vector(&self.b, n, "b")?;
        if self.beta.len() != n {
            return Err(Error::Config(format!("beta must list {n} columns, got {}", self.beta.len())));
        }
        for (i, col) in self.beta.iter().enumerate() {
            spec.beta[i] = vector(col, n, &format!("beta[{i}]"))?;
        }
        spec.c = self.c;
        // omitted gamma means zero
        if !self.gamma.is_empty() {
            if self.gamma.len() != self.m {
                return Err(Error::Config(format!("gamma must have length {}, got {}", self.m, self.gamma.len())));
            }
            spec.gamma = self.gamma.clone();
        }
        spec.l = self.l;
        spec.lambda = vector(&self.lambda, n, "lambda")?;
        for (k, j) in self.jumps.into_iter().enumerate() {
            let kind = match (j.kind.as_str(), j.index) {
                ("constant", None) => JumpKind::Constant,
                ("linear", Some(i)) => JumpKind::Linear(i),
                _ => return Err(Error::Config(format!("jump {k}: kind must be 'constant' or 'linear' with an index"))),
            };
            let law = match (j.law.as_str(), j.coord, j.eta, j.at) {
                ("exponential", Some(coord), Some(eta), None) => JumpLaw::Exponential { coord, eta },
                ("point_mass", None, None, Some(at)) => JumpLaw::PointMass { at },
                _ => {
                    return Err(Error::Config(format!(
                        "jump {k}: law must be 'exponential' with coord and eta, or 'point_mass' with at"
                    )))
                }
            };
            spec.jumps.push(JumpSpec { kind, intensity: j.intensity, law });
        }
        spec.check_structure()?;
        Ok(spec)
    }

    fn from_spec(spec: &ModelSpec) -> Self {
        let jumps = spec
            .jumps
            .iter()
            .map(|j| {
                let (kind, index) = match j.kind {
                    JumpKind::Constant => ("constant", None),
                    JumpKind::Linear(i) => ("linear", Some(i)),
                };
                let (law, coord, eta, at) = match &j.law {
                    JumpLaw::Exponential { coord, eta } => ("exponential", Some(*coord), Some(*eta), None),
                    JumpLaw::PointMass { at } => ("point_mass", None, None, Some(at.clone())),
                };
                JumpFile { kind: kind.into(), index, intensity: j.intensity, law: law.into(), coord, eta, at }
            })
            .collect();
        Self {
            n: spec.n(),
            m: spec.m(),
            a: rows_of(&spec.a),
            alpha: spec.alpha.iter().map(rows_of).collect(),
            b: spec.b.iter().copied().collect(),
            beta: spec.beta.iter().map(|c| c.iter().copied().collect()).collect(),
            c: spec.c,
            gamma: spec.gamma.clone(),
            l: spec.l,
            lambda: spec.lambda.iter().copied().collect(),
            jumps,
        }
    }
}

pub fn model_from_toml(text: &str) -> Result<ModelSpec> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    file.into_spec()
}

pub fn model_to_toml(spec: &ModelSpec) -> Result<String> {
    toml::to_string(&ModelFile::from_spec(spec)).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    model_from_toml(&text)
}

/// Observation series with columns `time, x_1, .., x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    /// One row per observation.
    pub values: Vec<Vec<f64>>,
}

impl Series {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// The common spacing of the time column, if uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let dt = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        let ok = dt > 0.0 && self.times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.max(1.0));
        ok.then_some(dt)
    }
}

pub fn read_series<R: Read>(reader: R) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "time" {
        return Err(Error::Config("series header must be 'time,x_1,..,x_N'".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let parsed: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("row {}: {e}", line + 1)))?;
        if parsed.len() != headers.len() {
            return Err(Error::Config(format!("row {} has {} fields, expected {}", line + 1, parsed.len(), headers.len())));
        }
        times.push(parsed[0]);
        values.push(parsed[1..].to_vec());
    }
    if times.is_empty() {
        return Err(Error::Config("series has no rows".into()));
    }
    Ok(Series { times, values })
}

pub fn load_series(path: &Path) -> Result<Series> {
    let file = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    read_series(file)
}

/// A real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const VASICEK: &str = r#"
n = 1
m = 0
a = [[0.005]]
b = [0.05]
beta = [[-0.5]]
lambda = [1.0]
"#;

    #[test]
    fn parses_minimal_file() {
        let spec = model_from_toml(VASICEK).unwrap();
        let mut expected = ModelSpec::vasicek(0.05, -0.5, 0.1);
        expected.a[(0, 0)] = 0.005;
        assert_eq!(spec, expected);
    }

    #[test]
    fn round_trip_with_jumps() {
        let mut spec = ModelSpec::zero(StateSpace::new(2, 1).unwrap());
        spec.alpha[0][(0, 0)] = 0.5;
        spec.alpha[0][(1, 1)] = 0.1 / 3.0;
        spec.a[(1, 1)] = 0.5;
        spec.b[0] = 0.3;
        spec.beta[0][0] = -1.1;
        spec.beta[0][1] = 0.2;
        spec.beta[1][1] = -0.7;
        spec.gamma[0] = 0.01;
        spec.l = 0.02;
        spec.lambda = DVector::from_vec(vec![1.0, 1.0]);
        spec.jumps.push(JumpSpec { kind: JumpKind::Linear(0), intensity: 0.4, law: JumpLaw::Exponential { coord: 0, eta: 20.0 } });
        spec.jumps.push(JumpSpec { kind: JumpKind::Constant, intensity: 0.1, law: JumpLaw::PointMass { at: vec![0.0, -0.03] } });
        let text = model_to_toml(&spec).unwrap();
        assert_eq!(model_from_toml(&text).unwrap(), spec);
    }

    #[test]
    fn rejects_bad_shapes_and_keys() {
        assert!(model_from_toml(&VASICEK.replace("b = [0.05]", "b = [0.05, 1.0]")).is_err());
        assert!(model_from_toml(&format!("{VASICEK}\nextra = 1\n")).is_err());
    }

    #[test]
    fn series_reader() {
        let s = read_series("time,x_1\n0,0.1\n0.5,0.2\n1.0,0.15\n".as_bytes()).unwrap();
        assert_eq!(s.column(0), vec![0.1, 0.2, 0.15]);
        assert_eq!(s.uniform_step(), Some(0.5));
        assert!(read_series("t,x\n0,1\n".as_bytes()).is_err());
    }
}
