//! JSON problem description.
//!
//! ```json
//! {
//!   "grid": { "x": [0, 1], "n": 257 },
//!   "bc": "neumann",
//!   "A": "1+i", "b1": "-i", "b2": "0", "Q": "0",
//!   "constants": { "alpha_s": 1, "B_prime": 1 },
//!   "mode": "thm1.5"
//! }
//! ```
//!
//! Coefficients are DSL strings, plain numbers, or arrays with one entry per
//! node (row-major, `x` fastest); complex entries are `[re, im]` pairs.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use semigroup_core::constants::{Provenance, StructuralConstants, FIELD_NAMES};
use semigroup_core::fields::{
    Boundary, CoefficientSet, Grid, Mat2, MatrixField, ScalarField, Vec2, VectorField,
};
use semigroup_core::intervals::Mode;

use crate::dsl::{self, Coeff, ParseError, Point};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Parse { field: &'static str, source: ParseError },
    #[error("field `{field}`: {msg}")]
    Shape { field: &'static str, msg: String },
    #[error(transparent)]
    Core(#[from] semigroup_core::Error),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NodeCount {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    #[serde(default)]
    pub y: Option<[f64; 2]>,
    pub n: NodeCount,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    #[default]
    Dirichlet,
    Neumann,
}

impl From<Bc> for Boundary {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Dirichlet => Boundary::Dirichlet,
            Bc::Neumann => Boundary::Neumann,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Number(f64),
    Dsl(String),
    Nodal(Vec<Value>),
}

impl FieldSpec {
    fn zero() -> Self {
        FieldSpec::Number(0.0)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSpec,
    #[serde(default)]
    pub bc: Bc,
    #[serde(rename = "A", default = "one")]
    pub a: FieldSpec,
    #[serde(default = "FieldSpec::zero")]
    pub b1: FieldSpec,
    #[serde(default = "FieldSpec::zero")]
    pub b2: FieldSpec,
    #[serde(rename = "Q", default = "FieldSpec::zero")]
    pub q: FieldSpec,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    #[serde(default)]
    pub mode: Mode,
}

fn one() -> FieldSpec {
    FieldSpec::Number(1.0)
}

/// A ready-to-analyse problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub coefficients: CoefficientSet,
    pub declared: BTreeMap<String, f64>,
    pub mode: Mode,
}

impl Problem {
    /// `base` with the declared values written over it.
    pub fn apply_declared(&self, base: &StructuralConstants) -> Result<StructuralConstants, ConfigError> {
        let mut c = base.clone();
        for (name, &v) in &self.declared {
            c.set(name, v, Provenance::Declared)?;
        }
        Ok(c)
    }

    /// Only the declared values (the rest zero, marked declared).
    pub fn declared_constants(&self) -> Result<StructuralConstants, ConfigError> {
        let mut c = self.apply_declared(&StructuralConstants::default())?;
        c.declare_rest();
        c.grid = Some(*self.coefficients.grid());
        Ok(c)
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let ns: Vec<usize> = match &self.grid.n {
            NodeCount::One(n) => vec![*n],
            NodeCount::Many(v) => v.clone(),
        };
        let bc = self.bc.into();
        let [x0, x1] = self.grid.x;
        Ok(match (self.grid.y, ns.as_slice()) {
            (None, [n]) => Grid::new_1d(x0, x1, *n, bc)?,
            (Some([y0, y1]), [n]) => Grid::new_2d((x0, x1), (y0, y1), [*n, *n], bc)?,
            (Some([y0, y1]), [nx, ny]) => Grid::new_2d((x0, x1), (y0, y1), [*nx, *ny], bc)?,
            _ => {
                return Err(ConfigError::Shape {
                    field: "grid",
                    msg: "give `n` as one count, or two counts together with `y`".into(),
                })
            }
        })
    }

    pub fn build(&self) -> Result<Problem, ConfigError> {
        let grid = self.grid()?;
        let a = matrix_field(&grid, &self.a, "A")?;
        let b1 = vector_field(&grid, &self.b1, "b1")?;
        let b2 = vector_field(&grid, &self.b2, "b2")?;
        let q = scalar_field(&grid, &self.q, "Q")?;
        for name in self.constants.keys() {
            if !FIELD_NAMES.contains(&name.as_str()) {
                return Err(ConfigError::Shape {
                    field: "constants",
                    msg: format!("unknown constant `{name}` (known: {})", FIELD_NAMES.join(", ")),
                });
            }
        }
        Ok(Problem { coefficients: CoefficientSet::new(a, b1, b2, q)?, declared: self.constants.clone(), mode: self.mode })
    }
}

fn points(grid: &Grid) -> impl Iterator<Item = Point> + '_ {
    (0..grid.node_count()).map(|k| {
        let c = grid.coord(k);
        Point { x: c[0], y: c[1] }
    })
}

fn parse(field: &'static str, s: &str) -> Result<Coeff, ConfigError> {
    dsl::parse_coeff(s).map_err(|source| ConfigError::Parse { field, source })
}

fn shape(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Shape { field, msg: msg.into() }
}

fn nodal<'a>(grid: &Grid, field: &'static str, v: &'a [Value]) -> Result<&'a [Value], ConfigError> {
    if v.len() != grid.node_count() {
        return Err(shape(field, format!("{} nodal values for {} nodes", v.len(), grid.node_count())));
    }
    Ok(v)
}

fn complex(field: &'static str, v: &Value) -> Result<C64, ConfigError> {
    match v {
        Value::Number(n) => Ok(C64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(shape(field, format!("expected [re, im], found {v}"))),
        },
        _ => Err(shape(field, format!("expected a number or [re, im], found {v}"))),
    }
}

fn pair<'a>(field: &'static str, v: &'a Value) -> Result<[&'a Value; 2], ConfigError> {
    match v {
        Value::Array(p) if p.len() == 2 => Ok([&p[0], &p[1]]),
        _ => Err(shape(field, format!("expected a two-element array, found {v}"))),
    }
}

pub fn scalar_field(grid: &Grid, raw: &FieldSpec, field: &'static str) -> Result<ScalarField, ConfigError> {
    Ok(match raw {
        FieldSpec::Number(x) => ScalarField::constant(*grid, C64::new(*x, 0.0))?,
        FieldSpec::Dsl(s) => match parse(field, s)? {
            Coeff::Scalar(e) => ScalarField::new(*grid, points(grid).map(|p| e.eval(p)).collect())?,
            _ => return Err(shape(field, "expected a scalar expression")),
        },
        FieldSpec::Nodal(v) => {
            let vals = nodal(grid, field, v)?.iter().map(|x| complex(field, x)).collect::<Result<_, _>>()?;
            ScalarField::new(*grid, vals)?
        }
    })
}

pub fn vector_field(grid: &Grid, raw: &FieldSpec, field: &'static str) -> Result<VectorField, ConfigError> {
    let zero = C64::new(0.0, 0.0);
    let one_d = grid.dim() == 1;
    Ok(match raw {
        FieldSpec::Number(x) if one_d || *x == 0.0 => VectorField::constant(*grid, [C64::new(*x, 0.0), if one_d { zero } else { C64::new(*x, 0.0) }])?,
        FieldSpec::Number(_) => return Err(shape(field, "a scalar drift needs a one-dimensional grid; give [bx, by]")),
        FieldSpec::Dsl(s) => {
            let vals: Vec<Vec2> = match parse(field, s)? {
                Coeff::Scalar(e) if one_d => points(grid).map(|p| [e.eval(p), zero]).collect(),
                Coeff::Vector([a, b]) => points(grid).map(|p| [a.eval(p), b.eval(p)]).collect(),
                Coeff::Scalar(_) => return Err(shape(field, "a scalar drift needs a one-dimensional grid; give [bx, by]")),
                Coeff::Matrix(_) => return Err(shape(field, "expected a vector, found a matrix")),
            };
            VectorField::new(*grid, vals)?
        }
        FieldSpec::Nodal(v) => {
            let vals = nodal(grid, field, v)?
                .iter()
                .map(|x| {
                    if one_d {
                        Ok([complex(field, x)?, zero])
                    } else {
                        let [a, b] = pair(field, x)?;
                        Ok([complex(field, a)?, complex(field, b)?])
                    }
                })
                .collect::<Result<_, ConfigError>>()?;
            VectorField::new(*grid, vals)?
        }
    })
}

pub fn matrix_field(grid: &Grid, raw: &FieldSpec, field: &'static str) -> Result<MatrixField, ConfigError> {
    let zero = C64::new(0.0, 0.0);
    let diag = |z: C64| -> Mat2 { [[z, zero], [zero, z]] };
    Ok(match raw {
        FieldSpec::Number(x) => MatrixField::scaled_identity(*grid, C64::new(*x, 0.0))?,
        FieldSpec::Dsl(s) => {
            let vals: Vec<Mat2> = match parse(field, s)? {
                Coeff::Scalar(e) => points(grid).map(|p| diag(e.eval(p))).collect(),
                Coeff::Matrix([[a, b], [c, d]]) => {
                    points(grid).map(|p| [[a.eval(p), b.eval(p)], [c.eval(p), d.eval(p)]]).collect()
                }
                Coeff::Vector(_) => return Err(shape(field, "expected a scalar or a 2x2 matrix, found a vector")),
            };
            MatrixField::new(*grid, vals)?
        }
        FieldSpec::Nodal(v) => {
            let vals = nodal(grid, field, v)?
                .iter()
                .map(|x| match x {
                    Value::Array(rows) if rows.len() == 2 && rows.iter().all(|r| r.as_array().is_some_and(|r| r.len() == 2 && r.iter().any(|e| e.is_array()))) => {
                        let [r0, r1] = pair(field, x)?;
                        let [a, b] = pair(field, r0)?;
                        let [c, d] = pair(field, r1)?;
                        Ok([[complex(field, a)?, complex(field, b)?], [complex(field, c)?, complex(field, d)?]])
                    }
                    _ => Ok(diag(complex(field, x)?)),
                })
                .collect::<Result<_, ConfigError>>()?;
            MatrixField::new(*grid, vals)?
        }
    })
}
