//! Resolution of `--field`, `--solution` and equation spec arguments.
//!
//! A field argument is a corpus id, `id:rhs` or `id:reference` for the
//! entry's right-hand side or closed-form envelope, or a JSON file holding
//! a grid header, an envelope report (its final grid) or a polynomial:
//!
//! ```json
//! {"polynomial": [[1.0, 2, 0, 0], [2.0, 0, 0, 2]], "certificate": {"c1": 1.0, "c2": 0.5}}
//! ```
//!
//! Each row is `[c, i, j, k]` for the term `c·xⁱ yʲ zᵏ`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use hconvex_core::corpus;
use hconvex_core::fields::{Coercivity, FnField, GridField, Polynomial, ScalarField};
use hconvex_core::pde::{Equation, Rhs, SemilinearSpec};
use hconvex_core::Error;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::gridio::GridHeader;

pub enum FieldSource {
    Analytic(Arc<dyn ScalarField>),
    Grid(GridField),
}

impl FieldSource {
    pub fn as_field(&self) -> &dyn ScalarField {
        match self {
            FieldSource::Analytic(f) => f.as_ref(),
            FieldSource::Grid(g) => g,
        }
    }

    pub fn into_arc(self) -> Arc<dyn ScalarField> {
        match self {
            FieldSource::Analytic(f) => f,
            FieldSource::Grid(g) => Arc::new(g),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialFile {
    polynomial: Vec<[f64; 4]>,
    #[serde(default)]
    certificate: Option<Coercivity>,
    #[serde(default)]
    lower_bound: Option<f64>,
}

fn power(v: f64) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(CliError::Format(format!("monomial exponent {v} is not a non-negative integer")))
    }
}

fn polynomial_field(p: PolynomialFile) -> Result<Arc<dyn ScalarField>> {
    let table = p
        .polynomial
        .iter()
        .map(|&[c, i, j, k]| Ok((c, power(i)?, power(j)?, power(k)?)))
        .collect::<Result<Vec<_>>>()?;
    let poly = Polynomial::from_table(&table);
    let mut f = FnField::new(move |q| poly.eval(q));
    if let Some(c) = p.certificate {
        f = f.with_certificate(c);
    }
    if let Some(m) = p.lower_bound {
        f = f.with_lower_bound(m);
    }
    Ok(Arc::new(f))
}

fn corpus_field(arg: &str) -> Result<Option<Arc<dyn ScalarField>>> {
    let (id, part) = match arg.split_once(':') {
        Some((id, part)) => (id, Some(part)),
        None => (arg, None),
    };
    if !corpus::IDS.contains(&id) {
        return Ok(None);
    }
    let e = corpus::entry(id)?;
    match part {
        None => Ok(Some(e.field)),
        Some("rhs") => e
            .equation
            .map(|eq| Some(eq.rhs().clone()))
            .ok_or_else(|| CliError::Usage(format!("corpus entry `{id}` has no equation"))),
        Some("reference") => e.reference.map(Some).ok_or(CliError::Core(Error::NoReference(e.id))),
        Some(other) => Err(CliError::Usage(format!("unknown corpus field part `{other}` (expected rhs or reference)"))),
    }
}

fn parse_field_value(v: Value, base: &Path, context: &str) -> Result<FieldSource> {
    if v.get("polynomial").is_some() {
        let p: PolynomialFile = serde_json::from_value(v).map_err(CliError::json(context))?;
        return Ok(FieldSource::Analytic(polynomial_field(p)?));
    }
    if let Some(fin) = v.get("final").filter(|f| f.get("resolution").is_some()) {
        let h: GridHeader = serde_json::from_value(fin.clone()).map_err(CliError::json(context))?;
        return Ok(FieldSource::Grid(h.into_grid(base)?));
    }
    if v.get("resolution").is_some() {
        let h: GridHeader = serde_json::from_value(v).map_err(CliError::json(context))?;
        return Ok(FieldSource::Grid(h.into_grid(base)?));
    }
    Err(CliError::Format(format!("{context}: expected a polynomial or a grid header")))
}

pub fn load_field(arg: &str) -> Result<FieldSource> {
    load_field_from(arg, Path::new(""))
}

/// Like [`load_field`], with file names taken relative to `base`.
pub fn load_field_from(arg: &str, base: &Path) -> Result<FieldSource> {
    if let Some(f) = corpus_field(arg)? {
        return Ok(FieldSource::Analytic(f));
    }
    let path = base.join(arg);
    let path = path.as_path();
    if !path.exists() {
        return Err(CliError::Usage(format!("`{arg}` is neither a corpus id nor a readable file")));
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let v: Value = serde_json::from_str(&text).map_err(CliError::json(arg))?;
    parse_field_value(v, path.parent().unwrap_or(Path::new(".")), arg)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FieldRef {
    Named(String),
    Inline(Value),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationFile {
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    directions: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    zeta: Option<[f64; 2]>,
    f: FieldRef,
}

fn missing(kind: &str, key: &str) -> CliError {
    CliError::Format(format!("{kind} equation needs `{key}`"))
}

/// Parses an equation spec:
/// `{"kind": "semilinear", "alpha": 0.2, "beta": 0, "directions": [[1,0]], "f": "hconvex_sol:rhs"}`.
/// `kind` defaults to `semilinear`; the transport kinds take `zeta`.
pub fn parse_equation(text: &str, base: &Path) -> Result<Equation> {
    let spec: EquationFile = serde_json::from_str(text).map_err(CliError::json("equation spec"))?;
    let f = match spec.f {
        FieldRef::Named(s) => load_field_from(&s, base)?.into_arc(),
        FieldRef::Inline(v) => parse_field_value(v, base, "equation field")?.into_arc(),
    };
    let kind = spec.kind.as_deref().unwrap_or("semilinear");
    match kind {
        "semilinear" => {
            let alpha = spec.alpha.ok_or_else(|| missing(kind, "alpha"))?;
            let beta = spec.beta.ok_or_else(|| missing(kind, "beta"))?;
            let dirs = spec.directions.ok_or_else(|| missing(kind, "directions"))?;
            Ok(Equation::Semilinear(SemilinearSpec::new(alpha, beta, dirs, f)?))
        }
        "linear_transport" | "absolute_transport" => {
            let zeta = spec.zeta.ok_or_else(|| missing(kind, "zeta"))?;
            Ok(Equation::LinearTransport { zeta, absolute: kind == "absolute_transport", f: Rhs(f) })
        }
        "gradient_square" => Ok(Equation::GradientSquare { f: Rhs(f) }),
        other => Err(CliError::Format(format!("unknown equation kind `{other}`"))),
    }
}

pub fn load_equation(path: &Path) -> Result<Equation> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_equation(&text, path.parent().unwrap_or(Path::new(".")))
}
