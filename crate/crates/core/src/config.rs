//! TOML description of a homogeneous space.
//!
//! Either a preset:
//!
//! ```toml
//! preset = "sphere:2"
//! ```
//!
//! or explicit data. Basis elements are given as matrices (`h`, `m`) or as
//! one-based index pairs (`h_pairs`, `m_pairs`) standing for `E_ij`. Forms are
//! sparse `[i, j, k, value]` entries with one-based indices, or a canonical
//! `connection`.
//!
//! ```toml
//! name = "s2-explicit"
//! group_dim = 3
//! h_pairs = [[2, 3]]
//! m_pairs = [[1, 2], [1, 3]]
//! connection = "second-kind"
//! solver = "newton"
//!
//! [model]
//! kind = "orbit"
//! base = [1.0, 0.0, 0.0]
//! ```

use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::homog::{CanonicalConnection, HomogSpaceSpec, LiftSolver, SpaceModel};
use crate::lie::{e_ij, BilinearForm, Matrix, Vector};
use crate::sphere::SphereSpec;

/// A configuration error located in the source text.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", match .location {
    Some((line, column)) => format!("line {line}, column {column}: {message}"),
    None => message.clone(),
})]
pub struct ConfigError {
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl ConfigError {
    pub fn at(source: &str, span: Option<Range<usize>>, message: impl Into<String>) -> Self {
        Self {
            location: span.map(|s| line_column(source, s.start)),
            message: message.into(),
        }
    }

    /// Wraps a TOML parse or type error, keeping its position.
    pub fn from_toml(source: &str, err: &toml::de::Error) -> Self {
        Self::at(source, err.span(), err.message().trim().to_string())
    }
}

/// One-based line and column of a byte offset.
pub fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let column = before[line_start..].chars().count() + 1;
    (line, column)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    preset: Option<Spanned<String>>,
    name: Option<String>,
    group_dim: Option<Spanned<usize>>,
    h: Option<Spanned<Vec<Vec<Vec<f64>>>>>,
    m: Option<Spanned<Vec<Vec<Vec<f64>>>>>,
    h_pairs: Option<Spanned<Vec<[usize; 2]>>>,
    m_pairs: Option<Spanned<Vec<[usize; 2]>>>,
    connection: Option<Spanned<CanonicalConnection>>,
    beta: Option<Spanned<Vec<FormEntry>>>,
    alpha: Option<Spanned<Vec<FormEntry>>>,
    solver: Option<LiftSolver>,
    model: Option<Spanned<ModelSection>>,
}

#[derive(Deserialize)]
struct FormEntry(usize, usize, usize, f64);

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ModelSection {
    Orbit { base: Vec<f64> },
    Identity,
}

/// A parsed space: sphere presets keep their extra structure.
#[derive(Clone, Debug)]
pub enum SpaceConfig {
    Sphere(SphereSpec),
    General(HomogSpaceSpec),
}

impl SpaceConfig {
    pub fn spec(&self) -> &HomogSpaceSpec {
        match self {
            SpaceConfig::Sphere(s) => s.spec(),
            SpaceConfig::General(s) => s,
        }
    }

    pub fn sphere(&self) -> Option<&SphereSpec> {
        match self {
            SpaceConfig::Sphere(s) => Some(s),
            SpaceConfig::General(_) => None,
        }
    }
}

/// Parses a space file.
pub fn parse_space(source: &str) -> Result<SpaceConfig, ConfigError> {
    let file: SpaceFile = toml::from_str(source).map_err(|e| ConfigError::from_toml(source, &e))?;
    let err = |span: Option<Range<usize>>, msg: String| ConfigError::at(source, span, msg);

    if let Some(preset) = &file.preset {
        let connection = file.connection.as_ref().map_or(CanonicalConnection::SecondKind, |c| *c.get_ref());
        let n = preset
            .get_ref()
            .strip_prefix("sphere:")
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| err(Some(preset.span()), format!("unknown preset `{}` (expected sphere:n)", preset.get_ref())))?;
        return SphereSpec::with_connection(n, connection)
            .map(SpaceConfig::Sphere)
            .map_err(|e| err(Some(preset.span()), e.to_string()));
    }

    let group_dim = file
        .group_dim
        .as_ref()
        .ok_or_else(|| err(None, "missing `group_dim` (or use `preset`)".into()))?;
    let m = *group_dim.get_ref();
    if m < 2 {
        return Err(err(Some(group_dim.span()), format!("group_dim must be >= 2, got {m}")));
    }
    let h = basis_field(source, m, "h", file.h.as_ref(), file.h_pairs.as_ref())?;
    let mb = basis_field(source, m, "m", file.m.as_ref(), file.m_pairs.as_ref())?;
    let model_span = file.model.as_ref().map(|s| s.span());
    let model = match file.model.map(Spanned::into_inner) {
        Some(ModelSection::Orbit { base }) => {
            if base.len() != m {
                return Err(err(model_span, format!("orbit base has {} entries, expected {m}", base.len())));
            }
            SpaceModel::Orbit { base: Vector::from_vec(base) }
        }
        Some(ModelSection::Identity) => SpaceModel::Identity,
        None => return Err(err(None, "missing [model] section".into())),
    };
    let solver = file.solver.unwrap_or(LiftSolver::Newton);
    let name = file.name.unwrap_or_else(|| "custom".into());
    let anchor = file.m.as_ref().map(|s| s.span()).or(file.m_pairs.as_ref().map(|s| s.span()));

    let spec = match (&file.connection, &file.beta, &file.alpha) {
        (Some(c), None, None) => HomogSpaceSpec::with_connection(name, m, h, mb, *c.get_ref(), model, solver)
            .map_err(|e| err(Some(c.span()), e.to_string()))?,
        (None, beta, alpha) => {
            let (nm, ng) = (mb.len(), mb.len() + h.len());
            let beta_form = form_field(source, "beta", beta.as_ref(), nm, nm)?;
            let alpha_form = form_field(source, "alpha", alpha.as_ref(), ng, ng)?;
            HomogSpaceSpec::new(name, m, h, mb, beta_form, alpha_form, model, solver)
                .map_err(|e| err(anchor, e.to_string()))?
        }
        (Some(c), _, _) => {
            return Err(err(Some(c.span()), "give either `connection` or explicit `beta`/`alpha`, not both".into()))
        }
    };
    Ok(SpaceConfig::General(spec))
}

fn basis_field(
    source: &str,
    m: usize,
    key: &str,
    matrices: Option<&Spanned<Vec<Vec<Vec<f64>>>>>,
    pairs: Option<&Spanned<Vec<[usize; 2]>>>,
) -> Result<Vec<Matrix>, ConfigError> {
    match (matrices, pairs) {
        (Some(_), Some(p)) => Err(ConfigError::at(
            source,
            Some(p.span()),
            format!("give `{key}` or `{key}_pairs`, not both"),
        )),
        (Some(ms), None) => ms
            .get_ref()
            .iter()
            .map(|rows| {
                if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                    return Err(ConfigError::at(source, Some(ms.span()), format!("`{key}` entries must be {m}x{m} matrices")));
                }
                Ok(Matrix::from_fn(m, m, |i, j| rows[i][j]))
            })
            .collect(),
        (None, Some(ps)) => ps
            .get_ref()
            .iter()
            .map(|&[i, j]| {
                if i == 0 || j == 0 || i > m || j > m || i == j {
                    return Err(ConfigError::at(
                        source,
                        Some(ps.span()),
                        format!("`{key}_pairs` entry [{i}, {j}] must be two distinct indices in 1..={m}"),
                    ));
                }
                Ok(e_ij(m, i - 1, j - 1))
            })
            .collect(),
        (None, None) => Ok(Vec::new()),
    }
}

fn form_field(
    source: &str,
    key: &str,
    field: Option<&Spanned<Vec<FormEntry>>>,
    domain: usize,
    codomain: usize,
) -> Result<BilinearForm, ConfigError> {
    let mut form = BilinearForm::zero(domain, codomain);
    if let Some(entries) = field {
        for FormEntry(i, j, k, v) in entries.get_ref() {
            if *i == 0 || *j == 0 || *k == 0 || *i > domain || *j > domain || *k > codomain {
                return Err(ConfigError::at(
                    source,
                    Some(entries.span()),
                    format!("`{key}` entry [{i}, {j}, {k}] is out of range (1..={domain}, 1..={domain}, 1..={codomain})"),
                ));
            }
            form.set(i - 1, j - 1, k - 1, *v);
        }
    }
    Ok(form)
}
