//! Scenario files (JSON, `"schema": 1`) and the built-in catalog.
//!
//! Indices in files are 1-based; expressions are DSL strings parsed at load
//! time. See the repository README for the full schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebroid::{AlgebroidSpec, SectionEStar, StructureEntry};
use crate::dynamics::HamiltonianSpec;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, VarScope};
use crate::hamilton_jacobi::FiberMorphism;
use crate::prolongation::DualPoint;
use crate::sampling::{CoordBox, Sampler};
use crate::time_extension::{extend, ExtendedAlgebroid, TimeSection};

pub const SCHEMA_VERSION: u32 = 1;

/// Name under which the top-level `hamiltonian` is registered.
pub const DEFAULT_HAMILTONIAN: &str = "default";

const CATALOG: &[(&str, &str)] = &[
    ("canonical_r1", include_str!("../catalog/canonical_r1.json")),
    ("canonical_r2", include_str!("../catalog/canonical_r2.json")),
    ("so3", include_str!("../catalog/so3.json")),
    ("heisenberg", include_str!("../catalog/heisenberg.json")),
    ("action_r2", include_str!("../catalog/action_r2.json")),
    ("action_so3", include_str!("../catalog/action_so3.json")),
    ("td_free_particle", include_str!("../catalog/td_free_particle.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub structure: f64,
    pub omega: f64,
    pub theorem: f64,
    pub hj: f64,
    pub sensitivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structure: 1e-8,
            omega: 1e-10,
            theorem: 1e-7,
            hj: 1e-6,
            sensitivity: 0.1,
        }
    }
}

/// What a section is known to satisfy; absent fields are unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub cocycle: Option<bool>,
    pub solves_hj: Option<bool>,
    pub type1: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    alpha: usize,
    beta: usize,
    gamma: usize,
    expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSectionDef {
    components: Vec<String>,
    #[serde(default)]
    hamiltonian: Option<String>,
    #[serde(default)]
    domain: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    expect: Expectation,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSection {
    Bare(Vec<String>),
    Full(RawSectionDef),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema: u32,
    name: String,
    #[serde(default)]
    description: String,
    base_dim: usize,
    rank: usize,
    #[serde(default)]
    domain: Vec<[f64; 2]>,
    #[serde(default)]
    momentum_box: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    time_dependent: bool,
    #[serde(default)]
    time_box: Option<[f64; 2]>,
    anchor: Vec<Vec<String>>,
    #[serde(default)]
    structure: Vec<RawEntry>,
    hamiltonian: String,
    #[serde(default)]
    hamiltonians: BTreeMap<String, String>,
    #[serde(default)]
    sections: BTreeMap<String, RawSection>,
    #[serde(default)]
    morphisms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct SectionDef {
    /// In `x` (and `t` for time-dependent scenarios).
    pub components: Vec<Expr>,
    pub hamiltonian: String,
    pub domain: Option<CoordBox>,
    pub expect: Expectation,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub spec: AlgebroidSpec,
    pub domain: CoordBox,
    pub momentum_box: CoordBox,
    pub time_dependent: bool,
    pub time_box: Option<[f64; 2]>,
    /// Always contains `DEFAULT_HAMILTONIAN`.
    pub hamiltonians: BTreeMap<String, Expr>,
    pub sections: BTreeMap<String, SectionDef>,
    pub morphisms: BTreeMap<String, Vec<Expr>>,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// The JSON text this scenario was read from.
    pub source: String,
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

fn parse_at(src: &str, scope: &VarScope, field: impl Into<String>) -> Result<Expr> {
    parse(src, scope).map_err(|e| schema(field, e.to_string()))
}

fn boxed(bounds: Vec<[f64; 2]>, field: &str) -> Result<CoordBox> {
    CoordBox::new(bounds).map_err(|e| match e {
        Error::Schema { field: f, reason } => schema(format!("{field}.{f}"), reason),
        other => other,
    })
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| schema("document", e.to_string()))?;
        Self::from_raw(raw, text.to_string())
    }

    fn from_raw(raw: RawScenario, source: String) -> Result<Self> {
        if raw.schema != SCHEMA_VERSION {
            return Err(schema(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema),
            ));
        }
        let (m, n) = (raw.base_dim, raw.rank);
        if n == 0 {
            return Err(schema("rank", "must be at least 1"));
        }
        if raw.domain.len() != m {
            return Err(schema(
                "domain",
                format!("expected {m} intervals, got {}", raw.domain.len()),
            ));
        }
        let domain = boxed(raw.domain, "domain")?;
        let momentum = raw.momentum_box.unwrap_or_else(|| vec![[-2.0, 2.0]; n]);
        if momentum.len() != n {
            return Err(schema(
                "momentum_box",
                format!("expected {n} intervals, got {}", momentum.len()),
            ));
        }
        let momentum_box = boxed(momentum, "momentum_box")?;
        let time_box = match (raw.time_dependent, raw.time_box) {
            (true, Some(tb)) => Some(boxed(vec![tb], "time_box")?.bounds[0]),
            (true, None) => return Err(schema("time_box", "required when time_dependent is true")),
            (false, Some(_)) => return Err(schema("time_box", "only allowed when time_dependent is true")),
            (false, None) => None,
        };

        let base_scope = VarScope::new(m, 0, false);
        if raw.anchor.len() != n {
            return Err(schema("anchor", format!("expected {n} rows, got {}", raw.anchor.len())));
        }
        let mut anchor = Vec::with_capacity(n);
        for (a, row) in raw.anchor.iter().enumerate() {
            if row.len() != m {
                return Err(schema(
                    format!("anchor[{}]", a + 1),
                    format!("expected {m} entries, got {}", row.len()),
                ));
            }
            anchor.push(
                row.iter()
                    .enumerate()
                    .map(|(i, s)| parse_at(s, &base_scope, format!("anchor[{}][{}]", a + 1, i + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let mut entries = Vec::with_capacity(raw.structure.len());
        for (k, e) in raw.structure.iter().enumerate() {
            let field = format!("structure[{k}]");
            if e.alpha >= e.beta {
                return Err(schema(field, "alpha must be < beta"));
            }
            for (label, v) in [("alpha", e.alpha), ("beta", e.beta), ("gamma", e.gamma)] {
                if v == 0 || v > n {
                    return Err(schema(
                        format!("{field}.{label}"),
                        format!("index {v} out of range 1..={n}"),
                    ));
                }
            }
            entries.push(StructureEntry {
                alpha: e.alpha - 1,
                beta: e.beta - 1,
                gamma: e.gamma - 1,
                expr: parse_at(&e.expr, &base_scope, format!("{field}.expr"))?,
            });
        }
        let spec = AlgebroidSpec::new(m, n, anchor, entries).map_err(|e| schema("structure", e.to_string()))?;

        let td = raw.time_dependent;
        let phase_scope = VarScope::new(m, n, td);
        let section_scope = VarScope::new(m, 0, td);
        let mut hamiltonians = BTreeMap::new();
        hamiltonians.insert(
            DEFAULT_HAMILTONIAN.to_string(),
            parse_at(&raw.hamiltonian, &phase_scope, "hamiltonian")?,
        );
        for (name, src) in &raw.hamiltonians {
            if name == DEFAULT_HAMILTONIAN {
                return Err(schema(
                    format!("hamiltonians.{name}"),
                    "name is reserved for the top-level hamiltonian",
                ));
            }
            hamiltonians.insert(
                name.clone(),
                parse_at(src, &phase_scope, format!("hamiltonians.{name}"))?,
            );
        }

        let mut sections = BTreeMap::new();
        for (name, rs) in raw.sections {
            let def = match rs {
                RawSection::Bare(components) => RawSectionDef {
                    components,
                    hamiltonian: None,
                    domain: None,
                    expect: Expectation::default(),
                },
                RawSection::Full(d) => d,
            };
            let field = format!("sections.{name}");
            if def.components.len() != n {
                return Err(schema(
                    field,
                    format!("expected {n} components, got {}", def.components.len()),
                ));
            }
            let components = def
                .components
                .iter()
                .enumerate()
                .map(|(a, s)| parse_at(s, &section_scope, format!("{field}[{}]", a + 1)))
                .collect::<Result<Vec<_>>>()?;
            let hamiltonian = def.hamiltonian.unwrap_or_else(|| DEFAULT_HAMILTONIAN.to_string());
            if !hamiltonians.contains_key(&hamiltonian) {
                return Err(schema(
                    format!("{field}.hamiltonian"),
                    format!("unknown Hamiltonian {hamiltonian}"),
                ));
            }
            let domain = match def.domain {
                Some(d) if d.len() != m => {
                    return Err(schema(
                        format!("{field}.domain"),
                        format!("expected {m} intervals, got {}", d.len()),
                    ))
                }
                Some(d) => Some(boxed(d, &format!("{field}.domain"))?),
                None => None,
            };
            sections.insert(
                name,
                SectionDef {
                    components,
                    hamiltonian,
                    domain,
                    expect: def.expect,
                },
            );
        }

        let mut morphisms = BTreeMap::new();
        for (name, comps) in &raw.morphisms {
            let field = format!("morphisms.{name}");
            if comps.len() != n {
                return Err(schema(field, format!("expected {n} components, got {}", comps.len())));
            }
            let exprs = comps
                .iter()
                .enumerate()
                .map(|(a, s)| parse_at(s, &phase_scope, format!("{field}[{}]", a + 1)))
                .collect::<Result<Vec<_>>>()?;
            morphisms.insert(name.clone(), exprs);
        }

        Ok(Self {
            name: raw.name,
            description: raw.description,
            spec,
            domain,
            momentum_box,
            time_dependent: td,
            time_box,
            hamiltonians,
            sections,
            morphisms,
            tolerances: raw.tolerances,
            seed: raw.seed,
            source,
        })
    }

    fn hamiltonian_expr(&self, name: &str) -> Result<&Expr> {
        self.hamiltonians.get(name).ok_or_else(|| Error::UnknownName {
            kind: "hamiltonian",
            name: name.to_string(),
        })
    }

    /// An autonomous Hamiltonian; time-dependent ones go through `extended`.
    pub fn hamiltonian(&self, name: &str) -> Result<HamiltonianSpec> {
        let expr = self.hamiltonian_expr(name)?;
        HamiltonianSpec::new(&self.spec, expr.clone()).map_err(|_| {
            Error::Precondition(format!(
                "Hamiltonian {name} of {} depends on t; use the time-dependent commands",
                self.name
            ))
        })
    }

    pub fn extended(&self, hamiltonian: &str) -> Result<ExtendedAlgebroid> {
        extend(&self.spec, self.hamiltonian_expr(hamiltonian)?.clone())
    }

    pub fn section(&self, name: &str) -> Result<&SectionDef> {
        self.sections.get(name).ok_or_else(|| Error::UnknownName {
            kind: "section",
            name: name.to_string(),
        })
    }

    /// A time-independent section as a one-section of the algebroid.
    pub fn section_estar(&self, name: &str) -> Result<SectionEStar> {
        let def = self.section(name)?;
        if def.components.iter().any(|c| c.depends_on(crate::expr::Var::T)) {
            return Err(Error::Precondition(format!("section {name} depends on t")));
        }
        Ok(SectionEStar::new(def.components.clone()))
    }

    pub fn time_section(&self, name: &str) -> Result<TimeSection> {
        TimeSection::new(&self.spec, self.section(name)?.components.clone())
    }

    pub fn morphism_exprs(&self, name: &str) -> Result<&[Expr]> {
        self.morphisms
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownName {
                kind: "morphism",
                name: name.to_string(),
            })
    }

    pub fn morphism(&self, name: &str) -> Result<FiberMorphism> {
        FiberMorphism::new(&self.spec, self.morphism_exprs(name)?.to_vec())
    }

    /// Sampling box of a section, falling back to the scenario domain.
    pub fn section_domain(&self, name: &str) -> Result<&CoordBox> {
        Ok(self.section(name)?.domain.as_ref().unwrap_or(&self.domain))
    }

    /// `(t, x)` box for time-dependent checks.
    pub fn extended_domain(&self, section: Option<&str>) -> Result<CoordBox> {
        let [lo, hi] = self.time_box.unwrap_or([0.0, 1.0]);
        let x = match section {
            Some(s) => self.section_domain(s)?,
            None => &self.domain,
        };
        Ok(CoordBox::new(vec![[lo, hi]])?.product(x))
    }

    pub fn phase_box(&self) -> CoordBox {
        self.domain.product(&self.momentum_box)
    }

    pub fn base_samples(&self, bx: &CoordBox, count: usize, sampler: &mut Sampler) -> Vec<Vec<f64>> {
        sampler.points_in(bx, count)
    }

    pub fn dual_samples(&self, count: usize, sampler: &mut Sampler) -> Vec<DualPoint> {
        let m = self.spec.base_dim();
        sampler
            .points_in(&self.phase_box(), count)
            .into_iter()
            .map(|p| DualPoint::new(p[..m].to_vec(), p[m..].to_vec()))
            .collect()
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text).map_err(|e| match e {
        Error::Schema { field, reason } => Error::Schema {
            field: format!("{}: {field}", path.display()),
            reason,
        },
        other => other,
    })
}

pub fn catalog_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(n, _)| *n)
}

pub fn catalog_entry(name: &str) -> Result<Scenario> {
    let (_, text) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "scenario",
            name: name.to_string(),
        })?;
    Scenario::from_json(text)
}

pub fn catalog() -> Vec<Scenario> {
    CATALOG
        .iter()
        .map(|(n, text)| Scenario::from_json(text).unwrap_or_else(|e| panic!("catalog entry {n} is invalid: {e}")))
        .collect()
}

/// A catalog name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    if catalog_names().any(|n| n == name_or_path) {
        return catalog_entry(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        load_scenario(path)
    } else {
        Err(Error::UnknownName {
            kind: "scenario",
            name: name_or_path.to_string(),
        })
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes every catalog scenario to `dir/<name>.json`.
pub fn export_catalog(dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    CATALOG
        .iter()
        .map(|(name, text)| {
            let path = dir.join(format!("{name}.json"));
            write_atomic(&path, text.as_bytes())?;
            Ok(path)
        })
        .collect()
}
