use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::conformal::{Tolerances, VectorFieldSpec, Verdict};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::zoo::{
    conformal_deform, make_berwald_moor, make_minkowski, make_pseudo_euclidean, make_weighted_product, pullback,
    rescale_by_field, DiffeoSpec, Lagrangian,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    dimension: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    metrics: BTreeMap<String, toml::Table>,
    #[serde(default)]
    maps: BTreeMap<String, RawMap>,
    #[serde(default)]
    fields: BTreeMap<String, RawField>,
    #[serde(default)]
    probes: Vec<toml::Table>,
    #[serde(default)]
    output: OutputSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    components: Vec<String>,
    inverse: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    components: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
enum RawMetric {
    PseudoEuclidean { signs: Vec<f64> },
    Minkowski { dimension: Option<usize> },
    BerwaldMoor { dimension: Option<usize>, orthant: Option<Vec<f64>> },
    WeightedProduct { first: String, second: String, alpha: f64 },
    Conformal { base: String, sigma: String },
    Pullback { base: String, map: String },
    Rescaled { base: String, field: String },
}

/// Where and what to write.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

/// `[lo, hi]` box for base points.
pub type Bounds = [f64; 2];

fn default_box() -> Bounds {
    [-1.0, 1.0]
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub per_axis: usize,
}

macro_rules! default_fn {
    ($name:ident, $t:ty, $v:expr) => {
        fn $name() -> $t {
            $v
        }
    };
}

default_fn!(d200, usize, 200);
default_fn!(d1000, usize, 1000);
default_fn!(d20, usize, 20);
default_fn!(d16, usize, 16);
default_fn!(d10, usize, 10);
default_fn!(d_t_end, f64, 1.0);
default_fn!(d_h, f64, 1e-3);
default_fn!(d_tight, f64, 1e-10);
default_fn!(d_loose, f64, 1e-8);
default_fn!(d_angular, f64, 1e-9);
default_fn!(d_image, f64, 1e-4);
default_fn!(d_control, f64, 1e-3);
default_fn!(d_conservation, f64, 1e-7);
default_fn!(d_true, bool, true);

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HomogeneityArgs {
    pub metric: String,
    #[serde(default = "d200")]
    pub samples: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_tight")]
    pub tol: f64,
    #[serde(default = "d_angular")]
    pub tol_angular: f64,
    #[serde(default = "d_loose")]
    pub tol_trace: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConformalMapArgs {
    pub metric: String,
    /// Target Lagrangian `L′`; defaults to `metric`.
    pub target: Option<String>,
    pub map: String,
    pub sigma: String,
    #[serde(default = "d1000")]
    pub samples: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_loose")]
    pub tol: f64,
    /// Base points at which `σ̂` is estimated and compared with `sigma`.
    #[serde(default)]
    pub factor_points: usize,
    #[serde(default = "d16")]
    pub directions: usize,
    #[serde(default = "d_tight")]
    pub tol_factor: f64,
    #[serde(default = "d_loose")]
    pub tol_anisotropy: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConformalFieldArgs {
    pub metric: String,
    pub field: String,
    #[serde(default = "d20")]
    pub points: usize,
    #[serde(default = "d16")]
    pub directions: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Required verdict; without it any verdict other than not-conformal
    /// passes.
    pub expect: Option<Verdict>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SprayRelationArgs {
    pub metric: String,
    pub sigma: String,
    #[serde(default = "d200")]
    pub samples: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_loose")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeylArgs {
    pub metric: String,
    pub sigma: String,
    #[serde(default = "d1000")]
    pub samples: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_tight")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeodesicArgs {
    pub metric: String,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_h")]
    pub h: f64,
    #[serde(default = "d_loose")]
    pub tol: f64,
    #[serde(default = "d_true")]
    pub export: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NullGeodesicsArgs {
    pub metric: String,
    pub sigma: String,
    #[serde(default = "d10")]
    pub starts: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_h")]
    pub h: f64,
    #[serde(default = "d_image")]
    pub tol: f64,
    /// Also require one timelike start whose images differ by at least
    /// `control_min`.
    #[serde(default = "d_true")]
    pub control: bool,
    #[serde(default = "d_control")]
    pub control_min: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConservationArgs {
    pub metric: String,
    pub field: String,
    #[serde(default = "d10")]
    pub starts: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_t_end")]
    pub t_end: f64,
    #[serde(default = "d_h")]
    pub h: f64,
    #[serde(default = "d_conservation")]
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LemmaArgs {
    pub metric: String,
    pub field: String,
    pub eps: Vec<f64>,
    #[serde(default = "d10")]
    pub points: usize,
    #[serde(default = "d16")]
    pub directions: usize,
    #[serde(default = "default_box", rename = "box")]
    pub bounds: Bounds,
    #[serde(default = "d_loose")]
    pub tol: f64,
    pub expect_signature: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EssentialArgs {
    pub metric: String,
    pub field: String,
    pub grid: Grid,
    #[serde(default = "d16")]
    pub directions: usize,
    #[serde(default = "d_loose")]
    pub tol: f64,
    /// Whether null points are expected on the grid.
    pub expect_null: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeKind {
    Homogeneity(HomogeneityArgs),
    ConformalMap(ConformalMapArgs),
    ConformalField(ConformalFieldArgs),
    SprayRelation(SprayRelationArgs),
    Weyl(WeylArgs),
    Geodesic(GeodesicArgs),
    NullGeodesics(NullGeodesicsArgs),
    Conservation(ConservationArgs),
    AssociatedLemma(LemmaArgs),
    EssentialScan(EssentialArgs),
}

impl ProbeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeKind::Homogeneity(_) => "homogeneity",
            ProbeKind::ConformalMap(_) => "conformal-map",
            ProbeKind::ConformalField(_) => "conformal-field",
            ProbeKind::SprayRelation(_) => "spray-relation",
            ProbeKind::Weyl(_) => "weyl",
            ProbeKind::Geodesic(_) => "geodesic",
            ProbeKind::NullGeodesics(_) => "null-geodesics",
            ProbeKind::Conservation(_) => "conservation",
            ProbeKind::AssociatedLemma(_) => "associated-lemma",
            ProbeKind::EssentialScan(_) => "essential-scan",
        }
    }

    pub const ALL: [&'static str; 10] = [
        "homogeneity",
        "conformal-map",
        "conformal-field",
        "spray-relation",
        "weyl",
        "geodesic",
        "null-geodesics",
        "conservation",
        "associated-lemma",
        "essential-scan",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub name: String,
    /// Explicit seed; otherwise derived from the experiment seed and the
    /// probe index.
    pub seed: Option<u64>,
    pub kind: ProbeKind,
}

/// A validated experiment: every name resolves, every expression parsed.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub dimension: usize,
    pub seed: u64,
    pub metrics: BTreeMap<String, Lagrangian>,
    pub maps: BTreeMap<String, DiffeoSpec>,
    pub fields: BTreeMap<String, VectorFieldSpec>,
    pub probes: Vec<ProbeSpec>,
    pub output: OutputSpec,
    /// SHA-256 of the configuration text.
    pub config_hash: String,
}

impl ExperimentSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn probe_seed(&self, index: usize) -> u64 {
        self.probes[index]
            .seed
            .unwrap_or_else(|| self.seed.wrapping_add(1000 * index as u64))
    }

    pub fn metric(&self, name: &str) -> &Lagrangian {
        &self.metrics[name]
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads and validates an experiment file.
pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_experiment(&text)
}

fn from_table<T: DeserializeOwned>(table: toml::Table, path: &str) -> Result<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(path, e.message().to_string()))
}

fn expr_error(path: &str, e: Error) -> Error {
    Error::config(path, e.to_string())
}

fn parse_components(srcs: &[String], path: &str) -> Result<Vec<Expr>> {
    let n = srcs.len();
    srcs.iter()
        .enumerate()
        .map(|(i, s)| parse(s, n).map_err(|e| expr_error(&format!("{path}[{i}]"), e)))
        .collect()
}

struct Resolver<'a> {
    raw: BTreeMap<String, toml::Table>,
    dimension: usize,
    maps: &'a BTreeMap<String, DiffeoSpec>,
    fields: &'a BTreeMap<String, VectorFieldSpec>,
    done: BTreeMap<String, Lagrangian>,
    active: Vec<String>,
}

impl Resolver<'_> {
    fn get(&mut self, name: &str, from: &str) -> Result<Lagrangian> {
        if let Some(l) = self.done.get(name) {
            return Ok(l.clone());
        }
        if self.active.iter().any(|a| a == name) {
            return Err(Error::config(from, format!("metric `{name}` refers to itself")));
        }
        let Some(table) = self.raw.get(name).cloned() else {
            return Err(Error::config(from, format!("unknown metric `{name}`")));
        };
        self.active.push(name.to_string());
        let path = format!("metrics.{name}");
        let raw: RawMetric = from_table(table, &path)?;
        let cfg = |m: String| Error::config(&path, m);
        let l = match raw {
            RawMetric::PseudoEuclidean { signs } => make_pseudo_euclidean(&signs).map_err(|e| cfg(e.to_string()))?,
            RawMetric::Minkowski { dimension } => {
                make_minkowski(dimension.unwrap_or(self.dimension)).map_err(|e| cfg(e.to_string()))?
            }
            RawMetric::BerwaldMoor { dimension, orthant } => {
                let l = make_berwald_moor(dimension.unwrap_or(self.dimension)).map_err(|e| cfg(e.to_string()))?;
                match orthant {
                    Some(o) => l.with_orthant(&o).map_err(|e| Error::config(format!("{path}.orthant"), e.to_string()))?,
                    None => l,
                }
            }
            RawMetric::WeightedProduct { first, second, alpha } => {
                let a = self.get(&first, &format!("{path}.first"))?;
                let b = self.get(&second, &format!("{path}.second"))?;
                make_weighted_product(&a, &b, alpha).map_err(|e| cfg(e.to_string()))?
            }
            RawMetric::Conformal { base, sigma } => {
                let b = self.get(&base, &format!("{path}.base"))?;
                let sp = format!("{path}.sigma");
                let s = parse(&sigma, b.dim()).map_err(|e| expr_error(&sp, e))?;
                conformal_deform(&b, &s).map_err(|e| expr_error(&sp, e))?
            }
            RawMetric::Pullback { base, map } => {
                let b = self.get(&base, &format!("{path}.base"))?;
                let f = self
                    .maps
                    .get(&map)
                    .ok_or_else(|| Error::config(format!("{path}.map"), format!("unknown map `{map}`")))?;
                check_dim(b.dim(), f.components().len(), &format!("{path}.map"))?;
                pullback(&b, f).map_err(|e| cfg(e.to_string()))?
            }
            RawMetric::Rescaled { base, field } => {
                let b = self.get(&base, &format!("{path}.base"))?;
                let xi = self
                    .fields
                    .get(&field)
                    .ok_or_else(|| Error::config(format!("{path}.field"), format!("unknown field `{field}`")))?;
                check_dim(b.dim(), xi.dim(), &format!("{path}.field"))?;
                rescale_by_field(&b, xi).map_err(|e| cfg(e.to_string()))?
            }
        };
        let l = l.with_label(name);
        self.active.pop();
        self.done.insert(name.to_string(), l.clone());
        Ok(l)
    }
}

fn check_dim(expected: usize, got: usize, path: &str) -> Result<()> {
    if expected != got {
        return Err(Error::config(path, format!("dimension {got} does not match {expected}")));
    }
    Ok(())
}

/// Parses and validates experiment text. Fails on the first problem,
/// before anything is computed.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let at = e
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "<document>".into());
        Error::config(at, e.message().to_string())
    })?;
    let seed = raw.seed.ok_or_else(|| Error::config("seed", "missing required key; runs must be seeded"))?;
    let dimension = raw
        .dimension
        .ok_or_else(|| Error::config("dimension", "missing required key"))?;
    if dimension == 0 {
        return Err(Error::config("dimension", "must be at least 1"));
    }

    let mut maps = BTreeMap::new();
    for (name, m) in raw.maps {
        let path = format!("maps.{name}");
        let comps = parse_components(&m.components, &format!("{path}.components"))?;
        let mut spec = DiffeoSpec::new(comps).map_err(|e| Error::config(&path, e.to_string()))?;
        if let Some(inv) = m.inverse {
            check_dim(m.components.len(), inv.len(), &format!("{path}.inverse"))?;
            let inv = parse_components(&inv, &format!("{path}.inverse"))?;
            spec = spec.with_inverse(inv).map_err(|e| Error::config(&path, e.to_string()))?;
        }
        maps.insert(name.clone(), spec.with_label(name));
    }
    let mut fields = BTreeMap::new();
    for (name, f) in raw.fields {
        let path = format!("fields.{name}");
        let comps = parse_components(&f.components, &format!("{path}.components"))?;
        let spec = VectorFieldSpec::new(comps).map_err(|e| Error::config(&path, e.to_string()))?;
        fields.insert(name.clone(), spec.with_label(name));
    }

    let names: Vec<String> = raw.metrics.keys().cloned().collect();
    let mut resolver = Resolver {
        raw: raw.metrics,
        dimension,
        maps: &maps,
        fields: &fields,
        done: BTreeMap::new(),
        active: Vec::new(),
    };
    for name in &names {
        resolver.get(name, &format!("metrics.{name}"))?;
    }
    let metrics = resolver.done;

    let mut probes = Vec::with_capacity(raw.probes.len());
    for (i, mut table) in raw.probes.into_iter().enumerate() {
        let path = format!("probes[{i}]");
        let take_str = |table: &mut toml::Table, key: &str| -> Result<Option<String>> {
            match table.remove(key) {
                None => Ok(None),
                Some(toml::Value::String(s)) => Ok(Some(s)),
                Some(_) => Err(Error::config(format!("{path}.{key}"), "expected a string")),
            }
        };
        let kind = take_str(&mut table, "kind")?.ok_or_else(|| Error::config(format!("{path}.kind"), "missing"))?;
        let name = take_str(&mut table, "name")?.unwrap_or_else(|| format!("{kind}-{i}"));
        let seed = match table.remove("seed") {
            None => None,
            Some(toml::Value::Integer(s)) if s >= 0 => Some(s as u64),
            Some(_) => return Err(Error::config(format!("{path}.seed"), "expected a non-negative integer")),
        };
        let kind = match kind.as_str() {
            "homogeneity" => ProbeKind::Homogeneity(from_table(table, &path)?),
            "conformal-map" => ProbeKind::ConformalMap(from_table(table, &path)?),
            "conformal-field" => ProbeKind::ConformalField(from_table(table, &path)?),
            "spray-relation" => ProbeKind::SprayRelation(from_table(table, &path)?),
            "weyl" => ProbeKind::Weyl(from_table(table, &path)?),
            "geodesic" => ProbeKind::Geodesic(from_table(table, &path)?),
            "null-geodesics" => ProbeKind::NullGeodesics(from_table(table, &path)?),
            "conservation" => ProbeKind::Conservation(from_table(table, &path)?),
            "associated-lemma" => ProbeKind::AssociatedLemma(from_table(table, &path)?),
            "essential-scan" => ProbeKind::EssentialScan(from_table(table, &path)?),
            other => {
                return Err(Error::config(
                    format!("{path}.kind"),
                    format!("unknown probe kind `{other}`; expected one of {}", ProbeKind::ALL.join(", ")),
                ))
            }
        };
        validate_probe(&kind, &metrics, &maps, &fields, &path)?;
        probes.push(ProbeSpec { name, seed, kind });
    }

    Ok(ExperimentSpec {
        name: raw.name.unwrap_or_else(|| "experiment".into()),
        dimension,
        seed,
        metrics,
        maps,
        fields,
        probes,
        output: raw.output,
        config_hash: sha256_hex(text),
    })
}

fn validate_probe(
    kind: &ProbeKind,
    metrics: &BTreeMap<String, Lagrangian>,
    maps: &BTreeMap<String, DiffeoSpec>,
    fields: &BTreeMap<String, VectorFieldSpec>,
    path: &str,
) -> Result<()> {
    let metric = |name: &str| -> Result<&Lagrangian> {
        metrics
            .get(name)
            .ok_or_else(|| Error::config(format!("{path}.metric"), format!("unknown metric `{name}`")))
    };
    let field = |name: &str, n: usize| -> Result<()> {
        let f = fields
            .get(name)
            .ok_or_else(|| Error::config(format!("{path}.field"), format!("unknown field `{name}`")))?;
        check_dim(n, f.dim(), &format!("{path}.field"))
    };
    let sigma = |src: &str, n: usize| -> Result<()> {
        let e = parse(src, n).map_err(|e| expr_error(&format!("{path}.sigma"), e))?;
        crate::expr::check_sigma(&e).map_err(|e| expr_error(&format!("{path}.sigma"), e))
    };
    let bounds = |b: &Bounds| -> Result<()> {
        if !(b[0] < b[1]) {
            return Err(Error::config(format!("{path}.box"), "need lo < hi"));
        }
        Ok(())
    };
    let positive = |v: f64, key: &str| -> Result<()> {
        if !(v > 0.0) {
            return Err(Error::config(format!("{path}.{key}"), "must be positive"));
        }
        Ok(())
    };
    match kind {
        ProbeKind::Homogeneity(a) => {
            metric(&a.metric)?;
            bounds(&a.bounds)?;
        }
        ProbeKind::ConformalMap(a) => {
            let n = metric(&a.metric)?.dim();
            if let Some(t) = &a.target {
                let m = metric(t).map_err(|_| Error::config(format!("{path}.target"), format!("unknown metric `{t}`")))?;
                check_dim(n, m.dim(), &format!("{path}.target"))?;
            }
            let f = maps
                .get(&a.map)
                .ok_or_else(|| Error::config(format!("{path}.map"), format!("unknown map `{}`", a.map)))?;
            check_dim(n, f.components().len(), &format!("{path}.map"))?;
            sigma(&a.sigma, n)?;
            bounds(&a.bounds)?;
        }
        ProbeKind::ConformalField(a) => {
            field(&a.field, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
        }
        ProbeKind::SprayRelation(a) => {
            sigma(&a.sigma, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
        }
        ProbeKind::Weyl(a) => {
            sigma(&a.sigma, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
        }
        ProbeKind::Geodesic(a) => {
            let n = metric(&a.metric)?.dim();
            check_dim(n, a.x0.len(), &format!("{path}.x0"))?;
            check_dim(n, a.y0.len(), &format!("{path}.y0"))?;
            positive(a.h, "h")?;
        }
        ProbeKind::NullGeodesics(a) => {
            sigma(&a.sigma, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
            positive(a.h, "h")?;
        }
        ProbeKind::Conservation(a) => {
            field(&a.field, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
            positive(a.h, "h")?;
        }
        ProbeKind::AssociatedLemma(a) => {
            field(&a.field, metric(&a.metric)?.dim())?;
            bounds(&a.bounds)?;
        }
        ProbeKind::EssentialScan(a) => {
            field(&a.field, metric(&a.metric)?.dim())?;
            if !(a.grid.lo < a.grid.hi) || a.grid.per_axis < 2 {
                return Err(Error::config(format!("{path}.grid"), "need lo < hi and per_axis >= 2"));
            }
        }
    }
    Ok(())
}
