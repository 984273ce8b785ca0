//! Name-keyed registries of coarseners and subdomain decomposers.
//!
//! Coarseners are looked up by name (`greedy`, `sa`, `by-hand-fd`,
//! `by-hand-fe`); decomposers by a spec string (`global`, `geometric:BxB`,
//! `lloyd:AVG`).

use std::collections::BTreeMap;

use crate::anneal::{sa_coarsen, AnnealConfig, SaStats, Trace};
use crate::error::{Error, Result};
use crate::partition::{
    by_hand_fd, by_hand_fe, geometric_blocks, global_subdomain, greedy_coarsen, lloyd_aggregate_pinned,
    SubdomainDecomposition,
};
use crate::sparse::CsrMatrix;
use crate::splitting::{check_feasible, CfSplitting};

/// Facts about the operator that some methods need.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoarsenContext {
    /// Side length when the operator lives on a structured `N × N` grid.
    pub grid_size: Option<usize>,
}

pub trait Decomposer: Send + Sync {
    fn spec(&self) -> String;
    fn decompose(&self, a: &CsrMatrix, theta: f64, seed: u64, ctx: &CoarsenContext) -> Result<SubdomainDecomposition>;
}

struct Global;

impl Decomposer for Global {
    fn spec(&self) -> String {
        "global".into()
    }

    fn decompose(&self, a: &CsrMatrix, theta: f64, _: u64, _: &CoarsenContext) -> Result<SubdomainDecomposition> {
        Ok(global_subdomain(a, Some(theta)))
    }
}

struct Geometric(usize, usize);

impl Decomposer for Geometric {
    fn spec(&self) -> String {
        format!("geometric:{}x{}", self.0, self.1)
    }

    fn decompose(&self, a: &CsrMatrix, theta: f64, _: u64, ctx: &CoarsenContext) -> Result<SubdomainDecomposition> {
        let n = ctx
            .grid_size
            .ok_or_else(|| Error::InvalidArgument("geometric subdomains need a structured grid".into()))?;
        geometric_blocks(n, (self.0, self.1), a, theta)
    }
}

struct Lloyd(usize);

impl Decomposer for Lloyd {
    fn spec(&self) -> String {
        format!("lloyd:{}", self.0)
    }

    fn decompose(&self, a: &CsrMatrix, theta: f64, seed: u64, _: &CoarsenContext) -> Result<SubdomainDecomposition> {
        lloyd_aggregate_pinned(a, self.0, seed, theta)
    }
}

type DecomposerFactory = fn(Option<&str>) -> Result<Box<dyn Decomposer>>;

fn bad_arg(kind: &str, arg: Option<&str>) -> Error {
    Error::InvalidArgument(format!("bad argument {:?} for {kind} subdomains", arg.unwrap_or("")))
}

fn parse_positive(s: &str) -> Option<usize> {
    s.trim().parse().ok().filter(|&v| v > 0)
}

/// Maps the kind before the first `:` to a factory receiving the rest.
pub struct DecomposerRegistry {
    map: BTreeMap<String, DecomposerFactory>,
}

impl Default for DecomposerRegistry {
    fn default() -> Self {
        let mut r = DecomposerRegistry { map: BTreeMap::new() };
        r.register("global", |arg| match arg {
            None => Ok(Box::new(Global)),
            Some(_) => Err(bad_arg("global", arg)),
        });
        r.register("geometric", |arg| {
            let s = arg.ok_or_else(|| bad_arg("geometric", arg))?;
            let (x, y) = s.split_once('x').unwrap_or((s, s));
            match (parse_positive(x), parse_positive(y)) {
                (Some(x), Some(y)) => Ok(Box::new(Geometric(x, y))),
                _ => Err(bad_arg("geometric", arg)),
            }
        });
        r.register("lloyd", |arg| match arg.and_then(parse_positive) {
            Some(m) => Ok(Box::new(Lloyd(m))),
            None => Err(bad_arg("lloyd", arg)),
        });
        r
    }
}

impl DecomposerRegistry {
    pub fn register(&mut self, kind: &str, f: DecomposerFactory) {
        self.map.insert(kind.to_string(), f);
    }

    pub fn kinds(&self) -> Vec<&str> {
        self.map.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &str) -> Result<Box<dyn Decomposer>> {
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let f = self
            .map
            .get(kind)
            .ok_or_else(|| Error::Unknown { kind: "subdomain kind", name: kind.to_string() })?;
        f(arg)
    }
}

#[derive(Clone, Debug)]
pub struct CoarsenOutput {
    pub splitting: CfSplitting,
    pub trace: Option<Trace>,
    pub stats: Option<SaStats>,
}

impl From<CfSplitting> for CoarsenOutput {
    fn from(splitting: CfSplitting) -> Self {
        CoarsenOutput { splitting, trace: None, stats: None }
    }
}

pub trait Coarsener: Send + Sync {
    fn name(&self) -> &str;

    /// Whether `seed` affects the result.
    fn randomized(&self) -> bool {
        false
    }

    fn coarsen(&self, a: &CsrMatrix, theta: f64, seed: u64, ctx: &CoarsenContext) -> Result<CoarsenOutput>;
}

struct Greedy;

impl Coarsener for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn coarsen(&self, a: &CsrMatrix, theta: f64, _: u64, _: &CoarsenContext) -> Result<CoarsenOutput> {
        Ok(greedy_coarsen(a, theta)?.into())
    }
}

struct Annealing {
    cfg: AnnealConfig,
    decomposer: Box<dyn Decomposer>,
}

impl Coarsener for Annealing {
    fn name(&self) -> &str {
        "sa"
    }

    fn randomized(&self) -> bool {
        true
    }

    fn coarsen(&self, a: &CsrMatrix, theta: f64, seed: u64, ctx: &CoarsenContext) -> Result<CoarsenOutput> {
        let cfg = AnnealConfig { theta, seed, ..self.cfg.clone() };
        let decomp = self.decomposer.decompose(a, theta, seed, ctx)?;
        let out = sa_coarsen(a, &decomp, &cfg)?;
        Ok(CoarsenOutput { splitting: out.splitting, trace: Some(out.trace), stats: Some(out.stats) })
    }
}

struct ByHand {
    name: &'static str,
    build: fn(usize) -> CfSplitting,
}

impl Coarsener for ByHand {
    fn name(&self) -> &str {
        self.name
    }

    fn coarsen(&self, a: &CsrMatrix, theta: f64, _: u64, ctx: &CoarsenContext) -> Result<CoarsenOutput> {
        let n = ctx
            .grid_size
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs a structured grid", self.name)))?;
        if n * n != a.n_rows() {
            return Err(Error::Dimension(format!("grid {n}x{n} but matrix has {} rows", a.n_rows())));
        }
        let s = (self.build)(n);
        check_feasible(a, &s, theta)?;
        Ok(s.into())
    }
}

/// Settings a coarsener factory may read.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarsenerParams {
    pub anneal: AnnealConfig,
    pub subdomains: String,
}

impl Default for CoarsenerParams {
    fn default() -> Self {
        CoarsenerParams { anneal: AnnealConfig::new(0.56, 3000, 5, 0), subdomains: "global".into() }
    }
}

type CoarsenerFactory = fn(&CoarsenerParams, &DecomposerRegistry) -> Result<Box<dyn Coarsener>>;

pub struct CoarsenerRegistry {
    map: BTreeMap<String, CoarsenerFactory>,
    pub decomposers: DecomposerRegistry,
}

impl Default for CoarsenerRegistry {
    fn default() -> Self {
        let mut r = CoarsenerRegistry { map: BTreeMap::new(), decomposers: DecomposerRegistry::default() };
        r.register("greedy", |_, _| Ok(Box::new(Greedy)));
        r.register("sa", |p, d| {
            p.anneal.validate()?;
            Ok(Box::new(Annealing { cfg: p.anneal.clone(), decomposer: d.build(&p.subdomains)? }))
        });
        r.register("by-hand-fd", |_, _| Ok(Box::new(ByHand { name: "by-hand-fd", build: by_hand_fd })));
        r.register("by-hand-fe", |_, _| Ok(Box::new(ByHand { name: "by-hand-fe", build: by_hand_fe })));
        r
    }
}

impl CoarsenerRegistry {
    pub fn register(&mut self, name: &str, f: CoarsenerFactory) {
        self.map.insert(name.to_string(), f);
    }

    pub fn names(&self) -> Vec<&str> {
        self.map.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, params: &CoarsenerParams) -> Result<Box<dyn Coarsener>> {
        let f = self.map.get(name).ok_or_else(|| Error::Unknown { kind: "coarsener", name: name.to_string() })?;
        f(params, &self.decomposers)
    }

    /// Coarsener for levels below the finest. Coarse operators carry no grid,
    /// so SA switches to Lloyd subdomains of average size 36 and the by-hand
    /// methods fall back to greedy.
    pub fn build_deeper(&self, name: &str, params: &CoarsenerParams) -> Result<Box<dyn Coarsener>> {
        match name {
            "sa" if params.subdomains.starts_with("geometric") => {
                self.build(name, &CoarsenerParams { subdomains: "lloyd:36".into(), ..params.clone() })
            }
            "by-hand-fd" | "by-hand-fe" => self.build("greedy", params),
            _ => self.build(name, params),
        }
    }
}

/// Adapts a finest-level and a deeper-level coarsener to the hierarchy
/// builder. Level `ℓ` uses seed `seed + ℓ`.
pub struct LevelCoarseners<'a> {
    pub finest: &'a dyn Coarsener,
    pub deeper: &'a dyn Coarsener,
    pub theta: f64,
    pub seed: u64,
    pub ctx: CoarsenContext,
    /// Precomputed finest-level splitting, used instead of `finest`.
    pub given: Option<CfSplitting>,
    pub outputs: Vec<CoarsenOutput>,
}

impl crate::amgr::LevelCoarsener for LevelCoarseners<'_> {
    fn coarsen_level(&mut self, level: usize, a: &CsrMatrix) -> Result<CfSplitting> {
        let out = if level == 0 {
            match self.given.take() {
                Some(s) => s.into(),
                None => self.finest.coarsen(a, self.theta, self.seed, &self.ctx)?,
            }
        } else {
            self.deeper.coarsen(a, self.theta, self.seed.wrapping_add(level as u64), &CoarsenContext::default())?
        };
        let s = out.splitting.clone();
        self.outputs.push(out);
        Ok(s)
    }
}
