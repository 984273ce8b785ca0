use std::path::{Path, PathBuf};

use amgr_anneal::amgr::{AmgrOptions, CycleKind, DffRule, InterpolationKind};
use amgr_anneal::anneal::{AnnealConfig, Exchange};
use amgr_anneal::problems::ProblemSpec;
use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

/// Parses `pi/3`, `2*pi/3`, `pi`, `0.5pi` or a plain number.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| anyhow!("bad angle `{s}`"))?),
        None => (t.clone(), 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or_else(|| anyhow!("bad angle `{s}`"))?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ =>  coef.parse::<f64>().map_err(|_| anyhow!("bad angle `{s}`"))?,
    };
    Ok(c * std::f64::consts::PI / den)
}

/// Operator selection shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct ProblemArgs {
    /// identity, fd5, fe9, aniso-fd, aniso-fe, convdiff or jittered-mesh.
    #[arg(long)]
    pub problem: Option<String>,
    /// Grid side length for structured problems.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Anisotropy angle, e.g. `pi/3`.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    pub angle: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub by: Option<f64>,
    /// Cells per side of a jittered mesh.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub mesh_seed: Option<u64>,
    /// Read the operator from a Matrix Market file.
    #[arg(long, conflicts_with_all = ["problem", "mesh"])]
    pub matrix: Option<PathBuf>,
    /// Assemble P1 diffusion on a mesh file.
    #[arg(long, conflicts_with = "problem")]
    pub mesh: Option<PathBuf>,
}

impl ProblemArgs {
    pub fn is_set(&self) -> bool {
        self.problem.is_some() || self.matrix.is_some() || self.mesh.is_some()
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        if let Some(path) = &self.matrix {
            return Ok(ProblemSpec::Matrix { path: path.clone() });
        }
        let aniso = |a: &Self| -> Result<(f64, f64)> {
            Ok((a.delta.ok_or_else(|| anyhow!("--delta is required"))?, a.angle.ok_or_else(|| anyhow!("--angle is required"))?))
        };
        if let Some(path) = &self.mesh {
            return Ok(ProblemSpec::Mesh {
                path: path.clone(),
                delta: self.delta.unwrap_or(1.0),
                angle: self.angle.unwrap_or(0.0),
            });
        }
        let kind = self.problem.as_deref().ok_or_else(|| anyhow!("no problem given (use --problem, --matrix or --mesh)"))?;
        let n = || self.n.ok_or_else(|| anyhow!("--n is required for `{kind}`"));
        Ok(match kind {
            "identity" => ProblemSpec::Identity { n: n()? },
            "fd5" => ProblemSpec::Fd5 { n: n()? },
            "fe9" => ProblemSpec::Fe9 { n: n()? },
            "aniso-fd" => {
                let (delta, angle) = aniso(self)?;
                ProblemSpec::AnisoFd { n: n()?, delta, angle }
            }
            "aniso-fe" => {
                let (delta, angle) = aniso(self)?;
                ProblemSpec::AnisoFe { n: n()?, delta, angle }
            }
            "convdiff" => ProblemSpec::Convdiff {
                n: n()?,
                eps: self.eps.ok_or_else(|| anyhow!("--eps is required"))?,
                bx: self.bx.ok_or_else(|| anyhow!("--bx is required"))?,
                by: self.by.ok_or_else(|| anyhow!("--by is required"))?,
            },
            "jittered-mesh" => ProblemSpec::JitteredMesh {
                m: self.m.ok_or_else(|| anyhow!("--m is required"))?,
                jitter: self.jitter.unwrap_or(0.0),
                seed: self.mesh_seed.unwrap_or(0),
                delta: self.delta.unwrap_or(1.0),
                angle: self.angle.unwrap_or(0.0),
            },
            other => bail!("unknown problem `{other}`"),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoarsenerSection {
    /// greedy, sa, by-hand, by-hand-fd or by-hand-fe.
    pub method: String,
    pub subdomains: String,
    pub steps_per_dof: u64,
    pub steps_per_dof_per_sweep: u64,
    pub t_initial: f64,
    pub t_final_fraction: f64,
    pub x: usize,
    pub y: usize,
    pub exchange: Exchange,
}

impl Default for CoarsenerSection {
    fn default() -> Self {
        CoarsenerSection {
            method: "greedy".into(),
            subdomains: "global".into(),
            steps_per_dof: 3000,
            steps_per_dof_per_sweep: 5,
            t_initial: 1.0,
            t_final_fraction: 0.1,
            x: 1,
            y: 0,
            exchange: Exchange::Multiplicative,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub levels: usize,
    pub cycle: CycleKind,
    pub nu: usize,
    pub second_pass: bool,
    pub strength: f64,
    pub interpolation: InterpolationKind,
    pub dff: DffRule,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            levels: 2,
            cycle: CycleKind::V,
            nu: 1,
            second_pass: false,
            strength: 0.25,
            interpolation: InterpolationKind::Amgr,
            dff: DffRule::RowDominance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureSection {
    pub k: usize,
    /// Seed of the random initial guess; the run seed when absent.
    pub rho_seed: Option<u64>,
}

impl Default for MeasureSection {
    fn default() -> Self {
        MeasureSection { k: 800, rho_seed: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub matrix: Option<PathBuf>,
    pub splitting: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Everything a run depends on. Loaded from TOML, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub theta: f64,
    pub seed: Option<u64>,
    pub problem: Option<ProblemSpec>,
    pub coarsener: CoarsenerSection,
    pub solver: SolverSection,
    pub measure: MeasureSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta: 0.56,
            seed: None,
            problem: None,
            coarsener: CoarsenerSection::default(),
            solver: SolverSection::default(),
            measure: MeasureSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn problem(&self) -> Result<&ProblemSpec> {
        self.problem.as_ref().ok_or_else(|| anyhow!("no problem given (use --problem, --matrix, --mesh or a config file)"))
    }

    /// Resolves `by-hand` to the variant matching the discretization.
    pub fn method(&self) -> Result<String> {
        let m = self.coarsener.method.as_str();
        if m != "by-hand" {
            return Ok(m.to_string());
        }
        match self.problem()? {
            ProblemSpec::Fd5 { .. } | ProblemSpec::AnisoFd { .. } => Ok("by-hand-fd".into()),
            ProblemSpec::Fe9 { .. } | ProblemSpec::AnisoFe { .. } => Ok("by-hand-fe".into()),
            other => bail!("by-hand splittings need a structured fd or fe problem, not {}", other.label()),
        }
    }

    pub fn anneal(&self) -> AnnealConfig {
        let c = &self.coarsener;
        AnnealConfig {
            theta: self.theta,
            total_steps_per_dof: c.steps_per_dof,
            steps_per_dof_per_sweep: c.steps_per_dof_per_sweep,
            t_initial: c.t_initial,
            t_final_fraction: c.t_final_fraction,
            x: c.x,
            y: c.y,
            seed: self.seed.unwrap_or(0),
            exchange: c.exchange,
        }
    }

    pub fn amgr_options(&self) -> AmgrOptions {
        let s = &self.solver;
        AmgrOptions {
            theta: self.theta,
            dff: s.dff,
            interpolation: s.interpolation,
            symmetric: None,
            cycle: s.cycle,
            nu: s.nu,
            max_levels: s.levels,
            coarse_cap: AmgrOptions::default().coarse_cap,
            second_pass: s.second_pass.then_some(s.strength),
            stall_ratio: AmgrOptions::default().stall_ratio,
        }
    }

    /// Cross-field checks that the type system cannot express.
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.5 && self.theta <= 1.0) {
            bail!("theta must lie in (1/2, 1], got {}", self.theta);
        }
        let p = self.problem()?;
        if self.coarsener.method == "sa" && self.coarsener.subdomains.starts_with("geometric") && p.grid_size().is_none() {
            bail!("geometric subdomains require a structured generator, not {}", p.label());
        }
        if self.solver.levels < 2 {
            bail!("a hierarchy needs at least two levels");
        }
        if self.measure.k == 0 {
            bail!("k must be at least 1");
        }
        Ok(())
    }
}
