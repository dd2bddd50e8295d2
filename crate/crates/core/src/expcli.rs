//! Experiment runner behind the `infocomm` binary.
//!
//! Exit codes: 0 pass, 1 checked-property failure, 2 config or precondition
//! error, 3 I/O or schema error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::community::{CommunityError, CommunityStructure, Economy, StructureDocument};
use crate::demand::{sample_profiles, ContinuousDemand, SupplyProfile};
use crate::equilibrium::{delta_sweep, verify_epsilon_equilibrium, EquilibriumReport, SweepSpec, SweepTable};
use crate::kernels::{validate_assumption1, AbilityKernel, InterestKernel, KernelPair};
use crate::best_response::Market;
use crate::propcheck::{check_all, CheckConfig, PropertyVerdict};
use crate::torus::SpaceConfig;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Points per demand profile dump.
const PROFILE_POINTS: usize = 2000;
const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Schema(_) => EXIT_IO,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceSection {
    pub half_length: f64,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { half_length: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub a1: f64,
    pub a2: f64,
    pub g0: f64,
    pub w: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            a1: 0.3,
            a2: 0.4,
            g0: 0.8,
            w: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconomySection {
    pub e_p: f64,
    pub e_q: f64,
    pub c: f64,
}

impl Default for EconomySection {
    fn default() -> Self {
        Self {
            e_p: 1.0,
            e_q: 1.0,
            c: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub k_d: usize,
    pub k_s: usize,
    pub anchor_d: f64,
    pub anchor_s: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            k_d: 400,
            k_s: 200,
            anchor_d: -1.0,
            anchor_s: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommunitySection {
    pub half_length: f64,
    pub anchor: f64,
}

impl Default for CommunitySection {
    fn default() -> Self {
        Self {
            half_length: 0.2,
            anchor: -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    /// Band margin as a fraction of the community half length.
    pub margin: f64,
    pub epsilon: f64,
    pub slack: f64,
    pub concavity_tol: f64,
    pub seed: u64,
}

impl Default for CheckSection {
    fn default() -> Self {
        let c = CheckConfig::default();
        Self {
            margin: c.margin,
            epsilon: DEFAULT_EPSILON,
            slack: c.slack,
            concavity_tol: c.concavity_tol,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub levels: usize,
    /// Grid counts of the coarsest level; each further level doubles both.
    pub start_k_d: usize,
    pub start_k_s: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            levels: 3,
            start_k_d: 200,
            start_k_s: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub space: SpaceSection,
    pub kernels: KernelSection,
    pub economy: EconomySection,
    pub grids: GridSection,
    pub community: CommunitySection,
    pub check: CheckSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// A config that passed validation, with non-fatal findings.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: ExperimentConfig,
    pub space: SpaceConfig,
    pub kernels: KernelPair,
    pub economy: Economy,
    pub warnings: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml(&text)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn run_dir(&self, out: Option<&Path>) -> PathBuf {
        out.unwrap_or(&self.output.directory).join(format!("run_{}", self.hash()))
    }

    /// Checks the model assumptions; the community preconditions are checked when building.
    pub fn validate(&self) -> Result<ValidatedConfig, CliError> {
        let cfg_err = |m: String| CliError::Config(m);
        let space = SpaceConfig::new(self.space.half_length).map_err(|e| cfg_err(e.to_string()))?;
        let k = &self.kernels;
        let kernels = KernelPair {
            interest: InterestKernel::quadratic(k.a1, k.a2, space.half_length),
            ability: AbilityKernel::truncated_parabola(k.g0, k.w),
        };
        validate_assumption1(&kernels.interest, &kernels.ability).map_err(|e| cfg_err(e.to_string()))?;
        let e = &self.economy;
        if !(e.e_p > 0.0 && e.e_p <= 1.0) {
            return Err(cfg_err(format!("E_p must lie in (0, 1], got {}", e.e_p)));
        }
        if !(e.e_q > 0.0 && e.e_q.is_finite()) {
            return Err(cfg_err(format!("E_q must be positive, got {}", e.e_q)));
        }
        if !(e.c >= 0.0 && e.c.is_finite()) {
            return Err(cfg_err(format!("cost must be non-negative, got {}", e.c)));
        }
        let ch = &self.check;
        if !(ch.margin >= 0.0 && ch.margin < 1.0) {
            return Err(cfg_err(format!("check.margin must lie in [0, 1), got {}", ch.margin)));
        }
        if !(ch.epsilon >= 0.0) || !(ch.slack >= 0.0) || !(ch.concavity_tol >= 0.0) {
            return Err(cfg_err("check tolerances must be non-negative".into()));
        }
        if self.sweep.levels == 0 {
            return Err(cfg_err("sweep.levels must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        let margin = kernels.interest.value(0.0) * kernels.ability.value(0.0) - e.c;
        if margin <= 0.0 {
            warnings.push(format!("f(0)g(0)-c <= 0 ({margin}); utilities may be non-positive"));
        }
        Ok(ValidatedConfig {
            config: self.clone(),
            space,
            kernels,
            economy: Economy {
                e_p: e.e_p,
                e_q: e.e_q,
                cost: e.c,
            },
            warnings,
        })
    }
}

impl ValidatedConfig {
    fn sweep_spec(&self) -> SweepSpec {
        let c = &self.config;
        SweepSpec {
            space: self.space,
            kernels: self.kernels,
            economy: self.economy,
            k_d: c.sweep.start_k_d,
            k_s: c.sweep.start_k_s,
            anchor_d: c.grids.anchor_d,
            anchor_s: c.grids.anchor_s,
            cell_half_length: c.community.half_length,
            cell_anchor: c.community.anchor,
            levels: c.sweep.levels,
            epsilon: c.check.epsilon,
        }
    }

    /// Canonical structure at the configured grid counts.
    pub fn build(&self) -> Result<CommunityStructure, CliError> {
        let c = &self.config;
        let spec = SweepSpec {
            k_d: c.grids.k_d,
            k_s: c.grids.k_s,
            ..self.sweep_spec()
        };
        spec.build_level(0).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn check_config(&self) -> CheckConfig {
        let ch = &self.config.check;
        CheckConfig {
            margin: ch.margin,
            slack: ch.slack,
            concavity_tol: ch.concavity_tol,
            seed: ch.seed,
            ..CheckConfig::default()
        }
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn opt(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn load_structure(path: &Path) -> Result<CommunityStructure, CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Io("empty structure path".into()));
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let doc: StructureDocument = serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))?;
    CommunityStructure::from_document(doc).map_err(|e| match e {
        CommunityError::Schema(m) => CliError::Schema(m),
        other => CliError::Schema(other.to_string()),
    })
}

/// Writes `structure.json` and the per-community profile dumps.
pub fn write_structure(dir: &Path, s: &CommunityStructure) -> Result<PathBuf, CliError> {
    create_dir(&dir.join("profiles"))?;
    let path = dir.join("structure.json");
    write_json(&path, &s.to_document())?;
    let m = Market::from_structure(s);
    for c in &s.communities {
        let cd = ContinuousDemand {
            interval: c.interval,
            kernel: s.kernels.interest,
            rate: s.economy.e_p,
            space: s.space,
        };
        let samples = sample_profiles(&m.views[c.id].demand, &cd, PROFILE_POINTS);
        write_csv(
            &dir.join(format!("profiles/demand_{}.csv", c.id)),
            &["x", "p_delta", "p_cont", "gap"],
            samples
                .iter()
                .map(|r| vec![fmt_f64(r.x), fmt_f64(r.p_delta), fmt_f64(r.p_cont), fmt_f64(r.gap)]),
        )?;
        let raw: Vec<_> = m.views[c.id]
            .atoms
            .iter()
            .map(|(z, a)| (*z, s.producer_grid.points[*z], a.location, a.mass))
            .collect();
        let supply = SupplyProfile::new(c.id, &raw, &s.kernels.ability, &s.space);
        write_csv(
            &dir.join(format!("profiles/atoms_{}.csv", c.id)),
            &["producer", "centre", "location", "mass", "quality"],
            supply.atoms.iter().map(|a| {
                vec![
                    a.producer.to_string(),
                    fmt_f64(s.producer_grid.points[a.producer].coord()),
                    fmt_f64(a.location.coord()),
                    fmt_f64(a.mass),
                    fmt_f64(a.quality),
                ]
            }),
        )?;
    }
    Ok(path)
}

pub fn write_report(dir: &Path, report: &EquilibriumReport) -> Result<(), CliError> {
    create_dir(dir)?;
    write_json(&dir.join("equilibrium.json"), report)?;
    write_csv(
        &dir.join("gaps.csv"),
        &[
            "agent",
            "role",
            "home_community",
            "u_current",
            "u_best_deviation",
            "gap",
            "scaled_gap",
            "best_community",
        ],
        report.rows.iter().map(|r| {
            vec![
                r.agent.to_string(),
                r.role.as_str().to_string(),
                opt(r.home_community),
                fmt_f64(r.u_current),
                fmt_f64(r.u_best_deviation),
                fmt_f64(r.gap),
                fmt_f64(r.scaled_gap),
                opt(r.best_community),
            ]
        }),
    )
}

pub fn write_verdicts(dir: &Path, verdicts: &[PropertyVerdict]) -> Result<(), CliError> {
    create_dir(dir)?;
    write_json(&dir.join("verdicts.json"), &verdicts)
}

pub fn write_sweep(dir: &Path, table: &SweepTable) -> Result<(), CliError> {
    create_dir(dir)?;
    write_csv(
        &dir.join("sweep.csv"),
        &[
            "level",
            "k_d",
            "k_s",
            "delta_d",
            "delta_s",
            "max_gap",
            "max_raw_gap",
            "min_utility",
            "riemann_gap",
            "riemann_bound",
            "xstar_gap",
            "consumer_value_gap",
            "producer_value_gap",
        ],
        table.rows.iter().map(|r| {
            let st = &r.stats;
            vec![
                r.level.to_string(),
                r.k_d.to_string(),
                r.k_s.to_string(),
                fmt_f64(r.delta_d),
                fmt_f64(r.delta_s),
                fmt_f64(r.max_gap),
                fmt_f64(r.max_raw_gap),
                fmt_f64(r.min_utility),
                fmt_f64(st.riemann_gap),
                fmt_f64(st.riemann_bound),
                fmt_f64(st.xstar_gap),
                fmt_f64(st.consumer_value_gap),
                fmt_f64(st.producer_value_gap),
            ]
        }),
    )
}

fn sweep_passes(t: &SweepTable) -> bool {
    let last = t.rows.len() - 1;
    let decayed = last == 0 || t.rows[last].max_gap < t.rows[0].max_gap;
    t.gap_non_increasing
        && decayed
        && t.riemann_non_increasing
        && t.xstar_non_increasing
        && t.consumer_value_non_increasing
        && t.producer_value_non_increasing
}

#[derive(Debug, Parser)]
#[command(name = "infocomm", version, about = "Build and verify interval community equilibria")]
pub struct Cli {
    /// Worker threads for agent-parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the canonical structure and write structure.json with profile dumps.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan every agent's best deviation; exit 0 iff the structure is an ε-equilibrium.
    Verify {
        #[arg(value_parser = clap::builder::OsStringValueParser::new().map(PathBuf::from))]
        structure: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Output directory (default: next to the structure file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every property check; exit 0 iff all pass.
    Props {
        #[arg(value_parser = clap::builder::OsStringValueParser::new().map(PathBuf::from))]
        structure: PathBuf,
        #[arg(long)]
        margins: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine both grids dyadically and tabulate the convergence measurements.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, verify, check and sweep in one run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path, levels: Option<usize>) -> Result<ValidatedConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(l) = levels {
        cfg.sweep.levels = l;
    }
    let v = cfg.validate()?;
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    Ok(v)
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn cmd_build(config: &Path, out: Option<&Path>) -> Result<(i32, PathBuf), CliError> {
    let v = load_config(config, None)?;
    let s = v.build()?;
    let dir = v.config.run_dir(out);
    create_dir(&dir)?;
    if !v.warnings.is_empty() {
        fs::write(dir.join("warnings.txt"), v.warnings.join("\n") + "\n").map_err(|e| io_err(&dir, e))?;
    }
    let path = write_structure(&dir, &s)?;
    println!("structure: {} ({} communities)", path.display(), s.communities.len());
    Ok((EXIT_PASS, path))
}

pub fn cmd_verify(structure: &Path, epsilon: f64, out: Option<&Path>) -> Result<i32, CliError> {
    let s = load_structure(structure)?;
    let report = verify_epsilon_equilibrium(&s, epsilon);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| parent_dir(structure));
    write_report(&dir, &report)?;
    println!(
        "max gap {} (consumer {}, producer {}), epsilon {}: {}",
        fmt_f64(report.max_gap()),
        fmt_f64(report.max_consumer_gap),
        fmt_f64(report.max_producer_gap),
        epsilon,
        if report.is_epsilon_equilibrium { "equilibrium" } else { "NOT an equilibrium" }
    );
    if let Some(n) = &report.positivity.notice {
        eprintln!("warning: {n}");
    }
    Ok(if report.is_epsilon_equilibrium { EXIT_PASS } else { EXIT_PROPERTY })
}

pub fn cmd_props(structure: &Path, cfg: CheckConfig, out: Option<&Path>) -> Result<i32, CliError> {
    let s = load_structure(structure)?;
    let verdicts = check_all(&s, &cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| parent_dir(structure));
    write_verdicts(&dir, &verdicts)?;
    for v in &verdicts {
        println!("{:<12} {} ({} witnesses)", v.id, if v.pass { "pass" } else { "FAIL" }, v.n_witnesses);
    }
    Ok(if verdicts.iter().all(|v| v.pass) { EXIT_PASS } else { EXIT_PROPERTY })
}

pub fn cmd_sweep(config: &Path, levels: Option<usize>, out: Option<&Path>) -> Result<i32, CliError> {
    let v = load_config(config, levels)?;
    let table = delta_sweep(&v.sweep_spec()).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = v.config.run_dir(out);
    write_sweep(&dir, &table)?;
    for r in &table.rows {
        println!(
            "level {} K_d={} K_s={} gap={} riemann={} xstar={}",
            r.level,
            r.k_d,
            r.k_s,
            fmt_f64(r.max_gap),
            fmt_f64(r.stats.riemann_gap),
            fmt_f64(r.stats.xstar_gap)
        );
    }
    Ok(if sweep_passes(&table) { EXIT_PASS } else { EXIT_PROPERTY })
}

pub fn cmd_run(config: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let (_, structure) = cmd_build(config, out)?;
    let v = load_config(config, None)?;
    let verify = cmd_verify(&structure, v.config.check.epsilon, None)?;
    let props = cmd_props(&structure, v.check_config(), None)?;
    let sweep = cmd_sweep(config, None, out)?;
    Ok(verify.max(props).max(sweep))
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Build { config, out } => cmd_build(config, out.as_deref()).map(|r| r.0),
        Command::Verify { structure, epsilon, out } => cmd_verify(structure, *epsilon, out.as_deref()),
        Command::Props {
            structure,
            margins,
            seed,
            out,
        } => {
            let mut cfg = CheckConfig::default();
            if let Some(m) = margins {
                cfg.margin = *m;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            cmd_props(structure, cfg, out.as_deref())
        }
        Command::Sweep { config, levels, out } => cmd_sweep(config, *levels, out.as_deref()),
        Command::Run { config, out } => cmd_run(config, out.as_deref()),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let c = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.grids.k_d, 400);
        assert_eq!(c.sweep.levels, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml("[grids]\nkd = 3\n").unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(ExperimentConfig::from_toml("[colour]\nx = 1\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.economy.c = 0.06;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation_clauses() {
        let mut c = ExperimentConfig::default();
        c.economy.c = 0.9;
        let v = c.validate().unwrap();
        assert!(v.warnings[0].contains("f(0)g(0)-c <= 0"));

        let mut c = ExperimentConfig::default();
        c.community.half_length = 0.3;
        let e = c.validate().unwrap().build().unwrap_err();
        assert!(e.to_string().contains("not an integer"), "{e}");
        assert_eq!(e.exit_code(), EXIT_CONFIG);

        let mut c = ExperimentConfig::default();
        c.kernels.a1 = -0.1;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));

        let mut c = ExperimentConfig::default();
        c.sweep.levels = 0;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
