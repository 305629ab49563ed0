use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::search::{Method, Verdict, MAX_COLORS};
use crate::structure::ThickFamilySpec;
use crate::template::{builtin_template, Builtin, PatternTemplate};
use crate::walker::WalkParams;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Search,
    Count,
    Threshold,
    Analyze,
    Cover,
    Walk,
    ExportCnf,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Search => "search",
            CommandKind::Count => "count",
            CommandKind::Threshold => "threshold",
            CommandKind::Analyze => "analyze",
            CommandKind::Cover => "cover",
            CommandKind::Walk => "walk",
            CommandKind::ExportCnf => "export-cnf",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Pretty,
    Csv,
    Jsonl,
}

/// Everything a command needs. Loaded from a JSON file, then overridden by
/// flags; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: CommandKind,
    /// `int:LO..HI`, `fp:P` or `qgrid:MAXNUM/MAXDEN`.
    pub ground: Option<GroundSet>,
    /// Built-in template name.
    pub template: Builtin,
    /// Parameter of `quad_ap`.
    pub k: Option<i64>,
    /// JSON template file; takes precedence over `template`.
    pub template_file: Option<PathBuf>,
    pub colors: usize,
    pub method: Method,
    pub budget_bits: f64,
    pub decision_limit: Option<u64>,
    pub solver_command: Option<String>,
    pub solver_output: Option<PathBuf>,
    /// Threshold: first `HI` scanned; defaults to the ground's `LO`.
    pub scan_from: Option<i64>,
    /// Threshold over prime fields instead of intervals.
    pub primes: Vec<u64>,
    pub walker: WalkParams,
    /// Syndetic width `f`.
    pub width: usize,
    /// Defaults to all subsets of size at most `width`.
    pub family: Option<ThickFamilySpec>,
    /// IP rank for `analyze`.
    pub rank: usize,
    /// Coloring file for count, analyze, cover and walk; a seeded random
    /// coloring is used when absent.
    pub coloring: Option<PathBuf>,
    pub seed: u64,
    pub format: ReportFormat,
    pub output: Option<PathBuf>,
    pub coloring_out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub cnf_out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub registry: Option<PathBuf>,
    pub expect: Option<Verdict>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: CommandKind::Search,
            ground: None,
            template: Builtin::Quad,
            k: None,
            template_file: None,
            colors: 2,
            method: Method::Sat,
            budget_bits: 48.0,
            decision_limit: None,
            solver_command: None,
            solver_output: None,
            scan_from: None,
            primes: Vec::new(),
            walker: WalkParams::default(),
            width: 2,
            family: None,
            rank: 2,
            coloring: None,
            seed: 0,
            format: ReportFormat::Pretty,
            output: None,
            coloring_out: None,
            trace_out: None,
            cnf_out: None,
            threads: None,
            registry: None,
            expect: None,
        }
    }
}

/// Command-line overrides; every flag maps onto one config field.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub ground: Option<String>,
    #[arg(long)]
    pub template: Option<String>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub template_file: Option<PathBuf>,
    #[arg(long)]
    pub colors: Option<usize>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub budget_bits: Option<f64>,
    #[arg(long)]
    pub decision_limit: Option<u64>,
    #[arg(long)]
    pub solver_command: Option<String>,
    #[arg(long)]
    pub solver_output: Option<PathBuf>,
    #[arg(long)]
    pub scan_from: Option<i64>,
    /// Comma separated primes.
    #[arg(long, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub alpha_floor: Option<String>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub family_size: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub coloring: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub coloring_out: Option<PathBuf>,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    #[arg(long)]
    pub cnf_out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub expect: Option<String>,
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        path: path.to_owned(),
        message: message.into(),
    }
}

/// Reads a config file. Unknown keys are reported by name.
pub fn load_config_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    config_from_json(&text)
}

pub fn config_from_json(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .unwrap_or("")
            .to_owned();
        CliError::Validation {
            path: key,
            message: msg,
        }
    })
}

/// Ground set named in a saved coloring.
fn coloring_ground(path: &Path) -> Result<GroundSet, CliError> {
    #[derive(Deserialize)]
    struct Header {
        ground: GroundSet,
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str::<Header>(&text)
        .map(|h| h.ground)
        .map_err(|e| invalid("coloring", format!("{}: {e}", path.display())))
}

/// File (if any) overridden by flags, then validated. Without a ground,
/// the ground of `coloring` is used.
pub fn parse_config(command: CommandKind, flags: &Flags) -> Result<RunConfig, CliError> {
    let mut c = match &flags.config {
        Some(p) => load_config_file(p)?,
        None => RunConfig::default(),
    };
    c.command = command;
    if let Some(g) = &flags.ground {
        c.ground = Some(
            g.parse()
                .map_err(|e: crate::ParseError| invalid("ground", e.message))?,
        );
    }
    if let Some(t) = &flags.template {
        c.template = t
            .parse()
            .map_err(|e: crate::TemplateError| invalid("template", e.to_string()))?;
    }
    if let Some(m) = &flags.method {
        c.method = m.parse().map_err(|e: String| invalid("method", e))?;
    }
    if let Some(a) = &flags.alpha_floor {
        c.walker.alpha_floor = a
            .parse()
            .map_err(|e: crate::ParseError| invalid("walker.alphaFloor", e.message))?;
    }
    if let Some(e) = &flags.expect {
        c.expect = Some(match e.as_str() {
            "avoiding" => Verdict::Avoiding,
            "forced" => Verdict::Forced,
            _ => {
                return Err(invalid(
                    "expect",
                    format!("expected avoiding or forced, got `{e}`"),
                ))
            }
        });
    }
    if let Some(size) = flags.family_size {
        c.family = Some(ThickFamilySpec::subsets(size));
    }
    macro_rules! set {
        ($($flag:ident => $($field:ident).+),* $(,)?) => {
            $(if let Some(v) = &flags.$flag { c.$($field).+ = v.clone().into(); })*
        };
    }
    set!(
        k => k,
        template_file => template_file,
        colors => colors,
        budget_bits => budget_bits,
        decision_limit => decision_limit,
        solver_command => solver_command,
        solver_output => solver_output,
        scan_from => scan_from,
        primes => primes,
        steps => walker.n,
        s => walker.s,
        r => walker.r,
        restarts => walker.restarts,
        width => width,
        rank => rank,
        coloring => coloring,
        seed => seed,
        format => format,
        output => output,
        coloring_out => coloring_out,
        trace_out => trace_out,
        cnf_out => cnf_out,
        threads => threads,
        registry => registry,
    );
    if let Some(seed) = flags.seed {
        c.walker.seed = seed;
    }
    if let (None, Some(p)) = (c.ground, &c.coloring) {
        c.ground = Some(coloring_ground(p)?);
    }
    c.validate()?;
    Ok(c)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.colors == 0 || self.colors > MAX_COLORS {
            return Err(invalid("colors", format!("must be in 1..={MAX_COLORS}")));
        }
        let needs_ground = !(self.command == CommandKind::Threshold && !self.primes.is_empty());
        if needs_ground && self.ground.is_none() {
            return Err(invalid("ground", "required"));
        }
        if self.width == 0 {
            return Err(invalid("width", "must be at least 1"));
        }
        if self.rank == 0 {
            return Err(invalid("rank", "must be at least 1"));
        }
        if !(self.budget_bits > 0.0) {
            return Err(invalid("budgetBits", "must be positive"));
        }
        if self.walker.n < 2 {
            return Err(invalid("walker.n", "must be at least 2"));
        }
        if self.walker.alpha_floor <= Rational::zero() {
            return Err(invalid("walker.alphaFloor", "must be positive"));
        }
        if self.walker.r == 0 {
            return Err(invalid("walker.r", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        if self.method == Method::SatExternal
            && self.solver_command.is_none()
            && self.solver_output.is_none()
        {
            return Err(invalid(
                "solverOutput",
                "the external method needs solverCommand or solverOutput",
            ));
        }
        if self.template_file.is_none() {
            builtin_template(self.template, self.k).map_err(|e| invalid("k", e.to_string()))?;
        }
        match (self.command, self.ground) {
            (CommandKind::Walk, Some(g)) if !g.is_prime_field() => {
                Err(invalid("ground", "walk needs a prime field"))
            }
            (CommandKind::Threshold, Some(GroundSet::IntegerInterval { lo, hi })) => {
                match self.scan_from {
                    Some(s) if s < lo || s > hi => {
                        Err(invalid("scanFrom", format!("must lie in {lo}..={hi}")))
                    }
                    _ => Ok(()),
                }
            }
            (CommandKind::Threshold, Some(_)) if self.primes.is_empty() => Err(invalid(
                "ground",
                "threshold scans integer intervals; use primes for fields",
            )),
            _ => Ok(()),
        }
    }

    pub fn template(&self) -> Result<PatternTemplate, CliError> {
        match &self.template_file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                    path: p.clone(),
                    source,
                })?;
                PatternTemplate::from_json(&text)
                    .map_err(|e| invalid("templateFile", e.to_string()))
            }
            None => builtin_template(self.template, self.k)
                .map_err(|e| invalid("template", e.to_string())),
        }
    }

    pub fn family_spec(&self) -> ThickFamilySpec {
        self.family
            .clone()
            .unwrap_or_else(|| ThickFamilySpec::subsets(self.width))
    }

    /// Canonical JSON: keys sorted, no whitespace.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
