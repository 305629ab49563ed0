//! Configuration, dispatch, reports and the run registry behind the
//! `monopat` binary.

mod config;
mod registry;
mod report;

pub use config::{
    config_from_json, load_config_file, parse_config, CommandKind, Flags, ReportFormat, RunConfig,
};
pub use registry::{
    append_run, now_seconds, read_registry, registry_path, RegistryContents, RunRecord,
    REGISTRY_ENV,
};
pub use report::{emit_report, Report};

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::ground::GroundSet;
use crate::search::{
    avoidance_search, count_monochromatic, encode_cnf_with_threads, field_threshold,
    threshold_scan, AvoidanceResult, Coloring, CompiledTemplate, ExternalSolver, SearchError,
    SearchOptions, Verdict,
};
use crate::structure::{
    cover_decomposition, is_ipr_star, is_syndetic, is_thick, Ambient, ElementSet, StructureError,
    ThickTestFamily, MAX_AMBIENT,
};
use crate::walker::{check_trace, walk_theorem_m2, WalkFailure};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{0}")]
    Structure(#[from] StructureError),
    #[error("internal verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 2 for bad input, 3 for a failed internal check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Search(SearchError::VerificationFailed(_))
            | CliError::Structure(StructureError::VerificationFailed(_))
            | CliError::Verification(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// 0, or 1 when an avoiding verdict was expected and the pattern was
    /// forced.
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub seconds: f64,
}

fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn search_options(c: &RunConfig) -> SearchOptions {
    SearchOptions {
        exhaustive_budget_bits: c.budget_bits,
        decision_limit: c.decision_limit,
        external: match (&c.solver_command, &c.solver_output) {
            (None, None) => None,
            (cmd, out) => Some(ExternalSolver {
                command: cmd.clone(),
                cnf_path: c
                    .cnf_out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("monopat.cnf")),
                output_path: out.clone().unwrap_or_else(|| PathBuf::from("monopat.out")),
            }),
        },
        ..SearchOptions::default()
    }
}

fn ground_of(c: &RunConfig) -> GroundSet {
    c.ground.expect("validated")
}

fn load_coloring(c: &RunConfig) -> Result<Coloring, CliError> {
    let ground = ground_of(c);
    match &c.coloring {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let col: Coloring = serde_json::from_str(&text).map_err(|e| CliError::Validation {
                path: "coloring".into(),
                message: format!("{}: {e}", p.display()),
            })?;
            if col.ground() != ground {
                return Err(CliError::Validation {
                    path: "coloring".into(),
                    message: format!(
                        "coloring is over {}, config ground is {ground}",
                        col.ground()
                    ),
                });
            }
            Ok(col)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            Coloring::random(ground, c.colors, &mut rng).map_err(|e| CliError::Validation {
                path: "colors".into(),
                message: e.to_string(),
            })
        }
    }
}

fn ambient_of(c: &RunConfig) -> Result<Ambient, CliError> {
    let ground = ground_of(c);
    if ground.len() > MAX_AMBIENT + 1 {
        return Err(CliError::Validation {
            path: "ground".into(),
            message: format!("structure commands support at most {MAX_AMBIENT} nonzero elements"),
        });
    }
    Ambient::nonzero(ground).map_err(|_| CliError::Validation {
        path: "ground".into(),
        message: "ground has no usable ambient".into(),
    })
}

fn family_of(c: &RunConfig, amb: &Ambient) -> Result<ThickTestFamily, CliError> {
    ThickTestFamily::from_spec(amb, &c.family_spec()).map_err(|e| CliError::Validation {
        path: "family".into(),
        message: e.to_string(),
    })
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Runs one validated command.
pub fn run(c: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut artifacts = Vec::new();
    let mut exit_code = 0;
    let report = match c.command {
        CommandKind::Search => {
            let ground = ground_of(c);
            let t = c.template()?;
            let r = avoidance_search(ground, c.colors, &t, c.method, &search_options(c))?;
            let mut rep = Report::new(
                format!(
                    "avoidance search for {t} over {ground}, {} colors",
                    c.colors
                ),
                &[
                    "ground", "n", "template", "method", "verdict", "count", "seconds",
                ],
            );
            let count = CompiledTemplate::new(&t, ground).all_instances().len();
            rep.push(
                vec![
                    ground.to_string(),
                    c.colors.to_string(),
                    t.to_string(),
                    c.method.name().into(),
                    r.verdict().name().into(),
                    count.to_string(),
                    format!("{:.3}", r.seconds()),
                ],
                serde_json::to_value(&r).expect("result serializes"),
            );
            if let (AvoidanceResult::Avoiding { coloring, .. }, Some(p)) = (&r, &c.coloring_out) {
                write_file(
                    p,
                    &serde_json::to_string(coloring).expect("coloring serializes"),
                )?;
                artifacts.push(p.clone());
            }
            if let AvoidanceResult::Forced {
                externally_certified: true,
                ..
            } = r
            {
                rep.notes
                    .push("forced verdict reported by the external solver, not re-checked".into());
            }
            if c.expect == Some(Verdict::Avoiding) && r.is_forced() {
                exit_code = 1;
            }
            rep.summary = format!("verdict: {}", r.verdict().name());
            rep
        }
        CommandKind::Count => {
            let col = load_coloring(c)?;
            let t = c.template()?;
            let counts = count_monochromatic(&col, &t);
            let mut rep = Report::new(
                format!("monochromatic {t} over {}", col.ground()),
                &["color", "count"],
            );
            for (i, n) in counts.per_color.iter().enumerate() {
                rep.push(
                    vec![i.to_string(), n.to_string()],
                    json!({"color": i, "count": n}),
                );
            }
            rep.push(
                vec!["total".into(), counts.total.to_string()],
                json!({"color": "total", "count": counts.total}),
            );
            rep.summary = format!("total: {}", counts.total);
            rep
        }
        CommandKind::Threshold => {
            let t = c.template()?;
            let opts = search_options(c);
            if c.primes.is_empty() {
                let GroundSet::IntegerInterval { lo, hi } = ground_of(c) else {
                    unreachable!("validated")
                };
                let table = threshold_scan(
                    lo,
                    c.scan_from.unwrap_or(lo)..=hi,
                    c.colors,
                    &t,
                    c.method,
                    &opts,
                )?;
                let mut rep = Report::new(
                    format!("threshold scan of {t} on [{lo}..N], {} colors", c.colors),
                    &["N", "verdict", "inferred", "seconds"],
                );
                for r in &table.rows {
                    rep.push(
                        vec![
                            r.hi.to_string(),
                            r.verdict.name().into(),
                            r.inferred.to_string(),
                            format!("{:.3}", r.seconds),
                        ],
                        serde_json::to_value(r).expect("row serializes"),
                    );
                }
                rep.summary = match table.minimal_forced {
                    Some(n) => format!("least forced N: {n}"),
                    None => "no forced N in range".into(),
                };
                if c.expect == Some(Verdict::Avoiding) && table.minimal_forced.is_some() {
                    exit_code = 1;
                }
                rep
            } else {
                let rows = field_threshold(c.colors, &t, &c.primes, c.method, &opts)?;
                let mut rep = Report::new(
                    format!("empirical per-prime verdicts for {t}, {} colors", c.colors),
                    &["p", "verdict", "seconds"],
                );
                for r in &rows {
                    rep.push(
                        vec![
                            r.p.to_string(),
                            r.verdict.name().into(),
                            format!("{:.3}", r.seconds),
                        ],
                        serde_json::to_value(r).expect("row serializes"),
                    );
                }
                rep.notes
                    .push("empirical: no monotonicity in p is assumed".into());
                let forced: Vec<u64> = rows
                    .iter()
                    .filter(|r| r.verdict == Verdict::Forced)
                    .map(|r| r.p)
                    .collect();
                rep.summary = format!(
                    "forced primes: {}",
                    if forced.is_empty() {
                        "none".into()
                    } else {
                        join(&forced)
                    }
                );
                if c.expect == Some(Verdict::Avoiding) && !forced.is_empty() {
                    exit_code = 1;
                }
                rep
            }
        }
        CommandKind::Analyze => {
            let col = load_coloring(c)?;
            let amb = ambient_of(c)?;
            let fam = family_of(c, &amb)?;
            let classes: Vec<ElementSet> = (0..col.num_colors())
                .map(|m| {
                    let mut s = amb.empty_set();
                    (0..amb.len())
                        .filter(|&i| col.color_of(amb.value(i)) == Some(m))
                        .for_each(|i| s.insert(i));
                    s
                })
                .collect();
            let mut rep = Report::new(
                format!(
                    "structure of the color classes on the nonzero part of {}",
                    col.ground()
                ),
                &["color", "size", "syndetic", "thick", "ip_star"],
            );
            for (m, s) in classes.iter().enumerate() {
                let synd = is_syndetic(s, c.width, &amb);
                let thick = is_thick(s, &fam, &amb);
                let (star, counter) = is_ipr_star(s, c.rank, &amb);
                let show = |w: &Option<Vec<crate::Rational>>| match w {
                    Some(v) => format!("yes [{}]", join(v)),
                    None => "no".into(),
                };
                rep.push(
                    vec![
                        m.to_string(),
                        s.count_ones(..).to_string(),
                        show(&synd.as_ref().map(|w| w.f.clone())),
                        thick
                            .as_ref()
                            .map_or("no".into(), |t| format!("yes ({} shifts)", t.len())),
                        if star {
                            "yes".into()
                        } else {
                            format!(
                                "no [{}]",
                                join(
                                    &counter
                                        .as_ref()
                                        .map(|w| w.sequence.clone())
                                        .unwrap_or_default()
                                )
                            )
                        },
                    ],
                    json!({
                        "color": m,
                        "size": s.count_ones(..),
                        "syndetic": synd.map(|w| w.f),
                        "thickShifts": thick,
                        "ipStar": star,
                        "ipCounterexample": counter.map(|w| w.sequence),
                    }),
                );
            }
            rep.summary = format!(
                "width {}, rank {}, {} test sets",
                c.width,
                c.rank,
                fam.len()
            );
            rep
        }
        CommandKind::Cover => {
            let col = load_coloring(c)?;
            let amb = ambient_of(c)?;
            let fam = family_of(c, &amb)?;
            let cover = cover_decomposition(&col, c.width, &amb, &fam)?;
            let mut rep = Report::new(
                format!(
                    "cover decomposition of {} colors over {}",
                    col.num_colors(),
                    col.ground()
                ),
                &["group", "colors", "certified_sets"],
            );
            for (l, y) in cover.ys.iter().enumerate() {
                rep.push(
                    vec![l.to_string(), join(y), cover.thickness_certificates[l].len().to_string()],
                    json!({"group": l, "colors": y, "thickShifts": cover.thickness_certificates[l]}),
                );
            }
            rep.notes.push(format!("F = [{}]", join(&cover.f)));
            if let Some(p) = &c.trace_out {
                write_file(
                    p,
                    &serde_json::to_string_pretty(&cover).expect("cover serializes"),
                )?;
                artifacts.push(p.clone());
            }
            rep.summary = format!("k = {}, |F| = {}", cover.k, cover.f.len());
            rep
        }
        CommandKind::Walk => {
            let col = load_coloring(c)?;
            let amb = ambient_of(c)?;
            let fam = family_of(c, &amb)?;
            let result = walk_theorem_m2(&col, &c.walker, c.width, &fam);
            let mut rep = Report::new(
                format!(
                    "quadruple walk over {} with {} colors",
                    col.ground(),
                    col.num_colors()
                ),
                &["verdict", "color", "x", "y", "alternatives"],
            );
            let trace = match &result {
                Ok(s) => Some(&s.trace),
                Err(e) => e.trace.as_ref(),
            };
            if let Some(t) = trace {
                for s in &t.steps {
                    rep.notes.push(format!(
                        "step {}: |A| = {}, density {}, tuple {:?}{}",
                        s.j,
                        s.a.len(),
                        s.density,
                        (s.tuple.l, &s.tuple.f),
                        s.transition
                            .as_ref()
                            .map(|tr| format!(", y = {}", tr.y))
                            .unwrap_or_default()
                    ));
                }
                if let Some(p) = &c.trace_out {
                    write_file(
                        p,
                        &serde_json::to_string_pretty(t).expect("trace serializes"),
                    )?;
                    artifacts.push(p.clone());
                    rep.notes.push(format!("trace: {}", p.display()));
                }
            }
            match result {
                Ok(s) => {
                    check_trace(&s.trace, &col).map_err(CliError::Verification)?;
                    rep.push(
                        vec![
                            "success".into(),
                            s.color.to_string(),
                            s.quadruple[0].to_string(),
                            s.quadruple[1].to_string(),
                            s.xs.len().to_string(),
                        ],
                        json!({"verdict": "success", "color": s.color, "quadruple": s.quadruple, "xs": s.xs}),
                    );
                    rep.summary = format!(
                        "verdict: success {{{}}} in color {}",
                        s.quadruple
                            .iter()
                            .map(|v| v.to_string())
                            .collect::<Vec<_>>()
                            .join(", "),
                        s.color
                    );
                }
                Err(e) => {
                    if let WalkFailure::FinalVerificationFailure(msg) = &e.failure {
                        return Err(CliError::Verification(msg.clone()));
                    }
                    rep.push(
                        vec![
                            "failure".into(),
                            "-".into(),
                            "-".into(),
                            "-".into(),
                            "0".into(),
                        ],
                        json!({"verdict": "failure", "failure": e.failure}),
                    );
                    rep.summary = format!("verdict: failure ({})", e.failure);
                }
            }
            rep
        }
        CommandKind::ExportCnf => {
            let ground = ground_of(c);
            let t = c.template()?;
            let threads = c.threads.unwrap_or_else(rayon::current_num_threads);
            let cnf = encode_cnf_with_threads(ground, c.colors, &t, threads);
            let path = c
                .cnf_out
                .clone()
                .unwrap_or_else(|| PathBuf::from("monopat.cnf"));
            write_file(&path, &cnf.to_dimacs())?;
            artifacts.push(path.clone());
            let mut rep = Report::new(
                format!(
                    "CNF for avoiding {t} over {ground} with {} colors",
                    c.colors
                ),
                &["variables", "clauses", "path"],
            );
            rep.push(
                vec![
                    cnf.num_variables.to_string(),
                    cnf.clauses.len().to_string(),
                    path.display().to_string(),
                ],
                json!({"variables": cnf.num_variables, "clauses": cnf.clauses.len(), "path": path}),
            );
            rep.summary = format!("wrote {}", path.display());
            rep
        }
    };
    Ok(Outcome {
        report,
        exit_code,
        artifacts,
        seconds: start.elapsed().as_secs_f64(),
    })
}
