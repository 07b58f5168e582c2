//! The `flow` command. Every subcommand reads its inputs, calls one
//! library operation and prints the result; the logic lives in `flow-core`
//! and `flow-mapserver`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use flow_core::analysis::{self, DiffTolerance, PatternTemplate};
use flow_core::derive::{self, ProcessModel};
use flow_core::dsl::{self, DotOptions};
use flow_core::goals::{
    self, GoalScope, GoalSpec, GoalTime, Intent, ProjectParams, TechniqueProfile,
};
use flow_core::merge::merge_models;
use flow_core::sim::{self, QuantaConfig};
use flow_core::FlowModel;
use serde::Serialize;

pub mod exit {
    pub const OK: u8 = 0;
    /// Findings present and `--fail-on-findings` given.
    pub const FINDINGS: u8 = 1;
    pub const USAGE: u8 = 2;
    /// Unreadable file or unparsable input.
    pub const INPUT: u8 = 3;
}

#[derive(Parser)]
#[command(name = "flow", version, about = "Model and analyze information flows")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Exit with status 1 when violations, findings, matches or deviations
    /// are reported.
    #[arg(long, global = true)]
    fail_on_findings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    /// One JSON object per line.
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model against the modeling rules.
    Validate { file: PathBuf },
    /// Print a model in canonical form.
    Fmt { file: PathBuf },
    /// Export a model as Graphviz DOT.
    Dot {
        file: PathBuf,
        /// Label edges with their content.
        #[arg(long)]
        content: bool,
    },
    /// Derive document flows from a process model.
    Derive {
        file: PathBuf,
        /// Add stores and flows for the roles of the process.
        #[arg(long)]
        roles: bool,
    },
    /// Merge partial models at their shared stores.
    Merge {
        #[arg(required = true, num_args = 1..)]
        files: Vec<PathBuf>,
    },
    /// Find FLOW patterns.
    Patterns {
        file: PathBuf,
        /// JSON file with one template or a list; replaces the built-in catalog.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Products between sources and targets, and those depending on them.
    Cut {
        file: PathBuf,
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
    },
    /// Simulate information quanta passing through the model.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        steps: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        falsify: f64,
        #[arg(long, default_value_t = 0.0)]
        omit: f64,
        #[arg(long, default_value_t = 1.0)]
        retention: f64,
        /// Run many independent trials and report averages.
        #[arg(long)]
        trials: Option<u32>,
        /// Worker threads for trials. The output does not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare a planned map with an observed one.
    Diff {
        soll: PathBuf,
        ist: PathBuf,
        /// Relative intensity deviation tolerated.
        #[arg(long, default_value_t = DiffTolerance::default().intensity_rel)]
        tol: f64,
    },
    /// Select techniques for a goal.
    Select {
        #[arg(long, value_enum)]
        intent: IntentArg,
        #[arg(long, value_enum)]
        time: TimeArg,
        #[arg(long, value_enum)]
        scope: ScopeArg,
        /// Project parameter such as `team_size=12` or `distribution=distributed_vertical`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        catalog: PathBuf,
    },
    /// Run the map server.
    Serve(flow_mapserver::ServerConfig),
}

#[derive(Clone, Copy, ValueEnum)]
enum IntentArg {
    Understand,
    Improve,
}

#[derive(Clone, Copy, ValueEnum)]
enum TimeArg {
    Before,
    During,
    After,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Activity,
    Project,
    Organization,
}

/// A failed invocation: exit status plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: exit::INPUT,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: exit::USAGE,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

type Outcome = Result<usize, Failure>;

/// Parses `args` and runs the command. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(findings) if findings > 0 && cli.fail_on_findings => exit::FINDINGS,
        Ok(_) => exit::OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<FlowModel, Failure> {
    let text = read(path)?;
    dsl::parse(&text).map_err(|errors| {
        let lines: Vec<String> = errors
            .iter()
            .map(|e| format!("{}:{e}", path.display()))
            .collect();
        Failure::input(lines.join("\n"))
    })
}

fn record(out: &mut dyn Write, kind: &str, value: &impl Serialize) -> std::io::Result<()> {
    let mut v = serde_json::to_value(value).expect("plain data");
    if let serde_json::Value::Object(map) = &mut v {
        map.insert("type".into(), kind.into());
    } else {
        v = serde_json::json!({ "type": kind, "value": v });
    }
    writeln!(out, "{v}")
}

fn flow_text(m: &FlowModel) -> Result<String, Failure> {
    dsl::serialize(m).map_err(|e| Failure::input(e.to_string()))
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let records = cli.format == Format::Records;
    match &cli.command {
        Command::Validate { file } => {
            let violations = flow_core::validate(&load_model(file)?);
            for v in &violations {
                if records {
                    record(out, "violation", v)?;
                } else {
                    writeln!(out, "{}: {v}", file.display())?;
                }
            }
            if !records {
                writeln!(out, "{} violations", violations.len())?;
            }
            Ok(violations.len())
        }
        Command::Fmt { file } => {
            let m = load_model(file)?;
            if records {
                record(out, "model", &m)?;
            } else {
                out.write_all(flow_text(&m)?.as_bytes())?;
            }
            Ok(0)
        }
        Command::Dot { file, content } => {
            let m = load_model(file)?;
            let dot = dsl::export_dot(
                &m,
                DotOptions {
                    show_content: *content,
                },
            )
            .map_err(|e| Failure::input(e.to_string()))?;
            out.write_all(dot.as_bytes())?;
            Ok(0)
        }
        Command::Derive { file, roles } => {
            let process = derive::parse_process(&read(file)?)
                .map_err(|e| Failure::input(format!("{}: {e}", file.display())))?;
            derive_command(&process, *roles, records, out, err)
        }
        Command::Merge { files } => {
            let parts = files
                .iter()
                .map(|f| load_model(f))
                .collect::<Result<Vec<_>, _>>()?;
            let merged = merge_models(&parts).map_err(|e| Failure::input(e.to_string()))?;
            for issue in &merged.issues {
                if records {
                    record(out, "issue", issue)?;
                } else {
                    writeln!(err, "warning: {issue}")?;
                }
            }
            if records {
                record(out, "model", &merged.model)?;
            } else {
                out.write_all(flow_text(&merged.model)?.as_bytes())?;
            }
            Ok(merged.issues.len())
        }
        Command::Patterns { file, template } => {
            let m = load_model(file)?;
            let templates = match template {
                Some(path) => PatternTemplate::list_from_json(&read(path)?)
                    .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
                None => analysis::builtin_catalog(),
            };
            let matches = analysis::scan(&m, &templates);
            for r in &matches {
                if records {
                    record(out, "match", r)?;
                } else {
                    let binding: Vec<String> =
                        r.binding.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    writeln!(
                        out,
                        "{} ({:?}): {}",
                        r.pattern,
                        r.polarity,
                        binding.join(", ")
                    )?;
                }
            }
            if !records {
                writeln!(out, "{} matches", matches.len())?;
            }
            Ok(matches.len())
        }
        Command::Cut {
            file,
            sources,
            targets,
        } => {
            let m = load_model(file)?;
            let set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<String>>();
            let cut = derive::integration_cut(&m, &set(sources), &set(targets))
                .map_err(|e| Failure::usage(e.to_string()))?;
            if records {
                record(out, "cut", &cut)?;
            } else {
                let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(" ");
                writeln!(out, "intermediates: {}", join(&cut.intermediates))?;
                writeln!(out, "extra targets: {}", join(&cut.extra_targets))?;
                writeln!(out, "iterations: {}", cut.iterations)?;
            }
            if cut.warning {
                writeln!(err, "warning: no source reaches any target")?;
            }
            Ok(usize::from(cut.warning))
        }
        Command::Simulate {
            file,
            source,
            n,
            k,
            steps,
            seed,
            falsify,
            omit,
            retention,
            trials,
            jobs,
        } => {
            let m = load_model(file)?;
            let cfg = QuantaConfig {
                falsify_prob: *falsify,
                omit_prob: *omit,
                retention: *retention,
                ..QuantaConfig::new(*n, *k, *steps, *seed)
            };
            let sim_failure = |e: sim::SimError| match e {
                sim::SimError::InvalidModel(_) => Failure::input(e.to_string()),
                _ => Failure::usage(e.to_string()),
            };
            match trials {
                None => {
                    let report = sim::simulate(&m, &cfg, source).map_err(sim_failure)?;
                    if records {
                        out.write_all(report.to_records().as_bytes())?;
                    } else {
                        out.write_all(report.summary_table().as_bytes())?;
                    }
                }
                Some(t) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads((*jobs).max(1))
                        .build()
                        .map_err(|e| Failure::usage(e.to_string()))?;
                    let summary = pool
                        .install(|| sim::simulate_trials(&m, &cfg, source, *t))
                        .map_err(sim_failure)?;
                    if records {
                        for node in &summary.nodes {
                            record(out, "node", node)?;
                        }
                    } else {
                        out.write_all(summary.summary_table().as_bytes())?;
                    }
                }
            }
            Ok(0)
        }
        Command::Diff { soll, ist, tol } => {
            let (soll, ist) = (load_model(soll)?, load_model(ist)?);
            let report = analysis::diff_maps(
                &soll,
                &ist,
                DiffTolerance {
                    intensity_rel: *tol,
                },
            )
            .map_err(|e| Failure::input(e.to_string()))?;
            for d in &report.flows {
                if records {
                    record(out, "flow", d)?;
                } else {
                    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v}"));
                    writeln!(
                        out,
                        "{:?} {} -- {} (soll {}, ist {})",
                        d.kind,
                        d.a,
                        d.b,
                        fmt(d.soll_intensity),
                        fmt(d.ist_intensity)
                    )?;
                }
            }
            for p in &report.participants {
                if records {
                    record(out, "participant", p)?;
                } else {
                    writeln!(out, "{:?} participant {}", p.kind, p.name)?;
                }
            }
            if !records {
                writeln!(out, "{} deviations", report.len())?;
            }
            Ok(report.len())
        }
        Command::Select {
            intent,
            time,
            scope,
            params,
            catalog,
        } => {
            let goal = GoalSpec {
                intent: match intent {
                    IntentArg::Understand => Intent::Understand,
                    IntentArg::Improve => Intent::Improve,
                },
                time: match time {
                    TimeArg::Before => GoalTime::Before,
                    TimeArg::During => GoalTime::During,
                    TimeArg::After => GoalTime::After,
                },
                scope: match scope {
                    ScopeArg::Activity => GoalScope::Activity,
                    ScopeArg::Project => GoalScope::Project,
                    ScopeArg::Organization => GoalScope::Organization,
                },
            };
            let catalog: Vec<TechniqueProfile> = serde_json::from_str(&read(catalog)?)
                .map_err(|e| Failure::input(format!("{}: {e}", catalog.display())))?;
            let params = project_params(params)?;
            let selection = goals::select_techniques(goal, &params, &catalog)
                .map_err(|e| Failure::usage(e.to_string()))?;
            if records {
                for m in &selection.matches {
                    record(out, "technique", m)?;
                }
            } else {
                for m in &selection.matches {
                    let phases: Vec<String> = m.coverage.iter().map(|p| format!("{p:?}")).collect();
                    writeln!(out, "{} [{}]", m.technique.name, phases.join(", "))?;
                }
                if !selection.complete {
                    let missing: Vec<String> =
                        selection.missing.iter().map(|p| format!("{p:?}")).collect();
                    writeln!(out, "phases not covered: {}", missing.join(", "))?;
                }
            }
            Ok(0)
        }
        Command::Serve(config) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(flow_mapserver::serve(config.clone()))
                .map_err(|e| Failure::input(format!("{e:#}")))?;
            Ok(0)
        }
    }
}

fn derive_command(
    p: &ProcessModel,
    roles: bool,
    records: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let d = derive::derive_document_flows(p).map_err(|e| Failure::input(e.to_string()))?;
    let model = if roles {
        derive::augment_role_flows(p, &d.model)
    } else {
        d.model
    };
    if records {
        for pair in &d.pairs {
            record(out, "pair", pair)?;
        }
        for f in &d.findings {
            record(out, "finding", f)?;
        }
        record(out, "model", &model)?;
    } else {
        for f in &d.findings {
            let derive::Finding::OrphanInput {
                activity,
                document,
                on_every_path,
            } = f;
            let reach = if *on_every_path {
                "on every path"
            } else {
                "on some path"
            };
            writeln!(
                err,
                "warning: `{activity}` reads `{document}`, which is not produced before it {reach}"
            )?;
        }
        out.write_all(flow_text(&model)?.as_bytes())?;
    }
    Ok(d.findings.len())
}

/// Reads `key=value` pairs into project parameters.
fn project_params(pairs: &[String]) -> Result<ProjectParams, Failure> {
    let mut p = ProjectParams::default();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("`{pair}` is not KEY=VALUE")))?;
        let enum_value = |v: &str| serde_json::Value::String(v.to_string());
        let bad = |e: serde_json::Error| Failure::usage(format!("{key}: {e}"));
        match key {
            "team_size" => {
                p.team_size =
                    Some(value.parse().map_err(|_| {
                        Failure::usage(format!("team_size: `{value}` is not a number"))
                    })?)
            }
            "budget" => p.budget = Some(value.into()),
            "domain" => p.domain = Some(value.into()),
            "process_style" => {
                p.process_style = Some(serde_json::from_value(enum_value(value)).map_err(bad)?)
            }
            "process_model" => p.process_model = Some(value.into()),
            "distribution" => {
                p.distribution = Some(serde_json::from_value(enum_value(value)).map_err(bad)?)
            }
            "misc" => p.misc.push(value.into()),
            _ => return Err(Failure::usage(format!("unknown parameter `{key}`"))),
        }
    }
    Ok(p)
}
