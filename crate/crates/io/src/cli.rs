//! The `timt` command line.
//!
//! Exit status is 0 on success, 2 on usage errors, 1 on data errors (with a
//! JSON error object on stderr) and 3 when `stability` finds a violated
//! inequality. Every subcommand writes a run record, by default next to its
//! main output as `<stem>.run.json`.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use timt_core::dictionary::KsvdConfig;
use timt_core::field::{derive_channel_named, DerivedKind, Scaling};
use timt_core::merge_tree::Metric;
use timt_core::queries::{QueryMethod, QuerySpec, Simplification};
use timt_core::scalar::ScalarField;
use timt_core::traits::Semantics;
use timt_core::verify_stability_chain;
use timt_core::{assemble_attribute_space, Connectivity};

use crate::dataset::{load_dataset, load_field, save_dataset, save_field, to_json_bytes, Dataset, Dtype};
use crate::dictionary_io::{load_dictionary, save_dictionary};
use crate::error::{write_file, IoError};
use crate::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use crate::pipeline::{atom_distance, dictionary_suggestions, evaluate_trait, learn_dictionary, segment_field};
use crate::run_record::RunRecord;
use crate::segmentation_io::save_segmentation;
use crate::trait_doc::{load_trait, save_trait, TraitDocument};
use crate::tree_export::{build_tree, export_tree, field_hash, load_tree, save_tree, Direction};

/// Environment variable holding the service bind address (`host:port`).
pub const BIND_ENV: &str = "TIMT_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Exit status when a stability check finds a violated inequality.
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "timt", version, about = "Trait-induced merge trees for multi-field data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the grid connectivity of loaded data (face6, vertex26, edge4, vertex8).
    #[arg(long, global = true, value_parser = parse_connectivity)]
    pub connectivity: Option<Connectivity>,
    /// Override the AND/OR semantics of trait documents (csg, paper_literal).
    #[arg(long, global = true, value_parser = parse_semantics)]
    pub semantics: Option<Semantics>,
    /// Where to write the run record.
    #[arg(long, global = true)]
    pub run_record: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic data set.
    Fixture(FixtureArgs),
    /// Validate a data set and rewrite it with selected, rescaled channels.
    Ingest(IngestArgs),
    /// Append a derived channel (eigenvalues, anisotropy, magnitude).
    Derive(DeriveArgs),
    /// Evaluate a trait into a distance field.
    TraitEval(TraitEvalArgs),
    /// Compute and export the merge tree of a scalar field.
    Mt(MtArgs),
    /// Segment a scalar field with a merge-tree query.
    Segment(SegmentArgs),
    /// Learn a sparse dictionary over selected channels.
    DictLearn(DictLearnArgs),
    /// Rank the atoms of a dictionary as point traits.
    DictSuggest(DictSuggestArgs),
    /// Check the stability inequalities for two traits.
    Stability(StabilityArgs),
    /// Serve the HTTP API for one data set.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FixtureArgs {
    #[arg(value_parser = parse_fixture_kind)]
    pub kind: FixtureKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Grid dimensions as `nx,ny,nz`.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    #[arg(long, value_parser = parse_finite)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long, value_parser = parse_finite)]
    pub sigma: Option<f64>,
    #[arg(long, default_value = "f64", value_parser = parse_dtype)]
    pub dtype: Dtype,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Channels to keep, in order; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
    /// One scaling for all channels or one per selected channel (none, minmax, zscore).
    #[arg(long, value_delimiter = ',', value_parser = parse_scaling)]
    pub scaling: Vec<Scaling>,
    #[arg(long, default_value = "f64", value_parser = parse_dtype)]
    pub dtype: Dtype,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeriveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = parse_derived)]
    pub kind: DerivedKind,
    /// Input channels: `xx,yy,zz,xy,xz,yz` for tensors, three for a vector.
    #[arg(long, value_delimiter = ',', required = true)]
    pub inputs: Vec<String>,
    /// Output channel name; defaults to the kind.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraitEvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Trait document to evaluate.
    #[arg(long = "trait", required_unless_present = "dictionary", conflicts_with = "dictionary")]
    pub trait_doc: Option<PathBuf>,
    /// Evaluate an atom of this dictionary instead of a trait document.
    #[arg(long, requires = "atom")]
    pub dictionary: Option<PathBuf>,
    #[arg(long, requires = "dictionary")]
    pub atom: Option<usize>,
    /// Use one minus cosine similarity to the atom instead of Euclidean distance.
    #[arg(long, requires = "dictionary")]
    pub cosine: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MtArgs {
    /// Scalar field (a data set; pick the channel with --channel if it has several).
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub channel: Option<String>,
    /// Sweep super-level sets instead of sub-level sets.
    #[arg(long)]
    pub superlevel: bool,
    #[arg(long, default_value = "persistence", value_parser = parse_metric)]
    pub simplify_metric: Metric,
    #[arg(long, default_value_t = 0.0, value_parser = parse_threshold)]
    pub simplify_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub channel: Option<String>,
    /// Tree export of the same field; its hash and direction are checked
    /// and its simplification is the default for the query.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: QueryMethod,
    #[arg(long, default_value = "persistence", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<f64>,
    #[arg(long, required_if_eq("method", "subtrees"), value_parser = parse_finite)]
    pub cut_level: Option<f64>,
    #[arg(long, required_if_eq("method", "crown"), value_parser = parse_finite)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub superlevel: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DictLearnArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Channels spanning the attribute space; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub select: Vec<String>,
    /// Channels to leave out when --select is omitted.
    #[arg(long, value_delimiter = ',', conflicts_with = "select")]
    pub exclude: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_scaling)]
    pub scaling: Vec<Scaling>,
    /// Atom count; twice the attribute dimension when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub t0: usize,
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DictSuggestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one trait document per atom, `atom_<k>.json`.
    #[arg(long)]
    pub traits_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StabilityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "trait")]
    pub first: PathBuf,
    #[arg(long)]
    pub other: PathBuf,
    #[arg(long, default_value_t = 1e-9, value_parser = parse_threshold)]
    pub tol: f64,
    /// Sampling step for Hausdorff estimates of extended traits.
    #[arg(long, default_value_t = 0.05, value_parser = parse_finite)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Bind address; falls back to $TIMT_BIND, then 127.0.0.1:8080.
    #[arg(long)]
    pub bind: Option<String>,
    /// Port, overriding the one in the bind address.
    #[arg(long)]
    pub port: Option<u16>,
}

fn parse_with<T>(s: &str, parse: impl Fn(&str) -> Option<T>, what: &str, options: &str) -> Result<T, String> {
    parse(s).ok_or_else(|| format!("unknown {what} `{s}`, expected one of {options}"))
}

fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    parse_with(s, Connectivity::parse, "connectivity", "face6, vertex26, edge4, vertex8")
}

fn parse_semantics(s: &str) -> Result<Semantics, String> {
    parse_with(s, Semantics::parse, "semantics", "csg, paper_literal")
}

fn parse_fixture_kind(s: &str) -> Result<FixtureKind, String> {
    parse_with(s, FixtureKind::parse, "fixture", "crossing_stripes_2d, two_blob_3d, tensor_block")
}

fn parse_dtype(s: &str) -> Result<Dtype, String> {
    parse_with(s, Dtype::parse, "dtype", "f32, f64")
}

fn parse_scaling(s: &str) -> Result<Scaling, String> {
    parse_with(s, Scaling::parse, "scaling", "none, minmax, zscore")
}

fn parse_derived(s: &str) -> Result<DerivedKind, String> {
    parse_with(
        s,
        DerivedKind::parse,
        "derived kind",
        "eig1, eig2, eig3, c_l, c_p, c_s, max_shear, vec_magnitude",
    )
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    parse_with(s, Metric::parse, "metric", "persistence, hypervolume")
}

fn parse_method(s: &str) -> Result<QueryMethod, String> {
    parse_with(s, QueryMethod::parse, "method", "branch_decomposition, leaf_arcs, subtrees, crown")
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| format!("`{s}` is not nx,ny,nz"))
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` is negative"))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

/// Output of one command: its status, stdout summary and run record.
struct Outcome {
    status: i32,
    summary: serde_json::Value,
    record: RunRecord,
    record_path: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<i32, IoError> {
    if let Command::Serve(args) = &cli.command {
        return serve(cli, args);
    }
    let parameters = serde_json::json!({ "global": cli.global, "args": cli.command });
    let name = command_name(&cli.command);
    let mut record = RunRecord::new(name, parameters);
    let g = &cli.global;
    let (status, summary, out) = match &cli.command {
        Command::Fixture(a) => fixture(g, a, &mut record)?,
        Command::Ingest(a) => ingest(g, a, &mut record)?,
        Command::Derive(a) => derive(g, a, &mut record)?,
        Command::TraitEval(a) => trait_eval(g, a, &mut record)?,
        Command::Mt(a) => mt(g, a, &mut record)?,
        Command::Segment(a) => segment(g, a, &mut record)?,
        Command::DictLearn(a) => dict_learn(g, a, &mut record)?,
        Command::DictSuggest(a) => dict_suggest(g, a, &mut record)?,
        Command::Stability(a) => stability(g, a, &mut record)?,
        Command::Serve(_) => unreachable!("handled above"),
    };
    let outcome = Outcome {
        status,
        summary,
        record,
        record_path: Some(g.run_record.clone().unwrap_or_else(|| out.with_extension("run.json"))),
    };
    finish(outcome)
}

fn finish(o: Outcome) -> Result<i32, IoError> {
    if let Some(p) = &o.record_path {
        o.record.save(p)?;
    }
    println!("{}", o.summary);
    Ok(o.status)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fixture(_) => "fixture",
        Command::Ingest(_) => "ingest",
        Command::Derive(_) => "derive",
        Command::TraitEval(_) => "trait-eval",
        Command::Mt(_) => "mt",
        Command::Segment(_) => "segment",
        Command::DictLearn(_) => "dict-learn",
        Command::DictSuggest(_) => "dict-suggest",
        Command::Stability(_) => "stability",
        Command::Serve(_) => "serve",
    }
}

type Step = (i32, serde_json::Value, PathBuf);

/// Loads a data set, records its files, and applies a connectivity override.
fn open_dataset(g: &GlobalArgs, path: &Path, record: &mut RunRecord) -> Result<Dataset, IoError> {
    let mut ds = load_dataset(path)?;
    record_dataset(&ds, "input", record)?;
    if let Some(c) = g.connectivity {
        ds.field = ds.field.with_connectivity(c)?;
        ds.manifest.grid = *ds.field.grid();
    }
    Ok(ds)
}

fn record_dataset(ds: &Dataset, role: &str, record: &mut RunRecord) -> Result<(), IoError> {
    for (k, f) in ds.files.iter().enumerate() {
        record.input(if k == 0 { role } else { "payload" }, f)?;
    }
    Ok(())
}

fn record_outputs(record: &mut RunRecord, files: &[(&str, PathBuf)]) -> Result<(), IoError> {
    for (role, f) in files {
        record.output(role, f)?;
    }
    Ok(())
}

fn sibling(path: &Path, name: String) -> PathBuf {
    path.parent().unwrap_or_else(|| Path::new("")).join(name)
}

fn payload_of(path: &Path, ext: &str) -> PathBuf {
    sibling(path, crate::dataset::payload_name(path, ext))
}

fn open_field(g: &GlobalArgs, path: &Path, channel: Option<&str>, record: &mut RunRecord) -> Result<ScalarField, IoError> {
    let (mut field, ds) = load_field(path, channel)?;
    record_dataset(&ds, "field", record)?;
    if let Some(c) = g.connectivity {
        let grid = field.grid().with_connectivity(c)?;
        field = field.with_grid(grid)?;
    }
    Ok(field)
}

fn open_trait(g: &GlobalArgs, path: &Path, record: &mut RunRecord) -> Result<TraitDocument, IoError> {
    let mut doc = load_trait(path)?;
    record.input("trait", path)?;
    if let Some(s) = g.semantics {
        doc.semantics = s;
    }
    Ok(doc)
}

fn fixture(g: &GlobalArgs, a: &FixtureArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let params = FixtureParams {
        dims: a.dims,
        noise: a.noise,
        directions: a.directions,
        sigma: a.sigma,
    };
    let mut mf = generate_fixture(a.kind, &params, g.seed)?;
    if let Some(c) = g.connectivity {
        mf = mf.with_connectivity(c)?;
    }
    save_dataset(&mf, &a.out, a.dtype, None)?;
    record_outputs(record, &[("dataset", a.out.clone()), ("payload", payload_of(&a.out, "raw"))])?;
    let summary = serde_json::json!({
        "command": "fixture",
        "kind": a.kind.as_str(),
        "dims": mf.grid().dims,
        "channels": mf.dimension(),
    });
    Ok((0, summary, a.out.clone()))
}

fn ingest(g: &GlobalArgs, a: &IngestArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let select: Vec<String> = if a.select.is_empty() {
        ds.field.channel_names().iter().map(|s| s.to_string()).collect()
    } else {
        a.select.clone()
    };
    let out = assemble_attribute_space(&ds.field, &select, &a.scaling)?;
    save_dataset(&out, &a.out, a.dtype, ds.manifest.meaning)?;
    record_outputs(record, &[("dataset", a.out.clone()), ("payload", payload_of(&a.out, "raw"))])?;
    let stats: Vec<_> = out
        .channels()
        .iter()
        .map(|c| {
            let (lo, hi) = c.range();
            serde_json::json!({ "name": c.name, "min": lo, "max": hi })
        })
        .collect();
    let summary = serde_json::json!({ "command": "ingest", "vertices": out.len(), "channels": stats });
    Ok((0, summary, a.out.clone()))
}

fn derive(g: &GlobalArgs, a: &DeriveArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let name = a.name.clone().unwrap_or_else(|| a.kind.as_str().to_string());
    let out = derive_channel_named(&ds.field, a.kind, &a.inputs, &name)?;
    save_dataset(&out, &a.out, Dtype::F64, ds.manifest.meaning)?;
    record_outputs(record, &[("dataset", a.out.clone()), ("payload", payload_of(&a.out, "raw"))])?;
    let (lo, hi) = out.channel(&name)?.range();
    let summary = serde_json::json!({ "command": "derive", "channel": name, "min": lo, "max": hi });
    Ok((0, summary, a.out.clone()))
}

fn trait_eval(g: &GlobalArgs, a: &TraitEvalArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let (field, summary) = match (&a.trait_doc, &a.dictionary) {
        (Some(path), _) => {
            let doc = open_trait(g, path, record)?;
            let ev = evaluate_trait(&doc, &ds.field)?;
            let summary = serde_json::json!({
                "command": "trait-eval",
                "clamped": ev.clamped,
                "capped": ev.capped,
            });
            (ev.field, summary)
        }
        (None, Some(path)) => {
            let stored = load_dictionary(path)?;
            record.input("dictionary", path)?;
            record.input("payload", &sibling(path, stored.header.payload.path.clone()))?;
            let atom = a.atom.expect("clap requires --atom with --dictionary");
            let field = atom_distance(&stored, &ds.field, atom, a.cosine)?;
            let summary = serde_json::json!({ "command": "trait-eval", "atom": atom, "cosine": a.cosine });
            (field, summary)
        }
        (None, None) => unreachable!("clap requires --trait or --dictionary"),
    };
    save_field(&field, "h", &a.out)?;
    record_outputs(record, &[("field", a.out.clone()), ("payload", payload_of(&a.out, "raw"))])?;
    let (lo, hi) = field.min_max();
    let mut summary = summary;
    summary["min"] = lo.into();
    summary["max"] = hi.into();
    Ok((0, summary, a.out.clone()))
}

fn mt(g: &GlobalArgs, a: &MtArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let field = open_field(g, &a.field, a.channel.as_deref(), record)?;
    let direction = Direction::from_superlevel(a.superlevel);
    let simplification = Simplification {
        metric: a.simplify_metric,
        threshold: a.simplify_threshold,
    };
    let tree = build_tree(&field, direction, simplification)?;
    let export = export_tree(&tree, &field, direction, simplification);
    save_tree(&export, &a.out)?;
    record.output("tree", &a.out)?;
    let summary = serde_json::json!({
        "command": "mt",
        "nodes": export.nodes.len(),
        "leaves": export.leaf_count(),
        "saddles": export.saddle_count(),
    });
    Ok((0, summary, a.out.clone()))
}

fn segment(g: &GlobalArgs, a: &SegmentArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let field = open_field(g, &a.field, a.channel.as_deref(), record)?;
    let hash = field_hash(&field);
    let mut direction = Direction::from_superlevel(a.superlevel);
    let mut simplification = Simplification {
        metric: a.metric,
        threshold: a.threshold.unwrap_or(0.0),
    };
    if let Some(path) = &a.tree {
        let tree = load_tree(path)?;
        record.input("tree", path)?;
        if tree.field_sha256 != hash {
            return Err(IoError::Mismatch(format!(
                "tree `{}` was computed from a different field",
                path.display()
            )));
        }
        if a.superlevel && tree.direction != Direction::Superlevel {
            return Err(IoError::Mismatch("--superlevel given but the tree sweeps sub-level sets".into()));
        }
        direction = tree.direction;
        if a.threshold.is_none() {
            simplification = tree.simplification;
        }
    }
    let spec = QuerySpec {
        method: a.method,
        simplification,
        cut_level: a.cut_level.map(|c| direction.restore(c)),
        delta: a.delta,
    };
    let seg = segment_field(&field, direction, &spec)?;
    let sidecar = save_segmentation(&seg, direction, hash, &a.out)?;
    record_outputs(record, &[("segmentation", a.out.clone()), ("labels", payload_of(&a.out, "labels"))])?;
    let summary = serde_json::json!({
        "command": "segment",
        "segments": sidecar.segments.len(),
        "background": seg.background_count(),
        "notes": seg.notes,
    });
    Ok((0, summary, a.out.clone()))
}

fn dict_learn(g: &GlobalArgs, a: &DictLearnArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let select: Vec<String> = if a.select.is_empty() {
        ds.field
            .channel_names()
            .into_iter()
            .filter(|c| !a.exclude.iter().any(|e| e == c))
            .map(String::from)
            .collect()
    } else {
        a.select.clone()
    };
    let cfg = KsvdConfig {
        k: a.k.unwrap_or(KsvdConfig::default_k(select.len())),
        t0: a.t0,
        iterations: a.iterations,
        seed: g.seed,
    };
    let d = learn_dictionary(&ds.field, &select, &a.scaling, &cfg)?;
    save_dictionary(&d, &select, &a.scaling, &a.out)?;
    record_outputs(record, &[("dictionary", a.out.clone()), ("payload", payload_of(&a.out, "bin"))])?;
    let summary = serde_json::json!({
        "command": "dict-learn",
        "m": d.dimension(),
        "k": d.len(),
        "final_rmse": d.meta.final_rmse,
        "reseeded": d.meta.reseeded.len(),
    });
    Ok((0, summary, a.out.clone()))
}

#[derive(Serialize)]
struct SuggestionRow {
    atom: usize,
    score: f64,
    #[serde(rename = "trait")]
    trait_doc: TraitDocument,
}

fn dict_suggest(g: &GlobalArgs, a: &DictSuggestArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let stored = load_dictionary(&a.dictionary)?;
    record.input("dictionary", &a.dictionary)?;
    record.input("payload", &sibling(&a.dictionary, stored.header.payload.path.clone()))?;
    let ranked = dictionary_suggestions(&stored, &ds.field)?;
    let rows: Vec<SuggestionRow> = ranked
        .into_iter()
        .map(|s| {
            let mut doc = TraitDocument::new(s.trait_expr);
            if let Some(sem) = g.semantics {
                doc.semantics = sem;
            }
            SuggestionRow { atom: s.atom, score: s.score, trait_doc: doc }
        })
        .collect();
    write_file(&a.out, &to_json_bytes(&rows))?;
    record.output("suggestions", &a.out)?;
    if let Some(dir) = &a.traits_dir {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
        for r in &rows {
            let p = dir.join(format!("atom_{}.json", r.atom));
            save_trait(&r.trait_doc, &p)?;
            record.output("trait", &p)?;
        }
    }
    let order: Vec<usize> = rows.iter().map(|r| r.atom).collect();
    let summary = serde_json::json!({ "command": "dict-suggest", "ranking": order });
    Ok((0, summary, a.out.clone()))
}

fn stability(g: &GlobalArgs, a: &StabilityArgs, record: &mut RunRecord) -> Result<Step, IoError> {
    let ds = open_dataset(g, &a.input, record)?;
    let t1 = open_trait(g, &a.first, record)?;
    let t2 = open_trait(g, &a.other, record)?;
    t1.check_channels(&ds.field)?;
    t2.check_channels(&ds.field)?;
    let report = verify_stability_chain(&t1.expr(), &t2.expr(), &ds.field, a.tol, a.step)?;
    write_file(&a.out, &to_json_bytes(&report))?;
    record.output("report", &a.out)?;
    let status = if report.chain_ok { 0 } else { EXIT_VIOLATION };
    let summary = serde_json::json!({
        "command": "stability",
        "d_b": report.d_b,
        "sup_diff": report.sup_diff,
        "d_h": report.d_h,
        "chain_ok": report.chain_ok,
    });
    Ok((status, summary, a.out.clone()))
}

/// Resolves the bind address from the flag, the environment and the default.
pub fn bind_address(bind: Option<&str>, env: Option<&str>, port: Option<u16>) -> Result<SocketAddr, IoError> {
    let text = bind.or(env).unwrap_or(DEFAULT_BIND);
    let mut addr: SocketAddr = text
        .parse()
        .map_err(|_| IoError::Mismatch(format!("bind address `{text}` is not host:port")))?;
    if let Some(p) = port {
        addr.set_port(p);
    }
    Ok(addr)
}

fn serve(cli: &Cli, a: &ServeArgs) -> Result<i32, IoError> {
    let g = &cli.global;
    let parameters = serde_json::json!({ "global": g, "args": cli.command });
    let mut record = RunRecord::new("serve", parameters);
    let ds = open_dataset(g, &a.input, &mut record)?;
    let stored = match &a.dictionary {
        Some(p) => {
            record.input("dictionary", p)?;
            Some(load_dictionary(p)?)
        }
        None => None,
    };
    let env = std::env::var(BIND_ENV).ok();
    let addr = bind_address(a.bind.as_deref(), env.as_deref(), a.port)?;
    if let Some(p) = &g.run_record {
        record.save(p)?;
    }
    let session = crate::service::Session::new(ds, stored, g.semantics)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| IoError::file(Path::new("tokio runtime"), e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| IoError::Mismatch(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| IoError::Mismatch(e.to_string()))?;
        eprintln!("{}", serde_json::json!({ "listening": local.to_string() }));
        crate::service::serve(listener, session)
            .await
            .map_err(|e| IoError::Mismatch(format!("server stopped: {e}")))
    })?;
    Ok(0)
}

/// A scalar field file is a one-channel data set; this reads one back.
pub fn read_scalar(path: &Path) -> Result<ScalarField, IoError> {
    Ok(load_field(path, None)?.0)
}
