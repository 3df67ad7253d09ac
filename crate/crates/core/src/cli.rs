//! Command-line front end. Every command writes one canonical JSON document.
//!
//! Exit codes: 0 success, 1 invalid input or I/O failure, 2 inconclusive
//! (an undecided verdict, or a search that stopped before exhausting).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::complement::{check_every_bipartition, infer_structure, is_upb, ComplementModel, Mode, Verdict};
use crate::density::{ppt_report, rho_bar, verify_w_completion, PPT_TOL};
use crate::error::{Error, Result};
use crate::json::{opset_from_json, opset_to_json, product_state_to_json, to_canonical_string, vector_from_json};
use crate::scalar::{lcm_orders, CycMatrix, CycVector};
use crate::search::{default_checkpoint_path, search, SearchConfig};
use crate::states::{build_opb, build_s, builtin, stopper, CoefficientSpec, OPSet, BUILTIN_NAMES};
use crate::tiles::{TileStructure, MAX_SUBSET_TILES, MIN_UTILE_TILES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tileupb", version, about = "Tile-structure product bases: construct, certify, search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the built-in instances.
    Instances(OutputArgs),
    /// Build the full basis B, the reduced set S and the stopper.
    Construct(ConstructArgs),
    /// Certify UPB / SUCPB status of a set.
    Verify(VerifyArgs),
    /// Exhaustive search for tile structures meeting the UPB condition.
    Search(SearchArgs),
    /// Summary of all checks on built-in instances.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write the JSON result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(id = "source", required = true, multiple = false, args = ["builtin", "input"])]
pub struct SourceArgs {
    /// Name of a built-in instance.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Tile structure JSON, or (for verify) an OPSet JSON array.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Coefficient matrices, `[tile][party]` rows of scalars (default Fourier).
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    /// Write structure.json, B.json, S.json and stopper.json into this directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Tile structure for an OPSet input (inferred from the complement if absent).
    #[arg(long, requires = "input")]
    pub tiles: Option<PathBuf>,
    /// Coefficient matrices for a tile-structure input.
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
    /// Certify every bipartition (always done for two parties).
    #[arg(long)]
    pub every_bipartition: bool,
    /// PPT check of the normalized complement projector.
    #[arg(long)]
    pub ppt: bool,
    /// Check the 27-state AB|C completion of the W instance.
    #[arg(long)]
    pub w_completion: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn is_on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Local dimensions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = MIN_UTILE_TILES)]
    pub min_tiles: usize,
    #[arg(long, default_value_t = MAX_SUBSET_TILES)]
    pub max_tiles: usize,
    /// Checkpoint file; defaults to $UPBTILE_CHECKPOINT_DIR/search-<dims>.json when set.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Nodes between checkpoint writes.
    #[arg(long, default_value_t = 1_000_000)]
    pub checkpoint_every: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub symmetry: Switch,
    /// Rectangle-union pruning; off reports every box partition in range.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub rectangle_prune: Switch,
    /// Stop after about this many nodes (resumable via the checkpoint).
    #[arg(long)]
    pub max_nodes: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Instances to include (default: all).
    #[arg(long)]
    pub builtin: Vec<String>,
    /// Skip the PPT check.
    #[arg(long)]
    pub no_ppt: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Result of a command: the document and the exit code.
pub struct Outcome {
    pub document: String,
    pub code: i32,
}

/// Parses arguments and runs; errors are reported on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Inconclusive(_) => EXIT_INCONCLUSIVE,
                _ => EXIT_ERROR,
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    let (outcome, output) = match cli.command {
        Command::Instances(a) => (cmd_instances()?, a.output),
        Command::Construct(a) => {
            let out = a.out.output.clone();
            (cmd_construct(&a)?, out)
        }
        Command::Verify(a) => {
            let out = a.out.output.clone();
            (with_threads(a.threads, || cmd_verify(&a))?, out)
        }
        Command::Search(a) => {
            let out = a.out.output.clone();
            (cmd_search(&a)?, out)
        }
        Command::Report(a) => {
            let out = a.out.output.clone();
            (with_threads(a.threads, || cmd_report(&a))?, out)
        }
    };
    match output {
        Some(path) => fs::write(path, &outcome.document)?,
        None => print!("{}", outcome.document),
    }
    Ok(outcome.code)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::InvalidConfig("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(f),
    }
}

fn ok(v: Value) -> Outcome {
    Outcome {
        document: to_canonical_string(&v),
        code: EXIT_OK,
    }
}

/// Reads and parses a JSON file; parse errors carry line and column.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedJson {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn structure_from_value(v: Value, path: &Path) -> Result<TileStructure> {
    serde_json::from_value(v).map_err(|e| Error::InvalidStructure(format!("{}: {e}", path.display())))
}

fn read_coefficients(path: &Path) -> Result<CoefficientSpec> {
    let v = read_json(path)?;
    let tiles = v
        .as_array()
        .ok_or_else(|| Error::InvalidCoefficients("expected an array of tiles".into()))?;
    let mut per_tile = Vec::with_capacity(tiles.len());
    for (i, t) in tiles.iter().enumerate() {
        let parties = t
            .as_array()
            .ok_or_else(|| Error::InvalidCoefficients(format!("tile {i}: expected an array of matrices")))?;
        let mut mats = Vec::with_capacity(parties.len());
        for m in parties {
            let rows = m
                .as_array()
                .ok_or_else(|| Error::InvalidCoefficients(format!("tile {i}: expected matrix rows")))?
                .iter()
                .map(vector_from_json)
                .collect::<Result<Vec<_>>>()?;
            let order = lcm_orders(rows.iter().map(CycVector::order));
            let rows = rows.iter().map(|r| r.promote(order)).collect::<Result<Vec<_>>>()?;
            mats.push(CycMatrix::from_rows(order, &rows)?);
        }
        per_tile.push(mats);
    }
    Ok(CoefficientSpec::Custom(per_tile))
}

fn coefficient_spec(path: Option<&PathBuf>) -> Result<CoefficientSpec> {
    path.map_or(Ok(CoefficientSpec::Fourier), |p| read_coefficients(p))
}

fn validation_failure(ts: &TileStructure) -> Option<Outcome> {
    let report = ts.validate();
    if report.is_ok() {
        return None;
    }
    let doc = json!({
        "valid": false,
        "overlaps": report.overlaps.iter().map(|(c, t)| json!({"cell": c, "tiles": t})).collect::<Vec<_>>(),
        "uncovered": report.uncovered,
    });
    eprintln!(
        "error: invalid tile structure: {} overlapping and {} uncovered cells",
        report.overlaps.len(),
        report.uncovered.len()
    );
    Some(Outcome {
        document: to_canonical_string(&doc),
        code: EXIT_ERROR,
    })
}

fn cmd_instances() -> Result<Outcome> {
    let list = BUILTIN_NAMES
        .iter()
        .map(|name| {
            let inst = builtin(name)?;
            Ok(json!({
                "name": inst.name,
                "description": inst.description,
                "dims": inst.structure.dims(),
                "tiles": inst.structure.num_tiles(),
                "states": inst.set.len(),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ok(Value::Array(list)))
}

fn cmd_construct(a: &ConstructArgs) -> Result<Outcome> {
    let spec = coefficient_spec(a.coefficients.as_ref())?;
    let (ts, s) = match (&a.source.builtin, &a.source.input) {
        (Some(name), _) => {
            let inst = builtin(name)?;
            let s = match a.coefficients {
                None => inst.set,
                Some(_) => build_s(&inst.structure, &spec)?,
            };
            (inst.structure, s)
        }
        (None, Some(path)) => {
            let ts = structure_from_value(read_json(path)?, path)?;
            if let Some(fail) = validation_failure(&ts) {
                return Ok(fail);
            }
            let s = build_s(&ts, &spec)?;
            (ts, s)
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let b = build_opb(&ts, &spec)?;
    let stop = stopper(ts.dims(), s.order());
    let structure = serde_json::to_value(&ts)?;
    let b_json = opset_to_json(&b);
    let s_json = opset_to_json(&s);
    let stop_json = product_state_to_json(&stop, "stopper");
    let counts = json!({"B": b.len(), "S": s.len(), "tiles": ts.num_tiles()});
    let doc = match &a.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let files = [
                ("structure.json", &structure),
                ("B.json", &b_json),
                ("S.json", &s_json),
                ("stopper.json", &stop_json),
            ];
            for (name, v) in files {
                fs::write(dir.join(name), to_canonical_string(v))?;
            }
            json!({
                "counts": counts,
                "files": files.iter().map(|(n, _)| dir.join(n).display().to_string()).collect::<Vec<_>>(),
            })
        }
        None => json!({
            "counts": counts,
            "structure": structure,
            "B": b_json,
            "S": s_json,
            "stopper": stop_json,
        }),
    };
    Ok(ok(doc))
}

/// Loads the structure and set named by a verify invocation.
fn verify_input(a: &VerifyArgs) -> std::result::Result<(TileStructure, OPSet), Outcome> {
    let load = || -> Result<std::result::Result<(TileStructure, OPSet), Outcome>> {
        let spec = coefficient_spec(a.coefficients.as_ref())?;
        if let Some(name) = &a.source.builtin {
            let inst = builtin(name)?;
            let set = match a.coefficients {
                None => inst.set,
                Some(_) => build_s(&inst.structure, &spec)?,
            };
            return Ok(Ok((inst.structure, set)));
        }
        let path = a.source.input.as_ref().expect("clap requires a source");
        let v = read_json(path)?;
        if v.is_array() {
            let set = opset_from_json(&v)?;
            let ts = match &a.tiles {
                Some(tp) => {
                    let ts = structure_from_value(read_json(tp)?, tp)?;
                    if let Some(fail) = validation_failure(&ts) {
                        return Ok(Err(fail));
                    }
                    ts
                }
                None => infer_structure(&set)?,
            };
            return Ok(Ok((ts, set)));
        }
        let ts = structure_from_value(v, path)?;
        if let Some(fail) = validation_failure(&ts) {
            return Ok(Err(fail));
        }
        let set = build_s(&ts, &spec)?;
        Ok(Ok((ts, set)))
    };
    match load() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            Err(Outcome {
                document: String::new(),
                code: EXIT_ERROR,
            })
        }
    }
}

/// The JSON bundle written by `verify`.
pub fn verify_bundle(
    ts: &TileStructure,
    set: &OPSet,
    every_bipartition: bool,
    ppt: bool,
    w_completion: bool,
) -> Result<(Value, bool)> {
    set.verify_orthogonality()?;
    let model = ComplementModel::from_set(ts, set)?;
    let multi = is_upb(&model, &Mode::Multipartite)?;
    let mut inconclusive = multi.verdict == Verdict::Inconclusive;
    let mut doc = json!({
        "dims": ts.dims(),
        "tiles": ts.num_tiles(),
        "states": set.len(),
        "complement_dim": model.dim(),
        "multipartite": multi.to_json(),
    });
    if ts.parties() >= 2 && (every_bipartition || ts.parties() == 2) {
        let every = check_every_bipartition(&model)?;
        inconclusive |= every.any_inconclusive();
        doc["every_bipartition"] = every.to_json();
    }
    if ppt {
        let rho = rho_bar(set)?;
        let reports = ppt_report(&rho, PPT_TOL)?;
        doc["ppt"] = json!({
            "tol": PPT_TOL,
            "ppt_in_every_bipartition": reports.iter().all(|r| r.passes()),
            "bipartitions": reports.iter().map(|r| json!({
                "label": r.bipartition.label(),
                "bipartition": {"C": r.bipartition.side_c(), "D": r.bipartition.side_d()},
                "min_eigenvalue": r.min_eigenvalue,
                "passes": r.passes(),
            })).collect::<Vec<_>>(),
        });
    }
    if w_completion {
        doc["w_completion"] = json!({"cut": "AB|C", "states": 27, "verified": verify_w_completion()?});
    }
    Ok((doc, inconclusive))
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let (ts, set) = match verify_input(a) {
        Ok(x) => x,
        Err(fail) => return Ok(fail),
    };
    let (doc, inconclusive) = verify_bundle(&ts, &set, a.every_bipartition, a.ppt, a.w_completion)?;
    Ok(Outcome {
        document: to_canonical_string(&doc),
        code: if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK },
    })
}

fn cmd_search(a: &SearchArgs) -> Result<Outcome> {
    let mut cfg = SearchConfig::new(a.dims.clone());
    cfg.min_tiles = a.min_tiles;
    cfg.max_tiles = a.max_tiles;
    cfg.symmetry = a.symmetry.is_on();
    cfg.rectangle_prune = a.rectangle_prune.is_on();
    cfg.checkpoint = a.checkpoint.clone().or_else(|| default_checkpoint_path(&a.dims));
    cfg.checkpoint_every = a.checkpoint_every;
    cfg.threads = a.threads;
    cfg.max_nodes = a.max_nodes;
    let result = search(&cfg)?;
    let code = if result.complete { EXIT_OK } else { EXIT_INCONCLUSIVE };
    Ok(Outcome {
        document: to_canonical_string(&serde_json::to_value(&result)?),
        code,
    })
}

fn cmd_report(a: &ReportArgs) -> Result<Outcome> {
    let names: Vec<String> = if a.builtin.is_empty() {
        BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        a.builtin.clone()
    };
    let mut rows = Vec::new();
    let mut any_inconclusive = false;
    for name in &names {
        let inst = builtin(name)?;
        let (bundle, inconclusive) = verify_bundle(&inst.structure, &inst.set, true, !a.no_ppt, false)?;
        any_inconclusive |= inconclusive;
        let cut_verdicts: Vec<Value> = bundle["every_bipartition"]["bipartitions"]
            .as_array()
            .map(|bs| {
                bs.iter()
                    .map(|b| {
                        json!({
                            "label": b["label"],
                            "upb": b["upb"]["verdict"],
                            "sucpb": b["sucpb"]["verdict"],
                            "product_span_dim": b["sucpb"]["product_span_dim"],
                            "families": b["sucpb"]["families"].as_array().map_or(0, |f| {
                                f.iter().filter(|x| x["kind"] != "empty").count()
                            }),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        let mut row = json!({
            "name": inst.name,
            "dims": inst.structure.dims(),
            "states": inst.set.len(),
            "complement_dim": bundle["complement_dim"],
            "multipartite": bundle["multipartite"]["verdict"],
            "sucpb_in_every_bipartition": bundle["every_bipartition"]["sucpb_in_every_bipartition"],
            "bipartitions": cut_verdicts,
        });
        if !a.no_ppt {
            row["ppt_in_every_bipartition"] = bundle["ppt"]["ppt_in_every_bipartition"].clone();
        }
        rows.push(row);
    }
    let document = match a.format {
        Format::Json => to_canonical_string(&Value::Array(rows)),
        Format::Text => report_text(&rows),
    };
    Ok(Outcome {
        document,
        code: if any_inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK },
    })
}

fn report_text(rows: &[Value]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!(
            "{}  dims {}  states {}  complement {}  multipartite {}",
            r["name"].as_str().unwrap_or("?"),
            r["dims"],
            r["states"],
            r["complement_dim"],
            r["multipartite"].as_str().unwrap_or("?"),
        ));
        if let Some(p) = r.get("ppt_in_every_bipartition") {
            out.push_str(&format!("  ppt {p}"));
        }
        out.push('\n');
        for b in r["bipartitions"].as_array().into_iter().flatten() {
            out.push_str(&format!(
                "    {:<6} upb {:<8} sucpb {:<14} span {} ({} families)\n",
                b["label"].as_str().unwrap_or("?"),
                b["upb"].as_str().unwrap_or("?"),
                b["sucpb"].as_str().unwrap_or("?"),
                b["product_span_dim"],
                b["families"],
            ));
        }
    }
    out
}
