//! The `ttt` command line front end.
//!
//! Exit codes: 0 on success, 1 on domain errors (invalid graph, weights
//! outside the parameter space, failed criterion, ...), 2 on usage errors and
//! unreadable or malformed input files. Errors are written to standard error
//! as a single JSON object with `error` and `message` keys.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::graph::{DirectedEdge, NodeId, TttGraph, DEFAULT_PATH_BUDGET};
use crate::identify::{self, IdentifyError, WitnessOutcome};
use crate::law::{laws_equal, DiscreteLaw};
use crate::limits::{self, is_global_markov};
use crate::model::{EdgeWeights, MaxLinearModel, ValidationOptions, DEFAULT_CRIT_EPS};
use crate::montecarlo;
use crate::spectral::{self, AngularMeasure};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "ttt",
    version,
    about = "Max-linear models on trees of transitive tournaments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Graph JSON: {"nodes":[..],"edges":[{"from":a,"to":b},..]}
    #[arg(long)]
    pub graph: PathBuf,
    /// Write the result here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Weights JSON: {"weights":[{"from":a,"to":b,"c":0.5},..]}
    #[arg(long)]
    pub weights: PathBuf,
    /// Margin below which a competing path ties the shortest path
    #[arg(long, default_value_t = DEFAULT_CRIT_EPS)]
    pub crit_eps: f64,
    /// Maximum number of paths enumerated per node pair
    #[arg(long, default_value_t = DEFAULT_PATH_BUDGET)]
    pub path_budget: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a graph is a tree of transitive tournaments and report its structure
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Coefficient matrix B and diagonal weights
    Coeffs {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Angular measure of the full vector or of a sub-vector
    Angular {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        /// Observed nodes, e.g. "2,4,5"
        #[arg(long)]
        subset: Option<String>,
    },
    /// Conditional tail limit given a large value at one node
    Limit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        cond_node: u32,
        /// Also build the factorized law and report the TV distance
        #[arg(long)]
        factorized: bool,
        /// TV tolerance for declaring the two laws equal
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Check the latent-variable criterion and reconstruct all edge weights
    Identify {
        #[command(flatten)]
        common: Common,
        /// Latent nodes, e.g. "1,3,7"
        #[arg(long, default_value = "")]
        latent: String,
        /// Sub-vector angular measure CSV (observed labels, then mass)
        #[arg(long, conflicts_with = "weights")]
        measure: Option<PathBuf>,
        /// Generate the sub-vector measure from these weights and round-trip
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Largest acceptable coordinate error when round-tripping
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Alternative weights leaving the law of the other nodes unchanged
    Witness {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        node: u32,
    },
    /// Monte Carlo check of the conditional tail limit
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, default_value_t = 200_000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        cond_node: u32,
        #[arg(long, default_value_t = 0.999)]
        q: f64,
        /// TV tolerance reported as pass/fail in the summary
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<u32>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub from: u32,
    pub to: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WeightsFile {
    pub weights: Vec<WeightEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WeightEntry {
    pub from: u32,
    pub to: u32,
    pub c: f64,
}

impl From<&TttGraph> for GraphFile {
    fn from(g: &TttGraph) -> Self {
        GraphFile {
            nodes: g.labels().iter().map(|v| v.0).collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeEntry {
                    from: e.from.0,
                    to: e.to.0,
                })
                .collect(),
        }
    }
}

impl From<&EdgeWeights> for WeightsFile {
    fn from(w: &EdgeWeights) -> Self {
        WeightsFile {
            weights: w
                .iter()
                .map(|(e, c)| WeightEntry {
                    from: e.from.0,
                    to: e.to.0,
                    c,
                })
                .collect(),
        }
    }
}

impl From<WeightsFile> for EdgeWeights {
    fn from(w: WeightsFile) -> Self {
        EdgeWeights::from_triples(
            w.weights
                .into_iter()
                .map(|e| (NodeId(e.from), NodeId(e.to), e.c)),
        )
    }
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Domain(e.into())
            }
        }
    )*};
}
domain_from!(
    crate::GraphError,
    crate::ModelError,
    crate::law::LawError,
    crate::spectral::SpectralError,
    crate::limits::LimitError,
    IdentifyError,
    crate::montecarlo::McError
);

/// Formats with 17 significant digits, dropping trailing zeros.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let s = format!("{:.*}", (16 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<TttGraph, Failure> {
    let text = read_text(path)?;
    let gf: GraphFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed graph file {}: {e}", path.display())))?;
    Ok(TttGraph::build(
        gf.nodes.into_iter().map(NodeId),
        gf.edges
            .into_iter()
            .map(|e| DirectedEdge::new(e.from, e.to)),
    )?)
}

fn load_weights(path: &Path) -> Result<EdgeWeights, Failure> {
    let text = read_text(path)?;
    let wf: WeightsFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed weights file {}: {e}", path.display())))?;
    Ok(wf.into())
}

fn load_model(g: TttGraph, w: &WeightArgs) -> Result<MaxLinearModel, Failure> {
    if !(w.crit_eps >= 0.0) {
        return Err(Failure::Usage("--crit-eps must be non-negative".into()));
    }
    let theta = load_weights(&w.weights)?;
    let opts = ValidationOptions {
        crit_eps: w.crit_eps,
        path_budget: w.path_budget,
    };
    Ok(MaxLinearModel::with_options(g, theta, opts)?)
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<NodeId>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u32>()
                .map(NodeId)
                .map_err(|_| Failure::Usage(format!("{flag}: '{t}' is not a node label")))
        })
        .collect()
}

fn check_known(g: &TttGraph, nodes: &[NodeId]) -> Result<(), Failure> {
    for &v in nodes {
        g.index_of(v)?;
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage("--tol must be positive".into()))
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

fn csv_row(w: &mut csv::Writer<Vec<u8>>, row: Vec<String>) {
    w.write_record(row).expect("in-memory writer");
}

fn law_json(l: &DiscreteLaw) -> Value {
    json!({
        "atoms": l.atoms(),
        "masses": l.masses(),
    })
}

fn labels_u32(v: &[NodeId]) -> Vec<u32> {
    v.iter().map(|x| x.0).collect()
}

fn cmd_validate(c: &Common) -> Result<String, Failure> {
    let g = load_graph(&c.graph)?;
    let sources = g.sources();
    let vs = g.v_structures();
    Ok(match c.format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "nodes": labels_u32(g.labels()),
            "edge_count": g.edge_count(),
            "sources": sources.iter().map(|v| v.0).collect::<Vec<_>>(),
            "v_structures": vs.iter().map(|t| [t.0 .0, t.1 .0, t.2 .0]).collect::<Vec<_>>(),
            "tournaments": g.tournaments().iter().map(|t| labels_u32(&t.nodes)).collect::<Vec<_>>(),
            "single_source": is_global_markov(&g),
        }))
        .expect("json")
            + "\n",
        Format::Csv => {
            let mut s = format!(
                "nodes: {}; edges: {}; tournaments: {}\n",
                g.node_count(),
                g.edge_count(),
                g.tournaments().len()
            );
            s += &format!("sources: {}; v-structures: {}\n", join(&sources), vs.len());
            for t in g.tournaments() {
                s += &format!("tournament: {}\n", join(&t.nodes));
            }
            for (a, b, v) in &vs {
                s += &format!("v-structure: {a},{b} -> {v}\n");
            }
            s += &format!(
                "single source: {}\n",
                if is_global_markov(&g) { "yes" } else { "no" }
            );
            s
        }
    })
}

fn cmd_coeffs(c: &Common, w: &WeightArgs) -> Result<String, Failure> {
    let m = load_model(load_graph(&c.graph)?, w)?;
    let labels = m.graph().labels();
    Ok(match c.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "nodes": labels_u32(labels),
                "b": m.b(),
                "diag": m.diag(),
            }))
            .expect("json")
                + "\n"
        }
        Format::Csv => {
            let mut out = csv_writer();
            let mut header = vec!["node".to_string()];
            header.extend(labels.iter().map(|v| v.to_string()));
            header.push("diag".into());
            csv_row(&mut out, header);
            for (k, v) in labels.iter().enumerate() {
                let mut row = vec![v.to_string()];
                row.extend(m.b()[k].iter().map(|&x| fmt_f64(x)));
                row.push(fmt_f64(m.diag()[k]));
                csv_row(&mut out, row);
            }
            csv_finish(out)
        }
    })
}

fn measure_output(h: &AngularMeasure, format: Format) -> String {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "coords": labels_u32(h.coords()),
                "atoms": h.law.atoms(),
                "masses": h.law.masses(),
                "nodes": h.node_of_atom.as_ref().map(|v| labels_u32(v)),
            }))
            .expect("json")
                + "\n"
        }
        Format::Csv => {
            let mut out = csv_writer();
            let mut header: Vec<String> = h.coords().iter().map(|v| v.to_string()).collect();
            header.push("mass".into());
            csv_row(&mut out, header);
            for (a, m) in h.law.iter() {
                let mut row: Vec<String> = a.iter().map(|&x| fmt_f64(x)).collect();
                row.push(fmt_f64(m));
                csv_row(&mut out, row);
            }
            csv_finish(out)
        }
    }
}

fn cmd_angular(c: &Common, w: &WeightArgs, subset: &Option<String>) -> Result<String, Failure> {
    let m = load_model(load_graph(&c.graph)?, w)?;
    let h = match subset {
        None => spectral::angular_measure(&m),
        Some(s) => {
            let u = parse_list(s, "--subset")?;
            check_known(m.graph(), &u)?;
            spectral::subvector_measure(&m, &u)?
        }
    };
    Ok(measure_output(&h, c.format))
}

/// Reads a measure CSV: a header of node labels followed by `mass`.
pub fn parse_measure_csv(text: &str) -> Result<AngularMeasure, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.last() != Some(&"mass") || cols.len() < 2 {
        return Err("last column must be 'mass' after at least one node label".into());
    }
    let coords: Vec<NodeId> = cols[..cols.len() - 1]
        .iter()
        .map(|t| {
            t.parse::<u32>()
                .map(NodeId)
                .map_err(|_| format!("bad label '{t}'"))
        })
        .collect::<Result<_, _>>()?;
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| format!("bad number '{t}'")))
            .collect::<Result<_, _>>()?;
        let (m, a) = vals.split_last().ok_or("empty row")?;
        atoms.push(a.to_vec());
        masses.push(*m);
    }
    let law = DiscreteLaw::new(coords, atoms, masses).map_err(|e| e.to_string())?;
    Ok(AngularMeasure {
        law,
        node_of_atom: None,
    })
}

fn cmd_limit(
    c: &Common,
    w: &WeightArgs,
    cond: u32,
    factorized: bool,
    tol: f64,
) -> Result<String, Failure> {
    check_tol(tol)?;
    let m = load_model(load_graph(&c.graph)?, w)?;
    let u = NodeId(cond);
    let direct = limits::direct_limit(&m, u)?;
    let fact = if factorized {
        Some(limits::factorized_limit(&m, u)?)
    } else {
        None
    };
    let cmp = match &fact {
        Some(f) => Some(laws_equal(&direct.law, &f.law, tol)?),
        None => None,
    };
    let coords = direct.law.coords();
    Ok(match c.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "cond_node": cond,
                "coords": labels_u32(coords),
                "direct": law_json(&direct.law),
                "factorized": fact.as_ref().map(|f| law_json(&f.law)),
                "tv": cmp.map(|x| x.tv_distance),
                "equal": cmp.map(|x| x.equal),
            }))
            .expect("json")
                + "\n"
        }
        Format::Csv => {
            let mut out = csv_writer();
            let mut header = vec!["form".to_string()];
            header.extend(coords.iter().map(|v| v.to_string()));
            header.push("mass".into());
            csv_row(&mut out, header);
            let mut emit = |name: &str, l: &DiscreteLaw| {
                for (a, mass) in l.iter() {
                    let mut row = vec![name.to_string()];
                    row.extend(a.iter().map(|&x| fmt_f64(x)));
                    row.push(fmt_f64(mass));
                    csv_row(&mut out, row);
                }
            };
            emit("direct", &direct.law);
            if let Some(f) = &fact {
                emit("factorized", &f.law);
            }
            if let Some(x) = cmp {
                csv_row(&mut out, vec!["tv".into(), fmt_f64(x.tv_distance)]);
            }
            csv_finish(out)
        }
    })
}

fn cmd_identify(
    c: &Common,
    latent: &str,
    measure: &Option<PathBuf>,
    weights: &Option<PathBuf>,
    tol: f64,
) -> Result<String, Failure> {
    check_tol(tol)?;
    let g = load_graph(&c.graph)?;
    let ubar_list = parse_list(latent, "--latent")?;
    check_known(&g, &ubar_list)?;
    let ubar: BTreeSet<NodeId> = ubar_list.into_iter().collect();
    let report = identify::identifiability_check(&g, &ubar)?;
    if !report.ok {
        return Err(IdentifyError::CriterionViolated(report.violations).into());
    }
    let (h, truth) = match (measure, weights) {
        (Some(p), None) => {
            let text = read_text(p)?;
            let h = parse_measure_csv(&text).map_err(|e| {
                Failure::Usage(format!("malformed measure file {}: {e}", p.display()))
            })?;
            (h, None)
        }
        (None, Some(p)) => {
            let theta = load_weights(p)?;
            let m = MaxLinearModel::new(g.clone(), theta)?;
            let u: Vec<NodeId> = g
                .labels()
                .iter()
                .copied()
                .filter(|v| !ubar.contains(v))
                .collect();
            (spectral::subvector_measure(&m, &u)?, Some(m))
        }
        _ => {
            return Err(Failure::Usage(
                "identify needs exactly one of --measure or --weights".into(),
            ))
        }
    };
    let rep = identify::reconstruct(&h, &g, &ubar)?;
    let max_err = truth
        .as_ref()
        .and_then(|m| rep.theta_hat.max_abs_diff(m.theta()));
    let body = json!({
        "latent": ubar.iter().map(|v| v.0).collect::<Vec<_>>(),
        "weights": serde_json::to_value(WeightsFile::from(&rep.theta_hat)).expect("json")["weights"],
        "diag": rep.diag.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "atom_assignment": labels_u32(&rep.atom_assignment),
        "disambiguations": rep.diagnostics.iter().map(|d| json!({
            "parent": d.parent.0,
            "child": d.child.0,
            "common_child": d.common_child.0,
            "u_proxy": d.u_proxy.0,
            "j_proxy": d.j_proxy.0,
            "parent_ratio": d.parent_ratio,
            "child_ratio": d.child_ratio,
        })).collect::<Vec<_>>(),
        "exit_paths": rep.exit_paths.iter().map(|(k, p)| (k.to_string(), json!(labels_u32(p)))).collect::<serde_json::Map<_, _>>(),
        "max_abs_error": max_err,
        "within_tol": max_err.map(|e| e <= tol),
    });
    Ok(serde_json::to_string_pretty(&body).expect("json") + "\n")
}

fn cmd_witness(c: &Common, w: &WeightArgs, node: u32) -> Result<String, Failure> {
    let m = load_model(load_graph(&c.graph)?, w)?;
    let body = match identify::non_identifiability_witness(&m, NodeId(node))? {
        WitnessOutcome::Found(wt) => json!({
            "node": node,
            "witness": {
                "lambda": wt.lambda,
                "weights": serde_json::to_value(WeightsFile::from(&wt.theta_prime)).expect("json")["weights"],
                "max_stdf_diff": wt.max_stdf_diff,
                "grid_points": wt.grid_points,
            },
        }),
        WitnessOutcome::NonConstructive { node, diagnostic } => json!({
            "node": node.0,
            "witness": null,
            "diagnostic": diagnostic,
        }),
    };
    Ok(serde_json::to_string_pretty(&body).expect("json") + "\n")
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    c: &Common,
    w: &WeightArgs,
    n: usize,
    seed: u64,
    cond: u32,
    q: f64,
    tol: f64,
) -> Result<String, Failure> {
    check_tol(tol)?;
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let m = load_model(load_graph(&c.graph)?, w)?;
    let u = NodeId(cond);
    m.graph().index_of(u)?;
    let batch = montecarlo::sample(&m, n, seed)?;
    let emp = montecarlo::empirical_conditional(&batch, &m, u, q)?;
    let tv = emp.tv_to_exact()?;
    let coords = emp.exact.coords();
    Ok(match c.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "cond_node": cond,
                "n": n,
                "seed": seed,
                "q": q,
                "threshold": emp.threshold,
                "coords": labels_u32(coords),
                "exact": law_json(&emp.exact),
                "empirical": law_json(&emp.law),
                "exceedances": emp.exceedances,
                "stray_mass": emp.stray_mass,
                "tv": tv,
                "within_tol": tv <= tol,
            }))
            .expect("json")
                + "\n"
        }
        Format::Csv => {
            let mut out = csv_writer();
            let mut header = vec!["form".to_string()];
            header.extend(coords.iter().map(|v| v.to_string()));
            header.push("mass".into());
            csv_row(&mut out, header);
            for (name, l) in [("exact", &emp.exact), ("empirical", &emp.law)] {
                for (a, mass) in l.iter() {
                    let mut row = vec![name.to_string()];
                    row.extend(a.iter().map(|&x| fmt_f64(x)));
                    row.push(fmt_f64(mass));
                    csv_row(&mut out, row);
                }
            }
            csv_row(
                &mut out,
                vec!["exceedances".into(), emp.exceedances.to_string()],
            );
            csv_row(&mut out, vec!["stray".into(), fmt_f64(emp.stray_mass)]);
            csv_row(&mut out, vec!["tv".into(), fmt_f64(tv)]);
            csv_finish(out)
        }
    })
}

/// Stable name of the innermost error variant, e.g. `NotConnected`.
pub fn error_kind(e: &Error) -> String {
    const WRAPPERS: [&str; 8] = [
        "Graph",
        "Model",
        "Law",
        "Spectral",
        "Limits",
        "Limit",
        "Identify",
        "MonteCarlo",
    ];
    let dbg = format!("{e:?}");
    let mut rest = dbg.as_str();
    loop {
        let end = rest
            .find(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
            .unwrap_or(rest.len());
        let ident = &rest[..end];
        if WRAPPERS.contains(&ident) && rest[end..].starts_with('(') {
            rest = &rest[end + 1..];
        } else {
            return ident.to_string();
        }
    }
}

fn error_json(e: &Error) -> Value {
    let mut v = json!({
        "error": error_kind(e),
        "message": e.to_string(),
    });
    if let Error::Identify(IdentifyError::CriterionViolated(vs)) = e {
        v["violations"] = vs
            .iter()
            .map(|x| {
                json!({
                    "node": x.node.0,
                    "condition": x.condition.code(),
                    "message": x.condition.describe(),
                })
            })
            .collect();
    }
    v
}

fn dispatch(cli: &Cli) -> Result<(String, Option<PathBuf>), Failure> {
    let (text, common) = match &cli.command {
        Command::Validate { common } => (cmd_validate(common)?, common),
        Command::Coeffs { common, weights } => (cmd_coeffs(common, weights)?, common),
        Command::Angular {
            common,
            weights,
            subset,
        } => (cmd_angular(common, weights, subset)?, common),
        Command::Limit {
            common,
            weights,
            cond_node,
            factorized,
            tol,
        } => (
            cmd_limit(common, weights, *cond_node, *factorized, *tol)?,
            common,
        ),
        Command::Identify {
            common,
            latent,
            measure,
            weights,
            tol,
        } => (
            cmd_identify(common, latent, measure, weights, *tol)?,
            common,
        ),
        Command::Witness {
            common,
            weights,
            node,
        } => (cmd_witness(common, weights, *node)?, common),
        Command::Simulate {
            common,
            weights,
            n,
            seed,
            cond_node,
            q,
            tol,
        } => (
            cmd_simulate(common, weights, *n, *seed, *cond_node, *q, *tol)?,
            common,
        ),
    };
    Ok((text, common.out.clone()))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = writeln!(
                    stderr,
                    "{}",
                    json!({"error": "Usage", "message": rendered.trim_end()})
                );
            }
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((text, None)) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Ok((text, Some(path))) => match fs::write(&path, text) {
            Ok(()) => 0,
            Err(e) => {
                let msg = format!("cannot write {}: {e}", path.display());
                let _ = writeln!(stderr, "{}", json!({"error": "Usage", "message": msg}));
                2
            }
        },
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "{}", json!({"error": "Usage", "message": msg}));
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            1
        }
    }
}
