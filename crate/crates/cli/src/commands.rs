use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};

use curvreg::evaluation::{lp_evaluate_repeats, nc_accuracy, EvalReport};
use curvreg::geometry::{
    condition_pass_fraction, curvature_field, distortion, euclidean_distance, geodesic_distance,
    sample_pairs, FULL_PAIRS_LIMIT, PAIRS_PER_NODE,
};
use curvreg::graph::{
    all_pairs, largest_connected_component, load_edge_list, load_labels, pair_paths,
    sample_node_set, shortest_path, BfsTree, Graph, LabelMap, PathSource,
};
use curvreg::regularizer::{read_path_cache, write_path_cache, RegularizerKind};
use curvreg::trainer::{TrainConfig, TrainOutput, Trainer};
use curvreg::{datasets, embedding, seed, Embedding};

use crate::args::{
    CaseGraph, CaseStudyArgs, Command, DistortionArgs, EvalLpArgs, EvalNcArgs, GraphArgs,
    ModelArgs, Reg, TrainArgs,
};

/// Everything needed to replay a command.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a> {
    pub version: &'static str,
    #[serde(flatten)]
    pub command: &'a Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(command, a),
        Command::EvalNc(a) => cmd_eval_nc(command, a),
        Command::EvalLp(a) => cmd_eval_lp(command, a),
        Command::Distortion(a) => cmd_distortion(command, a),
        Command::CaseStudy(a) => cmd_case_study(command, a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// The input graph and the graph actually used (its largest component
/// unless `--no-lcc`).
fn load_graph(args: &GraphArgs) -> Result<(Graph, Graph)> {
    let full = load_edge_list(&read(&args.edges)?).with_context(|| format!("in {}", args.edges.display()))?;
    if args.no_lcc || full.is_connected() {
        return Ok((full.clone(), full));
    }
    let lcc = largest_connected_component(&full);
    info!("using the largest component: {} of {} nodes", lcc.n(), full.n());
    Ok((full, lcc))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "graph".to_owned(), |s| s.to_string_lossy().into_owned())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn json_line<T: Serialize>(out: &mut String, value: &T) -> Result<()> {
    out.push_str(&serde_json::to_string(value)?);
    out.push('\n');
    Ok(())
}

/// Attach a remedy to errors the user can fix with a flag.
fn explain(e: curvreg::Error) -> anyhow::Error {
    match e {
        curvreg::Error::Capacity { .. } => {
            anyhow!("{e}; rerun with `--reg s` (and `--sample-size` to choose the sample)")
        }
        curvreg::Error::TooManyPairs { .. } => anyhow!("{e}; pass `--pairs` to sample pairs"),
        other => other.into(),
    }
}

fn path_cache_key(graph: &Graph, cfg: &TrainConfig) -> Result<u64> {
    let walk = cfg.embedder.walk_config();
    let descr = serde_json::to_string(&(graph.content_hash(), cfg.regularizer, walk, cfg.seed))?;
    Ok(seed::content_hash(descr.as_bytes()))
}

/// Train, reusing the regularizer's paths from `cache` when it holds them
/// for this graph and configuration, and filling it otherwise.
fn train(graph: &Graph, cfg: &TrainConfig, cache: Option<&Path>) -> Result<TrainOutput> {
    let Some(cache) = cache.filter(|_| cfg.regularizer != RegularizerKind::None) else {
        return Trainer::new(graph, cfg.clone()).and_then(Trainer::run).map_err(explain);
    };
    let key = path_cache_key(graph, cfg)?;
    if cache.exists() {
        let file = File::open(cache).with_context(|| format!("cannot open {}", cache.display()))?;
        match read_path_cache(BufReader::new(file), key)? {
            Some(paths) => {
                paths.validate(graph).context("cached paths do not fit this graph")?;
                info!("reusing {} cached paths from {}", paths.len(), cache.display());
                return Trainer::with_paths(graph, cfg.clone(), Some(Arc::new(paths)))
                    .and_then(Trainer::run)
                    .map_err(explain);
            }
            None => warn!("{} was built for a different run; rebuilding it", cache.display()),
        }
    }
    let trainer = Trainer::new(graph, cfg.clone()).map_err(explain)?;
    if let Some(state) = trainer.regularizer() {
        let file = File::create(cache).with_context(|| format!("cannot write {}", cache.display()))?;
        let mut w = BufWriter::new(file);
        write_path_cache(&mut w, key, &state.paths)?;
        w.flush()?;
    }
    trainer.run().map_err(explain)
}

fn cmd_train(command: &Command, a: &TrainArgs) -> Result<()> {
    let (_, graph) = load_graph(&a.graph)?;
    let cfg = a.model.train_config();
    let out = train(&graph, &cfg, a.model.path_cache.as_deref())?;
    create_dir(&a.out)?;
    let run = RunConfig { version: env!("CARGO_PKG_VERSION"), command, train_config: Some(cfg.clone()) };

    write_file(&a.out.join("embedding.txt"), &out.embedding.to_text())?;
    write_file(&a.out.join("embedding.ids"), &embedding::id_map_text(&graph))?;

    let mut trace = String::new();
    json_line(&mut trace, &json!({ "type": "run_config", "config": &run }))?;
    for r in &out.trace.records {
        json_line(&mut trace, &tagged("epoch", r)?)?;
    }
    for c in &out.trace.checkpoints {
        json_line(&mut trace, &tagged("checkpoint", c)?)?;
    }
    write_file(&a.out.join("trace.jsonl"), &trace)?;

    let rho = final_distortion(&out.embedding, &graph, cfg.seed)?;
    let meta = json!({
        "run_config": &run,
        "graph": graph_summary(&a.graph.edges, &graph),
        "init": out.trace.init,
        "path_cache_hash": out.trace.path_cache_hash,
        "checkpoints": out.trace.checkpoints,
        "epochs": out.trace.records.len(),
        "distortion": rho,
    });
    write_file(&a.out.join("meta.json"), &format!("{}\n", serde_json::to_string_pretty(&meta)?))?;
    println!(
        "trained {} on {} nodes; rho = {}; wrote {}",
        cfg.embedder.kind.name(),
        graph.n(),
        rho.get("rho").and_then(Value::as_f64).map_or("n/a".to_owned(), |r| format!("{r:.6}")),
        a.out.display()
    );
    Ok(())
}

fn tagged<T: Serialize>(kind: &str, value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut v {
        map.insert("type".to_owned(), Value::String(kind.to_owned()));
    }
    Ok(v)
}

fn graph_summary(edges: &Path, graph: &Graph) -> Value {
    json!({
        "edges_file": edges,
        "nodes": graph.n(),
        "edges": graph.num_edges(),
        "content_hash": graph.content_hash(),
    })
}

/// Distortion over all pairs when that is affordable, else over a sample.
fn final_distortion(emb: &Embedding, graph: &Graph, run_seed: u64) -> Result<Value> {
    let n = graph.n();
    let pairs = (n > FULL_PAIRS_LIMIT).then(|| sample_pairs(n, n * PAIRS_PER_NODE, seed::derive(run_seed, "final-rho")));
    match distortion(emb, graph, pairs.as_deref()) {
        Ok(r) => Ok(json!({ "rho": r.rho, "report": r, "sampled_pairs": pairs.map(|p| p.len()) })),
        Err(curvreg::Error::NoUsablePairs { skipped }) => Ok(json!({ "rho": null, "skipped": skipped })),
        Err(e) => Err(e.into()),
    }
}

/// Rows of the embedding at `path` reordered to `graph`'s node ids, using
/// the sidecar id map.
fn load_embedding(path: &Path, ids: Option<&Path>, graph: &Graph) -> Result<Embedding> {
    let emb = Embedding::from_text(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let ids_path: PathBuf = ids.map_or_else(|| path.with_extension("ids"), Path::to_path_buf);
    let tokens = if ids_path.exists() {
        embedding::parse_id_map(&read(&ids_path)?)
    } else {
        warn!("no id map at {}; assuming rows follow the edge list's node order", ids_path.display());
        graph.labels().to_vec()
    };
    if tokens.len() != emb.n() {
        bail!("{} lists {} ids but the embedding has {} rows", ids_path.display(), tokens.len(), emb.n());
    }
    let row_of: std::collections::HashMap<&str, usize> =
        tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut aligned = Embedding::zeros(graph.n(), emb.dim());
    for v in 0..graph.n() {
        let r = *row_of
            .get(graph.label(v))
            .ok_or_else(|| anyhow!("embedding has no row for node `{}`", graph.label(v)))?;
        aligned.row_mut(v).copy_from_slice(emb.row(r));
    }
    Ok(aligned)
}

fn reg_name(reg: Reg) -> &'static str {
    match reg {
        Reg::None => "none",
        Reg::C => "c",
        Reg::S => "s",
        Reg::A => "a",
    }
}

fn write_reports(
    dir: &Path,
    run: &RunConfig<'_>,
    dataset: &str,
    method: &str,
    reg: &str,
    report: &EvalReport,
    extra: Value,
) -> Result<()> {
    create_dir(dir)?;
    let mut lines = String::new();
    json_line(
        &mut lines,
        &json!({ "dataset": dataset, "method": method, "reg": reg, "report": report, "options": extra, "run_config": run }),
    )?;
    write_file(&dir.join("report.jsonl"), &lines)?;
    let csv = format!(
        "dataset,method,reg,task,metric,mean,std,splits\n{dataset},{method},{reg},{},{},{},{},{}\n",
        serde_json::to_value(report.task)?.as_str().unwrap_or_default(),
        report.metric,
        report.value,
        report.std_dev,
        report.splits.len()
    );
    write_file(&dir.join("summary.csv"), &csv)
}

fn cmd_eval_nc(command: &Command, a: &EvalNcArgs) -> Result<()> {
    let (full, graph) = load_graph(&a.graph)?;
    let labels: LabelMap = load_labels(&read(&a.labels)?, &full)
        .with_context(|| format!("in {}", a.labels.display()))?
        .remap(&full, &graph);
    if labels.is_empty() {
        bail!("none of the labelled nodes are in the graph being embedded");
    }
    let (emb, method, reg, cfg) = match &a.embedding {
        Some(p) => (load_embedding(p, a.ids.as_deref(), &graph)?, "external".to_owned(), "n/a", None),
        None => {
            let cfg = a.model.train_config();
            let out = train(&graph, &cfg, a.model.path_cache.as_deref())?;
            (out.embedding, cfg.embedder.kind.name().to_owned(), reg_name(a.model.reg), Some(cfg))
        }
    };
    let report = nc_accuracy(&emb, &labels, a.repeats, seed::derive(a.model.seed, "nc-splits"))?;
    let run = RunConfig { version: env!("CARGO_PKG_VERSION"), command, train_config: cfg };
    let extra = json!({ "repeats": a.repeats, "labelled_nodes": labels.len(), "classes": labels.num_classes() });
    write_reports(&a.out, &run, &dataset_name(&a.graph.edges), &method, reg, &report, extra)?;
    println!("accuracy {:.4} ± {:.4} over {} splits", report.value, report.std_dev, report.splits.len());
    Ok(())
}

fn cmd_eval_lp(command: &Command, a: &EvalLpArgs) -> Result<()> {
    let (_, graph) = load_graph(&a.graph)?;
    let cfg = a.model.train_config();
    if a.model.path_cache.is_some() {
        warn!("--path-cache is ignored for link prediction: every split trains on a different graph");
    }
    let report = lp_evaluate_repeats(&graph, &cfg, a.removal, a.repeats, seed::derive(a.model.seed, "lp-splits"))
        .map_err(explain)?;
    let run = RunConfig { version: env!("CARGO_PKG_VERSION"), command, train_config: Some(cfg.clone()) };
    let extra = json!({ "removal_frac": a.removal, "repeats": a.repeats });
    write_reports(
        &a.out,
        &run,
        &dataset_name(&a.graph.edges),
        cfg.embedder.kind.name(),
        reg_name(a.model.reg),
        &report,
        extra,
    )?;
    println!("MAP {:.4} ± {:.4} over {} splits", report.value, report.std_dev, report.splits.len());
    Ok(())
}

fn cmd_distortion(command: &Command, a: &DistortionArgs) -> Result<()> {
    let (_, graph) = load_graph(&a.graph)?;
    let emb = load_embedding(&a.embedding, a.ids.as_deref(), &graph)?;
    let n = graph.n();
    let pairs = match a.pairs {
        Some(k) => Some(sample_pairs(n, k, seed::derive(a.seed, "distortion-pairs"))),
        None if n > FULL_PAIRS_LIMIT => {
            Some(sample_pairs(n, n * PAIRS_PER_NODE, seed::derive(a.seed, "distortion-pairs")))
        }
        None => None,
    };
    let rho = distortion(&emb, &graph, pairs.as_deref()).map_err(explain)?;
    let nodes = sample_node_set(&graph, a.sample_size.clamp(2, n.max(2)), seed::derive(a.seed, "distortion-nodes"))?;
    let paths = pair_paths(&graph, &all_pairs(&nodes), PathSource::SampledPairs { nodes: nodes.clone() })?;
    let field = curvature_field(&emb, &paths)?;
    let report = json!({
        "run_config": RunConfig { version: env!("CARGO_PKG_VERSION"), command, train_config: None },
        "distortion": rho,
        "pair_sampling": pairs.as_ref().map(|p| json!({ "pairs": p.len() })),
        "curvature": {
            "paths": paths.len(),
            "sampled_nodes": nodes.len(),
            "vertices": field.samples.len(),
            "degenerate": field.degenerate,
            "cosine": field.stats(),
        },
        "condition_pass_fraction": condition_pass_fraction(&emb, &paths),
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_file(&dir.join("distortion.json"), &text)?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct ScatterPoint {
    graph: &'static str,
    variant: &'static str,
    source: usize,
    target: usize,
    graph_distance: usize,
    geodesic: f64,
    euclidean: f64,
}

fn scatter(
    name: &'static str,
    variant: &'static str,
    graph: &Graph,
    emb: &Embedding,
    pairs: &[(usize, usize)],
) -> Result<Vec<ScatterPoint>> {
    let mut out = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let Some(path) = shortest_path(graph, s, t)? else { continue };
        out.push(ScatterPoint {
            graph: name,
            variant,
            source: s,
            target: t,
            graph_distance: BfsTree::new(graph, s).distance(t).unwrap_or(0),
            geodesic: geodesic_distance(emb, &path),
            euclidean: euclidean_distance(emb.row(s), emb.row(t))?,
        });
    }
    Ok(out)
}

fn case_graphs(which: CaseGraph, n: usize, seed: u64) -> Vec<(&'static str, Graph)> {
    let mut out = Vec::new();
    if matches!(which, CaseGraph::Path | CaseGraph::All) {
        out.push(("path", datasets::path(n)));
    }
    if matches!(which, CaseGraph::Cycle | CaseGraph::All) {
        out.push(("cycle", datasets::cycle(n)));
    }
    if matches!(which, CaseGraph::TwoCluster | CaseGraph::All) {
        out.push(("two-cluster", datasets::two_block(n, 0.3, 0.02, seed::derive(seed, "two-cluster")).0));
    }
    out
}

fn cmd_case_study(command: &Command, a: &CaseStudyArgs) -> Result<()> {
    if a.nodes < 3 {
        bail!("--nodes must be at least 3");
    }
    let model: ModelArgs = ModelArgs { reg: if a.model.reg == Reg::None { Reg::S } else { a.model.reg }, ..a.model.clone() };
    let regularized = model.train_config();
    let baseline = ModelArgs { reg: Reg::None, ..model.clone() }.train_config();
    create_dir(&a.out)?;
    let run = RunConfig { version: env!("CARGO_PKG_VERSION"), command, train_config: Some(regularized.clone()) };
    let mut records = String::new();
    json_line(&mut records, &json!({ "type": "run_config", "config": &run }))?;
    let mut csv = String::from("graph,variant,source,target,graph_distance,geodesic,euclidean\n");
    for (name, graph) in case_graphs(a.graph, a.nodes, a.model.seed) {
        let pairs = sample_pairs(graph.n(), a.pairs, seed::derive(a.model.seed, "case-study-pairs"));
        for (variant, cfg) in [("baseline", &baseline), ("regularized", &regularized)] {
            let out = train(&graph, cfg, None)?;
            let rho = distortion(&out.embedding, &graph, None)?;
            let points = scatter(name, variant, &graph, &out.embedding, &pairs)?;
            json_line(
                &mut records,
                &json!({ "type": "rho", "graph": name, "variant": variant, "rho": rho.rho, "scatter_points": points.len() }),
            )?;
            for p in &points {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.graph, p.variant, p.source, p.target, p.graph_distance, p.geodesic, p.euclidean
                ));
            }
            println!("{name:12} {variant:12} rho = {:.6}", rho.rho);
        }
    }
    write_file(&a.out.join("case_study.jsonl"), &records)?;
    write_file(&a.out.join("scatter.csv"), &csv)
}
