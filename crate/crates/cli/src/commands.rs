use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::time::Instant;

use graphmem::fingerprint::{circular_fingerprint, write_fingerprint_csv};
use graphmem::graphmem::{gradient_check, GradCheckOptions, GraphMem, ModelParams};
use graphmem::kv::parse_key_values;
use graphmem::molgraph::{featurize, generate_synthetic, parse_sdf, write_labels_csv, write_molfile, LabelRow, SyntheticSpec, Vocabulary, BOND_TYPES};
use graphmem::training::{evaluate, infer_dims, query_for, split_examples, train as train_model, Example, ExperimentConfig, MetricsReport, Mode, Splits};
use serde::Serialize;

use crate::data::load_roster;
use crate::error::{checkpoint_error, read_input, write_output, CliError, ExitKind};
use crate::manifest::RunManifest;
use crate::{DataArgs, DumpArgs, EvalArgs, FingerprintArgs, GradcheckArgs, Global, Split, SynthArgs, TrainArgs};

const MAX_RELATIVE_ERROR: f64 = 1e-4;

/// Config file, then `--set` overrides, then dedicated flags.
fn resolve_config(global: &Global, data: Option<&DataArgs>) -> Result<ExperimentConfig, CliError> {
    let mut map = match &global.config {
        Some(path) => parse_key_values(&read_input(path, ExitKind::Config)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => BTreeMap::new(),
    };
    if let Some(d) = data {
        for kv in &d.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        if !d.tasks.is_empty() {
            map.insert("tasks".into(), d.tasks.join(","));
        }
        if let Some(m) = d.mode {
            map.insert("mode".into(), m.to_string());
        }
        if let Some(dir) = &d.data_dir {
            map.insert("data_dir".into(), dir.clone());
        }
    }
    if let Some(s) = global.seed {
        map.insert("seed".into(), s.to_string());
    }
    if let Some(w) = global.workers {
        map.insert("workers".into(), w.to_string());
    }
    Ok(ExperimentConfig::from_map(&map)?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

#[derive(Serialize)]
struct TrainMetrics<'a> {
    tasks: &'a [String],
    mode: Mode,
    best_epoch: usize,
    epochs: usize,
    validation: &'a MetricsReport,
    test: &'a MetricsReport,
}

#[derive(Serialize)]
struct EvalMetrics<'a> {
    tasks: &'a [String],
    mode: Mode,
    split: &'a str,
    report: &'a MetricsReport,
}

fn summarize(label: &str, r: &MetricsReport) {
    let auc = r.average_auc.map_or("NA".to_string(), |a| format!("{a:.4}"));
    println!("{label}: micro F1 {:.4}, macro F1 {:.4}, average AUC {auc}", r.micro_f1, r.macro_f1);
}

pub fn train(global: &Global, args: &TrainArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (config, previous) = match &args.manifest {
        Some(path) => {
            let m = RunManifest::read(path)?;
            let mut config = ExperimentConfig::from_text(&m.config)?;
            if let Some(w) = global.workers {
                config.workers = w;
            }
            (config, Some(m))
        }
        None => (resolve_config(global, Some(&args.data))?, None),
    };
    let (examples, datasets) = load_roster(&config)?;
    if let Some(m) = &previous {
        m.check_datasets(&datasets)?;
    }
    let num_tasks = config.tasks.len();
    let splits = split_examples(&examples, num_tasks, config.seed)?;
    log::info!(
        "{} train / {} validation / {} test examples, {} mode",
        splits.train.len(),
        splits.validation.len(),
        splits.test.len(),
        config.mode
    );

    let mut log = String::from("epoch\ttrain_loss\tmicro_f1\tmacro_f1\taverage_auc\n");
    let outcome = train_model(&splits, num_tasks, &config, |r| {
        log::info!("epoch {r}");
        log.push_str(&format!("{r}\n"));
    })?;

    let out = &global.out_dir;
    let paths: BTreeMap<String, String> = [
        ("checkpoint", "checkpoint.gmem"),
        ("metrics", "metrics.json"),
        ("epoch_log", "epochs.tsv"),
        ("config", "config.txt"),
    ]
    .into_iter()
    .map(|(k, f)| (k.to_string(), out.join(f).display().to_string()))
    .collect();

    let mut ckpt = Vec::new();
    outcome
        .model
        .params
        .write_checkpoint(&mut ckpt)
        .map_err(|e| CliError::other(format!("checkpoint: {e}")))?;
    write_output(Path::new(&paths["checkpoint"]), ckpt)?;
    let metrics = TrainMetrics {
        tasks: &config.tasks,
        mode: config.mode,
        best_epoch: outcome.best_epoch,
        epochs: outcome.history.len(),
        validation: &outcome.validation,
        test: &outcome.test,
    };
    write_output(Path::new(&paths["metrics"]), to_json(&metrics))?;
    write_output(Path::new(&paths["epoch_log"]), log)?;
    write_output(Path::new(&paths["config"]), config.to_text())?;
    let manifest = RunManifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_text(),
        seed: config.seed,
        datasets,
        artifacts: paths,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.write(&out.join("manifest.json"))?;

    println!("best epoch {} of {}", outcome.best_epoch, outcome.history.len());
    summarize("validation", &outcome.validation);
    summarize("test", &outcome.test);
    Ok(())
}

/// Roster, split and checkpointed model shared by `eval` and `dump-attention`.
struct Loaded {
    config: ExperimentConfig,
    model: GraphMem<f64>,
    examples: Vec<Example>,
}

fn load_for_inference(global: &Global, data: &DataArgs, checkpoint: &Path, split: Split) -> Result<Loaded, CliError> {
    let config = resolve_config(global, Some(data))?;
    let (examples, _) = load_roster(&config)?;
    let num_tasks = config.tasks.len();
    let Splits { train, validation, test } = split_examples(&examples, num_tasks, config.seed)?;
    let examples = match split {
        Split::Train => train,
        Split::Validation => validation,
        Split::Test => test,
    };

    let file = File::open(checkpoint).map_err(|e| CliError::data(format!("{}: {e}", checkpoint.display())))?;
    let params = ModelParams::read_checkpoint(std::io::BufReader::new(file)).map_err(|e| checkpoint_error(checkpoint, e))?;
    let refs: Vec<&Example> = examples.iter().collect();
    let expected = infer_dims(&refs, &config, num_tasks)?;
    let found = params.dims();
    if (found.query, found.node, found.link, found.relations) != (expected.query, expected.node, expected.link, expected.relations) {
        return Err(CliError::new(
            ExitKind::Checkpoint,
            format!(
                "{}: checkpoint expects query {} / node {} / link {} / relations {}, data has {} / {} / {} / {}",
                checkpoint.display(),
                found.query,
                found.node,
                found.link,
                found.relations,
                expected.query,
                expected.node,
                expected.link,
                expected.relations
            ),
        ));
    }
    let model = GraphMem::new(params, config.model_config());
    Ok(Loaded { config, model, examples })
}

fn split_name(split: Split) -> &'static str {
    match split {
        Split::Train => "train",
        Split::Validation => "validation",
        Split::Test => "test",
    }
}

pub fn eval(global: &Global, args: &EvalArgs) -> Result<(), CliError> {
    let Loaded { config, model, examples } = load_for_inference(global, &args.data, &args.checkpoint, args.split)?;
    let (_, report) = evaluate(&model, &examples, config.mode, config.tasks.len(), config.workers)?;
    let metrics = EvalMetrics {
        tasks: &config.tasks,
        mode: config.mode,
        split: split_name(args.split),
        report: &report,
    };
    write_output(&global.out_dir.join("eval_metrics.json"), to_json(&metrics))?;
    summarize(split_name(args.split), &report);
    Ok(())
}

#[derive(Serialize)]
struct AttentionRecord<'a> {
    id: usize,
    task: &'a str,
    label: u8,
    probability: f64,
    hop: usize,
    attention: &'a [f64],
}

pub fn dump_attention(global: &Global, args: &DumpArgs) -> Result<(), CliError> {
    let Loaded { config, model, examples } = load_for_inference(global, &args.data, &args.checkpoint, args.split)?;
    let num_tasks = config.tasks.len();
    let mut out = String::new();
    for e in examples.iter().take(args.limit.unwrap_or(usize::MAX)) {
        let trace = model
            .trace(&e.input, &query_for(config.mode, e.task, num_tasks))
            .map_err(|e| CliError::data(e.to_string()))?;
        for (t, p) in trace.attention().iter().enumerate() {
            let record = AttentionRecord {
                id: e.id,
                task: &config.tasks[e.task],
                label: e.label,
                probability: trace.probability,
                hop: t + 1,
                attention: p,
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
    }
    let path = global.out_dir.join("attention.jsonl");
    write_output(&path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn fingerprint(global: &Global, args: &FingerprintArgs) -> Result<(), CliError> {
    let config = resolve_config(global, None)?;
    let radius = args.radius.unwrap_or(config.fingerprint_radius);
    let nbits = args.nbits.unwrap_or(config.fingerprint_bits);
    let text = read_input(&args.input, ExitKind::Data)?;
    let records = parse_sdf(&text).map_err(|e| CliError::data(format!("{}: {e}", args.input.display())))?;
    let vocab = Vocabulary::default();
    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let id = if r.title.is_empty() { i.to_string() } else { r.title.clone() };
        let fp = circular_fingerprint(&featurize(&r.graph, &vocab), &vocab, radius, nbits)
            .map_err(|e| CliError::config(e.to_string()))?;
        rows.push((id, fp));
    }
    let path = args.output.clone().unwrap_or_else(|| global.out_dir.join("fingerprints.csv"));
    let mut csv = Vec::new();
    write_fingerprint_csv(&mut csv, &rows).map_err(|e| CliError::other(e.to_string()))?;
    write_output(&path, csv)?;
    println!("wrote {} fingerprints ({nbits} bits, radius {radius}) to {}", rows.len(), path.display());
    Ok(())
}

pub fn gradcheck(global: &Global, args: &GradcheckArgs) -> Result<(), CliError> {
    let seed = global.seed.unwrap_or(0);
    let opts = GradCheckOptions {
        graphs: args.graphs,
        max_nodes: args.max_nodes,
        hops: args.hops,
        hidden: args.hidden,
        neighbor_weights: args.neighbor_weights,
        ..GradCheckOptions::default()
    };
    let report = gradient_check(seed, &opts).map_err(|e| CliError::new(ExitKind::Numeric, e.to_string()))?;
    let pass = report.max_relative_error <= MAX_RELATIVE_ERROR;
    println!(
        "max relative error {:.3e} over {} parameters in {} graphs (worst: {}): {}",
        report.max_relative_error,
        report.parameters,
        args.graphs,
        report.worst_parameter,
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::new(
            ExitKind::Numeric,
            format!("relative error exceeds {MAX_RELATIVE_ERROR:e}"),
        ))
    }
}

pub fn synth(global: &Global, args: &SynthArgs) -> Result<(), CliError> {
    let text = read_input(&args.spec, ExitKind::Config)?;
    let spec = SyntheticSpec::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", args.spec.display())))?;
    if spec.relations > BOND_TYPES {
        return Err(CliError::config(format!(
            "{}: MOL files hold at most {BOND_TYPES} bond types, spec asks for {}",
            args.spec.display(),
            spec.relations
        )));
    }
    let seed = match global.seed {
        Some(s) => s,
        None => resolve_config(global, None)?.seed,
    };
    let name = match &args.name {
        Some(n) => n.clone(),
        None => args
            .spec
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::config("cannot derive a task name from the spec path; pass --name"))?,
    };
    let examples = generate_synthetic(&spec, seed).map_err(|e| CliError::config(e.to_string()))?;
    let mut sdf = String::new();
    let mut rows = Vec::with_capacity(examples.len());
    for (i, e) in examples.iter().enumerate() {
        sdf.push_str(&write_molfile(&e.graph, &i.to_string()));
        sdf.push_str("$$$$\n");
        rows.push(LabelRow {
            id: i.to_string(),
            task: name.clone(),
            label: e.label,
        });
    }
    let dir = global.out_dir.join(&name);
    write_output(&dir.join("molecules.sdf"), sdf)?;
    let labels = write_labels_csv(&rows).map_err(|e| CliError::other(e.to_string()))?;
    write_output(&dir.join("labels.csv"), labels)?;
    println!(
        "wrote {} molecules ({} active) to {}",
        examples.len(),
        rows.iter().filter(|r| r.label == 1).count(),
        dir.display()
    );
    Ok(())
}
