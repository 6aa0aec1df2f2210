use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use bioforge::curation::{self, CurationReport, SubtaskPlan};
use bioforge::eval::{self, GoldInstance, PredictionRecord};
use bioforge::forge::{self, InstructionInstance, TemplateBank};
use bioforge::ingest::{self, IngestConfig, SourceFormat};
use bioforge::jsonl::{self, Registry};
use bioforge::stage;
use bioforge::{Corpus, EvalReport, TaskType, UnifiedDocument};

use crate::runlog::{require, CliResult, Failure, Run};
use crate::{Cli, Command};

const SPLITS: [&str; 3] = ["train", "dev", "test"];
const CURATED_REGISTRY: &str = "curated/registry.jsonl";

pub fn predictions_path(cli: &Cli) -> PathBuf {
    cli.predictions
        .clone()
        .unwrap_or_else(|| cli.out.join("predictions.jsonl"))
}

pub fn execute(command: Command, cli: &Cli) -> CliResult<()> {
    let mut run = Run::new(command.name(), cli);
    match command {
        Command::Ingest => ingest(&mut run)?,
        Command::Curate => curate(&mut run)?,
        Command::Forge => forge(&mut run)?,
        Command::Plan => plan(&mut run)?,
        Command::Eval => evaluate(&mut run)?,
        Command::Stats => stats(&mut run)?,
    }
    run.finish()
}

fn load_registry(run: &mut Run, path: &Path) -> CliResult<Registry> {
    let text = run.read_input(path)?;
    Ok(Registry::from_jsonl_str(&text)?)
}

fn input_registry(run: &mut Run) -> CliResult<Registry> {
    let path = run
        .cli
        .registry
        .clone()
        .ok_or_else(|| Failure::Config("--registry is required".into()))?;
    load_registry(run, &path)
}

fn split_rel(stage_dir: &str, dataset_id: &str, split: &str) -> String {
    format!("{stage_dir}/{dataset_id}/{split}.jsonl")
}

/// Documents of one split under `<out>/<stage_dir>`, if that split exists.
fn read_split(
    run: &mut Run,
    stage_dir: &str,
    dataset_id: &str,
    split: &str,
) -> CliResult<Option<Vec<UnifiedDocument>>> {
    let path = run.out(&split_rel(stage_dir, dataset_id, split));
    if !path.is_file() {
        return Ok(None);
    }
    let text = run.read_input(&path)?;
    Ok(Some(jsonl::from_jsonl_str(&text)?))
}

/// The source file for `split` in `dir`: `<split>.<ext>` with a known format.
fn find_source(dir: &Path, split: &str) -> Option<(PathBuf, SourceFormat)> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    entries.into_iter().find_map(|p| {
        let name = p.file_name()?.to_str()?;
        let stem = name.split('.').next()?;
        if stem != split {
            return None;
        }
        SourceFormat::from_path(&p).map(|f| (p.clone(), f))
    })
}

fn ingest(run: &mut Run) -> CliResult<()> {
    let registry = input_registry(run)?;
    let root = run
        .cli
        .corpus_root
        .clone()
        .ok_or_else(|| Failure::Config("--corpus-root is required".into()))?;
    require(&root)?;
    let mut reports = Vec::new();
    let mut loaded = 0usize;
    let mut rejected = 0usize;
    for desc in registry.iter() {
        for split in SPLITS {
            let Some((path, format)) = find_source(&root.join(&desc.id), split) else {
                continue;
            };
            run.read_input(&path)?;
            let cfg = IngestConfig::new(&desc.id, format, split);
            let got = ingest::ingest_dataset(&path, &cfg, &registry)?;
            loaded += got.report.loaded;
            rejected += got.report.violations;
            run.write_output(
                &split_rel("corpus", &desc.id, split),
                &jsonl::to_jsonl_string(&got.docs),
            )?;
            reports.push(got.report);
        }
    }
    if reports.is_empty() {
        return Err(Failure::MissingInput(root));
    }
    let body = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    run.write_output("corpus/ingest_report.json", &body)?;
    run.count("files", reports.len());
    run.count("documents_loaded", loaded);
    run.count("documents_rejected", rejected);
    println!(
        "ingested {loaded} documents from {} files ({rejected} rejected)",
        reports.len()
    );
    Ok(())
}

fn curate(run: &mut Run) -> CliResult<()> {
    let registry = input_registry(run)?;
    let mut report = CurationReport::default();
    let mut curated = Registry::new();
    let mut virtual_count = 0usize;
    for desc in registry.iter() {
        let Some(train) = read_split(run, "corpus", &desc.id, "train")? else {
            continue;
        };
        let test = read_split(run, "corpus", &desc.id, "test")?.unwrap_or_default();
        let (kept, rep) = curation::dedup_and_filter_overlap(&train, &test);
        report.merge(&rep);

        // Undeclared vocabularies are fixed here, from the curated train split,
        // so train and test prompts list labels in the same order.
        let full = forge::with_observed_labels(desc, &kept);
        let mut outputs = vec![(full.clone(), kept, test)];
        if run.cli.decompose && matches!(desc.task, TaskType::Ner | TaskType::Re) && full.label_vocab.len() > 1 {
            let plan = SubtaskPlan::per_label(&full);
            let trains = curation::decompose_subtasks(&outputs[0].1, &full, &plan)?;
            let tests = curation::decompose_subtasks(&outputs[0].2, &full, &plan)?;
            for (tr, te) in trains.into_iter().zip(tests).skip(1) {
                virtual_count += 1;
                outputs.push((tr.descriptor, tr.docs, te.docs));
            }
        }
        for (mut d, train_docs, test_docs) in outputs {
            d.split_counts.insert("train".into(), train_docs.len() as u64);
            d.split_counts.insert("test".into(), test_docs.len() as u64);
            d.split_counts.remove("dev");
            run.write_output(
                &split_rel("curated", &d.id, "train"),
                &jsonl::to_jsonl_string(&train_docs),
            )?;
            if !test_docs.is_empty() {
                run.write_output(
                    &split_rel("curated", &d.id, "test"),
                    &jsonl::to_jsonl_string(&test_docs),
                )?;
            }
            curated.insert(d)?;
        }
    }
    if curated.is_empty() {
        return Err(Failure::MissingInput(run.out("corpus")));
    }
    run.write_output(CURATED_REGISTRY, &curated.to_jsonl_string())?;
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    run.write_output("curated/report.json", &body)?;
    let text = report.to_text();
    run.write_output("curated/report.txt", &text)?;
    run.count("input", report.input_count);
    run.count("duplicates_removed", report.duplicates_removed);
    run.count("overlap_removed", report.overlap_removed);
    run.count("output", report.output_count);
    run.count("virtual_datasets", virtual_count);
    print!("{text}");
    Ok(())
}

fn curated_registry(run: &mut Run) -> CliResult<Registry> {
    let path = run.out(CURATED_REGISTRY);
    load_registry(run, &path)
}

fn template_bank(run: &mut Run) -> CliResult<TemplateBank> {
    match run.cli.templates.clone() {
        Some(path) => {
            let text = run.read_input(&path)?;
            Ok(TemplateBank::new(jsonl::from_jsonl_str(&text)?)?)
        }
        None => Ok(forge::default_template_bank()),
    }
}

fn curated_corpora(run: &mut Run, registry: &Registry, split: &str) -> CliResult<Vec<Corpus>> {
    let mut out = Vec::new();
    for desc in registry.iter() {
        if let Some(docs) = read_split(run, "curated", &desc.id, split)? {
            out.push(Corpus::new(forge::with_observed_labels(desc, &docs), docs));
        }
    }
    Ok(out)
}

fn forge(run: &mut Run) -> CliResult<()> {
    let registry = curated_registry(run)?;
    let bank = template_bank(run)?;
    for split in ["train", "test"] {
        let corpora = curated_corpora(run, &registry, split)?;
        let forged = forge::build_corpus(&corpora, &bank, run.cli.seed)?;
        run.write_output(&format!("forge/{split}.jsonl"), &jsonl::to_jsonl_string(&forged))?;
        run.count(split, forged.len());
        println!("forged {} {split} instances", forged.len());
    }
    Ok(())
}

fn plan(run: &mut Run) -> CliResult<()> {
    let registry = curated_registry(run)?;
    let forged_path = run.out("forge/train.jsonl");
    let text = run.read_input(&forged_path)?;
    let forged: Vec<InstructionInstance> = jsonl::from_jsonl_str(&text)?;
    let plan = stage::build_stage_plan(&forged, &registry, run.cli.seed)?;
    let stages: Vec<u8> = run.cli.stage.map_or(vec![1, 2], |s| vec![s]);
    let dir = run.out("plan");
    for s in stages {
        let art = stage::emit_training_manifest(&plan, s, &forged, &dir)?;
        run.record_output(&art.data_path)?;
        run.record_output(&art.manifest_path)?;
    }
    run.count("stage1_count", plan.stage1_count);
    run.count("stage2_count", plan.stage2_count);
    println!(
        "stage 1: {} instances; stage 2: {} instances",
        plan.stage1_count, plan.stage2_count
    );
    Ok(())
}

fn load_predictions(run: &mut Run) -> CliResult<HashMap<String, String>> {
    let path = predictions_path(run.cli);
    let text = run.read_input(&path)?;
    let records: Vec<PredictionRecord> = jsonl::from_jsonl_str(&text)?;
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map.insert(r.instance_id.clone(), r.raw_text).is_some() {
            return Err(bioforge::Error::DuplicateInstance(r.instance_id).into());
        }
    }
    Ok(map)
}

fn evaluate(run: &mut Run) -> CliResult<()> {
    let predictions = load_predictions(run)?;
    let registry = curated_registry(run)?;
    let mut reports: Vec<EvalReport> = Vec::new();
    let mut sampled: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut matched = 0usize;
    for desc in registry.iter().filter(|d| eval::is_scored(d.task)) {
        let Some(docs) = read_split(run, "curated", &desc.id, "test")? else {
            continue;
        };
        let corpus = Corpus::new(forge::with_observed_labels(desc, &docs), docs);
        let mut gold = GoldInstance::from_corpus(&corpus);
        if let Some(n) = run.cli.sample_n {
            gold = eval::sample_subset(&gold, n, run.cli.seed);
            sampled.insert(desc.id.clone(), gold.iter().map(|g| g.instance_id.clone()).collect());
        }
        matched += gold.iter().filter(|g| predictions.contains_key(&g.instance_id)).count();
        reports.push(eval::evaluate_dataset(&gold, &predictions, &corpus.descriptor)?);
    }
    let body = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    run.write_output("eval/report.json", &body)?;
    let text: String = reports.iter().map(|r| r.to_text()).collect();
    run.write_output("eval/report.txt", &text)?;
    if run.cli.sample_n.is_some() {
        let body = serde_json::to_string_pretty(&sampled).expect("ids serialize") + "\n";
        run.write_output("eval/sampled_ids.json", &body)?;
    }
    run.count("datasets", reports.len());
    run.count("predictions", predictions.len());
    run.count("predictions_matched", matched);
    print!("{text}");
    Ok(())
}

fn stats(run: &mut Run) -> CliResult<()> {
    let registry = input_registry(run)?;
    let report_path = run.out("curated/report.json");
    let mut counts = BTreeMap::new();
    if report_path.is_file() {
        let text = run.read_input(&report_path)?;
        let report: CurationReport =
            serde_json::from_str(&text).map_err(|source| bioforge::Error::Json { line: 1, source })?;
        counts = report
            .per_dataset
            .iter()
            .map(|(k, v)| (k.clone(), v.output_count))
            .collect();
    }
    let table = curation::corpus_stats(&registry, &counts);
    let body = serde_json::to_string_pretty(&table).expect("table serializes") + "\n";
    run.write_output("stats/stats.json", &body)?;
    let text = table.to_text();
    run.write_output("stats/stats.txt", &text)?;
    run.count("total", table.total);
    run.count("stage1_total", table.stage1_total);
    print!("{text}");
    Ok(())
}
