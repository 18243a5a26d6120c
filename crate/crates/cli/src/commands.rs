use std::collections::BTreeSet;
use std::path::Path;

use iotrisk::dataset::{
    class_distribution, load_devices, read_corpus, save_corpus, synthesize_corpus, DeviceRecord, Feature,
    Features, SynthesisSpec, CORPUS_HEADER,
};
use iotrisk::encoding::{correlation_matrix, Encoders, UnseenPolicy};
use iotrisk::eval::{cv_csv, cv_table, GridSpec, SelectionMetric};
use iotrisk::nvd::{
    candidate_records, filter_iot, published_since, read_feed, RuleSet, CANDIDATE_PROVENANCE_COLUMNS,
};
use iotrisk::pipeline::{
    ablate_corpus, cross_validate_corpus, evaluate_holdout, tune_corpus, TrainedModel,
};

use crate::args::*;
use crate::exit::{Failure, Stage, DATA, EVALUATION, TRAINING};
use crate::settings::{Settings, DEFAULT_TEST_FRACTION};

/// Global options shared by every command.
pub struct Context {
    pub settings: Settings,
    pub seed: u64,
    /// `--seed` as given, before falling back to the settings file or the default.
    pub seed_flag: Option<u64>,
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Prints `text` and, when asked, writes the report to `out`.
fn emit(text: &str, csv: &str, out: Option<&Path>) -> Result<(), Failure> {
    print!("{text}");
    if let Some(path) = out {
        let body = if is_csv(path) { csv } else { text };
        write_file(path, body)?;
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::new(DATA, format!("{}: {e}", path.display())))
}

/// Reads a corpus, or builds the bundled synthetic one when no path is given.
/// Enriched candidate files (corpus columns followed by provenance columns) are accepted.
fn corpus(ctx: &Context, flag: &CorpusArgs) -> Result<Vec<DeviceRecord>, Failure> {
    match ctx.settings.corpus(flag.corpus.clone()) {
        None => synthesize_corpus(&SynthesisSpec::bundled()).at(DATA),
        Some(path) => read_any_corpus(&path),
    }
}

fn read_any_corpus(path: &Path) -> Result<Vec<DeviceRecord>, Failure> {
    let text = std::fs::read(path).map_err(|e| Failure::new(DATA, format!("{}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(&text[..]);
    let header: Vec<String> = rdr.headers().at(DATA)?.iter().map(str::to_string).collect();
    let candidate: Vec<&str> = CORPUS_HEADER.iter().chain(CANDIDATE_PROVENANCE_COLUMNS.iter()).copied().collect();
    let located = |e: iotrisk::Error| Failure::new(DATA, format!("{}: {e}", path.display()));
    if header != candidate {
        return read_corpus(&text[..]).map_err(located);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CORPUS_HEADER).at(DATA)?;
    for row in rdr.records() {
        let row = row.at(DATA)?;
        w.write_record(row.iter().take(CORPUS_HEADER.len())).at(DATA)?;
    }
    let trimmed = w.into_inner().map_err(|e| Failure::new(DATA, e.to_string()))?;
    read_corpus(&trimmed[..]).map_err(located)
}

pub fn ingest(a: &IngestArgs) -> Result<(), Failure> {
    let rules = RuleSet::load(&a.rules).at(DATA)?;
    let parts = (!a.part.is_empty()).then_some(a.part.as_slice());
    let mut entries = Vec::new();
    let mut report = String::new();
    for feed in &a.feeds {
        let parsed = read_feed(feed).map_err(|e| Failure::new(DATA, format!("{}: {e}", feed.display())))?;
        report.push_str(&format!(
            "{}: {} items, {} with CVSS v3, {} without, {} rejected, {} bad CPEs\n",
            feed.display(),
            parsed.item_count,
            parsed.entries.len(),
            parsed.skipped,
            parsed.errors.len(),
            parsed.cpe_warnings.len()
        ));
        for e in parsed.errors.iter().chain(&parsed.cpe_warnings) {
            report.push_str(&format!(
                "  item {} ({}): {}\n",
                e.index,
                e.cve_id.as_deref().unwrap_or("?"),
                e.message
            ));
        }
        entries.extend(parsed.entries);
    }
    let total = entries.len();
    let recent = published_since(entries, a.since);
    let matched = filter_iot(&recent, &rules, parts).at(DATA)?;
    let candidates = candidate_records(&matched, parts).at(DATA)?;
    report.push_str(&format!(
        "{} entries, {} since {}, {} matched IoT rules, {} device candidates -> {}\n",
        total,
        recent.len(),
        a.since,
        matched.len(),
        candidates.len(),
        a.out.display()
    ));
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &candidates {
        w.serialize(c).at(DATA)?;
    }
    if candidates.is_empty() {
        let header: Vec<&str> = CORPUS_HEADER.iter().chain(CANDIDATE_PROVENANCE_COLUMNS.iter()).copied().collect();
        w.write_record(header).at(DATA)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(DATA, e.to_string()))?;
    write_file(&a.out, &String::from_utf8_lossy(&bytes))?;
    print!("{report}");
    Ok(())
}

pub fn build(ctx: &Context, a: &BuildArgs) -> Result<(), Failure> {
    let records = if a.synthesize {
        let mut spec = SynthesisSpec::bundled();
        if let Some(s) = a.signal {
            spec.signal_strength = s;
        }
        spec.seed = ctx.settings.pick(ctx.seed_flag, "seed", spec.seed)?;
        synthesize_corpus(&spec).at(DATA)?
    } else {
        read_any_corpus(a.corpus.as_deref().expect("clap requires a source"))?
    };
    let summary = class_distribution(&records).at(DATA)?;
    if let Some(out) = &a.out {
        save_corpus(out, &records).at(DATA)?;
    }
    println!("{summary}");
    Ok(())
}

pub fn train(ctx: &Context, a: &TrainArgs) -> Result<(), Failure> {
    let records = corpus(ctx, &a.corpus)?;
    let spec = ctx.settings.model_spec(&a.model)?;
    let mode = ctx.settings.mode(a.mode)?;
    let config = ctx.settings.pipeline(mode, &a.features, ctx.seed)?;
    let trained = TrainedModel::train(&records, &config, &spec).at(TRAINING)?;
    trained.save(&a.out).at(DATA)?;
    println!(
        "trained {} on {} rows ({} mode, seed {}); encoder fingerprint {}",
        spec.family,
        records.len(),
        mode,
        ctx.seed,
        trained.pipeline.fingerprint()
    );
    println!("model: {}", a.out.display());
    println!("encoders: {}", iotrisk::pipeline::sidecar_path(&a.out).display());
    Ok(())
}

fn check_folds(k: usize, repeats: usize) -> Result<(), Failure> {
    if k < 2 {
        return Err(Failure::usage("--k must be at least 2"));
    }
    if repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    Ok(())
}

pub fn cv(ctx: &Context, a: &CvArgs) -> Result<(), Failure> {
    let records = corpus(ctx, &a.corpus)?;
    let spec = ctx.settings.model_spec(&a.model)?;
    let (k, repeats) = ctx.settings.folds(&a.folds)?;
    check_folds(k, repeats)?;
    let mut runs = Vec::new();
    for mode in ctx.settings.modes(&a.mode)? {
        let config = ctx.settings.pipeline(mode, &a.features, ctx.seed)?;
        let result = cross_validate_corpus(&records, &config, &spec, k, repeats).at(EVALUATION)?;
        runs.push((mode.name().to_string(), result));
    }
    let text = format!(
        "{} rows, model {}, {k} folds x {repeats} repeats, seed {}\n{}",
        records.len(),
        spec.family,
        ctx.seed,
        cv_table(&runs)
    );
    emit(&text, &cv_csv(&runs), a.out.out.as_deref())
}

fn grid(ctx: &Context, flag: Option<&str>) -> Result<GridSpec, Failure> {
    let raw = flag
        .or(ctx.settings.get("grid"))
        .ok_or_else(|| Failure::usage("tune needs --grid (a file or `key=v1,v2;...`)"))?;
    let text = if Path::new(raw).is_file() {
        std::fs::read_to_string(raw).map_err(|e| Failure::usage(format!("{raw}: {e}")))?
    } else {
        raw.to_string()
    };
    GridSpec::parse(&text).map_err(|e| Failure::usage(e.to_string()))
}

pub fn tune(ctx: &Context, a: &TuneArgs) -> Result<(), Failure> {
    let grid = grid(ctx, a.grid.as_deref())?;
    let records = corpus(ctx, &a.corpus)?;
    let spec = ctx.settings.model_spec(&a.model)?;
    for config in grid.configurations() {
        let mut probe = spec.clone();
        for (key, value) in &config {
            probe.set(key, value).map_err(|e| Failure::usage(e.to_string()))?;
        }
    }
    let (k, repeats) = ctx.settings.folds(&a.folds)?;
    check_folds(k, repeats)?;
    let metric = ctx.settings.pick(a.metric, "metric", SelectionMetric::Accuracy)?;
    let config = ctx.settings.pipeline(ctx.settings.mode(a.mode)?, &a.features, ctx.seed)?;
    let result = tune_corpus(&records, &config, &spec, &grid, k, repeats, metric).at(EVALUATION)?;
    emit(&result.to_string(), &result.to_csv(), a.out.out.as_deref())
}

pub fn evaluate(ctx: &Context, a: &EvaluateArgs) -> Result<(), Failure> {
    let records = corpus(ctx, &a.corpus)?;
    let spec = ctx.settings.model_spec(&a.model)?;
    let fraction = ctx.settings.pick(a.test_fraction, "test_fraction", DEFAULT_TEST_FRACTION)?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Failure::usage("--test-fraction must lie strictly between 0 and 1"));
    }
    let mode = ctx.settings.mode(a.mode)?;
    let config = ctx.settings.pipeline(mode, &a.features, ctx.seed)?;
    let report = evaluate_holdout(&records, &config, &spec, fraction).at(EVALUATION)?;
    let mut text = format!(
        "model {}, {} mode, {} train / {} test rows, seed {}\n{}",
        spec.family, mode, report.train_rows, report.test_rows, ctx.seed, report.metrics
    );
    for w in &report.warnings {
        text.push_str(&format!(
            "warning: test row {}: unseen {} value {:?}\n",
            w.row,
            w.feature.name(),
            w.value
        ));
    }
    emit(&text, &report.metrics.to_csv(), a.out.out.as_deref())
}

pub fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let trained = TrainedModel::load(&a.model_file).at(DATA)?;
    let devices = load_devices(&a.devices)
        .map_err(|e| Failure::new(DATA, format!("{}: {e}", a.devices.display())))?;
    let report = trained.predict(&devices).at(DATA)?;
    emit(&report.to_string(), &report.to_csv(), a.out.out.as_deref())
}

pub fn ablate(ctx: &Context, a: &AblateArgs) -> Result<(), Failure> {
    let records = corpus(ctx, &a.corpus)?;
    let spec = ctx.settings.model_spec(&a.model)?;
    let (k, repeats) = ctx.settings.folds(&a.folds)?;
    check_folds(k, repeats)?;
    let metric = ctx.settings.pick(a.metric, "metric", SelectionMetric::Accuracy)?;
    let config = ctx.settings.pipeline(ctx.settings.mode(a.mode)?, &a.features, ctx.seed)?;
    let result = ablate_corpus(&records, &config, &spec, k, repeats, metric).at(EVALUATION)?;
    emit(&result.to_string(), &result.to_csv(), a.out.out.as_deref())
}

pub fn report(ctx: &Context, a: &ReportArgs) -> Result<(), Failure> {
    let records = corpus(ctx, &a.corpus)?;
    let summary = class_distribution(&records).at(DATA)?;
    let mut text = format!("{summary}\n\n{:<26}{:>8}\n", "Feature", "Distinct");
    for f in Feature::ALL {
        let distinct = if f.is_categorical() {
            records.iter().map(|r| r.categorical(f)).collect::<BTreeSet<_>>().len()
        } else {
            records.iter().map(|r| r.price_usd().to_bits()).collect::<BTreeSet<_>>().len()
        };
        text.push_str(&format!("{:<26}{:>8}\n", f.name(), distinct));
    }
    let (em, _) = Encoders::fit(&records, UnseenPolicy::Default)
        .and_then(|e| e.transform(&records))
        .at(DATA)?;
    let corr = correlation_matrix(&em, true).at(DATA)?;
    let pairs = corr.strong_pairs(a.threshold);
    text.push_str(&format!("\nPearson |r| >= {}:\n", a.threshold));
    if pairs.is_empty() {
        text.push_str("  none\n");
    }
    for (x, y, r) in pairs {
        text.push_str(&format!("  {x:<26} {y:<26} {r:>7.3}\n"));
    }
    print!("{text}");
    if let Some(out) = &a.out {
        let mut buf = Vec::new();
        corr.write_csv(&mut buf).at(DATA)?;
        write_file(out, &String::from_utf8_lossy(&buf))?;
    }
    Ok(())
}
