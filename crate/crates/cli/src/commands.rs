use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use stratincon_core::events::PriorityEvent;
use stratincon_core::inconsistency::{analyze_match, DetectorConfig, InconsistencyRecord};
use stratincon_core::matchgen::{
    generate_match, inject_deviation, plan_deviations, BehaviorPolicy, GenConfig,
};
use stratincon_core::predictor::{
    build_windows, evaluate, train_with_validation, EvalMetrics, PersistenceBaseline,
    PredictorModel, TrainConfig, WindowSample,
};
use stratincon_core::profiles::team_profile;
use stratincon_core::store::{model_version, AnalysisBundle, StoreError, Workspace};
use stratincon_core::telemetry::{
    parse_match_log, serialize_match_log, validate_match_log, MatchLog, NormalizationStats, Team,
};

use crate::error::CliError;
use crate::{
    AnalyzeArgs, EvalArgs, ExportArgs, GenArgs, IngestArgs, PolicyKind, ServeArgs, TrainArgs,
    ValidateArgs,
};

/// `(label, bytes)` for each input; stdin when the list is empty or `-`.
fn read_inputs(files: &[PathBuf]) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    if files.is_empty() || files.iter().all(|f| f.as_os_str() == "-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        return Ok(vec![("<stdin>".to_string(), buf)]);
    }
    files
        .iter()
        .map(|f| {
            fs::read(f)
                .map(|b| (f.display().to_string(), b))
                .map_err(|e| CliError::domain("io_error", format!("{}: {e}", f.display())))
        })
        .collect()
}

fn selected_matches(ws: &Workspace, ids: &[String]) -> Result<Vec<MatchLog>, CliError> {
    let logs = if ids.is_empty() {
        ws.load_matches()?
    } else {
        ids.iter()
            .map(|id| ws.get_match(id))
            .collect::<Result<Vec<_>, _>>()?
    };
    if logs.is_empty() {
        return Err(CliError::domain(
            "no_matches",
            "the workspace holds no matches; run ingest first",
        ));
    }
    Ok(logs)
}

fn windows_of(logs: &[MatchLog], stats: &NormalizationStats, gap_max: f64) -> Vec<WindowSample> {
    logs.iter()
        .flat_map(|l| build_windows(l, stats, gap_max))
        .collect()
}

fn metrics_line(label: &str, m: &EvalMetrics) -> String {
    format!(
        "{label} samples={} mse={:.6} mae={:.6} accuracy={:.4}",
        m.samples, m.mse, m.mae, m.accuracy
    )
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    if a.out.is_none() && a.count > 1 {
        return Err(CliError::usage("--count above 1 needs --out"));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
    }
    for seed in a.seed..a.seed + a.count {
        let policy = match a.policy {
            PolicyKind::Structured => GenConfig::new(seed).behavior_policy,
            PolicyKind::Deterministic => BehaviorPolicy::default_deterministic(),
        };
        let cfg = GenConfig::new(seed)
            .with_frames(a.frames)
            .with_policy(policy);
        let (mut log, mut truth) = generate_match(&cfg)?;
        if a.deviations > 0 {
            let specs = plan_deviations(&log, cfg.phase_bounds, a.deviations, seed);
            let (injected, labels) = inject_deviation(&log, &specs)?;
            log = injected;
            truth.deviations = labels;
        }
        let text = serialize_match_log(&log);
        match &a.out {
            Some(dir) => {
                let id = log.match_id();
                fs::write(dir.join(format!("{id}.log")), &text)?;
                fs::write(dir.join(format!("{id}.truth.jsonl")), truth.to_sidecar())?;
                println!(
                    "generated {id} frames={} deviation_cells={}",
                    log.frames.len(),
                    truth.deviations.len()
                );
            }
            None => {
                io::stdout().lock().write_all(text.as_bytes())?;
                if let Some(path) = &a.truth {
                    fs::write(path, truth.to_sidecar())?;
                }
            }
        }
    }
    Ok(())
}

pub fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let mut findings = 0;
    for (label, bytes) in read_inputs(&a.files)? {
        let log = parse_match_log(&bytes)
            .map_err(|e| CliError::domain(e.code(), format!("{label}: {e}")))?;
        let report = validate_match_log(&log);
        for f in &report.findings {
            println!("{} {f}", log.match_id());
        }
        if report.is_clean() {
            println!("ok {} frames={}", log.match_id(), log.frames.len());
        }
        findings += report.findings.len();
    }
    if findings > 0 {
        return Err(CliError::domain(
            "validation_failed",
            format!("{findings} finding(s)"),
        ));
    }
    Ok(())
}

pub fn ingest(root: &Path, a: IngestArgs) -> Result<(), CliError> {
    let ws = Workspace::open(root)?;
    for (label, bytes) in read_inputs(&a.files)? {
        let log = parse_match_log(&bytes)
            .map_err(|e| CliError::domain(e.code(), format!("{label}: {e}")))?;
        let report = validate_match_log(&log);
        if !report.is_clean() && !a.allow_findings {
            for f in &report.findings {
                println!("{} {f}", log.match_id());
            }
            return Err(CliError::domain(
                "validation_failed",
                format!(
                    "{label}: {} finding(s); nothing stored",
                    report.findings.len()
                ),
            ));
        }
        let verb = if ws.put_match(&log)? {
            "ingested"
        } else {
            "unchanged"
        };
        println!("{verb} {}", log.match_id());
    }
    Ok(())
}

pub fn train(root: &Path, a: TrainArgs) -> Result<(), CliError> {
    let ws = Workspace::open(root)?;
    let logs = selected_matches(&ws, &a.matches)?;
    if a.validation_matches >= logs.len() {
        return Err(CliError::usage(format!(
            "--validation-matches {} leaves no training match out of {}",
            a.validation_matches,
            logs.len()
        )));
    }
    let (train_logs, val_logs) = logs.split_at(logs.len() - a.validation_matches);
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: a.epochs.unwrap_or(defaults.epochs),
        batch_size: a.batch.unwrap_or(defaults.batch_size),
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        seed: a.seed,
        hidden_size: a.hidden.unwrap_or(defaults.hidden_size),
        gap_max: defaults.gap_max,
        coord_residual: a.residual,
        patience: a.patience,
        weight_decay: a.weight_decay.unwrap_or(defaults.weight_decay),
    };
    let stats = NormalizationStats::from_logs(train_logs)
        .ok_or_else(|| CliError::domain("empty_dataset", "training matches have no frames"))?;
    let train_w = windows_of(train_logs, &stats, config.gap_max);
    let val_w = windows_of(val_logs, &stats, config.gap_max);
    let init = PredictorModel::new(config).with_stats(stats);
    let (model, report) = train_with_validation(&init, &train_w, &val_w, &config)?;
    ws.put_model(&a.model, &model)?;
    println!(
        "trained model={} version={} epochs={} best_epoch={} windows={} final_loss={:.6}",
        a.model,
        model_version(&model),
        report.loss_curve.len(),
        report.best_epoch,
        train_w.len(),
        report.loss_curve.last().copied().unwrap_or(f64::NAN),
    );
    println!("{}", metrics_line("train", &report.train_metrics));
    if let Some(m) = &report.validation_metrics {
        println!("{}", metrics_line("validation", m));
    }
    Ok(())
}

pub fn eval(root: &Path, a: EvalArgs) -> Result<(), CliError> {
    let ws = Workspace::open_existing(root)?;
    let model = ws.get_model(&a.model)?;
    let stats = model
        .stats
        .ok_or_else(|| CliError::domain("model_mismatch", "model has no normalization stats"))?;
    let logs = selected_matches(&ws, &a.matches)?;
    let windows = windows_of(&logs, &stats, model.config.gap_max);
    let m = evaluate(&model, &windows).map_err(|e| CliError::domain("empty_dataset", e))?;
    let p = evaluate(&PersistenceBaseline { stats: Some(stats) }, &windows)
        .map_err(|e| CliError::domain("empty_dataset", e))?;
    println!("{}", metrics_line(&format!("model={}", a.model), &m));
    println!("{}", metrics_line("baseline=persistence", &p));
    Ok(())
}

pub fn analyze(root: &Path, a: AnalyzeArgs) -> Result<(), CliError> {
    let ws = Workspace::open_existing(root)?;
    let model = ws.get_model(&a.model)?;
    let version = model_version(&model);
    let config = DetectorConfig {
        tau: a.tau,
        coord_alerts: a.coord_alerts,
        coord_delta: a.coord_delta,
        ..DetectorConfig::default()
    };
    let corpus = ws.load_matches()?;
    let targets = selected_matches(&ws, &a.ids)?;
    for log in &targets {
        let analysis = analyze_match(&model, log, &config)?;
        let profiles = Team::BOTH
            .iter()
            .map(|&side| {
                team_profile(
                    &corpus,
                    log.team_name(side),
                    &log.header.event_name,
                    Some(log.match_id()),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bundle = AnalysisBundle::new(&version, analysis, profiles);
        let unchanged = match ws.get_bundle(log.match_id()) {
            Ok(old) => old.content_hash == bundle.content_hash,
            Err(StoreError::NotFound { .. } | StoreError::CorruptEntity { .. }) => false,
            Err(e) => return Err(e.into()),
        };
        if unchanged {
            println!("unchanged {}", log.match_id());
        } else {
            ws.put_bundle(&bundle)?;
            println!(
                "analyzed {} records={} events={} model={version}",
                log.match_id(),
                bundle.analysis.records.len(),
                bundle.analysis.events.len()
            );
        }
    }
    Ok(())
}

pub fn serve(root: &Path, a: ServeArgs) -> Result<(), CliError> {
    let ws = Workspace::open_existing(root)?;
    let state = stratincon_service::AppState::load(ws)?;
    let origin = a
        .ui_origin
        .map(|o| {
            o.parse()
                .map_err(|_| CliError::usage(format!("invalid --ui-origin {o:?}")))
        })
        .transpose()?;
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(stratincon_service::serve(state, &a.bind, origin, |addr| {
        println!("listening on http://{addr}");
        let _ = io::stdout().flush();
    }))?;
    Ok(())
}

fn clock(t: f64) -> String {
    let s = t.max(0.0).round() as u64;
    format!("{:02}:{:02}", s / 60, s % 60)
}

fn report_table(
    records: &[InconsistencyRecord],
    event: Option<&PriorityEvent>,
    bundle: &AnalysisBundle,
) -> String {
    let impacts = event.and_then(|e| bundle.analysis.impacts.get(&e.id));
    let mut out = String::new();
    if let Some(e) = event {
        out.push_str(&format!("event {} {} at {}\n", e.id, e.kind, clock(e.t)));
    }
    out.push_str(&format!(
        "{:<16} {:>4} {:<4} {:<7} {:>5} {:>5} {:<9} {:<15} {:>7} {:>7}\n",
        "record",
        "slot",
        "team",
        "role",
        "start",
        "end",
        "observed",
        "preferred",
        "coord",
        "impact"
    ));
    for r in records {
        let top = r
            .predicted_top3
            .first()
            .map(|b| format!("{}({:.2})", b.behavior, b.prob))
            .unwrap_or_default();
        let impact = impacts
            .and_then(|t| t.iter().find(|s| s.record_id == r.id))
            .map(|s| format!("{:.3}", s.normalized))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<16} {:>4} {:<4} {:<7} {:>5} {:>5} {:<9} {:<15} {:>7.3} {:>7}\n",
            r.id,
            r.slot,
            r.team.name(),
            r.role.name(),
            clock(r.t_start),
            clock(r.t_end),
            r.observed_behavior.name(),
            top,
            r.coord_discrepancy,
            impact
        ));
    }
    out.push_str(&format!(
        "{} record(s), model {}\n",
        records.len(),
        bundle.model_version
    ));
    out
}

pub fn export(root: &Path, a: ExportArgs) -> Result<(), CliError> {
    let ws = Workspace::open_existing(root)?;
    let bundle = ws.get_bundle(&a.id)?;
    let event = match &a.event {
        None => None,
        Some(eid) => Some(
            bundle
                .analysis
                .events
                .iter()
                .find(|e| &e.id == eid)
                .ok_or_else(|| {
                    CliError::domain(
                        "event_not_found",
                        format!("match {} has no event {eid:?}", a.id),
                    )
                })?,
        ),
    };
    let table = report_table(&bundle.analysis.records, event, &bundle);
    match &a.out {
        Some(path) => fs::write(path, table)?,
        None => io::stdout().lock().write_all(table.as_bytes())?,
    }
    Ok(())
}
