//! Observed-versus-preferred discrepancies, their economic impact on
//! priority events, and occlusion attributions over the four feature groups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{extract_priority_events, PriorityEvent};
use crate::predictor::{
    build_windows, PredictError, RankedBehavior, StrategyPredictor, WindowSample, DEFAULT_GAP_MAX,
    WINDOW_FRAMES,
};
use crate::telemetry::{
    diff_at, gold_diff_series, team_of_slot, BehaviorClass, GoldDiffPoint, MatchLog, Position,
    Role, Team, CHAMPIONS_PER_FRAME, FRAME_FEATURES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum top-1 probability for a behavior mismatch to count.
    pub tau: f64,
    /// Also emit records where behavior agrees but the predicted position is
    /// farther than `coord_delta` from the observed one.
    pub coord_alerts: bool,
    pub coord_delta: f64,
    pub gap_max: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            coord_alerts: false,
            coord_delta: 0.1,
            gap_max: DEFAULT_GAP_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Behavior,
    Coordinate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyRecord {
    /// `"r{slot}-{t_start}"`, unique within a match.
    pub id: String,
    pub kind: RecordKind,
    pub slot: usize,
    pub team: Team,
    pub role: Role,
    pub t_start: f64,
    pub t_end: f64,
    pub frame_start: usize,
    pub frame_end: usize,
    pub observed_behavior: BehaviorClass,
    /// Taken at the first frame of the span.
    pub predicted_top3: Vec<RankedBehavior>,
    pub predicted_coords: Position,
    pub observed_coords: Position,
    pub coord_discrepancy: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InconsistencyError {
    #[error("model has no normalization stats")]
    ModelMismatch,
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("event at t={event_t} does not follow record start t={record_t}")]
    EventBeforeRecord { record_t: f64, event_t: f64 },
    #[error("gold series does not cover t={0}")]
    SeriesOutOfRange(f64),
    #[error(transparent)]
    Predict(#[from] PredictError),
}

struct Flag {
    slot: usize,
    kind: RecordKind,
    observed: BehaviorClass,
    top1: BehaviorClass,
    frame: usize,
    t: f64,
    top3: Vec<RankedBehavior>,
    predicted: Position,
    observed_pos: Position,
}

/// Runs the predictor over every window of the log and merges consecutive
/// flagged frames with identical `(slot, observed, top-1)` into one record.
/// Records are ordered by start time, then slot.
pub fn detect_inconsistencies(
    predictor: &dyn StrategyPredictor,
    log: &MatchLog,
    config: &DetectorConfig,
) -> Result<Vec<InconsistencyRecord>, InconsistencyError> {
    if !(config.tau > 0.0 && config.tau <= 1.0) {
        return Err(InconsistencyError::InvalidThreshold(config.tau));
    }
    let stats = predictor.stats().ok_or(InconsistencyError::ModelMismatch)?;
    let windows = build_windows(log, stats, config.gap_max);
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let predictions = predictor.predict_batch(&windows)?;

    let mut per_slot: Vec<Vec<Flag>> = (0..CHAMPIONS_PER_FRAME).map(|_| Vec::new()).collect();
    for (w, pred) in windows.iter().zip(&predictions) {
        for (slot, flags) in per_slot.iter_mut().enumerate() {
            let champ = &pred.champions[slot];
            let observed = w.observed_behavior(slot);
            let top1 = champ.top1();
            let observed_pos = w.observed_coords(slot);
            let kind = if top1.behavior != observed && top1.prob >= config.tau {
                RecordKind::Behavior
            } else if config.coord_alerts
                && top1.behavior == observed
                && champ.coords.distance(&observed_pos) > config.coord_delta
            {
                RecordKind::Coordinate
            } else {
                continue;
            };
            flags.push(Flag {
                slot,
                kind,
                observed,
                top1: top1.behavior,
                frame: w.target_frame,
                t: w.t_target,
                top3: champ.top(3).to_vec(),
                predicted: champ.coords,
                observed_pos,
            });
        }
    }

    let mut records = Vec::new();
    for flags in per_slot {
        let mut iter = flags.into_iter().peekable();
        while let Some(first) = iter.next() {
            let mut last_frame = first.frame;
            let mut last_t = first.t;
            while let Some(next) = iter.peek() {
                let same = next.kind == first.kind
                    && next.observed == first.observed
                    && next.top1 == first.top1;
                if !same || next.frame != last_frame + 1 {
                    break;
                }
                last_frame = next.frame;
                last_t = next.t;
                iter.next();
            }
            records.push(InconsistencyRecord {
                id: format!("r{}-{}", first.slot, first.t),
                kind: first.kind,
                slot: first.slot,
                team: team_of_slot(first.slot),
                role: crate::telemetry::role_of_slot(first.slot),
                t_start: first.t,
                t_end: last_t,
                frame_start: first.frame,
                frame_end: last_frame,
                observed_behavior: first.observed,
                coord_discrepancy: first.predicted.distance(&first.observed_pos),
                predicted_top3: first.top3,
                predicted_coords: first.predicted,
                observed_coords: first.observed_pos,
            });
        }
    }
    records.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.slot.cmp(&b.slot)));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactScore {
    pub record_id: String,
    pub event_id: String,
    pub raw_delta: u64,
    pub normalized: f64,
}

/// `|D(event.t) - D(record.t_start)|`, with `D` the gold lead of the
/// record's team. `blue_series` is the blue-perspective series; lookups are
/// step-wise (last point at or before the time).
pub fn compute_impact(
    record: &InconsistencyRecord,
    event: &PriorityEvent,
    blue_series: &[GoldDiffPoint],
) -> Result<u64, InconsistencyError> {
    if event.t <= record.t_start {
        return Err(InconsistencyError::EventBeforeRecord {
            record_t: record.t_start,
            event_t: event.t,
        });
    }
    let sign = if record.team == Team::Blue { 1 } else { -1 };
    let at = |t: f64| {
        diff_at(blue_series, t)
            .map(|d| sign * d)
            .ok_or(InconsistencyError::SeriesOutOfRange(t))
    };
    Ok((at(event.t)? - at(record.t_start)?).unsigned_abs())
}

/// Impacts of every eligible record on one event, normalized by the largest
/// raw delta. Records at or after the event are left out.
pub fn impact_table(
    records: &[InconsistencyRecord],
    event: &PriorityEvent,
    blue_series: &[GoldDiffPoint],
) -> Vec<ImpactScore> {
    let raws: Vec<(&InconsistencyRecord, u64)> = records
        .iter()
        .filter_map(|r| compute_impact(r, event, blue_series).ok().map(|d| (r, d)))
        .collect();
    let max = raws.iter().map(|(_, d)| *d).max().unwrap_or(0);
    raws.into_iter()
        .map(|(r, d)| ImpactScore {
            record_id: r.id.clone(),
            event_id: event.id.clone(),
            raw_delta: d,
            normalized: if max == 0 { 0.0 } else { d as f64 / max as f64 },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Blood,
    Gold,
    Coordinates,
    Behavior,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Blood,
        FeatureGroup::Gold,
        FeatureGroup::Coordinates,
        FeatureGroup::Behavior,
    ];

    /// Feature indices within a 9-vector.
    pub fn features(self) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::Blood => 0..1,
            FeatureGroup::Gold => 1..2,
            FeatureGroup::Coordinates => 2..4,
            FeatureGroup::Behavior => 4..FRAME_FEATURES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionFrame {
    pub t: f64,
    /// Signed contributions in [`FeatureGroup::ALL`] order; `Σ|c|` is 1
    /// unless every contribution is 0.
    pub contributions: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSeries {
    pub slot: usize,
    pub t_target: f64,
    pub behavior: BehaviorClass,
    pub probability: f64,
    pub frames: Vec<AttributionFrame>,
}

impl AttributionSeries {
    /// Per-group sums over the window.
    pub fn totals(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for f in &self.frames {
            for (o, c) in out.iter_mut().zip(&f.contributions) {
                *o += c;
            }
        }
        out
    }
}

/// Occlusion attribution of the slot's top-1 behavior probability. For each
/// window frame and group, that frame's group values for all ten champions
/// are replaced by their window mean; the contribution is the probability
/// drop. Positive values support the prediction.
pub fn attribute_features(
    predictor: &dyn StrategyPredictor,
    sample: &WindowSample,
    slot: usize,
) -> Result<AttributionSeries, InconsistencyError> {
    if slot >= CHAMPIONS_PER_FRAME {
        return Err(PredictError::Shape {
            expected: vec![CHAMPIONS_PER_FRAME],
            got: vec![slot],
        }
        .into());
    }
    let full = predictor.predict(sample)?;
    let top = full.champions[slot].top1().clone();
    let k = top.behavior.index();

    let mut mean = [[0.0; FRAME_FEATURES]; CHAMPIONS_PER_FRAME];
    for frame in &sample.x {
        for (c, row) in frame.iter().enumerate() {
            for (f, v) in row.iter().enumerate() {
                mean[c][f] += v / WINDOW_FRAMES as f64;
            }
        }
    }

    let mut probes = Vec::with_capacity(WINDOW_FRAMES * 4);
    for frame in 0..WINDOW_FRAMES {
        for group in FeatureGroup::ALL {
            let mut probe = sample.clone();
            for (c, m) in mean.iter().enumerate() {
                for f in group.features() {
                    probe.x[frame][c][f] = m[f];
                }
            }
            probes.push(probe);
        }
    }
    let occluded = predictor.predict_batch(&probes)?;

    let frames = (0..WINDOW_FRAMES)
        .map(|frame| {
            let mut c: [f64; 4] = std::array::from_fn(|g| {
                top.prob - occluded[frame * 4 + g].champions[slot].behavior_probs[k]
            });
            let total: f64 = c.iter().map(|v| v.abs()).sum();
            if total > 0.0 {
                for v in &mut c {
                    *v /= total;
                }
            }
            AttributionFrame {
                t: sample.frame_times[frame],
                contributions: c,
            }
        })
        .collect();
    Ok(AttributionSeries {
        slot,
        t_target: sample.t_target,
        behavior: top.behavior,
        probability: top.prob,
        frames,
    })
}

/// Everything the review UI needs for one match under one predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchAnalysis {
    pub match_id: String,
    pub events: Vec<PriorityEvent>,
    pub records: Vec<InconsistencyRecord>,
    /// Keyed by event id.
    pub impacts: BTreeMap<String, Vec<ImpactScore>>,
    /// Keyed by record id; the window ending at the record's first frame.
    pub attributions: BTreeMap<String, AttributionSeries>,
}

pub fn analyze_match(
    predictor: &dyn StrategyPredictor,
    log: &MatchLog,
    config: &DetectorConfig,
) -> Result<MatchAnalysis, InconsistencyError> {
    let records = detect_inconsistencies(predictor, log, config)?;
    let events = extract_priority_events(log);
    let series = gold_diff_series(log, Team::Blue);
    let impacts = events
        .iter()
        .map(|e| (e.id.clone(), impact_table(&records, e, &series)))
        .collect();

    let stats = predictor.stats().ok_or(InconsistencyError::ModelMismatch)?;
    let windows = build_windows(log, stats, config.gap_max);
    let mut attributions = BTreeMap::new();
    for record in &records {
        if let Some(w) = windows
            .iter()
            .find(|w| w.target_frame == record.frame_start)
        {
            attributions.insert(
                record.id.clone(),
                attribute_features(predictor, w, record.slot)?,
            );
        }
    }
    Ok(MatchAnalysis {
        match_id: log.match_id().to_string(),
        events,
        records,
        impacts,
        attributions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::PriorityEventKind;
    use crate::fixtures::{
        case_study_match, case_study_model, CASE_PROBABILITY, CASE_SLOT, CASE_T_INCONSISTENT,
    };
    use crate::predictor::{PersistenceBaseline, PredictorModel, TrainConfig};
    use crate::telemetry::NormalizationStats;

    fn record(slot: usize, t: f64) -> InconsistencyRecord {
        InconsistencyRecord {
            id: format!("r{slot}-{t}"),
            kind: RecordKind::Behavior,
            slot,
            team: team_of_slot(slot),
            role: crate::telemetry::role_of_slot(slot),
            t_start: t,
            t_end: t,
            frame_start: 0,
            frame_end: 0,
            observed_behavior: BehaviorClass::Inaction,
            predicted_top3: vec![],
            predicted_coords: Position::default(),
            observed_coords: Position::default(),
            coord_discrepancy: 0.0,
        }
    }

    fn event(t: f64) -> PriorityEvent {
        PriorityEvent {
            id: format!("baron@{t}"),
            kind: PriorityEventKind::Baron,
            t,
            credited_team: Team::Red,
            detail: None,
        }
    }

    fn series(points: &[(f64, i64)]) -> Vec<GoldDiffPoint> {
        points
            .iter()
            .map(|&(t, diff)| GoldDiffPoint {
                t,
                diff,
                lane_diffs: [0; 5],
            })
            .collect()
    }

    #[test]
    fn case_study_record_emitted() {
        let log = case_study_match();
        let model = case_study_model(&log);
        let records = detect_inconsistencies(&model, &log, &DetectorConfig::default()).unwrap();
        let r = records
            .iter()
            .find(|r| r.slot == CASE_SLOT && r.t_start == CASE_T_INCONSISTENT)
            .expect("record at 09:26");
        assert_eq!(r.observed_behavior, BehaviorClass::Inaction);
        assert_eq!(r.predicted_top3[0].behavior, BehaviorClass::Champion);
        assert!((r.predicted_top3[0].prob - CASE_PROBABILITY).abs() < 1e-9);
        assert_eq!(r.predicted_top3.len(), 3);
    }

    #[test]
    fn agreement_never_flags() {
        // Persistence predicts the last frame's behavior with probability 1;
        // small_match rotates behaviors every frame, so everything disagrees.
        // With a log whose behaviors never change, nothing is flagged.
        let mut log = crate::fixtures::small_match(20);
        for f in &mut log.frames {
            for c in &mut f.champions {
                c.behavior = BehaviorClass::Turret;
            }
        }
        let baseline = PersistenceBaseline {
            stats: Some(NormalizationStats::new(0.0, 5000.0)),
        };
        for tau in [0.01, 0.5, 1.0] {
            let config = DetectorConfig {
                tau,
                ..DetectorConfig::default()
            };
            assert!(detect_inconsistencies(&baseline, &log, &config)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn runs_merge_into_one_record() {
        let log = crate::fixtures::small_match(20);
        let baseline = PersistenceBaseline {
            stats: Some(NormalizationStats::new(0.0, 5000.0)),
        };
        let records = detect_inconsistencies(&baseline, &log, &DetectorConfig::default()).unwrap();
        // Rotating behaviors change the (observed, top-1) triple every frame,
        // so each flagged frame is its own run.
        assert_eq!(records.len(), 15 * 10);

        let mut log = crate::fixtures::small_match(20);
        for (k, f) in log.frames.iter_mut().enumerate() {
            for c in &mut f.champions {
                c.behavior = if k < 10 {
                    BehaviorClass::Minion
                } else {
                    BehaviorClass::Resource
                };
            }
        }
        // Persistence flags only the switch frame.
        let records = detect_inconsistencies(&baseline, &log, &DetectorConfig::default()).unwrap();
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.t_start == 11.0 && r.t_end == 11.0));
    }

    #[test]
    fn missing_stats_is_model_mismatch() {
        let log = crate::fixtures::small_match(8);
        let model = PredictorModel::zeros(TrainConfig {
            hidden_size: 2,
            ..TrainConfig::default()
        });
        assert_eq!(
            detect_inconsistencies(&model, &log, &DetectorConfig::default()),
            Err(InconsistencyError::ModelMismatch)
        );
    }

    #[test]
    fn impact_worked_example() {
        let s = series(&[(0.0, 0), (100.0, -500), (200.0, -1500), (300.0, 500)]);
        let a = record(1, 100.0);
        let b = record(3, 50.0);
        let e = event(200.0);
        assert_eq!(compute_impact(&a, &e, &s).unwrap(), 1000);
        assert_eq!(compute_impact(&b, &e, &s).unwrap(), 1500);
        let table = impact_table(&[a.clone(), b], &e, &s);
        assert_eq!(table[0].normalized, 1000.0 / 1500.0);
        assert_eq!(table[1].normalized, 1.0);

        // Red records see the negated series; absolute deltas agree.
        let red = record(7, 100.0);
        assert_eq!(compute_impact(&red, &e, &s).unwrap(), 1000);
    }

    #[test]
    fn unchanged_series_gives_zero() {
        let s = series(&[(0.0, 300), (500.0, 300)]);
        let table = impact_table(&[record(0, 10.0)], &event(400.0), &s);
        assert_eq!(table[0].raw_delta, 0);
        assert_eq!(table[0].normalized, 0.0);
    }

    #[test]
    fn event_before_record_excluded() {
        let s = series(&[(0.0, 0), (10.0, 100)]);
        let late = record(0, 20.0);
        assert!(matches!(
            compute_impact(&late, &event(20.0), &s),
            Err(InconsistencyError::EventBeforeRecord { .. })
        ));
        assert!(impact_table(&[late], &event(5.0), &s).is_empty());
    }

    #[test]
    fn attribution_normalized_and_ignores_zeroed_group() {
        let log = case_study_match();
        let model = case_study_model(&log);
        let windows = build_windows(&log, model.stats.as_ref().unwrap(), 2.0);
        let w = windows
            .iter()
            .find(|w| w.t_target == CASE_T_INCONSISTENT)
            .unwrap();
        let series = attribute_features(&model, w, CASE_SLOT).unwrap();
        assert_eq!(series.frames.len(), 5);
        assert_eq!(series.frames[0].t, 561.0);
        for f in &series.frames {
            let s: f64 = f.contributions.iter().map(|c| c.abs()).sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-6);
        }

        let mut blind = model.clone();
        for c in 0..CHAMPIONS_PER_FRAME {
            blind.params.w_x.row_mut(c * FRAME_FEATURES + 1).fill(0.0);
        }
        let series = attribute_features(&blind, w, CASE_SLOT).unwrap();
        assert!(series.frames.iter().all(|f| f.contributions[1] == 0.0));
    }

    #[test]
    fn case_study_sign_pattern() {
        let log = case_study_match();
        let model = case_study_model(&log);
        let windows = build_windows(&log, model.stats.as_ref().unwrap(), 2.0);
        let w = windows
            .iter()
            .find(|w| w.t_target == CASE_T_INCONSISTENT)
            .unwrap();
        let totals = attribute_features(&model, w, CASE_SLOT).unwrap().totals();
        assert!(totals[0] < 0.0 && totals[1] < 0.0, "{totals:?}");
        assert!(totals[2] > 0.0 && totals[3] > 0.0, "{totals:?}");
    }

    #[test]
    fn analysis_links_everything() {
        let log = case_study_match();
        let model = case_study_model(&log);
        let a = analyze_match(&model, &log, &DetectorConfig::default()).unwrap();
        assert!(!a.records.is_empty());
        for table in a.impacts.values() {
            for score in table {
                assert!(a.records.iter().any(|r| r.id == score.record_id));
                assert!((0.0..=1.0).contains(&score.normalized));
            }
            if table.iter().any(|s| s.raw_delta > 0) {
                assert!(table.iter().any(|s| s.normalized == 1.0));
            }
        }
        assert_eq!(a.attributions.len(), a.records.len());
    }
}
