use std::collections::BTreeMap;
use std::str::FromStr;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::Uri;
use axum::Json;
use serde::Serialize;
use stratincon_core::events::{extract_priority_events, PriorityEvent};
use stratincon_core::inconsistency::{
    impact_table, AttributionFrame, FeatureGroup, InconsistencyRecord,
};
use stratincon_core::profiles::{self, CarryScores, PlayerProfile, TeamProfile};
use stratincon_core::store::StoreError;
use stratincon_core::telemetry::{
    gold_diff_series, BehaviorClass, ChampionState, MatchLog, MatchSummary, RawEvent, RosterEntry,
    Team, TeamNames, CHAMPIONS_PER_FRAME,
};

use crate::{ApiError, AppState};

type ApiResult<T> = Result<Json<T>, ApiError>;
type RawQuery = Result<Query<BTreeMap<String, String>>, QueryRejection>;

struct Params(BTreeMap<String, String>);

impl Params {
    fn new(q: RawQuery) -> Result<Self, ApiError> {
        q.map(|Query(m)| Params(m))
            .map_err(|e| ApiError::unprocessable("invalid_query", e.body_text()))
    }

    fn get<T: FromStr>(&self, name: &str) -> Result<Option<T>, ApiError> {
        match self.0.get(name) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                ApiError::unprocessable("invalid_parameter", format!("cannot parse {name}={raw:?}"))
            }),
        }
    }

    fn require<T: FromStr>(&self, name: &str) -> Result<T, ApiError> {
        self.get(name)?.ok_or_else(|| {
            ApiError::unprocessable(
                "missing_parameter",
                format!("query parameter {name} is required"),
            )
        })
    }

    fn time(&self, name: &str) -> Result<Option<f64>, ApiError> {
        match self.get::<f64>(name)? {
            Some(t) if !t.is_finite() => Err(ApiError::unprocessable(
                "invalid_parameter",
                format!("{name} must be a finite number of seconds"),
            )),
            t => Ok(t),
        }
    }

    /// `from`/`to` in seconds, both inclusive.
    fn span(&self) -> Result<Span, ApiError> {
        let (from, to) = (self.time("from")?, self.time("to")?);
        if let (Some(a), Some(b)) = (from, to) {
            if a > b {
                return Err(ApiError::unprocessable(
                    "invalid_range",
                    format!("from={a} is after to={b}"),
                ));
            }
        }
        Ok(Span { from, to })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Span {
    from: Option<f64>,
    to: Option<f64>,
}

impl Span {
    fn contains(&self, t: f64) -> bool {
        self.from.is_none_or(|f| t >= f) && self.to.is_none_or(|e| t <= e)
    }
}

// ------------------------------------------------------------------ matches

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum AnalysisState {
    Missing,
    Current,
    Stale,
    Corrupt,
}

#[derive(Debug, Serialize)]
struct AnalysisStatus {
    state: AnalysisState,
    model_version: Option<String>,
}

fn analysis_status(state: &AppState, id: &str) -> Result<AnalysisStatus, ApiError> {
    let (state, model_version) = match state.bundle(id) {
        Ok(b) if state.is_stale(&b) => (AnalysisState::Stale, Some(b.model_version)),
        Ok(b) => (AnalysisState::Current, Some(b.model_version)),
        Err(StoreError::NotFound { .. }) => (AnalysisState::Missing, None),
        Err(StoreError::CorruptEntity { .. }) => (AnalysisState::Corrupt, None),
        Err(e) => return Err(e.into()),
    };
    Ok(AnalysisStatus {
        state,
        model_version,
    })
}

#[derive(Debug, Serialize)]
pub(crate) struct MatchListItem {
    id: String,
    event: String,
    teams: TeamNames,
    winner: Team,
    duration_s: f64,
    frames: usize,
    analysis: AnalysisStatus,
}

#[derive(Debug, Serialize)]
pub(crate) struct MatchList {
    model_version: Option<String>,
    matches: Vec<MatchListItem>,
}

pub(crate) async fn list_matches(State(state): State<AppState>) -> ApiResult<MatchList> {
    let matches = state
        .matches()
        .iter()
        .map(|m| {
            Ok(MatchListItem {
                id: m.match_id().to_string(),
                event: m.header.event_name.clone(),
                teams: m.header.teams.clone(),
                winner: m.header.winner,
                duration_s: m.duration_s(),
                frames: m.frames.len(),
                analysis: analysis_status(&state, m.match_id())?,
            })
        })
        .collect::<Result<_, ApiError>>()?;
    Ok(Json(MatchList {
        model_version: state.model_version().map(str::to_string),
        matches,
    }))
}

#[derive(Debug, Serialize)]
struct SideCarry {
    blue: CarryScores,
    red: CarryScores,
}

#[derive(Debug, Serialize)]
pub(crate) struct MatchDetail {
    id: String,
    event: String,
    teams: TeamNames,
    winner: Team,
    roster: Vec<RosterEntry>,
    summary: Option<MatchSummary>,
    frames: usize,
    t_start: f64,
    t_end: f64,
    duration_s: f64,
    carry: SideCarry,
    analysis: AnalysisStatus,
}

pub(crate) async fn match_detail(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<MatchDetail> {
    let m = state.get_match(&id)?;
    Ok(Json(MatchDetail {
        id: id.clone(),
        event: m.header.event_name.clone(),
        teams: m.header.teams.clone(),
        winner: m.header.winner,
        roster: m.header.roster.clone(),
        summary: m.header.summary.clone(),
        frames: m.frames.len(),
        t_start: m.frames.first().map_or(0.0, |f| f.t),
        t_end: m.frames.last().map_or(0.0, |f| f.t),
        duration_s: m.duration_s(),
        carry: SideCarry {
            blue: profiles::compute_carry_scores(m, Team::Blue),
            red: profiles::compute_carry_scores(m, Team::Red),
        },
        analysis: analysis_status(&state, &id)?,
    }))
}

#[derive(Debug, Serialize)]
struct FrameView {
    index: usize,
    t: f64,
    champions: Vec<ChampionState>,
    events: Vec<RawEvent>,
    /// Blue minus red.
    gold_diff: i64,
    /// Blue role minus red role, Top..Support.
    lane_diffs: [i64; 5],
}

#[derive(Debug, Serialize)]
pub(crate) struct FrameSlice {
    match_id: String,
    from: Option<f64>,
    to: Option<f64>,
    frames: Vec<FrameView>,
}

fn frame_slice(m: &MatchLog, span: Span) -> Vec<FrameView> {
    let series = gold_diff_series(m, Team::Blue);
    m.frames
        .iter()
        .zip(&series)
        .enumerate()
        .filter(|(_, (f, _))| span.contains(f.t))
        .map(|(index, (f, g))| FrameView {
            index,
            t: f.t,
            champions: f.champions.clone(),
            events: f.raw_events.clone(),
            gold_diff: g.diff,
            lane_diffs: g.lane_diffs,
        })
        .collect()
}

pub(crate) async fn frames(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: RawQuery,
) -> ApiResult<FrameSlice> {
    let m = state.get_match(&id)?;
    let span = Params::new(query)?.span()?;
    Ok(Json(FrameSlice {
        match_id: id,
        from: span.from,
        to: span.to,
        frames: frame_slice(m, span),
    }))
}

#[derive(Debug, Serialize)]
pub(crate) struct EventList {
    match_id: String,
    events: Vec<PriorityEvent>,
}

pub(crate) async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<EventList> {
    let m = state.get_match(&id)?;
    Ok(Json(EventList {
        match_id: id,
        events: extract_priority_events(m),
    }))
}

// ----------------------------------------------------------- inconsistencies

#[derive(Debug, Serialize)]
struct Impact {
    raw_delta: u64,
    normalized: f64,
}

#[derive(Debug, Serialize)]
struct RecordView {
    #[serde(flatten)]
    record: InconsistencyRecord,
    /// Absent without an `event`, or when the event does not follow the
    /// record.
    impact: Option<Impact>,
}

#[derive(Debug, Serialize)]
pub(crate) struct InconsistencyList {
    match_id: String,
    model_version: String,
    stale: bool,
    event: Option<PriorityEvent>,
    records: Vec<RecordView>,
}

pub(crate) async fn inconsistencies(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: RawQuery,
) -> ApiResult<InconsistencyList> {
    let m = state.get_match(&id)?;
    let params = Params::new(query)?;
    let bundle = state.bundle(&id)?;
    let stale = state.is_stale(&bundle);
    let analysis = bundle.analysis;

    let event = match params.get::<String>("event")? {
        None => None,
        Some(eid) => Some(
            analysis
                .events
                .iter()
                .find(|e| e.id == eid)
                .cloned()
                .ok_or_else(|| {
                    ApiError::not_found(
                        "event_not_found",
                        format!("match {id} has no event {eid:?}"),
                    )
                })?,
        ),
    };
    let mut impacts: BTreeMap<String, Impact> = BTreeMap::new();
    if let Some(e) = &event {
        let series = gold_diff_series(m, Team::Blue);
        for s in impact_table(&analysis.records, e, &series) {
            impacts.insert(
                s.record_id,
                Impact {
                    raw_delta: s.raw_delta,
                    normalized: s.normalized,
                },
            );
        }
    }
    let records = analysis
        .records
        .into_iter()
        .map(|record| {
            let impact = impacts.remove(&record.id);
            RecordView { record, impact }
        })
        .collect();
    Ok(Json(InconsistencyList {
        match_id: id,
        model_version: bundle.model_version,
        stale,
        event,
        records,
    }))
}

#[derive(Debug, Serialize)]
struct SeriesView {
    record_id: String,
    t_target: f64,
    behavior: BehaviorClass,
    probability: f64,
    frames: Vec<AttributionFrame>,
}

#[derive(Debug, Serialize)]
pub(crate) struct AttributionList {
    match_id: String,
    slot: usize,
    from: Option<f64>,
    to: Option<f64>,
    /// Order of each frame's `contributions`.
    groups: [FeatureGroup; 4],
    series: Vec<SeriesView>,
}

pub(crate) async fn attribution(
    State(state): State<AppState>,
    Path(id): Path<String>,
    query: RawQuery,
) -> ApiResult<AttributionList> {
    state.get_match(&id)?;
    let params = Params::new(query)?;
    let slot: usize = params.require("slot")?;
    if slot >= CHAMPIONS_PER_FRAME {
        return Err(ApiError::unprocessable(
            "invalid_parameter",
            format!("slot must be below {CHAMPIONS_PER_FRAME}, got {slot}"),
        ));
    }
    let span = params.span()?;
    let mut analysis = state.bundle(&id)?.analysis;
    let series = analysis
        .records
        .iter()
        .filter(|r| r.slot == slot)
        .filter_map(|r| {
            analysis
                .attributions
                .remove(&r.id)
                .map(|a| (r.id.clone(), a))
        })
        .filter_map(|(record_id, a)| {
            let frames: Vec<AttributionFrame> = a
                .frames
                .into_iter()
                .filter(|f| span.contains(f.t))
                .collect();
            (!frames.is_empty()).then_some(SeriesView {
                record_id,
                t_target: a.t_target,
                behavior: a.behavior,
                probability: a.probability,
                frames,
            })
        })
        .collect();
    Ok(Json(AttributionList {
        match_id: id,
        slot,
        from: span.from,
        to: span.to,
        groups: FeatureGroup::ALL,
        series,
    }))
}

// ----------------------------------------------------------------- profiles

fn check_current(state: &AppState, current: Option<&str>) -> Result<(), ApiError> {
    if let Some(id) = current {
        state.get_match(id)?;
    }
    Ok(())
}

pub(crate) async fn team_profile(
    State(state): State<AppState>,
    Path(team): Path<String>,
    query: RawQuery,
) -> ApiResult<TeamProfile> {
    let params = Params::new(query)?;
    if !state
        .matches()
        .iter()
        .any(|m| m.header.teams.side_of(&team).is_some())
    {
        return Err(ApiError::not_found(
            "team_not_found",
            format!("no team named {team:?}"),
        ));
    }
    let event: String = params.require("event")?;
    let current: Option<String> = params.get("match")?;
    check_current(&state, current.as_deref())?;
    Ok(Json(profiles::team_profile(
        state.matches(),
        &team,
        &event,
        current.as_deref(),
    )?))
}

pub(crate) async fn player_profile(
    State(state): State<AppState>,
    Path(player): Path<String>,
    query: RawQuery,
) -> ApiResult<PlayerProfile> {
    let params = Params::new(query)?;
    if !state
        .matches()
        .iter()
        .any(|m| m.header.roster.iter().any(|r| r.player == player))
    {
        return Err(ApiError::not_found(
            "player_not_found",
            format!("no player named {player:?}"),
        ));
    }
    let event: String = params.require("event")?;
    let champion: String = params.require("champion")?;
    let current: Option<String> = params.get("match")?;
    check_current(&state, current.as_deref())?;
    Ok(Json(profiles::player_profile(
        state.matches(),
        &player,
        &champion,
        &event,
        current.as_deref(),
    )?))
}

pub(crate) async fn fallback(uri: Uri) -> ApiError {
    ApiError::not_found("route_not_found", format!("no route for {}", uri.path()))
}
