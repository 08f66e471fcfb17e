//! Match telemetry data model and the line-delimited match log format.
//!
//! A log is UTF-8 text with LF line endings. Line 1 is a [`MatchHeader`]
//! object; every following line is one [`FrameRecord`]. Field names are
//! part of the on-disk contract (see `docs/match-log-format.md`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const CHAMPIONS_PER_FRAME: usize = 10;
pub const FRAME_FEATURES: usize = 9;
pub const BEHAVIOR_COUNT: usize = 5;

/// What a champion is doing in a frame. Index order is fixed and shared by
/// every one-hot and probability vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorClass {
    Minion = 0,
    Champion = 1,
    Resource = 2,
    Turret = 3,
    Inaction = 4,
}

impl BehaviorClass {
    pub const ALL: [BehaviorClass; BEHAVIOR_COUNT] = [
        BehaviorClass::Minion,
        BehaviorClass::Champion,
        BehaviorClass::Resource,
        BehaviorClass::Turret,
        BehaviorClass::Inaction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            BehaviorClass::Minion => "minion",
            BehaviorClass::Champion => "champion",
            BehaviorClass::Resource => "resource",
            BehaviorClass::Turret => "turret",
            BehaviorClass::Inaction => "inaction",
        }
    }

    pub fn one_hot(self) -> [f64; BEHAVIOR_COUNT] {
        let mut v = [0.0; BEHAVIOR_COUNT];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for BehaviorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Top = 0,
    Jungler = 1,
    Mid = 2,
    Bot = 3,
    Support = 4,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Top,
        Role::Jungler,
        Role::Mid,
        Role::Bot,
        Role::Support,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Top => "top",
            Role::Jungler => "jungler",
            Role::Mid => "mid",
            Role::Bot => "bot",
            Role::Support => "support",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Blue = 0,
    Red = 1,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::Blue, Team::Red];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Blue => "blue",
            Team::Red => "red",
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fixed slot index: Blue Top..Support are 0..5, Red Top..Support are 5..10.
pub fn slot_of(team: Team, role: Role) -> usize {
    team.index() * 5 + role.index()
}

pub fn team_of_slot(slot: usize) -> Team {
    if slot < 5 {
        Team::Blue
    } else {
        Team::Red
    }
}

pub fn role_of_slot(slot: usize) -> Role {
    Role::ALL[slot % 5]
}

/// A point in normalized map space, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn clamped(&self) -> Position {
        Position::new(self.x.clamp(0.0, 1.0), self.y.clamp(0.0, 1.0))
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

impl From<[f64; 2]> for Position {
    fn from(v: [f64; 2]) -> Self {
        Position::new(v[0], v[1])
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionState {
    pub champion_id: String,
    pub role: Role,
    pub team: Team,
    pub hp_norm: f64,
    pub mana_norm: f64,
    pub gold: u64,
    pub level: u8,
    pub global_pos: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_pos: Option<Position>,
    pub behavior: BehaviorClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Top,
    Mid,
    Bot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonsterType {
    InfernalDrake,
    OceanDrake,
    MountainDrake,
    CloudDrake,
    HextechDrake,
    ChemtechDrake,
    ElderDragon,
    RiftHerald,
    Baron,
    ScuttleCrab,
    JungleCamp,
}

impl MonsterType {
    /// Epic monsters are the global objectives; camps and scuttle are not.
    pub fn is_epic(self) -> bool {
        !matches!(self, MonsterType::ScuttleCrab | MonsterType::JungleCamp)
    }

    pub fn is_drake(self) -> bool {
        matches!(
            self,
            MonsterType::InfernalDrake
                | MonsterType::OceanDrake
                | MonsterType::MountainDrake
                | MonsterType::CloudDrake
                | MonsterType::HextechDrake
                | MonsterType::ChemtechDrake
        )
    }
}

/// Raw event marks as logged. `team` is always the credited (acting) team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RawEvent {
    Kill {
        killer: usize,
        victim: usize,
        #[serde(default)]
        assists: Vec<usize>,
    },
    TurretDestroyed {
        team: Team,
        lane: Lane,
    },
    MonsterKill {
        monster: MonsterType,
        team: Team,
    },
}

impl RawEvent {
    pub fn credited_team(&self) -> Team {
        match self {
            RawEvent::Kill { killer, .. } => team_of_slot(*killer),
            RawEvent::TurretDestroyed { team, .. } | RawEvent::MonsterKill { team, .. } => *team,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub champions: Vec<ChampionState>,
    #[serde(default)]
    pub raw_events: Vec<RawEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamNames {
    pub blue: String,
    pub red: String,
}

impl TeamNames {
    pub fn name(&self, team: Team) -> &str {
        match team {
            Team::Blue => &self.blue,
            Team::Red => &self.red,
        }
    }

    pub fn side_of(&self, name: &str) -> Option<Team> {
        if self.blue == name {
            Some(Team::Blue)
        } else if self.red == name {
            Some(Team::Red)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub slot: usize,
    pub team: Team,
    pub role: Role,
    pub player: String,
    pub champion: String,
}

/// Per-player post-game numbers. Frame data carries no damage, so these ride
/// in the header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub slot: usize,
    pub damage_to_champions: u64,
    pub total_damage: u64,
    pub damage_taken: u64,
    pub teamfights: u32,
    pub creep_score: u32,
    #[serde(default)]
    pub items: Vec<String>,
    #[serde(default)]
    pub skills: Vec<String>,
    #[serde(default)]
    pub runes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub duration_s: f64,
    /// Team fights per side, indexed `[blue, red]`.
    pub teamfights: [u32; 2],
    pub players: Vec<PlayerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchHeader {
    pub schema_version: u32,
    pub match_id: String,
    pub event_name: String,
    pub teams: TeamNames,
    pub roster: Vec<RosterEntry>,
    pub winner: Team,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<MatchSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchLog {
    pub header: MatchHeader,
    pub frames: Vec<FrameRecord>,
}

impl MatchLog {
    pub fn match_id(&self) -> &str {
        &self.header.match_id
    }

    pub fn team_name(&self, team: Team) -> &str {
        self.header.teams.name(team)
    }

    pub fn roster_entry(&self, slot: usize) -> Option<&RosterEntry> {
        self.header.roster.iter().find(|r| r.slot == slot)
    }

    pub fn player_summary(&self, slot: usize) -> Option<&PlayerSummary> {
        self.header
            .summary
            .as_ref()
            .and_then(|s| s.players.iter().find(|p| p.slot == slot))
    }

    /// Match length in seconds: the summary's duration if present, else the
    /// last frame timestamp.
    pub fn duration_s(&self) -> f64 {
        match &self.header.summary {
            Some(s) if s.duration_s > 0.0 => s.duration_s,
            _ => self.frames.last().map(|f| f.t).unwrap_or(0.0),
        }
    }

    /// Index of the last frame with `t <= at`.
    pub fn frame_at(&self, at: f64) -> Option<usize> {
        let idx = self.frames.partition_point(|f| f.t <= at);
        idx.checked_sub(1)
    }

    pub fn final_frame(&self) -> &FrameRecord {
        self.frames
            .last()
            .expect("match log has at least one frame")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("order error at line {line}: t={t} does not follow t={prev}")]
    Order { line: usize, prev: f64, t: f64 },
    #[error("roster error at line {line}: {message}")]
    Roster { line: usize, message: String },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Schema { .. } => "schema_error",
            ParseError::Order { .. } => "order_error",
            ParseError::Roster { .. } => "roster_error",
        }
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

fn schema_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Schema {
        line,
        message: message.into(),
    }
}

/// Parses and structurally validates a line-delimited match log.
///
/// Structural problems (bad JSON, unknown schema version, missing fields,
/// non-increasing timestamps, wrong champion count) are rejected. Value
/// problems such as a gold decrease are left to [`validate_match_log`].
pub fn parse_match_log(bytes: &[u8]) -> Result<MatchLog, ParseError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| schema_err(0, format!("invalid UTF-8: {e}")))?;
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));

    let (_, header_line) = lines.next().ok_or_else(|| schema_err(1, "empty input"))?;
    if header_line.trim().is_empty() {
        return Err(schema_err(1, "missing header line"));
    }
    let probe: VersionProbe =
        serde_json::from_str(header_line).map_err(|e| schema_err(1, e.to_string()))?;
    match probe.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(schema_err(1, format!("unsupported schema_version {v}"))),
        None => return Err(schema_err(1, "missing field `schema_version`")),
    }
    let header: MatchHeader =
        serde_json::from_str(header_line).map_err(|e| schema_err(1, e.to_string()))?;
    if header.roster.len() != CHAMPIONS_PER_FRAME {
        return Err(ParseError::Roster {
            line: 1,
            message: format!("roster has {} entries, expected 10", header.roster.len()),
        });
    }
    let mut slots: Vec<usize> = header.roster.iter().map(|r| r.slot).collect();
    slots.sort_unstable();
    if slots != (0..CHAMPIONS_PER_FRAME).collect::<Vec<_>>() {
        return Err(ParseError::Roster {
            line: 1,
            message: "roster does not cover slots 0..10 exactly once".into(),
        });
    }

    let mut frames: Vec<FrameRecord> = Vec::new();
    let mut ended = false;
    for (line_no, line) in lines {
        if line.is_empty() {
            ended = true;
            continue;
        }
        if ended {
            return Err(schema_err(line_no - 1, "blank line inside log"));
        }
        let frame: FrameRecord =
            serde_json::from_str(line).map_err(|e| schema_err(line_no, e.to_string()))?;
        if !frame.t.is_finite() {
            return Err(schema_err(line_no, "non-finite timestamp"));
        }
        if frame.champions.len() != CHAMPIONS_PER_FRAME {
            return Err(ParseError::Roster {
                line: line_no,
                message: format!("frame has {} champions, expected 10", frame.champions.len()),
            });
        }
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(ParseError::Order {
                    line: line_no,
                    prev: prev.t,
                    t: frame.t,
                });
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(schema_err(2, "log has no frames"));
    }
    Ok(MatchLog { header, frames })
}

/// Serializes a log in the canonical line-delimited form; the output parses
/// back to an equal log and re-serializes to identical bytes.
pub fn serialize_match_log(log: &MatchLog) -> String {
    let mut out = serde_json::to_string(&log.header).expect("header serializes");
    out.push('\n');
    for frame in &log.frames {
        out.push_str(&serde_json::to_string(frame).expect("frame serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    GoldDecrease {
        frame: usize,
        slot: usize,
        from: u64,
        to: u64,
    },
    RangeViolation {
        frame: usize,
        slot: usize,
        field: String,
        value: f64,
    },
    DuplicateRole {
        frame: usize,
        team: Team,
        role: Role,
    },
    SlotMismatch {
        frame: usize,
        slot: usize,
        team: Team,
        role: Role,
    },
    ChampionMismatch {
        frame: usize,
        slot: usize,
        champion_id: String,
    },
    InvalidEventSlot {
        frame: usize,
        slot: usize,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::GoldDecrease {
                frame,
                slot,
                from,
                to,
            } => {
                write!(
                    f,
                    "gold_decrease frame={frame} slot={slot} from={from} to={to}"
                )
            }
            Finding::RangeViolation {
                frame,
                slot,
                field,
                value,
            } => {
                write!(
                    f,
                    "range_violation frame={frame} slot={slot} field={field} value={value}"
                )
            }
            Finding::DuplicateRole { frame, team, role } => {
                write!(f, "duplicate_role frame={frame} team={team} role={role}")
            }
            Finding::SlotMismatch {
                frame,
                slot,
                team,
                role,
            } => {
                write!(
                    f,
                    "slot_mismatch frame={frame} slot={slot} team={team} role={role}"
                )
            }
            Finding::ChampionMismatch {
                frame,
                slot,
                champion_id,
            } => {
                write!(
                    f,
                    "champion_mismatch frame={frame} slot={slot} champion={champion_id}"
                )
            }
            Finding::InvalidEventSlot { frame, slot } => {
                write!(f, "invalid_event_slot frame={frame} slot={slot}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

/// Lists every type-invariant violation in the log with its frame index.
pub fn validate_match_log(log: &MatchLog) -> ValidationReport {
    let mut findings = Vec::new();
    let mut last_gold: Vec<Option<u64>> = vec![None; CHAMPIONS_PER_FRAME];

    for (fi, frame) in log.frames.iter().enumerate() {
        let mut seen = [[false; 5]; 2];
        for (slot, champ) in frame.champions.iter().enumerate() {
            let range_checks = [
                ("hp_norm", champ.hp_norm),
                ("mana_norm", champ.mana_norm),
                ("global_pos.x", champ.global_pos.x),
                ("global_pos.y", champ.global_pos.y),
            ];
            let local = champ
                .local_pos
                .map(|p| [("local_pos.x", p.x), ("local_pos.y", p.y)]);
            for (field, value) in range_checks.into_iter().chain(local.into_iter().flatten()) {
                if !in_unit(value) {
                    findings.push(Finding::RangeViolation {
                        frame: fi,
                        slot,
                        field: field.to_string(),
                        value,
                    });
                }
            }
            if !(1..=18).contains(&champ.level) {
                findings.push(Finding::RangeViolation {
                    frame: fi,
                    slot,
                    field: "level".into(),
                    value: f64::from(champ.level),
                });
            }
            if let Some(prev) = last_gold.get(slot).copied().flatten() {
                if champ.gold < prev {
                    findings.push(Finding::GoldDecrease {
                        frame: fi,
                        slot,
                        from: prev,
                        to: champ.gold,
                    });
                }
            }
            if slot < last_gold.len() {
                last_gold[slot] = Some(champ.gold);
            }

            let seen_role = &mut seen[champ.team.index()][champ.role.index()];
            if *seen_role {
                findings.push(Finding::DuplicateRole {
                    frame: fi,
                    team: champ.team,
                    role: champ.role,
                });
            }
            *seen_role = true;
            if champ.team != team_of_slot(slot) || champ.role != role_of_slot(slot) {
                findings.push(Finding::SlotMismatch {
                    frame: fi,
                    slot,
                    team: champ.team,
                    role: champ.role,
                });
            }
            if let Some(entry) = log.roster_entry(slot) {
                if entry.champion != champ.champion_id {
                    findings.push(Finding::ChampionMismatch {
                        frame: fi,
                        slot,
                        champion_id: champ.champion_id.clone(),
                    });
                }
            }
        }
        for event in &frame.raw_events {
            if let RawEvent::Kill {
                killer,
                victim,
                assists,
            } = event
            {
                for &slot in std::iter::once(killer)
                    .chain(std::iter::once(victim))
                    .chain(assists)
                {
                    if slot >= CHAMPIONS_PER_FRAME {
                        findings.push(Finding::InvalidEventSlot { frame: fi, slot });
                    }
                }
            }
        }
    }
    ValidationReport { findings }
}

/// Corpus-wide per-champion gold range used to scale gold into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub gold_min: f64,
    pub gold_max: f64,
}

impl NormalizationStats {
    pub fn new(gold_min: f64, gold_max: f64) -> Self {
        Self { gold_min, gold_max }
    }

    pub fn from_logs<'a>(logs: impl IntoIterator<Item = &'a MatchLog>) -> Option<Self> {
        let mut min = u64::MAX;
        let mut max = 0u64;
        let mut any = false;
        for log in logs {
            for frame in &log.frames {
                for champ in &frame.champions {
                    min = min.min(champ.gold);
                    max = max.max(champ.gold);
                    any = true;
                }
            }
        }
        any.then(|| Self::new(min as f64, max as f64))
    }

    pub fn is_degenerate(&self) -> bool {
        self.gold_max <= self.gold_min
    }

    pub fn normalize_gold(&self, gold: u64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        ((gold as f64 - self.gold_min) / (self.gold_max - self.gold_min)).clamp(0.0, 1.0)
    }
}

/// Per-champion model input: `[hp, gold, x, y, one-hot behavior x5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameVector(pub [f64; FRAME_FEATURES]);

impl FrameVector {
    pub fn values(&self) -> &[f64; FRAME_FEATURES] {
        &self.0
    }

    pub fn behavior_slice(&self) -> &[f64] {
        &self.0[4..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedFrame {
    pub vector: FrameVector,
    /// Set when the gold stats had `max == min`; gold is then encoded as 0.
    pub degenerate_stats: bool,
}

pub fn encode_champion_frame(
    state: &ChampionState,
    gold_stats: &NormalizationStats,
) -> EncodedFrame {
    let pos = state.global_pos.clamped();
    let mut v = [0.0; FRAME_FEATURES];
    v[0] = state.hp_norm.clamp(0.0, 1.0);
    v[1] = gold_stats.normalize_gold(state.gold);
    v[2] = pos.x;
    v[3] = pos.y;
    v[4 + state.behavior.index()] = 1.0;
    EncodedFrame {
        vector: FrameVector(v),
        degenerate_stats: gold_stats.is_degenerate(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldDiffPoint {
    pub t: f64,
    pub diff: i64,
    /// Role-vs-lane-opponent gold differences, Top..Support.
    pub lane_diffs: [i64; 5],
}

pub fn team_gold(frame: &FrameRecord, team: Team) -> i64 {
    frame
        .champions
        .iter()
        .filter(|c| c.team == team)
        .map(|c| c.gold as i64)
        .sum()
}

/// Per-frame team gold lead from `perspective`'s point of view.
pub fn gold_diff_series(log: &MatchLog, perspective: Team) -> Vec<GoldDiffPoint> {
    log.frames
        .iter()
        .map(|frame| {
            let mut lane_diffs = [0i64; 5];
            for role in Role::ALL {
                let own = frame.champions[slot_of(perspective, role)].gold as i64;
                let opp = frame.champions[slot_of(perspective.opponent(), role)].gold as i64;
                lane_diffs[role.index()] = own - opp;
            }
            GoldDiffPoint {
                t: frame.t,
                diff: team_gold(frame, perspective) - team_gold(frame, perspective.opponent()),
                lane_diffs,
            }
        })
        .collect()
}

/// Value of a step-wise series at `t` (last point with `point.t <= t`).
pub fn diff_at(series: &[GoldDiffPoint], t: f64) -> Option<i64> {
    let idx = series.partition_point(|p| p.t <= t);
    idx.checked_sub(1).map(|i| series[i].diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::small_match;

    #[test]
    fn seven_frame_fixture_parses() {
        let log = small_match(7);
        let text = serialize_match_log(&log);
        let parsed = parse_match_log(text.as_bytes()).unwrap();
        assert_eq!(parsed.frames.len(), 7);
        assert!(parsed.frames.iter().all(|f| f.champions.len() == 10));
        assert_eq!(parsed, log);
        assert_eq!(serialize_match_log(&parsed), text);
    }

    #[test]
    fn out_of_order_timestamps_rejected() {
        let mut log = small_match(7);
        log.frames[3].t = 12.0;
        log.frames[4].t = 11.0;
        let err = parse_match_log(serialize_match_log(&log).as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::Order { line: 6, .. }), "{err:?}");
    }

    #[test]
    fn wrong_champion_count_rejected() {
        let mut log = small_match(3);
        log.frames[1].champions.pop();
        let err = parse_match_log(serialize_match_log(&log).as_bytes()).unwrap_err();
        assert!(matches!(err, ParseError::Roster { line: 3, .. }));
    }

    #[test]
    fn unknown_version_and_missing_field_rejected() {
        let log = small_match(2);
        let text =
            serialize_match_log(&log).replacen("\"schema_version\":1", "\"schema_version\":2", 1);
        assert!(matches!(
            parse_match_log(text.as_bytes()),
            Err(ParseError::Schema { line: 1, .. })
        ));
        let text = serialize_match_log(&log).replacen("\"hp_norm\"", "\"hp\"", 1);
        assert!(matches!(
            parse_match_log(text.as_bytes()),
            Err(ParseError::Schema { line: 2, .. })
        ));
    }

    #[test]
    fn clean_log_has_empty_report() {
        assert!(validate_match_log(&small_match(7)).is_clean());
    }

    #[test]
    fn gold_decrease_reported_once() {
        let mut log = small_match(4);
        log.frames[1].champions[2].gold = 500;
        log.frames[2].champions[2].gold = 480;
        log.frames[3].champions[2].gold = 480;
        let report = validate_match_log(&log);
        assert_eq!(
            report.findings,
            vec![Finding::GoldDecrease {
                frame: 2,
                slot: 2,
                from: 500,
                to: 480
            }]
        );
    }

    #[test]
    fn out_of_range_coordinate_reported() {
        let mut log = small_match(3);
        log.frames[1].champions[6].global_pos.x = 1.2;
        let report = validate_match_log(&log);
        assert_eq!(report.findings.len(), 1);
        assert!(matches!(
            &report.findings[0],
            Finding::RangeViolation { frame: 1, slot: 6, field, .. } if field == "global_pos.x"
        ));
    }

    #[test]
    fn duplicate_role_reported() {
        let mut log = small_match(2);
        log.frames[0].champions[1].role = Role::Top;
        let report = validate_match_log(&log);
        assert!(report.findings.iter().any(|f| matches!(
            f,
            Finding::DuplicateRole {
                frame: 0,
                team: Team::Blue,
                role: Role::Top
            }
        )));
    }

    fn state(hp: f64, gold: u64, x: f64, y: f64, behavior: BehaviorClass) -> ChampionState {
        ChampionState {
            champion_id: "Azir".into(),
            role: Role::Mid,
            team: Team::Blue,
            hp_norm: hp,
            mana_norm: 1.0,
            gold,
            level: 1,
            global_pos: Position::new(x, y),
            local_pos: None,
            behavior,
        }
    }

    #[test]
    fn encode_boundary_values() {
        let stats = NormalizationStats::new(500.0, 20_500.0);
        let enc =
            encode_champion_frame(&state(1.0, 500, 0.5, 0.5, BehaviorClass::Inaction), &stats);
        assert_eq!(enc.vector.0, [1.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(!enc.degenerate_stats);

        let enc =
            encode_champion_frame(&state(0.3, 10_500, 0.1, 0.9, BehaviorClass::Minion), &stats);
        assert_eq!(enc.vector.behavior_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(enc.vector.0[1], 0.5);
    }

    #[test]
    fn degenerate_stats_flagged() {
        let stats = NormalizationStats::new(700.0, 700.0);
        let enc = encode_champion_frame(&state(0.5, 900, 0.5, 0.5, BehaviorClass::Turret), &stats);
        assert!(enc.degenerate_stats);
        assert_eq!(enc.vector.0[1], 0.0);
    }

    #[test]
    fn gold_diff_arithmetic() {
        let mut log = small_match(2);
        for (slot, champ) in log.frames[0].champions.iter_mut().enumerate() {
            champ.gold = 500;
            let _ = slot;
        }
        for (slot, champ) in log.frames[1].champions.iter_mut().enumerate() {
            champ.gold = if slot == 3 { 600 } else { 500 };
        }
        let blue = gold_diff_series(&log, Team::Blue);
        assert_eq!(blue[0].diff, 0);
        assert_eq!(blue[1].diff, 100);
        assert_eq!(blue[1].lane_diffs, [0, 0, 0, 100, 0]);
        let red = gold_diff_series(&log, Team::Red);
        assert_eq!(red[1].diff, -100);
    }

    #[test]
    fn step_lookup() {
        let series = vec![
            GoldDiffPoint {
                t: 1.0,
                diff: 5,
                lane_diffs: [0; 5],
            },
            GoldDiffPoint {
                t: 3.0,
                diff: 9,
                lane_diffs: [0; 5],
            },
        ];
        assert_eq!(diff_at(&series, 0.5), None);
        assert_eq!(diff_at(&series, 2.0), Some(5));
        assert_eq!(diff_at(&series, 3.0), Some(9));
    }
}
