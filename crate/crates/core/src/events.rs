//! Global priority events: first blood, first tower and epic monsters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::telemetry::{MatchLog, MonsterType, RawEvent, Team};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityEventKind {
    FirstBlood,
    FirstTower,
    RiftHerald,
    DrakeInfernal,
    DrakeOcean,
    DrakeMountain,
    DrakeCloud,
    DrakeHextech,
    DrakeChemtech,
    ElderDragon,
    Baron,
}

impl PriorityEventKind {
    pub const ALL: [PriorityEventKind; 11] = [
        PriorityEventKind::FirstBlood,
        PriorityEventKind::FirstTower,
        PriorityEventKind::RiftHerald,
        PriorityEventKind::DrakeInfernal,
        PriorityEventKind::DrakeOcean,
        PriorityEventKind::DrakeMountain,
        PriorityEventKind::DrakeCloud,
        PriorityEventKind::DrakeHextech,
        PriorityEventKind::DrakeChemtech,
        PriorityEventKind::ElderDragon,
        PriorityEventKind::Baron,
    ];

    /// Stable name, shared with the UI icon set.
    pub fn name(self) -> &'static str {
        match self {
            PriorityEventKind::FirstBlood => "first_blood",
            PriorityEventKind::FirstTower => "first_tower",
            PriorityEventKind::RiftHerald => "rift_herald",
            PriorityEventKind::DrakeInfernal => "drake_infernal",
            PriorityEventKind::DrakeOcean => "drake_ocean",
            PriorityEventKind::DrakeMountain => "drake_mountain",
            PriorityEventKind::DrakeCloud => "drake_cloud",
            PriorityEventKind::DrakeHextech => "drake_hextech",
            PriorityEventKind::DrakeChemtech => "drake_chemtech",
            PriorityEventKind::ElderDragon => "elder_dragon",
            PriorityEventKind::Baron => "baron",
        }
    }

    pub fn from_monster(monster: MonsterType) -> Option<Self> {
        Some(match monster {
            MonsterType::InfernalDrake => PriorityEventKind::DrakeInfernal,
            MonsterType::OceanDrake => PriorityEventKind::DrakeOcean,
            MonsterType::MountainDrake => PriorityEventKind::DrakeMountain,
            MonsterType::CloudDrake => PriorityEventKind::DrakeCloud,
            MonsterType::HextechDrake => PriorityEventKind::DrakeHextech,
            MonsterType::ChemtechDrake => PriorityEventKind::DrakeChemtech,
            MonsterType::ElderDragon => PriorityEventKind::ElderDragon,
            MonsterType::RiftHerald => PriorityEventKind::RiftHerald,
            MonsterType::Baron => PriorityEventKind::Baron,
            MonsterType::ScuttleCrab | MonsterType::JungleCamp => return None,
        })
    }
}

impl fmt::Display for PriorityEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityEvent {
    /// `"{kind}@{t}"`, unique within a match.
    pub id: String,
    pub kind: PriorityEventKind,
    pub t: f64,
    pub credited_team: Team,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Timeline events sorted by time. Ties keep log order.
pub fn extract_priority_events(log: &MatchLog) -> Vec<PriorityEvent> {
    let mut out: Vec<(PriorityEventKind, f64, Team, Option<String>)> = Vec::new();
    let mut first_blood = false;
    let mut first_tower = false;
    for frame in &log.frames {
        for raw in &frame.raw_events {
            match raw {
                RawEvent::Kill { killer, victim, .. } if !first_blood => {
                    first_blood = true;
                    out.push((
                        PriorityEventKind::FirstBlood,
                        frame.t,
                        raw.credited_team(),
                        Some(format!("slot {killer} killed slot {victim}")),
                    ));
                }
                RawEvent::TurretDestroyed { team, lane } if !first_tower => {
                    first_tower = true;
                    let owner = team.opponent();
                    out.push((
                        PriorityEventKind::FirstTower,
                        frame.t,
                        *team,
                        Some(format!("{} {} turret", owner.name(), serde_plain(lane))),
                    ));
                }
                RawEvent::MonsterKill { monster, team } => {
                    if let Some(kind) = PriorityEventKind::from_monster(*monster) {
                        out.push((kind, frame.t, *team, None));
                    }
                }
                _ => {}
            }
        }
    }
    // Frames are already time-ordered; the stable sort only guards hand-built logs.
    out.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut events: Vec<PriorityEvent> = Vec::with_capacity(out.len());
    for (kind, t, credited_team, detail) in out {
        let base = format!("{}@{}", kind.name(), t);
        let mut id = base.clone();
        let mut n = 2;
        while events.iter().any(|e| e.id == id) {
            id = format!("{base}#{n}");
            n += 1;
        }
        events.push(PriorityEvent {
            id,
            kind,
            t,
            credited_team,
            detail,
        });
    }
    events
}

fn serde_plain<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
