//! Deterministic synthetic match generator.
//!
//! Behavior follows a Markov table `P(next | role, phase, prior)`, movement
//! interpolates per-role waypoints with Gaussian jitter, and gold accrues
//! from per-behavior income plus scripted event bounties. The returned
//! [`GroundTruth`] carries the exact table so an oracle predictor can be
//! built from it.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{
    PredictError, StrategyPrediction, StrategyPredictor, WindowSample, WINDOW_FRAMES,
};
use crate::telemetry::{
    role_of_slot, slot_of, BehaviorClass, ChampionState, FrameRecord, Lane, MatchHeader, MatchLog,
    MatchSummary, MonsterType, NormalizationStats, PlayerSummary, Position, RawEvent, Role,
    RosterEntry, Team, TeamNames, BEHAVIOR_COUNT, CHAMPIONS_PER_FRAME, SCHEMA_VERSION,
};

pub const PHASES: usize = 3;
/// Stay probability of the default structured policy.
pub const DEFAULT_STAY: f64 = 0.97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Early = 0,
    Mid = 1,
    Late = 2,
}

/// Game phase for a timestamp given the two phase boundaries in seconds.
pub fn phase_at(t: f64, bounds: [f64; 2]) -> Phase {
    if t < bounds[0] {
        Phase::Early
    } else if t < bounds[1] {
        Phase::Mid
    } else {
        Phase::Late
    }
}

type Row = [f64; BEHAVIOR_COUNT];

/// `rows[role][phase][prior]` is the distribution of the next behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorPolicy {
    pub rows: [[[Row; BEHAVIOR_COUNT]; PHASES]; 5],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<RecallRule>,
}

/// Health override on top of the transition table: a champion below `below`
/// recalls (Inaction), and an idle champion at or above `resume_at` leaves
/// Inaction for the table's non-idle successors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallRule {
    pub below: f64,
    pub resume_at: f64,
}

impl Default for RecallRule {
    fn default() -> Self {
        Self {
            below: 0.3,
            resume_at: 0.95,
        }
    }
}

impl BehaviorPolicy {
    pub fn row(&self, role: Role, phase: Phase, prior: BehaviorClass) -> &Row {
        &self.rows[role.index()][phase as usize][prior.index()]
    }

    pub fn with_recall(mut self, rule: RecallRule) -> Self {
        self.recall = Some(rule);
        self
    }

    /// Next-behavior distribution given the prior behavior and its health.
    pub fn next_distribution(
        &self,
        role: Role,
        phase: Phase,
        prior: BehaviorClass,
        hp: f64,
    ) -> Row {
        let row = *self.row(role, phase, prior);
        let Some(rule) = self.recall else {
            return row;
        };
        let idle = BehaviorClass::Inaction.index();
        if prior != BehaviorClass::Inaction && hp < rule.below {
            let mut out = [0.0; BEHAVIOR_COUNT];
            out[idle] = 1.0;
            return out;
        }
        if prior == BehaviorClass::Inaction && hp >= rule.resume_at {
            let active = 1.0 - row[idle];
            if active > 0.0 {
                let mut out = row.map(|p| p / active);
                out[idle] = 0.0;
                return out;
            }
        }
        row
    }

    /// All mass on `target[role][phase]` regardless of the prior behavior.
    pub fn deterministic(target: [[BehaviorClass; PHASES]; 5]) -> Self {
        let mut rows = [[[[0.0; BEHAVIOR_COUNT]; BEHAVIOR_COUNT]; PHASES]; 5];
        for (role, phases) in target.iter().enumerate() {
            for (phase, behavior) in phases.iter().enumerate() {
                for prior in 0..BEHAVIOR_COUNT {
                    rows[role][phase][prior][behavior.index()] = 1.0;
                }
            }
        }
        Self { rows, recall: None }
    }

    /// Sticky chain: stay with probability `stay`, otherwise advance to the
    /// next behavior in a per-(role, phase) cycle.
    pub fn structured(stay: f64) -> Self {
        let mut rows = [[[[0.0; BEHAVIOR_COUNT]; BEHAVIOR_COUNT]; PHASES]; 5];
        for role in Role::ALL {
            for phase in 0..PHASES {
                let cycle = default_cycle(role, phase);
                for prior in BehaviorClass::ALL {
                    let row = &mut rows[role.index()][phase][prior.index()];
                    match cycle.iter().position(|b| *b == prior) {
                        Some(pos) => {
                            let next = cycle[(pos + 1) % cycle.len()];
                            row[prior.index()] += stay;
                            row[next.index()] += 1.0 - stay;
                        }
                        None => {
                            row[prior.index()] += stay;
                            row[cycle[0].index()] += 1.0 - stay;
                        }
                    }
                }
            }
        }
        Self { rows, recall: None }
    }

    pub fn default_deterministic() -> Self {
        use BehaviorClass::*;
        Self::deterministic([
            [Minion, Champion, Turret],
            [Resource, Champion, Resource],
            [Minion, Champion, Champion],
            [Minion, Minion, Turret],
            [Inaction, Champion, Champion],
        ])
    }

    fn check(&self) -> Result<(), GenError> {
        if let Some(rule) = self.recall {
            if !(0.0..=1.0).contains(&rule.below) || !(rule.below..=1.0).contains(&rule.resume_at) {
                return Err(GenError::Config(format!(
                    "recall thresholds must satisfy 0 <= below <= resume_at <= 1, got {} and {}",
                    rule.below, rule.resume_at
                )));
            }
        }
        for (role, phases) in self.rows.iter().enumerate() {
            for (phase, priors) in phases.iter().enumerate() {
                for (prior, row) in priors.iter().enumerate() {
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                        return Err(GenError::Config(format!(
                            "transition row role={role} phase={phase} prior={prior} is not a distribution (sum {sum})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn default_cycle(role: Role, phase: usize) -> Vec<BehaviorClass> {
    use BehaviorClass::*;
    match (role, phase) {
        (Role::Top, 0) => vec![Minion, Champion, Minion, Inaction],
        (Role::Top, 1) => vec![Minion, Turret, Champion, Inaction],
        (Role::Top, _) => vec![Champion, Turret, Inaction, Minion],
        (Role::Jungler, 0) => vec![Resource, Inaction, Champion],
        (Role::Jungler, 1) => vec![Resource, Champion, Inaction],
        (Role::Jungler, _) => vec![Resource, Champion, Turret, Inaction],
        (Role::Mid, 0) => vec![Minion, Inaction, Champion],
        (Role::Mid, 1) => vec![Minion, Champion, Turret, Inaction],
        (Role::Mid, _) => vec![Champion, Inaction, Turret],
        (Role::Bot, 0) => vec![Minion, Champion, Inaction],
        (Role::Bot, 1) => vec![Minion, Turret, Resource, Champion],
        (Role::Bot, _) => vec![Turret, Champion, Minion],
        (Role::Support, 0) => vec![Inaction, Champion, Minion],
        (Role::Support, 1) => vec![Inaction, Resource, Champion],
        (Role::Support, _) => vec![Champion, Inaction, Resource],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pos: Position,
    pub dwell_s: u32,
}

/// Blue-side waypoint loops per role; red mirrors them through the map center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementPolicy {
    pub routes: [Vec<Waypoint>; 5],
    /// Normalized map units per second.
    pub speed: f64,
    /// Standard deviation of the per-frame positional jitter.
    pub jitter: f64,
}

impl Default for MovementPolicy {
    fn default() -> Self {
        let wp = |x: f64, y: f64, dwell_s: u32| Waypoint {
            pos: Position::new(x, y),
            dwell_s,
        };
        Self {
            routes: [
                vec![
                    wp(0.12, 0.45, 20),
                    wp(0.12, 0.2, 30),
                    wp(0.25, 0.12, 15),
                    wp(0.1, 0.8, 5),
                ],
                vec![
                    wp(0.25, 0.55, 15),
                    wp(0.3, 0.75, 10),
                    wp(0.67, 0.7, 20),
                    wp(0.33, 0.3, 20),
                ],
                vec![
                    wp(0.35, 0.65, 10),
                    wp(0.5, 0.5, 30),
                    wp(0.42, 0.58, 15),
                    wp(0.6, 0.4, 10),
                ],
                vec![
                    wp(0.55, 0.88, 15),
                    wp(0.75, 0.88, 30),
                    wp(0.88, 0.75, 20),
                    wp(0.7, 0.9, 5),
                ],
                vec![
                    wp(0.6, 0.85, 15),
                    wp(0.78, 0.84, 25),
                    wp(0.67, 0.7, 15),
                    wp(0.5, 0.62, 10),
                ],
            ],
            speed: 0.02,
            jitter: 0.01,
        }
    }
}

/// Gold per frame by role and behavior, plus event bounties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRates {
    pub per_behavior: [[u64; BEHAVIOR_COUNT]; 5],
    pub passive: u64,
    pub starting_gold: u64,
    pub kill_bounty: u64,
    /// Paid to every member of the destroying team.
    pub turret_bounty: u64,
    /// Paid to every member of the securing team.
    pub drake_bounty: u64,
}

impl Default for GoldRates {
    fn default() -> Self {
        Self {
            per_behavior: [
                [12, 6, 4, 10, 0],
                [6, 6, 14, 8, 0],
                [12, 6, 4, 10, 0],
                [14, 6, 4, 10, 0],
                [4, 6, 4, 6, 1],
            ],
            passive: 2,
            starting_gold: 500,
            kill_bounty: 300,
            turret_bounty: 250,
            drake_bounty: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub t: f64,
    pub event: RawEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub match_id: String,
    pub event_name: String,
    pub team_names: [String; 2],
    pub winner: Option<Team>,
    pub behavior_policy: BehaviorPolicy,
    pub initial_behavior: BehaviorClass,
    pub phase_bounds: [f64; 2],
    pub gold_rates: GoldRates,
    pub movement_policy: MovementPolicy,
    /// `None` draws a default script from the seed.
    pub event_script: Option<Vec<ScriptedEvent>>,
    /// Champion picks in slot order; `None` draws from the pool.
    pub champions: Option<[String; CHAMPIONS_PER_FRAME]>,
}

impl GenConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            n_frames: 2200,
            match_id: format!("syn-{seed:06}"),
            event_name: "SYNTHETIC-CUP".to_string(),
            team_names: ["ALPHA".to_string(), "BRAVO".to_string()],
            winner: None,
            behavior_policy: BehaviorPolicy::structured(DEFAULT_STAY)
                .with_recall(RecallRule::default()),
            initial_behavior: BehaviorClass::Inaction,
            phase_bounds: [840.0, 1500.0],
            gold_rates: GoldRates::default(),
            movement_policy: MovementPolicy::default(),
            event_script: None,
            champions: None,
        }
    }

    pub fn with_frames(mut self, n_frames: usize) -> Self {
        self.n_frames = n_frames;
        self
    }

    pub fn with_policy(mut self, policy: BehaviorPolicy) -> Self {
        self.behavior_policy = policy;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("deviation span error: {0}")]
    Span(String),
}

/// Everything needed to rebuild the generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub match_id: String,
    pub seed: u64,
    pub phase_bounds: [f64; 2],
    pub initial_behavior: BehaviorClass,
    pub policy: BehaviorPolicy,
    #[serde(default)]
    pub deviations: Vec<DeviationLabel>,
}

impl GroundTruth {
    /// Sidecar framing: line 1 is the header, each further line one label.
    pub fn to_sidecar(&self) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            match_id: &'a str,
            seed: u64,
            phase_bounds: [f64; 2],
            initial_behavior: BehaviorClass,
            policy: &'a BehaviorPolicy,
        }
        let mut out = serde_json::to_string(&Header {
            match_id: &self.match_id,
            seed: self.seed,
            phase_bounds: self.phase_bounds,
            initial_behavior: self.initial_behavior,
            policy: &self.policy,
        })
        .expect("truth header serializes");
        out.push('\n');
        for label in &self.deviations {
            out.push_str(&serde_json::to_string(label).expect("label serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_sidecar(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(Deserialize)]
        struct Header {
            match_id: String,
            seed: u64,
            phase_bounds: [f64; 2],
            initial_behavior: BehaviorClass,
            policy: BehaviorPolicy,
        }
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Header = serde_json::from_str(lines.next().unwrap_or(""))?;
        let deviations = lines
            .map(serde_json::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            match_id: header.match_id,
            seed: header.seed,
            phase_bounds: header.phase_bounds,
            initial_behavior: header.initial_behavior,
            policy: header.policy,
            deviations,
        })
    }
}

const CHAMPION_POOL: &[&str] = &[
    "Aatrox", "Ahri", "Akali", "Alistar", "Ashe", "Azir", "Braum", "Caitlyn", "Corki", "Ezreal",
    "Gnar", "Gragas", "Jarvan", "Jayce", "Jinx", "Kaisa", "KSante", "LeeSin", "Leona", "Lulu",
    "Maokai", "Nautilus", "Orianna", "Rakan", "Renekton", "Sejuani", "Syndra", "Taliyah", "Varus",
    "Vi", "Viego", "Xayah", "Yone", "Zeri",
];
const ITEM_POOL: &[&str] = &[
    "infinity_edge",
    "kraken_slayer",
    "rabadons_deathcap",
    "zhonyas_hourglass",
    "sunfire_aegis",
    "black_cleaver",
    "guardian_angel",
    "luden_companion",
    "trinity_force",
    "locket",
    "mercury_treads",
    "sorcerers_shoes",
    "bloodthirster",
    "thornmail",
    "rylais_scepter",
];
const RUNE_POOL: &[&str] = &[
    "conqueror",
    "lethal_tempo",
    "electrocute",
    "phase_rush",
    "grasp",
    "aftershock",
    "guardian",
    "first_strike",
    "arcane_comet",
    "fleet_footwork",
];
const SKILL_ORDERS: &[&str] = &["q>w>e", "q>e>w", "w>q>e", "e>q>w", "e>w>q", "w>e>q"];

fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

fn mirror(p: Position) -> Position {
    Position::new(1.0 - p.x, 1.0 - p.y)
}

fn sample_row(row: &Row, rng: &mut ChaCha8Rng) -> BehaviorClass {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return BehaviorClass::ALL[i];
        }
    }
    // Rounding slack: fall back to the last class with mass.
    let last = row
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(BEHAVIOR_COUNT - 1);
    BehaviorClass::ALL[last]
}

fn default_script(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Vec<ScriptedEvent> {
    let duration = cfg.n_frames as f64;
    let mut script = Vec::new();
    let drakes = [
        MonsterType::InfernalDrake,
        MonsterType::OceanDrake,
        MonsterType::MountainDrake,
        MonsterType::CloudDrake,
        MonsterType::HextechDrake,
        MonsterType::ChemtechDrake,
    ];
    let team = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            Team::Blue
        } else {
            Team::Red
        }
    };

    let mut t = 180.0 + rng.random_range(0.0..120.0_f64).floor();
    while t < duration {
        let killer_team = team(rng);
        let killer = slot_of(killer_team, Role::ALL[rng.random_range(0..5)]);
        let victim = slot_of(killer_team.opponent(), Role::ALL[rng.random_range(0..5)]);
        let assist = slot_of(killer_team, Role::ALL[rng.random_range(0..5)]);
        let assists = if assist != killer {
            vec![assist]
        } else {
            Vec::new()
        };
        script.push(ScriptedEvent {
            t,
            event: RawEvent::Kill {
                killer,
                victim,
                assists,
            },
        });
        t += 60.0 + rng.random_range(0.0..120.0_f64).floor();
    }
    let mut t = 600.0 + rng.random_range(0.0..240.0_f64).floor();
    while t < duration {
        let lane = [Lane::Top, Lane::Mid, Lane::Bot][rng.random_range(0..3)];
        script.push(ScriptedEvent {
            t,
            event: RawEvent::TurretDestroyed {
                team: team(rng),
                lane,
            },
        });
        t += 150.0 + rng.random_range(0.0..150.0_f64).floor();
    }
    let mut t = 300.0 + rng.random_range(0.0..60.0_f64).floor();
    let mut drake_count = 0;
    while t < duration {
        let monster = if drake_count < 4 {
            drakes[rng.random_range(0..drakes.len())]
        } else {
            MonsterType::ElderDragon
        };
        script.push(ScriptedEvent {
            t,
            event: RawEvent::MonsterKill {
                monster,
                team: team(rng),
            },
        });
        drake_count += 1;
        t += 300.0 + rng.random_range(0.0..30.0_f64).floor();
    }
    for (at, monster) in [
        (840.0, MonsterType::RiftHerald),
        (1260.0, MonsterType::Baron),
        (1860.0, MonsterType::Baron),
    ] {
        let at: f64 = at + rng.random_range(0.0..60.0_f64).floor();
        if at < duration {
            script.push(ScriptedEvent {
                t: at,
                event: RawEvent::MonsterKill {
                    monster,
                    team: team(rng),
                },
            });
        }
    }
    let mut t = 120.0;
    while t < duration {
        script.push(ScriptedEvent {
            t,
            event: RawEvent::MonsterKill {
                monster: MonsterType::JungleCamp,
                team: team(rng),
            },
        });
        t += 90.0;
    }
    script.sort_by(|a, b| a.t.total_cmp(&b.t));
    script
}

struct Walker {
    route: Vec<Position>,
    dwell: Vec<u32>,
    target: usize,
    pos: Position,
    waiting: u32,
}

impl Walker {
    fn new(route: &[Waypoint], mirrored: bool, start: Position) -> Self {
        let map = |p: Position| if mirrored { mirror(p) } else { p };
        Self {
            route: route.iter().map(|w| map(w.pos)).collect(),
            dwell: route.iter().map(|w| w.dwell_s).collect(),
            target: 0,
            pos: map(start),
            waiting: 0,
        }
    }

    fn step(&mut self, speed: f64) {
        if self.route.is_empty() {
            return;
        }
        if self.waiting > 0 {
            self.waiting -= 1;
            return;
        }
        let goal = self.route[self.target];
        let d = self.pos.distance(&goal);
        if d <= speed {
            self.pos = goal;
            self.waiting = self.dwell[self.target];
            self.target = (self.target + 1) % self.route.len();
        } else {
            self.pos.x += (goal.x - self.pos.x) / d * speed;
            self.pos.y += (goal.y - self.pos.y) / d * speed;
        }
    }
}

/// Generates one synthetic match. Pure function of the config.
pub fn generate_match(cfg: &GenConfig) -> Result<(MatchLog, GroundTruth), GenError> {
    if cfg.n_frames < WINDOW_FRAMES + 1 {
        return Err(GenError::Config(format!(
            "n_frames must be at least {}, got {}",
            WINDOW_FRAMES + 1,
            cfg.n_frames
        )));
    }
    cfg.behavior_policy.check()?;
    if !(cfg.movement_policy.jitter >= 0.0 && cfg.movement_policy.jitter.is_finite()) {
        return Err(GenError::Config(
            "jitter must be a finite non-negative number".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let champions: [String; CHAMPIONS_PER_FRAME] = match &cfg.champions {
        Some(c) => c.clone(),
        None => {
            let picks: Vec<&str> = CHAMPION_POOL
                .choose_multiple(&mut rng, CHAMPIONS_PER_FRAME)
                .copied()
                .collect();
            std::array::from_fn(|i| picks[i].to_string())
        }
    };
    let script = match &cfg.event_script {
        Some(s) => {
            let mut s = s.clone();
            s.sort_by(|a, b| a.t.total_cmp(&b.t));
            s
        }
        None => default_script(cfg, &mut rng),
    };

    let roster: Vec<RosterEntry> = (0..CHAMPIONS_PER_FRAME)
        .map(|slot| {
            let team = if slot < 5 { Team::Blue } else { Team::Red };
            let role = role_of_slot(slot);
            RosterEntry {
                slot,
                team,
                role,
                player: format!(
                    "{}_{}",
                    cfg.team_names[team.index()].to_lowercase(),
                    role.name()
                ),
                champion: champions[slot].clone(),
            }
        })
        .collect();

    let jitter = Normal::new(0.0, cfg.movement_policy.jitter.max(f64::MIN_POSITIVE))
        .map_err(|e| GenError::Config(e.to_string()))?;
    let base = Position::new(0.08, 0.92);
    let mut walkers: Vec<Walker> = (0..CHAMPIONS_PER_FRAME)
        .map(|slot| Walker::new(&cfg.movement_policy.routes[slot % 5], slot >= 5, base))
        .collect();

    let rates = &cfg.gold_rates;
    let mut behavior = [cfg.initial_behavior; CHAMPIONS_PER_FRAME];
    let mut gold = [rates.starting_gold; CHAMPIONS_PER_FRAME];
    let mut hp = [1.0f64; CHAMPIONS_PER_FRAME];
    let mut mana = [1.0f64; CHAMPIONS_PER_FRAME];
    let mut behavior_frames = [[0u32; BEHAVIOR_COUNT]; CHAMPIONS_PER_FRAME];
    let mut next_event = 0usize;
    let mut frames = Vec::with_capacity(cfg.n_frames);

    for k in 0..cfg.n_frames {
        let t = k as f64;
        let phase = phase_at(t, cfg.phase_bounds);
        if k > 0 {
            for slot in 0..CHAMPIONS_PER_FRAME {
                let row = cfg.behavior_policy.next_distribution(
                    role_of_slot(slot),
                    phase,
                    behavior[slot],
                    hp[slot],
                );
                behavior[slot] = sample_row(&row, &mut rng);
            }
        }

        let mut raw_events = Vec::new();
        while next_event < script.len() && script[next_event].t <= t {
            let ev = script[next_event].event.clone();
            match &ev {
                RawEvent::Kill { killer, victim, .. } => {
                    gold[*killer] += rates.kill_bounty;
                    hp[*victim] = 1.0;
                }
                RawEvent::TurretDestroyed { team, .. } => {
                    for slot in 0..CHAMPIONS_PER_FRAME {
                        if (slot < 5) == (*team == Team::Blue) {
                            gold[slot] += rates.turret_bounty;
                        }
                    }
                }
                RawEvent::MonsterKill { monster, team } => {
                    if monster.is_epic() {
                        for slot in 0..CHAMPIONS_PER_FRAME {
                            if (slot < 5) == (*team == Team::Blue) {
                                gold[slot] += rates.drake_bounty;
                            }
                        }
                    }
                }
            }
            raw_events.push(ev);
            next_event += 1;
        }

        let mut champions_state = Vec::with_capacity(CHAMPIONS_PER_FRAME);
        for slot in 0..CHAMPIONS_PER_FRAME {
            let role = role_of_slot(slot);
            let b = behavior[slot];
            if k > 0 {
                gold[slot] += rates.per_behavior[role.index()][b.index()] + rates.passive;
                walkers[slot].step(cfg.movement_policy.speed);
            }
            behavior_frames[slot][b.index()] += 1;
            let drain = match b {
                BehaviorClass::Champion => -0.04,
                BehaviorClass::Turret => -0.02,
                BehaviorClass::Resource => -0.015,
                BehaviorClass::Minion => -0.005,
                BehaviorClass::Inaction => 0.03,
            };
            // Stored rounded so the recall rule sees exactly the logged value.
            hp[slot] =
                round4((hp[slot] + drain + rng.random_range(-0.005..0.005)).clamp(0.05, 1.0));
            mana[slot] = (mana[slot]
                + if b == BehaviorClass::Inaction {
                    0.02
                } else {
                    -0.01
                })
            .clamp(0.0, 1.0);
            let path = walkers[slot].pos;
            let pos = Position::new(
                round4((path.x + jitter.sample(&mut rng)).clamp(0.0, 1.0)),
                round4((path.y + jitter.sample(&mut rng)).clamp(0.0, 1.0)),
            );
            champions_state.push(ChampionState {
                champion_id: champions[slot].clone(),
                role,
                team: if slot < 5 { Team::Blue } else { Team::Red },
                hp_norm: hp[slot],
                mana_norm: round4(mana[slot]),
                gold: gold[slot],
                level: (1 + (t / 100.0) as u32).min(18) as u8,
                global_pos: pos,
                local_pos: None,
                behavior: b,
            });
        }
        frames.push(FrameRecord {
            t,
            champions: champions_state,
            raw_events,
        });
    }

    let last = frames.last().expect("n_frames >= 6");
    let blue_gold: u64 = last.champions[..5].iter().map(|c| c.gold).sum();
    let red_gold: u64 = last.champions[5..].iter().map(|c| c.gold).sum();
    let winner = cfg.winner.unwrap_or(if blue_gold >= red_gold {
        Team::Blue
    } else {
        Team::Red
    });

    let summary = synth_summary(cfg, &frames, &behavior_frames, &mut rng);
    let header = MatchHeader {
        schema_version: SCHEMA_VERSION,
        match_id: cfg.match_id.clone(),
        event_name: cfg.event_name.clone(),
        teams: TeamNames {
            blue: cfg.team_names[0].clone(),
            red: cfg.team_names[1].clone(),
        },
        roster,
        winner,
        summary: Some(summary),
    };
    let truth = GroundTruth {
        match_id: cfg.match_id.clone(),
        seed: cfg.seed,
        phase_bounds: cfg.phase_bounds,
        initial_behavior: cfg.initial_behavior,
        policy: cfg.behavior_policy.clone(),
        deviations: Vec::new(),
    };
    Ok((MatchLog { header, frames }, truth))
}

fn synth_summary(
    cfg: &GenConfig,
    frames: &[FrameRecord],
    behavior_frames: &[[u32; BEHAVIOR_COUNT]; CHAMPIONS_PER_FRAME],
    rng: &mut ChaCha8Rng,
) -> MatchSummary {
    let kills: Vec<&RawEvent> = frames
        .iter()
        .flat_map(|f| f.raw_events.iter())
        .filter(|e| matches!(e, RawEvent::Kill { .. }))
        .collect();
    let fights = kills.len() as u32 / 2 + 1;
    let players = (0..CHAMPIONS_PER_FRAME)
        .map(|slot| {
            let counts = behavior_frames[slot];
            let champ_dmg =
                u64::from(counts[BehaviorClass::Champion.index()]) * rng.random_range(150..250u64);
            let other_dmg = u64::from(
                counts[BehaviorClass::Minion.index()]
                    + counts[BehaviorClass::Turret.index()]
                    + counts[BehaviorClass::Resource.index()],
            ) * rng.random_range(80..160u64);
            let taken = u64::from(
                counts[BehaviorClass::Champion.index()] + counts[BehaviorClass::Turret.index()],
            ) * rng.random_range(100..220u64);
            let mut items: Vec<String> = ITEM_POOL
                .choose_multiple(rng, 6)
                .map(|s| s.to_string())
                .collect();
            items.truncate(6);
            let runes: Vec<String> = RUNE_POOL
                .choose_multiple(rng, 3)
                .map(|s| s.to_string())
                .collect();
            let skills = vec![SKILL_ORDERS.choose(rng).expect("non-empty").to_string()];
            PlayerSummary {
                slot,
                damage_to_champions: champ_dmg,
                total_damage: champ_dmg + other_dmg,
                damage_taken: taken,
                teamfights: rng.random_range(0..=fights),
                creep_score: counts[BehaviorClass::Minion.index()] / 2,
                items,
                skills,
                runes,
            }
        })
        .collect();
    MatchSummary {
        duration_s: frames
            .last()
            .map(|f| f.t)
            .unwrap_or(0.0)
            .max(cfg.n_frames as f64 - 1.0),
        teamfights: [fights, fights],
        players,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSpec {
    pub slot: usize,
    /// Inclusive timestamp span.
    pub t0: f64,
    pub t1: f64,
    pub behavior: BehaviorClass,
    pub displacement: Position,
}

/// One changed frame x slot cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationLabel {
    pub deviation: usize,
    pub slot: usize,
    pub frame: usize,
    pub t: f64,
}

/// Overwrites the named cells and returns exactly the cells that changed.
pub fn inject_deviation(
    log: &MatchLog,
    specs: &[DeviationSpec],
) -> Result<(MatchLog, Vec<DeviationLabel>), GenError> {
    let start = log.frames.first().map(|f| f.t).unwrap_or(0.0);
    let end = log.frames.last().map(|f| f.t).unwrap_or(0.0);
    for (i, spec) in specs.iter().enumerate() {
        if spec.slot >= CHAMPIONS_PER_FRAME {
            return Err(GenError::Span(format!(
                "deviation {i}: slot {} out of range",
                spec.slot
            )));
        }
        if !(spec.t0 <= spec.t1) {
            return Err(GenError::Span(format!(
                "deviation {i}: t0 {} > t1 {}",
                spec.t0, spec.t1
            )));
        }
        if spec.t1 > end || spec.t0 < start {
            return Err(GenError::Span(format!(
                "deviation {i}: span [{}, {}] outside match [{start}, {end}]",
                spec.t0, spec.t1
            )));
        }
    }

    let mut out = log.clone();
    let mut changed = BTreeSet::new();
    for (i, spec) in specs.iter().enumerate() {
        for (fi, frame) in out.frames.iter_mut().enumerate() {
            if frame.t < spec.t0 || frame.t > spec.t1 {
                continue;
            }
            let champ = &mut frame.champions[spec.slot];
            champ.behavior = spec.behavior;
            champ.global_pos = Position::new(
                round4((champ.global_pos.x + spec.displacement.x).clamp(0.0, 1.0)),
                round4((champ.global_pos.y + spec.displacement.y).clamp(0.0, 1.0)),
            );
            changed.insert((fi, spec.slot, i));
        }
    }
    let mut labels: Vec<DeviationLabel> = changed
        .into_iter()
        .filter(|(fi, slot, _)| {
            out.frames[*fi].champions[*slot] != log.frames[*fi].champions[*slot]
        })
        .map(|(frame, slot, deviation)| DeviationLabel {
            deviation,
            slot,
            frame,
            t: out.frames[frame].t,
        })
        .collect();
    // A later spec overwriting the same cell owns the label.
    labels.sort_by_key(|l| (l.frame, l.slot, std::cmp::Reverse(l.deviation)));
    labels.dedup_by_key(|l| (l.frame, l.slot));
    labels.sort_by_key(|l| (l.deviation, l.frame, l.slot));
    Ok((out, labels))
}

/// Draws `count` non-overlapping deviation specs whose forced behavior
/// differs from the logged behavior on every frame of the span. Spans stay
/// inside one phase and at least `WINDOW_FRAMES + 1` frames apart per slot.
pub fn plan_deviations(
    log: &MatchLog,
    phase_bounds: [f64; 2],
    count: usize,
    seed: u64,
) -> Vec<DeviationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d0e5);
    let n = log.frames.len();
    let mut taken: Vec<(usize, usize, usize)> = Vec::new();
    let mut specs = Vec::new();
    let mut attempts = 0;
    while specs.len() < count && attempts < 10_000 && n > 2 * WINDOW_FRAMES + 8 {
        attempts += 1;
        let slot = rng.random_range(0..CHAMPIONS_PER_FRAME);
        let len = rng.random_range(3..=6usize);
        let f0 = rng.random_range(WINDOW_FRAMES + 1..n - len - 1);
        let f1 = f0 + len - 1;
        let phase = phase_at(log.frames[f0].t, phase_bounds);
        if phase_at(log.frames[f1].t, phase_bounds) != phase {
            continue;
        }
        let clash = taken.iter().any(|&(s, a, b)| {
            s == slot && f0 <= b + WINDOW_FRAMES + 1 && a <= f1 + WINDOW_FRAMES + 1
        });
        if clash {
            continue;
        }
        let present: BTreeSet<BehaviorClass> = (f0..=f1)
            .map(|fi| log.frames[fi].champions[slot].behavior)
            .collect();
        let candidates: Vec<BehaviorClass> = BehaviorClass::ALL
            .into_iter()
            .filter(|b| !present.contains(b))
            .collect();
        let Some(&behavior) = candidates.choose(&mut rng) else {
            continue;
        };
        taken.push((slot, f0, f1));
        specs.push(DeviationSpec {
            slot,
            t0: log.frames[f0].t,
            t1: log.frames[f1].t,
            behavior,
            displacement: Position::new(
                rng.random_range(-0.05..0.05),
                rng.random_range(-0.05..0.05),
            ),
        });
    }
    specs
}

/// Bayes predictor read straight off the generating policy: the distribution
/// for `(role, phase(t_target))` given the last window frame's behavior and health.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    truth: GroundTruth,
    stats: NormalizationStats,
}

impl OraclePredictor {
    pub fn new(truth: GroundTruth, stats: NormalizationStats) -> Self {
        Self { truth, stats }
    }
}

impl StrategyPredictor for OraclePredictor {
    fn stats(&self) -> Option<&NormalizationStats> {
        Some(&self.stats)
    }

    fn predict(&self, sample: &WindowSample) -> Result<StrategyPrediction, PredictError> {
        let phase = phase_at(sample.t_target, self.truth.phase_bounds);
        let last = &sample.x[WINDOW_FRAMES - 1];
        let champions = std::array::from_fn(|slot| {
            let v = &last[slot];
            let prior = (0..BEHAVIOR_COUNT)
                .max_by(|a, b| v[4 + a].total_cmp(&v[4 + b]).then(b.cmp(a)))
                .and_then(BehaviorClass::from_index)
                .unwrap_or(BehaviorClass::Inaction);
            let probs = self
                .truth
                .policy
                .next_distribution(role_of_slot(slot), phase, prior, v[0]);
            crate::predictor::ChampionPrediction::new(Position::new(v[2], v[3]), probs)
        });
        Ok(StrategyPrediction { champions })
    }
}
