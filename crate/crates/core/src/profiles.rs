//! Historical team and player analytics: radars, carry scores, aggression
//! clustering, champion combos, loadouts and movement heatmaps.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::telemetry::{slot_of, MatchLog, RawEvent, Role, Team, CHAMPIONS_PER_FRAME};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("no matches for the requested team or player")]
    NoMatches,
    #[error("need at least {needed} matches, got {got}")]
    TooFewMatches { needed: usize, got: usize },
    #[error("no loadout data recorded for this player and champion")]
    MissingLoadoutData,
    #[error("match {0} is not part of the selection")]
    UnknownMatch(String),
}

fn side_in(log: &MatchLog, team: &str) -> Option<Team> {
    log.header.teams.side_of(team)
}

fn in_event<'a>(
    matches: &'a [MatchLog],
    event: &'a str,
) -> impl Iterator<Item = &'a MatchLog> + 'a {
    matches.iter().filter(move |m| m.header.event_name == event)
}

/// Min-max across entities; a flat axis maps to 1 for everyone.
fn min_max(value: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((value - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

// ---------------------------------------------------------------- team radar

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamRadar {
    pub damage: f64,
    pub economy: f64,
    pub damage_taken: f64,
    pub first_blood_rate: f64,
    pub tower_pushes: f64,
    pub resource_control: f64,
}

impl TeamRadar {
    pub fn axes(&self) -> [f64; 6] {
        [
            self.damage,
            self.economy,
            self.damage_taken,
            self.first_blood_rate,
            self.tower_pushes,
            self.resource_control,
        ]
    }

    fn from_axes(a: [f64; 6]) -> Self {
        Self {
            damage: a[0],
            economy: a[1],
            damage_taken: a[2],
            first_blood_rate: a[3],
            tower_pushes: a[4],
            resource_control: a[5],
        }
    }
}

/// Per-match raw team numbers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TeamGameStats {
    pub damage: f64,
    pub economy: f64,
    pub damage_taken: f64,
    pub first_blood: bool,
    pub towers: u32,
    pub epics_taken: u32,
    pub epics_total: u32,
    pub kills: u32,
    pub deaths: u32,
    pub assists: u32,
    pub drakes: u32,
}

pub fn team_game_stats(log: &MatchLog, side: Team) -> TeamGameStats {
    let mut s = TeamGameStats::default();
    if let Some(summary) = &log.header.summary {
        for p in summary
            .players
            .iter()
            .filter(|p| crate::telemetry::team_of_slot(p.slot) == side)
        {
            s.damage += p.damage_to_champions as f64;
            s.damage_taken += p.damage_taken as f64;
        }
    }
    s.economy = crate::telemetry::team_gold(log.final_frame(), side) as f64;
    let mut first_blood_seen = false;
    for frame in &log.frames {
        for raw in &frame.raw_events {
            match raw {
                RawEvent::Kill {
                    killer,
                    victim,
                    assists,
                } => {
                    let killer_side = crate::telemetry::team_of_slot(*killer);
                    if !first_blood_seen {
                        first_blood_seen = true;
                        s.first_blood = killer_side == side;
                    }
                    if killer_side == side {
                        s.kills += 1;
                        s.assists += assists.len() as u32;
                    }
                    if crate::telemetry::team_of_slot(*victim) == side {
                        s.deaths += 1;
                    }
                }
                RawEvent::TurretDestroyed { team, .. } => {
                    if *team == side {
                        s.towers += 1;
                    }
                }
                RawEvent::MonsterKill { monster, team } => {
                    if monster.is_epic() {
                        s.epics_total += 1;
                        if *team == side {
                            s.epics_taken += 1;
                            if monster.is_drake() {
                                s.drakes += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    s
}

fn raw_team_axes(games: &[TeamGameStats]) -> [f64; 6] {
    let n = games.len() as f64;
    let taken: u32 = games.iter().map(|g| g.epics_taken).sum();
    let total: u32 = games.iter().map(|g| g.epics_total).sum();
    [
        games.iter().map(|g| g.damage).sum::<f64>() / n,
        games.iter().map(|g| g.economy).sum::<f64>() / n,
        games.iter().map(|g| g.damage_taken).sum::<f64>() / n,
        games.iter().filter(|g| g.first_blood).count() as f64 / n,
        games.iter().map(|g| g.towers as f64).sum::<f64>() / n,
        if total == 0 {
            0.0
        } else {
            taken as f64 / total as f64
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRadarReport {
    pub team: String,
    pub event: String,
    pub matches: usize,
    pub historical: TeamRadar,
    /// The selected match alone, on the event's historical scale.
    pub current: Option<TeamRadar>,
}

/// Six-axis radar for `team` over `event`, min-max normalized across every
/// team that played in the event.
pub fn compute_team_radar(
    matches: &[MatchLog],
    team: &str,
    event: &str,
    current: Option<&str>,
) -> Result<TeamRadarReport, ProfileError> {
    let mut per_team: BTreeMap<String, Vec<TeamGameStats>> = BTreeMap::new();
    for m in in_event(matches, event) {
        for side in [Team::Blue, Team::Red] {
            per_team
                .entry(m.team_name(side).to_string())
                .or_default()
                .push(team_game_stats(m, side));
        }
    }
    let own = per_team.get(team).ok_or(ProfileError::NoMatches)?;
    let raws: BTreeMap<&String, [f64; 6]> = per_team
        .iter()
        .map(|(k, v)| (k, raw_team_axes(v)))
        .collect();
    let mut lo = [f64::INFINITY; 6];
    let mut hi = [f64::NEG_INFINITY; 6];
    for axes in raws.values() {
        for i in 0..6 {
            lo[i] = lo[i].min(axes[i]);
            hi[i] = hi[i].max(axes[i]);
        }
    }
    let scale = |raw: [f64; 6]| {
        TeamRadar::from_axes(std::array::from_fn(|i| min_max(raw[i], lo[i], hi[i])))
    };
    let historical = scale(raw_team_axes(own));

    let current = match current {
        None => None,
        Some(id) => {
            let m = in_event(matches, event)
                .find(|m| m.match_id() == id)
                .ok_or_else(|| ProfileError::UnknownMatch(id.to_string()))?;
            let side =
                side_in(m, team).ok_or_else(|| ProfileError::UnknownMatch(id.to_string()))?;
            Some(scale(raw_team_axes(&[team_game_stats(m, side)])))
        }
    };
    Ok(TeamRadarReport {
        team: team.to_string(),
        event: event.to_string(),
        matches: own.len(),
        historical,
        current,
    })
}

// -------------------------------------------------------------- carry score

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarryScores {
    /// Top..Support.
    pub scores: [f64; 5],
    pub carry: Role,
}

/// Final-frame gold of each role over the team's best-paid role. The first
/// role attaining the maximum is the carry.
pub fn compute_carry_scores(log: &MatchLog, side: Team) -> CarryScores {
    let last = log.final_frame();
    let gold: [u64; 5] = std::array::from_fn(|r| last.champions[slot_of(side, Role::ALL[r])].gold);
    carry_from_gold(gold)
}

pub fn carry_from_gold(gold: [u64; 5]) -> CarryScores {
    let max = gold.iter().copied().max().unwrap_or(0);
    let scores = std::array::from_fn(|r| {
        if max == 0 {
            1.0
        } else {
            gold[r] as f64 / max as f64
        }
    });
    let carry = Role::ALL[gold.iter().position(|g| *g == max).unwrap_or(0)];
    CarryScores { scores, carry }
}

// ------------------------------------------------------------------ k-means

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0x6167_6772,
            max_iterations: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Per-dimension z-scores (population standard deviation; flat dimensions
/// become 0).
pub fn z_score(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if points.is_empty() {
        return Vec::new();
    }
    let d = points[0].len();
    let n = points.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n)
        .collect();
    let std: Vec<f64> = (0..d)
        .map(|j| (points.iter().map(|p| (p[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    points
        .iter()
        .map(|p| {
            (0..d)
                .map(|j| {
                    if std[j] > 0.0 {
                        (p[j] - mean[j]) / std[j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding. Points are processed in a
/// canonical (lexicographic) order so the result does not depend on input
/// order; assignments are reported in input order.
pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult, ProfileError> {
    let n = points.len();
    if n < config.k || config.k == 0 {
        return Err(ProfileError::TooFewMatches {
            needed: config.k.max(1),
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted: Vec<&Vec<f64>> = order.iter().map(|&i| &points[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids: Vec<Vec<f64>> = vec![sorted[rng.random_range(0..n)].clone()];
    while centroids.len() < config.k {
        let d2: Vec<f64> = sorted
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.push(sorted[next].clone());
    }

    let mut assign = vec![0usize; n];
    let mut sse_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..config.max_iterations {
        iterations += 1;
        let mut sse = 0.0;
        for (i, p) in sorted.iter().enumerate() {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(c, cen)| (c, sq_dist(p, cen)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            assign[i] = best;
            sse += d;
        }
        sse_history.push(sse);

        let mut shift: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&&Vec<f64>> = sorted
                .iter()
                .zip(&assign)
                .filter(|(_, a)| **a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let new: Vec<f64> = (0..centroid.len())
                .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
                .collect();
            shift = shift.max(sq_dist(&new, centroid).sqrt());
            *centroid = new;
        }
        if shift < config.tol {
            break;
        }
    }

    let mut assignments = vec![0usize; n];
    for (pos, &orig) in order.iter().enumerate() {
        assignments[orig] = assign[pos];
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        sse_history,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggroAssignment {
    pub label: u8,
    pub score: f64,
}

/// Two-cluster aggression labels over z-scored features. Label 1 is the
/// cluster whose centroid has the larger z-score sum; the score is
/// `1 - d_own / (d_own + d_other)` (0.5 when equidistant).
pub fn cluster_aggro(
    features: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<AggroAssignment>, ProfileError> {
    if features.len() < 2 {
        return Err(ProfileError::TooFewMatches {
            needed: 2,
            got: features.len(),
        });
    }
    let z = z_score(features);
    let config = KMeansConfig {
        seed,
        ..KMeansConfig::default()
    };
    let result = kmeans(&z, &config)?;
    let sums: Vec<f64> = result.centroids.iter().map(|c| c.iter().sum()).collect();
    let aggressive = if sums[1] > sums[0] { 1 } else { 0 };
    Ok(z.iter()
        .zip(&result.assignments)
        .map(|(p, &c)| {
            let own = sq_dist(p, &result.centroids[c]).sqrt();
            let other = sq_dist(p, &result.centroids[1 - c]).sqrt();
            AggroAssignment {
                label: u8::from(c == aggressive),
                score: aggro_score(own, other),
            }
        })
        .collect())
}

pub fn aggro_score(d_own: f64, d_other: f64) -> f64 {
    if d_own + d_other > 0.0 {
        1.0 - d_own / (d_own + d_other)
    } else {
        0.5
    }
}

/// `[KDA, drakes, turrets, team gold]` for one side of a match.
pub fn aggro_features(log: &MatchLog, side: Team) -> Vec<f64> {
    let s = team_game_stats(log, side);
    let kda = (s.kills + s.assists) as f64 / s.deaths.max(1) as f64;
    vec![kda, s.drakes as f64, s.towers as f64, s.economy]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggroResult {
    pub match_id: String,
    pub aggro_label: u8,
    pub aggro_score: f64,
    pub carry: Role,
    pub carry_scores: [f64; 5],
}

/// Clusters every match `team` won in `event`.
pub fn team_aggro(
    matches: &[MatchLog],
    team: &str,
    event: &str,
    seed: u64,
) -> Result<Vec<AggroResult>, ProfileError> {
    let wins: Vec<(&MatchLog, Team)> = in_event(matches, event)
        .filter_map(|m| {
            side_in(m, team)
                .filter(|s| *s == m.header.winner)
                .map(|s| (m, s))
        })
        .collect();
    let features: Vec<Vec<f64>> = wins.iter().map(|(m, s)| aggro_features(m, *s)).collect();
    let labels = cluster_aggro(&features, seed)?;
    Ok(wins
        .iter()
        .zip(labels)
        .map(|((m, s), a)| {
            let carry = compute_carry_scores(m, *s);
            AggroResult {
                match_id: m.match_id().to_string(),
                aggro_label: a.label,
                aggro_score: a.score,
                carry: carry.carry,
                carry_scores: carry.scores,
            }
        })
        .collect())
}

// ------------------------------------------------------------------- combos

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboStat {
    /// Sorted champion names.
    pub champions: Vec<String>,
    pub picks: u32,
    pub wins: u32,
    pub win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboReport {
    pub by_picks: Vec<ComboStat>,
    pub by_win_rate: Vec<ComboStat>,
}

pub const COMBO_MIN_PICKS: u32 = 2;

fn team_picks(log: &MatchLog, side: Team) -> Vec<String> {
    let mut picks: Vec<String> = log
        .header
        .roster
        .iter()
        .filter(|r| r.team == side)
        .map(|r| r.champion.clone())
        .collect();
    picks.sort();
    picks.dedup();
    picks
}

/// Pick and win counts of every 2- and 3-champion subset the team fielded.
pub fn count_combos(matches: &[MatchLog], team: &str) -> BTreeMap<Vec<String>, (u32, u32)> {
    let mut counts: BTreeMap<Vec<String>, (u32, u32)> = BTreeMap::new();
    for m in matches {
        let Some(side) = side_in(m, team) else {
            continue;
        };
        let won = m.header.winner == side;
        let picks = team_picks(m, side);
        let n = picks.len();
        let mut bump = |set: Vec<String>| {
            let e = counts.entry(set).or_default();
            e.0 += 1;
            e.1 += u32::from(won);
        };
        for a in 0..n {
            for b in a + 1..n {
                bump(vec![picks[a].clone(), picks[b].clone()]);
                for c in b + 1..n {
                    bump(vec![picks[a].clone(), picks[b].clone(), picks[c].clone()]);
                }
            }
        }
    }
    counts
}

/// Top `top_n` combos by picks, and by win rate among combos picked at
/// least [`COMBO_MIN_PICKS`] times. Ties fall back to picks, then names.
pub fn mine_combos(matches: &[MatchLog], team: &str, top_n: usize) -> ComboReport {
    let all: Vec<ComboStat> = count_combos(matches, team)
        .into_iter()
        .map(|(champions, (picks, wins))| ComboStat {
            champions,
            picks,
            wins,
            win_rate: wins as f64 / picks as f64,
        })
        .collect();
    let mut by_picks = all.clone();
    by_picks.sort_by(|a, b| {
        b.picks
            .cmp(&a.picks)
            .then(b.win_rate.total_cmp(&a.win_rate))
            .then(a.champions.cmp(&b.champions))
    });
    by_picks.truncate(top_n);
    let mut by_win_rate: Vec<ComboStat> = all
        .into_iter()
        .filter(|c| c.picks >= COMBO_MIN_PICKS)
        .collect();
    by_win_rate.sort_by(|a, b| {
        b.win_rate
            .total_cmp(&a.win_rate)
            .then(b.picks.cmp(&a.picks))
            .then(a.champions.cmp(&b.champions))
    });
    by_win_rate.truncate(top_n);
    ComboReport {
        by_picks,
        by_win_rate,
    }
}

// ------------------------------------------------------------- player radar

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerRadar {
    pub damage_per_min: f64,
    pub damage_taken_per_min: f64,
    pub damage_conversion: f64,
    pub teamfight_participation: f64,
    pub creep_score_per_min: f64,
}

impl PlayerRadar {
    pub fn axes(&self) -> [f64; 5] {
        [
            self.damage_per_min,
            self.damage_taken_per_min,
            self.damage_conversion,
            self.teamfight_participation,
            self.creep_score_per_min,
        ]
    }

    fn from_axes(a: [f64; 5]) -> Self {
        Self {
            damage_per_min: a[0],
            damage_taken_per_min: a[1],
            damage_conversion: a[2],
            teamfight_participation: a[3],
            creep_score_per_min: a[4],
        }
    }
}

/// Raw per-game player numbers from the match summary.
pub fn player_game_axes(log: &MatchLog, slot: usize) -> Option<[f64; 5]> {
    let summary = log.header.summary.as_ref()?;
    let p = log.player_summary(slot)?;
    let minutes = log.duration_s() / 60.0;
    if minutes <= 0.0 {
        return None;
    }
    let team_fights = summary.teamfights[crate::telemetry::team_of_slot(slot).index()];
    Some([
        p.damage_to_champions as f64 / minutes,
        p.damage_taken as f64 / minutes,
        if p.total_damage == 0 {
            0.0
        } else {
            p.damage_to_champions as f64 / p.total_damage as f64
        },
        if team_fights == 0 {
            0.0
        } else {
            (p.teamfights as f64 / team_fights as f64).min(1.0)
        },
        p.creep_score as f64 / minutes,
    ])
}

fn mean_axes<const N: usize>(rows: &[[f64; N]]) -> [f64; N] {
    std::array::from_fn(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRadarReport {
    pub player: String,
    pub champion: String,
    pub role: Role,
    pub matches: usize,
    pub raw: [f64; 5],
    pub historical: PlayerRadar,
    pub current: Option<PlayerRadar>,
}

/// `(match, slot)` pairs where `player` played `champion`.
fn appearances<'a>(
    matches: impl Iterator<Item = &'a MatchLog>,
    player: &str,
    champion: &str,
) -> Vec<(&'a MatchLog, usize)> {
    matches
        .filter_map(|m| {
            m.header
                .roster
                .iter()
                .find(|r| r.player == player && r.champion == champion)
                .map(|r| (m, r.slot))
        })
        .collect()
}

/// Five-axis radar for one player on one champion, min-max normalized
/// across every (player, champion) pairing in the same role at the event.
pub fn compute_player_radar(
    matches: &[MatchLog],
    player: &str,
    champion: &str,
    event: &str,
    current: Option<&str>,
) -> Result<PlayerRadarReport, ProfileError> {
    let own = appearances(in_event(matches, event), player, champion);
    let role = own
        .first()
        .map(|(m, slot)| m.roster_entry(*slot).map(|r| r.role).unwrap_or(Role::Top))
        .ok_or(ProfileError::NoMatches)?;

    let mut per_entity: BTreeMap<(String, String), Vec<[f64; 5]>> = BTreeMap::new();
    for m in in_event(matches, event) {
        for r in m.header.roster.iter().filter(|r| r.role == role) {
            if let Some(axes) = player_game_axes(m, r.slot) {
                per_entity
                    .entry((r.player.clone(), r.champion.clone()))
                    .or_default()
                    .push(axes);
            }
        }
    }
    let own_rows = per_entity
        .get(&(player.to_string(), champion.to_string()))
        .ok_or(ProfileError::NoMatches)?;
    let raw = mean_axes(own_rows);
    let means: Vec<[f64; 5]> = per_entity.values().map(|rows| mean_axes(rows)).collect();
    let lo: [f64; 5] =
        std::array::from_fn(|i| means.iter().map(|m| m[i]).fold(f64::INFINITY, f64::min));
    let hi: [f64; 5] =
        std::array::from_fn(|i| means.iter().map(|m| m[i]).fold(f64::NEG_INFINITY, f64::max));
    let scale =
        |v: [f64; 5]| PlayerRadar::from_axes(std::array::from_fn(|i| min_max(v[i], lo[i], hi[i])));

    let current = match current {
        None => None,
        Some(id) => {
            let (m, slot) = own
                .iter()
                .find(|(m, _)| m.match_id() == id)
                .ok_or_else(|| ProfileError::UnknownMatch(id.to_string()))?;
            player_game_axes(m, *slot).map(scale)
        }
    };
    Ok(PlayerRadarReport {
        player: player.to_string(),
        champion: champion.to_string(),
        role,
        matches: own.len(),
        raw,
        historical: scale(raw),
        current,
    })
}

// ------------------------------------------------------------------ loadout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedChoice {
    pub name: String,
    /// Matches in which it was used.
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loadout {
    pub items: Vec<String>,
    pub skills: Vec<String>,
    pub runes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadoutPreferences {
    pub items: Vec<RankedChoice>,
    pub skills: Vec<RankedChoice>,
    pub runes: Vec<RankedChoice>,
    pub current: Option<Loadout>,
}

/// Frequency ranking over `(first-seen position, name)` lists, one list per
/// match in corpus order. Each name counts once per match; ties go to the
/// name seen first.
pub fn rank_by_frequency<'a>(
    lists: impl IntoIterator<Item = &'a [String]>,
    top: usize,
) -> Vec<RankedChoice> {
    let mut seen: HashMap<&str, (u32, usize)> = HashMap::new();
    let mut position = 0usize;
    for list in lists {
        let mut in_match = BTreeSet::new();
        for name in list {
            position += 1;
            if !in_match.insert(name.as_str()) {
                continue;
            }
            let e = seen.entry(name.as_str()).or_insert((0, position));
            e.0 += 1;
        }
    }
    let mut ranked: Vec<(&str, u32, usize)> = seen
        .into_iter()
        .map(|(n, (c, first))| (n, c, first))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked
        .into_iter()
        .take(top)
        .map(|(name, count, _)| RankedChoice {
            name: name.to_string(),
            count,
        })
        .collect()
}

/// Top-3 items, skills and runes for a player on a champion, counted over
/// the given matches in order (callers pass them chronologically).
pub fn loadout_preferences(
    matches: &[MatchLog],
    player: &str,
    champion: &str,
    current: Option<&str>,
) -> Result<LoadoutPreferences, ProfileError> {
    let own = appearances(matches.iter(), player, champion);
    if own.is_empty() {
        return Err(ProfileError::NoMatches);
    }
    let summaries: Vec<_> = own
        .iter()
        .filter_map(|(m, slot)| m.player_summary(*slot))
        .collect();
    if summaries
        .iter()
        .all(|s| s.items.is_empty() && s.skills.is_empty() && s.runes.is_empty())
    {
        return Err(ProfileError::MissingLoadoutData);
    }
    let current = match current {
        None => None,
        Some(id) => {
            let (m, slot) = own
                .iter()
                .find(|(m, _)| m.match_id() == id)
                .ok_or_else(|| ProfileError::UnknownMatch(id.to_string()))?;
            m.player_summary(*slot).map(|p| Loadout {
                items: p.items.clone(),
                skills: p.skills.clone(),
                runes: p.runes.clone(),
            })
        }
    };
    Ok(LoadoutPreferences {
        items: rank_by_frequency(summaries.iter().map(|s| s.items.as_slice()), 3),
        skills: rank_by_frequency(summaries.iter().map(|s| s.skills.as_slice()), 3),
        runes: rank_by_frequency(summaries.iter().map(|s| s.runes.as_slice()), 3),
        current,
    })
}

// ------------------------------------------------------------------ heatmap

pub const HEATMAP_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid: usize,
    /// Row-major, `counts[ybin * grid + xbin]`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Heatmap {
    pub fn new(grid: usize) -> Self {
        Self {
            grid,
            counts: vec![0; grid * grid],
            total: 0,
        }
    }

    /// `min(floor(v * grid), grid - 1)` per axis, so 1.0 lands in the last bin.
    pub fn bin(&self, v: f64) -> usize {
        ((v.clamp(0.0, 1.0) * self.grid as f64).floor() as usize).min(self.grid - 1)
    }

    pub fn add(&mut self, x: f64, y: f64) {
        let idx = self.bin(y) * self.grid + self.bin(x);
        self.counts[idx] += 1;
        self.total += 1;
    }

    pub fn at(&self, xbin: usize, ybin: usize) -> u64 {
        self.counts[ybin * self.grid + xbin]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovementHeatmaps {
    pub historical: Heatmap,
    pub current: Option<Heatmap>,
}

/// Global-position counts of one player on one champion, every frame.
pub fn movement_heatmap(
    matches: &[MatchLog],
    player: &str,
    champion: &str,
    grid: usize,
    current: Option<&str>,
) -> MovementHeatmaps {
    let mut historical = Heatmap::new(grid);
    let mut current_map = current.map(|_| Heatmap::new(grid));
    for (m, slot) in appearances(matches.iter(), player, champion) {
        let is_current = current == Some(m.match_id());
        for frame in &m.frames {
            let p = frame.champions[slot].global_pos;
            historical.add(p.x, p.y);
            if is_current {
                if let Some(h) = current_map.as_mut() {
                    h.add(p.x, p.y);
                }
            }
        }
    }
    MovementHeatmaps {
        historical,
        current: current_map,
    }
}

// --------------------------------------------------------------- snapshots

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamProfile {
    pub radar: TeamRadarReport,
    pub aggro: Vec<AggroResult>,
    pub combos: ComboReport,
    /// Carry scores for the selected match, if any.
    pub carry: Option<CarryScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub radar: PlayerRadarReport,
    pub loadout: Option<LoadoutPreferences>,
    pub heatmap: MovementHeatmaps,
}

pub const AGGRO_SEED: u64 = 0x6167_6772;
pub const COMBO_TOP_N: usize = 5;

/// Team view data; aggression clustering is omitted when the team has
/// fewer than two wins in the event.
pub fn team_profile(
    matches: &[MatchLog],
    team: &str,
    event: &str,
    current: Option<&str>,
) -> Result<TeamProfile, ProfileError> {
    let radar = compute_team_radar(matches, team, event, current)?;
    let aggro = match team_aggro(matches, team, event, AGGRO_SEED) {
        Ok(a) => a,
        Err(ProfileError::TooFewMatches { .. }) => Vec::new(),
        Err(e) => return Err(e),
    };
    let event_matches: Vec<MatchLog> = in_event(matches, event).cloned().collect();
    let combos = mine_combos(&event_matches, team, COMBO_TOP_N);
    let carry = current
        .and_then(|id| event_matches.iter().find(|m| m.match_id() == id))
        .and_then(|m| side_in(m, team).map(|s| compute_carry_scores(m, s)));
    Ok(TeamProfile {
        radar,
        aggro,
        combos,
        carry,
    })
}

pub fn player_profile(
    matches: &[MatchLog],
    player: &str,
    champion: &str,
    event: &str,
    current: Option<&str>,
) -> Result<PlayerProfile, ProfileError> {
    let radar = compute_player_radar(matches, player, champion, event, current)?;
    let event_matches: Vec<MatchLog> = in_event(matches, event).cloned().collect();
    let loadout = match loadout_preferences(&event_matches, player, champion, current) {
        Ok(l) => Some(l),
        Err(ProfileError::MissingLoadoutData) => None,
        Err(e) => return Err(e),
    };
    let heatmap = movement_heatmap(&event_matches, player, champion, HEATMAP_GRID, current);
    Ok(PlayerProfile {
        radar,
        loadout,
        heatmap,
    })
}

/// Number of distinct teams and players in a corpus, for index pages.
pub fn corpus_entities(matches: &[MatchLog]) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut teams = BTreeSet::new();
    let mut players = BTreeSet::new();
    for m in matches {
        teams.insert(m.header.teams.blue.clone());
        teams.insert(m.header.teams.red.clone());
        for r in &m.header.roster {
            players.insert(r.player.clone());
        }
    }
    debug_assert!(players.len() <= matches.len() * CHAMPIONS_PER_FRAME);
    (teams, players)
}
