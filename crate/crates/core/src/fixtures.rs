//! Hand-built logs and models shared by unit tests, integration tests and
//! the demo workspace.

use crate::predictor::{
    build_windows, LstmParams, PredictorModel, StrategyPredictor, TrainConfig, TARGET_FEATURES,
};
use crate::telemetry::{
    role_of_slot, team_of_slot, BehaviorClass, ChampionState, FrameRecord, Lane, MatchHeader,
    MatchLog, MatchSummary, MonsterType, NormalizationStats, PlayerSummary, Position, RawEvent,
    Role, RosterEntry, Team, TeamNames, CHAMPIONS_PER_FRAME, FRAME_FEATURES, SCHEMA_VERSION,
};

pub const BLUE_CHAMPIONS: [&str; 5] = ["Aatrox", "Sejuani", "Azir", "Varus", "Rell"];
pub const RED_CHAMPIONS: [&str; 5] = ["Gnar", "Vi", "Orianna", "Kalista", "Nautilus"];

fn champion_name(slot: usize) -> &'static str {
    if slot < 5 {
        BLUE_CHAMPIONS[slot]
    } else {
        RED_CHAMPIONS[slot - 5]
    }
}

fn player_name(slot: usize) -> String {
    let team = if slot < 5 { "alpha" } else { "bravo" };
    format!("{team}_{}", role_of_slot(slot).name())
}

fn roster() -> Vec<RosterEntry> {
    (0..CHAMPIONS_PER_FRAME)
        .map(|slot| RosterEntry {
            slot,
            team: team_of_slot(slot),
            role: role_of_slot(slot),
            player: player_name(slot),
            champion: champion_name(slot).to_string(),
        })
        .collect()
}

fn header(match_id: &str, summary: Option<MatchSummary>) -> MatchHeader {
    MatchHeader {
        schema_version: SCHEMA_VERSION,
        match_id: match_id.to_string(),
        event_name: "SYNTHETIC-CUP".to_string(),
        teams: TeamNames {
            blue: "ALPHA".to_string(),
            red: "BRAVO".to_string(),
        },
        roster: roster(),
        winner: Team::Blue,
        summary,
    }
}

fn champion(
    slot: usize,
    hp: f64,
    gold: u64,
    pos: Position,
    behavior: BehaviorClass,
) -> ChampionState {
    ChampionState {
        champion_id: champion_name(slot).to_string(),
        role: role_of_slot(slot),
        team: team_of_slot(slot),
        hp_norm: hp,
        mana_norm: 0.8,
        gold,
        level: 3,
        global_pos: pos,
        local_pos: None,
        behavior,
    }
}

fn summary(duration_s: f64) -> MatchSummary {
    MatchSummary {
        duration_s,
        teamfights: [4, 3],
        players: (0..CHAMPIONS_PER_FRAME)
            .map(|slot| PlayerSummary {
                slot,
                damage_to_champions: 8_000 + 1_000 * slot as u64,
                total_damage: 40_000 + 2_000 * slot as u64,
                damage_taken: 12_000 + 500 * slot as u64,
                teamfights: 3,
                creep_score: 150 + 10 * slot as u32,
                items: vec!["Boots".into(), format!("Item{slot}"), "Ward".into()],
                skills: vec!["Q".into(), "W".into(), "E".into()],
                runes: vec!["Conqueror".into(), "Triumph".into()],
            })
            .collect(),
    }
}

/// `n` one-second frames starting at t = 1 with slowly rising gold, drifting
/// positions and a rotating behavior per slot. Passes validation.
pub fn small_match(n: usize) -> MatchLog {
    let frames = (0..n)
        .map(|k| FrameRecord {
            t: k as f64 + 1.0,
            champions: (0..CHAMPIONS_PER_FRAME)
                .map(|slot| {
                    let drift = 0.01 * (k % 10) as f64;
                    champion(
                        slot,
                        1.0 - 0.05 * (k % 4) as f64,
                        400 + 10 * slot as u64 + 30 * k as u64,
                        Position::new(
                            0.05 + 0.08 * slot as f64 + drift,
                            0.9 - 0.08 * slot as f64 - drift,
                        ),
                        BehaviorClass::ALL[(slot + k) % 5],
                    )
                })
                .collect(),
            raw_events: Vec::new(),
        })
        .collect();
    MatchLog {
        header: header("fixture-small", Some(summary(n as f64))),
        frames,
    }
}

/// Slot of the inconsistent player in [`case_study`].
pub const CASE_SLOT: usize = 2;
/// First frame where the mid laner stops fighting (09:26).
pub const CASE_T_INCONSISTENT: f64 = 566.0;
/// The red team's Hextech drake.
pub const CASE_T_DRAKE: f64 = 590.0;
/// Probability of the preferred behavior at [`CASE_T_INCONSISTENT`].
pub const CASE_PROBABILITY: f64 = 0.97;

/// A short mid-game stretch (09:00 to 10:20). Blue mid fights from 09:23,
/// loses health throughout, and goes idle at 09:26 while the model still
/// prefers Champion. Red takes a Hextech drake at 09:50; blue bot holds the
/// most gold.
pub fn case_study_match() -> MatchLog {
    let t0 = 540u64;
    let t_end = 620u64;
    let mut gold: [u64; CHAMPIONS_PER_FRAME] = [
        3_400, 3_100, 3_500, 4_600, 2_300, 3_300, 3_200, 3_600, 4_100, 2_200,
    ];
    let mut frames = Vec::new();
    for t in t0..=t_end {
        let mut raw_events = Vec::new();
        // Base income.
        for (slot, g) in gold.iter_mut().enumerate() {
            *g += if role_of_slot(slot) == Role::Bot {
                4
            } else {
                2
            };
        }
        if t == 550 {
            raw_events.push(RawEvent::Kill {
                killer: 7,
                victim: 0,
                assists: vec![6],
            });
            gold[7] += 300;
        }
        if t == 575 {
            raw_events.push(RawEvent::TurretDestroyed {
                team: Team::Blue,
                lane: Lane::Bot,
            });
            for g in &mut gold[0..5] {
                *g += 250;
            }
        }
        if t == CASE_T_DRAKE as u64 {
            raw_events.push(RawEvent::MonsterKill {
                monster: MonsterType::HextechDrake,
                team: Team::Red,
            });
            for g in &mut gold[5..10] {
                *g += 150;
            }
        }

        let champions = (0..CHAMPIONS_PER_FRAME)
            .map(|slot| {
                let base = 0.2 + 0.12 * role_of_slot(slot).index() as f64;
                let wobble = 0.005 * ((t + slot as u64) % 4) as f64;
                let blue_pos = Position::new(base + wobble, 1.0 - base - wobble);
                let pos = if slot < 5 {
                    blue_pos
                } else {
                    Position::new(1.0 - blue_pos.x, 1.0 - blue_pos.y)
                };
                if slot == CASE_SLOT {
                    return case_mid_state(t as f64, gold[slot]);
                }
                champion(slot, 0.9, gold[slot], pos, BehaviorClass::Minion)
            })
            .collect();
        frames.push(FrameRecord {
            t: t as f64,
            champions,
            raw_events,
        });
    }
    MatchLog {
        header: header("case-0926", Some(summary(t_end as f64))),
        frames,
    }
}

fn case_mid_state(t: f64, gold: u64) -> ChampionState {
    // Health drops over the fight and recovers slowly after it.
    let hp = if t <= 560.0 {
        0.95
    } else if t <= 565.0 {
        0.95 - 0.1 * (t - 560.0)
    } else {
        (0.45 + 0.01 * (t - 565.0)).min(0.95)
    };
    // Mid pushes toward the river during the skirmish.
    let x = if t <= 560.0 {
        0.44
    } else if t <= 565.0 {
        0.44 + 0.03 * (t - 560.0)
    } else {
        0.59
    };
    let behavior = if t < 563.0 {
        BehaviorClass::Minion
    } else if t < CASE_T_INCONSISTENT {
        BehaviorClass::Champion
    } else {
        BehaviorClass::Inaction
    };
    champion(CASE_SLOT, hp, gold, Position::new(x, 0.56), behavior)
}

/// Handcrafted four-unit LSTM over the mid laner's features. Each hidden
/// unit integrates one input (health, gold, x, Champion one-hot) with the
/// input and output gates held open and forget gate at one half; only the
/// mid laner's Champion logit reads the hidden state. The head bias is
/// solved so that P(Champion) is exactly [`CASE_PROBABILITY`] for the
/// window ending just before 09:26.
pub fn case_study_model(log: &MatchLog) -> PredictorModel {
    const HIDDEN: usize = 4;
    const GAIN: f64 = 0.5;
    const OPEN: f64 = 12.0;
    let stats = NormalizationStats::from_logs([log]).expect("non-empty fixture");
    let mut params = LstmParams::zeros(HIDDEN);
    let base = CASE_SLOT * FRAME_FEATURES;
    let inputs = [
        base,
        base + 1,
        base + 2,
        base + 4 + BehaviorClass::Champion.index(),
    ];
    for (unit, row) in inputs.into_iter().enumerate() {
        params.w_x[[row, 2 * HIDDEN + unit]] = GAIN;
        params.b[unit] = OPEN;
        params.b[3 * HIDDEN + unit] = OPEN;
    }
    let logit = CASE_SLOT * TARGET_FEATURES + 2 + BehaviorClass::Champion.index();
    // Health and fighting support Champion; a gold lead argues against it.
    for (unit, weight) in [3.0, -3.0, 3.0, 6.0].into_iter().enumerate() {
        params.head_w[[unit, logit]] = weight;
    }

    let mut model = PredictorModel {
        params,
        stats: Some(stats),
        config: TrainConfig {
            hidden_size: HIDDEN,
            ..TrainConfig::default()
        },
    };
    let window = build_windows(log, &stats, 2.0)
        .into_iter()
        .find(|w| w.t_target == CASE_T_INCONSISTENT)
        .expect("fixture has a window ending at the inconsistency");
    let p = model.predict(&window).expect("valid window").champions[CASE_SLOT].behavior_probs
        [BehaviorClass::Champion.index()];
    // With the other four logits at zero, p = e^L / (e^L + 4).
    let current = (4.0 * p / (1.0 - p)).ln();
    let wanted = (4.0 * CASE_PROBABILITY / (1.0 - CASE_PROBABILITY)).ln();
    model.params.head_b[logit] = wanted - current;
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{parse_match_log, serialize_match_log, validate_match_log};

    #[test]
    fn fixtures_are_valid() {
        for log in [small_match(30), case_study_match()] {
            assert!(
                validate_match_log(&log).is_clean(),
                "{:?}",
                validate_match_log(&log)
            );
            assert_eq!(
                parse_match_log(serialize_match_log(&log).as_bytes()).unwrap(),
                log
            );
        }
    }

    #[test]
    fn case_model_hits_target_probability() {
        let log = case_study_match();
        let model = case_study_model(&log);
        let w = build_windows(&log, model.stats.as_ref().unwrap(), 2.0)
            .into_iter()
            .find(|w| w.t_target == CASE_T_INCONSISTENT)
            .unwrap();
        let pred = model.predict(&w).unwrap();
        let mid = &pred.champions[CASE_SLOT];
        assert_eq!(mid.top1().behavior, BehaviorClass::Champion);
        assert!((mid.top1().prob - CASE_PROBABILITY).abs() < 1e-9);
        assert_eq!(w.observed_behavior(CASE_SLOT), BehaviorClass::Inaction);
    }

    #[test]
    fn bot_has_most_blue_gold() {
        let log = case_study_match();
        let last = log.final_frame();
        let bot = last.champions[3].gold;
        assert!(last.champions[..5].iter().all(|c| c.gold <= bot));
    }
}
