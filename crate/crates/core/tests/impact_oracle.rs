use stratincon_core::events::{PriorityEvent, PriorityEventKind};
use stratincon_core::fixtures::small_match;
use stratincon_core::inconsistency::{
    compute_impact, impact_table, InconsistencyRecord, RecordKind,
};
use stratincon_core::telemetry::{
    gold_diff_series, role_of_slot, team_of_slot, BehaviorClass, MatchLog, Position, Team,
};

/// 60 frames at t = 1..=60 with irregular scripted income and a few lump
/// payouts, so the lead changes sign several times.
fn scripted_log() -> MatchLog {
    let mut log = small_match(60);
    let mut gold = [500u64; 10];
    for (k, frame) in log.frames.iter_mut().enumerate() {
        for (slot, g) in gold.iter_mut().enumerate() {
            *g += ((slot * 7 + k * 13) % 50) as u64;
            if k == 17 && slot < 5 {
                *g += 250;
            }
            if k == 31 && slot >= 5 {
                *g += 150;
            }
            if k == 44 && slot == 8 {
                *g += 300;
            }
        }
        for (slot, champ) in frame.champions.iter_mut().enumerate() {
            champ.gold = gold[slot];
        }
    }
    log
}

/// Team lead read straight from the frames: last frame at or before `t`,
/// slots 0..5 are blue.
fn brute_lead(log: &MatchLog, team: Team, t: f64) -> i64 {
    let frame = log
        .frames
        .iter()
        .rev()
        .find(|f| f.t <= t)
        .expect("t inside the match");
    let mut blue = 0i64;
    let mut red = 0i64;
    for slot in 0..10 {
        let g = frame.champions[slot].gold as i64;
        if slot < 5 {
            blue += g;
        } else {
            red += g;
        }
    }
    if team == Team::Blue {
        blue - red
    } else {
        red - blue
    }
}

fn record(slot: usize, t: f64) -> InconsistencyRecord {
    InconsistencyRecord {
        id: format!("r{slot}-{t}"),
        kind: RecordKind::Behavior,
        slot,
        team: team_of_slot(slot),
        role: role_of_slot(slot),
        t_start: t,
        t_end: t,
        frame_start: t as usize - 1,
        frame_end: t as usize - 1,
        observed_behavior: BehaviorClass::Inaction,
        predicted_top3: Vec::new(),
        predicted_coords: Position::default(),
        observed_coords: Position::default(),
        coord_discrepancy: 0.0,
    }
}

fn event(kind: PriorityEventKind, t: f64) -> PriorityEvent {
    PriorityEvent {
        id: format!("{}@{t}", kind.name()),
        kind,
        t,
        credited_team: Team::Red,
        detail: None,
    }
}

#[test]
fn impact_equals_brute_force_for_every_pair() {
    let log = scripted_log();
    let series = gold_diff_series(&log, Team::Blue);
    let records: Vec<_> = [
        (0, 3.0),
        (2, 9.5),
        (7, 12.0),
        (4, 18.0),
        (9, 25.0),
        (3, 40.0),
        (6, 47.0),
        (1, 58.0),
    ]
    .into_iter()
    .map(|(s, t)| record(s, t))
    .collect();
    let events = [
        event(PriorityEventKind::FirstBlood, 10.0),
        event(PriorityEventKind::DrakeOcean, 32.0),
        event(PriorityEventKind::Baron, 45.5),
        event(PriorityEventKind::ElderDragon, 60.0),
    ];
    let mut checked = 0;
    for e in &events {
        for r in &records {
            let got = compute_impact(r, e, &series);
            if e.t <= r.t_start {
                assert!(got.is_err());
                continue;
            }
            let want = (brute_lead(&log, r.team, e.t) - brute_lead(&log, r.team, r.t_start))
                .unsigned_abs();
            assert_eq!(got.unwrap(), want, "record {} event {}", r.id, e.id);
            checked += 1;
        }
    }
    assert!(checked >= 15);
}

#[test]
fn lump_payout_is_exact() {
    // Frame index 17 (t = 18) pays every blue member 250 on top of income.
    let log = scripted_log();
    let series = gold_diff_series(&log, Team::Blue);
    let r = record(1, 17.0);
    let e = event(PriorityEventKind::FirstTower, 18.0);
    let income: i64 = (0..10)
        .map(|slot| {
            let inc = ((slot * 7 + 17 * 13) % 50) as i64;
            if slot < 5 {
                inc
            } else {
                -inc
            }
        })
        .sum();
    assert_eq!(
        compute_impact(&r, &e, &series).unwrap(),
        (1250 + income).unsigned_abs()
    );
}

#[test]
fn normalized_impacts_are_bounded_with_unit_max() {
    let log = scripted_log();
    let series = gold_diff_series(&log, Team::Blue);
    let records: Vec<_> = (0..10).map(|s| record(s, 2.0 + 5.0 * s as f64)).collect();
    for t in [20.0, 33.0, 51.0, 60.0] {
        let e = event(PriorityEventKind::Baron, t);
        let table = impact_table(&records, &e, &series);
        let eligible = records.iter().filter(|r| r.t_start < t).count();
        assert_eq!(table.len(), eligible);
        assert!(table.iter().all(|s| (0.0..=1.0).contains(&s.normalized)));
        let max_raw = table.iter().map(|s| s.raw_delta).max().unwrap();
        assert!(max_raw > 0);
        assert!(table.iter().any(|s| s.normalized == 1.0));
        for s in &table {
            assert_eq!(s.normalized, s.raw_delta as f64 / max_raw as f64);
        }
    }
}

#[test]
fn flat_series_normalizes_to_zero() {
    let mut log = small_match(20);
    for frame in &mut log.frames {
        for champ in &mut frame.champions {
            champ.gold = 1_000;
        }
    }
    let series = gold_diff_series(&log, Team::Blue);
    let table = impact_table(
        &[record(0, 3.0), record(6, 5.0)],
        &event(PriorityEventKind::Baron, 15.0),
        &series,
    );
    assert_eq!(table.len(), 2);
    assert!(table
        .iter()
        .all(|s| s.raw_delta == 0 && s.normalized == 0.0));
}
