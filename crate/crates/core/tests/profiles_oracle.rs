use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use stratincon_core::fixtures::small_match;
use stratincon_core::matchgen::{generate_match, GenConfig};
use stratincon_core::profiles::{
    cluster_aggro, compute_player_radar, compute_team_radar, count_combos, loadout_preferences,
    mine_combos, movement_heatmap, rank_by_frequency, Heatmap, COMBO_MIN_PICKS, HEATMAP_GRID,
};
use stratincon_core::telemetry::{MatchLog, MatchSummary, PlayerSummary, RawEvent, Team};

const EVENT: &str = "CUP";

// ------------------------------------------------------------ radar sheet

/// Per-match inputs for one side: per-player damage, per-player final gold,
/// per-player damage taken, turrets destroyed, mid-laner teamfights and cs.
struct Side {
    team: &'static str,
    mid: (&'static str, &'static str),
    dmg: u64,
    gold: u64,
    taken: u64,
    towers: usize,
    mid_fights: u32,
    mid_cs: u32,
}

/// `first_kill_by_blue` decides first blood; `epics` lists (team, is_drake).
fn sheet_match(
    id: &str,
    blue: Side,
    red: Side,
    first_kill_by_blue: bool,
    epics: &[(Team, bool)],
) -> MatchLog {
    let mut log = small_match(12);
    log.header.match_id = id.to_string();
    log.header.event_name = EVENT.to_string();
    log.header.teams.blue = blue.team.to_string();
    log.header.teams.red = red.team.to_string();
    let sides = [&blue, &red];
    for entry in &mut log.header.roster {
        let side = sides[entry.slot / 5];
        entry.player = format!("{}_{}", side.team.to_lowercase(), entry.role.name());
        if entry.slot % 5 == 2 {
            entry.player = side.mid.0.to_string();
            entry.champion = side.mid.1.to_string();
        }
    }
    for frame in &mut log.frames {
        for (slot, champ) in frame.champions.iter_mut().enumerate() {
            champ.gold = sides[slot / 5].gold;
            champ.champion_id = log.header.roster[slot].champion.clone();
        }
    }
    log.header.summary = Some(MatchSummary {
        duration_s: 600.0,
        teamfights: [10, 10],
        players: (0..10)
            .map(|slot| {
                let side = sides[slot / 5];
                let mid = slot % 5 == 2;
                PlayerSummary {
                    slot,
                    damage_to_champions: side.dmg,
                    total_damage: 10_000,
                    damage_taken: side.taken,
                    teamfights: if mid { side.mid_fights } else { 5 },
                    creep_score: if mid { side.mid_cs } else { 100 },
                    items: Vec::new(),
                    skills: Vec::new(),
                    runes: Vec::new(),
                }
            })
            .collect(),
    });
    let killer = if first_kill_by_blue { 0 } else { 5 };
    log.frames[2].raw_events.push(RawEvent::Kill {
        killer,
        victim: 9 - killer,
        assists: vec![],
    });
    log.frames[4].raw_events.push(RawEvent::Kill {
        killer: 9 - killer,
        victim: killer,
        assists: vec![],
    });
    for (i, side) in sides.iter().enumerate() {
        let team = if i == 0 { Team::Blue } else { Team::Red };
        for _ in 0..side.towers {
            log.frames[6].raw_events.push(RawEvent::TurretDestroyed {
                team,
                lane: stratincon_core::telemetry::Lane::Mid,
            });
        }
    }
    for &(team, drake) in epics {
        let monster = if drake {
            stratincon_core::telemetry::MonsterType::OceanDrake
        } else {
            stratincon_core::telemetry::MonsterType::Baron
        };
        log.frames[8]
            .raw_events
            .push(RawEvent::MonsterKill { monster, team });
    }
    log
}

fn side(
    team: &'static str,
    mid: (&'static str, &'static str),
    dmg: u64,
    gold: u64,
    taken: u64,
    towers: usize,
    fights: u32,
    cs: u32,
) -> Side {
    Side {
        team,
        mid,
        dmg,
        gold,
        taken,
        towers,
        mid_fights: fights,
        mid_cs: cs,
    }
}

const A_MID: (&str, &str) = ("a_mid", "Azir");
const B_MID: (&str, &str) = ("b_mid", "Orianna");
const C_MID: (&str, &str) = ("c_mid", "Syndra");

/// Three teams, each playing two matches in the event, plus one match in a
/// different event that must be ignored.
fn sheet() -> Vec<MatchLog> {
    vec![
        sheet_match(
            "m1",
            side("A", A_MID, 1000, 1000, 100, 2, 5, 200),
            side("B", B_MID, 2000, 2000, 300, 0, 8, 250),
            true,
            &[(Team::Blue, false), (Team::Red, true)],
        ),
        sheet_match(
            "m2",
            side("B", B_MID, 3000, 3000, 500, 1, 2, 250),
            side("C", C_MID, 1000, 1000, 100, 3, 6, 100),
            false,
            &[(Team::Blue, true), (Team::Blue, true)],
        ),
        sheet_match(
            "m3",
            side("C", C_MID, 4000, 2000, 300, 0, 4, 500),
            side("A", A_MID, 2000, 4000, 200, 1, 10, 300),
            false,
            &[(Team::Blue, false), (Team::Red, true), (Team::Red, false)],
        ),
        {
            let mut other = sheet_match(
                "x1",
                side("A", A_MID, 90_000, 90_000, 90_000, 9, 10, 900),
                side("B", B_MID, 1, 1, 1, 0, 0, 1),
                true,
                &[],
            );
            other.header.event_name = "OTHER".into();
            other
        },
    ]
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn team_radar_matches_sheet() {
    // Team means over their two games (damage and economy are team totals):
    //          damage  economy  taken  fb    towers  epics
    //   A      7500    12500    750    1.0   1.5     3/5
    //   B      12500   12500    2000   0.0   0.5     3/4
    //   C      12500   7500     1000   0.5   1.5     1/5
    let expected = [
        ("A", [0.0, 1.0, 0.0, 1.0, 1.0, (0.6 - 0.2) / 0.55]),
        ("B", [1.0, 1.0, 1.0, 0.0, 0.0, 1.0]),
        ("C", [1.0, 0.0, 0.2, 0.5, 1.0, 0.0]),
    ];
    let logs = sheet();
    for (team, want) in expected {
        let report = compute_team_radar(&logs, team, EVENT, None).unwrap();
        assert_eq!(report.matches, 2);
        let got = report.historical.axes();
        for i in 0..6 {
            assert!(
                close(got[i], want[i]),
                "team {team} axis {i}: {} vs {}",
                got[i],
                want[i]
            );
        }
    }
}

#[test]
fn team_radar_current_match_uses_event_scale() {
    // A in m1 alone: damage 5000, economy 5000, taken 500 all fall below the
    // event minimum; first blood 1; two towers exceed the max; epics 1/2.
    let report = compute_team_radar(&sheet(), "A", EVENT, Some("m1")).unwrap();
    let got = report.current.unwrap().axes();
    let want = [0.0, 0.0, 0.0, 1.0, 1.0, (0.5 - 0.2) / 0.55];
    for i in 0..6 {
        assert!(
            close(got[i], want[i]),
            "axis {i}: {} vs {}",
            got[i],
            want[i]
        );
    }
}

#[test]
fn every_team_axis_in_unit_interval_with_a_one() {
    let logs = sheet();
    let radars: Vec<[f64; 6]> = ["A", "B", "C"]
        .iter()
        .map(|t| {
            compute_team_radar(&logs, t, EVENT, None)
                .unwrap()
                .historical
                .axes()
        })
        .collect();
    for axis in 0..6 {
        assert!(radars.iter().all(|r| (0.0..=1.0).contains(&r[axis])));
        assert!(radars.iter().any(|r| r[axis] == 1.0), "axis {axis}");
    }
}

#[test]
fn player_radar_matches_sheet() {
    // Per-minute numbers over 10-minute games, averaged per player:
    //           dpm   taken/min  conversion  teamfights  cs/min
    //   a_mid   150   15         0.15        0.75        25
    //   b_mid   250   40         0.25        0.50        25
    //   c_mid   250   20         0.25        0.50        30
    let logs = sheet();
    let a = compute_player_radar(&logs, "a_mid", "Azir", EVENT, None).unwrap();
    assert_eq!(a.matches, 2);
    let raw_want = [150.0, 15.0, 0.15, 0.75, 25.0];
    for i in 0..5 {
        assert!(
            close(a.raw[i], raw_want[i]),
            "raw {i}: {} vs {}",
            a.raw[i],
            raw_want[i]
        );
    }
    let a_want = [0.0, 0.0, 0.0, 1.0, 0.0];
    let b = compute_player_radar(&logs, "b_mid", "Orianna", EVENT, Some("m2")).unwrap();
    let b_want = [1.0, 1.0, 1.0, 0.0, 0.0];
    for i in 0..5 {
        assert!(close(a.historical.axes()[i], a_want[i]), "a axis {i}");
        assert!(close(b.historical.axes()[i], b_want[i]), "b axis {i}");
    }
    // b_mid in m2: dpm 300, taken 50, conversion 0.3, fights 0.2, cs 25.
    let cur = b.current.unwrap().axes();
    assert_eq!(cur, [1.0, 1.0, 1.0, 0.0, 0.0]);
}

// ----------------------------------------------------------------- combos

fn combo_corpus() -> Vec<MatchLog> {
    const POOL: [&str; 7] = [
        "Ahri", "Braum", "Corki", "Draven", "Ezreal", "Fiora", "Galio",
    ];
    const OTHERS: [&str; 5] = ["Lux", "Nami", "Sion", "Vi", "Zed"];
    (0..10u64)
        .map(|i| {
            let skip = [(i % 7) as usize, ((i * 3 + 1) % 7) as usize];
            let mut own: Vec<&str> = POOL
                .iter()
                .enumerate()
                .filter(|(j, _)| !skip.contains(j))
                .map(|(_, c)| *c)
                .collect();
            own.truncate(5);
            let alpha_blue = i % 3 != 0;
            let mut cfg = GenConfig::new(500 + i).with_frames(20);
            cfg.match_id = format!("combo-{i}");
            cfg.team_names = if alpha_blue {
                ["ALPHA".into(), "OMEGA".into()]
            } else {
                ["OMEGA".into(), "ALPHA".into()]
            };
            let alpha_side = if alpha_blue { Team::Blue } else { Team::Red };
            cfg.winner = Some(if i % 4 == 1 {
                alpha_side.opponent()
            } else {
                alpha_side
            });
            let (blue, red) = if alpha_blue {
                (own.clone(), OTHERS.to_vec())
            } else {
                (OTHERS.to_vec(), own.clone())
            };
            let picks: Vec<String> = blue
                .iter()
                .chain(red.iter())
                .map(|s| s.to_string())
                .collect();
            cfg.champions = Some(picks.try_into().unwrap());
            generate_match(&cfg).unwrap().0
        })
        .collect()
}

/// Every 2- and 3-subset of the team's five picks via bitmasks.
fn brute_combos(matches: &[MatchLog], team: &str) -> BTreeMap<Vec<String>, (u32, u32)> {
    let mut out: BTreeMap<Vec<String>, (u32, u32)> = BTreeMap::new();
    for m in matches {
        let side = if m.header.teams.blue == team {
            Team::Blue
        } else if m.header.teams.red == team {
            Team::Red
        } else {
            continue;
        };
        let picks: Vec<String> = m
            .header
            .roster
            .iter()
            .filter(|r| r.team == side)
            .map(|r| r.champion.clone())
            .collect();
        for mask in 0u32..32 {
            let size = mask.count_ones();
            if size != 2 && size != 3 {
                continue;
            }
            let mut set: Vec<String> = (0..5)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| picks[b].clone())
                .collect();
            set.sort();
            let e = out.entry(set).or_default();
            e.0 += 1;
            e.1 += u32::from(m.header.winner == side);
        }
    }
    out
}

#[test]
fn combo_counts_equal_brute_force() {
    let corpus = combo_corpus();
    let brute = brute_combos(&corpus, "ALPHA");
    assert_eq!(count_combos(&corpus, "ALPHA"), brute);
    assert!(brute.values().any(|(p, _)| *p >= 3));
    assert_eq!(
        count_combos(&corpus, "OMEGA"),
        brute_combos(&corpus, "OMEGA")
    );
}

#[test]
fn mined_rankings_follow_brute_force_order() {
    let corpus = combo_corpus();
    let brute = brute_combos(&corpus, "ALPHA");
    let report = mine_combos(&corpus, "ALPHA", 5);

    let mut by_picks: Vec<(&Vec<String>, u32, f64)> = brute
        .iter()
        .map(|(k, (p, w))| (k, *p, *w as f64 / *p as f64))
        .collect();
    by_picks.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.total_cmp(&a.2)).then(a.0.cmp(b.0)));
    let want: Vec<&Vec<String>> = by_picks.iter().take(5).map(|c| c.0).collect();
    let got: Vec<&Vec<String>> = report.by_picks.iter().map(|c| &c.champions).collect();
    assert_eq!(got, want);

    let mut by_rate: Vec<(&Vec<String>, u32, f64)> = by_picks
        .into_iter()
        .filter(|c| c.1 >= COMBO_MIN_PICKS)
        .collect();
    by_rate.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(b.0)));
    let want: Vec<&Vec<String>> = by_rate.iter().take(5).map(|c| c.0).collect();
    let got: Vec<&Vec<String>> = report.by_win_rate.iter().map(|c| &c.champions).collect();
    assert_eq!(got, want);
    assert!(report
        .by_win_rate
        .iter()
        .all(|c| c.picks >= COMBO_MIN_PICKS));
}

// ---------------------------------------------------------------- k-means

#[test]
fn kmeans_recovers_separated_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for i in 0..40 {
        let high = i % 2 == 0;
        let center = if high {
            [8.0, 3.0, 4.0, 20_000.0]
        } else {
            [2.0, 0.0, 1.0, 14_000.0]
        };
        let scale = [1.0, 1.0, 1.0, 500.0];
        points.push(
            (0..4)
                .map(|d| center[d] + scale[d] * noise.sample(&mut rng))
                .collect::<Vec<f64>>(),
        );
        truth.push(u8::from(high));
    }
    for seed in [0, 1, 42, 0x6167_6772] {
        let labels = cluster_aggro(&points, seed).unwrap();
        let got: Vec<u8> = labels.iter().map(|a| a.label).collect();
        // The z-sum rule fixes the orientation, so no swap is needed.
        assert_eq!(got, truth, "seed {seed}");
        assert!(labels.iter().all(|a| a.score > 0.5 && a.score <= 1.0));
    }
}

// --------------------------------------------------------------- loadout

#[test]
fn loadout_ties_break_by_first_appearance() {
    let lists: Vec<Vec<String>> = vec![
        vec!["X".into(), "Y".into(), "Z".into()],
        vec!["Y".into(), "X".into(), "W".into()],
        vec!["W".into(), "Z".into(), "X".into(), "X".into()],
    ];
    let ranked = rank_by_frequency(lists.iter().map(|l| l.as_slice()), 3);
    let names: Vec<&str> = ranked.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["X", "Y", "Z"]);
    assert_eq!(
        ranked.iter().map(|r| r.count).collect::<Vec<_>>(),
        [3, 2, 2]
    );
}

#[test]
fn loadout_counts_each_match_once() {
    let mut logs = sheet();
    for (i, log) in logs.iter_mut().enumerate() {
        let p = &mut log.header.summary.as_mut().unwrap().players[2];
        p.items = match i {
            0 => vec!["Ludens".into(), "Ludens".into(), "Ludens".into()],
            1 => vec!["Seraph".into(), "Boots".into()],
            _ => vec!["Boots".into(), "Seraph".into(), "Zhonya".into()],
        };
        p.runes = vec!["Electrocute".into()];
    }
    // a_mid is slot 2 only in m1 (blue); in m3 they play red mid (slot 7).
    logs[2].header.summary.as_mut().unwrap().players[7].items =
        vec!["Zhonya".into(), "Ludens".into()];
    let prefs = loadout_preferences(&logs[..3], "a_mid", "Azir", Some("m3")).unwrap();
    let items: Vec<(&str, u32)> = prefs
        .items
        .iter()
        .map(|r| (r.name.as_str(), r.count))
        .collect();
    assert_eq!(items, [("Ludens", 2), ("Zhonya", 1)]);
    assert_eq!(prefs.current.unwrap().items, ["Zhonya", "Ludens"]);
}

// ---------------------------------------------------------------- heatmap

#[test]
fn heatmap_conserves_mass_and_is_uniform_under_uniform_input() {
    const N: u64 = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let u = Uniform::new(0.0, 1.0).unwrap();
    let mut h = Heatmap::new(HEATMAP_GRID);
    for _ in 0..N {
        h.add(u.sample(&mut rng), u.sample(&mut rng));
    }
    assert_eq!(h.total, N);
    assert_eq!(h.counts.iter().sum::<u64>(), N);

    let cells = (HEATMAP_GRID * HEATMAP_GRID) as f64;
    let expected = N as f64 / cells;
    let chi2: f64 = h
        .counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = cells - 1.0;
    // Chi-square with k dof has mean k and sd sqrt(2k); allow 5 sd.
    assert!(
        (chi2 - dof).abs() < 5.0 * (2.0 * dof).sqrt(),
        "chi2 {chi2} dof {dof}"
    );
}

#[test]
fn heatmap_edges_land_in_boundary_bins() {
    let mut h = Heatmap::new(4);
    h.add(0.0, 0.0);
    h.add(1.0, 1.0);
    h.add(0.25, 0.999);
    assert_eq!(h.at(0, 0), 1);
    assert_eq!(h.at(3, 3), 1);
    assert_eq!(h.at(1, 3), 1);
    assert_eq!(h.total, 3);
}

#[test]
fn movement_heatmap_counts_every_frame() {
    let logs = sheet();
    let maps = movement_heatmap(&logs[..3], "b_mid", "Orianna", HEATMAP_GRID, Some("m2"));
    assert_eq!(maps.historical.total, 24);
    assert_eq!(maps.historical.counts.iter().sum::<u64>(), 24);
    assert_eq!(maps.current.unwrap().total, 12);
}
