use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::ops::{merge_m1, MergePolicy, MergedPackage, OperationMode};
use crate::package::tests::arb_package;
use crate::package::{Modality, Payload, PromptPackage, Schedule, ServiceElement};

fn minimal() -> PromptPackage {
    PromptPackage::new(
        "min",
        "acme",
        vec![ServiceElement::new(
            "e1",
            Modality::Text,
            "object",
            Payload::text("hello"),
        )],
        Schedule::new(0, 1000),
    )
}

fn product(pid: &str, tag: &str, schedule: Schedule) -> PromptPackage {
    PromptPackage::new(
        pid,
        format!("{pid}-corp"),
        vec![ServiceElement::new(
            tag.to_lowercase(),
            Modality::Image,
            "object",
            Payload::text(tag),
        )
        .mandatory(true)
        .feature(tag)],
        schedule,
    )
}

fn merged(packages: &[PromptPackage]) -> MergedPackage {
    merge_m1(packages, &MergePolicy::default()).unwrap()
}

fn narrative_of(flags: usize) -> Narrative {
    Narrative {
        flags: (0..flags)
            .map(|i| NarrativeFlag {
                index: i,
                text: format!("beat {i}"),
                element_refs: vec![],
                time_hint: 0,
            })
            .collect(),
        seed: 0,
    }
}

fn board(index: usize, objects: &[(&str, u8, u8)], timestamp: u64) -> Storyboard {
    Storyboard {
        index,
        objects: objects
            .iter()
            .map(|&(id, x, y)| Placement {
                object_id: id.into(),
                position: GridPos { x, y },
            })
            .collect(),
        background: "seaside".into(),
        style: "noir".into(),
        element_refs: vec![],
        timestamp,
    }
}

#[test]
fn narrative_cites_the_mandatory_element_everywhere() {
    let m = merged(&[product("P1", "G1", Schedule::new(0, 20_000))]);
    let n = generate_narrative(&m, 0).unwrap();
    assert_eq!(n.flags.len(), MIN_FLAGS);
    for f in &n.flags {
        assert!(f.element_refs.iter().any(|r| r.element_id == "g1"), "{f:?}");
    }
    assert_eq!(n, generate_narrative(&m, 0).unwrap());
    let hints: Vec<u64> = n.flags.iter().map(|f| f.time_hint).collect();
    assert_eq!(hints, [0, 6666, 13333]);
}

#[test]
fn merged_ads_reference_both_products() {
    let m = merged(&[
        product("P1", "G1", Schedule::new(0, 20_000)),
        product("P2", "G2", Schedule::new(0, 20_000)),
    ]);
    let n = generate_narrative(&m, 3).unwrap();
    let cited: BTreeSet<&str> = n
        .flags
        .iter()
        .flat_map(|f| f.element_refs.iter().map(|r| r.element_id.as_str()))
        .collect();
    assert_eq!(cited, BTreeSet::from(["g1", "g2"]));
}

#[test]
fn every_element_is_spotlighted() {
    let elements = (0..7)
        .map(|i| {
            ServiceElement::new(
                format!("e{i}"),
                Modality::Text,
                "object",
                Payload::text("x"),
            )
            .feature(format!("F{i}"))
        })
        .collect();
    let m = merged(&[PromptPackage::new(
        "P",
        "p",
        elements,
        Schedule::new(0, 7000),
    )]);
    let n = generate_narrative(&m, 11).unwrap();
    assert_eq!(n.flags.len(), 7);
    let cited: BTreeSet<&str> = n
        .flags
        .iter()
        .flat_map(|f| f.element_refs.iter().map(|r| r.element_id.as_str()))
        .collect();
    assert_eq!(cited.len(), 7);
}

#[test]
fn narrative_of_nothing_is_rejected() {
    let mut m = merged(&[minimal()]);
    m.elements.clear();
    assert_eq!(generate_narrative(&m, 0), Err(CgError::EmptyInput));
}

#[test]
fn half_density_pairs_up_flags() {
    let s = sample_scenes(&narrative_of(6), 0.5, Schedule::new(0, 30_000)).unwrap();
    let ranges: Vec<_> = s.iter().map(|s| s.flag_range).collect();
    assert_eq!(ranges, [(0, 1), (2, 3), (4, 5)]);
    let stamps: Vec<_> = s.iter().map(|s| s.timestamp).collect();
    assert_eq!(stamps, [0, 10_000, 20_000]);
}

#[test]
fn unit_density_is_the_identity_partition() {
    let s = sample_scenes(&narrative_of(5), 1.0, Schedule::new(0, 5000)).unwrap();
    assert!(s.iter().enumerate().all(|(i, s)| s.flag_range == (i, i)));
}

#[test]
fn single_flag_gives_single_sample() {
    for d in [0.01, 1.0, 7.5] {
        assert_eq!(
            sample_scenes(&narrative_of(1), d, Schedule::new(0, 10))
                .unwrap()
                .len(),
            1
        );
    }
    assert_eq!(
        sample_scenes(&narrative_of(3), 0.0, Schedule::new(0, 10)),
        Err(CgError::InvalidDensity(0.0))
    );
}

#[test]
fn sample_count_is_capped_by_runtime_in_ms() {
    let s = sample_scenes(&narrative_of(6), 1.0, Schedule::new(100, 4)).unwrap();
    let stamps: Vec<_> = s.iter().map(|s| s.timestamp).collect();
    assert_eq!(stamps, [100, 101, 102, 103]);
}

#[test]
fn new_object_is_announced_in_the_previous_book() {
    let boards = vec![
        board(0, &[("G1", 1, 1)], 0),
        board(1, &[("G1", 1, 1), ("G2", 5, 6)], 10_000),
        board(2, &[("G2", 2, 2)], 20_000),
    ];
    let books = continuity_books(&boards);
    assert_eq!(
        books[0].entries,
        [
            ContinuityEntry {
                object_id: "G1".into(),
                action: Action::Persists,
                target_position: None,
                linked_storyboard: 0
            },
            ContinuityEntry {
                object_id: "G2".into(),
                action: Action::Enters,
                target_position: Some(GridPos { x: 5, y: 6 }),
                linked_storyboard: 1
            },
        ]
    );
    assert_eq!(
        books[1].entries,
        [
            ContinuityEntry {
                object_id: "G1".into(),
                action: Action::Exits,
                target_position: None,
                linked_storyboard: 1
            },
            ContinuityEntry {
                object_id: "G2".into(),
                action: Action::Moves,
                target_position: Some(GridPos { x: 2, y: 2 }),
                linked_storyboard: 2
            },
        ]
    );
    assert!(books[2]
        .entries
        .iter()
        .all(|e| e.action == Action::Persists));
}

#[test]
fn single_storyboard_has_no_forward_links() {
    let books = continuity_books(&[board(0, &[("A", 0, 0), ("B", 1, 1)], 0)]);
    assert!(books[0]
        .entries
        .iter()
        .all(|e| e.action == Action::Persists && e.linked_storyboard == 0));
}

#[test]
fn unchanged_object_sets_need_no_transitions() {
    let boards: Vec<_> = (0..4)
        .map(|i| board(i, &[("A", 0, 0), ("B", 3, 3)], i as u64 * 10))
        .collect();
    for book in continuity_books(&boards) {
        assert!(book
            .entries
            .iter()
            .all(|e| !matches!(e.action, Action::Enters | Action::Exits)));
    }
}

#[test]
fn three_storyboards_split_the_runtime_evenly() {
    let boards: Vec<_> = (0..3).map(|i| board(i, &[], i as u64 * 10_000)).collect();
    let ivs = bss_intervals(&boards, Schedule::new(0, 30_000));
    assert_eq!(
        ivs,
        [
            Interval::new(0, 10_000),
            Interval::new(10_000, 20_000),
            Interval::new(20_000, 30_000)
        ]
    );
}

#[test]
fn descriptors_follow_the_storyboard() {
    let a = board(0, &[("A", 1, 2)], 0);
    let iv = Interval::new(0, 1000);
    assert_eq!(
        render_bss(&a, iv, 5).descriptor,
        render_bss(&a.clone(), iv, 5).descriptor
    );
    let mut b = a.clone();
    b.style = "comedy".into();
    assert_ne!(
        render_bss(&a, iv, 5).descriptor,
        render_bss(&b, iv, 5).descriptor
    );
    assert_ne!(
        render_bss(&a, iv, 5).descriptor,
        render_bss(&a, iv, 6).descriptor
    );
}

#[test]
fn ten_seconds_at_24_fps() {
    let s = board(0, &[("G1", 1, 1)], 0);
    let b = render_bss(&s, Interval::new(0, 10_000), 0);
    let book = ContinuityBook {
        index: 0,
        entries: vec![ContinuityEntry {
            object_id: "G2".into(),
            action: Action::Enters,
            target_position: Some(GridPos { x: 3, y: 3 }),
            linked_storyboard: 1,
        }],
    };
    let seq = compose_frames(&b, &s, &book, 24).unwrap();
    assert_eq!(seq.frames.len(), 240);
    let times: Vec<u64> = seq.frames[..4].iter().map(|f| f.time).collect();
    assert_eq!(times, [0, 41, 83, 125]);
    assert_eq!(seq.frames[239].time, 9958);
    let with_g2 = seq
        .frames
        .iter()
        .filter(|f| f.visible_objects.contains("G2"))
        .count();
    assert_eq!(with_g2, 48);
    assert!(seq.frames[192..]
        .iter()
        .all(|f| f.motion_note == "entering G2"));
    assert!(!seq.frames[191].visible_objects.contains("G2"));
}

#[test]
fn persisting_book_shows_exactly_the_storyboard() {
    let s = board(0, &[("A", 0, 0), ("B", 1, 1)], 0);
    let b = render_bss(&s, Interval::new(0, 2000), 0);
    let book = continuity_books(std::slice::from_ref(&s)).remove(0);
    let seq = compose_frames(&b, &s, &book, 24).unwrap();
    let expected: BTreeSet<String> = ["A".to_string(), "B".to_string()].into();
    assert!(seq
        .frames
        .iter()
        .all(|f| f.visible_objects == expected && f.motion_note == "steady"));
    assert_eq!(
        compose_frames(&b, &s, &book, 0),
        Err(CgError::InvalidFps(0))
    );
}

#[test]
fn minimal_content_is_deterministic() {
    let opts = GenerateOptions::default();
    let a = generate_content(&[minimal()], OperationMode::SingleSource, 7, &opts).unwrap();
    let b = generate_content(&[minimal()], OperationMode::SingleSource, 7, &opts).unwrap();
    assert_eq!(content_hash(&a), content_hash(&b));
    assert_eq!(a, b);
    assert!(
        check_invariants(&a).is_empty(),
        "{:?}",
        check_invariants(&a)
    );
}

#[test]
fn hundred_seeds_give_hundred_distinct_frame_sequences() {
    let opts = GenerateOptions::default();
    let mut seen = BTreeSet::new();
    for seed in 0..100 {
        let c = generate_content(&[minimal()], OperationMode::SingleSource, seed, &opts).unwrap();
        assert!(check_invariants(&c).is_empty());
        assert!(
            seen.insert(frame_sequence_hash(&c)),
            "collision at seed {seed}"
        );
    }
}

#[test]
fn single_source_needs_exactly_one_package() {
    let two = [minimal(), product("P2", "G2", Schedule::new(0, 1000))];
    assert!(matches!(
        generate_content(
            &two,
            OperationMode::SingleSource,
            0,
            &GenerateOptions::default()
        ),
        Err(CgError::Ops(_))
    ));
}

#[test]
fn backtrack_maps_time_to_indices() {
    let p = product("P1", "G1", Schedule::new(0, 30_000));
    let c = generate_content(
        &[p],
        OperationMode::SingleSource,
        0,
        &GenerateOptions::default(),
    )
    .unwrap();
    assert_eq!(c.bss_list.len(), 3);
    assert_eq!(backtrack(&c, 0), Ok((0, 0, 0)));
    assert_eq!(backtrack(&c, 15_000), Ok((1, 1, 1)));
    assert_eq!(backtrack(&c, 29_999), Ok((2, 2, 2)));
    assert_eq!(
        backtrack(&c, 30_000),
        Err(CgError::OutOfRange {
            t: 30_000,
            start: 0,
            end: 30_000
        })
    );
}

#[test]
fn trace_is_stable_json() {
    let c = generate_content(
        &[minimal()],
        OperationMode::SingleSource,
        1,
        &GenerateOptions::default(),
    )
    .unwrap();
    let json = ContentTrace::new(&c).to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["mode"], "SingleSource");
    assert_eq!(v["frames"][0]["frame_count"], 7);
    assert_eq!(json, ContentTrace::new(&c).to_json());
}

fn arb_inputs() -> impl Strategy<Value = (Vec<PromptPackage>, u64, f64)> {
    (
        prop::collection::vec(arb_package(6), 1..4),
        any::<u64>(),
        prop::sample::select(vec![0.3, 0.5, 1.0, 2.0]),
    )
        .prop_map(|(mut ps, seed, density)| {
            for (i, p) in ps.iter_mut().enumerate() {
                p.package_id = format!("P{i}");
            }
            (ps, seed, density)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_content_is_well_formed((ps, seed, density) in arb_inputs()) {
        let opts = GenerateOptions { density, ..GenerateOptions::default() };
        let c = generate_content(&ps, OperationMode::MultiSync, seed, &opts).unwrap();
        let v = check_invariants(&c);
        prop_assert!(v.is_empty(), "{:?}", v);
        prop_assert_eq!(content_hash(&c), content_hash(
            &generate_content(&ps, OperationMode::MultiSync, seed, &opts).unwrap()));
    }

    #[test]
    fn backtrack_agrees_with_linear_scan((ps, seed, _d) in arb_inputs(), probe in 0u64..300_000) {
        let c = generate_content(&ps, OperationMode::MultiSync, seed, &GenerateOptions::default())
            .unwrap();
        let scan = c.bss_list.iter().position(|b| b.presentation_interval.contains(probe));
        match (backtrack(&c, probe), scan) {
            (Ok((b, s, k)), Some(i)) => prop_assert!(b == i && s == i && k == i),
            (Err(CgError::OutOfRange { .. }), None) => {}
            (got, want) => prop_assert!(false, "backtrack {:?} vs scan {:?}", got, want),
        }
    }
}
