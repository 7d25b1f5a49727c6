//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Random inputs come from fixed ChaCha seeds, so every run sees the same
//! cases. Oracles here are written independently of the library code.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pdm_cli::targeted::bundled_ad_packages;
use pdm_cli::{targeted_ad_assemble, ATTRIBUTES};
use pdm_core::cg::{
    check_invariants, frame_sequence_hash, generate_content, Action, GenerateOptions,
    GeneratedContent,
};
use pdm_core::netsim::builtin::{self, AD_SCENARIOS};
use pdm_core::netsim::{baseline_bytes, run_scenario, traffic_report, SimulationTrace};
use pdm_core::ops::{merge_m1, plan_timeline_at, MergePolicy, OperationMode};
use pdm_core::package::{
    decode_package, encode_package, select_top_k, Modality, PackageFile, Payload, PromptPackage,
    Schedule, ServiceElement, EXCLUSIVE_ROLES,
};
use pdm_core::semdesc::{
    compile_to_script, graph_wire_size, import_mpeg7, NodeKind, SemanticGraph, SemanticNode,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn scenario_trace(name: &str) -> Result<SimulationTrace, String> {
    let s = builtin::load(name)
        .ok_or_else(|| format!("no bundled scenario {name}"))?
        .map_err(|e| format!("{name}: {e}"))?;
    run_scenario(&s).map_err(|e| format!("{name}: {e}"))
}

fn set(v: &[&str]) -> BTreeSet<String> {
    v.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------- generators

fn word(rng: &mut ChaCha8Rng, alphabet: &[u8], len: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.random_range(len);
    (0..n)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
        .collect()
}

const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const LOWER_DIGIT: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const UPPER_DIGIT: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const ALNUM: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
const ROLES: [&str; 4] = ["object", "background", "style", "narrative-hint"];

fn random_element(rng: &mut ChaCha8Rng) -> ServiceElement {
    let modality = Modality::ALL[rng.random_range(0..Modality::ALL.len())];
    let payload = match modality {
        Modality::Semantics => {
            let id = word(rng, LOWER, 1..=5);
            Payload::Graph(SemanticGraph::new(
                vec![SemanticNode::new(id.clone(), NodeKind::Object, id)],
                vec![],
                vec![],
            ))
        }
        Modality::Metadata => {
            let n = rng.random_range(0..16);
            Payload::Bytes((0..n).map(|_| rng.random()).collect())
        }
        _ => {
            let n = rng.random_range(1..64);
            Payload::Bytes((0..n).map(|_| rng.random()).collect())
        }
    };
    ServiceElement::new(
        word(rng, LOWER_DIGIT, 1..=6),
        modality,
        ROLES[rng.random_range(0..ROLES.len())],
        payload,
    )
    .priority(rng.random_range(0..10))
    .mandatory(rng.random())
    .feature(word(rng, UPPER_DIGIT, 0..=3))
}

fn random_package(rng: &mut ChaCha8Rng, max_elements: usize) -> PromptPackage {
    let n = rng.random_range(1..=max_elements);
    let mut elements: Vec<ServiceElement> = (0..n).map(|_| random_element(rng)).collect();
    elements.sort_by(|a, b| a.element_id.cmp(&b.element_id));
    elements.dedup_by(|a, b| a.element_id == b.element_id);
    let mut p = PromptPackage::new(
        word(rng, ALNUM, 1..=8),
        word(rng, LOWER, 1..=6),
        elements,
        Schedule::new(rng.random_range(0..100_000), rng.random_range(1..100_000)),
    );
    p.version = rng.random_range(0..5);
    p
}

/// A product package showing one object per feature tag.
fn product(id: &str, provider: &str, tags: &[String], start: u64, duration: u64) -> PromptPackage {
    let elements = tags
        .iter()
        .map(|t| {
            ServiceElement::new(
                t.to_lowercase(),
                Modality::Image,
                "object",
                Payload::text(t),
            )
            .mandatory(true)
            .feature(t.clone())
        })
        .collect();
    PromptPackage::new(id, provider, elements, Schedule::new(start, duration))
}

// ------------------------------------------------------------------- oracles

/// Exhaustive search over one winner per exclusive role, minimizing the
/// summed priority with the tie-break key as the lexicographic fallback.
fn brute_force_merge(packages: &[PromptPackage], k: usize) -> BTreeSet<(String, String)> {
    type Key = (u32, String, String, String);
    let mut pool: Vec<(Key, String)> = Vec::new();
    let mut plain = BTreeSet::new();
    for p in packages {
        for e in select_top_k(p, k).package.elements {
            if EXCLUSIVE_ROLES.contains(&e.role.as_str()) {
                let key = (
                    e.priority,
                    p.provider_id.clone(),
                    p.package_id.clone(),
                    e.element_id.clone(),
                );
                pool.push((key, e.role.clone()));
            } else {
                plain.insert((p.package_id.clone(), e.element_id));
            }
        }
    }
    let per_role: Vec<Vec<&Key>> = EXCLUSIVE_ROLES
        .iter()
        .map(|role| {
            pool.iter()
                .filter(|(_, r)| r == role)
                .map(|(k, _)| k)
                .collect()
        })
        .filter(|v: &Vec<&Key>| !v.is_empty())
        .collect();
    let mut best: Option<(u64, Vec<&Key>)> = None;
    let mut idx = vec![0usize; per_role.len()];
    loop {
        let pick: Vec<&Key> = idx.iter().zip(&per_role).map(|(&i, v)| v[i]).collect();
        let total = pick.iter().map(|k| k.0 as u64).sum::<u64>();
        if best.as_ref().is_none_or(|(t, b)| (total, &pick) < (*t, b)) {
            best = Some((total, pick));
        }
        let mut d = 0;
        while d < idx.len() {
            idx[d] += 1;
            if idx[d] < per_role[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == idx.len() {
            break;
        }
    }
    if let Some((_, pick)) = best {
        plain.extend(pick.into_iter().map(|k| (k.2.clone(), k.3.clone())));
    }
    plain
}

type Segment = (u64, u64, String, Vec<String>);

/// Segments found by scanning every millisecond.
fn dense_oracle(ps: &[PromptPackage]) -> Vec<Segment> {
    let end = ps.iter().map(|p| p.schedule.end()).max().unwrap_or(0);
    let mut out: Vec<Segment> = Vec::new();
    let mut prev: Option<Vec<&PromptPackage>> = None;
    for t in 0..end {
        let mut here: Vec<&PromptPackage> = ps.iter().filter(|p| p.schedule.contains(t)).collect();
        here.sort_by_key(|p| {
            (
                p.schedule.start,
                p.provider_id.clone(),
                p.package_id.clone(),
            )
        });
        let same = prev.as_ref().is_some_and(|p| {
            p.iter()
                .map(|x| &x.package_id)
                .eq(here.iter().map(|x| &x.package_id))
        });
        if same && !here.is_empty() {
            out.last_mut().unwrap().1 = t + 1;
        } else if !here.is_empty() {
            out.push((
                t,
                t + 1,
                here[0].package_id.clone(),
                here[1..].iter().map(|p| p.package_id.clone()).collect(),
            ));
        }
        prev = Some(here);
    }
    out
}

/// Every object new in storyboard n+1 of the same unit must be announced
/// by an Enters entry in book n and shown in every tail frame of bss n.
fn entering_objects_are_announced(c: &GeneratedContent) -> Result<usize, String> {
    let unit_starts: BTreeSet<usize> = c.units.iter().map(|u| u.first_storyboard).collect();
    let mut checked = 0;
    for n in 0..c.storyboards.len().saturating_sub(1) {
        if unit_starts.contains(&(n + 1)) {
            continue;
        }
        let here: BTreeSet<&str> = c.storyboards[n]
            .objects
            .iter()
            .map(|p| p.object_id.as_str())
            .collect();
        let frames = &c.frames[n].frames;
        let tail = (frames.len() * 20).div_ceil(100);
        for p in &c.storyboards[n + 1].objects {
            if here.contains(p.object_id.as_str()) {
                continue;
            }
            checked += 1;
            let announced = c.continuity_books[n].entries.iter().any(|e| {
                e.object_id == p.object_id
                    && e.action == Action::Enters
                    && e.linked_storyboard == n + 1
                    && e.target_position == Some(p.position)
            });
            ensure(announced, || {
                format!(
                    "seed {}: {} enters storyboard {} unannounced",
                    c.seed,
                    p.object_id,
                    n + 1
                )
            })?;
            let shown = tail > 0
                && frames[frames.len() - tail..]
                    .iter()
                    .all(|f| f.visible_objects.contains(&p.object_id));
            ensure(shown, || {
                format!(
                    "seed {}: {} missing from the tail of bss {n}",
                    c.seed, p.object_id
                )
            })?;
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------- criteria

fn c1_g1g2_phases() -> Result<(), String> {
    let start = Instant::now();
    let t = scenario_trace("g1g2")?;
    let elapsed = start.elapsed();
    let a = t.agents.first().ok_or("no agent")?;
    let features: Vec<BTreeSet<String>> =
        a.phases.iter().map(|p| p.frame_features.clone()).collect();
    let mains: Vec<&str> = a.phases.iter().map(|p| p.main.as_str()).collect();
    ensure(
        features == [set(&["G1"]), set(&["G1", "G2"]), set(&["G2"])],
        || format!("phase features {features:?}"),
    )?;
    ensure(mains == ["P1", "P1", "P2"], || format!("mains {mains:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })
}

fn c2_coverage_traverse() -> Result<(), String> {
    let t = scenario_trace("coverage-traverse")?;
    let a = t.agents.first().ok_or("no agent")?;
    let want = [
        set(&["A", "B", "C"]),
        set(&["C", "D"]),
        set(&["A", "E", "F"]),
    ];
    let zones: Vec<&BTreeSet<String>> = a
        .transitions
        .iter()
        .map(|z| &z.visible)
        .filter(|v| !v.is_empty())
        .collect();
    ensure(zones.iter().copied().eq(want.iter()), || {
        format!("zones {zones:?}")
    })?;
    let visible: Vec<&BTreeSet<String>> = a.phases.iter().map(|p| &p.visible).collect();
    ensure(visible.iter().copied().eq(want.iter()), || {
        format!("phases {visible:?}")
    })?;
    for p in &a.phases {
        ensure(p.frame_features == p.visible, || {
            format!(
                "{}: frames show {:?}, visible {:?}",
                p.interval, p.frame_features, p.visible
            )
        })?;
    }
    Ok(())
}

fn c3_traffic() -> Result<(), String> {
    let b = baseline_bytes(10_000_000, 30_000);
    ensure(b == 37_500_000, || format!("baseline {b}"))?;
    let r = traffic_report(&scenario_trace("g1g2")?);
    ensure(r.baseline_bytes == 37_500_000, || {
        format!("g1g2 baseline {}", r.baseline_bytes)
    })?;
    ensure(r.model_transfer_bytes == 23_200_000_000, || {
        format!("model {}", r.model_transfer_bytes)
    })?;
    ensure(
        (20_000_000_000..=25_000_000_000).contains(&r.model_transfer_bytes),
        || "model outside 20-25 GB".into(),
    )?;
    for name in AD_SCENARIOS {
        let r = traffic_report(&scenario_trace(name)?);
        ensure(!r.degenerate && r.ratio < 0.005, || {
            format!("{name}: ratio {} degenerate {}", r.ratio, r.degenerate)
        })?;
    }
    Ok(())
}

fn c4_package_round_trip() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let p = random_package(&mut rng, 8);
        let bytes = encode_package(&p);
        let back = decode_package(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == p, || {
            format!("case {case}: decoded package differs")
        })?;
        let mut shuffled = p.clone();
        shuffled.elements.shuffle(&mut rng);
        ensure(encode_package(&shuffled) == bytes, || {
            format!("case {case}: element order changes the encoding")
        })?;
    }
    Ok(())
}

fn c5_merge() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let n = rng.random_range(1..5);
        let ps: Vec<PromptPackage> = (0..n)
            .map(|i| {
                let mut p = random_package(&mut rng, 12);
                p.package_id = format!("P{i}");
                p
            })
            .collect();
        let k = rng.random_range(1..10);
        let m = merge_m1(&ps, &MergePolicy::with_k(k)).map_err(|e| format!("case {case}: {e}"))?;
        let got: BTreeSet<(String, String)> = m
            .elements
            .iter()
            .map(|e| (e.origin.clone(), e.element.element_id.clone()))
            .collect();
        ensure(got == brute_force_merge(&ps, k), || {
            format!("case {case}: differs from search")
        })?;
        let mut shuffled = ps.clone();
        shuffled.shuffle(&mut rng);
        let again = merge_m1(&shuffled, &MergePolicy::with_k(k)).map_err(|e| e.to_string())?;
        ensure(again == m, || {
            format!("case {case}: input order changes the merge")
        })?;
    }
    Ok(())
}

fn c6_timeline() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..500 {
        let n = rng.random_range(1..=6);
        let ps: Vec<PromptPackage> = (0..n)
            .map(|i| {
                let tag = vec![format!("F{i}")];
                let prov = format!("prov{}", rng.random_range(0..3));
                let start = rng.random_range(0..80);
                let duration = rng.random_range(1..60);
                product(&format!("P{i}"), &prov, &tag, start, duration)
            })
            .collect();
        let t = plan_timeline_at(&ps, &[], 0).map_err(|e| format!("case {case}: {e}"))?;
        let got: Vec<Segment> = t
            .segments
            .iter()
            .map(|s| {
                (
                    s.interval.start,
                    s.interval.end,
                    s.main_id.clone(),
                    s.sub_ids.clone(),
                )
            })
            .collect();
        ensure(got == dense_oracle(&ps), || format!("case {case}: {got:?}"))?;
        let endpoints: BTreeSet<u64> = ps
            .iter()
            .flat_map(|p| [p.schedule.start, p.schedule.end()])
            .collect();
        for s in &t.segments {
            ensure(
                endpoints.contains(&s.interval.start) && endpoints.contains(&s.interval.end),
                || format!("case {case}: boundary of {} is not an endpoint", s.interval),
            )?;
        }
    }
    Ok(())
}

fn c7_determinism() -> Result<(), String> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let load = |name: &str| -> Result<PromptPackage, String> {
        let text = std::fs::read_to_string(data.join(name)).map_err(|e| e.to_string())?;
        PackageFile::from_json(&text)
            .and_then(PackageFile::into_package)
            .map_err(|e| e.to_string())
    };
    let ps = [load("g1.json")?, load("g2.json")?];
    let opts = GenerateOptions::default();
    let mut hashes = BTreeSet::new();
    for seed in 0..100 {
        let run = || generate_content(&ps, OperationMode::MultiAsync, seed, &opts);
        let a = run().map_err(|e| format!("seed {seed}: {e}"))?;
        let b = run().map_err(|e| format!("seed {seed}: {e}"))?;
        let h = frame_sequence_hash(&a);
        ensure(a == b && h == frame_sequence_hash(&b), || {
            format!("seed {seed}: re-run differs")
        })?;
        let bad = check_invariants(&a);
        ensure(bad.is_empty(), || format!("seed {seed}: {bad:?}"))?;
        hashes.insert(h);
    }
    ensure(hashes.len() == 100, || {
        format!("{} distinct frame hashes", hashes.len())
    })
}

fn c8_continuity() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=3);
        let ps: Vec<PromptPackage> = (0..n)
            .map(|i| {
                let tags: Vec<String> = (0..rng.random_range(1..=5))
                    .map(|j| format!("O{i}x{j}"))
                    .collect();
                let start = rng.random_range(0..20) * 1000;
                let duration = rng.random_range(5..30) * 1000;
                let mut p = product(
                    &format!("P{i}"),
                    &format!("prov{i}"),
                    &tags,
                    start,
                    duration,
                );
                // optional elements are only cited when spotlighted, so objects come and go
                for e in &mut p.elements {
                    e.mandatory = rng.random_ratio(1, 4);
                }
                p
            })
            .collect();
        let mode = if n == 1 && rng.random() {
            OperationMode::SingleSource
        } else if rng.random() {
            OperationMode::MultiSync
        } else {
            OperationMode::MultiAsync
        };
        let opts = GenerateOptions {
            density: rng.random_range(1.0..4.0),
            ..GenerateOptions::default()
        };
        let c = generate_content(&ps, mode, rng.random(), &opts)
            .map_err(|e| format!("case {case}: {e}"))?;
        checked += entering_objects_are_announced(&c).map_err(|e| format!("case {case}: {e}"))?;
    }
    ensure(checked > 0, || "no object ever entered".into())
}

fn c9_semdesc() -> Result<(), String> {
    let dir = core_dir().join("fixtures/semdesc");
    let concert = std::fs::read(dir.join("concert.xml")).map_err(|e| e.to_string())?;
    let g = import_mpeg7(&concert).map_err(|e| e.to_string())?;
    let ids: Vec<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    ensure(ids == ["Concert", "ConcertHall", "PianistYim"], || {
        format!("nodes {ids:?}")
    })?;
    let triples: BTreeSet<(&str, &str, &str)> = g
        .relations
        .iter()
        .map(|r| (r.source.as_str(), r.relation.as_str(), r.target.as_str()))
        .collect();
    let want: BTreeSet<(&str, &str, &str)> = [
        ("Concert", "performedBy", "PianistYim"),
        ("Concert", "setting", "ConcertHall"),
        ("PianistYim", "hasPerformed", "WaltzOfTheFlowers"),
        ("PianistYim", "identity", "PianistYim"),
    ]
    .into();
    ensure(triples == want, || format!("relations {triples:?}"))?;
    let script = compile_to_script(&g).map_err(|e| e.to_string())?;
    for needle in ["Yim", "Waltz of the Flowers", "Concert Hall"] {
        ensure(script.contains(needle), || {
            format!("script lacks {needle:?}")
        })?;
    }

    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.extension().is_none_or(|x| x != "xml") {
            continue;
        }
        let doc = std::fs::read(&path).map_err(|e| e.to_string())?;
        let g = import_mpeg7(&doc).map_err(|e| format!("{}: {e}", path.display()))?;
        let script = compile_to_script(&g).map_err(|e| e.to_string())?;
        let size = graph_wire_size(&g);
        ensure(size < script.len(), || {
            format!(
                "{}: graph {size} B, script {} B",
                path.display(),
                script.len()
            )
        })?;
        seen += 1;
    }
    ensure(seen > 0, || "no fixtures found".into())
}

fn c10_targeted() -> Result<(), String> {
    let packages = bundled_ad_packages();
    for mask in 1u32..64 {
        let chosen: BTreeSet<String> = ATTRIBUTES
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.to_string())
            .collect();
        let m = targeted_ad_assemble(&chosen, &packages).map_err(|e| format!("{chosen:?}: {e}"))?;
        let got: BTreeSet<String> = m.features().into_iter().collect();
        ensure(got == chosen, || format!("{chosen:?} assembled {got:?}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: BTreeMap<u8, (&str, Check)> = [
        (1, ("g1g2 demo phases and runtime", c1_g1g2_phases as Check)),
        (
            2,
            ("coverage traverse zones and frames", c2_coverage_traverse),
        ),
        (3, ("traffic accounting", c3_traffic)),
        (4, ("package codec round trip", c4_package_round_trip)),
        (5, ("merge against exhaustive search", c5_merge)),
        (6, ("timeline against dense scan", c6_timeline)),
        (7, ("seeded determinism and invariants", c7_determinism)),
        (8, ("entering objects are announced", c8_continuity)),
        (9, ("semantic import, script, compactness", c9_semdesc)),
        (10, ("targeted ads, all 63 subsets", c10_targeted)),
    ]
    .into();

    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(()) => println!("PASS  {n:>2}  {name}  ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {n:>2}  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
