use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scene::{frame_cap, sample_scenes_capped};
use super::{
    bss_intervals, build_storyboards, compose_frames, continuity_books, generate_narrative,
    render_bss, Action, BaseSceneSnapshot, CgError, ContinuityBook, FrameSequence, Interval,
    Narrative, SceneSample, Storyboard, ENTER_TAIL_PERCENT,
};
use crate::ops::{self, merge_m1, MergePolicy, MergedPackage, OperationMode};
use crate::package::{Millis, PromptPackage, Schedule};
use crate::seed::stage_seed;

pub const DEFAULT_FPS: u32 = 24;
pub const DEFAULT_DENSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    /// Scene samples per narrative flag.
    pub density: f64,
    pub fps: u32,
    /// Per-package top-k bound applied when merging.
    pub k: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            density: DEFAULT_DENSITY,
            fps: DEFAULT_FPS,
            k: ops::DEFAULT_TOP_K,
        }
    }
}

/// One independently generated stretch of content, driven by one merged
/// package. Continuity links never cross a unit boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentUnit {
    pub merged: MergedPackage,
    pub first_flag: usize,
    pub first_storyboard: usize,
    pub storyboard_count: usize,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedContent {
    pub mode: OperationMode,
    pub seed: u64,
    pub fps: u32,
    pub narrative: Narrative,
    pub scene_samples: Vec<SceneSample>,
    pub storyboards: Vec<Storyboard>,
    pub continuity_books: Vec<ContinuityBook>,
    pub bss_list: Vec<BaseSceneSnapshot>,
    pub frames: Vec<FrameSequence>,
    pub sources: Vec<PromptPackage>,
    pub units: Vec<ContentUnit>,
}

impl GeneratedContent {
    pub fn runtime(&self) -> Interval {
        match (self.bss_list.first(), self.bss_list.last()) {
            (Some(a), Some(b)) => {
                Interval::new(a.presentation_interval.start, b.presentation_interval.end)
            }
            _ => Interval::new(0, 0),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.iter().map(|f| f.frames.len()).sum()
    }

    /// Unit owning storyboard `n`.
    pub fn unit_of(&self, n: usize) -> Option<&ContentUnit> {
        self.units
            .iter()
            .find(|u| (u.first_storyboard..u.first_storyboard + u.storyboard_count).contains(&n))
    }

    fn is_unit_start(&self, n: usize) -> bool {
        self.units.iter().any(|u| u.first_storyboard == n)
    }

    /// Sorted feature tags visible (as objects, background or style) in any
    /// frame whose time lies in `iv`.
    pub fn features_in(&self, iv: Interval) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.frames.iter().flat_map(|s| &s.frames) {
            if iv.contains(f.time) {
                out.extend(f.visible_objects.iter().cloned());
            }
        }
        out
    }
}

/// Runs the pipeline for one merged package over its schedule.
pub fn generate_unit(
    m: &MergedPackage,
    mode: OperationMode,
    user_seed: u64,
    segment: usize,
    opts: &GenerateOptions,
) -> Result<GeneratedContent, CgError> {
    if opts.fps == 0 || opts.fps > 1000 {
        return Err(CgError::InvalidFps(opts.fps));
    }
    let ids = m.package_ids();
    let narrative = generate_narrative(m, stage_seed(user_seed, "narrative", &ids, segment))?;
    let cap = frame_cap(m.schedule, opts.fps);
    let samples = sample_scenes_capped(&narrative, opts.density, m.schedule, cap)?;
    let (storyboards, books) = build_storyboards(
        &samples,
        m,
        stage_seed(user_seed, "storyboard", &ids, segment),
    );
    let render_seed = stage_seed(user_seed, "render", &ids, segment);
    let bss_list: Vec<BaseSceneSnapshot> = storyboards
        .iter()
        .zip(bss_intervals(&storyboards, m.schedule))
        .map(|(s, iv)| render_bss(s, iv, render_seed))
        .collect();
    let frames = bss_list
        .iter()
        .zip(&storyboards)
        .zip(&books)
        .map(|((b, s), book)| compose_frames(b, s, book, opts.fps))
        .collect::<Result<Vec<_>, _>>()?;
    let unit = ContentUnit {
        merged: m.clone(),
        first_flag: 0,
        first_storyboard: 0,
        storyboard_count: storyboards.len(),
        interval: Interval::new(m.schedule.start, m.schedule.end()),
    };
    Ok(GeneratedContent {
        mode,
        seed: user_seed,
        fps: opts.fps,
        narrative,
        scene_samples: samples,
        storyboards,
        continuity_books: books,
        bss_list,
        frames,
        sources: Vec::new(),
        units: vec![unit],
    })
}

/// Generates content for `packages` under `mode`.
///
/// Single-source mode takes exactly one package. The synchronous mode
/// merges all packages at once. The asynchronous mode treats every package
/// as arriving at its own schedule start.
pub fn generate_content(
    packages: &[PromptPackage],
    mode: OperationMode,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<GeneratedContent, CgError> {
    match mode {
        OperationMode::SingleSource | OperationMode::MultiSync => {
            if mode == OperationMode::SingleSource && packages.len() != 1 {
                return Err(ops::OpsError::ModeMismatch {
                    mode,
                    packages: packages.len(),
                }
                .into());
            }
            let merged = merge_m1(packages, &MergePolicy::with_k(opts.k))?;
            let mut c = generate_unit(&merged, mode, seed, 0, opts)?;
            c.sources = sorted_sources(packages);
            Ok(c)
        }
        OperationMode::MultiAsync => {
            let mut events: Vec<ops::Event> = packages
                .iter()
                .map(|p| ops::Event::arrival(p.schedule.start, p.clone()))
                .collect();
            events.sort_by_key(|e| e.time);
            let run = ops::execute(&events, seed, opts)?;
            run.content.ok_or(CgError::EmptyInput)
        }
    }
}

pub(crate) fn sorted_sources(packages: &[PromptPackage]) -> Vec<PromptPackage> {
    let mut v = packages.to_vec();
    v.sort_by(|a, b| a.package_id.cmp(&b.package_id));
    v
}

/// Appends `next` after `self`, renumbering every index.
pub(crate) fn append(base: &mut GeneratedContent, next: GeneratedContent) {
    let flag_off = base.narrative.flags.len();
    let board_off = base.storyboards.len();
    base.narrative
        .flags
        .extend(next.narrative.flags.into_iter().map(|mut f| {
            f.index += flag_off;
            f
        }));
    base.scene_samples
        .extend(next.scene_samples.into_iter().map(|mut s| {
            s.index += board_off;
            s.flag_range = (s.flag_range.0 + flag_off, s.flag_range.1 + flag_off);
            s
        }));
    base.storyboards
        .extend(next.storyboards.into_iter().map(|mut s| {
            s.index += board_off;
            s
        }));
    base.continuity_books
        .extend(next.continuity_books.into_iter().map(|mut b| {
            b.index += board_off;
            for e in &mut b.entries {
                e.linked_storyboard += board_off;
            }
            b
        }));
    base.bss_list.extend(next.bss_list.into_iter().map(|mut b| {
        b.index += board_off;
        b
    }));
    base.frames.extend(next.frames.into_iter().map(|mut f| {
        f.bss_index += board_off;
        f
    }));
    base.units.extend(next.units.into_iter().map(|mut u| {
        u.first_flag += flag_off;
        u.first_storyboard += board_off;
        u
    }));
}

/// Keeps only what was presented before `t`.
///
/// The storyboard on screen at `t` is cut short: its interval ends at `t`,
/// its book forgets the successor that will never come, and its frames are
/// recomposed over the shortened interval. A storyboard starting exactly at
/// `t` is dropped.
pub(crate) fn truncate(c: &mut GeneratedContent, t: Millis) -> Result<(), CgError> {
    let keep = c
        .bss_list
        .iter()
        .take_while(|b| b.presentation_interval.start < t)
        .count();
    if keep < c.bss_list.len() || c.runtime().end > t {
        let flags_keep = c
            .scene_samples
            .get(keep)
            .map_or(c.narrative.flags.len(), |s| s.flag_range.0);
        c.narrative.flags.truncate(flags_keep);
        c.scene_samples.truncate(keep);
        c.storyboards.truncate(keep);
        c.continuity_books.truncate(keep);
        c.bss_list.truncate(keep);
        c.frames.truncate(keep);
        c.units.retain(|u| u.first_storyboard < keep);
        if let Some(u) = c.units.last_mut() {
            u.storyboard_count = keep - u.first_storyboard;
            u.interval.end = u.interval.end.min(t);
        }
        if keep > 0 {
            let n = keep - 1;
            let iv = &mut c.bss_list[n].presentation_interval;
            iv.end = iv.end.min(t);
            let unit_start = c.unit_of(n).map_or(0, |u| u.first_storyboard);
            let mut book = continuity_books(&c.storyboards[unit_start..])
                .pop()
                .expect("kept board");
            book.index = n;
            for e in &mut book.entries {
                e.linked_storyboard = n;
            }
            c.continuity_books[n] = book;
            c.frames[n] = compose_frames(
                &c.bss_list[n],
                &c.storyboards[n],
                &c.continuity_books[n],
                c.fps,
            )?;
        }
    }
    Ok(())
}

/// Indices of the snapshot, storyboard and scene sample on screen at `t`.
pub fn backtrack(c: &GeneratedContent, t: Millis) -> Result<(usize, usize, usize), CgError> {
    let rt = c.runtime();
    if !rt.contains(t) {
        return Err(CgError::OutOfRange {
            t,
            start: rt.start,
            end: rt.end,
        });
    }
    let i = c
        .bss_list
        .partition_point(|b| b.presentation_interval.end <= t);
    let b = &c.bss_list[i];
    if !b.presentation_interval.contains(t) {
        return Err(CgError::OutOfRange {
            t,
            start: rt.start,
            end: rt.end,
        });
    }
    Ok((b.index, c.storyboards[i].index, c.scene_samples[i].index))
}

struct HashWriter(Sha256);

impl Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

pub(crate) fn hash_json<T: Serialize>(value: &T) -> String {
    let mut w = HashWriter(Sha256::new());
    serde_json::to_writer(&mut w, value).expect("value serializes");
    hex::encode(w.0.finalize())
}

/// Hash over every snapshot descriptor and frame descriptor.
pub fn frame_sequence_hash(c: &GeneratedContent) -> String {
    hash_json(&(&c.bss_list, &c.frames))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation {
    pub rule: &'static str,
    pub detail: String,
}

/// Structural, coverage and continuity checks over generated content.
/// Returns every violation found; empty means the content is well formed.
pub fn check_invariants(c: &GeneratedContent) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    let mut fail =
        |rule: &'static str, detail: String| out.push(InvariantViolation { rule, detail });

    let n = c.storyboards.len();
    if [
        c.scene_samples.len(),
        c.continuity_books.len(),
        c.bss_list.len(),
        c.frames.len(),
    ]
    .iter()
    .any(|&len| len != n)
    {
        fail(
            "counts",
            "sample/storyboard/book/bss/frame counts differ".into(),
        );
        return out;
    }
    if n == 0 {
        fail("counts", "content has no storyboards".into());
        return out;
    }

    for (i, f) in c.narrative.flags.iter().enumerate() {
        if f.index != i {
            fail("narrative", format!("flag {i} has index {}", f.index));
        }
        if i > 0 && f.time_hint < c.narrative.flags[i - 1].time_hint {
            fail("narrative", format!("flag {i} time hint decreases"));
        }
    }

    let mut next_flag = 0;
    for (i, s) in c.scene_samples.iter().enumerate() {
        if s.index != i || s.flag_range.0 != next_flag || s.flag_range.1 < s.flag_range.0 {
            fail("partition", format!("sample {i} range {:?}", s.flag_range));
        }
        next_flag = s.flag_range.1 + 1;
        if i > 0 && s.timestamp <= c.scene_samples[i - 1].timestamp {
            fail("partition", format!("sample {i} timestamp not increasing"));
        }
    }
    if next_flag != c.narrative.flags.len() {
        fail("partition", "samples do not cover every flag".into());
    }

    for (i, ((s, b), sample)) in c
        .storyboards
        .iter()
        .zip(&c.bss_list)
        .zip(&c.scene_samples)
        .enumerate()
    {
        if s.index != i || b.index != i || c.continuity_books[i].index != i {
            fail("pairing", format!("indices disagree at {i}"));
        }
        if s.timestamp != sample.timestamp {
            fail(
                "pairing",
                format!("storyboard {i} timestamp differs from its sample"),
            );
        }
        if s.objects.iter().any(|p| !p.position.in_bounds()) {
            fail("layout", format!("storyboard {i} has an off-grid object"));
        }
        let iv = b.presentation_interval;
        if iv.is_empty() {
            fail("runtime", format!("bss {i} interval {iv} is empty"));
        }
        if i > 0 {
            let prev_end = c.bss_list[i - 1].presentation_interval.end;
            // nothing is scheduled between two units, so only they may leave a gap
            if prev_end > iv.start || (prev_end < iv.start && !c.is_unit_start(i)) {
                fail("runtime", format!("gap or overlap before bss {i}"));
            }
        }
        if let Some(u) = c.unit_of(i) {
            for r in &s.element_refs {
                if u.merged.element(r).is_none() {
                    fail("refs", format!("storyboard {i} cites unknown {r}"));
                }
            }
        } else {
            fail("refs", format!("storyboard {i} belongs to no unit"));
        }
    }

    for (i, seq) in c.frames.iter().enumerate() {
        let iv = c.bss_list[i].presentation_interval;
        let expected = iv.len() as u128 * c.fps as u128 / 1000;
        if seq.frames.len() as u128 != expected || seq.bss_index != i {
            fail(
                "frames",
                format!(
                    "bss {i} has {} frames, expected {expected}",
                    seq.frames.len()
                ),
            );
        }
        for (j, f) in seq.frames.iter().enumerate() {
            if !iv.contains(f.time) || (j > 0 && f.time <= seq.frames[j - 1].time) {
                fail(
                    "frames",
                    format!("bss {i} frame {j} at {} ms out of order", f.time),
                );
            }
        }
        let mut sanctioned: BTreeSet<&str> = c.storyboards[i]
            .objects
            .iter()
            .map(|p| p.object_id.as_str())
            .collect();
        sanctioned.extend(
            c.continuity_books[i]
                .entering()
                .map(|e| e.object_id.as_str()),
        );
        for f in &seq.frames {
            if let Some(x) = f
                .visible_objects
                .iter()
                .find(|o| !sanctioned.contains(o.as_str()))
            {
                fail("frames", format!("bss {i} shows unsanctioned {x}"));
                break;
            }
        }
    }

    for i in 0..n {
        let book = &c.continuity_books[i];
        for e in &book.entries {
            if e.linked_storyboard + 1 < i || e.linked_storyboard > i + 1 {
                fail(
                    "continuity",
                    format!("book {i} links {}", e.linked_storyboard),
                );
            }
            if e.linked_storyboard == i + 1 {
                match c
                    .storyboards
                    .get(i + 1)
                    .and_then(|s| s.position(&e.object_id))
                {
                    None => fail(
                        "continuity",
                        format!("book {i}: {} is not in storyboard {}", e.object_id, i + 1),
                    ),
                    Some(pos) if e.target_position.is_some_and(|t| t != pos) => fail(
                        "continuity",
                        format!(
                            "book {i}: {} target differs from storyboard {}",
                            e.object_id,
                            i + 1
                        ),
                    ),
                    _ => {}
                }
            }
        }
        if i + 1 < n && !c.is_unit_start(i + 1) {
            let here: BTreeSet<&str> = c.storyboards[i]
                .objects
                .iter()
                .map(|p| p.object_id.as_str())
                .collect();
            let frames = &c.frames[i].frames;
            let tail = (frames.len() as u64 * ENTER_TAIL_PERCENT).div_ceil(100) as usize;
            for p in &c.storyboards[i + 1].objects {
                if here.contains(p.object_id.as_str()) {
                    continue;
                }
                let announced = book.entries.iter().any(|e| {
                    e.object_id == p.object_id
                        && e.action == Action::Enters
                        && e.linked_storyboard == i + 1
                        && e.target_position == Some(p.position)
                });
                if !announced {
                    fail(
                        "continuity",
                        format!("{} enters storyboard {} unannounced", p.object_id, i + 1),
                    );
                }
                let shown = frames[frames.len() - tail..]
                    .iter()
                    .all(|f| f.visible_objects.contains(&p.object_id));
                if !shown {
                    fail(
                        "continuity",
                        format!("{} missing from the tail of bss {i}", p.object_id),
                    );
                }
            }
        }
    }

    for u in &c.units {
        let frames: Vec<_> = c.frames[u.first_storyboard..u.first_storyboard + u.storyboard_count]
            .iter()
            .flat_map(|s| &s.frames)
            .collect();
        if frames.is_empty() {
            continue;
        }
        for tag in u.merged.mandatory_tags() {
            let seen = frames
                .iter()
                .any(|f| f.visible_objects.contains(&tag) || f.background == tag || f.style == tag);
            if !seen {
                fail(
                    "coverage",
                    format!("mandatory feature {tag} never shown in unit {}", u.interval),
                );
            }
        }
    }
    out
}

/// Schedule covering `iv`.
pub(crate) fn schedule_of(iv: Interval) -> Schedule {
    Schedule::span(iv.start, iv.end)
}
