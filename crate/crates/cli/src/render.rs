//! Plain-text summaries.

use std::collections::BTreeSet;
use std::fmt::Write;

use pdm_core::cg::{frame_sequence_hash, GeneratedContent};
use pdm_core::netsim::{Scenario, SimulationTrace, TrafficReport};

pub(crate) fn list(v: &[String]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

fn set(s: &BTreeSet<String>) -> String {
    let v: Vec<&str> = s.iter().map(String::as_str).collect();
    format!("{{{}}}", v.join(","))
}

/// Left-aligned columns sized to their widest cell.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let mut s = String::from(" ");
        for (c, w) in cells.iter().zip(&width) {
            let _ = write!(s, " {c:<w$}");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

pub(crate) fn simulation_summary(s: &Scenario, t: &SimulationTrace, r: &TrafficReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed: {}", t.seed);
    let _ = writeln!(out, "scenario: {}", t.scenario);
    if !s.description.is_empty() {
        let _ = writeln!(out, "  {}", s.description);
    }
    for a in &t.agents {
        let _ = writeln!(out, "\nagent {} ({})", a.agent, a.mode().symbol());
        if let Some(c) = &a.execution.content {
            let _ = writeln!(
                out,
                "  frames {}  frame hash {}",
                c.frame_count(),
                &frame_sequence_hash(c)[..16]
            );
        }
        out.push_str("zones\n");
        let rows: Vec<Vec<String>> = a
            .transitions
            .iter()
            .map(|z| vec![z.time.to_string(), set(&z.visible)])
            .collect();
        out.push_str(&table(&["t_ms", "visible"], &rows));
        out.push_str("phases\n");
        let rows: Vec<Vec<String>> = a
            .phases
            .iter()
            .map(|p| {
                vec![
                    p.interval.to_string(),
                    set(&p.visible),
                    p.main.clone(),
                    list(&p.subs),
                    set(&p.frame_features),
                ]
            })
            .collect();
        out.push_str(&table(
            &["interval", "visible", "main", "subs", "features"],
            &rows,
        ));
    }
    out.push_str("\ntraffic\n");
    for l in r.to_string().lines() {
        let _ = writeln!(out, "  {l}");
    }
    out
}

pub(crate) fn content_summary(c: &GeneratedContent, hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed: {}", c.seed);
    let _ = writeln!(
        out,
        "mode {}  runtime {}  storyboards {}  frames {}",
        c.mode.symbol(),
        c.runtime(),
        c.storyboards.len(),
        c.frame_count()
    );
    let _ = writeln!(out, "content hash {hash}");
    let _ = writeln!(out, "frame hash   {}", frame_sequence_hash(c));
    let rows: Vec<Vec<String>> = c
        .units
        .iter()
        .map(|u| {
            vec![
                u.interval.to_string(),
                u.merged.main_package_id.clone(),
                list(&u.merged.sub_package_ids),
                format!("{{{}}}", u.merged.features().join(",")),
            ]
        })
        .collect();
    out.push_str(&table(&["interval", "main", "subs", "features"], &rows));
    out
}
