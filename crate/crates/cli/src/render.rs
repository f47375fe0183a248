// SPDX-License-Identifier: Apache-2.0

//! Human-readable tables. JSON output never passes through here.

use taibom::audit::{PackDiff, ReuseReport, SeriesEntry};
use taibom::graph::{Lineage, VerificationReport};
use taibom::sbom::ImpactReport;
use taibom::workflow::PipelineOutcome;

/// Left-aligned columns separated by two spaces.
fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .into_iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_owned()
    };
    let mut out = vec![line(header.iter().map(|h| h.to_string()).collect())];
    out.extend(rows.into_iter().map(line));
    out.join("\n")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn verification(r: &VerificationReport) -> String {
    let rows = r
        .nodes
        .iter()
        .map(|n| {
            let mut status = n.status.to_string();
            if n.attached {
                status.push_str(" (attached)");
            }
            vec![status, opt(n.kind), opt(n.name.as_deref()), n.id.to_string(), opt(n.detail.as_deref())]
        })
        .collect();
    let verdict = match r.verdict {
        taibom::graph::Verdict::Pass => "PASS",
        taibom::graph::Verdict::Fail => "FAIL",
    };
    format!(
        "{}\n\nverdict: {verdict} ({} node(s), {} failing)",
        table(&["STATUS", "KIND", "NAME", "ID", "DETAIL"], rows),
        r.nodes.len(),
        r.failure_paths.len()
    )
}

pub fn lineage(l: &Lineage) -> String {
    let rows = l
        .entries
        .iter()
        .map(|e| {
            if e.missing {
                return vec!["MISSING".into(), "-".into(), "-".into(), e.id.to_string(), "-".into(), "-".into(), "-".into()];
            }
            vec![
                opt(e.kind),
                opt(e.name.as_deref()),
                e.version.as_ref().map_or("-".into(), |v| format!("{} #{}", v.semver, v.counter)),
                e.id.to_string(),
                e.digest.as_ref().map_or("-".into(), |d| d.to_string()),
                opt(e.license.as_deref()),
                opt(e.issued_at.as_ref()),
            ]
        })
        .collect();
    table(&["KIND", "NAME", "VERSION", "ID", "DIGEST", "LICENSE", "ISSUED"], rows)
}

pub fn diff(d: &PackDiff) -> String {
    let mut rows = Vec::new();
    for m in &d.added {
        rows.push(vec!["added".into(), m.member_name.clone(), "-".into(), m.digest.to_string()]);
    }
    for m in &d.removed {
        rows.push(vec!["removed".into(), m.member_name.clone(), m.digest.to_string(), "-".into()]);
    }
    for m in &d.modified {
        rows.push(vec!["modified".into(), m.member_name.clone(), m.old_digest.to_string(), m.new_digest.to_string()]);
    }
    format!("{}\n\n{} unchanged", table(&["CHANGE", "MEMBER", "OLD", "NEW"], rows), d.unchanged_count)
}

pub fn reuse(r: &ReuseReport) -> String {
    let rows = r
        .referencing_attestations
        .iter()
        .map(|e| vec![e.kind.to_string(), e.name.clone(), format!("{} #{}", e.version.semver, e.version.counter), e.id.to_string()])
        .collect();
    format!("{}\n{}", r.digest, table(&["KIND", "NAME", "VERSION", "ID"], rows))
}

pub fn series(entries: &[SeriesEntry]) -> String {
    let rows = entries
        .iter()
        .map(|e| {
            let status = serde_json::to_value(e.status).ok().and_then(|v| v.as_str().map(str::to_owned));
            vec![
                e.counter.to_string(),
                opt(status),
                e.id.to_string(),
                opt(e.content.as_ref()),
                opt(e.detail.as_deref()),
            ]
        })
        .collect();
    table(&["COUNTER", "STATUS", "ID", "CONTENT", "DETAIL"], rows)
}

pub fn impact(r: &ImpactReport) -> String {
    let mut out = format!("{}\n", r.cve_id);
    let comps = r
        .matched_components
        .iter()
        .map(|m| vec![m.component.clone(), m.version.clone(), m.sbom_id.to_string()])
        .collect();
    out.push_str(&table(&["COMPONENT", "VERSION", "SBOM"], comps));
    out.push_str("\n\n");
    let systems = r.affected_systems.iter().map(|s| vec![s.kind.to_string(), s.id.to_string()]).collect();
    out.push_str(&table(&["AFFECTED", "ID"], systems));
    out
}

pub fn pipeline(o: &PipelineOutcome) -> String {
    let mut rows = Vec::new();
    for id in &o.training.training_data {
        rows.push(vec!["training-data".into(), id.to_string()]);
    }
    rows.push(vec!["data-pack".into(), o.training.data_pack.to_string()]);
    if let Some(s) = &o.training.training_sbom {
        rows.push(vec!["sbom".into(), s.to_string()]);
    }
    rows.push(vec!["code".into(), o.training.training_code.to_string()]);
    rows.push(vec!["trained-system".into(), o.training.trained_system.to_string()]);
    rows.push(vec!["weights".into(), o.weights.weights.to_string()]);
    rows.push(vec!["config".into(), o.weights.config.to_string()]);
    if let Some(s) = &o.deployment.inferencing_sbom {
        rows.push(vec!["sbom".into(), s.to_string()]);
    }
    rows.push(vec!["code".into(), o.deployment.inferencing_code.to_string()]);
    rows.push(vec!["inference-system".into(), o.deployment.inference_system.to_string()]);
    table(&["KIND", "ID"], rows)
}
