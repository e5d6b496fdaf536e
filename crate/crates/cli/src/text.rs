use std::fmt::Write;

use groupcf::Termination;

use crate::artifacts::ReportDocument;

pub fn render_text(doc: &ReportDocument) -> String {
    let r = &doc.report;
    let m = &r.metadata;
    let mut out = String::new();
    let department = if m.department.is_empty() { "all departments" } else { &m.department };
    let _ = writeln!(out, "Group counterfactual explanations");
    let _ = writeln!(out, "classifier: {}  department: {department}  seed: {}", m.classifier, m.seed);
    let _ = writeln!(out, "features: {}", m.features.join(", "));
    let _ = writeln!(
        out,
        "employees predicted to leave: {}  k: {}  C grid: {}  coverage target: {:.0}%",
        r.n_instances,
        m.k,
        join_numbers(&m.c_grid),
        100.0 * doc.coverage_target
    );
    let _ = writeln!(out);

    for (i, rec) in r.deltas.iter().enumerate() {
        let c = rec.c.map_or_else(|| "-".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "Recommendation {} (C = {c}, coverage {:.1}%, {} of {} employees, {} feature{}, cost {:.4})",
            i + 1,
            100.0 * rec.coverage,
            rec.n_flipped,
            r.n_instances,
            rec.sparsity,
            if rec.sparsity == 1 { "" } else { "s" },
            rec.l1_cost
        );
        let _ = writeln!(out, "  {}", rec.narrative);
        for ch in &rec.changes {
            let pct = ch
                .percent_of_baseline
                .map_or_else(String::new, |p| format!(", {p:+.1}% of the group mean"));
            let _ = writeln!(
                out,
                "    {:<26} {:+.4} std = {:+.4} original units (group mean {:.4}{pct})",
                ch.feature, ch.delta_std, ch.delta_original, ch.baseline_mean
            );
        }
        let _ = writeln!(out);
    }

    let reason = match r.termination {
        Termination::CompletedK => "all requested recommendations were found",
        Termination::Infeasible => "stopped early: no remaining feature can flip any prediction",
        Termination::ZeroDelta => "stopped early: the last solve required no change",
    };
    let _ = writeln!(out, "Termination: {reason}");
    if !r.final_blacklist.is_empty() {
        let _ = writeln!(out, "Features used or black-listed: {}", r.final_blacklist.join(", "));
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Coverage by C");
    for sweep in &doc.c_sweeps {
        let _ = writeln!(out, "  round {}", sweep.round);
        for cand in &sweep.candidates {
            let _ = writeln!(
                out,
                "    {} C = {:<8} coverage {:>6.1}%  sparsity {}  cost {:.4}",
                if cand.selected { "*" } else { " " },
                cand.c,
                100.0 * cand.coverage,
                cand.sparsity,
                cand.l1_cost
            );
        }
    }
    out
}

fn join_numbers(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}
