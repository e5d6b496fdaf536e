use std::path::Path;

use anyhow::Result;
use groupcf::diversity::diverse_explanations_from;
use groupcf::models::Model;
use groupcf::report::{weighted_l1, Baseline, RunMetadata};
use groupcf::{
    render_report, solve_group_lp, solve_penalized, Blacklist, GroupDelta, GroupLpProblem, InstanceSet,
    PenalizedConfig, SUPPORT_TOL,
};

use crate::artifacts::{write_json, write_text, Candidate, ReportDocument, RoundSweep, TrainedArtifacts, FORMAT_VERSION, REPORT_JSON, REPORT_TEXT};
use crate::config::RunConfig;
use crate::pipeline::attrition_set;
use crate::text::render_text;

pub fn run(cfg: &RunConfig, model_dir: &Path) -> Result<ReportDocument> {
    let trained = TrainedArtifacts::load(model_dir)?;
    let schema = &trained.scaler.schema;
    let scaler = schema.scaler();
    let model = &trained.model.model;
    let instances = attrition_set(cfg, &trained)?;
    log::info!("{} instances predicted as attrition", instances.len());

    let d = schema.dim();
    let cost_weights = cfg.cost_weights();
    let mut initial = Blacklist::from_indices(
        cfg.blacklist.iter().filter_map(|name| schema.index_of(name)),
        d,
    )?;
    initial.extend((0..d).filter(|&j| !schema.actionable[j]));

    let mut sweeps: Vec<RoundSweep> = Vec::new();
    let mut chosen_c: Vec<f64> = Vec::new();
    let set = diverse_explanations_from(&instances, model, cfg.k, SUPPORT_TOL, initial, |blacklist| {
        let mut candidates = Vec::with_capacity(cfg.c_grid.len());
        let mut deltas = Vec::with_capacity(cfg.c_grid.len());
        for &c in &cfg.c_grid {
            let delta = solve_at(model, &instances, blacklist, c, cfg, &cost_weights)?;
            candidates.push(Candidate {
                c,
                coverage: delta.coverage(),
                sparsity: delta.support(SUPPORT_TOL).len(),
                l1_cost: weighted_l1(delta.delta.as_slice().expect("contiguous delta"), &cost_weights),
                objective: delta.objective,
                selected: false,
            });
            deltas.push(delta);
        }
        let pick = select_candidate(&candidates, cfg.coverage_target);
        candidates[pick].selected = true;
        chosen_c.push(candidates[pick].c);
        sweeps.push(RoundSweep {
            round: sweeps.len() + 1,
            blacklist: blacklist.indices().map(|j| schema.feature_names[j].clone()).collect(),
            candidates,
        });
        Ok(deltas.swap_remove(pick))
    })?;

    let baseline = Baseline::from_instances(&instances, &scaler);
    let metadata = RunMetadata {
        seed: cfg.seed,
        classifier: model.kind().to_string(),
        department: cfg.department.clone(),
        features: schema.feature_names.clone(),
        c_grid: cfg.c_grid.clone(),
        cost_weights: cost_weights.clone(),
        margin: cfg.margin,
        k: cfg.k,
    };
    let mut report = render_report(&set, &scaler, schema, &baseline, metadata)?;
    for (record, &c) in report.deltas.iter_mut().zip(&chosen_c) {
        record.c = Some(c);
    }
    let document = ReportDocument {
        format_version: FORMAT_VERSION,
        coverage_target: cfg.coverage_target,
        report,
        c_sweeps: sweeps,
    };
    write_json(&cfg.output_dir.join(REPORT_JSON), &document)?;
    write_text(&cfg.output_dir.join(REPORT_TEXT), &render_text(&document))?;
    Ok(document)
}

fn solve_at(
    model: &Model,
    instances: &InstanceSet,
    blacklist: &Blacklist,
    c: f64,
    cfg: &RunConfig,
    cost_weights: &[f64],
) -> groupcf::Result<GroupDelta> {
    let d = instances.dim();
    match model {
        Model::Logistic(linear) => {
            let problem = GroupLpProblem::new(linear.clone(), instances.x().clone(), c, cfg.margin)
                .with_mask(blacklist.mask(d))
                .with_cost_weights(cost_weights.to_vec());
            Ok(solve_group_lp(&problem)?.into_group_delta(&problem))
        }
        Model::Forest(_) => {
            let penalized = PenalizedConfig {
                cost_weights: cost_weights.to_vec(),
                mask: blacklist.mask(d),
                margin: cfg.margin,
                seed: cfg.seed,
                ..PenalizedConfig::new(d, c)
            };
            solve_penalized(instances, model, &penalized)
        }
    }
}

/// Cheapest candidate reaching the coverage target; failing that, the one
/// with the highest coverage. Ties go to the earlier grid entry.
pub fn select_candidate(candidates: &[Candidate], coverage_target: f64) -> usize {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.coverage < coverage_target {
            continue;
        }
        if best.map_or(true, |b| c.l1_cost < candidates[b].l1_cost) {
            best = Some(i);
        }
    }
    best.unwrap_or_else(|| {
        let mut top = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.coverage > candidates[top].coverage {
                top = i;
            }
        }
        top
    })
}
