use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use anyhow::{ensure, Result};
use groupcf::diversity::support;
use groupcf::report::weighted_l1;
use groupcf::{coverage, FeatureSchema, InstanceSet, Scorer, SUPPORT_TOL};
use ndarray::Array1;

use crate::artifacts::{read_json, ReportDocument, TrainedArtifacts, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::pipeline::attrition_set;

const COST_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;
const COVERAGE_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct AuditFailure {
    pub failed: usize,
    pub total: usize,
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "audit failed for {} of {} deltas", self.failed, self.total)
    }
}

impl std::error::Error for AuditFailure {}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaAudit {
    pub index: usize,
    pub coverage: f64,
    pub sparsity: usize,
    pub l1_cost: f64,
    pub problems: Vec<String>,
}

impl DeltaAudit {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

pub fn run(cfg: &RunConfig, model_dir: &Path, report_path: &Path) -> Result<Vec<DeltaAudit>> {
    let trained = TrainedArtifacts::load(model_dir)?;
    let document: ReportDocument = read_json(report_path)?;
    ensure!(
        document.format_version == FORMAT_VERSION,
        "unsupported report format version {}",
        document.format_version
    );
    let instances = attrition_set(cfg, &trained)?;
    let audits = audit(&document, &instances, &trained.model.model, &trained.scaler.schema);
    for a in &audits {
        if a.passed() {
            println!(
                "delta {}: PASS (coverage {:.4}, sparsity {}, cost {:.6})",
                a.index, a.coverage, a.sparsity, a.l1_cost
            );
        } else {
            println!("delta {}: FAIL ({})", a.index, a.problems.join("; "));
        }
    }
    let failed = audits.iter().filter(|a| !a.passed()).count();
    if failed > 0 {
        return Err(AuditFailure {
            failed,
            total: audits.len(),
        }
        .into());
    }
    Ok(audits)
}

/// Recomputes every figure of the report from the delta alone.
pub fn audit<S: Scorer + ?Sized>(
    document: &ReportDocument,
    instances: &InstanceSet,
    scorer: &S,
    schema: &FeatureSchema,
) -> Vec<DeltaAudit> {
    let report = &document.report;
    let d = schema.dim();
    let weights = &report.metadata.cost_weights;
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut audits = Vec::with_capacity(report.deltas.len());
    for (i, record) in report.deltas.iter().enumerate() {
        let mut problems = Vec::new();
        if record.delta_std.len() != d || record.mask.len() != d || weights.len() != d {
            problems.push(format!("expected {d} entries per feature vector"));
            audits.push(DeltaAudit {
                index: i + 1,
                coverage: f64::NAN,
                sparsity: 0,
                l1_cost: f64::NAN,
                problems,
            });
            continue;
        }
        let delta = Array1::from(record.delta_std.clone());

        let cov = match coverage(delta.view(), instances, scorer) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("coverage: {e}"));
                f64::NAN
            }
        };
        if !((cov - record.coverage).abs() <= COVERAGE_TOL) {
            problems.push(format!("coverage {cov} but report says {}", record.coverage));
        }
        let flipped = (cov * instances.len() as f64).round() as usize;
        if flipped != record.n_flipped {
            problems.push(format!("{flipped} instances flip but report says {}", record.n_flipped));
        }

        let supp = support(delta.view(), SUPPORT_TOL);
        if supp.len() != record.sparsity {
            problems.push(format!("sparsity {} but report says {}", supp.len(), record.sparsity));
        }
        let cost = weighted_l1(&record.delta_std, weights);
        if !((cost - record.l1_cost).abs() <= COST_TOL * (1.0 + cost.abs())) {
            problems.push(format!("l1 cost {cost} but report says {}", record.l1_cost));
        }

        for j in 0..d {
            if !record.mask[j] && record.delta_std[j] != 0.0 {
                problems.push(format!("masked feature {} changed", schema.feature_names[j]));
            }
            let expected = record.delta_std[j] * schema.stds[j];
            let reported = record.delta_original_units.get(j).copied().unwrap_or(f64::NAN);
            if !((expected - reported).abs() <= UNIT_TOL * (1.0 + expected.abs())) {
                problems.push(format!(
                    "{} is {reported} in original units, expected {expected}",
                    schema.feature_names[j]
                ));
            }
        }
        let reused: Vec<&str> = supp
            .intersection(&used)
            .map(|&j| schema.feature_names[j].as_str())
            .collect();
        if !reused.is_empty() {
            problems.push(format!("features already used by an earlier delta: {}", reused.join(", ")));
        }
        used.extend(supp.iter().copied());

        audits.push(DeltaAudit {
            index: i + 1,
            coverage: cov,
            sparsity: supp.len(),
            l1_cost: cost,
            problems,
        });
    }
    audits
}
