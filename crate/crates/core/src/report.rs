//! Coverage, sparsity and cost of explanations, plus plain-language
//! recommendations in original feature units.

use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSchema, Label, Scaler};
use crate::diversity::{ExplanationSet, Termination};
use crate::error::{Error, Result};
use crate::general::GroupDelta;
use crate::models::{InstanceSet, Scorer};
use crate::SUPPORT_TOL;

/// Fraction of instances predicted as retention after adding `delta`.
pub fn coverage<S: Scorer + ?Sized>(
    delta: ArrayView1<f64>,
    instances: &InstanceSet,
    scorer: &S,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::NothingToExplain);
    }
    if delta.len() != instances.dim() {
        return Err(Error::Dimension(format!(
            "delta has {} entries, instances {}",
            delta.len(),
            instances.dim()
        )));
    }
    let flipped = instances
        .x()
        .axis_iter(Axis(0))
        .filter(|x| scorer.predict((x + &delta).view()) == Label::Retention)
        .count();
    Ok(flipped as f64 / instances.len() as f64)
}

pub fn weighted_l1(delta: &[f64], weights: &[f64]) -> f64 {
    delta.iter().zip(weights).map(|(d, w)| w * d.abs()).sum()
}

/// Per-feature means of the explained instances, in original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub means: Vec<f64>,
}

impl Baseline {
    pub fn from_instances(instances: &InstanceSet, scaler: &Scaler) -> Baseline {
        let d = scaler.dim();
        if instances.is_empty() {
            return Baseline {
                means: scaler.means.clone(),
            };
        }
        let mut sum = Array1::zeros(d);
        for row in instances.x().axis_iter(Axis(0)) {
            sum += &scaler.destandardize(row);
        }
        Baseline {
            means: (sum / instances.len() as f64).to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub classifier: String,
    pub department: String,
    pub features: Vec<String>,
    pub c_grid: Vec<f64>,
    pub cost_weights: Vec<f64>,
    pub margin: f64,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureChange {
    pub feature: String,
    pub delta_std: f64,
    pub delta_original: f64,
    pub baseline_mean: f64,
    /// Change relative to `baseline_mean`, for ratio-scaled features.
    pub percent_of_baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub delta_std: Vec<f64>,
    pub delta_original_units: Vec<f64>,
    /// Features the solver was allowed to move in this round.
    pub mask: Vec<bool>,
    pub coverage: f64,
    pub n_flipped: usize,
    pub sparsity: usize,
    pub l1_cost: f64,
    pub objective: f64,
    /// Selected regularization strength, when a grid was searched.
    pub c: Option<f64>,
    pub changes: Vec<FeatureChange>,
    pub narrative: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub metadata: RunMetadata,
    pub n_instances: usize,
    pub deltas: Vec<DeltaRecord>,
    pub termination: Termination,
    pub final_blacklist: Vec<String>,
}

/// Converts every delta to original units and phrases it as a recommendation.
pub fn render_report(
    set: &ExplanationSet,
    scaler: &Scaler,
    schema: &FeatureSchema,
    baseline: &Baseline,
    metadata: RunMetadata,
) -> Result<ExplanationReport> {
    let d = schema.dim();
    if scaler.dim() != d || scaler.means != schema.means || scaler.stds != schema.stds {
        return Err(Error::Dimension("scaler does not match the feature schema".into()));
    }
    if baseline.means.len() != d || metadata.cost_weights.len() != d {
        return Err(Error::Dimension("baseline or cost weights do not match the schema".into()));
    }
    let n_instances = set.deltas.first().map_or(0, |g| g.flipped.len());
    let deltas = set
        .deltas
        .iter()
        .map(|g| delta_record(g, scaler, schema, baseline, &metadata.cost_weights, None))
        .collect();
    Ok(ExplanationReport {
        n_instances,
        deltas,
        termination: set.termination,
        final_blacklist: set
            .final_blacklist
            .indices()
            .map(|j| schema.feature_names[j].clone())
            .collect(),
        metadata,
    })
}

pub fn delta_record(
    g: &GroupDelta,
    scaler: &Scaler,
    schema: &FeatureSchema,
    baseline: &Baseline,
    cost_weights: &[f64],
    c: Option<f64>,
) -> DeltaRecord {
    let original = scaler.destandardize_delta(g.delta.view());
    let mut support: Vec<usize> = g.support(SUPPORT_TOL).into_iter().collect();
    support.sort_by(|&a, &b| g.delta[b].abs().total_cmp(&g.delta[a].abs()).then(a.cmp(&b)));

    let changes: Vec<FeatureChange> = support
        .iter()
        .map(|&j| {
            let name = &schema.feature_names[j];
            let mean = baseline.means[j];
            let percent = (is_ratio_scaled(name) && mean > 1e-9).then(|| 100.0 * original[j] / mean);
            FeatureChange {
                feature: name.clone(),
                delta_std: g.delta[j],
                delta_original: original[j],
                baseline_mean: mean,
                percent_of_baseline: percent,
            }
        })
        .collect();

    DeltaRecord {
        delta_std: g.delta.to_vec(),
        delta_original_units: original.to_vec(),
        mask: g.mask.clone(),
        coverage: g.coverage(),
        n_flipped: g.n_flipped(),
        sparsity: support.len(),
        l1_cost: weighted_l1(g.delta.as_slice().expect("contiguous delta"), cost_weights),
        objective: g.objective,
        c,
        narrative: narrative(&changes, g.coverage()),
        changes,
    }
}

/// Durations are phrased in years; everything else relative to its mean.
fn is_ratio_scaled(feature: &str) -> bool {
    !feature.starts_with("Years")
}

fn narrative(changes: &[FeatureChange], coverage: f64) -> String {
    if changes.is_empty() {
        return format!("No change required (coverage {:.1}%).", 100.0 * coverage);
    }
    let clauses: Vec<String> = changes.iter().map(clause).collect();
    format!(
        "If employees would have had {}, attrition would be unlikely (coverage {:.1}%).",
        clauses.join(" AND "),
        100.0 * coverage
    )
}

fn clause(change: &FeatureChange) -> String {
    let v = change.delta_original;
    if let Some(rest) = change.feature.strip_prefix("Years") {
        let context = match rest {
            "SinceLastPromotion" => "since their last promotion".to_string(),
            "InCurrentRole" => "in their current role".to_string(),
            "WithCurrManager" => "with their current manager".to_string(),
            "AtCompany" => "at the company".to_string(),
            other => format!("of {}", humanize(other).to_lowercase()),
        };
        let direction = if v < 0.0 { "less" } else { "more" };
        return format!("approx. {} years {direction} {context}", approx(v.abs()));
    }
    let direction = if v < 0.0 { "a decrease" } else { "an increase" };
    let name = humanize(&change.feature);
    match change.percent_of_baseline {
        Some(p) => format!(
            "{direction} in {name} of approx. {}% relative to the group mean ({:+} in original units)",
            approx(p.abs()),
            signed(v)
        ),
        None => format!("{direction} in {name} of approx. {} (original units)", approx(v.abs())),
    }
}

/// `PercentSalaryHike` -> `Percent Salary Hike`.
fn humanize(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 4);
    let mut prev_lower = false;
    for ch in name.chars() {
        if ch.is_uppercase() && prev_lower {
            out.push(' ');
        }
        prev_lower = ch.is_lowercase() || ch.is_ascii_digit();
        out.push(ch);
    }
    out
}

/// Display rounding: whole numbers from 10 up, one decimal below.
fn approx(v: f64) -> String {
    if v >= 10.0 {
        format!("{v:.0}")
    } else if v >= 0.1 {
        let s = format!("{v:.1}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    } else {
        format!("{v:.2}")
    }
}

fn signed(v: f64) -> f64 {
    let scale = if v.abs() >= 10.0 { 1.0 } else { 100.0 };
    (v * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::Blacklist;
    use crate::models::LinearScorer;
    use ndarray::array;

    fn schema(names: &[&str], stds: Vec<f64>) -> (FeatureSchema, Scaler) {
        let scaler = Scaler {
            means: vec![0.0; names.len()],
            stds,
        };
        let schema = FeatureSchema::new(names.iter().map(|s| s.to_string()).collect(), &scaler).unwrap();
        (schema, scaler)
    }

    fn group(delta: Array1<f64>, flipped: Vec<bool>) -> GroupDelta {
        GroupDelta {
            mask: vec![true; delta.len()],
            objective: 0.0,
            delta,
            flipped,
            slacks: None,
            trace: vec![],
        }
    }

    fn metadata(d: usize) -> RunMetadata {
        RunMetadata {
            seed: 0,
            classifier: "logistic".into(),
            department: String::new(),
            features: vec![],
            c_grid: vec![1.0],
            cost_weights: vec![1.0; d],
            margin: 1e-4,
            k: 1,
        }
    }

    #[test]
    fn coverage_cases() {
        let scorer = LinearScorer::new(vec![1.0, 0.0], 0.0);
        let set = InstanceSet::new(array![[-1.0, 0.0], [-3.0, 0.0]], vec![0, 1], &scorer).unwrap();
        assert_eq!(coverage(array![0.0, 0.0].view(), &set, &scorer).unwrap(), 0.0);
        assert_eq!(coverage(array![3.0, 0.0].view(), &set, &scorer).unwrap(), 1.0);
        // -1 + 2 = 1 flips, -3 + 2 = -1 does not
        assert_eq!(coverage(array![2.0, 0.0].view(), &set, &scorer).unwrap(), 0.5);
    }

    #[test]
    fn coverage_of_empty_set_is_an_error() {
        let scorer = LinearScorer::new(vec![1.0], 0.0);
        let set = InstanceSet::new(ndarray::Array2::zeros((0, 1)), vec![], &scorer).unwrap();
        assert!(coverage(array![1.0].view(), &set, &scorer).is_err());
    }

    #[test]
    fn zero_delta_needs_no_change() {
        let (schema, scaler) = schema(&["JobSatisfaction"], vec![1.0]);
        let r = delta_record(&group(array![0.0], vec![false]), &scaler, &schema, &Baseline { means: vec![2.0] }, &[1.0], None);
        assert!(r.narrative.to_lowercase().contains("no change required"));
        assert!(r.narrative.contains("coverage 0.0%"));
        assert_eq!(r.sparsity, 0);
    }

    #[test]
    fn promotion_phrasing() {
        let (schema, scaler) = schema(&["MonthlyIncome", "YearsSinceLastPromotion"], vec![1000.0, 2.5]);
        let g = group(array![0.0, -2.0], vec![true]);
        let r = delta_record(&g, &scaler, &schema, &Baseline { means: vec![5000.0, 3.0] }, &[1.0, 1.0], None);
        assert_eq!(r.delta_original_units, vec![0.0, -5.0]);
        assert!(r.narrative.contains("5 years less since their last promotion"), "{}", r.narrative);
    }

    #[test]
    fn two_features_joined_with_and() {
        let (schema, scaler) = schema(&["JobSatisfaction", "PercentSalaryHike"], vec![1.1, 3.6]);
        let g = group(array![1.0, 1.5], vec![true, true]);
        let base = Baseline { means: vec![2.2, 15.0] };
        let r = delta_record(&g, &scaler, &schema, &base, &[1.0, 1.0], Some(10.0));
        let parts: Vec<&str> = r.narrative.split(" AND ").collect();
        assert_eq!(parts.len(), 2);
        // larger standardized move first
        assert!(parts[0].contains("an increase in Percent Salary Hike of approx. 36%"), "{}", r.narrative);
        assert!(parts[1].contains("an increase in Job Satisfaction of approx. 50%"), "{}", r.narrative);
        assert_eq!(r.changes[1].percent_of_baseline, Some(50.0));
    }

    #[test]
    fn narrative_mentions_exactly_the_support() {
        let names = ["EnvironmentSatisfaction", "JobInvolvement", "MonthlyIncome", "YearsInCurrentRole"];
        let (schema, scaler) = schema(&names, vec![1.0; 4]);
        let g = group(array![0.3, 1e-12, -0.7, 0.0], vec![true]);
        let r = delta_record(&g, &scaler, &schema, &Baseline { means: vec![2.5; 4] }, &[1.0; 4], None);
        assert_eq!(r.sparsity, 2);
        assert_eq!(r.narrative.matches(" AND ").count() + 1, 2);
        assert!(r.narrative.contains("Environment Satisfaction"));
        assert!(r.narrative.contains("a decrease in Monthly Income"));
        assert!(!r.narrative.contains("Job Involvement"));
        assert!(!r.narrative.contains("current role"));
    }

    #[test]
    fn l1_cost_is_weighted() {
        let (schema, scaler) = schema(&["a", "b"], vec![1.0, 1.0]);
        let g = group(array![-0.5, 2.0], vec![true]);
        let r = delta_record(&g, &scaler, &schema, &Baseline { means: vec![1.0, 1.0] }, &[2.0, 0.5], None);
        assert!((r.l1_cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn render_checks_scaler_against_schema() {
        let (schema, scaler) = schema(&["a"], vec![2.0]);
        let set = ExplanationSet {
            deltas: vec![group(array![1.0], vec![true, false])],
            final_blacklist: Blacklist::from_indices([0], 1).unwrap(),
            termination: Termination::CompletedK,
        };
        let base = Baseline { means: vec![4.0] };
        let r = render_report(&set, &scaler, &schema, &base, metadata(1)).unwrap();
        assert_eq!(r.n_instances, 2);
        assert_eq!(r.deltas[0].coverage, 0.5);
        assert_eq!(r.final_blacklist, vec!["a".to_string()]);

        let other = Scaler {
            means: vec![0.0],
            stds: vec![3.0],
        };
        assert!(render_report(&set, &other, &schema, &base, metadata(1)).is_err());
    }

    #[test]
    fn humanize_camel_case() {
        assert_eq!(humanize("PercentSalaryHike"), "Percent Salary Hike");
        assert_eq!(humanize("JobSatisfaction"), "Job Satisfaction");
        assert_eq!(approx(5.0), "5");
        assert_eq!(approx(4.63), "4.6");
        assert_eq!(approx(39.6), "40");
    }
}
