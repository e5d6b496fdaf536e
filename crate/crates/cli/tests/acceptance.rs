//! Acceptance gate. Each test checks one criterion and writes a single
//! `ACCEPTANCE ... PASS|FAIL` line to stderr (bypassing output capture).

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use groupcf::diversity::diverse_explanations;
use groupcf::{
    coverage, solve_group_lp, solve_penalized, Blacklist, GroupDelta, GroupLpProblem, InstanceSet, LinearScorer,
    PenalizedConfig, Scorer, Termination, DEFAULT_MARGIN, SUPPORT_TOL,
};
use ndarray::{array, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, pass: bool, detail: &str) {
    let line = format!(
        "ACCEPTANCE {name}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "{name}: {detail}");
}

/// A linear scorer and `m` rows it labels attrition. Weights are uniform in
/// `(-w_range.1, w_range.1)` with one of them at least `w_range.0` in magnitude.
/// The bias is kept below half the largest weight so attrition rows exist.
fn random_problem(rng: &mut ChaCha8Rng, d: usize, m: usize, w_range: (f64, f64)) -> (LinearScorer, Array2<f64>) {
    let mut w: Vec<f64> = (0..d).map(|_| rng.gen_range(-w_range.1..w_range.1)).collect();
    let j = rng.gen_range(0..d);
    w[j] = random_sign(rng) * rng.gen_range(w_range.0..w_range.1);
    let max_w = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bias = rng.gen_range(-0.5..0.5) * max_w;
    let scorer = LinearScorer::new(w, bias);
    let x = attrition_rows(rng, &scorer, m);
    (scorer, x)
}

fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Rows uniform in `[-1, 1]^d` kept only when `scorer` labels them attrition.
fn attrition_rows(rng: &mut ChaCha8Rng, scorer: &LinearScorer, m: usize) -> Array2<f64> {
    let d = scorer.weights.len();
    let mut x = Array2::zeros((m, d));
    let mut filled = 0;
    while filled < m {
        let row: Array1<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if scorer.score(row.view()) < 0.0 {
            x.row_mut(filled).assign(&row);
            filled += 1;
        }
    }
    x
}

fn lp(scorer: &LinearScorer, x: &Array2<f64>, c: f64, margin: f64) -> GroupLpProblem {
    GroupLpProblem::new(scorer.clone(), x.clone(), c, margin)
}

/// Minimum of the group objective over a square grid in 2-D.
fn grid_minimum(p: &GroupLpProblem, lim: f64, step: f64) -> f64 {
    let w = &p.scorer.weights;
    let y = p.target.sign();
    let base: Vec<f64> = p.instances.axis_iter(Axis(0)).map(|x| y * p.scorer.score(x)).collect();
    let n = (2.0 * lim / step).round() as i64;
    let mut best = f64::INFINITY;
    for a in 0..=n {
        let d0 = -lim + a as f64 * step;
        for b in 0..=n {
            let d1 = -lim + b as f64 * step;
            let shift = y * (w[0] * d0 + w[1] * d1);
            let mut total = p.cost_weights[0] * d0.abs() + p.cost_weights[1] * d1.abs();
            for s in &base {
                total += p.c * (p.margin - s - shift).max(0.0);
            }
            best = best.min(total);
        }
    }
    best
}

#[test]
fn lp_analytic_oracle() {
    let one = lp(&LinearScorer::new(vec![1.0, 0.0], 0.0), &array![[-2.0, 0.0]], 1000.0, 0.0);
    let two = lp(&LinearScorer::new(vec![1.0, 1.0], 0.0), &array![[-1.0, 0.0], [0.0, -3.0]], 1000.0, 0.0);
    let mut details = Vec::new();
    let mut pass = true;
    for (p, expected) in [(&one, 2.0), (&two, 3.0)] {
        let start = Instant::now();
        let sol = solve_group_lp(p).unwrap();
        let elapsed = start.elapsed();
        let ok = (sol.objective - expected).abs() <= 1e-6 && elapsed < Duration::from_millis(10);
        // the grid oracle confirms nothing cheaper exists
        let grid = grid_minimum(p, 4.0, 0.01);
        let ok = ok && grid >= sol.objective - 1e-9 && grid - sol.objective <= 0.02;
        pass &= ok;
        details.push(format!("objective {:.9} (want {expected}) in {:?}, grid {grid:.4}", sol.objective, elapsed));
    }
    verdict("lp_analytic_oracle", pass, &details.join("; "));
}

#[test]
fn lp_matches_brute_force_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut below = 0;
    let mut lp_time = Duration::ZERO;
    for _ in 0..50 {
        let m = rng.gen_range(1..=3);
        let w: Vec<f64> = (0..2).map(|_| random_sign(&mut rng) * rng.gen_range(1.0..2.0)).collect();
        let max_w = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bias = rng.gen_range(-0.5..0.5) * max_w;
    let scorer = LinearScorer::new(w, bias);
        let x = attrition_rows(&mut rng, &scorer, m);
        let c = 10f64.powf(rng.gen_range(-1.0..1.0));
        let p = lp(&scorer, &x, c, DEFAULT_MARGIN);
        let start = Instant::now();
        let sol = solve_group_lp(&p).unwrap();
        lp_time += start.elapsed();
        let grid = grid_minimum(&p, 5.0, 0.01);
        worst = worst.max((grid - sol.objective).abs());
        if grid < sol.objective - 1e-9 {
            below += 1;
        }
    }
    let pass = worst <= 0.02 && below == 0 && lp_time < Duration::from_secs(5);
    verdict(
        "lp_matches_brute_force_grid",
        pass,
        &format!("50 problems, max |grid - lp| = {worst:.5}, grid below lp {below} times, lp time {lp_time:?}"),
    );
}

#[test]
fn lp_and_penalized_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = 1000.0;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut fails = Vec::new();
    let start = Instant::now();
    for t in 0..20 {
        let d = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=10);
        let (scorer, x) = random_problem(&mut rng, d, m, (1.0, 2.0));
        let lp_sol = solve_group_lp(&lp(&scorer, &x, c, DEFAULT_MARGIN)).unwrap();
        let set = InstanceSet::new(x, (0..m).collect(), &scorer).unwrap();
        let pen = solve_penalized(&set, &scorer, &PenalizedConfig::new(d, c)).unwrap();
        let gap = (pen.objective - lp_sol.objective).abs();
        let tol = (0.01 * lp_sol.objective.abs()).max(1e-3);
        worst_excess = worst_excess.max(gap - tol);
        if gap > tol {
            fails.push(format!("#{t}: penalized {:.6} vs lp {:.6}", pen.objective, lp_sol.objective));
        }
    }
    let elapsed = start.elapsed();
    let pass = fails.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        "lp_and_penalized_agree",
        pass,
        &format!(
            "20 problems at C = {c}, worst (gap - tolerance) = {worst_excess:.2e}, {elapsed:?}{}",
            if fails.is_empty() { String::new() } else { format!(", {}", fails.join("; ")) }
        ),
    );
}

#[test]
fn slack_decreases_with_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = [0.1, 1.0, 10.0, 100.0];
    let mut violations = 0;
    let mut nontrivial = 0;
    for _ in 0..40 {
        let d = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=10);
        let (scorer, x) = random_problem(&mut rng, d, m, (0.05, 2.0));
        let mask: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.8)).collect();
        let sums: Vec<f64> = grid
            .iter()
            .map(|&c| {
                let p = lp(&scorer, &x, c, DEFAULT_MARGIN).with_mask(mask.clone());
                solve_group_lp(&p).unwrap().slacks.iter().sum()
            })
            .collect();
        violations += sums.windows(2).filter(|s| s[1] > s[0] + 1e-7).count();
        if sums[0] > sums[3] + 1e-7 {
            nontrivial += 1;
        }
    }
    verdict(
        "slack_decreases_with_c",
        violations == 0,
        &format!("40 problems x C in {grid:?}: {violations} increases, {nontrivial} problems with a strict decrease"),
    );
}

fn lp_solver<'a>(
    scorer: &'a LinearScorer,
    set: &'a InstanceSet,
    c: f64,
) -> impl FnMut(&Blacklist) -> groupcf::Result<GroupDelta> + 'a {
    move |bl| {
        let p = GroupLpProblem::new(scorer.clone(), set.x().clone(), c, DEFAULT_MARGIN).with_mask(bl.mask(set.dim()));
        Ok(solve_group_lp(&p)?.into_group_delta(&p))
    }
}

#[test]
fn diversity_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut overlaps = 0;
    let mut prefix_breaks = 0;
    let mut rounds = 0;
    for _ in 0..15 {
        let d = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=8);
        let (scorer, x) = random_problem(&mut rng, d, m, (0.5, 2.0));
        let set = InstanceSet::new(x, (0..m).collect(), &scorer).unwrap();
        let full = diverse_explanations(&set, &scorer, d, SUPPORT_TOL, lp_solver(&scorer, &set, 100.0)).unwrap();
        rounds += full.deltas.len();
        let supports: Vec<BTreeSet<usize>> = full.deltas.iter().map(|g| g.support(SUPPORT_TOL)).collect();
        for i in 0..supports.len() {
            for j in 0..i {
                if !supports[i].is_disjoint(&supports[j]) {
                    overlaps += 1;
                }
            }
        }
        for k in 1..=full.deltas.len() {
            let part = diverse_explanations(&set, &scorer, k, SUPPORT_TOL, lp_solver(&scorer, &set, 100.0)).unwrap();
            if part.deltas[..] != full.deltas[..k] {
                prefix_breaks += 1;
            }
        }
    }

    let scorer = LinearScorer::new(vec![1.0, 0.0], 0.0);
    let set = InstanceSet::new(array![[-2.0, 0.0]], vec![0], &scorer).unwrap();
    let single = diverse_explanations(&set, &scorer, 2, SUPPORT_TOL, lp_solver(&scorer, &set, 1000.0)).unwrap();
    let infeasible_ok = single.deltas.len() == 1 && single.termination == Termination::Infeasible;

    verdict(
        "diversity_suite",
        overlaps == 0 && prefix_breaks == 0 && infeasible_ok,
        &format!(
            "15 random runs ({rounds} deltas): {overlaps} overlapping pairs, {prefix_breaks} prefix mismatches; \
             w=(1,0) k=2 gave {} delta(s), termination {:?}",
            single.deltas.len(),
            single.termination
        ),
    );
}

#[test]
fn single_instance_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.gen_range(1..=6);
        let (scorer, x) = random_problem(&mut rng, d, 1, (0.1, 2.0));
        let sol = solve_group_lp(&lp(&scorer, &x, 1000.0, 0.0)).unwrap();
        let deficit = -scorer.score(x.row(0));
        let max_w = scorer.weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        let expected = deficit.max(0.0) / max_w;
        worst = worst.max((sol.objective - expected).abs());
    }
    verdict(
        "single_instance_reduction",
        worst <= 1e-6,
        &format!("50 instances, max |objective - deficit/max|w|| = {worst:.2e}"),
    );
}

#[test]
fn large_c_covers_everyone() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst_cov: f64 = 1.0;
    let mut worst_slack: f64 = 0.0;
    for _ in 0..40 {
        let d = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=20);
        let (scorer, x) = random_problem(&mut rng, d, m, (0.05, 2.0));
        let mut mask: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.6)).collect();
        if !(0..d).any(|j| mask[j] && scorer.weights[j] != 0.0) {
            let j = rng.gen_range(0..d);
            mask[j] = true;
        }
        let p = lp(&scorer, &x, 1e6, DEFAULT_MARGIN).with_mask(mask);
        let sol = solve_group_lp(&p).unwrap();
        let set = InstanceSet::new(x, (0..m).collect(), &scorer).unwrap();
        worst_cov = worst_cov.min(coverage(sol.delta.view(), &set, &scorer).unwrap());
        worst_slack = worst_slack.max(sol.slacks.iter().fold(0.0, |a: f64, s| a.max(*s)));
    }
    verdict(
        "large_c_covers_everyone",
        worst_cov == 1.0 && worst_slack <= 1e-9,
        &format!("40 problems at C = 1e6: min coverage {worst_cov}, max slack {worst_slack:.1e}"),
    );
}

#[test]
fn ibm_qualitative_reproduction() {
    let data = ibm_csv();
    if !data.exists() {
        verdict("ibm_qualitative_reproduction", false, &format!("data file {} not found", data.display()));
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let start = Instant::now();
    let base = ["--data-path", path_str(&data), "--output-dir", path_str(out), "--classifier", "logistic", "--k", "3"];
    ok(&groupcf(&[&["train"], &base[..]].concat()));
    ok(&groupcf(&[&["explain"], &base[..]].concat()));
    let elapsed = start.elapsed();

    let report = json(&out.join("report.json"));
    let deltas = report["report"]["deltas"].as_array().unwrap();
    let mut moves: Vec<(String, f64)> = Vec::new();
    let mut low_coverage = Vec::new();
    for (i, d) in deltas.iter().enumerate() {
        let cov = d["coverage"].as_f64().unwrap();
        if cov < 0.8 {
            low_coverage.push(format!("#{} at {cov:.3}", i + 1));
        }
        for ch in d["changes"].as_array().unwrap() {
            moves.push((ch["feature"].as_str().unwrap().to_string(), ch["delta_original"].as_f64().unwrap()));
        }
    }
    let find = |name: &str| moves.iter().find(|(f, _)| f == name).map(|(_, v)| *v);
    let wanted = [
        ("PercentSalaryHike", 1.0),
        ("YearsSinceLastPromotion", -1.0),
        ("JobSatisfaction", 1.0),
    ];
    let mut problems = Vec::new();
    for (name, sign) in wanted {
        match find(name) {
            None => problems.push(format!("{name} absent")),
            Some(v) if v * sign <= 0.0 => problems.push(format!("{name} moves the wrong way ({v:+.3})")),
            Some(_) => {}
        }
    }
    if !low_coverage.is_empty() {
        problems.push(format!("coverage below 0.8 for {}", low_coverage.join(", ")));
    }
    if elapsed >= Duration::from_secs(60) {
        problems.push(format!("took {elapsed:?}"));
    }
    let found: Vec<String> = moves.iter().map(|(f, v)| format!("{f} {v:+.3}")).collect();
    verdict(
        "ibm_qualitative_reproduction",
        problems.is_empty(),
        &format!("recommended [{}] in {elapsed:?}; {}", found.join(", "), if problems.is_empty() { "ok".to_string() } else { problems.join("; ") }),
    );
}

#[test]
fn cli_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let synthetic = synthetic_csv(dir.path(), 200, 21);
    let ibm = ibm_csv();
    let cases: [(&str, &std::path::Path, &[&str]); 2] = [
        ("logistic", ibm.as_path(), &["--k", "3"]),
        ("forest", synthetic.as_path(), &["--classifier", "forest", "--n-trees", "8", "--max-depth", "4", "--k", "2"]),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (label, data, opts) in cases {
        let mut reports = Vec::new();
        for run in ["a", "b"] {
            let out = dir.path().join(format!("{label}-{run}"));
            let mut args = vec!["--data-path", path_str(data), "--output-dir", path_str(&out), "--seed", "3"];
            args.extend_from_slice(opts);
            ok(&groupcf(&[&["train"], &args[..]].concat()));
            ok(&groupcf(&[&["explain"], &args[..]].concat()));
            reports.push((fs::read(out.join("report.json")).unwrap(), fs::read(out.join("report.txt")).unwrap()));
        }
        let same = reports[0] == reports[1];
        pass &= same;
        details.push(format!("{label}: {}", if same { "identical" } else { "different" }));
    }
    verdict("cli_runs_are_byte_identical", pass, &details.join(", "));
}
