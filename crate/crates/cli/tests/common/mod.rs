#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FEATURES: [&str; 8] = [
    "EnvironmentSatisfaction",
    "JobInvolvement",
    "JobSatisfaction",
    "MonthlyIncome",
    "PercentSalaryHike",
    "YearsInCurrentRole",
    "YearsSinceLastPromotion",
    "YearsWithCurrManager",
];

/// The IBM HR attrition table shipped in `data/`, or `GROUPCF_IBM_CSV` if set.
pub fn ibm_csv() -> PathBuf {
    if let Ok(p) = std::env::var("GROUPCF_IBM_CSV") {
        return PathBuf::from(p);
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ibm_hr_attrition.csv")
}

/// Runs the `groupcf` binary.
pub fn groupcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupcf"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("failed to start groupcf")
}

pub fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "groupcf failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A small CSV with the IBM column names and a planted attrition rule that
/// depends mostly on satisfaction, income and promotion delay.
pub fn synthetic_csv(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("Age,Attrition,Department,");
    text.push_str(&FEATURES.join(","));
    text.push('\n');
    for i in 0..n {
        let env_sat = rng.gen_range(1..=4);
        let involvement = rng.gen_range(1..=4);
        let job_sat = rng.gen_range(1..=4);
        let income = rng.gen_range(1000..20000);
        let hike = rng.gen_range(11..=25);
        let in_role = rng.gen_range(0..=15);
        let since_promo = rng.gen_range(0..=15);
        let with_mgr = rng.gen_range(0..=15);
        let z = -0.9 * (job_sat as f64 - 2.5) - 0.6 * (env_sat as f64 - 2.5) - (income as f64 - 10500.0) / 5000.0
            + 0.25 * (since_promo as f64 - 7.0)
            + rng.gen_range(-1.0..1.0);
        let attrition = if z > 0.8 { "Yes" } else { "No" };
        let dept = if i % 5 == 4 { "Sales" } else { "Research & Development" };
        let _ = writeln!(
            text,
            "{},{attrition},{dept},{env_sat},{involvement},{job_sat},{income},{hike},{in_role},{since_promo},{with_mgr}",
            rng.gen_range(18..60)
        );
    }
    let path = dir.join("hr.csv");
    fs::write(&path, text).unwrap();
    path
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
