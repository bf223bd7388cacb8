//! Built-in invariant checks over tiny designs.
//!
//! Each check exercises one cross-cutting identity with designs small enough
//! to verify against brute force in milliseconds. The battery is meant as a
//! quick installation check, not a replacement for the test suite.

use entropy_sampler::table::fmt_float;
use rejective::approx::{approx_inclusion, calibrate_design};
use rejective::correlation::{central_moment_exact, lemma4_decompose, JointInclusionTable};
use rejective::edgeworth::edgeworth_pmf_approx;
use rejective::pmf::pmf;
use rejective::sampler::SequentialSampler;
use rejective::{CentralMomentQuery, Design, DesignOracle, Formula};

type Check = (&'static str, fn() -> Result<(), String>);

const CHECKS: &[Check] = &[
    ("equal-design-closed-forms", equal_design_closed_forms),
    ("oracle-vs-enumeration", oracle_vs_enumeration),
    ("moment-decomposition", moment_decomposition),
    ("sequential-path-probabilities", sequential_path_probabilities),
    ("edgeworth-centre", edgeworth_centre),
    ("pair-approximations-agree", pair_approximations_agree),
    ("calibration-round-trip", calibration_round_trip),
    ("float-format-round-trip", float_format_round_trip),
];

/// Runs every check, printing one line per pass.
pub fn run() -> Result<(), String> {
    for (name, check) in CHECKS {
        check().map_err(|message| format!("selftest {name}: {message}"))?;
        println!("ok {name}");
    }
    println!("selftest: {} checks passed", CHECKS.len());
    Ok(())
}

fn staircase() -> Design {
    Design::new(vec![0.15, 0.3, 0.45, 0.55, 0.7, 0.85], 3).expect("valid builtin design")
}

fn ensure(condition: bool, message: impl Into<String>) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn equal_design_closed_forms() -> Result<(), String> {
    let design = Design::new(vec![0.5; 6], 3).map_err(|e| e.to_string())?;
    let oracle = DesignOracle::new(design).map_err(|e| e.to_string())?;
    for k in 1..=3_usize {
        let units: Vec<usize> = (0..k).collect();
        let value = oracle.inclusion(&units).map_err(|e| e.to_string())?.value;
        let expected: f64 = (0..k).map(|j| (3 - j) as f64 / (6 - j) as f64).product();
        ensure(
            (value - expected).abs() < 1e-12,
            format!("order {k}: {value} vs {expected}"),
        )?;
    }
    Ok(())
}

fn oracle_vs_enumeration() -> Result<(), String> {
    let design = staircase();
    let oracle = DesignOracle::new(design.clone()).map_err(|e| e.to_string())?;
    let enumeration = rejective::exact::enumerate_rejective(&design).map_err(|e| e.to_string())?;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let fast = oracle.inclusion(&[i, j]).map_err(|e| e.to_string())?.value;
            let slow = enumeration
                .joint_inclusion(&[i, j])
                .map_err(|e| e.to_string())?;
            ensure(
                (fast - slow).abs() < 1e-12,
                format!("pair ({i},{j}): {fast} vs {slow}"),
            )?;
        }
    }
    Ok(())
}

fn moment_decomposition() -> Result<(), String> {
    let oracle = DesignOracle::new(staircase()).map_err(|e| e.to_string())?;
    let units = vec![0, 2, 5];
    let table = JointInclusionTable::from_oracle(&oracle, &units).map_err(|e| e.to_string())?;
    let decomposed = lemma4_decompose(&table, &units).map_err(|e| e.to_string())?;
    let query = CentralMomentQuery::new(units, vec![1, 1, 1]).map_err(|e| e.to_string())?;
    let direct = central_moment_exact(&oracle, &query).map_err(|e| e.to_string())?;
    ensure(
        (decomposed - direct).abs() < 1e-12,
        format!("{decomposed} vs {direct}"),
    )
}

fn sequential_path_probabilities() -> Result<(), String> {
    let design = staircase();
    let sampler = SequentialSampler::new(design.clone()).map_err(|e| e.to_string())?;
    let enumeration = rejective::exact::enumerate_rejective(&design).map_err(|e| e.to_string())?;
    for (sample, probability) in enumeration.entries() {
        let path = sampler.path_probability(sample).map_err(|e| e.to_string())?;
        ensure(
            (path - probability).abs() < 1e-12,
            format!("sample {sample:?}: {path} vs {probability}"),
        )?;
    }
    Ok(())
}

fn edgeworth_centre() -> Result<(), String> {
    let design = Design::new(vec![0.5; 32], 16).map_err(|e| e.to_string())?;
    let exact = pmf(&design).at(16);
    let f0 = edgeworth_pmf_approx(&design, 16, 0).map_err(|e| e.to_string())?;
    let f4 = edgeworth_pmf_approx(&design, 16, 4).map_err(|e| e.to_string())?;
    ensure(
        (exact - f4).abs() < (exact - f0).abs(),
        "fourth-order correction did not improve on the plain normal",
    )?;
    ensure(
        (exact - f4).abs() < 1e-4,
        format!("fourth-order error {} too large", (exact - f4).abs()),
    )
}

fn pair_approximations_agree() -> Result<(), String> {
    let oracle = DesignOracle::new(staircase()).map_err(|e| e.to_string())?;
    let a = approx_inclusion(&oracle, &[1, 4], Formula::Theorem1Pi).map_err(|e| e.to_string())?;
    let b = approx_inclusion(&oracle, &[1, 4], Formula::Hajek2).map_err(|e| e.to_string())?;
    ensure(
        a.approx_value.to_bits() == b.approx_value.to_bits(),
        format!("{} vs {}", a.approx_value, b.approx_value),
    )
}

fn calibration_round_trip() -> Result<(), String> {
    let oracle = DesignOracle::new(staircase()).map_err(|e| e.to_string())?;
    let targets = oracle.first_order().to_vec();
    let calibrated = calibrate_design(&targets, 3, 1e-10, 200).map_err(|e| e.to_string())?;
    let back = DesignOracle::new(calibrated).map_err(|e| e.to_string())?;
    let worst = back
        .first_order()
        .iter()
        .zip(&targets)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    ensure(worst < 1e-8, format!("residual {worst}"))
}

fn float_format_round_trip() -> Result<(), String> {
    for value in [0.1, 2.0 / 3.0, 1.0 + f64::EPSILON, 6.02e23, -3.2e-5] {
        let parsed: f64 = fmt_float(value)
            .parse()
            .map_err(|e| format!("unparseable float text: {e}"))?;
        ensure(
            parsed.to_bits() == value.to_bits(),
            format!("{value} did not round-trip"),
        )?;
    }
    Ok(())
}
