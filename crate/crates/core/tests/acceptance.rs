//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use covberry::berry::{loop_samples, overlap_phase, relative_difference, DEFAULT_STEPS};
use covberry::perturbation::Channel;
use covberry::reference::{PUBLISHED_PAIRS, PUBLISHED_TABLE, TABLE_FREQUENCIES_MHZ};
use covberry::rms::{state_table, Eigenvalue};
use covberry::validate::{jacobian_defect, orthonormality_defect, sum_rule_defect};
use covberry::{
    berry_phase_closed, berry_phase_loop_connection, berry_phase_overlap_extrapolated, Basis, HbarConvention,
    LoopParams, Model, OmegaConvention, PhysicalConstants, QuadConfig, RmsPoint, StateIndex,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAM_TOL: f64 = 1e-8;
const GRAM_BUDGET: Duration = Duration::from_secs(60);
const JACOBIAN_TOL: f64 = 1e-8;
const SUM_RULE_TOL: f64 = 1e-10;
const CONNECTION_TOL: f64 = 1e-6;
const OVERLAP_TOL: f64 = 1e-5;
const ORACLE_BUDGET: Duration = Duration::from_secs(600);
const PAIR_TOL: f64 = 1e-3;
const TABLE_TOL: f64 = 0.05;
const SCALING_TOL: f64 = 1e-9;
const BASIS_GAUGE_TOL: f64 = 1e-10;
const SAMPLE_GAUGE_TOL: f64 = 1e-12;

const NONZERO: [usize; 10] = [1, 2, 5, 6, 8, 9, 10, 13, 14, 16];

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        passed: true,
        detail: detail.into(),
    }
}

fn check(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn idx(j: usize) -> StateIndex {
    StateIndex::new(j).unwrap()
}

fn dimensionless() -> PhysicalConstants {
    PhysicalConstants::dimensionless()
}

fn orthonormality() -> (Outcome, Model) {
    let start = Instant::now();
    let model = Model::new(QuadConfig::uniform(128)).unwrap();
    let defect = orthonormality_defect(&model);
    let elapsed = start.elapsed();
    let nonzero = state_table().iter().filter(|r| r.is_nonzero()).count();
    let out = check(
        defect < GRAM_TOL && elapsed < GRAM_BUDGET && nonzero == NONZERO.len(),
        format!(
            "{nonzero} normalizable states, max |G - I| = {defect:.2e} (tol {GRAM_TOL:.0e}), {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
    (out, model)
}

fn eigenvalues() -> Outcome {
    let mut seen: Vec<Eigenvalue> = state_table().iter().map(|r| r.eigenvalue).collect();
    seen.sort();
    seen.dedup();
    let printed: Vec<String> = seen.iter().map(|e| e.to_string()).collect();
    let expected = ["7.5", "8.5", "9.5", "10.5"];
    // 2K/ħω = 2l + 4n_a + 3 for every row
    let exact = state_table()
        .iter()
        .all(|r| r.eigenvalue.twice_in_hbar_omega() == 2 * r.qn.l + 4 * r.qn.n_a + 3);
    check(printed == expected && exact, format!("levels {}", printed.join(", ")))
}

fn measure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let worst = (0..100)
        .map(|_| {
            let p = RmsPoint::new(
                rng.gen_range(0.05..4.0),
                rng.gen_range(0.05..PI - 0.05),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(-3.0..3.0),
            );
            jacobian_defect(&p, 1e-5)
        })
        .fold(0.0, f64::max);
    check(worst < JACOBIAN_TOL, format!("100 points, max relative defect {worst:.2e}"))
}

fn sum_rule(model: &Model) -> Outcome {
    let w = model.envelope_matrix();
    let m1 = model.channel_matrix(Channel::VPrime);
    let m2 = model.channel_matrix(Channel::VDoublePrime);
    let mut worst = 0.0f64;
    for r in 0..16 {
        for c in 0..16 {
            let diff = (m1[(r, c)] + m2[(r, c)] - w[(r, c)]).norm();
            // Δm = ±1 elements cancel between the channels; scale by the largest term
            let scale = w[(r, c)].norm().max(m1[(r, c)].norm()).max(m2[(r, c)].norm());
            if diff > 0.0 {
                worst = worst.max(diff / scale);
            }
        }
    }
    let global = sum_rule_defect(model);
    check(
        worst < SUM_RULE_TOL,
        format!("256 pairs, max element-relative {worst:.2e} (largest term as scale), matrix-relative {global:.2e}"),
    )
}

fn oracles(model: &Model) -> Outcome {
    let start = Instant::now();
    let c = dimensionless();
    let mut worst_conn = 0.0f64;
    let mut worst_over = 0.0f64;
    for j in NONZERO {
        let j = idx(j);
        let coeffs = model.correction_coefficients(j).unwrap();
        let lp = LoopParams::perturbative(&coeffs, DEFAULT_STEPS).unwrap();
        let closed = berry_phase_closed(model, j, &c).unwrap();
        let conn = berry_phase_loop_connection(model, j, &lp, &c).unwrap();
        let over = berry_phase_overlap_extrapolated(model, j, &lp, &c).unwrap();
        worst_conn = worst_conn.max(closed.relative_difference(&conn));
        worst_over = worst_over.max(closed.relative_difference(&over));
    }
    let elapsed = start.elapsed();
    check(
        worst_conn < CONNECTION_TOL && worst_over < OVERLAP_TOL && elapsed < ORACLE_BUDGET,
        format!(
            "connection {worst_conn:.2e} (tol {CONNECTION_TOL:.0e}), overlap {worst_over:.2e} \
             (tol {OVERLAP_TOL:.0e}), relative to max(|γ|, 2πΣ|a||b|), {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn zero_classes(model: &Model) -> Outcome {
    let c = dimensionless();
    let hyper = [3, 4, 11, 12].iter().all(|&j| {
        let r = berry_phase_closed(model, idx(j), &c).unwrap();
        r.gamma_over_r2 == 0.0 && model.correction_coefficients(idx(j)).is_err()
    });
    // m < n: the state vanishes, so it neither has a phase nor feeds any correction
    let rapidity = [7, 15].iter().all(|&j| {
        let r = berry_phase_closed(model, idx(j), &c).unwrap();
        let silent = StateIndex::all().all(|i| {
            Channel::BOTH
                .iter()
                .all(|&ch| model.matrix_element(i, idx(j), ch) == Complex64::new(0.0, 0.0))
        });
        let absent = NONZERO.iter().all(|&k| {
            let coeffs = model.correction_coefficients(idx(k)).unwrap();
            coeffs.a(idx(j)) == Complex64::new(0.0, 0.0) && coeffs.b(idx(j)) == Complex64::new(0.0, 0.0)
        });
        r.gamma_over_r2 == 0.0 && silent && absent
    });
    check(hyper && rapidity, "j ∈ {3,4,11,12} (l<n) and j ∈ {7,15} (m<n) give exactly 0")
}

fn pairs(model: &Model) -> Outcome {
    let c = dimensionless();
    let mut worst = 0.0f64;
    for (p, q) in PUBLISHED_PAIRS {
        let gp = berry_phase_closed(model, idx(p), &c).unwrap();
        let gq = berry_phase_closed(model, idx(q), &c).unwrap();
        worst = worst.max(relative_difference(
            gp.dimensionless,
            gq.dimensionless,
            gp.term_scale.max(gq.term_scale),
        ));
    }
    check(worst < PAIR_TOL, format!("max pair difference {worst:.2e} relative to 2πΣ|a||b|"))
}

fn table(model: &Model) -> Outcome {
    let dimless: Vec<(usize, f64, f64)> = NONZERO
        .iter()
        .map(|&j| {
            let r = berry_phase_closed(model, idx(j), &dimensionless()).unwrap();
            (j, r.dimensionless, r.term_scale)
        })
        .collect();
    let mut best: Option<(f64, String)> = None;
    let mut calibrated = false;
    for oc in [OmegaConvention::Angular, OmegaConvention::Cyclic] {
        for hc in [HbarConvention::Hbar, HbarConvention::H] {
            let rows: Vec<(f64, f64)> = PUBLISHED_TABLE
                .iter()
                .map(|row| {
                    let c = PhysicalConstants::electron(row.omega_mhz, oc, hc).unwrap();
                    let got = berry_phase_closed(model, row.index(), &c).unwrap().gamma_over_r2;
                    (got, row.gamma_over_r2)
                })
                .collect();
            let (g1, p1) = rows[0];
            let head = (g1 / p1 - 1.0).abs();
            let ratios = rows.iter().all(|&(g, p)| ((g / g1) / (p / p1) - 1.0).abs() < TABLE_TOL);
            calibrated |= head < TABLE_TOL && ratios;
            if best.as_ref().is_none_or(|(h, _)| head < *h) {
                best = Some((head, format!("{oc}/{hc}: γ₁/r² = {g1:.3e}")));
            }
        }
    }
    let (_, best) = best.unwrap();
    if calibrated {
        return pass(format!("calibrated, best {best}"));
    }
    // downgrade branch: golden dimensionless values recorded, structure must hold
    let golden: Vec<String> = dimless.iter().map(|(j, g, s)| format!("j{j}={g:.1e}/{s:.4}")).collect();
    let structure = pairs(model).passed && scaling(model).passed;
    check(
        structure,
        format!(
            "(downgraded) no convention reaches 1.057 within 5%; best {best}; \
             dimensionless γ/2πΣ|a||b|: {}",
            golden.join(" ")
        ),
    )
}

fn scaling(model: &Model) -> Outcome {
    let mut worst = 0.0f64;
    for j in NONZERO {
        let rescaled: Vec<(f64, f64)> = TABLE_FREQUENCIES_MHZ
            .iter()
            .map(|&mhz| {
                let c = PhysicalConstants::electron(mhz, OmegaConvention::Angular, HbarConvention::Hbar).unwrap();
                let r = berry_phase_closed(model, idx(j), &c).unwrap();
                let k = c.coupling_scale().powi(2);
                (r.gamma_over_r2 * k, r.term_scale * r.prefactor * k)
            })
            .collect();
        for w in rescaled.windows(2) {
            worst = worst.max(relative_difference(w[0].0, w[1].0, 0.0));
            worst = worst.max(relative_difference(w[0].1, w[1].1, 0.0));
        }
    }
    check(worst < SCALING_TOL, format!("max spread of γ·(Mω²)² over ω {worst:.2e}"))
}

fn gauge(model: &Model) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
    let phases: [f64; 16] = std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI));
    let rotated = Model::from_basis(Basis::with_phases(*model.config(), phases).unwrap()).unwrap();
    let c = dimensionless();
    let mut basis_worst = 0.0f64;
    let mut sample_worst = 0.0f64;
    for j in NONZERO {
        let a = berry_phase_closed(model, idx(j), &c).unwrap();
        let b = berry_phase_closed(&rotated, idx(j), &c).unwrap();
        basis_worst = basis_worst.max((a.dimensionless - b.dimensionless).abs());

        let coeffs = model.correction_coefficients(idx(j)).unwrap();
        let lp = LoopParams::perturbative(&coeffs, 64).unwrap();
        let samples = loop_samples(&coeffs, &lp);
        let gauged: Vec<[Complex64; 16]> = samples
            .iter()
            .map(|s| {
                let z = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
                s.map(|x| x * z)
            })
            .collect();
        let p0 = overlap_phase(model.gram(), &samples).unwrap();
        let p1 = overlap_phase(model.gram(), &gauged).unwrap();
        sample_worst = sample_worst.max((p0 - p1).abs());
    }
    check(
        basis_worst < BASIS_GAUGE_TOL && sample_worst < SAMPLE_GAUGE_TOL,
        format!("basis phases {basis_worst:.2e} (tol {BASIS_GAUGE_TOL:.0e}), sample phases {sample_worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let (first, model) = orthonormality();
    let results = [
        ("1 orthonormality", first),
        ("2 eigenvalue table", eigenvalues()),
        ("3 measure", measure()),
        ("4 channel sum rule", sum_rule(&model)),
        ("5 oracle equivalence", oracles(&model)),
        ("6 zero classes", zero_classes(&model)),
        ("7 pair equalities", pairs(&model)),
        ("8 table reproduction", table(&model)),
        ("9 scaling law", scaling(&model)),
        ("10 gauge robustness", gauge(&model)),
    ];
    let mut failed = 0;
    for (name, out) in &results {
        println!("{} {name}: {}", if out.passed { "PASS" } else { "FAIL" }, out.detail);
        failed += usize::from(!out.passed);
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
