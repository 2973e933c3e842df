use std::fmt::Write as _;

use covberry::berry::{
    berry_phase_closed, berry_phase_loop_connection, berry_phase_overlap_extrapolated, compare_oracles,
    ClosedFormVariant, LoopParams, OracleComparison, PhaseResult, PREFACTOR_SYMBOL,
};
use covberry::reference::{published_row, PUBLISHED_TABLE};
use covberry::validate::{coefficient_drift, validate, ValidationOptions, ValidationReport, CONVERGENCE_TOL};
use covberry::{Model, PhysicalConstants, StateIndex, ZeroClass};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, MethodChoice, RunConfig};
use crate::Failure;

/// Frequency used for states without a published row.
pub const FALLBACK_OMEGA_MHZ: f64 = 240.4;

/// Output of one command: rendered text plus the exit outcome.
pub struct Rendered {
    pub text: String,
    pub outcome: Result<(), Failure>,
}

fn constants(cfg: &RunConfig, omega_mhz: f64) -> Result<PhysicalConstants, Failure> {
    if cfg.dimensionless {
        return Ok(PhysicalConstants::dimensionless());
    }
    Ok(PhysicalConstants::electron(omega_mhz, cfg.omega_convention, cfg.hbar_convention)?)
}

fn row_omega(cfg: &RunConfig, j: StateIndex) -> f64 {
    cfg.omega_mhz
        .or_else(|| published_row(j.get()).map(|r| r.omega_mhz))
        .unwrap_or(FALLBACK_OMEGA_MHZ)
}

fn loop_params(cfg: &RunConfig, model: &Model, j: StateIndex) -> Result<LoopParams, Failure> {
    let coeffs = model.correction_coefficients(j)?;
    let lp = LoopParams::perturbative(&coeffs, cfg.steps)?;
    let lp = match cfg.radius {
        Some(r) => lp.with_radius(r),
        None => lp,
    };
    Ok(lp.reversed(cfg.backwards))
}

fn units(cfg: &RunConfig) -> String {
    if cfg.dimensionless {
        format!("dimensionless; multiply by {PREFACTOR_SYMBOL}")
    } else {
        format!("SI ({} omega, {} convention)", cfg.omega_convention, cfg.hbar_convention)
    }
}

#[derive(Debug, Serialize)]
struct CsvRow {
    j: usize,
    omega_hz: f64,
    gamma_over_r2: f64,
    method: String,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct TableRow {
    j: usize,
    omega_mhz: f64,
    omega_hz: f64,
    gamma_over_r2: f64,
    method: String,
    converged: bool,
    dimensionless: f64,
    term_scale: f64,
    prefactor: f64,
    coefficient_drift: f64,
    published: f64,
}

impl TableRow {
    fn csv(&self) -> CsvRow {
        CsvRow {
            j: self.j,
            omega_hz: self.omega_hz,
            gamma_over_r2: self.gamma_over_r2,
            method: self.method.clone(),
            converged: self.converged,
        }
    }
}

#[derive(Debug, Serialize)]
struct TableDocument<'a> {
    units: String,
    prefactor_symbol: &'static str,
    config: &'a RunConfig,
    rows: Vec<TableRow>,
}

fn csv_text<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Io(e.to_string()))
}

fn json_text<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn table(cfg: &RunConfig) -> Result<Rendered, Failure> {
    let model = Model::new(cfg.nodes)?;
    let fine = Model::new(cfg.nodes.doubled())?;
    let selected: Vec<_> = PUBLISHED_TABLE
        .iter()
        .filter(|r| cfg.states.contains(r.index()))
        .collect();
    let rows = selected
        .par_iter()
        .map(|published| {
            let j = published.index();
            let omega = cfg.omega_mhz.unwrap_or(published.omega_mhz);
            let r = berry_phase_closed(&model, j, &constants(cfg, omega)?)?;
            let drift = coefficient_drift(&model, &fine, j)?;
            Ok(TableRow {
                j: j.get(),
                omega_mhz: omega,
                omega_hz: omega * 1e6,
                gamma_over_r2: r.gamma_over_r2,
                method: r.method.to_string(),
                converged: drift <= CONVERGENCE_TOL,
                dimensionless: r.dimensionless,
                term_scale: r.term_scale,
                prefactor: r.prefactor,
                coefficient_drift: drift,
                published: published.gamma_over_r2,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let outcome = match rows.iter().filter(|r| !r.converged).map(|r| r.j.to_string()).collect::<Vec<_>>() {
        v if v.is_empty() => Ok(()),
        v => Err(Failure::NonConvergence(format!(
            "coefficients for j = {} change by more than {CONVERGENCE_TOL:.0e} when the nodes are doubled",
            v.join(", ")
        ))),
    };
    let text = match cfg.format {
        Format::Csv => csv_text(rows.iter().map(TableRow::csv))?,
        Format::Json => json_text(&TableDocument {
            units: units(cfg),
            prefactor_symbol: PREFACTOR_SYMBOL,
            config: cfg,
            rows,
        })?,
        Format::Pretty => {
            let mut s = String::new();
            writeln!(s, "units: {}", units(cfg)).unwrap();
            writeln!(
                s,
                "{:>3}  {:>9}  {:>14}  {:>14}  {:>10}  {:>9}  {:>9}",
                "j", "ω (MHz)", "γ/r²", "2πΣ|a||b|", "γ/scale", "published", "converged"
            )
            .unwrap();
            for r in &rows {
                writeln!(
                    s,
                    "{:>3}  {:>9}  {:>14.6e}  {:>14.6}  {:>10.2e}  {:>9}  {:>9}",
                    r.j,
                    r.omega_mhz,
                    r.gamma_over_r2,
                    r.term_scale,
                    r.dimensionless / r.term_scale,
                    r.published,
                    r.converged
                )
                .unwrap();
            }
            s
        }
    };
    Ok(Rendered { text, outcome })
}

#[derive(Debug, Serialize)]
struct PhaseDocument<'a> {
    units: String,
    prefactor_symbol: &'static str,
    note: Option<&'static str>,
    result: &'a PhaseResult,
}

pub fn phase(cfg: &RunConfig, j: StateIndex) -> Result<Rendered, Failure> {
    let model = Model::new(cfg.nodes)?;
    let omega = row_omega(cfg, j);
    let c = constants(cfg, omega)?;
    let note = ZeroClass::of(j).map(|z| z.note());
    let result = match (cfg.method, note) {
        (_, Some(_)) | (MethodChoice::Closed, None) => berry_phase_closed(&model, j, &c)?,
        (MethodChoice::Connection, None) => berry_phase_loop_connection(&model, j, &loop_params(cfg, &model, j)?, &c)?,
        (MethodChoice::Overlap, None) => {
            berry_phase_overlap_extrapolated(&model, j, &loop_params(cfg, &model, j)?, &c)?
        }
    };
    let text = match cfg.format {
        Format::Csv => csv_text([CsvRow {
            j: j.get(),
            omega_hz: omega * 1e6,
            gamma_over_r2: result.gamma_over_r2,
            method: result.method.to_string(),
            converged: true,
        }])?,
        Format::Json => json_text(&PhaseDocument {
            units: units(cfg),
            prefactor_symbol: PREFACTOR_SYMBOL,
            note,
            result: &result,
        })?,
        Format::Pretty => {
            let mut s = String::new();
            writeln!(s, "state      {}  {:?}", j.get(), j.qn()).unwrap();
            writeln!(s, "method     {}", result.method).unwrap();
            if cfg.dimensionless {
                writeln!(s, "γ/r²       {:.12e} × {PREFACTOR_SYMBOL}", result.dimensionless).unwrap();
            } else {
                writeln!(s, "ω          {omega} MHz ({})", cfg.omega_convention).unwrap();
                writeln!(s, "γ/r²       {:.12e}", result.gamma_over_r2).unwrap();
                writeln!(s, "pure part  {:.12e} × {PREFACTOR_SYMBOL}", result.dimensionless).unwrap();
            }
            writeln!(s, "2πΣ|a||b|  {:.12}", result.term_scale).unwrap();
            if result.term_scale > 0.0 {
                writeln!(s, "γ/scale    {:.3e}", result.dimensionless / result.term_scale).unwrap();
            }
            if let Some(p) = published_row(j.get()) {
                writeln!(s, "published  {} at {} MHz", p.gamma_over_r2, p.omega_mhz).unwrap();
            }
            if let Some(n) = note {
                writeln!(s, "note       {n}").unwrap();
            }
            s
        }
    };
    Ok(Rendered { text, outcome: Ok(()) })
}

#[derive(Debug, Serialize)]
struct OracleDocument<'a> {
    units: String,
    comparison: &'a OracleComparison,
}

pub fn oracle(cfg: &RunConfig, j: StateIndex) -> Result<Rendered, Failure> {
    if let Some(z) = ZeroClass::of(j) {
        return Err(Failure::Config(format!(
            "state {} has no phase to compare: {}",
            j.get(),
            z.note()
        )));
    }
    let model = Model::new(cfg.nodes)?;
    let c = constants(cfg, row_omega(cfg, j))?;
    let lp = loop_params(cfg, &model, j)?;
    let cmp = compare_oracles(&model, j, &lp, &c)?;
    let text = match cfg.format {
        Format::Csv => csv_text(
            [
                &cmp.closed,
                &cmp.connection,
                &cmp.overlap_at_radius,
                &cmp.overlap_at_half_radius,
                &cmp.overlap_extrapolated,
            ]
            .into_iter()
            .map(|r| CsvRow {
                j: j.get(),
                omega_hz: row_omega(cfg, j) * 1e6,
                gamma_over_r2: r.gamma_over_r2,
                method: match r.meta.radius {
                    Some(_) if r.meta.extrapolated => format!("{}@r->0", r.method),
                    Some(rad) => format!("{}@r={rad:e}", r.method),
                    None => r.method.to_string(),
                },
                converged: true,
            }),
        )?,
        Format::Json => json_text(&OracleDocument {
            units: units(cfg),
            comparison: &cmp,
        })?,
        Format::Pretty => {
            let mut s = String::new();
            writeln!(s, "state {}  steps {}  radius {:e}  {}", j.get(), lp.steps, lp.radius, units(cfg)).unwrap();
            writeln!(s, "scale (2πΣ|a||b|)        {:.12}", cmp.closed.term_scale).unwrap();
            for (name, r) in [
                ("closed", &cmp.closed),
                ("loop-connection", &cmp.connection),
                ("loop-overlap r", &cmp.overlap_at_radius),
                ("loop-overlap r/2", &cmp.overlap_at_half_radius),
                ("loop-overlap r→0", &cmp.overlap_extrapolated),
            ] {
                writeln!(s, "{name:<24} {:>+.12e}", r.gamma_over_r2).unwrap();
            }
            if let Some(res) = cmp.connection.meta.imaginary_residue {
                writeln!(s, "discarded residue        {res:+.3e}").unwrap();
            }
            writeln!(s, "closed vs connection     {:.3e}", cmp.closed_vs_connection).unwrap();
            writeln!(s, "closed vs overlap        {:.3e}", cmp.closed_vs_overlap).unwrap();
            writeln!(s, "connection vs overlap    {:.3e}", cmp.connection_vs_overlap).unwrap();
            s
        }
    };
    Ok(Rendered { text, outcome: Ok(()) })
}

#[derive(Debug, Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    kind: &'a str,
    passed: bool,
    value: f64,
    tolerance: f64,
}

pub fn run_validate(cfg: &RunConfig, variant: ClosedFormVariant) -> Result<Rendered, Failure> {
    let report: ValidationReport = validate(&ValidationOptions {
        config: cfg.nodes,
        steps: cfg.steps,
        variant,
        convergence: true,
    })?;
    let outcome = if !report.converged() {
        Err(Failure::NonConvergence("results change when the nodes are doubled".into()))
    } else if !report.invariants_passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Validation(names.join(", ")))
    } else {
        Ok(())
    };
    let text = match cfg.format {
        Format::Csv => csv_text(report.checks.iter().map(|c| CheckRow {
            name: &c.name,
            kind: match c.kind {
                covberry::validate::CheckKind::Invariant => "invariant",
                covberry::validate::CheckKind::Convergence => "convergence",
            },
            passed: c.passed,
            value: c.value,
            tolerance: c.tolerance,
        }))?,
        Format::Json => json_text(&report)?,
        Format::Pretty => {
            let mut s = String::new();
            for c in &report.checks {
                writeln!(s, "{c}").unwrap();
            }
            let failed = report.failures().count();
            writeln!(s, "{} checks, {} not passed", report.checks.len(), failed).unwrap();
            s
        }
    };
    Ok(Rendered { text, outcome })
}
