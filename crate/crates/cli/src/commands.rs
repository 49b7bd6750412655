use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use usd_core::analytic::{solve_analytic, solve_gu};
use usd_core::lp::solve_lp_refined;
use usd_core::lsd::{kkt_certificate, solve_lsd};
use usd_core::oracle::{grid_bound, grid_maximize, simulate_measurement};
use usd_core::solution::better_candidate;
use usd_core::{Ensemble, Method, PovmSolution, Region, UsdError};

use crate::error::{CliError, CliResult, EXIT_INVALID, EXIT_OK};
use crate::input::{load, LoadedInput};
use crate::report::{
    matrix_pairs, pairs, Agreement, GramReport, SimulateReport, Skipped, SolutionReport,
    SolveReport, ValidateReport, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Analytic,
    Lp,
    Lsd,
    Oracle,
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub grid: usize,
    pub refine_steps: usize,
}

/// Returns the report and the exit code: invalid ensembles still produce a
/// report, with diagnostics.
pub fn cmd_validate(path: &Path, tol: f64) -> CliResult<(ValidateReport, i32)> {
    let input = match load(path) {
        Ok(input) => input,
        Err(e @ CliError::Io { .. }) => return Err(e),
        Err(e) => {
            let report = ValidateReport {
                schema_version: SCHEMA_VERSION,
                input_digest: std::fs::read(path)
                    .map(|b| crate::input::digest(&b))
                    .unwrap_or_default(),
                valid: false,
                states: 0,
                dimension: 0,
                min_gram_eigenvalue: None,
                diagnostics: vec![e.to_string()],
            };
            return Ok((report, EXIT_INVALID));
        }
    };
    let min_gram_eigenvalue = input.min_gram_eigenvalue();
    let (valid, diagnostics) = match input.ensemble(tol) {
        Ok(_) => (true, Vec::new()),
        Err(e) => (false, vec![e.to_string()]),
    };
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        input_digest: input.digest.clone(),
        valid,
        states: input.vectors.len(),
        dimension: input.file.dimension,
        min_gram_eigenvalue,
        diagnostics,
    };
    Ok((report, if valid { EXIT_OK } else { EXIT_INVALID }))
}

fn skippable(e: &UsdError) -> bool {
    matches!(e, UsdError::Unsupported(_) | UsdError::TooManyStates { .. })
}

fn analytic(input: &LoadedInput, ensemble: &Ensemble) -> Result<PovmSolution, UsdError> {
    match solve_analytic(ensemble) {
        Err(e) if skippable(&e) => match &input.group {
            Some((generator, group)) => Ok(solve_gu(generator, group)?.solution),
            None => Err(e),
        },
        other => other,
    }
}

fn run_method(
    method: MethodArg,
    input: &LoadedInput,
    ensemble: &Ensemble,
    opts: &SolveOptions,
) -> Result<PovmSolution, UsdError> {
    match method {
        MethodArg::Analytic => analytic(input, ensemble),
        MethodArg::Lsd => solve_lsd(ensemble),
        MethodArg::Lp => solve_lp_refined(ensemble, opts.refine_steps),
        MethodArg::Oracle => grid_maximize(ensemble, opts.grid),
        MethodArg::All => unreachable!("expanded by the caller"),
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Analytic => "analytic",
        MethodArg::Lp => "lp",
        MethodArg::Lsd => "lsd",
        MethodArg::Oracle => "oracle",
        MethodArg::All => "all",
    }
}

fn solution_report(
    region: &Region,
    ensemble: &Ensemble,
    s: &PovmSolution,
    elapsed_ms: f64,
    grid: Option<f64>,
) -> SolutionReport {
    SolutionReport {
        method: s.method,
        p: s.p.to_vec(),
        q: s.q_fail,
        p_success: s.p_success,
        min_eigenvalue_pi0: s.certificate.min_eigenvalue_pi0,
        kkt_certified: kkt_certificate(ensemble, s),
        reciprocal_states: region
            .frame()
            .reciprocal_states
            .iter()
            .map(|v| pairs(v))
            .collect(),
        elapsed_ms,
        grid_bound: grid,
    }
}

pub fn cmd_solve(path: &Path, method: MethodArg, opts: &SolveOptions) -> CliResult<SolveReport> {
    let input = load(path)?;
    let ensemble = input.ensemble(opts.tol)?;
    let region = Region::new(&ensemble)?;
    let methods: Vec<MethodArg> = match method {
        MethodArg::All => {
            vec![
                MethodArg::Analytic,
                MethodArg::Lsd,
                MethodArg::Lp,
                MethodArg::Oracle,
            ]
        }
        m => vec![m],
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for m in &methods {
        let start = Instant::now();
        match run_method(*m, &input, &ensemble, opts) {
            Ok(s) => {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                let bound = (*m == MethodArg::Oracle).then(|| grid_bound(&ensemble, opts.grid));
                reports.push(solution_report(&region, &ensemble, &s, ms, bound));
            }
            Err(e) if skippable(&e) && method == MethodArg::All => skipped.push(Skipped {
                method: method_name(*m).into(),
                reason: e.to_string(),
            }),
            Err(e) if skippable(&e) => {
                return Err(CliError::Unsupported(format!(
                    "{e}; try --method lp or --method oracle"
                )))
            }
            Err(e) => return Err(e.into()),
        }
    }
    if reports.is_empty() {
        return Err(CliError::Unsupported(
            "no solver handles this ensemble".into(),
        ));
    }
    let agreement = (method == MethodArg::All).then(|| agreement(&reports));
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        input_digest: input.digest.clone(),
        labels: input.labels(),
        priors: ensemble.priors().to_vec(),
        reports,
        skipped,
        agreement,
    })
}

fn agreement(reports: &[SolutionReport]) -> Agreement {
    let exact: Vec<f64> = reports
        .iter()
        .filter(|r| r.method != Method::Oracle)
        .map(|r| r.q)
        .collect();
    let lo = exact.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = exact.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let max_delta_q = if exact.is_empty() { 0.0 } else { hi - lo };
    let oracle = reports.iter().find(|r| r.method == Method::Oracle);
    let oracle_gap = oracle.filter(|_| !exact.is_empty()).map(|o| o.q - lo);
    let oracle_bound = oracle.and_then(|o| o.grid_bound);
    let oracle_ok = match (oracle_gap, oracle_bound) {
        (Some(gap), Some(bound)) => gap >= -1e-9 && gap <= bound + 1e-9,
        _ => true,
    };
    Agreement {
        max_delta_q,
        oracle_gap,
        oracle_bound,
        consistent: max_delta_q <= 1e-6 && oracle_ok,
    }
}

/// Boundary samples as CSV, with the polytope vertices in a trailing comment
/// block.
pub fn cmd_region(path: &Path, samples: usize, tol: f64) -> CliResult<String> {
    let input = load(path)?;
    let ensemble = input.ensemble(tol)?;
    let n = ensemble.len();
    if !(2..=3).contains(&n) {
        return Err(CliError::Unsupported(format!(
            "region export needs two or three states, got {n}"
        )));
    }
    let region = Region::new(&ensemble)?;
    let points = region.sample_boundary(samples)?;
    let mut out = (1..=n)
        .map(|i| format!("p{i}"))
        .collect::<Vec<_>>()
        .join(",")
        + "\n";
    for p in &points {
        out += &(p
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
            + "\n");
    }
    out += "# polytope vertices (subset: p)\n";
    out += &format!("# origin: {}\n", vec!["0"; n].join(","));
    for v in region.vertices()? {
        let subset: Vec<String> = v.subset.iter().map(|i| (i + 1).to_string()).collect();
        let p: Vec<String> = v.p.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "# {{{}}}: {}", subset.join(","), p.join(","));
    }
    Ok(out)
}

pub fn cmd_gram(path: &Path, tol: f64) -> CliResult<GramReport> {
    let input = load(path)?;
    let ensemble = input.ensemble(tol)?;
    let region = Region::new(&ensemble)?;
    let frame = region.frame();
    Ok(GramReport {
        schema_version: SCHEMA_VERSION,
        input_digest: input.digest.clone(),
        gram: matrix_pairs(&frame.gram),
        gram_spectrum: frame.gram.eigenvalues()?,
        dual_gram: matrix_pairs(&frame.dual_gram),
        dual_gram_spectrum: frame.dual_gram.eigenvalues()?,
    })
}

/// Solves with every exact method that applies, keeps the best solution and
/// simulates it.
pub fn cmd_simulate(
    path: &Path,
    trials: u64,
    seed: u64,
    opts: &SolveOptions,
) -> CliResult<SimulateReport> {
    if trials == 0 {
        return Err(CliError::Invalid("trials must be at least 1".into()));
    }
    let input = load(path)?;
    let ensemble = input.ensemble(opts.tol)?;
    let mut best: Option<PovmSolution> = None;
    for m in [MethodArg::Analytic, MethodArg::Lsd, MethodArg::Lp] {
        match run_method(m, &input, &ensemble, opts) {
            Ok(s) => {
                if best
                    .as_ref()
                    .is_none_or(|b| better_candidate(&s.p, &b.p, ensemble.priors()))
                {
                    best = Some(s);
                }
            }
            Err(e) if skippable(&e) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let solution = match best {
        Some(s) => s,
        None => run_method(MethodArg::Oracle, &input, &ensemble, opts)?,
    };
    let simulation = simulate_measurement(&ensemble, &solution, trials, seed)?;
    Ok(SimulateReport {
        schema_version: SCHEMA_VERSION,
        input_digest: input.digest.clone(),
        labels: input.labels(),
        method: solution.method,
        p: solution.p.to_vec(),
        q: solution.q_fail,
        sigma: simulation.sigma(solution.q_fail),
        z_score: simulation.z_score(solution.q_fail),
        simulation,
    })
}
