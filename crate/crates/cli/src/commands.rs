use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use etoc_core::shooting::ShootingOptions;
use etoc_core::study::{
    guess_grid, nlp_outcome, perturbed_guesses, shooting_outcome, summarize, GuessOutcome, RateSummary,
};
use etoc_core::verify::{self, DEFAULT_SAMPLES};
use etoc_core::{
    form1, plan, ClosedForm, Error, Formulation, Problem, SearchOptions, Shot, Solution, SolverOptions, Target,
    TrajectorySample, VerificationReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BenchArgs, Format, PlanArgs, SweepArgs, VerifyArgs};
use crate::output::{self, float, write_atomic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

fn search(seed: u64) -> SearchOptions {
    SearchOptions { seed, ..SearchOptions::default() }
}

fn report_failures(what: &str, report: &VerificationReport) {
    for c in report.failures() {
        eprintln!("{what}: check {} failed: violation {:.3e} > tolerance {:.1e}", c.name, c.max_violation, c.tolerance);
    }
}

struct Solved {
    solution: Solution,
    samples: Vec<TrajectorySample>,
    cost: f64,
    report: VerificationReport,
}

fn solve_and_check(problem: &Problem, guess: Option<&[f64]>, samples: usize, seed: u64) -> etoc_core::Result<Solved> {
    let (solution, _) = plan::solve(problem, guess, &search(seed))?;
    let traj = solution.samples(samples)?;
    let cost = solution.cost(samples)?;
    let report = verify::check_all(&solution, problem, DEFAULT_SAMPLES);
    Ok(Solved { solution, samples: traj, cost, report })
}

pub fn plan(args: &PlanArgs) -> Result<i32> {
    let problem = args.problem()?;
    let s = solve_and_check(&problem, args.solve.guess.as_deref(), args.solve.samples as usize, args.solve.seed)?;
    let f = s.solution.formulation();
    match (args.format, &args.out) {
        (Format::Csv, Some(path)) => {
            write_atomic(path, output::trajectory_csv(f, &s.samples).as_bytes())?;
            let summary = output::summary_json(&problem, &s.solution, s.cost, &s.report)?;
            write_atomic(&path.with_extension("json"), summary.as_bytes())?;
        }
        (Format::Csv, None) => {
            print!("{}", output::trajectory_csv(f, &s.samples));
            eprint!("{}", output::summary_json(&problem, &s.solution, s.cost, &s.report)?);
        }
        (Format::Json, out) => {
            let doc = output::full_json(&problem, &s.solution, s.cost, &s.report, &s.samples)?;
            match out {
                Some(path) => write_atomic(path, doc.as_bytes())?,
                None => print!("{doc}"),
            }
        }
    }
    if let Some(path) = &args.svg {
        let svg = output::svg_plot(&format!("{f} path"), "x", "y", &[output::path_series(&s.samples)]);
        write_atomic(path, svg.as_bytes())?;
    }
    if s.report.pass {
        Ok(EXIT_OK)
    } else {
        report_failures("plan", &s.report);
        Ok(EXIT_VERIFY)
    }
}

fn unknown_names(f: Formulation) -> &'static [&'static str] {
    match f {
        Formulation::Form1 => &["q"],
        Formulation::Form2 => &["eps"],
        Formulation::FixedV => &["m", "vc"],
    }
}

/// Solver unknowns other than `tf`.
fn shape_unknowns(s: &Solution) -> Vec<f64> {
    match s {
        Solution::Form1(p) => vec![p.q],
        Solution::Form2(p) => vec![p.eps],
        Solution::FixedV(p) => vec![p.m, p.vc],
    }
}

fn transition(s: &Solution) -> Option<f64> {
    match s {
        Solution::Form1(p) => Some(p.transition_condition()),
        _ => None,
    }
}

#[derive(Serialize)]
struct SweepRow {
    alpha_deg: f64,
    alpha_rad: f64,
    status: &'static str,
    tf: Option<f64>,
    unknowns: Option<Vec<f64>>,
    cost: Option<f64>,
    v_final: Option<f64>,
    omega_final: Option<f64>,
    transition: Option<f64>,
    verified: Option<bool>,
    file: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    formulation: Formulation,
    mu: f64,
    r: f64,
    unknown_names: &'static [&'static str],
    rows: &'a [SweepRow],
    /// Adjacent index pairs whose transition condition changes sign.
    transition_sign_changes: Vec<[usize; 2]>,
}

fn sweep_angles(start: f64, end: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![start];
    }
    (0..steps).map(|i| start + (end - start) * i as f64 / (steps - 1) as f64).collect()
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn sweep_csv(f: Formulation, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "alpha_deg,alpha_rad,status,tf,{},cost,v_final,omega_final,transition,verified,file\n",
        unknown_names(f).join(",")
    );
    for r in rows {
        let unknowns: Vec<String> = match &r.unknowns {
            Some(u) => u.iter().copied().map(float).collect(),
            None => vec![String::new(); unknown_names(f).len()],
        };
        let cells = [
            float(r.alpha_deg),
            float(r.alpha_rad),
            r.status.to_string(),
            opt_cell(r.tf),
            unknowns.join(","),
            opt_cell(r.cost),
            opt_cell(r.v_final),
            opt_cell(r.omega_final),
            opt_cell(r.transition),
            r.verified.map(|v| v.to_string()).unwrap_or_default(),
            r.file.clone().unwrap_or_default(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep(args: &SweepArgs) -> Result<i32> {
    let f: Formulation = args.solve.formulation.into();
    let samples = args.solve.samples as usize;
    let alphas = sweep_angles(args.alpha_start, args.alpha_end, args.alpha_steps as usize);
    let problems: Vec<Problem> = alphas
        .iter()
        .map(|a| Ok(Problem::new(args.solve.mu, Target::polar(args.r, a.to_radians())?, f)?))
        .collect::<Result<_>>()?;
    let results: Vec<etoc_core::Result<Solved>> =
        problems.par_iter().map(|p| solve_and_check(p, None, samples, args.solve.seed)).collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut paths = Vec::new();
    let mut controls = Vec::new();
    let (mut failed, mut unverified) = (0usize, 0usize);
    for (i, (res, (alpha, p))) in results.iter().zip(alphas.iter().zip(&problems)).enumerate() {
        match res {
            Ok(s) => {
                let name = format!("alpha_{i:03}.csv");
                write_atomic(&args.out.join(&name), output::trajectory_csv(f, &s.samples).as_bytes())?;
                let last = s.samples.last().expect("at least two samples");
                if !s.report.pass {
                    unverified += 1;
                    report_failures(&format!("alpha {alpha}"), &s.report);
                }
                paths.push(output::path_series(&s.samples));
                controls.push(output::control_series(&s.samples));
                rows.push(SweepRow {
                    alpha_deg: *alpha,
                    alpha_rad: p.target.alpha,
                    status: "ok",
                    tf: Some(s.solution.tf()),
                    unknowns: Some(shape_unknowns(&s.solution)),
                    cost: Some(s.cost),
                    v_final: Some(last.control.v),
                    omega_final: Some(last.control.omega),
                    transition: transition(&s.solution),
                    verified: Some(s.report.pass),
                    file: Some(name),
                });
            }
            Err(e) => {
                failed += 1;
                eprintln!("alpha {alpha}: {e}");
                rows.push(SweepRow {
                    alpha_deg: *alpha,
                    alpha_rad: p.target.alpha,
                    status: "failed",
                    tf: None,
                    unknowns: None,
                    cost: None,
                    v_final: None,
                    omega_final: None,
                    transition: None,
                    verified: None,
                    file: None,
                });
            }
        }
    }

    let changes: Vec<[usize; 2]> = (1..rows.len())
        .filter(|&i| match (rows[i - 1].transition, rows[i].transition) {
            (Some(a), Some(b)) => (a > 0.0) != (b > 0.0),
            _ => false,
        })
        .map(|i| [i - 1, i])
        .collect();
    for [a, b] in &changes {
        eprintln!("transition condition changes sign between alpha {} and {}", rows[*a].alpha_deg, rows[*b].alpha_deg);
    }

    match args.format {
        Format::Csv => write_atomic(&args.out.join("summary.csv"), sweep_csv(f, &rows).as_bytes())?,
        Format::Json => {
            let summary = SweepSummary {
                formulation: f,
                mu: args.solve.mu,
                r: args.r,
                unknown_names: unknown_names(f),
                rows: &rows,
                transition_sign_changes: changes,
            };
            write_atomic(&args.out.join("summary.json"), (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
        }
    }
    if args.svg {
        write_atomic(&args.out.join("paths.svg"), output::svg_plot("paths", "x", "y", &paths).as_bytes())?;
        write_atomic(&args.out.join("controls.svg"), output::svg_plot("controls", "v", "omega", &controls).as_bytes())?;
    }
    Ok(if failed > 0 {
        EXIT_NONCONVERGENCE
    } else if unverified > 0 {
        EXIT_VERIFY
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct MethodReport {
    #[serde(flatten)]
    summary: RateSummary,
    /// Seconds, informational.
    wall_time: f64,
}

#[derive(Serialize)]
struct GridReport {
    attempts: usize,
    converged: usize,
    within_tol: usize,
    tol: f64,
    /// `within_tol` per grid point, rows over `Q`, columns over `tf`.
    matrix: Vec<Vec<bool>>,
    /// Seconds, informational.
    wall_time: f64,
}

#[derive(Serialize)]
struct BenchReport {
    mu: f64,
    target: Target,
    seed: u64,
    spread: f64,
    optimum: [f64; 2],
    optimum_shot: [f64; 4],
    grid: GridReport,
    nlp: MethodReport,
    shooting: MethodReport,
    nlp_above_shooting: bool,
}

fn bench_rows(method: &str, outcomes: &[GuessOutcome], out: &mut String) {
    for (i, o) in outcomes.iter().enumerate() {
        let pad = |v: &[f64]| -> String {
            (0..4).map(|k| v.get(k).copied().map(float).unwrap_or_default()).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!(
            "{method},{i},{},{},{},{},{},{}\n",
            pad(&o.guess),
            o.converged,
            o.optimal,
            o.iterations,
            pad(&o.root),
            float(o.final_residual_norm)
        ));
    }
}

pub fn bench(args: &BenchArgs) -> Result<i32> {
    let problem = Problem::new(args.mu, Target::polar(args.r, args.alpha_deg.to_radians())?, Formulation::Form1)?;
    let (opt, _) = form1::solve(&problem, None, &search(args.seed)).context("solving for the reference optimum")?;
    let optimum = [opt.q, opt.tf];
    let optimum_shot = Shot::from_array(opt.shot());
    let solver = SolverOptions::default();

    let t = Instant::now();
    let grid: Vec<GuessOutcome> = guess_grid(&args.grid_q, &args.grid_tf)
        .par_iter()
        .map(|&g| nlp_outcome(&problem, &optimum, g, &solver))
        .collect();
    let grid_time = t.elapsed().as_secs_f64();
    let within = |o: &GuessOutcome| {
        o.converged
            && (o.root[0] - optimum[0]).abs() <= args.grid_tol
            && (o.root[1] - optimum[1]).abs() <= args.grid_tol
    };
    let matrix: Vec<Vec<bool>> =
        grid.chunks(args.grid_tf.len().max(1)).map(|row| row.iter().map(within).collect()).collect();

    let t = Instant::now();
    let nlp: Vec<GuessOutcome> = perturbed_guesses(&optimum, args.shooting_starts, args.spread, args.seed)
        .par_iter()
        .map(|g| nlp_outcome(&problem, &optimum, [g[0], g[1]], &solver))
        .collect();
    let nlp_time = t.elapsed().as_secs_f64();

    let shoot_opts = ShootingOptions::default();
    let t = Instant::now();
    let shots: Vec<GuessOutcome> =
        perturbed_guesses(&optimum_shot.to_array(), args.shooting_starts, args.spread, args.seed)
            .par_iter()
            .map(|g| shooting_outcome(&problem, &optimum_shot, Shot::new(g[0], g[1], g[2], g[3]), &shoot_opts))
            .collect();
    let shoot_time = t.elapsed().as_secs_f64();

    let mut csv = String::from("method,index,g1,g2,g3,g4,converged,optimal,iterations,r1,r2,r3,r4,residual\n");
    bench_rows("grid", &grid, &mut csv);
    bench_rows("nlp", &nlp, &mut csv);
    bench_rows("shooting", &shots, &mut csv);

    let (nlp_sum, shoot_sum) = (summarize(&nlp), summarize(&shots));
    let report = BenchReport {
        mu: args.mu,
        target: problem.target,
        seed: args.seed,
        spread: args.spread,
        optimum,
        optimum_shot: optimum_shot.to_array(),
        grid: GridReport {
            attempts: grid.len(),
            converged: grid.iter().filter(|o| o.converged).count(),
            within_tol: grid.iter().filter(|o| within(o)).count(),
            tol: args.grid_tol,
            matrix,
            wall_time: grid_time,
        },
        nlp_above_shooting: nlp_sum.rate > shoot_sum.rate,
        nlp: MethodReport { summary: nlp_sum, wall_time: nlp_time },
        shooting: MethodReport { summary: shoot_sum, wall_time: shoot_time },
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(dir) => {
            write_atomic(&dir.join("bench.csv"), csv.as_bytes())?;
            write_atomic(&dir.join("bench.json"), json.as_bytes())?;
        }
        None => print!("{csv}"),
    }
    eprintln!(
        "grid {}/{} within {}; closed form {}/{} optimal; shooting {}/{} optimal ({:.2} s)",
        report.grid.within_tol,
        report.grid.attempts,
        args.grid_tol,
        report.nlp.summary.optimal,
        report.nlp.summary.attempts,
        report.shooting.summary.optimal,
        report.shooting.summary.attempts,
        shoot_time
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    pass: bool,
    solution: &'a VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross: Option<&'a VerificationReport>,
}

fn load_summary(path: &Path) -> Result<(Problem, Solution)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let saved: output::SavedSummary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((saved.problem()?, saved.solution()?))
}

pub fn verify(args: &VerifyArgs) -> Result<i32> {
    let (problem, solution) = match &args.solution {
        Some(path) => load_summary(path)?,
        None => {
            let problem = Problem::new(args.solve.mu, args.target.target()?, args.solve.formulation.into())?;
            let (s, _) = plan::solve(&problem, args.solve.guess.as_deref(), &search(args.solve.seed))?;
            (problem, s)
        }
    };
    let report = verify::check_all(&solution, &problem, DEFAULT_SAMPLES);
    let cross = if args.cross { Some(verify::cross_check(&problem, &search(args.solve.seed))?) } else { None };
    let pass = report.pass && cross.as_ref().is_none_or(|c| c.pass);
    let doc = serde_json::to_string_pretty(&VerifyOutput { pass, solution: &report, cross: cross.as_ref() })? + "\n";
    match &args.out {
        Some(path) => write_atomic(path, doc.as_bytes())?,
        None => print!("{doc}"),
    }
    report_failures("verify", &report);
    if let Some(c) = &cross {
        report_failures("cross", c);
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

/// Exit code for an error escaping a command: solver failures map to
/// [`EXIT_NONCONVERGENCE`], everything else (validation, unreadable input,
/// I/O) to [`EXIT_USAGE`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::NonConvergence(_)) | Some(Error::Integration { .. }) => EXIT_NONCONVERGENCE,
        _ => EXIT_USAGE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_include_both_ends() {
        let a = sweep_angles(5.0, 90.0, 18);
        assert_eq!(a.len(), 18);
        assert_eq!((a[0], a[17]), (5.0, 90.0));
        assert_eq!(sweep_angles(30.0, 90.0, 1), vec![30.0]);
    }

    #[test]
    fn exit_codes() {
        let p = Problem::new(0.5, Target::polar(1.0, 0.5).unwrap(), Formulation::Form1).unwrap();
        let nc = form1::solve(&p, Some([0.01, 99.0]), &SearchOptions { n_starts: 1, ..SearchOptions::default() })
            .unwrap_err();
        assert_eq!(exit_code(&anyhow::Error::new(nc)), EXIT_NONCONVERGENCE);
        assert_eq!(exit_code(&anyhow::Error::new(Error::InvalidProblem("x".into()))), EXIT_USAGE);
        assert_eq!(exit_code(&anyhow::anyhow!("bad file").context("parsing")), EXIT_USAGE);
    }
}
