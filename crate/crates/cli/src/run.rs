use std::fmt::Write as _;
use std::path::Path;

use hammer_core::bvfun::GridFunction;
use hammer_core::bvp::{self, BvpKind, Residuals, TheoremCheck};
use hammer_core::operators::{kras_constants, KrasReport, KrasRoute};
use hammer_core::solvers::{
    eigenpair_search, kras_residual_direct, kras_solve, lw_hypothesis_check, EigenConfig, KrasConfig,
    LwReport, Outcome, SolveResult,
};
use hammer_core::verdict::{Status, Verdict};
use serde::Serialize;
use serde_json::json;

use crate::doc::{Loaded, SpecDoc};
use crate::{examples, Command, Failure, FailureKind, Format, Resolved, RunConfig};
use crate::{DEFAULT_GRID, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// What a command produced: the artifact text and, possibly, a failure to
/// report after the artifact has been written.
#[derive(Debug)]
pub struct RunOutput {
    pub artifact: String,
    pub failure: Option<Failure>,
}

/// Runs one command. An `Err` means nothing was produced.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    if cfg.command == Command::Examples {
        let r = resolve(cfg, &Default::default())?;
        return examples_command(cfg.format, r.grid);
    }
    let path = cfg
        .spec
        .as_deref()
        .ok_or_else(|| Failure::malformed("this command needs a spec document"))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))?;
    let doc = SpecDoc::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let loaded = doc.load(base)?;
    let r = resolve(cfg, &loaded.solver)?;
    match cfg.command {
        Command::Solve => solve(&loaded, r, cfg.format),
        Command::Eig => eig(&loaded, r, cfg.format),
        Command::Check => check(&loaded, r, cfg.format),
        Command::Verify => {
            let sol = cfg
                .solution
                .as_deref()
                .ok_or_else(|| Failure::malformed("verify needs --solution"))?;
            verify(&loaded, r, sol, cfg.format)
        }
        Command::Examples => unreachable!("handled above"),
    }
}

fn resolve(cfg: &RunConfig, spec: &crate::doc::SolverSettings) -> Result<Resolved, Failure> {
    Resolved::new(
        cfg.grid.or(spec.grid).unwrap_or(DEFAULT_GRID),
        cfg.tol.or(spec.tol).unwrap_or(DEFAULT_TOL),
        cfg.max_iter.or(spec.max_iter).unwrap_or(DEFAULT_MAX_ITER),
    )
}

/// `t,x` table at the grid nodes with 15 significant digits.
pub fn solution_csv(x: &GridFunction) -> String {
    let mut out = String::from("t,x\n");
    for (t, v) in x.nodes().zip(x.values()) {
        writeln!(out, "{t:.14e},{v:.14e}").expect("writing to a string");
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn verdict_csv(sections: &[(&str, &[Verdict])]) -> String {
    let mut out = String::from("section,label,status,detail\n");
    for (section, verdicts) in sections {
        for v in *verdicts {
            writeln!(out, "{section},{},{},{}", v.label, v.status, csv_field(&v.detail)).expect("writing to a string");
        }
    }
    out
}

fn pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn kras_report(loaded: &Loaded) -> Result<(KrasReport, Option<f64>), Failure> {
    let p = &loaded.problem;
    let psi = p.f.psi_table(p.f.default_r_max())?;
    let report = kras_constants(&p.perturbation, &p.kernel, &p.f, &psi)?;
    let radius = report.b5_radius(&psi, p.lambda);
    Ok((report, radius))
}

fn first_failing(verdicts: &[Verdict]) -> Option<&Verdict> {
    verdicts
        .iter()
        .find(|v| v.status == Status::Fail)
        .or_else(|| verdicts.iter().find(|v| v.status == Status::Inconclusive))
}

fn hypothesis_failure(context: &str, verdicts: &[Verdict]) -> Option<Failure> {
    first_failing(verdicts).map(|v| Failure::hypothesis(v.label, format!("{context}: {} {}: {}", v.label, v.status, v.detail)))
}

fn solver_failure(e: hammer_core::Error) -> Failure {
    use hammer_core::Error;
    match e {
        Error::NotCertified(_) | Error::Degenerate(_) => Failure::non_convergence(e.to_string()),
        other => other.into(),
    }
}

fn solve(loaded: &Loaded, r: Resolved, format: Format) -> Result<RunOutput, Failure> {
    let (report, b5) = kras_report(loaded)?;
    // The smallest admissible radius sits on the boundary of (B5); step just
    // inside so the solver's own check does not trip on rounding.
    let radius = loaded.solver.r.or(b5.map(|r| r * (1.0 + 1e-9))).unwrap_or(1.0);
    let cfg = KrasConfig {
        n: r.grid,
        r: radius,
        tol: r.tol,
        max_iter: r.max_iter,
    };
    let res = kras_solve(&loaded.problem, &cfg).map_err(solver_failure)?;
    let theorem = loaded.bvp.as_ref().map(bvp::check_theorem).transpose()?;
    let residuals = loaded.bvp.as_ref().map(|s| bvp::verify_solution(s, &res.x)).transpose()?;
    let failure = convergence_failure(&res, r.tol);
    let artifact = match format {
        Format::Csv => solution_csv(&res.x),
        Format::Report => pretty(&json!({
            "command": "solve",
            "name": loaded.name,
            "grid": r.grid,
            "tol": r.tol,
            "radius": radius,
            "constants": report,
            "theorem": theorem,
            "result": res,
            "bvp_residuals": residuals,
            "x": res.x.values(),
        })),
    };
    Ok(RunOutput { artifact, failure })
}

fn convergence_failure(res: &SolveResult, tol: f64) -> Option<Failure> {
    if res.outcome != Outcome::Converged {
        Some(Failure::non_convergence(format!(
            "{} after {} iterations, residual {:.3e}",
            res.outcome, res.iterations, res.residual_sup
        )))
    } else if res.residual_sup > tol {
        Some(Failure::non_convergence(format!(
            "residual {:.3e} above tol {tol:.3e}",
            res.residual_sup
        )))
    } else {
        None
    }
}

fn lw_report(loaded: &Loaded, n: usize) -> Option<Result<LwReport, String>> {
    let e = loaded.eigen?;
    let p = &loaded.problem;
    Some(lw_hypothesis_check(&p.kernel, &p.f, &loaded.domain, e.p, e.m, e.r, e.theta, n).map_err(|e| e.to_string()))
}

fn eig(loaded: &Loaded, r: Resolved, format: Format) -> Result<RunOutput, Failure> {
    let e = loaded
        .eigen
        .ok_or_else(|| Failure::malformed("eig needs eigen parameters m, p, r in the problem section"))?;
    if !loaded.problem.perturbation.alpha().is_zero() || !loaded.problem.perturbation.beta().is_zero() {
        return Err(Failure::malformed("eig applies to unperturbed equations; drop the functionals"));
    }
    let cfg = EigenConfig {
        n: r.grid,
        m: e.m,
        p: e.p,
        r: e.r,
        tol: r.tol,
        max_iter: r.max_iter,
    };
    let p = &loaded.problem;
    let res = eigenpair_search(&p.kernel, &p.f, &loaded.domain, &cfg).map_err(solver_failure)?;
    let lw = lw_report(loaded, r.grid.min(128));
    // F(x) = λx solves the periodic problem with parameter 1/λ.
    let bvp_residuals = match &loaded.bvp {
        Some(spec) if matches!(spec.kind, BvpKind::Periodic { .. }) => {
            let mut s = spec.clone();
            s.lambda = 1.0 / res.lambda;
            Some(bvp::verify_solution(&s, &res.x)?)
        }
        _ => None,
    };
    let failure = if res.outcome != Outcome::Converged {
        Some(Failure::non_convergence(format!(
            "{} after {} iterations: {}",
            res.outcome,
            res.iterations,
            res.notes.join("; ")
        )))
    } else {
        match &lw {
            Some(Ok(rep)) => hypothesis_failure("eigenpair hypotheses", &rep.verdicts),
            _ => None,
        }
    };
    let artifact = match format {
        Format::Csv => solution_csv(&res.x),
        Format::Report => pretty(&json!({
            "command": "eig",
            "name": loaded.name,
            "grid": r.grid,
            "tol": r.tol,
            "result": res,
            "bvp_lambda": 1.0 / res.lambda,
            "bvp_residuals": bvp_residuals,
            "hypotheses": lw.as_ref().map(|l| l.as_ref().ok()),
            "hypotheses_error": lw.as_ref().and_then(|l| l.as_ref().err()),
            "x": res.x.values(),
        })),
    };
    Ok(RunOutput { artifact, failure })
}

fn check(loaded: &Loaded, r: Resolved, format: Format) -> Result<RunOutput, Failure> {
    let (report, b5) = kras_report(loaded)?;
    let theorem: Option<TheoremCheck> = loaded.bvp.as_ref().map(bvp::check_theorem).transpose()?;
    let lw = lw_report(loaded, r.grid.min(128));
    let failure = match &theorem {
        Some(t) => hypothesis_failure(t.theorem, &t.verdicts),
        None => {
            let mut key: Vec<Verdict> = Vec::new();
            if report.route == KrasRoute::Infeasible {
                key.extend(report.verdict("B6").cloned());
            }
            key.extend(report.verdict("B5").cloned());
            hypothesis_failure("fixed-point hypotheses", &key)
        }
    };
    let artifact = match format {
        Format::Csv => {
            let mut sections: Vec<(&str, &[Verdict])> = Vec::new();
            if let Some(t) = &theorem {
                sections.push(("theorem", &t.verdicts));
            }
            sections.push(("constants", &report.verdicts));
            if let Some(Ok(l)) = &lw {
                sections.push(("eigenpair", &l.verdicts));
            }
            verdict_csv(&sections)
        }
        Format::Report => pretty(&json!({
            "command": "check",
            "name": loaded.name,
            "theorem": theorem,
            "constants": report,
            "b5_radius": b5,
            "eigenpair_hypotheses": lw.as_ref().map(|l| l.as_ref().ok()),
            "eigenpair_error": lw.as_ref().and_then(|l| l.as_ref().err()),
        })),
    };
    Ok(RunOutput { artifact, failure })
}

/// Reads a `t,x` table on a uniform grid.
pub fn read_solution(text: &str) -> Result<GridFunction, Failure> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("t,x") {
        return Err(Failure::malformed("solution table must start with the header t,x"));
    }
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for (i, line) in lines.enumerate() {
        let (t, x) = line
            .split_once(',')
            .ok_or_else(|| Failure::malformed(format!("solution row {}: expected t,x", i + 1)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::malformed(format!("solution row {}: {s:?} is not a number", i + 1)))
        };
        ts.push(parse(t)?);
        xs.push(parse(x)?);
    }
    let x = GridFunction::new(xs)?;
    let n = x.n() as f64;
    for (i, t) in ts.iter().enumerate() {
        if (t - i as f64 / n).abs() > 1e-12 {
            return Err(Failure::malformed(format!("solution row {}: t = {t} is off the uniform grid", i + 1)));
        }
    }
    Ok(x)
}

fn verify(loaded: &Loaded, r: Resolved, solution: &Path, format: Format) -> Result<RunOutput, Failure> {
    let text = std::fs::read_to_string(solution)
        .map_err(|e| Failure::malformed(format!("{}: {e}", solution.display())))?;
    let x = read_solution(&text)?;
    let (residuals, equation): (Option<Residuals>, Option<f64>) = match &loaded.bvp {
        Some(spec) => (Some(bvp::verify_solution(spec, &x)?), None),
        None => (None, Some(kras_residual_direct(&loaded.problem, &x)?)),
    };
    let worst = residuals
        .as_ref()
        .map(|res| res.ode.max(res.bc_max()))
        .or(equation)
        .unwrap_or(0.0);
    let failure = (worst > r.tol).then(|| Failure {
        kind: FailureKind::NonConvergence,
        label: None,
        reason: format!("largest residual {worst:.3e} above tol {:.3e}", r.tol),
    });
    let artifact = match format {
        Format::Csv => {
            let mut out = String::from("quantity,value\n");
            if let Some(res) = &residuals {
                writeln!(out, "ode,{:.14e}", res.ode).expect("writing to a string");
                for (name, v) in &res.bc {
                    writeln!(out, "{},{v:.14e}", csv_field(name)).expect("writing to a string");
                }
            }
            if let Some(e) = equation {
                writeln!(out, "integral_equation,{e:.14e}").expect("writing to a string");
            }
            out
        }
        Format::Report => pretty(&json!({
            "command": "verify",
            "name": loaded.name,
            "grid": x.n(),
            "tol": r.tol,
            "bvp_residuals": residuals,
            "integral_equation_residual": equation,
        })),
    };
    Ok(RunOutput { artifact, failure })
}

fn examples_command(format: Format, n: usize) -> Result<RunOutput, Failure> {
    let rows = examples::table(n)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    let artifact = match format {
        Format::Csv => {
            let mut out = String::from("quantity,expected,computed,status\n");
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{:.14e},{}",
                    csv_field(&r.quantity),
                    csv_field(&r.expected),
                    r.computed,
                    if r.pass { "pass" } else { "fail" }
                )
                .expect("writing to a string");
            }
            out
        }
        Format::Report => pretty(&json!({ "command": "examples", "grid": n, "rows": rows })),
    };
    let failure = (failed > 0).then(|| Failure {
        kind: FailureKind::Hypothesis,
        label: None,
        reason: format!("{failed} of {} example values not reproduced", rows.len()),
    });
    Ok(RunOutput { artifact, failure })
}
