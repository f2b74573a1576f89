//! `robim` — robustness checks for action improvements, with certificates.
//!
//! Exit codes: 0 the relation holds (or nothing was found to refute it),
//! 1 it fails, 2 the problem violates the check's assumptions, 3 usage or
//! input errors, 4 numerical failure.

mod report;
mod schema;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use robim::infoacq::{check_selected_more, reproduce_three_state, selection_comparison};
use robim::knownutil::{a_relevant, check_u_improves, polytope_of};
use robim::lottery::{check_b_improves, Lottery};
use robim::multi::{check_superior_vs_all, witness_not_superior_vs_all};
use robim::oracle::{falsify_superiority, SamplerConfig};
use robim::plot::figure_data;
use robim::problem::{dominates, DecisionProblem, DominanceMode};
use robim::superiority::{
    check_b_better, check_b_superior, lambda_interval, witness_not_b_better,
    witness_not_b_superior, Verdict,
};
use robim::utility::UtilityFn;
use robim::UtilityClass;

use report::{OutputFormat, Report};
use schema::LoadedProblem;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Schema(String),
    Lib(robim::Error),
}

impl From<robim::Error> for CliError {
    fn from(e: robim::Error) -> Self {
        CliError::Lib(e)
    }
}

const EXIT_HOLDS: u8 = 0;
const EXIT_FAILS: u8 = 1;
const EXIT_ASSUMPTIONS: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(
    name = "robim",
    version,
    about = "Decide when one action robustly improves on another, with machine-checkable \
             certificates and falsifying witnesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    /// Robust improvement against one alternative, all risk-averse agents
    Superior,
    /// Robust improvement against one alternative, all monotone agents
    Better,
    /// Robust improvement against every alternative at once
    Multi,
    /// Known belief: stochastic-dominance mixture feasibility
    Lottery,
    /// Known utility: vertex rotations on the optimality polytope
    Knownutil,
    /// Endogenous learning: chosen at least as often as the incumbent
    SelectedMore,
}

impl CheckKind {
    fn name(self) -> &'static str {
        match self {
            CheckKind::Superior => "superior",
            CheckKind::Better => "better",
            CheckKind::Multi => "multi",
            CheckKind::Lottery => "lottery",
            CheckKind::Knownutil => "knownutil",
            CheckKind::SelectedMore => "selected-more",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassArg {
    Concave,
    Monotone,
}

impl From<ClassArg> for UtilityClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Concave => UtilityClass::RiskAverse,
            ClassArg::Monotone => UtilityClass::Monotone,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotFormat {
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Run a robustness check on a problem file
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        file: PathBuf,
        /// Absolute tolerance for payoff comparisons
        #[arg(long, default_value_t = robim::DEFAULT_EPS)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Utility class for the lottery check
        #[arg(long, value_enum, default_value = "concave")]
        class: ClassArg,
    },
    /// Search sampled utilities and beliefs for a counterexample
    Falsify {
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "concave")]
        class: ClassArg,
    },
    /// Emit the two-state expected-utility lines as CSV or SVG
    Plot {
        file: PathBuf,
        out: PathBuf,
        /// Output format; inferred from the extension when omitted
        #[arg(long, value_enum)]
        emit: Option<PlotFormat>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

fn action_pair(
    problem: &DecisionProblem,
    incumbent: &str,
) -> Result<(Vec<f64>, String, Vec<f64>), CliError> {
    let rivals = problem.rivals(incumbent);
    if rivals.len() != 1 {
        return Err(CliError::Schema(format!(
            "this check needs exactly two actions; the file has {}",
            rivals.len() + 1
        )));
    }
    let a = problem.payoffs(incumbent)?.to_vec();
    Ok((a, rivals[0].0.to_string(), rivals[0].1.to_vec()))
}

fn hook_note(lp: &LoadedProblem, report: &mut Report) {
    if lp.utility.is_some() {
        report
            .notes
            .push("payoffs were pre-transformed through the supplied utility".into());
    }
}

fn check_superior_cmd(lp: &LoadedProblem, file: &str, eps: f64) -> Result<(Report, u8), CliError> {
    let problem = lp.transformed_problem();
    let cand = lp.transformed_candidate();
    let (a, b_id, b) = action_pair(&problem, &lp.incumbent)?;
    let verdict = check_b_superior(&a, &b, &cand, eps)?;
    let mut report = Report::new("check", file, verdict_str(&verdict));
    report.kind = Some("superior".into());
    report.epsilon = Some(eps);
    report.criterion = Some(
        "strict gain-state improvement plus statewise dominance of an \
         incumbent/alternative mixture"
            .into(),
    );
    hook_note(lp, &mut report);
    match verdict {
        Verdict::Holds => {
            let li = lambda_interval(&a, &b, &cand, eps)?;
            report.certificate = Some(json!({
                "versus": b_id,
                "lambda_interval": li,
                "lambda_star": li.midpoint(),
            }));
            Ok((report, EXIT_HOLDS))
        }
        Verdict::Fails { reason } => {
            report.reason = Some(reason);
            match witness_not_b_superior(&a, &b, &cand, eps) {
                Ok(w) => report.witness = Some(w),
                Err(e) => report.notes.push(format!("no witness constructed: {e}")),
            }
            Ok((report, EXIT_FAILS))
        }
    }
}

fn check_better_cmd(lp: &LoadedProblem, file: &str, eps: f64) -> Result<(Report, u8), CliError> {
    let problem = lp.transformed_problem();
    let cand = lp.transformed_candidate();
    let (a, b_id, b) = action_pair(&problem, &lp.incumbent)?;
    let verdict = check_b_better(&a, &b, &cand, eps)?;
    let mut report = Report::new("check", file, verdict_str(&verdict));
    report.kind = Some("better".into());
    report.epsilon = Some(eps);
    report.criterion = Some(
        "strict gain-state improvement plus statewise dominance of the incumbent or \
         the alternative"
            .into(),
    );
    hook_note(lp, &mut report);
    match verdict {
        Verdict::Holds => {
            report.certificate = Some(json!({
                "versus": b_id,
                "dominates_incumbent": dominates(&cand, &a, DominanceMode::Weak, eps)?,
                "dominates_alternative": dominates(&cand, &b, DominanceMode::Weak, eps)?,
            }));
            Ok((report, EXIT_HOLDS))
        }
        Verdict::Fails { reason } => {
            report.reason = Some(reason);
            match witness_not_b_better(&a, &b, &cand, eps) {
                Ok(w) => report.witness = Some(w),
                Err(e) => report.notes.push(format!("no witness constructed: {e}")),
            }
            Ok((report, EXIT_FAILS))
        }
    }
}

fn check_multi_cmd(lp: &LoadedProblem, file: &str, eps: f64) -> Result<(Report, u8), CliError> {
    let problem = lp.transformed_problem();
    let cand = lp.transformed_candidate();
    let verdict = check_superior_vs_all(&problem, &lp.incumbent, &cand, eps)?;
    let mut report = Report::new("check", file, verdict_str(&verdict));
    report.kind = Some("multi".into());
    report.epsilon = Some(eps);
    report.criterion =
        Some("per-alternative mixture dominance under richness and single-peakedness".into());
    hook_note(lp, &mut report);
    let a = problem.payoffs(&lp.incumbent)?.to_vec();
    let intervals: Vec<_> = problem
        .rivals(&lp.incumbent)
        .iter()
        .map(|(id, b)| {
            json!({
                "versus": id,
                "lambda_interval": lambda_interval(&a, b, &cand, eps).ok(),
            })
        })
        .collect();
    report.certificate = Some(json!({ "per_alternative": intervals }));
    match verdict {
        Verdict::Holds => Ok((report, EXIT_HOLDS)),
        Verdict::Fails { reason } => {
            report.reason = Some(reason);
            match witness_not_superior_vs_all(&problem, &lp.incumbent, &cand, eps) {
                Ok(w) => report.witness = Some(w),
                Err(e) => report.notes.push(format!("no witness constructed: {e}")),
            }
            Ok((report, EXIT_FAILS))
        }
    }
}

fn check_lottery_cmd(
    lp: &LoadedProblem,
    file: &str,
    eps: f64,
    class: UtilityClass,
) -> Result<(Report, u8), CliError> {
    let prior = lp.prior.as_ref().ok_or_else(|| {
        CliError::Schema("field `prior` is required for the lottery check".into())
    })?;
    let a = lp.problem.payoffs(&lp.incumbent)?;
    let l_a = Lottery::induce(a, prior)?;
    let l_cand = Lottery::induce(&lp.candidate, prior)?;
    let rivals = lp.problem.rivals(&lp.incumbent);
    let others: Vec<Lottery> = rivals
        .iter()
        .map(|(_, b)| Lottery::induce(b, prior))
        .collect::<Result<_, _>>()?;
    let outcome = check_b_improves(&l_a, &l_cand, &others, class, eps)?;
    let mut report = Report::new("check", file, if outcome.holds { "holds" } else { "fails" });
    report.kind = Some("lottery".into());
    report.epsilon = Some(eps);
    report.criterion =
        Some("per-alternative convex-weight stochastic-dominance feasibility".into());
    if lp.utility.is_some() {
        report.notes.push(
            "the lottery check quantifies over the whole utility class; the `utility` \
             field is ignored"
                .into(),
        );
    }
    let per: Vec<_> = rivals
        .iter()
        .zip(&outcome.per_alternative)
        .map(|((id, _), o)| {
            json!({
                "versus": id,
                "feasible": o.feasible,
                "weights": o.weight.as_ref().map(|w| w.weights.clone()),
                "candidate_share": o.weight.as_ref().map(|w| w.tail()),
                "borderline": o.borderline,
            })
        })
        .collect();
    report.certificate = Some(json!({
        "class": class,
        "per_alternative": per,
    }));
    let code = if outcome.holds {
        EXIT_HOLDS
    } else {
        EXIT_FAILS
    };
    Ok((report, code))
}

fn check_knownutil_cmd(lp: &LoadedProblem, file: &str, eps: f64) -> Result<(Report, u8), CliError> {
    let problem = lp.transformed_problem();
    let cand = lp.transformed_candidate();
    let poly = polytope_of(&problem, &lp.incumbent, eps)?;
    let relevant = a_relevant(&problem, &lp.incumbent, &poly, eps)?;
    let verdict = check_u_improves(&problem, &lp.incumbent, &cand, eps)?;
    let mut report = Report::new("check", file, verdict_str(&verdict));
    report.kind = Some("knownutil".into());
    report.epsilon = Some(eps);
    report.criterion = Some(
        "strict unique-optimum improvement plus vertex rotations on indifference faces".into(),
    );
    if lp.utility.is_some() {
        report
            .notes
            .push("payoffs were normalized through the supplied utility".into());
    }
    report.certificate = Some(json!({
        "vertices": poly.vertices.iter().map(|v| v.probs().to_vec()).collect::<Vec<_>>(),
        "relevant_alternatives": relevant,
        "dimension": poly.dim,
    }));
    match verdict {
        Verdict::Holds => Ok((report, EXIT_HOLDS)),
        Verdict::Fails { reason } => {
            report.reason = Some(reason);
            Ok((report, EXIT_FAILS))
        }
    }
}

fn is_three_state_example(lp: &LoadedProblem) -> bool {
    let close = |x: &[f64], y: &[f64]| {
        x.len() == y.len() && x.iter().zip(y).all(|(&a, &b)| (a - b).abs() <= 1e-12)
    };
    if lp.problem.n_states() != 3 || lp.problem.actions().len() != 2 {
        return false;
    }
    let Some(prior) = &lp.prior else { return false };
    let a = lp.problem.payoffs(&lp.incumbent).unwrap();
    let rivals = lp.problem.rivals(&lp.incumbent);
    close(a, &[0.0, -1.0, 1.0])
        && close(rivals[0].1, &[0.0, 0.0, 0.0])
        && close(&lp.candidate, &[0.0, -1.0, 1.5])
        && close(prior.probs(), &[0.65, 0.15, 0.2])
}

fn check_selected_more_cmd(
    lp: &LoadedProblem,
    file: &str,
    eps: f64,
) -> Result<(Report, u8), CliError> {
    if is_three_state_example(lp) {
        let (p, p_hat) = reproduce_three_state()?;
        let mut report = Report::new("check", file, "fails");
        report.kind = Some("selected-more".into());
        report.criterion = Some("statewise dominance of the incumbent or the alternative".into());
        report.diagnostics = Some(json!({
            "p": p.to_string(),
            "p_hat": p_hat.to_string(),
            "p_float": *p.numer() as f64 / *p.denom() as f64,
            "p_hat_float": *p_hat.numer() as f64 / *p_hat.denom() as f64,
        }));
        report.notes.push(format!(
            "three-state reference instance: the candidate statewise dominates the \
             incumbent yet is chosen less often (p = {p} > {p_hat} = p_hat)"
        ));
        return Ok((report, EXIT_FAILS));
    }
    let (a, _b_id, b) = action_pair(&lp.problem, &lp.incumbent)?;
    let verdict = check_selected_more(&a, &b, &lp.candidate, eps)?;
    let mut report = Report::new("check", file, verdict_str(&verdict));
    report.kind = Some("selected-more".into());
    report.epsilon = Some(eps);
    report.criterion = Some("statewise dominance of the incumbent or the alternative".into());
    if let (Some(prior), Some(cost)) = (&lp.prior, &lp.cost) {
        let u = lp.utility.clone().unwrap_or_else(UtilityFn::identity);
        let mu0 = prior.probs()[1];
        match selection_comparison(&a, &b, &lp.candidate, &u, cost, mu0) {
            Ok((p, p_hat)) => {
                report.diagnostics = Some(json!({
                    "p": p,
                    "p_hat": p_hat,
                    "prior_state1": mu0,
                    "cost_kappa": cost.kappa,
                }));
            }
            Err(e) => report
                .notes
                .push(format!("choice-probability diagnostics unavailable: {e}")),
        }
    }
    match verdict {
        Verdict::Holds => Ok((report, EXIT_HOLDS)),
        Verdict::Fails { reason } => {
            report.reason = Some(reason);
            Ok((report, EXIT_FAILS))
        }
    }
}

fn falsify_cmd(
    lp: &LoadedProblem,
    file: &str,
    class: UtilityClass,
    trials: usize,
    seed: u64,
) -> Result<(Report, u8), CliError> {
    let problem = lp.transformed_problem();
    let cand = lp.transformed_candidate();
    let (a, b_id, b) = action_pair(&problem, &lp.incumbent)?;
    let cfg = SamplerConfig {
        seed,
        trials,
        ..SamplerConfig::default()
    };
    let found = falsify_superiority(&a, &b, &cand, class, &cfg)?;
    let mut report = Report::new(
        "falsify",
        file,
        if found.is_some() {
            "fails"
        } else {
            "no-counterexample"
        },
    );
    report.kind = Some(match class {
        UtilityClass::RiskAverse => "superior".into(),
        UtilityClass::Monotone => "better".into(),
    });
    report.certificate = Some(json!({
        "versus": b_id,
        "trials": trials,
        "seed": seed,
    }));
    hook_note(lp, &mut report);
    match found {
        Some(w) => {
            report.witness = Some(w);
            Ok((report, EXIT_FAILS))
        }
        None => {
            report.notes.push(
                "sampling can only falsify; absence of a counterexample is not a proof".into(),
            );
            Ok((report, EXIT_HOLDS))
        }
    }
}

fn plot_cmd(
    lp: &LoadedProblem,
    file: &str,
    out: &Path,
    emit: Option<PlotFormat>,
) -> Result<(Report, u8), CliError> {
    let (a, _b_id, b) = action_pair(&lp.problem, &lp.incumbent)?;
    let data = figure_data(&a, &b, &lp.candidate, lp.utility.as_ref(), 512)?;
    let emit = emit.unwrap_or_else(|| match out.extension().and_then(|e| e.to_str()) {
        Some("svg") => PlotFormat::Svg,
        _ => PlotFormat::Csv,
    });
    let contents = match emit {
        PlotFormat::Csv => {
            let mut s = String::from("mu,eu_a,eu_ahat,eu_b\n");
            for r in &data.rows {
                s.push_str(&format!("{},{},{},{}\n", r.mu, r.eu_a, r.eu_ahat, r.eu_b));
            }
            s
        }
        PlotFormat::Svg => svg::render(&data),
    };
    std::fs::write(out, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", out.display())))?;
    let mut report = Report::new("plot", file, "done");
    report.diagnostics = Some(json!({
        "out": out.display().to_string(),
        "emit": match emit { PlotFormat::Csv => "csv", PlotFormat::Svg => "svg" },
        "rows": data.rows.len(),
        "mu_bar": data.mu_bar,
        "mu_hat": data.mu_hat,
    }));
    if lp.utility.is_some() {
        report
            .notes
            .push("lines and markers are drawn through the supplied utility".into());
    }
    Ok((report, EXIT_HOLDS))
}

fn verdict_str(v: &Verdict) -> &'static str {
    if v.holds() {
        "holds"
    } else {
        "fails"
    }
}

fn error_report(command: &str, file: &str, err: CliError) -> (Report, u8) {
    let (verdict, code, note, certificate) = match err {
        CliError::Lib(robim::Error::AssumptionsViolated { report }) => (
            "assumptions-violated",
            EXIT_ASSUMPTIONS,
            report.to_string(),
            Some(json!({ "assumptions": report })),
        ),
        CliError::Lib(e @ robim::Error::Assumption(_))
        | CliError::Lib(e @ robim::Error::Degenerate(_)) => (
            "assumptions-violated",
            EXIT_ASSUMPTIONS,
            e.to_string(),
            None,
        ),
        CliError::Lib(e @ robim::Error::Numerical(_)) => {
            ("error", EXIT_NUMERIC, e.to_string(), None)
        }
        CliError::Lib(e) => ("error", EXIT_USAGE, e.to_string(), None),
        CliError::Io(m) | CliError::Parse(m) | CliError::Schema(m) => {
            ("error", EXIT_USAGE, m, None)
        }
    };
    let mut report = Report::new(command, file, verdict);
    report.certificate = certificate;
    report.notes.push(note);
    (report, code)
}

fn run(command: Command) -> (OutputFormat, String, String, Result<(Report, u8), CliError>) {
    match command {
        Command::Check {
            kind,
            file,
            epsilon,
            format,
            class,
        } => {
            let path = file.display().to_string();
            let result = schema::load(&file).and_then(|lp| match kind {
                CheckKind::Superior => check_superior_cmd(&lp, &path, epsilon),
                CheckKind::Better => check_better_cmd(&lp, &path, epsilon),
                CheckKind::Multi => check_multi_cmd(&lp, &path, epsilon),
                CheckKind::Lottery => check_lottery_cmd(&lp, &path, epsilon, class.into()),
                CheckKind::Knownutil => check_knownutil_cmd(&lp, &path, epsilon),
                CheckKind::SelectedMore => check_selected_more_cmd(&lp, &path, epsilon),
            });
            (
                format.into(),
                "check".into(),
                path,
                result.map(|(mut r, c)| {
                    r.kind.get_or_insert_with(|| kind.name().into());
                    (r, c)
                }),
            )
        }
        Command::Falsify {
            file,
            trials,
            seed,
            format,
            class,
        } => {
            let path = file.display().to_string();
            let result = schema::load(&file)
                .and_then(|lp| falsify_cmd(&lp, &path, class.into(), trials, seed));
            (format.into(), "falsify".into(), path, result)
        }
        Command::Plot {
            file,
            out,
            emit,
            format,
        } => {
            let path = file.display().to_string();
            let result = schema::load(&file).and_then(|lp| plot_cmd(&lp, &path, &out, emit));
            (format.into(), "plot".into(), path, result)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (format, command, file, result) = run(cli.command);
    let (report, code) = match result {
        Ok(pair) => pair,
        Err(err) => error_report(&command, &file, err),
    };
    println!("{}", report.render(format));
    ExitCode::from(code)
}
