//! The four subcommands and their CSV assembly.
//!
//! Multi-section documents separate sections with one blank line; every
//! section starts with its own header row.

use crate::args::{resolve_rates, GridArgs, MethodArg, ModelArgs};
use crate::error::CliError;
use crate::output::{fmt_num, write_output};
use clap::Args;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use tlps::analytic::{
    nphase_sojourn_linear, nphase_sojourn_series, ps_sojourn, two_phase_sojourn, upper_bound,
    Method,
};
use tlps::hyperexp::{HyperExp, TlpsModel};
use tlps::simulate::{busy_period_check, run, run_traced, SimConfig, TraceEvent};
use tlps::threshold::{
    approx_threshold, optimize_threshold, TwoPhaseConstants,
};

fn route_value(model: &TlpsModel, method: Method, theta: f64, tol: f64) -> Result<f64, CliError> {
    Ok(match method {
        Method::Linear => nphase_sojourn_linear(model, theta)?.t_total,
        Method::Series => nphase_sojourn_series(model, theta, tol)?.t_total,
        Method::Bound => upper_bound(model, theta)?.t_total,
        Method::TwoPhase => two_phase_sojourn(model, theta)?.t_total,
    })
}

fn column_name(method: Method) -> &'static str {
    match method {
        Method::Linear => "t_linear",
        Method::Series => "t_series",
        Method::Bound => "t_upper",
        Method::TwoPhase => "t_twophase",
    }
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Tabulate a single analytic route (default: linear, series, and
    /// upper bound side by side with their relative gap)
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Series stopping tolerance
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn curve(args: CurveArgs) -> Result<(), CliError> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Spec(format!(
            "--tol must be positive, got {}",
            args.tol
        )));
    }
    let model = args.model.resolve()?;
    let thetas = args.grid.points(&model)?;
    let mut doc = String::new();
    match args.method {
        None => {
            doc.push_str("theta,t_linear,t_series,t_upper,delta\n");
            for &theta in &thetas {
                let lin = nphase_sojourn_linear(&model, theta)?.t_total;
                let ser = nphase_sojourn_series(&model, theta, args.tol)?.t_total;
                let upp = upper_bound(&model, theta)?.t_total;
                let delta = (upp - lin) / lin;
                let _ = writeln!(
                    doc,
                    "{},{},{},{},{}",
                    fmt_num(theta),
                    fmt_num(lin),
                    fmt_num(ser),
                    fmt_num(upp),
                    fmt_num(delta)
                );
            }
        }
        Some(m) => {
            let method = m.method();
            let _ = writeln!(doc, "theta,{}", column_name(method));
            for &theta in &thetas {
                let v = route_value(&model, method, theta, args.tol)?;
                let _ = writeln!(doc, "{},{}", fmt_num(theta), fmt_num(v));
            }
        }
    }
    write_output(args.out.as_deref(), &doc)
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// Phase counts to sweep
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 100, 500, 1000])]
    pub n_list: Vec<usize>,
    /// Weight decay exponent of the power-law family
    #[arg(long, default_value_t = 2.5)]
    pub gamma1: f64,
    /// Rate decay exponent of the power-law family
    #[arg(long, default_value_t = 1.2)]
    pub gamma2: f64,
    /// Mean job size (default 20/11; decimal or fraction)
    #[arg(long, value_name = "NUM")]
    pub mean: Option<String>,
    /// Arrival rate (default 1/2)
    #[arg(long, value_name = "NUM")]
    pub lambda: Option<String>,
    /// Offered load
    #[arg(long, value_name = "NUM")]
    pub rho: Option<String>,
    /// Smallest threshold of the search grid
    #[arg(long, default_value_t = 0.0)]
    pub theta_min: f64,
    /// Largest threshold of the search grid
    #[arg(long, default_value_t = 60.0)]
    pub theta_max: f64,
    /// Number of search grid points
    #[arg(long, default_value_t = 241)]
    pub theta_steps: usize,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn table(args: TableArgs) -> Result<(), CliError> {
    let flags = ModelArgs {
        phases: None,
        family: None,
        mean: args.mean.clone(),
        lambda: args.lambda.clone(),
        rho: args.rho.clone(),
    };
    let (mean_flag, lambda_flag, rho_flag) = flags.rate_flags()?;
    let (m, lambda) = if mean_flag.is_none() && lambda_flag.is_none() && rho_flag.is_none() {
        (20.0 / 11.0, 0.5)
    } else {
        resolve_rates(None, mean_flag, lambda_flag, rho_flag)?
    };
    let mut doc = String::from("n,eta,d,theta_opt,max_gain_percent,max_delta\n");
    for &n in &args.n_list {
        let dist = HyperExp::heavy_tail_family(n, args.gamma1, args.gamma2, m)?;
        let eta = dist.rates()[0];
        let d = dist.second_moment() / 2.0;
        let model = TlpsModel::new(dist, lambda)?;
        let search =
            optimize_threshold(&model, args.theta_min, args.theta_max, args.theta_steps)?;
        let mut max_delta = f64::MIN;
        for &(theta, t) in &search.grid {
            let u = upper_bound(&model, theta)?.t_total;
            max_delta = max_delta.max((u - t) / t);
        }
        let _ = writeln!(
            doc,
            "{n},{},{},{},{},{}",
            fmt_num(eta),
            fmt_num(d),
            fmt_num(search.theta_opt),
            fmt_num(100.0 * search.gain_at_opt),
            fmt_num(max_delta)
        );
    }
    write_output(args.out.as_deref(), &doc)
}

#[derive(Args, Debug)]
pub struct TwophaseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Loads for an optional gain-sweep section, e.g. "0.1,0.3,0.5"
    #[arg(long, value_delimiter = ',')]
    pub rho_sweep: Vec<f64>,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Gains at the approximated optimum and at its half and three-halves
/// multiples, relative to plain PS.
fn gains_at_rules(model: &TlpsModel) -> Result<(f64, f64, f64), CliError> {
    let theta_tilde = approx_threshold(model)?;
    let ps = ps_sojourn(model);
    let gain_at = |mult: f64| -> Result<f64, CliError> {
        let t = two_phase_sojourn(model, mult * theta_tilde)?.t_total;
        Ok((ps - t) / ps)
    };
    Ok((gain_at(1.0)?, gain_at(0.5)?, gain_at(1.5)?))
}

pub fn twophase(args: TwophaseArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    if model.dist().num_phases() != 2 {
        return Err(CliError::Spec(format!(
            "the twophase command requires exactly 2 phases, got {}",
            model.dist().num_phases()
        )));
    }
    let constants = TwoPhaseConstants::for_model(&model)?;
    let theta_tilde = approx_threshold(&model)?;
    let t_tilde = two_phase_sojourn(&model, theta_tilde)?.t_total;
    let ps = ps_sojourn(&model);
    let (gain, gain_half, gain_three_halves) = gains_at_rules(&model)?;

    let mut doc = String::from("quantity,value\n");
    for (name, value) in [
        ("theta_tilde", theta_tilde),
        ("c1", constants.c1),
        ("c2", constants.c2),
        ("epsilon", constants.epsilon),
        ("t_at_theta_tilde", t_tilde),
        ("t_ps", ps),
        ("gain", gain),
        ("gain_half_theta", gain_half),
        ("gain_three_halves_theta", gain_three_halves),
    ] {
        let _ = writeln!(doc, "{name},{}", fmt_num(value));
    }

    doc.push('\n');
    doc.push_str("theta,t_twophase\n");
    for theta in args.grid.points(&model)? {
        let t = two_phase_sojourn(&model, theta)?.t_total;
        let _ = writeln!(doc, "{},{}", fmt_num(theta), fmt_num(t));
    }

    if !args.rho_sweep.is_empty() {
        doc.push('\n');
        doc.push_str("rho,gain,gain_half_theta,gain_three_halves_theta\n");
        let m = model.mean_job_size();
        for &rho in &args.rho_sweep {
            let swept = TlpsModel::new(model.dist().clone(), rho / m)?;
            let (g, g_half, g_three_halves) = gains_at_rules(&swept)?;
            let _ = writeln!(
                doc,
                "{},{},{},{}",
                fmt_num(rho),
                fmt_num(g),
                fmt_num(g_half),
                fmt_num(g_three_halves)
            );
        }
    }
    write_output(args.out.as_deref(), &doc)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Service threshold θ
    #[arg(long)]
    pub theta: f64,
    /// Countable arrivals per replication
    #[arg(long, default_value_t = 200_000)]
    pub jobs: usize,
    /// Leading arrivals discarded as warmup
    #[arg(long, default_value_t = 2_000)]
    pub warmup: usize,
    /// Independent replications
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Root seed; replication streams derive from it deterministically
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the replication-0 event trace to this CSV file
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Output file (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let analytic = nphase_sojourn_linear(&model, args.theta)?.t_total;
    let config = SimConfig {
        model,
        theta: args.theta,
        num_jobs: args.jobs,
        warmup_jobs: args.warmup,
        seed: args.seed,
        replications: args.reps,
    };
    let (result, trace) = if args.trace.is_some() {
        let (r, t) = run_traced(&config)?;
        (r, Some(t))
    } else {
        (run(&config)?, None)
    };
    if let (Some(path), Some(events)) = (&args.trace, &trace) {
        busy_period_check(events, args.theta)?;
        write_trace(path, events)?;
    }

    let mut doc = String::from("replication,mean_sojourn\n");
    for (rep, mean) in result.rep_means.iter().enumerate() {
        let _ = writeln!(doc, "{rep},{}", fmt_num(*mean));
    }

    doc.push('\n');
    doc.push_str("mean_sojourn,ci99_halfwidth,analytic,inside_ci\n");
    let inside = (result.mean_sojourn - analytic).abs() <= result.ci99_halfwidth;
    let _ = writeln!(
        doc,
        "{},{},{},{}",
        fmt_num(result.mean_sojourn),
        fmt_num(result.ci99_halfwidth),
        fmt_num(analytic),
        inside
    );

    doc.push('\n');
    doc.push_str("x_lo,x_hi,mean_sojourn,ci99_halfwidth,count\n");
    for b in &result.bucket_stats {
        let _ = writeln!(
            doc,
            "{},{},{},{},{}",
            fmt_num(b.x_lo),
            fmt_num(b.x_hi),
            fmt_num(b.mean),
            fmt_num(b.ci99_halfwidth),
            b.count
        );
    }
    write_output(args.out.as_deref(), &doc)
}

fn write_trace(path: &PathBuf, events: &[TraceEvent]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "time,event,job_id,queue,attained")?;
    for e in events {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_num(e.time),
            e.event.name(),
            e.job_id,
            e.queue,
            fmt_num(e.attained)
        )?;
    }
    Ok(())
}
