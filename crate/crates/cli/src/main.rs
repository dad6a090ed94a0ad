mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gdtight::gd::{simulate, trajectory_of, INTERP_TOL};
use gdtight::interpolation::{is_interpolable, TripletSet};
use gdtight::rates::{
    denom_conjectured_equivalent, denom_const, denom_dynamic_nonconvex, denom_dynamic_strongly_convex, denom_variable,
    RateBound,
};
use gdtight::schedules::{
    dynamic_sequence, kappa_bar, opt_const, opt_const_nonconvex_asymptotic, opt_const_nonconvex_numeric_with_value,
    truncated_schedule, StepsizeSchedule,
};
use gdtight::tables::{figdata, table1, table2, table3, FigData, Figure};
use gdtight::thresholds::{gamma_bar_1, threshold_table};
use gdtight::worstcase::{select_worst_case, Payload, WorstCaseInstance};
use gdtight::CurvatureClass;

use output::{Cell, Format, Record};

/// Worst-case rates, stepsize schedules and tight instances for gradient
/// descent on functions with curvature in [mu, L].
#[derive(Parser)]
#[command(name = "gdtight", version, about)]
struct Cli {
    /// Decimal places for text and CSV output.
    #[arg(long, global = true)]
    digits: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate denominator for a constant, dynamic or custom schedule.
    Rate(RateArgs),
    /// Stepsize thresholds gamma_bar_k.
    Thresholds {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
    },
    /// Optimal constant normalized stepsize.
    OptStep {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Dynamic stepsize sequence.
    Schedule {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long)]
        n: usize,
        /// Cap the entries at gamma_star (kappa < 0).
        #[arg(long)]
        truncate: bool,
    },
    /// Emit a worst-case instance as JSON.
    Worstcase {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long)]
        gl: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long = "L", default_value_t = 1.0)]
        l_upper: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an instance file and report tightness.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Check interpolability of a triplet set or instance file.
    Verify {
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long = "L")]
        l_upper: Option<f64>,
        #[arg(long, default_value_t = INTERP_TOL)]
        tol: f64,
    },
    /// Denominator comparison tables.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        /// Same as --format csv.
        #[arg(long)]
        csv: bool,
    },
    /// Plot-ready CSV for the figures.
    Figdata {
        #[arg(long, value_enum)]
        which: FigureArg,
        #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
        kappa: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, conflicts_with_all = ["schedule", "dynamic"])]
    gl: Option<f64>,
    /// JSON array, schedule object or whitespace/comma separated numbers.
    #[arg(long, conflicts_with = "dynamic")]
    schedule: Option<PathBuf>,
    /// Dynamic sequence, truncated at gamma_star when kappa < 0.
    #[arg(long)]
    dynamic: bool,
    #[arg(long)]
    n: Option<usize>,
    /// Bound f_0 - f_N instead of f_0 - f_*.
    #[arg(long)]
    to_fn: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    PTerm,
    Thresholds,
    TCurves,
    OptCompare,
}

enum Status {
    Pass,
    Fail,
}

struct Ctx {
    format: Format,
    digits: Option<usize>,
}

impl Ctx {
    fn emit(&self, rec: &Record) -> Result<()> {
        let mut out = io::stdout().lock();
        rec.write(&mut out, self.format, self.digits)?;
        out.flush()?;
        Ok(())
    }
}

fn read_schedule(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    if let Ok(s) = serde_json::from_str::<StepsizeSchedule>(&text) {
        return Ok(s.entries);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad stepsize {t:?}")))
        .collect()
}

fn need_n(n: Option<usize>) -> Result<usize> {
    n.ok_or_else(|| anyhow!("--n is required here"))
}

fn cmd_rate(ctx: &Ctx, a: &RateArgs) -> Result<Status> {
    let kappa = a.kappa;
    let mut conjectured = false;
    let (n, bound) = if let Some(gl) = a.gl {
        let n = need_n(a.n)?;
        (n, denom_const(gl, kappa, n)?)
    } else if a.dynamic {
        let n = need_n(a.n)?;
        let b = if kappa >= 0.0 { denom_dynamic_strongly_convex(kappa, n)? } else { denom_dynamic_nonconvex(kappa, n)? };
        (n, b)
    } else if let Some(path) = &a.schedule {
        let s = read_schedule(path)?;
        if let Some(n) = a.n {
            if n != s.len() {
                bail!("--n {n} but the schedule has {} entries", s.len());
            }
        }
        let sched = StepsizeSchedule::custom(s);
        let b = if let Some(gl) = sched.as_constant() {
            denom_const(gl, kappa, sched.len())?
        } else if kappa <= 0.0 && sched.entries.iter().all(|&g| g <= gamma_bar_1(kappa)) {
            denom_variable(&sched.entries, kappa)?
        } else if kappa < 0.0 {
            conjectured = true;
            let d = denom_conjectured_equivalent(&sched.entries, kappa)?;
            RateBound::new(d, gdtight::rates::Regime::Dynamic)
        } else {
            bail!("no rate for non-constant schedules with kappa > 0");
        };
        (sched.len(), b)
    } else {
        bail!("one of --gl, --dynamic or --schedule is required");
    };
    let bound = if a.to_fn { bound.to_gap_fn() } else { bound };
    let numerator = if a.to_fn { "f0_minus_fN" } else { "f0_minus_fstar" };
    let rec = Record::key_values(
        "rate",
        vec![
            ("kappa", kappa.into()),
            ("n", n.into()),
            ("denominator", bound.denominator.into()),
            ("regime", bound.regime.to_string().into()),
            ("bound_unit_gap", bound.bound(1.0).into()),
            ("numerator", numerator.into()),
            ("conjectured", conjectured.into()),
        ],
    );
    ctx.emit(&rec)?;
    Ok(Status::Pass)
}

fn cmd_thresholds(ctx: &Ctx, kappa: f64, kmax: usize) -> Result<Status> {
    let t = threshold_table(kappa, kmax)?;
    let mut rec = Record::new("thresholds")
        .param("kappa", kappa)
        .param("gamma_bar_inf", t.gamma_bar_inf)
        .columns(&["k", "gamma_bar"]);
    for (k, g) in t.values {
        rec.row(vec![k.into(), g.into()]);
    }
    ctx.emit(&rec)?;
    Ok(Status::Pass)
}

fn cmd_opt_step(ctx: &Ctx, kappa: f64, n: Option<usize>) -> Result<Status> {
    let rec = if kappa >= 0.0 {
        let n = need_n(n)?;
        let g = opt_const(kappa, n)?;
        let d = denom_const(g, kappa, n)?.denominator;
        Record::key_values("opt-step", vec![("kappa", kappa.into()), ("n", n.into()), ("opt_step", g.into()), ("denominator", d.into())])
    } else {
        let gs = opt_const_nonconvex_asymptotic(kappa)?;
        let mut pairs = vec![
            ("kappa", kappa.into()),
            ("gamma_star", gs.into()),
            ("gamma_bar_1", gamma_bar_1(kappa).into()),
            ("kappa_bar", kappa_bar().into()),
            ("below_kappa_bar", (kappa <= kappa_bar()).into()),
        ];
        if let Some(n) = n {
            let (g, d) = opt_const_nonconvex_numeric_with_value(kappa, n)?;
            pairs.push(("n", n.into()));
            pairs.push(("opt_step", g.into()));
            pairs.push(("denominator", d.into()));
            pairs.push(("denominator_at_gamma_star", denom_const(gs, kappa, n)?.denominator.into()));
        }
        Record::key_values("opt-step", pairs)
    };
    ctx.emit(&rec.digits(4))?;
    Ok(Status::Pass)
}

fn cmd_schedule(ctx: &Ctx, kappa: f64, n: usize, truncate: bool) -> Result<Status> {
    let s = if truncate { truncated_schedule(kappa, n)? } else { dynamic_sequence(kappa, n)? };
    let mut rec = Record::new("schedule")
        .digits(3)
        .param("kappa", kappa)
        .param("n", n)
        .param("truncate", truncate)
        .columns(&["i", "s_i"]);
    for (i, v) in s.entries.iter().enumerate() {
        rec.row(vec![i.into(), (*v).into()]);
    }
    ctx.emit(&rec)?;
    Ok(Status::Pass)
}

fn payload_kind(p: &Payload) -> &'static str {
    match p {
        Payload::Piecewise1d(_) => "piecewise1d",
        Payload::HuberQuadratic(_) => "huber_quadratic",
        Payload::Quadratic(_) => "quadratic",
        Payload::Triplets { .. } => "triplets",
    }
}

fn cmd_worstcase(ctx: &Ctx, kappa: f64, gl: f64, n: usize, gap: f64, l: f64, out: Option<&Path>) -> Result<Status> {
    let cls = CurvatureClass::new(kappa * l, l)?;
    let inst = select_worst_case(&cls, gl, n, gap)?;
    let text = serde_json::to_string_pretty(&inst)?;
    match out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            let rec = Record::key_values(
                "worstcase",
                vec![
                    ("out", path.display().to_string().into()),
                    ("kind", payload_kind(&inst.payload).into()),
                    ("regime", inst.regime.to_string().into()),
                    ("denominator", inst.expected_denominator.into()),
                    ("conjectured", inst.conjectured.into()),
                ],
            );
            ctx.emit(&rec)?;
        }
        None => println!("{text}"),
    }
    Ok(Status::Pass)
}

fn read_instance(path: &Path) -> Result<WorstCaseInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))
}

fn cmd_simulate(ctx: &Ctx, path: &Path) -> Result<Status> {
    let inst = read_instance(path)?;
    let r = simulate(&inst)?;
    let (wi, wj, wr) = r.worst_pair.map_or((-1, -1, 0.0), |w| (w.i as i64, w.j as i64, w.residual));
    let rec = Record::key_values(
        "simulate",
        vec![
            ("kappa", r.kappa.into()),
            ("gl", r.gl.map_or(Cell::from("variable"), Cell::from)),
            ("n", r.n.into()),
            ("gap", r.gap.into()),
            ("regime", r.regime.to_string().into()),
            ("denominator", r.denominator.into()),
            ("bound", r.bound.into()),
            ("achieved", r.achieved.into()),
            ("ratio", r.ratio.into()),
            ("f_star", r.f_star.into()),
            ("interpolable", r.interpolable.into()),
            ("worst_i", Cell::Int(wi)),
            ("worst_j", Cell::Int(wj)),
            ("worst_residual", wr.into()),
            ("status", (if r.conjectured { "CONJECTURED" } else { "PROVEN" }).into()),
        ],
    );
    ctx.emit(&rec)?;
    Ok(if r.interpolable { Status::Pass } else { Status::Fail })
}

fn cmd_verify(ctx: &Ctx, path: &Path, mu: Option<f64>, l: Option<f64>, tol: f64) -> Result<Status> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (set, own) = match serde_json::from_str::<WorstCaseInstance>(&text) {
        Ok(inst) => (trajectory_of(&inst)?.triplets, Some(inst.class)),
        Err(_) => {
            let set: TripletSet =
                serde_json::from_str(&text).with_context(|| format!("parsing triplets {}", path.display()))?;
            (set, None)
        }
    };
    let cls = match (mu, l, own) {
        (Some(mu), Some(l), _) => CurvatureClass::new(mu, l)?,
        (None, None, Some(c)) => c,
        (_, _, Some(c)) => CurvatureClass::new(mu.unwrap_or(c.mu()), l.unwrap_or(c.l_upper()))?,
        _ => bail!("--mu and --L are required for a bare triplet file"),
    };
    let rep = is_interpolable(&set, &cls, tol)?;
    let verdict = if rep.interpolable { "PASS" } else { "FAIL" };
    let mut pairs = vec![
        ("mu", cls.mu().into()),
        ("L", cls.l_upper().into()),
        ("tol", Cell::Text(tol.to_string())),
        ("triplets", set.len().into()),
    ];
    if let Some(w) = rep.worst {
        pairs.push(("worst_i", w.i.into()));
        pairs.push(("worst_j", w.j.into()));
        pairs.push(("worst_residual", Cell::Text(format!("{:.3e}", w.residual))));
        pairs.push(("worst_scaled", Cell::Text(format!("{:.3e}", w.scaled))));
    }
    pairs.push(("verdict", verdict.into()));
    ctx.emit(&Record::key_values("verify", pairs))?;
    Ok(if rep.interpolable { Status::Pass } else { Status::Fail })
}

fn fixed(x: f64, d: usize) -> Cell {
    Cell::Num(x, Some(d))
}

fn cmd_tables(ctx: &Ctx, which: u8) -> Result<Status> {
    let mut rec = Record::new("tables").digits(3).param("which", which as usize);
    match which {
        1 => {
            rec = rec.columns(&["N", "1+2N", "gamma_bar_N", "1+2N*gamma_bar_N", "s_N-1", "dyn_denom", "ratio"]);
            for r in table1()? {
                rec.row(vec![
                    r.n.into(),
                    Cell::Int(r.standard_denom as i64),
                    r.gamma_bar.into(),
                    r.opt_denom.into(),
                    r.s_last.into(),
                    r.dyn_denom.into(),
                    r.ratio.into(),
                ]);
            }
        }
        2 => {
            rec = rec.columns(&[
                "kappa", "N", "2/(1+kappa)", "std_denom", "gamma_bar_N", "opt_denom", "s_N-1", "dyn_denom", "ratio",
            ]);
            for r in table2()? {
                let step_digits = (-r.kappa.log10()).round().max(3.0) as usize;
                rec.row(vec![
                    Cell::Text(format!("{:e}", r.kappa)),
                    r.n.into(),
                    fixed(r.standard_step, step_digits),
                    r.standard_denom.into(),
                    r.gamma_bar.into(),
                    r.opt_denom.into(),
                    r.s_last.into(),
                    r.dyn_denom.into(),
                    r.ratio.into(),
                ]);
            }
        }
        _ => {
            rec = rec.columns(&["N", "gamma_star", "P_asym", "opt_step", "P_opt", "min_s_gamma_star", "dyn_denom", "ratio"]);
            for r in table3()? {
                rec.row(vec![
                    r.n.into(),
                    r.gamma_star.into(),
                    r.p_asymptotic.into(),
                    r.opt_step.into(),
                    r.p_opt.into(),
                    r.step_last.into(),
                    r.dyn_denom.into(),
                    r.ratio.into(),
                ]);
            }
        }
    }
    ctx.emit(&rec)?;
    Ok(Status::Pass)
}

fn fig_record(which: &str, data: &FigData) -> Record {
    let mut rec = Record::new("figdata").digits(10).param("which", which).columns(&data.columns);
    for r in &data.rows {
        rec.row(r.iter().map(|&x| Cell::from(x)).collect());
    }
    rec
}

fn cmd_figdata(ctx: &Ctx, which: FigureArg, kappa: f64, points: usize, out: Option<&Path>) -> Result<Status> {
    let (fig, name) = match which {
        FigureArg::PTerm => (Figure::PTerm, "p-term"),
        FigureArg::Thresholds => (Figure::Thresholds, "thresholds"),
        FigureArg::TCurves => (Figure::TCurves, "t-curves"),
        FigureArg::OptCompare => (Figure::OptCompare, "opt-compare"),
    };
    let rec = fig_record(name, &figdata(fig, kappa, points)?);
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            rec.write(&mut buf, Format::Csv, ctx.digits)?;
            fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
            ctx.emit(&Record::key_values(
                "figdata",
                vec![("which", name.into()), ("out", path.display().to_string().into()), ("rows", rec.rows.len().into())],
            ))?;
        }
        None => ctx.emit(&rec)?,
    }
    Ok(Status::Pass)
}

fn run(cli: Cli) -> Result<Status> {
    let mut ctx = Ctx { format: cli.format, digits: cli.digits };
    match cli.command {
        Command::Rate(a) => cmd_rate(&ctx, &a),
        Command::Thresholds { kappa, kmax } => cmd_thresholds(&ctx, kappa, kmax),
        Command::OptStep { kappa, n } => cmd_opt_step(&ctx, kappa, n),
        Command::Schedule { kappa, n, truncate } => cmd_schedule(&ctx, kappa, n, truncate),
        Command::Worstcase { kappa, gl, n, gap, l_upper, out } => {
            cmd_worstcase(&ctx, kappa, gl, n, gap, l_upper, out.as_deref())
        }
        Command::Simulate { instance } => cmd_simulate(&ctx, &instance),
        Command::Verify { triplets, mu, l_upper, tol } => cmd_verify(&ctx, &triplets, mu, l_upper, tol),
        Command::Tables { which, csv } => {
            if csv {
                ctx.format = Format::Csv;
            }
            cmd_tables(&ctx, which)
        }
        Command::Figdata { which, kappa, points, out } => cmd_figdata(&ctx, which, kappa, points, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
