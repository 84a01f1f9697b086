use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use geodesic_partners::acceptance::run_all;
use geodesic_partners::closing::{anosov_close, near_return, ClosingError};
use geodesic_partners::fuchsian::{
    estimate_sigma0, load_group, orbit_from_word, reduce_to_domain, GroupPresentation, LoadError, Word,
};
use geodesic_partners::hyperplane::upsilon_inverse;
use geodesic_partners::partner::{
    construct_partner, construct_pseudo_partner, find_crossings, reconnect_double, EncounterInputs,
};
use geodesic_partners::report::RunReport;
use geodesic_partners::{PslElement, ToleranceConfig};

#[derive(Parser)]
#[command(name = "geodesic-partners", version, about = "Closed geodesics, self-crossings and partner orbits")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file overriding the numeric tolerances.
    #[arg(long, global = true)]
    tol_file: Option<PathBuf>,
    /// Record wall time in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Group(GroupCmd),
    #[command(subcommand)]
    Orbits(OrbitsCmd),
    #[command(subcommand)]
    Crossings(CrossingsCmd),
    #[command(subcommand)]
    Partner(PartnerCmd),
    #[command(subcommand)]
    Pseudo(PseudoCmd),
    #[command(subcommand)]
    Closing(ClosingCmd),
    #[command(subcommand)]
    Flow(FlowCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args, Clone)]
struct OrbitArgs {
    #[arg(long, default_value = "octagon")]
    group: String,
    /// Signed 1-based generator indices, e.g. "1,2,-1".
    #[arg(long, allow_hyphen_values = true)]
    word: String,
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Check generators and relations, estimate systole, ε₀ and σ₀.
    Validate { group: String },
}

#[derive(Subcommand)]
enum OrbitsCmd {
    /// Closed geodesics from cyclically reduced words, one word per distinct trace.
    Enumerate {
        #[arg(long, default_value = "octagon")]
        group: String,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
    },
}

#[derive(Subcommand)]
enum CrossingsCmd {
    Find {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, default_value_t = 2)]
        max_conj_len: usize,
    },
}

#[derive(Subcommand)]
enum PartnerCmd {
    Construct {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        crossing_index: usize,
        #[arg(long, default_value_t = 2)]
        max_conj_len: usize,
        /// Also build the doubled orbit through the original and the partner.
        #[arg(long)]
        reconnect: bool,
    },
}

#[derive(Subcommand)]
enum PseudoCmd {
    Construct {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        crossing_index: usize,
        #[arg(long, default_value_t = 2)]
        max_conj_len: usize,
    },
}

#[derive(Subcommand)]
enum ClosingCmd {
    /// Builds a near-return with deck element W and closes it.
    Demo {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        shift: f64,
    },
}

#[derive(Subcommand)]
enum FlowCmd {
    /// CSV of (t, base_x, base_y, vx, vy) along the closed geodesic of W.
    Trace {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Map every point back next to i by generator moves.
        #[arg(long)]
        reduce: bool,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// The full acceptance suite.
    All {
        #[arg(long, default_value = "octagon")]
        group: String,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Io(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(..) => Failure::Io(e.to_string()),
            LoadError::Group(g) => Failure::Check(g.to_string()),
        }
    }
}

struct Ctx {
    seed: u64,
    out: Option<PathBuf>,
    tol: ToleranceConfig,
    timing: bool,
    start: Instant,
}

impl Ctx {
    fn emit<T: Serialize>(&self, command: &str, group: &str, results: T) -> Result<(), Failure> {
        let mut report = RunReport::new(command, group, self.tol, self.seed, results);
        if self.timing {
            report.wall_time_ms = Some(self.start.elapsed().as_millis() as u64);
        }
        self.write(&(report.to_json() + "\n"))
    }

    fn write(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
            None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
        }
    }

    fn group(&self, spec: &str) -> Result<Arc<GroupPresentation>, Failure> {
        Ok(load_group(spec, self.tol)?)
    }

    fn orbit(&self, a: &OrbitArgs) -> Result<(Arc<GroupPresentation>, Word), Failure> {
        let group = self.group(&a.group)?;
        let word = Word::parse(&group, &a.word).map_err(|e| Failure::Usage(format!("--word: {e}")))?;
        Ok((group, word))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("GEODESIC_PARTNERS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("i/o: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let tol = match &cli.global.tol_file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => ToleranceConfig::default(),
    };
    let ctx = Ctx { seed: cli.global.seed, out: cli.global.out, tol, timing: cli.global.timing, start: Instant::now() };
    match cli.command {
        Command::Group(GroupCmd::Validate { group }) => group_validate(&ctx, &group),
        Command::Orbits(OrbitsCmd::Enumerate { group, max_len }) => orbits_enumerate(&ctx, &group, max_len),
        Command::Crossings(CrossingsCmd::Find { orbit, max_conj_len }) => {
            let (group, word) = ctx.orbit(&orbit)?;
            let o = orbit_from_word(&group, &word).map_err(|e| Failure::Check(e.to_string()))?;
            let events = find_crossings(&group, &o, max_conj_len).map_err(|e| Failure::Usage(e.to_string()))?;
            ctx.emit("crossings find", &group.name, serde_json::json!({ "orbit": o, "crossings": events }))
        }
        Command::Partner(PartnerCmd::Construct { orbit, crossing_index, max_conj_len, reconnect }) => {
            let (group, word) = ctx.orbit(&orbit)?;
            let (o, events) = crossings_of(&group, &word, max_conj_len)?;
            let e = events.get(crossing_index).ok_or_else(|| {
                Failure::Usage(format!("crossing index {crossing_index} out of range ({} crossings)", events.len()))
            })?;
            let sigma0 = estimate_sigma0(&group, ctx.seed).map_err(|e| Failure::Check(e.to_string()))?;
            let inputs = EncounterInputs::new(sigma0.sigma0);
            let cert = construct_partner(&group, &o, e, &inputs).map_err(|e| Failure::Check(e.to_string()))?;
            let ok = cert.all_pass();
            if reconnect {
                let r = reconnect_double(&group, &cert).map_err(|e| Failure::Check(e.to_string()))?;
                let ok = ok && r.all_pass();
                ctx.emit("partner construct", &group.name, serde_json::json!({ "partner": cert, "reconnection": r }))?;
                return if ok { Ok(()) } else { Err(Failure::Check("a certificate bound failed".into())) };
            }
            ctx.emit("partner construct", &group.name, &cert)?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Check("a certificate bound failed".into()))
            }
        }
        Command::Pseudo(PseudoCmd::Construct { orbit, crossing_index, max_conj_len }) => {
            let (group, word) = ctx.orbit(&orbit)?;
            let (o, events) = crossings_of(&group, &word, max_conj_len)?;
            let e = events.get(crossing_index).ok_or_else(|| {
                Failure::Usage(format!("crossing index {crossing_index} out of range ({} crossings)", events.len()))
            })?;
            let cert = construct_pseudo_partner(&group, &o, e).map_err(|e| Failure::Check(e.to_string()))?;
            ctx.emit("pseudo construct", &group.name, &cert)?;
            if cert.all_pass() {
                Ok(())
            } else {
                Err(Failure::Check("a certificate bound failed".into()))
            }
        }
        Command::Closing(ClosingCmd::Demo { orbit, u, s, shift }) => {
            let (group, word) = ctx.orbit(&orbit)?;
            let nr = near_return(&group, &word, u, s, shift).map_err(|e| Failure::Usage(e.to_string()))?;
            let x = geodesic_partners::fuchsian::QuotientPoint::new(&group, nr.point);
            match anosov_close(&x, nr.t, nr.u, nr.s) {
                Ok(cert) => ctx.emit("closing demo", &group.name, &cert),
                Err(ClosingError::BoundViolated { name, certificate }) => {
                    ctx.emit("closing demo", &group.name, &certificate)?;
                    Err(Failure::Check(format!("bound {name} violated")))
                }
                Err(e @ ClosingError::DomainViolation { .. }) => Err(Failure::Usage(e.to_string())),
                Err(e) => Err(Failure::Check(e.to_string())),
            }
        }
        Command::Flow(FlowCmd::Trace { orbit, t0, t1, dt, reduce }) => flow_trace(&ctx, &orbit, t0, t1, dt, reduce),
        Command::Verify(VerifyCmd::All { group }) => {
            let g = ctx.group(&group)?;
            let outcomes = run_all(&g, ctx.seed);
            for c in &outcomes {
                eprintln!("[{}] criterion {} ({}): {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
            }
            let ok = outcomes.iter().all(|c| c.passed);
            ctx.emit("verify all", &g.name, &outcomes)?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Check("acceptance criteria failed".into()))
            }
        }
    }
}

fn crossings_of(
    group: &Arc<GroupPresentation>,
    word: &Word,
    max_conj_len: usize,
) -> Result<(geodesic_partners::fuchsian::PeriodicOrbit, Vec<geodesic_partners::partner::CrossingEvent>), Failure> {
    let o = orbit_from_word(group, word).map_err(|e| Failure::Check(e.to_string()))?;
    let events = find_crossings(group, &o, max_conj_len).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok((o, events))
}

#[derive(Serialize)]
struct GroupSummary {
    generators: usize,
    classification: Vec<String>,
    relation_residuals: Vec<f64>,
    systole: f64,
    epsilon0: f64,
    sigma0: f64,
    sigma0_word_len: usize,
    sigma0_frames: usize,
}

fn group_validate(ctx: &Ctx, spec: &str) -> Result<(), Failure> {
    let group = ctx.group(spec)?;
    let relation_residuals = group
        .relations
        .iter()
        .map(|r| group.relation_residual(r).unwrap_or(f64::INFINITY))
        .collect();
    let est = estimate_sigma0(&group, ctx.seed).map_err(|e| Failure::Check(e.to_string()))?;
    let classification = group
        .generators
        .iter()
        .map(|g| format!("{:?}", geodesic_partners::psl2core::classify(g, &group.tolerances)))
        .collect();
    let summary = GroupSummary {
        generators: group.rank(),
        classification,
        relation_residuals,
        systole: est.systole,
        epsilon0: est.epsilon0,
        sigma0: est.sigma0,
        sigma0_word_len: est.word_len,
        sigma0_frames: est.frames,
    };
    ctx.emit("group validate", &group.name, &summary)?;
    if est.epsilon0 > 0.0 {
        Ok(())
    } else {
        Err(Failure::Check(format!("ε₀ = {} is not positive", est.epsilon0)))
    }
}

#[derive(Serialize)]
struct OrbitRow {
    word: String,
    period: f64,
    trace: f64,
}

fn orbits_enumerate(ctx: &Ctx, spec: &str, max_len: usize) -> Result<(), Failure> {
    let group = ctx.group(spec)?;
    let ball = group.ball(max_len).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut rows: Vec<OrbitRow> = Vec::new();
    let mut traces: Vec<f64> = Vec::new();
    for w in ball.iter().filter(|w| !w.is_empty()) {
        if w.cyclic_reduce(&group).len() != w.len() {
            continue;
        }
        let tr = w.element.trace();
        if traces.iter().any(|&t| (t - tr).abs() <= 1e-9 * tr) {
            continue;
        }
        let Ok(o) = orbit_from_word(&group, w) else { continue };
        traces.push(tr);
        rows.push(OrbitRow { word: w.to_string(), period: o.period, trace: tr });
    }
    rows.sort_by(|a, b| a.period.total_cmp(&b.period).then(a.word.cmp(&b.word)));
    ctx.emit("orbits enumerate", &group.name, &rows)
}

fn flow_trace(ctx: &Ctx, a: &OrbitArgs, t0: f64, t1: f64, dt: f64, reduce: bool) -> Result<(), Failure> {
    if !(dt > 0.0) || !(t1 >= t0) {
        return Err(Failure::Usage("need dt > 0 and t1 ≥ t0".into()));
    }
    let (group, word) = ctx.orbit(a)?;
    let o = orbit_from_word(&group, &word).map_err(|e| Failure::Check(e.to_string()))?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["t", "base_x", "base_y", "vx", "vy"]).map_err(|e| Failure::Io(e.to_string()))?;
    let n = ((t1 - t0) / dt).floor() as usize;
    for k in 0..=n {
        let t = t0 + k as f64 * dt;
        let mut g = o.frame * PslElement::a(t);
        if reduce {
            g = reduce_to_domain(&group, &g).0;
        }
        let v = upsilon_inverse(&g);
        wtr.write_record([t, v.base.x, v.base.y, v.v.0, v.v.1].map(|x| format!("{x:.16e}")))
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    ctx.write(&String::from_utf8(bytes).expect("csv of numbers is utf-8"))
}
