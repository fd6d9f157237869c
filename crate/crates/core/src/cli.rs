//! Command-line front end.
//!
//! Parameters come from flags and an optional JSON config file with the same
//! keys (snake_case); flags win. Every output starts with a header carrying
//! the tool version, the seed and the SHA-256 of the resolved configuration.
//! CSV headers are `#` comment lines.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::occupations_of;
use crate::functional::{quantum_functional, FunctionalReport};
use crate::gates::{apply_protocol, build_protocol, Target};
use crate::linalg::fmt_num;
use crate::montecarlo::{histogram, max_tolerated_sigma, merit_distribution, PerturbationSpec};
use crate::noise::{
    default_pairs, evolve_noisy_protocol_with, loschmidt_echo_with, max_step, purity_lower_bound,
    weakened_from_state, with_default_durations, EvolutionOptions, NoiseParams,
};
use crate::polytope::{check_m_fermion, check_pure_bd, check_weakened, class_polytope_for, Merit};
use crate::tomography::{reconstruct_one_rdm, reconstruct_one_rdm_exact, DEFAULT_SHOTS};

pub const THREADS_ENV: &str = "EXTPAULI_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "extpauli", version, about = "Extended Pauli constraint simulations for three fermions in six modes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub params: Params,
    /// JSON file with default parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Run a preparation protocol and compare with the tabulated occupations.
    Prepare,
    /// Reconstruct the 1-RDM from simulated occupation measurements.
    Rdm,
    /// Merit functions, Borland-Dennis slacks and class membership.
    Polytope,
    /// Quantum functional of the class polytopes.
    Functional,
    /// Fidelity, purity and occupation trajectory of a noisy preparation.
    Noisy,
    /// Entangle-disentangle run and the purity lower bound.
    Echo,
    /// Largest 1-RDM noise that still certifies the entanglement class.
    Montecarlo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Prepare => "prepare",
            Command::Rdm => "rdm",
            Command::Polytope => "polytope",
            Command::Functional => "functional",
            Command::Noisy => "noisy",
            Command::Echo => "echo",
            Command::Montecarlo => "montecarlo",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every tunable. Unset fields fall back to the config file, then to the
/// command's default.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Output format; json when absent.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// RNG seed for sampled commands; 0 when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// slater, epr, w or ghz.
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// Shots per measurement setting (rdm).
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Use exact expectation values instead of shots (rdm).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub exact: Option<bool>,
    /// Comma-separated occupation numbers (polytope).
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Weakened-bound margin; defaults to 1 − max eigenvalue of the state.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Polytope label (functional); all four when absent.
    #[arg(long, global = true)]
    pub polytope: Option<String>,
    /// Pure dephasing rate in 1/s.
    #[arg(long, global = true)]
    pub dephasing_rate: Option<f64>,
    /// Decay rate of the driven pair's coherences during gates, 1/s.
    #[arg(long, global = true)]
    pub emission_rate: Option<f64>,
    /// Time step in s (noisy, echo).
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Free evolution after the last gate in s (noisy).
    #[arg(long, global = true)]
    pub hold: Option<f64>,
    /// Base state (montecarlo).
    #[arg(long, global = true)]
    pub base: Option<String>,
    /// f_slater, f_epr or f_w (montecarlo); the base's own facet when absent.
    #[arg(long, global = true)]
    pub merit: Option<String>,
    /// Required violation probability (montecarlo), default 0.999.
    #[arg(long, global = true)]
    pub confidence: Option<f64>,
    /// Perturbed samples per probability estimate (montecarlo), default 100000.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Histogram bins (montecarlo).
    #[arg(long, global = true)]
    pub bins: Option<usize>,
}

impl Params {
    /// Fields set here win over `fallback`.
    pub fn or(self, fallback: Params) -> Params {
        Params {
            format: self.format.or(fallback.format),
            seed: self.seed.or(fallback.seed),
            target: self.target.or(fallback.target),
            shots: self.shots.or(fallback.shots),
            exact: self.exact.or(fallback.exact),
            lambda: self.lambda.or(fallback.lambda),
            epsilon: self.epsilon.or(fallback.epsilon),
            polytope: self.polytope.or(fallback.polytope),
            dephasing_rate: self.dephasing_rate.or(fallback.dephasing_rate),
            emission_rate: self.emission_rate.or(fallback.emission_rate),
            dt: self.dt.or(fallback.dt),
            hold: self.hold.or(fallback.hold),
            base: self.base.or(fallback.base),
            merit: self.merit.or(fallback.merit),
            confidence: self.confidence.or(fallback.confidence),
            samples: self.samples.or(fallback.samples),
            bins: self.bins.or(fallback.bins),
        }
    }

    fn target_or(&self, default: Target) -> Result<Target> {
        self.target.as_deref().map_or(Ok(default), str::parse)
    }

    fn noise(&self, default: NoiseParams) -> NoiseParams {
        NoiseParams {
            dephasing_rate: self.dephasing_rate.unwrap_or(default.dephasing_rate),
            emission_rate: self.emission_rate.unwrap_or(default.emission_rate),
            temperature_tag: default.temperature_tag,
        }
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
}

impl RunConfig {
    pub fn format(&self) -> Format {
        self.params.format.unwrap_or(Format::Json)
    }

    pub fn seed(&self) -> u64 {
        self.params.seed.unwrap_or(0)
    }

    /// SHA-256 of the canonical JSON of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_)
        | Error::UnknownLabel(_)
        | Error::Unsupported(_)
        | Error::InvalidGate(_)
        | Error::InvalidPartition(_)
        | Error::InvalidDimension(_)
        | Error::StepSize(_)
        | Error::Json(_)
        | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Rendered output of one command.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    fmt_num(x)
}

fn num_list(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

struct Output {
    json: Value,
    csv: Table,
}

fn render(cfg: &RunConfig, out: Output) -> String {
    let version = env!("CARGO_PKG_VERSION");
    match cfg.format() {
        Format::Json => {
            let doc = json!({
                "header": {
                    "tool": "extpauli",
                    "version": version,
                    "command": cfg.command.name(),
                    "seed": cfg.seed(),
                    "config_sha256": cfg.hash(),
                },
                "result": out.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(s, "# tool: extpauli {version}");
            let _ = writeln!(s, "# command: {}", cfg.command.name());
            let _ = writeln!(s, "# seed: {}", cfg.seed());
            let _ = writeln!(s, "# config_sha256: {}", cfg.hash());
            let _ = writeln!(s, "{}", out.csv.columns.join(","));
            for row in &out.csv.rows {
                let _ = writeln!(s, "{}", row.join(","));
            }
            s
        }
    }
}

/// Runs one resolved configuration and returns the rendered output.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    let out = match cfg.command {
        Command::Prepare => prepare(&cfg.params)?,
        Command::Rdm => rdm(&cfg.params, cfg.seed())?,
        Command::Polytope => polytope(&cfg.params)?,
        Command::Functional => functional(&cfg.params)?,
        Command::Noisy => noisy(&cfg.params)?,
        Command::Echo => echo(&cfg.params)?,
        Command::Montecarlo => montecarlo(&cfg.params, cfg.seed())?,
    };
    Ok(render(cfg, out))
}

fn prepare(p: &Params) -> Result<Output> {
    let target = p.target_or(Target::Ghz)?;
    let protocol = build_protocol(target);
    let state = apply_protocol(&Target::Slater.state(), &protocol)?;
    let lambda = occupations_of(&state)?;
    let table = target.occupations();
    let deviation = lambda.max_abs_diff(&table);
    let fidelity = state.fidelity(&target.state())?;
    let functional = quantum_functional(&class_polytope_for(target))?.value;

    let mut csv = Table::new(&["quantity", "value"]);
    for (k, (l, t)) in lambda.as_slice().iter().zip(table).enumerate() {
        csv.push(vec![format!("lambda{}", k + 1), num(*l)]);
        csv.push(vec![format!("table_lambda{}", k + 1), num(t)]);
    }
    csv.push(vec!["max_deviation".into(), num(deviation)]);
    csv.push(vec!["fidelity_to_tabulated".into(), num(fidelity)]);
    csv.push(vec!["class_functional".into(), num(functional)]);

    let json = json!({
        "target": target,
        "gates": protocol.gates,
        "final_state": state,
        "lambda": lambda,
        "table_lambda": table,
        "max_deviation": deviation,
        "fidelity_to_tabulated": fidelity,
        "class_functional": functional,
    });
    Ok(Output { json, csv })
}

fn rdm(p: &Params, seed: u64) -> Result<Output> {
    let target = p.target_or(Target::Ghz)?;
    let state = apply_protocol(&Target::Slater.state(), &build_protocol(target))?;
    let est = if p.exact.unwrap_or(false) {
        reconstruct_one_rdm_exact(&state)?
    } else {
        reconstruct_one_rdm(&state, p.shots.unwrap_or(DEFAULT_SHOTS), seed)?
    };
    let (lambda, _) = crate::fock::natural_occupations(&est.to_one_rdm()?)?;

    let d = est.matrix.nrows();
    let mut csv = Table::new(&["i", "j", "re", "im", "sigma"]);
    for i in 0..d {
        for j in 0..d {
            let z = est.matrix[(i, j)];
            csv.push(vec![(i + 1).to_string(), (j + 1).to_string(), num(z.re), num(z.im), num(est.sigma[(i, j)])]);
        }
    }
    let mut json: Value = serde_json::from_str(&est.to_json()?)?;
    json["target"] = json!(target);
    json["lambda"] = json!(lambda);
    Ok(Output { json, csv })
}

fn polytope(p: &Params) -> Result<Output> {
    let (lambda, epsilon, source) = match &p.lambda {
        Some(l) => (l.clone(), p.epsilon.unwrap_or(0.0), "input".to_string()),
        None => {
            let target = p.target_or(Target::Ghz)?;
            let protocol = with_default_durations(&build_protocol(target));
            let params = p.noise(NoiseParams::noiseless());
            let dt = match p.dt {
                Some(dt) => dt,
                None => max_step(&protocol)?.min(1e-12),
            };
            let (_, rho) = evolve_noisy_protocol_with(&Target::Slater.state(), &protocol, &params, &EvolutionOptions::new(dt))?;
            let l = crate::linalg::eigvalsh_desc(rho.one_rdm().matrix());
            let eps = p.epsilon.unwrap_or_else(|| weakened_from_state(&rho).map(|w| w.epsilon).unwrap_or(0.0));
            (l, eps, target.to_string())
        }
    };
    let ov = crate::fock::OccupationVector::from_unsorted(lambda.clone());
    let (report, bd_member) = check_pure_bd(&ov)?;
    let weakened = check_weakened(ov.as_slice(), epsilon)?;
    let classes: Vec<(Target, bool)> =
        Target::ALL.iter().map(|&t| (t, class_polytope_for(t).contains(ov.as_slice()))).collect();
    let m_fermion: Vec<(usize, bool)> =
        (1..=3).map(|m| (m, check_m_fermion(ov.as_slice(), 3, 6, m).unwrap_or(false))).collect();

    let mut csv = Table::new(&["quantity", "value"]);
    for (k, l) in ov.as_slice().iter().enumerate() {
        csv.push(vec![format!("lambda{}", k + 1), num(*l)]);
    }
    for (name, v) in [
        ("F_Slater", report.f_slater),
        ("F_EPR", report.f_epr),
        ("F_W", report.f_w),
        ("F1", report.f1),
        ("F2", report.f2),
        ("epsilon", epsilon),
        ("weakened_slack_F1", weakened.slack_f1),
        ("weakened_slack_F2", weakened.slack_f2),
    ] {
        csv.push(vec![name.into(), num(v)]);
    }
    for s in &report.slacks {
        csv.push(vec![format!("slack:{}", s.name), num(s.value)]);
    }
    csv.push(vec!["bd_member".into(), bd_member.to_string()]);
    for (t, inside) in &classes {
        csv.push(vec![format!("in_{t}"), inside.to_string()]);
    }

    let json = json!({
        "source": source,
        "lambda": ov,
        "merits": report,
        "bd_member": bd_member,
        "weakened": weakened,
        "classes": classes.iter().map(|(t, b)| (t.to_string(), *b)).collect::<std::collections::BTreeMap<_, _>>(),
        "m_fermion": m_fermion.iter().map(|(m, b)| (m.to_string(), *b)).collect::<std::collections::BTreeMap<_, _>>(),
    });
    Ok(Output { json, csv })
}

fn functional(p: &Params) -> Result<Output> {
    let targets = match &p.polytope {
        Some(label) => vec![label.parse::<Target>()?],
        None => Target::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    let mut csv = Table::new(&["polytope", "E", "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "lambda6"]);
    for t in targets {
        let spec = class_polytope_for(t);
        let r = FunctionalReport::new(&spec, &quantum_functional(&spec)?);
        let mut row = vec![r.polytope.clone(), num(r.e)];
        row.extend(num_list(&r.argmax));
        csv.push(row);
        reports.push(r);
    }
    Ok(Output { json: json!(reports), csv })
}

fn noisy(p: &Params) -> Result<Output> {
    let target = p.target_or(Target::Ghz)?;
    let protocol = with_default_durations(&build_protocol(target));
    let params = p.noise(NoiseParams::device_4k());
    let mut opts = EvolutionOptions::new(p.dt.map_or_else(|| max_step(&protocol), Ok)?);
    opts.hold = p.hold.unwrap_or(0.0);
    if let Some(e) = p.epsilon {
        opts.margin = e;
    }
    let (traj, rho) = evolve_noisy_protocol_with(&Target::Slater.state(), &protocol, &params, &opts)?;

    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("ascii csv");
    let mut lines = text.lines();
    let columns: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let mut csv = Table::new(&columns);
    for line in lines {
        csv.push(line.split(',').map(str::to_string).collect());
    }

    let final_fidelity = rho.fidelity(&apply_protocol(&Target::Slater.state(), &protocol)?)?;
    let json = json!({
        "target": target,
        "noise": params,
        "dt": opts.dt,
        "final_fidelity": final_fidelity,
        "final_purity": rho.purity(),
        "margin_held": traj.margin_ok.iter().all(|&ok| ok),
        "weakened": weakened_from_state(&rho)?,
        "trajectory": traj,
    });
    Ok(Output { json, csv })
}

fn echo(p: &Params) -> Result<Output> {
    let targets = match &p.target {
        Some(t) => vec![t.parse::<Target>()?],
        None => vec![Target::Epr, Target::W, Target::Ghz],
    };
    let params = p.noise(NoiseParams::device_4k());
    let mut csv = Table::new(&["target", "echo_fidelity", "echo_purity", "purity_lower_bound", "forward_purity"]);
    let mut rows = Vec::new();
    for t in targets {
        let protocol = with_default_durations(&build_protocol(t));
        if protocol.gates.is_empty() {
            return Err(Error::InvalidInput(format!("{t} has no gates to echo")));
        }
        let dt = p.dt.map_or_else(|| max_step(&protocol), Ok)?;
        let e = loschmidt_echo_with(&protocol, &params, dt)?;
        let bound = purity_lower_bound(&e.state, &default_pairs(6))?;
        let (fp, ep) = (e.forward.purity(), e.state.purity());
        csv.push(vec![t.to_string(), num(e.fidelity), num(ep), num(bound), num(fp)]);
        rows.push(json!({
            "target": t,
            "echo_fidelity": e.fidelity,
            "echo_purity": ep,
            "purity_lower_bound": bound,
            "forward_purity": fp,
        }));
    }
    Ok(Output { json: json!({ "noise": params, "runs": rows }), csv })
}

fn montecarlo(p: &Params, seed: u64) -> Result<Output> {
    let base: Target = p.base.as_deref().unwrap_or("epr").parse()?;
    let merit: Merit = match &p.merit {
        Some(m) => m.parse()?,
        None => match base {
            Target::Epr => Merit::FSlater,
            Target::W => Merit::FEpr,
            Target::Ghz => Merit::FW,
            Target::Slater => return Err(Error::InvalidInput("slater base needs an explicit --merit".into())),
        },
    };
    let confidence = p.confidence.unwrap_or(crate::montecarlo::DEFAULT_CONFIDENCE);
    let samples = p.samples.unwrap_or(crate::montecarlo::DEFAULT_SAMPLES);
    let summary = max_tolerated_sigma(base, merit, confidence, samples, seed)?;
    let spec = PerturbationSpec { base, sigma: summary.sigma_star, n_samples: samples, seed };
    let values = merit_distribution(&spec, merit)?;
    let hist = histogram(&values, p.bins.unwrap_or(100))?;

    let mut csv = Table::new(&["F", "count"]);
    for (k, c) in hist.counts.iter().enumerate() {
        csv.push(vec![num(0.5 * (hist.edges[k] + hist.edges[k + 1])), c.to_string()]);
    }
    Ok(Output { json: json!({ "summary": summary, "histogram": hist }), csv })
}

fn load_config(path: &PathBuf) -> Result<Params> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| Error::InvalidInput(format!("{THREADS_ENV}={v} is not a count")))?;
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses arguments, runs the command and writes the output. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_parsed(cli: Cli) -> Result<()> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => Params::default(),
    };
    let cfg = RunConfig { command: cli.command, params: cli.params.or(file) };
    let text = execute(&cfg)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
