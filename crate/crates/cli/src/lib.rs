//! Seeded batch experiments over the `icvote` library.
//!
//! [`parse_args`] validates a command line into a [`RunConfig`]; [`run`]
//! executes it and writes CSV or JSON with a provenance header.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use icvote::edge_space::EdgeVector;
use icvote::ic_model::{edge_labels, matrices_json, CovarianceModel};
use icvote::probability::{
    estimate_type_table, exact_finite_prob, qualitative_coverage, tournament_prob_exact_3, ProbEstimate,
    EXACT_ENUMERATION_BUDGET,
};
use icvote::sampling::{CltSampler, ExactSampler, MarginRecord};
use icvote::tournaments::Tournament;
use icvote::voting::{condorcet_winner, winning_set_distribution, Method};
use icvote::{CandidateCount, MonteCarloConfig, RngStream};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Σ and Γ as exact and floating-point matrices
    Covariance,
    /// Eigenvalues and eigenspace dimensions of Σ
    Eigen,
    /// Margin graphs, CLT or exact with --voters
    SampleMargins,
    /// Probability of every tournament type (up to 5 candidates)
    TypeProbs,
    /// Closed-form probabilities of the 8 three-candidate tournaments
    ExactOrthant3,
    /// Exact Condorcet-winner probability for small electorates
    ExactTable1,
    /// Distribution of winning-set sizes
    WinningSets,
    /// Histogram of three-candidate qualitative margin graphs
    QualitativeCoverage,
    /// Points on the ellipsoid xᵀΓx = 1
    Levelset,
}

impl Command {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "icvote", version, about = "Random elections under Impartial Culture")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Number of candidates ℓ
    #[arg(long, short = 'c', default_value_t = 3)]
    candidates: usize,
    /// Monte Carlo sample count (or point count for levelset)
    #[arg(long, short = 'n', default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Independent RNG streams; results depend on this value
    #[arg(long)]
    shards: Option<usize>,
    /// Electorate size; must be odd
    #[arg(long)]
    voters: Option<u64>,
    /// minimax or splitcycle
    #[arg(long)]
    method: Option<String>,
    /// Output file; stdout when absent
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub ell: CandidateCount,
    pub samples: u64,
    pub seed: u64,
    pub shards: usize,
    pub voters: Option<u64>,
    pub method: Option<Method>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

/// Invalid command line. `code` is 0 for help and version requests.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
    pub code: u8,
}

impl UsageError {
    fn flag(flag: &str, msg: impl std::fmt::Display) -> Self {
        Self { message: format!("error: invalid value for {flag}: {msg}"), code: 1 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Library(#[from] icvote::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn default_shards() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
            _ => 1,
        };
        UsageError { message: e.render().to_string(), code }
    })?;
    let ell = CandidateCount::new(cli.candidates).map_err(|e| UsageError::flag("--candidates", e))?;
    if cli.samples == 0 {
        return Err(UsageError::flag("--samples", "must be at least 1"));
    }
    let shards = cli.shards.unwrap_or_else(default_shards);
    if shards == 0 {
        return Err(UsageError::flag("--shards", "must be at least 1"));
    }
    if let Some(n) = cli.voters {
        if n.is_multiple_of(2) {
            return Err(UsageError::flag("--voters", format!("voters must be odd, got {n}")));
        }
    }
    let method = cli
        .method
        .as_deref()
        .map(str::parse::<Method>)
        .transpose()
        .map_err(|e| UsageError::flag("--method", e))?;
    Ok(RunConfig {
        command: cli.command,
        ell,
        samples: cli.samples,
        seed: cli.seed,
        shards,
        voters: cli.voters,
        method,
        output: cli.output,
        format: cli.format,
    })
}

impl RunConfig {
    fn mc(&self) -> MonteCarloConfig {
        MonteCarloConfig::new(self.seed, self.shards).expect("validated shard count")
    }

    fn metadata(&self) -> Value {
        json!({
            "command": self.command.name(),
            "version": VERSION,
            "ell": self.ell.get(),
            "samples": self.samples,
            "seed": self.seed,
            "shards": self.shards,
            "voters": self.voters,
            "method": self.method.map(|m| m.to_string()),
        })
    }

    fn csv_header(&self) -> String {
        let mut s = format!("# icvote {VERSION}\n# command={}", self.command.name());
        write!(s, " ell={} samples={} seed={} shards={}", self.ell, self.samples, self.seed, self.shards)
            .expect("string write");
        if let Some(v) = self.voters {
            write!(s, " voters={v}").expect("string write");
        }
        if let Some(m) = self.method {
            write!(s, " method={m}").expect("string write");
        }
        s.push('\n');
        s
    }
}

/// Tabular output: CSV with a comment header, or one JSON document.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        self.rows.push(row);
    }

    fn render(&self, config: &RunConfig, extra: Option<Value>) -> Result<Vec<u8>, RunError> {
        match config.format {
            Format::Csv => {
                let mut out = config.csv_header().into_bytes();
                {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(&self.columns)?;
                    for r in &self.rows {
                        w.write_record(r.iter().map(cell))?;
                    }
                    w.flush()?;
                }
                Ok(out)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                let mut doc = json!({ "metadata": config.metadata(), "rows": rows });
                if let Some(extra) = extra {
                    doc["summary"] = extra;
                }
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn estimate_cells(e: &ProbEstimate) -> [Value; 2] {
    [json!(e.p_hat), json!(e.std_err)]
}

fn covariance(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let doc = matrices_json(config.ell);
    match config.format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&json!({ "metadata": config.metadata(), "matrices": doc }))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let labels = edge_labels(config.ell);
            let mut t = Table::new(&["matrix", "row", "col", "exact", "value"]);
            for name in ["sigma", "gamma"] {
                for (r, row_label) in labels.iter().enumerate() {
                    for (c, col_label) in labels.iter().enumerate() {
                        t.push(vec![
                            json!(name),
                            json!(row_label),
                            json!(col_label),
                            doc[name]["exact"][r][c].clone(),
                            doc[name]["float"][r][c].clone(),
                        ]);
                    }
                }
            }
            t.render(config, None)
        }
    }
}

fn eigen(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let m = CovarianceModel::<f64>::new(config.ell);
    let e = m.eigen();
    let n = config.ell.get();
    let mut t = Table::new(&["space", "eigenvalue_exact", "eigenvalue", "dimension"]);
    t.push(vec![json!("cycle"), json!("1/3"), json!(e.lambda_cycle), json!(e.dim_cycle)]);
    t.push(vec![json!("cut"), json!(icvote::Rational64::new(n as i64 + 1, 3).to_string()), json!(e.lambda_cut), json!(e.dim_cut)]);
    t.render(config, Some(json!({ "log_det_sigma": m.log_det_sigma() })))
}

fn sample_margins(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let mut records = Vec::with_capacity(config.samples as usize);
    match config.voters {
        Some(n) => {
            let template = ExactSampler::new(config.ell, n)?;
            for (stream, count) in config.mc().plan(config.samples) {
                let mut rng = RngStream::new(config.seed, stream);
                let mut s = template.clone();
                records.extend((0..count).map(|_| MarginRecord::from(&s.sample(&mut rng))));
            }
        }
        None => {
            let sampler = CltSampler::new(CovarianceModel::<f64>::new(config.ell));
            for (stream, count) in config.mc().plan(config.samples) {
                let mut rng = RngStream::new(config.seed, stream);
                let mut s = sampler.clone();
                records.extend((0..count).map(|_| MarginRecord::from(&s.sample(&mut rng))));
            }
        }
    }
    let mut out = Vec::new();
    match config.format {
        Format::Json => {
            serde_json::to_writer(&mut out, &json!({ "metadata": config.metadata() }))?;
            out.push(b'\n');
            for r in &records {
                out.extend_from_slice(r.to_json_line().as_bytes());
                out.push(b'\n');
            }
        }
        Format::Csv => {
            let mut columns = vec!["voters".to_string()];
            columns.extend(edge_labels(config.ell));
            out.extend_from_slice(config.csv_header().as_bytes());
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&columns)?;
            for r in &records {
                let value = serde_json::to_value(r)?;
                let mut row = vec![r.voters.map(|v| v.to_string()).unwrap_or_default()];
                row.extend(value["coords"].as_array().into_iter().flatten().map(cell));
                w.write_record(&row)?;
            }
            w.flush()?;
            drop(w);
        }
    }
    Ok(out)
}

fn type_probs(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let model = CovarianceModel::<f64>::new(config.ell);
    let table = estimate_type_table(&model, config.samples, config.mc())?;
    let mut t = Table::new(&[
        "type_id",
        "score_sequence",
        "linearity",
        "num_labelings",
        "labeled_prob",
        "labeled_se",
        "type_prob",
        "type_se",
    ]);
    for r in &table.rows {
        let scores = r.ty.score_sequence.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let [lp, lse] = estimate_cells(&r.labeled_prob);
        let [tp, tse] = estimate_cells(&r.type_prob);
        t.push(vec![json!(r.ty.id), json!(scores), json!(r.ty.linearity), json!(r.ty.labelings), lp, lse, tp, tse]);
    }
    let cw = table.condorcet_winner();
    t.render(
        config,
        Some(json!({ "condorcet_winner": cw.p_hat, "condorcet_winner_se": cw.std_err, "ties": table.ties })),
    )
}

fn exact_orthant3(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let ell = CandidateCount::new(3)?;
    let mut t = Table::new(&["bits", "kind", "probability", "std_err"]);
    for code in 0..8 {
        let tr = Tournament::from_code(ell, code)?;
        let kind = if tr.condorcet_winner().is_some() { "linear" } else { "cycle" };
        t.push(vec![json!(tr.to_bit_string()), json!(kind), json!(tournament_prob_exact_3(&tr)?), json!(0.0)]);
    }
    t.render(config, None)
}

fn exact_table1(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let cells: Vec<u64> = match config.voters {
        Some(n) => vec![n],
        None => (1..=15).step_by(2).collect(),
    };
    let mut t = Table::new(&["ell", "voters", "exact", "probability", "std_err"]);
    for n in cells {
        let p = match exact_finite_prob(config.ell, n, |g| condorcet_winner(g.margins()).is_some()) {
            Ok(p) => p,
            // Without an explicit --voters, stop at the first cell past the budget.
            Err(icvote::Error::Unsupported(_)) if config.voters.is_none() && !t.rows.is_empty() => break,
            Err(e) => return Err(e.into()),
        };
        t.push(vec![
            json!(config.ell.get()),
            json!(n),
            json!(p.to_string()),
            json!(p.to_f64().unwrap_or(f64::NAN)),
            json!(0.0),
        ]);
    }
    t.render(config, Some(json!({ "budget": EXACT_ENUMERATION_BUDGET.to_string() })))
}

fn winning_sets(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let method = config.method.unwrap_or(Method::SplitCycle);
    let model = CovarianceModel::<f64>::new(config.ell);
    let h = winning_set_distribution(method, &model, config.samples, config.mc())?;
    let mut t = Table::new(&["method", "ell", "set_size", "count", "fraction", "std_err"]);
    for r in h.rows() {
        t.push(vec![
            json!(r.method),
            json!(r.ell),
            json!(r.set_size),
            json!(r.count),
            json!(r.fraction),
            json!(r.std_err),
        ]);
    }
    t.render(config, None)
}

fn coverage(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    if config.ell.get() != 3 {
        return Err(icvote::Error::Unsupported(format!(
            "unsupported size: qualitative coverage is tabulated for 3 candidates, got {}",
            config.ell
        ))
        .into());
    }
    let model = CovarianceModel::<f64>::new(config.ell);
    let cov = qualitative_coverage(&model, config.samples, config.mc())?;
    let mut t = Table::new(&["tournament", "edges_weakest_first", "count", "fraction", "std_err"]);
    for q in cov.counts.keys() {
        let edges =
            q.edges_by_strength().iter().map(|(a, b)| format!("{a}>{b}")).collect::<Vec<_>>().join(" ");
        let e = cov.estimate(q);
        let [p, se] = estimate_cells(&e);
        t.push(vec![json!(q.tournament().to_bit_string()), json!(edges), json!(cov.count(q)), p, se]);
    }
    t.render(
        config,
        Some(json!({
            "observed": cov.observed(),
            "possible": cov.possible().to_string(),
            "ties": cov.ties,
        })),
    )
}

/// Unit directions: a Fibonacci lattice on the sphere for three candidates,
/// seeded Gaussian directions otherwise.
fn levelset(config: &RunConfig) -> Result<Vec<u8>, RunError> {
    let model = CovarianceModel::<f64>::new(config.ell);
    let m = config.ell.num_edges();
    let count = config.samples;
    let mut rng = RngStream::new(config.seed, 0);
    let mut columns = vec!["point".to_string()];
    columns.extend(edge_labels(config.ell));
    let mut t = Table { columns, rows: Vec::with_capacity(count as usize) };
    let golden = PI * (3.0 - 5f64.sqrt());
    for k in 0..count {
        let dir: Vec<f64> = if m == 3 {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        } else {
            (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let x = EdgeVector::from_coords(config.ell, dir)?;
        let q = model.quadratic_form(&x)?;
        let scale = 1.0 / q.sqrt();
        let mut row = vec![json!(k)];
        row.extend(x.coords().iter().map(|v| json!(v * scale)));
        t.push(row);
    }
    t.render(config, None)
}

/// Runs `config`, writing to its output path or to `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), RunError> {
    let bytes = match config.command {
        Command::Covariance => covariance(config)?,
        Command::Eigen => eigen(config)?,
        Command::SampleMargins => sample_margins(config)?,
        Command::TypeProbs => type_probs(config)?,
        Command::ExactOrthant3 => exact_orthant3(config)?,
        Command::ExactTable1 => exact_table1(config)?,
        Command::WinningSets => winning_sets(config)?,
        Command::QualitativeCoverage => coverage(config)?,
        Command::Levelset => levelset(config)?,
    };
    match &config.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
