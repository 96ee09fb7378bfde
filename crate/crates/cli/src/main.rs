use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;

use stabsim_core::circuit::{self, ensemble_generate, layerize_with, stats, Circuit, Family, FusePolicy};
use stabsim_core::cost::{self, predicted_cost, CostQuery, SupremacyCensus, METHODS};
use stabsim_core::decomposition::{search_decomposition, target_matrix, verify_decomposition, Database};
use stabsim_core::engines::{self, CutPlan, EngineOptions, ExecutionTrace};
use stabsim_core::StabError;

#[derive(Parser)]
#[command(name = "stabsim", version, about = "Stabilizer projector simulation of quantum circuit amplitudes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute <x|U|0^n> for a circuit file.
    Simulate(SimulateArgs),
    /// Inspect, verify or search stabilizer projector decompositions.
    #[command(subcommand)]
    Decomp(DecompCmd),
    /// Generate a random circuit from one of the ensembles.
    Gen(GenArgs),
    /// Cost model queries.
    #[command(subcommand)]
    Cost(CostCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dense,
    Spir,
    Spc,
    SpcSoc,
    Cut,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Dense => "dense",
            MethodArg::Spir => "spir",
            MethodArg::Spc => "spc",
            MethodArg::SpcSoc => "spc-soc",
            MethodArg::Cut => "cut",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    circuit: PathBuf,
    #[arg(long, value_enum, default_value = "spc")]
    method: MethodArg,
    /// Output bitstring; character q is qubit q. Defaults to all zeros.
    #[arg(long)]
    x: Option<String>,
    /// Recorded in the report; every engine is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Largest number of live SPC terms.
    #[arg(long)]
    mem_cap: Option<usize>,
    /// Stop SPIR after this many inner products.
    #[arg(long)]
    max_inner_products: Option<u64>,
    /// Drop SPC terms with |coefficient| below 1e-12.
    #[arg(long)]
    prune: bool,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check against the dense simulator; exit 4 if the error exceeds it.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum DecompCmd {
    /// List the terms of a database entry.
    Show { gate: String },
    /// Rebuild an entry densely and compare with its gate matrix.
    Verify {
        gate: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Search for a decomposition of a gate or of a matrix read from a file.
    Search {
        /// Gate name with a known matrix.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        gate: Option<String>,
        /// One matrix row per line, entries as `re,im` separated by spaces.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        max_rank: usize,
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct GenArgs {
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    cycles: usize,
    /// Probability of a T gate per qubit and cycle (cz and cs only).
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CostCmd {
    /// Predicted log2 cost of every method for a circuit file.
    Estimate {
        circuit: PathBuf,
        /// Cut gate count for the hybrid method.
        #[arg(long)]
        x: Option<usize>,
    },
    /// Threshold T probabilities as CSV.
    Thresholds {
        #[arg(long, default_value_t = 2)]
        from: u64,
        #[arg(long, default_value_t = 40)]
        to: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest d_nc from which SPIR beats stabilizer rank.
    Crossover { family: String, p: f64 },
    /// log2 projector rank of one supremacy cycle.
    Supremacy {
        #[arg(long, default_value_t = SupremacyCensus::AVERAGE.fsim_w)]
        fsim_w: u64,
        #[arg(long, default_value_t = SupremacyCensus::AVERAGE.fsim)]
        fsim: u64,
        #[arg(long, default_value_t = SupremacyCensus::AVERAGE.fsim_ww)]
        fsim_ww: u64,
        #[arg(long, default_value_t = SupremacyCensus::AVERAGE.w_pair)]
        w_pair: u64,
        #[arg(long, default_value_t = SupremacyCensus::AVERAGE.w_single)]
        w_single: u64,
        /// Qubit count for the per-qubit exponents.
        #[arg(long, default_value_t = 53)]
        n: usize,
    },
}

/// Failure with its exit status.
struct Fail(u8, String);

impl From<StabError> for Fail {
    fn from(e: StabError) -> Self {
        let code = match &e {
            StabError::Capacity { .. } | StabError::Budget { .. } => 3,
            StabError::Verification { .. } | StabError::InvalidState(_) | StabError::NonHermitian(_) => 4,
            _ => 2,
        };
        Fail(code, e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

/// `x` rounded to `digits` significant digits in fixed notation.
fn sig(x: f64, digits: i32) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (digits - 1 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| Fail(2, format!("{}: {e}", path.display())))
}

fn load_db() -> Res<Database> {
    match std::env::var_os("STABSIM_DB") {
        Some(p) => Database::load_file(Path::new(&p)).map_err(|e| match e {
            StabError::Io(m) => Fail(2, m),
            StabError::Verification { .. } => Fail::from(e),
            other => Fail(4, other.to_string()),
        }),
        None => Ok(Database::builtin().clone()),
    }
}

fn load_circuit(path: &Path) -> Res<Circuit> {
    Ok(circuit::parse(&read(path)?)?)
}

fn family(s: &str) -> Res<Family> {
    s.parse::<Family>().map_err(|_| Fail(2, format!("unknown family '{s}' (cz, cs, supremacy_like)")))
}

fn simulate(a: SimulateArgs) -> Res<String> {
    let circ = load_circuit(&a.circuit)?;
    let x = a.x.clone().unwrap_or_else(|| "0".repeat(circ.n));
    if x.len() != circ.n {
        return Err(Fail(2, format!("bitstring '{x}' has length {}, circuit has {} qubits", x.len(), circ.n)));
    }
    if a.threads == 0 {
        return Err(Fail(2, "--threads must be at least 1".into()));
    }
    let opts = EngineOptions {
        threads: a.threads,
        mem_cap: a.mem_cap,
        prune: a.prune,
        max_inner_products: a.max_inner_products,
        ..EngineOptions::default()
    };
    let db = load_db()?;
    let layered = layerize_with(&circ, FusePolicy::Composite, &db)?;
    let st = stats(&layered);
    let (amp, trace): (C, ExecutionTrace) = match a.method {
        MethodArg::Dense => {
            let start = std::time::Instant::now();
            let v = engines::amplitude_dense(&circ, &x)?;
            let trace = ExecutionTrace {
                wall_time: start.elapsed(),
                ..ExecutionTrace::default()
            };
            (v, trace)
        }
        MethodArg::Spir => engines::amplitude_spir(&layered, &x, &opts)?,
        MethodArg::Spc => engines::amplitude_spc(&layered, &x, &opts)?,
        MethodArg::SpcSoc => engines::amplitude_spc_soc(&layered, &x, &opts)?,
        MethodArg::Cut => {
            let plan = CutPlan::best_contiguous(&circ)
                .ok_or_else(|| Fail(2, "no contiguous cut whose crossing gates are all cz".into()))?;
            engines::amplitude_cut_hybrid_with(&circ, &plan, &x, &opts, &db)?
        }
    };

    let mut r = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(r, "{k}: {v}");
    };
    kv("method", a.method.name().into());
    kv("n", circ.n.to_string());
    kv("x", x.clone());
    kv("seed", a.seed.to_string());
    kv("threads", a.threads.to_string());
    kv("d_nc", st.d_nc.to_string());
    kv("kappa_log2", st.kappa_log2.iter().map(|k| sig(*k, 6)).collect::<Vec<_>>().join(","));
    kv("amplitude_real", sig(amp.re, 12));
    kv("amplitude_imag", sig(amp.im, 12));
    kv("amplitude_bits", format!("{:016x} {:016x}", amp.re.to_bits(), amp.im.to_bits()));
    kv("probability", sig(amp.norm_sqr(), 12));
    kv("inner_products", trace.inner_product_count.to_string());
    kv("live_terms_peak", trace.max_live_terms.to_string());
    if trace.configurations > 0 {
        kv("configurations", trace.configurations.to_string());
    }
    if let Some(l) = trace.switch_layer {
        kv("soc_switch_layer", l.to_string());
    }
    kv("wall_time_s", format!("{:.6}", trace.wall_time.as_secs_f64()));
    let mut failed = None;
    if let Some(tol) = a.tol {
        let d = engines::amplitude_dense(&circ, &x)?;
        let err = (d - amp).norm();
        kv("dense_real", sig(d.re, 12));
        kv("dense_imag", sig(d.im, 12));
        kv("abs_error", format!("{err:.3e}"));
        kv("check", if err <= tol { "pass" } else { "fail" }.into());
        if err > tol {
            failed = Some(format!("amplitude differs from dense by {err:.3e} > {tol:e}"));
        }
    }
    if let Some(out) = &a.out {
        write(out, &r)?;
    }
    match failed {
        Some(m) => {
            print!("{r}");
            Err(Fail(4, m))
        }
        None => Ok(r),
    }
}

fn parse_matrix(text: &str) -> Res<stabsim_core::dense::CMatrix> {
    let bad = |m: String| Fail(2, format!("matrix file: {m}"));
    let mut rows: Vec<Vec<C>> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let row = line
            .split_whitespace()
            .map(|e| {
                let (re, im) = e.split_once(',').unwrap_or((e, "0"));
                Ok(C::new(
                    re.parse().map_err(|_| bad(format!("bad entry '{e}'")))?,
                    im.parse().map_err(|_| bad(format!("bad entry '{e}'")))?,
                ))
            })
            .collect::<Res<Vec<C>>>()?;
        rows.push(row);
    }
    let d = rows.len();
    if d == 0 || !d.is_power_of_two() || rows.iter().any(|r| r.len() != d) {
        return Err(bad("expected a square 2^k x 2^k matrix".into()));
    }
    let mut m = stabsim_core::dense::CMatrix::zeros(d, d);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            m.data[i * d + j] = *v;
        }
    }
    Ok(m)
}

fn decomp(cmd: DecompCmd) -> Res<String> {
    let db = load_db()?;
    let mut r = String::new();
    match cmd {
        DecompCmd::Show { gate } => {
            let d = db.get(&gate)?;
            let _ = writeln!(r, "gate: {}", d.name);
            let _ = writeln!(r, "arity: {}", d.arity);
            let _ = writeln!(r, "kappa: {}", d.rank());
            let _ = writeln!(r, "source: {}", d.source);
            for (i, t) in d.terms.iter().enumerate() {
                let gens: Vec<String> = t.state.generators().iter().map(|g| g.to_string()).collect();
                let _ = writeln!(
                    r,
                    "term {i}: {} {} | {} @ {}",
                    sig(t.coefficient.re, 12),
                    sig(t.coefficient.im, 12),
                    gens.join(" "),
                    stabsim_core::stabilizer::format_bitstring(t.state.pivot(), d.arity)
                );
            }
        }
        DecompCmd::Verify { gate, tol } => {
            let d = db.get(&gate)?;
            let target = target_matrix(&d.name).ok_or_else(|| Fail(2, format!("no matrix for '{gate}'")))?;
            let rep = verify_decomposition(&d, &target, tol)?;
            let _ = writeln!(r, "gate: {}", d.name);
            let _ = writeln!(r, "kappa: {}", rep.kappa);
            let _ = writeln!(r, "max_error: {:.3e}", rep.max_error);
            let _ = writeln!(r, "result: {}", if rep.pass { "pass" } else { "fail" });
            if !rep.pass {
                print!("{r}");
                return Err(Fail(4, format!("{} fails verification", d.name)));
            }
        }
        DecompCmd::Search { gate, matrix, max_rank, budget, seed } => {
            let target = match (&gate, &matrix) {
                (Some(g), _) => target_matrix(g).ok_or_else(|| Fail(2, format!("unknown gate '{g}'")))?,
                (None, Some(p)) => parse_matrix(&read(p)?)?,
                (None, None) => return Err(Fail(2, "give --gate or --matrix".into())),
            };
            match search_decomposition(&target, max_rank, budget, seed)? {
                Some(mut d) => {
                    if let Some(g) = gate {
                        d.name = g;
                    }
                    let _ = writeln!(r, "result: found");
                    let _ = writeln!(r, "kappa: {}", d.rank());
                    r.push_str(&d.to_db_block());
                }
                None => {
                    let _ = writeln!(r, "result: none-found");
                    let _ = writeln!(r, "max_rank: {max_rank}");
                }
            }
        }
    }
    Ok(r)
}

fn gen(a: GenArgs) -> Res<String> {
    let fam = family(&a.family)?;
    let circ = ensemble_generate(fam, a.n, a.cycles, a.p, a.seed)?;
    let text = circuit::serialize(&circ);
    match &a.out {
        Some(p) => {
            write(p, &text)?;
            Ok(format!("wrote: {}\ngates: {}\nt_count: {}\n", p.display(), circ.gates.len(), circ.t_count()))
        }
        None => Ok(text),
    }
}

fn cost_cmd(cmd: CostCmd) -> Res<String> {
    let mut r = String::new();
    match cmd {
        CostCmd::Estimate { circuit, x } => {
            let circ = load_circuit(&circuit)?;
            let db = load_db()?;
            let st = stats(&layerize_with(&circ, FusePolicy::Composite, &db)?);
            let mut q = CostQuery::from_stats(&st);
            q.x = x.or_else(|| CutPlan::best_contiguous(&circ).map(|p| p.cut_count()));
            let _ = writeln!(r, "n: {}\nm: {}\nd: {}\nd_nc: {}\nt: {}", st.n, st.m, st.d, st.d_nc, st.t);
            let _ = writeln!(r, "log2_spir_inner_products: {}", sig(st.log2_spir_cost, 6));
            let _ = writeln!(r, "log2_spc_inner_products: {}", sig(st.log2_spc_cost, 6));
            for m in METHODS {
                match predicted_cost(m, &q) {
                    Ok(c) => {
                        let _ = writeln!(r, "{m}_log2_time: {}", sig(c.log2_time, 6));
                        let _ = writeln!(r, "{m}_log2_space: {}", sig(c.log2_space, 6));
                    }
                    Err(_) => {
                        let _ = writeln!(r, "{m}_log2_time: n/a");
                    }
                }
            }
        }
        CostCmd::Thresholds { from, to, out } => {
            let mut buf = Vec::new();
            cost::emit_threshold_csv(from..=to, &mut buf)?;
            let csv = String::from_utf8(buf).expect("csv output is utf-8");
            match out {
                Some(p) => {
                    write(&p, &csv)?;
                    let _ = writeln!(r, "wrote: {}", p.display());
                }
                None => r = csv,
            }
        }
        CostCmd::Crossover { family: f, p } => {
            let fam = family(&f)?;
            match cost::crossover_dnc(fam, p)? {
                Some(d) => r = format!("{d}\n"),
                None => r = "none\n".into(),
            }
        }
        CostCmd::Supremacy { fsim_w, fsim, fsim_ww, w_pair, w_single, n } => {
            let census = SupremacyCensus { fsim_w, fsim, fsim_ww, w_pair, w_single };
            let k = cost::supremacy_cycle_rank(&census);
            let q = CostQuery {
                n,
                d: Some(40),
                d_nc: Some(20),
                k: Some(k),
                ..CostQuery::default()
            };
            let spir = predicted_cost(cost::Method::Spir, &q)?;
            let rp = predicted_cost(cost::Method::RecursivePath, &q)?;
            let _ = writeln!(r, "log2_kappa: {}", sig(k, 6));
            let _ = writeln!(r, "spir_exponent_per_qubit: {}", sig(spir.exponent() / n as f64, 6));
            let _ = writeln!(r, "recursive_path_exponent_per_qubit: {}", sig(rp.exponent() / n as f64, 6));
        }
    }
    Ok(r)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let out = match cli.cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Decomp(c) => decomp(c),
        Cmd::Gen(a) => gen(a),
        Cmd::Cost(c) => cost_cmd(c),
    };
    match out {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
