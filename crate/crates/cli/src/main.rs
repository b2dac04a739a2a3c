//! `hypersteiner`: exact component LP, contraction algorithm, BCR conversion and property suites.

mod bench;
mod verify;

use std::collections::HashSet;
use std::fs;
use std::io::{self, Read};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use hypersteiner::bcr::{is_preprocessed, natural_decomposition, preprocess_quasi, solve_bcr};
use hypersteiner::blowup::BlowupGraph;
use hypersteiner::components::enumerate_components;
use hypersteiner::contract::{run, RunOptions};
use hypersteiner::hyperlp::{solve_lp_with, FractionalSolution, LpMode, LpOptions};
use hypersteiner::instance::{parse_stp, SteinerInstance};
use hypersteiner::partition::{decompose, SetFunction, SetFunctionTable};
use hypersteiner::rational::{decimal, lcm_of_denominators, ln4_surrogate, quasi_bound, RationalJson};
use hypersteiner::sepflow::separate_without;
use hypersteiner::splitting::{choose_splitting_set, Strategy};
use hypersteiner::util::bits;
use hypersteiner::{Error, Rational};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hypersteiner", version, about = "Hypergraphic LP machinery for Steiner tree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Dp,
    Random,
    Quasi,
}

impl StrategyArg {
    pub fn resolve(self, seed: u64) -> Strategy {
        match self {
            StrategyArg::Dp => Strategy::Dp,
            StrategyArg::Random => Strategy::Random(seed),
            StrategyArg::Quasi => Strategy::Quasi,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Full,
    Cuts,
}

/// A single seed `n` or a half-open range `a..b`.
#[derive(Clone, Debug)]
pub struct Seeds(pub std::ops::Range<u64>);

impl FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}"));
        match s.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a >= b {
                    return Err(format!("empty seed range {s}"));
                }
                Ok(Seeds(a..b))
            }
            None => {
                let a = num(s)?;
                Ok(Seeds(a..a + 1))
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the component LP exactly.
    Lp {
        /// STP file, or `-` for stdin.
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "cuts")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Run the contraction algorithm and print its certificate.
    Run {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "dp")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "cuts")]
        mode: ModeArg,
        /// Re-verify every invariant per iteration.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        json: bool,
    },
    /// Solve the bidirected cut relaxation of a quasi-bipartite instance.
    Bcr {
        file: PathBuf,
        /// Root terminal vertex; defaults to the first terminal.
        #[arg(long)]
        root: Option<usize>,
        /// Convert the optimum into a component LP solution.
        #[arg(long)]
        decompose: bool,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        json: bool,
    },
    /// Choose a splitting set on the blowup graph of the LP optimum and report Φ/cost.
    Split {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "dp")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Separate the blowup graph of the LP optimum, optionally with edges removed.
    Separate {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated blowup edge ids to remove first.
        #[arg(long, value_delimiter = ',')]
        remove: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Decompose an intersecting-submodular set function into partition functions.
    Decompose {
        /// JSON file {"n": .., "values": ["1/2", ..]} indexed by subset bitmask.
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run a seeded property suite.
    Verify {
        #[arg(value_enum)]
        suite: verify::Suite,
        /// Seed `n` or range `a..b`.
        #[arg(long, default_value = "0..20")]
        seed: Seeds,
        #[arg(long)]
        json: bool,
    },
    /// Run seeded random instances and emit a results table.
    Bench(bench::BenchArgs),
}

/// Errors split into usage problems (exit 2) and everything else (exit 1).
pub enum Failure {
    Usage(String),
    Violated(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidArgument(_) | Error::InvalidInstance(_) | Error::TooLarge(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Violated(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_input(path: &PathBuf) -> CliResult<Vec<u8>> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_instance(path: &PathBuf) -> CliResult<SteinerInstance> {
    Ok(parse_stp(&read_input(path)?)?)
}

pub fn rat(r: &Rational) -> Value {
    serde_json::to_value(RationalJson::from(r)).unwrap()
}

fn show(r: &Rational) -> String {
    format!("{r} ({})", decimal(r, 6))
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).unwrap());
}

fn lp_options(mode: ModeArg) -> LpOptions {
    LpOptions {
        mode: match mode {
            ModeArg::Full => LpMode::FullEnumeration,
            ModeArg::Cuts => LpMode::CuttingPlane,
        },
        ..LpOptions::default()
    }
}

fn solve(inst: &SteinerInstance, k: Option<usize>, mode: ModeArg) -> CliResult<FractionalSolution> {
    let r = inst.terminals().len();
    let k = k.unwrap_or(r).min(r.max(2));
    let comps = enumerate_components(inst, k)?;
    Ok(solve_lp_with(&comps, r, &lp_options(mode))?)
}

fn solution_json(inst: &SteinerInstance, x: &FractionalSolution) -> Value {
    let n = lcm_of_denominators(x.support.iter().map(|(_, v)| v));
    let support: Vec<Value> = x
        .support
        .iter()
        .map(|(c, v)| {
            json!({
                "terminals": c.terminals,
                "edges": c.edges,
                "cost": rat(&c.cost),
                "value": rat(v),
            })
        })
        .collect();
    json!({
        "terminals": inst.terminals(),
        "objective": rat(&x.objective),
        "N": n.to_string(),
        "support": support,
    })
}

fn print_solution_text(x: &FractionalSolution) {
    println!("objective {}", show(&x.objective));
    println!("N {}", lcm_of_denominators(x.support.iter().map(|(_, v)| v)));
    for (c, v) in &x.support {
        println!("  x = {v}  terminals {:?}  edges {:?}  cost {}", c.terminals, c.edges, c.cost);
    }
}

fn cmd_lp(file: &PathBuf, k: Option<usize>, mode: ModeArg, json: bool) -> CliResult<()> {
    let inst = load_instance(file)?;
    let x = solve(&inst, k, mode)?;
    if json {
        emit(&solution_json(&inst, &x));
    } else {
        print_solution_text(&x);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    file: &PathBuf,
    k: Option<usize>,
    strategy: StrategyArg,
    seed: u64,
    mode: ModeArg,
    check: bool,
    json: bool,
) -> CliResult<()> {
    let inst = load_instance(file)?;
    let options = RunOptions {
        k: k.unwrap_or(usize::MAX),
        strategy: strategy.resolve(seed),
        check,
        lp: lp_options(mode),
    };
    let out = run(&inst, &options)?;
    let c = &out.certificate;
    let within = c.tree_cost <= &c.bound * &c.lp_value;
    if json {
        emit(&json!({
            "certificate": c,
            "ratio": c.ratio().as_ref().map(rat),
            "tree": {"edges": out.tree.edges, "cost": rat(&out.tree.cost)},
            "tree_within_bound": within,
        }));
    } else {
        println!("strategy {}  k {}  N {}", c.strategy, c.k, c.n);
        println!("lp {}", show(&c.lp_value));
        println!("potential/N {}", show(&c.potential_over_n));
        println!("tree {}  edges {:?}", show(&c.tree_cost), out.tree.edges);
        if let Some(r) = c.ratio() {
            println!("ratio {}  bound {}", show(&r), show(&c.bound));
        }
        println!("iterations {}", c.iterations.len());
    }
    let random = matches!(options.strategy, Strategy::Random(_));
    if !within || !c.tree_within_potential || (!random && !c.potential_within_bound) {
        return Err(Failure::Violated("certificate bound violated".into()));
    }
    Ok(())
}

fn cmd_bcr(file: &PathBuf, root: Option<usize>, dec: bool, check: bool, json: bool) -> CliResult<()> {
    let mut inst = load_instance(file)?;
    if !inst.is_quasi_bipartite() {
        return Err(Failure::Usage("bcr needs a quasi-bipartite instance".into()));
    }
    if !is_preprocessed(&inst) {
        inst = preprocess_quasi(&inst)?;
    }
    let root = root.unwrap_or(inst.terminals()[0]);
    let sol = solve_bcr(&inst, root)?;
    let decomposition = if dec {
        let x = natural_decomposition(&inst, &sol, check)?;
        if x.objective != sol.objective || !x.is_feasible()? {
            return Err(Failure::Violated("decomposition is not an equal-cost LP solution".into()));
        }
        Some(x)
    } else {
        None
    };
    if json {
        let edges: Vec<Value> = (0..inst.edges().len())
            .filter(|&i| !sol.load(i).eq(&Rational::from_integer(0.into())))
            .map(|i| {
                let e = inst.edge(i);
                json!({"edge": i, "u": e.u, "v": e.v, "forward": rat(&sol.x[2 * i]), "backward": rat(&sol.x[2 * i + 1])})
            })
            .collect();
        let mut out = json!({
            "root": sol.root,
            "objective": rat(&sol.objective),
            "arcs": edges,
            "num_vertices": inst.num_vertices(),
        });
        if let Some(x) = &decomposition {
            out["decomposition"] = solution_json(&inst, x);
        }
        emit(&out);
    } else {
        println!("root {}", sol.root);
        println!("objective {}", show(&sol.objective));
        if let Some(x) = &decomposition {
            print_solution_text(x);
        }
    }
    Ok(())
}

fn blowup(file: &PathBuf, k: Option<usize>) -> CliResult<(SteinerInstance, BlowupGraph)> {
    let inst = load_instance(file)?;
    let x = solve(&inst, k, ModeArg::Cuts)?;
    let g = BlowupGraph::from_solution(&inst, &x)?;
    Ok((inst, g))
}

fn cmd_split(file: &PathBuf, k: Option<usize>, strategy: StrategyArg, seed: u64, json: bool) -> CliResult<()> {
    let (_, g) = blowup(file, k)?;
    let s = choose_splitting_set(&g, strategy.resolve(seed))?;
    let phi = s.potential(&g);
    let cost = g.cost();
    let ratio = if cost == Rational::from_integer(0.into()) {
        Rational::from_integer(0.into())
    } else {
        &phi / &cost
    };
    let bound = if strategy == StrategyArg::Quasi { quasi_bound() } else { ln4_surrogate() };
    if json {
        emit(&json!({
            "N": g.n(),
            "core": s.core,
            "potential": rat(&phi),
            "cost": rat(&cost),
            "ratio": rat(&ratio),
            "bound": rat(&bound),
        }));
    } else {
        println!("N {}  |K| {}", g.n(), s.core.len());
        println!("potential {}", show(&phi));
        println!("cost {}", show(&cost));
        println!("ratio {}  bound {}", show(&ratio), show(&bound));
    }
    if strategy != StrategyArg::Random && ratio > bound {
        return Err(Failure::Violated("Φ/cost exceeds the bound".into()));
    }
    Ok(())
}

fn cmd_separate(file: &PathBuf, k: Option<usize>, remove: &[usize], json: bool) -> CliResult<()> {
    let (_, g) = blowup(file, k)?;
    if let Some(&bad) = remove.iter().find(|&&e| !g.has_edge(e)) {
        return Err(Failure::Usage(format!("no blowup edge {bad}")));
    }
    let removed: HashSet<usize> = remove.iter().copied().collect();
    let report = separate_without(&g, &removed)?;
    let vertices = |mask: u64| -> Vec<usize> { bits(mask).map(|i| g.terminals()[i]).collect() };
    if json {
        let violation = report
            .violation
            .as_ref()
            .map(|v| json!({"set": vertices(v.set), "slack": v.slack}));
        emit(&json!({"N": g.n(), "feasible": report.feasible(), "violation": violation, "full_slack": report.full_slack}));
    } else if let Some(v) = &report.violation {
        println!("violated set {:?} slack {}", vertices(v.set), v.slack);
    } else if report.full_slack != 0 {
        println!("h(R) = {}", report.full_slack);
    } else {
        println!("feasible");
    }
    Ok(())
}

fn cmd_decompose(table: &PathBuf, json: bool) -> CliResult<()> {
    let text = read_input(table)?;
    let table: SetFunctionTable = serde_json::from_slice(&text).map_err(|e| Failure::Usage(format!("table: {e}")))?;
    let h = SetFunction::from_table(&table)?;
    let d = decompose(&h)?;
    if !d.is_coarsening_chain() {
        return Err(Failure::Violated("partitions are not a coarsening chain".into()));
    }
    if json {
        let terms: Vec<Value> = d
            .terms
            .iter()
            .map(|t| json!({"lambda": rat(&t.lambda), "partition": t.partition.iter().map(|&b| bits(b).collect::<Vec<_>>()).collect::<Vec<_>>()}))
            .collect();
        emit(&json!({"terms": terms}));
    } else {
        for t in &d.terms {
            let blocks: Vec<Vec<usize>> = t.partition.iter().map(|&b| bits(b).collect()).collect();
            println!("{}  {:?}", show(&t.lambda), blocks);
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Lp { file, k, mode, json } => cmd_lp(&file, k, mode, json),
        Command::Run {
            file,
            k,
            strategy,
            seed,
            mode,
            check,
            json,
        } => cmd_run(&file, k, strategy, seed, mode, check, json),
        Command::Bcr {
            file,
            root,
            decompose,
            check,
            json,
        } => cmd_bcr(&file, root, decompose, check, json),
        Command::Split {
            file,
            k,
            strategy,
            seed,
            json,
        } => cmd_split(&file, k, strategy, seed, json),
        Command::Separate { file, k, remove, json } => cmd_separate(&file, k, &remove, json),
        Command::Decompose { table, json } => cmd_decompose(&table, json),
        Command::Verify { suite, seed, json } => verify::run_suite(suite, seed.0, json),
        Command::Bench(args) => bench::run_bench(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violated(msg)) => {
            eprintln!("violated: {msg}");
            ExitCode::from(1)
        }
    }
}
