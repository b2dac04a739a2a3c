//! Seeded instance batches.

use std::time::Instant;

use clap::{Args, ValueEnum};
use hypersteiner::contract::{run, RunOptions};
use hypersteiner::instance::generate_random;
use hypersteiner::rational::{decimal, parse_rational};
use serde_json::{json, Value};

use crate::{emit, rat, CliResult, Failure, Seeds, StrategyArg};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Seed `n` or range `a..b`; one instance per seed.
    #[arg(long, default_value = "0..20")]
    seed: Seeds,
    #[arg(long, default_value_t = 5)]
    terminals: usize,
    #[arg(long, default_value_t = 4)]
    steiner: usize,
    /// Edge density in [0, 1], as a rational.
    #[arg(long, default_value = "1/3")]
    density: String,
    /// Generate quasi-bipartite instances.
    #[arg(long)]
    quasi: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "dp")]
    strategy: StrategyArg,
    #[arg(long)]
    check: bool,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Omit the wall_time column so the output is reproducible byte for byte.
    #[arg(long)]
    no_time: bool,
}

struct Row {
    seed: u64,
    lp: hypersteiner::Rational,
    tree: hypersteiner::Rational,
    bound: hypersteiner::Rational,
    iterations: usize,
    millis: f64,
    within: bool,
}

pub fn run_bench(args: &BenchArgs) -> CliResult<()> {
    let density = parse_rational(&args.density).ok_or_else(|| Failure::Usage(format!("bad density {}", args.density)))?;
    let mut rows = Vec::new();
    for seed in args.seed.0.clone() {
        let inst = generate_random(args.terminals, args.steiner, &density, seed, args.quasi)?;
        let options = RunOptions {
            k: args.k.unwrap_or(usize::MAX),
            strategy: args.strategy.resolve(seed),
            check: args.check,
            ..RunOptions::default()
        };
        let start = Instant::now();
        let out = run(&inst, &options)?;
        let millis = start.elapsed().as_secs_f64() * 1000.0;
        let c = out.certificate;
        rows.push(Row {
            seed,
            within: c.tree_cost <= &c.bound * &c.lp_value,
            lp: c.lp_value,
            tree: c.tree_cost,
            bound: c.bound,
            iterations: c.iterations.len(),
            millis,
        });
    }
    let ratio = |r: &Row| (r.lp != hypersteiner::Rational::from_integer(0.into())).then(|| &r.tree / &r.lp);
    if args.json {
        let table: Vec<Value> = rows
            .iter()
            .map(|r| {
                let mut row = json!({
                    "instance": r.seed,
                    "lp": rat(&r.lp),
                    "tree": rat(&r.tree),
                    "ratio": ratio(r).as_ref().map(rat),
                    "bound": rat(&r.bound),
                    "iterations": r.iterations,
                });
                if !args.no_time {
                    row["wall_time_ms"] = json!(format!("{:.3}", r.millis));
                }
                row
            })
            .collect();
        emit(&table);
    } else {
        let time_header = if args.no_time { "" } else { ",wall_time_ms" };
        println!("instance,lp,tree,ratio,bound,iterations{time_header}");
        for r in &rows {
            let ratio = ratio(r).map(|x| decimal(&x, 6)).unwrap_or_default();
            let time = if args.no_time { String::new() } else { format!(",{:.3}", r.millis) };
            println!(
                "{},{},{},{},{},{}{}",
                r.seed,
                r.lp,
                r.tree,
                ratio,
                decimal(&r.bound, 6),
                r.iterations,
                time
            );
        }
    }
    if let Some(r) = rows.iter().find(|r| !r.within) {
        return Err(Failure::Violated(format!("instance {} exceeds its bound", r.seed)));
    }
    Ok(())
}
