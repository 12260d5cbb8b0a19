//! Command-line front end: market diagnostics, claim pricing, binomial
//! schemes, calibration and oracle cross-checks.
//!
//! Exit codes are a total function of validity and the profit verdict:
//! 0 when the inputs are valid and the market is free of instantaneous
//! profits, 2 when a profit exists, 1 for invalid inputs.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use superhedge::corpus::{random_leaf_payoff, random_tree, rng_from_env, TreeParams, TreeShape};
use superhedge::diagnostics::{check_aip_global, check_awip, check_node};
use superhedge::market::fmt_float;
use superhedge::oracle::{oracle_awip_tiny, oracle_full_horizon, oracle_na};
use superhedge::pricing::BinomialScheme;
use superhedge::{
    calibrate_multipliers, load_market, load_price_series, price_binomial_scheme, price_claim,
    save_market, Error, MarketTree, PayoffSpec,
};
use superhedge_cli::report::{
    lattice_to_csv, surface_rows, surface_to_csv, AipSection, AwipRow, AwipSection, CalibrationRow,
    ExtValue, MarketSummary, NodeVerdictRow, OracleSection, PriceSection, RunReport,
};

#[derive(Parser)]
#[command(
    name = "superhedge",
    version,
    about = "Super-hedging costs and arbitrage diagnostics on market trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a market file for instantaneous profits (and optionally more)
    Check {
        market: PathBuf,
        /// Report weak-profit certificates per time step
        #[arg(long)]
        awip: bool,
        /// Report per-node verdicts and certificates
        #[arg(long)]
        per_node: bool,
    },
    /// Price a claim on a market file by backward induction
    Price {
        market: PathBuf,
        /// Payoff: call:K | put:K | pwl:x1,v1;x2,v2;... | leaf:{id:value,...}
        payoff: String,
        /// Write the per-node value surface as CSV to this path
        #[arg(long)]
        surface: Option<PathBuf>,
        /// Include the optimal hedge in the report
        #[arg(long)]
        hedge: bool,
        /// Cross-check the root value against the full-strategy program
        #[arg(long)]
        oracle: bool,
    },
    /// Price a convex claim on a deterministic multiplier scheme
    Binomial {
        #[arg(long)]
        s0: f64,
        /// Number of steps
        #[arg(long)]
        steps: usize,
        /// Down multiplier, a single value or a comma list of length --steps
        #[arg(long)]
        kd: Option<String>,
        /// Up multiplier, a single value or a comma list of length --steps
        #[arg(long)]
        ku: Option<String>,
        /// CSV file with header `kd,ku`, one row per step
        #[arg(long, conflicts_with_all = ["kd", "ku"])]
        multipliers: Option<PathBuf>,
        #[arg(long)]
        payoff: String,
        /// Write the lattice CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate multiplier bounds from a date,price CSV
    Calibrate {
        csv: PathBuf,
        /// Rolling window length, in return observations
        #[arg(long)]
        window: usize,
        /// Also write a market file induced by the last T multiplier pairs
        #[arg(long, value_name = "T")]
        emit_tree: Option<usize>,
        /// Output path for --emit-tree
        #[arg(long, requires = "emit_tree")]
        out: Option<PathBuf>,
    },
    /// Cross-check pricing and diagnostics against brute-force validators
    Oracle {
        market: Option<PathBuf>,
        payoff: Option<String>,
        /// Check this many random seeded markets instead of a file
        #[arg(long, conflicts_with_all = ["market", "payoff"])]
        random: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::IpDetected { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let start = Instant::now();
    match cli.command {
        Command::Check {
            market,
            awip,
            per_node,
        } => {
            let tree = load_market(&market)?;
            let mut report = RunReport::new(format!(
                "check {}{}{}",
                market.display(),
                if awip { " --awip" } else { "" },
                if per_node { " --per-node" } else { "" }
            ));
            report.market = Some(MarketSummary::of(&tree));
            let aip = check_aip_global(&tree)?;
            report.aip = Some(AipSection {
                holds: aip.holds,
                failing_nodes: aip
                    .failing
                    .iter()
                    .map(|&id| tree.node(id).name().to_owned())
                    .collect(),
            });
            if per_node {
                report.per_node = Some(per_node_rows(&tree)?);
            }
            if awip {
                report.awip = Some(awip_section(&tree)?);
            }
            report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            println!("{}", report.to_json());
            Ok(if aip.holds { 0 } else { 2 })
        }
        Command::Price {
            market,
            payoff,
            surface,
            hedge,
            oracle,
        } => {
            let tree = load_market(&market)?;
            let claim = PayoffSpec::parse(&payoff)?;
            let values = price_claim(&tree, &claim)?;
            let aip = check_aip_global(&tree)?;
            let root = values.get(tree.root());

            let mut report = RunReport::new(format!("price {} {payoff}", market.display()));
            report.market = Some(MarketSummary::of(&tree));
            report.aip = Some(AipSection {
                holds: aip.holds,
                failing_nodes: aip
                    .failing
                    .iter()
                    .map(|&id| tree.node(id).name().to_owned())
                    .collect(),
            });
            report.price = Some(PriceSection {
                payoff: claim.to_string(),
                value: ExtValue(root.value),
                attained: root.attained,
                hedge: if hedge { root.hedge.clone() } else { None },
                ip_strategy: root.ip_strategy.clone(),
            });
            report.surface = Some(surface_rows(&tree, &values));
            if oracle {
                let full = oracle_full_horizon(&tree, &claim)?;
                let deviation = if root.value.is_finite() && full.value.is_finite() {
                    (root.value - full.value).abs()
                } else if root.value == full.value {
                    0.0
                } else {
                    f64::INFINITY
                };
                report.oracle = Some(OracleSection {
                    method: full.method.to_string(),
                    value: ExtValue(full.value),
                    max_deviation: deviation,
                    agreement: deviation <= 1e-8,
                });
            }
            if let Some(path) = surface {
                std::fs::write(&path, surface_to_csv(&tree, &values))?;
            }
            report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            println!("{}", report.to_json());
            Ok(if aip.holds { 0 } else { 2 })
        }
        Command::Binomial {
            s0,
            steps,
            kd,
            ku,
            multipliers,
            payoff,
            out,
        } => {
            let pairs = match multipliers {
                Some(path) => read_multiplier_file(&path)?,
                None => {
                    let kd = kd.ok_or_else(|| Error::Payoff("--kd is required".into()))?;
                    let ku = ku.ok_or_else(|| Error::Payoff("--ku is required".into()))?;
                    parse_multiplier_lists(&kd, &ku, steps)?
                }
            };
            if pairs.len() != steps {
                return Err(Error::Validation {
                    node: None,
                    message: format!("{} multiplier pairs for {steps} steps", pairs.len()),
                });
            }
            let scheme = BinomialScheme::new(s0, pairs)?;
            let claim = PayoffSpec::parse(&payoff)?;
            let lattice = price_binomial_scheme(&scheme, &claim)?;
            let csv = lattice_to_csv(&lattice);
            match out {
                Some(path) => std::fs::write(&path, csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::Calibrate {
            csv,
            window,
            emit_tree,
            out,
        } => {
            let prices = load_price_series(&csv)?;
            let multipliers = calibrate_multipliers(&prices, window)?;
            let mut report =
                RunReport::new(format!("calibrate {} --window {window}", csv.display()));
            report.calibration = Some(
                multipliers
                    .iter()
                    .enumerate()
                    .map(|(step, &(kd, ku))| CalibrationRow {
                        step,
                        k_down: kd,
                        k_up: ku,
                    })
                    .collect(),
            );
            let mut code = 0;
            if let Some(t) = emit_tree {
                if t == 0 || t > multipliers.len() {
                    return Err(Error::Calibration(format!(
                        "cannot emit a {t}-step tree from {} multiplier pairs",
                        multipliers.len()
                    )));
                }
                let steps: Vec<(f64, f64)> = multipliers[multipliers.len() - t..].to_vec();
                let scheme = BinomialScheme::new(*prices.last().expect("non-empty"), steps)?;
                let path =
                    out.ok_or_else(|| Error::Calibration("--emit-tree needs --out".into()))?;
                save_market(&scheme.to_tree()?, &path)?;
                if !scheme.aip() {
                    code = 2;
                }
            }
            for row in report.calibration.as_ref().expect("set above") {
                println!(
                    "{},{},{}",
                    row.step,
                    fmt_float(row.k_down),
                    fmt_float(row.k_up)
                );
            }
            report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            eprintln!("{}", report.to_json());
            Ok(code)
        }
        Command::Oracle {
            market,
            payoff,
            random,
        } => {
            if let Some(n) = random {
                return random_cross_check(n);
            }
            let market = market.ok_or_else(|| Error::Payoff("market file required".into()))?;
            let payoff = payoff.ok_or_else(|| Error::Payoff("payoff required".into()))?;
            let tree = load_market(&market)?;
            let claim = PayoffSpec::parse(&payoff)?;
            let values = price_claim(&tree, &claim)?;
            let root = values.value(tree.root());
            let full = oracle_full_horizon(&tree, &claim)?;
            let mut agree = (root - full.value).abs() <= 1e-8 || root == full.value;
            for (id, node) in tree.nodes() {
                if node.is_leaf() {
                    continue;
                }
                agree &= oracle_na(&tree, id)?
                    == superhedge::diagnostics::check_na_node(&tree, id)?.holds;
            }
            if tree.leaves().len() <= 8 {
                for t in 0..tree.horizon() {
                    agree &= oracle_awip_tiny(&tree, t)? == check_awip(&tree, t)?.is_some();
                }
            }
            let aip = check_aip_global(&tree)?;
            let mut report = RunReport::new(format!("oracle {} {payoff}", market.display()));
            report.market = Some(MarketSummary::of(&tree));
            report.price = Some(PriceSection {
                payoff: claim.to_string(),
                value: ExtValue(root),
                attained: values.get(tree.root()).attained,
                hedge: None,
                ip_strategy: values.get(tree.root()).ip_strategy.clone(),
            });
            report.oracle = Some(OracleSection {
                method: full.method.to_string(),
                value: ExtValue(full.value),
                max_deviation: if root.is_finite() && full.value.is_finite() {
                    (root - full.value).abs()
                } else if root == full.value {
                    0.0
                } else {
                    f64::INFINITY
                },
                agreement: agree,
            });
            report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            println!("{}", report.to_json());
            if !agree {
                return Err(Error::Internal("oracle disagreement".into()));
            }
            Ok(if aip.holds { 0 } else { 2 })
        }
    }
}

fn per_node_rows(tree: &MarketTree) -> Result<Vec<NodeVerdictRow>, Error> {
    let mut rows = Vec::new();
    for (id, node) in tree.nodes() {
        if node.is_leaf() {
            continue;
        }
        let v = check_node(tree, id)?;
        rows.push(NodeVerdictRow {
            node: node.name().to_owned(),
            time: node.time(),
            aip: v.aip,
            na: v.na,
            certificate: (&v.certificate).into(),
        });
    }
    Ok(rows)
}

fn awip_section(tree: &MarketTree) -> Result<AwipSection, Error> {
    let mut per_time = Vec::new();
    let mut holds = true;
    for t in 0..tree.horizon() {
        let cert = check_awip(tree, t)?;
        holds &= cert.is_some();
        per_time.push(AwipRow {
            t,
            holds: cert.is_some(),
            leaf_weights: cert.map(|c| {
                c.leaf_weights
                    .iter()
                    .map(|(&id, &w)| (tree.node(id).name().to_owned(), w))
                    .collect()
            }),
        });
    }
    Ok(AwipSection {
        holds,
        per_time,
        note: (tree.dim() > 1).then(|| {
            "martingale-weight certificates are asserted as an equivalence only for a single risky asset".to_owned()
        }),
    })
}

fn parse_multiplier_lists(kd: &str, ku: &str, steps: usize) -> Result<Vec<(f64, f64)>, Error> {
    let parse_list = |text: &str, name: &str| -> Result<Vec<f64>, Error> {
        let vals: Vec<f64> = text
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|e| Error::Calibration(format!("bad {name} entry `{p}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        match vals.len() {
            1 => Ok(vec![vals[0]; steps]),
            n if n == steps => Ok(vals),
            n => Err(Error::Calibration(format!(
                "{name} has {n} entries for {steps} steps"
            ))),
        }
    };
    let kds = parse_list(kd, "--kd")?;
    let kus = parse_list(ku, "--ku")?;
    Ok(kds.into_iter().zip(kus).collect())
}

fn read_multiplier_file(path: &PathBuf) -> Result<Vec<(f64, f64)>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "kd,ku" => {}
        other => {
            return Err(Error::Calibration(format!(
                "expected header `kd,ku`, got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (kd, ku) = line
            .split_once(',')
            .ok_or_else(|| Error::Calibration(format!("row {}: expected kd,ku", i + 2)))?;
        let kd: f64 = kd
            .trim()
            .parse()
            .map_err(|e| Error::Calibration(format!("row {}: {e}", i + 2)))?;
        let ku: f64 = if ku.trim() == "inf" {
            f64::INFINITY
        } else {
            ku.trim()
                .parse()
                .map_err(|e| Error::Calibration(format!("row {}: {e}", i + 2)))?
        };
        out.push((kd, ku));
    }
    Ok(out)
}

fn random_cross_check(n: usize) -> Result<u8, Error> {
    let start = Instant::now();
    let mut rng = rng_from_env();
    let mut max_dev: f64 = 0.0;
    let mut worst = String::new();
    for i in 0..n {
        let shape = match i % 4 {
            0 | 1 => TreeShape::Aip,
            2 => TreeShape::Free,
            _ => TreeShape::RootProfit,
        };
        let tree = random_tree(
            &mut rng,
            TreeParams {
                max_horizon: 3,
                max_branching: 3,
                dim: 1 + i % 2,
                shape,
            },
        );
        let payoff = random_leaf_payoff(&mut rng, &tree, -20.0, 60.0);
        let dp = price_claim(&tree, &payoff)?.value(tree.root());
        let lp = oracle_full_horizon(&tree, &payoff)?.value;
        let dev = if dp.is_finite() && lp.is_finite() {
            (dp - lp).abs()
        } else if dp == lp {
            0.0
        } else {
            f64::INFINITY
        };
        if dev > max_dev {
            max_dev = dev;
            worst = format!("tree {i}");
        }
        for (id, node) in tree.nodes() {
            if !node.is_leaf()
                && oracle_na(&tree, id)? != superhedge::diagnostics::check_na_node(&tree, id)?.holds
            {
                return Err(Error::Internal(format!(
                    "no-arbitrage disagreement on tree {i}, node {}",
                    node.name()
                )));
            }
        }
    }
    let mut report = RunReport::new(format!("oracle --random {n}"));
    report.oracle = Some(OracleSection {
        method: "full-lp".into(),
        value: ExtValue(max_dev),
        max_deviation: max_dev,
        agreement: max_dev <= 1e-8,
    });
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    println!("{}", report.to_json());
    if max_dev > 1e-8 {
        return Err(Error::Internal(format!(
            "max deviation {max_dev} at {worst}"
        )));
    }
    Ok(0)
}
