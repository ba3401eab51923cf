use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasketpile::gasket::{edge_count, vertex_count};
use gasketpile::markov::{mixing_report, simulate, MonteCarloOptions};
use gasketpile::render::write_render;
use gasketpile::sandpile::{identity, is_recurrent_burning, stabilize};
use gasketpile::selfsim::{
    build_identity_theorem, build_m, verify_corner_transport, verify_doubling,
    verify_junction_invariance,
};
use gasketpile::spectral::{
    cell_origins, eigenvalue, embed_h1, exact_distance, CharacterTable, CHARACTER_CAP,
};
use gasketpile::{group, io, BoundaryCondition, Configuration, Corner, GasketGraph};
use serde::Serialize;
use serde_json::{json, Value};

/// Abelian sandpiles on Sierpinski gasket graphs.
#[derive(Parser)]
#[command(name = "gasketpile", version)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the level-n gasket graph.
    Gasket(GraphArgs),
    /// Stabilization, identity and recurrence
    #[command(subcommand)]
    Sandpile(SandpileCmd),
    /// Self-similar configurations and toppling identities
    #[command(subcommand)]
    Selfsim(SelfsimCmd),
    /// Sandpile group structure and spanning trees
    #[command(subcommand)]
    Group(GroupCmd),
    /// Characters, eigenvalues and exact distances
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Simulation and mixing bounds for the sandpile chain
    #[command(subcommand)]
    Markov(MarkovCmd),
    /// Draw a configuration as PPM or SVG (chosen by extension).
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 16)]
        scale: u32,
    },
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    level: u32,
    /// `normal` or `corner_sink:<lower_left|lower_right|top>`.
    #[arg(long, default_value = "normal")]
    boundary: BoundaryCondition,
}

#[derive(Subcommand)]
enum SandpileCmd {
    /// Stabilize a configuration read from a file or stdin (`-`).
    Stabilize {
        #[arg(long, default_value = "-")]
        config: PathBuf,
        /// Vertex indices that collect chips but never fire.
        #[arg(long, value_delimiter = ',')]
        frozen: Vec<usize>,
    },
    /// The identity of the sandpile group.
    Identity {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        scale: u32,
    },
    /// Burning test for recurrence.
    Burn {
        #[arg(long, default_value = "-")]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Doubling,
    Transport,
    Junction,
}

#[derive(Subcommand)]
enum SelfsimCmd {
    /// The identity assembled from M_{n-1}(2,2,2) and its rotations.
    Id {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        scale: u32,
    },
    /// M_n(x, y, z).
    M {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        #[arg(long)]
        z: u64,
    },
    /// Check a toppling identity on one instance.
    Verify {
        #[arg(long, value_enum)]
        check: Check,
        #[arg(long)]
        level: u32,
        /// Input configuration for transport (default: the identity with the
        /// lower-left corner as sink) and junction (default: M_n(2,2,2)).
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TauMethod {
    Recursion,
    MatrixTree,
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Invariant factors of the sandpile group.
    Snf(GraphArgs),
    /// Compare the sub-copy quotient with the direct sum of corner quotients.
    CheckTheorem {
        #[arg(long)]
        level: u32,
    },
    /// Spanning trees of the bare gasket.
    Tau {
        #[arg(long)]
        level: u32,
        #[arg(long, value_enum, default_value = "recursion")]
        method: TauMethod,
    },
}

#[derive(Subcommand)]
enum SpectralCmd {
    /// Eigenvalues of the cell characters, or of all characters.
    Eigs {
        #[arg(long)]
        level: u32,
        #[arg(long, conflicts_with = "h1")]
        all: bool,
        #[arg(long)]
        h1: bool,
    },
    /// Exact L2 distance to stationarity after t steps from the identity.
    Distance {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        t: u64,
    },
}

#[derive(Subcommand)]
enum MarkovCmd {
    /// Run chains from the identity.
    Simulate {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        steps: u64,
        #[arg(long, env = "GASKETPILE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Analytic mixing bounds, optionally with Monte-Carlo decay estimates.
    Report {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        monte_carlo: bool,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, env = "GASKETPILE_SEED", default_value_t = 0)]
        seed: u64,
    },
}

/// What a command produced: its JSON form, a human-readable form and
/// whether any verification it performed passed.
struct Output {
    json: Value,
    text: String,
    pass: bool,
}

impl Output {
    fn new(json: Value, text: String) -> Self {
        Self {
            json,
            text,
            pass: true,
        }
    }
}

type CmdResult = Result<Output, gasketpile::Error>;

fn to_value<T: Serialize>(v: &T) -> Result<Value, gasketpile::Error> {
    Ok(serde_json::to_value(v)?)
}

fn read_config(path: &Path) -> Result<Configuration, gasketpile::Error> {
    let mut s = String::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut s)?;
    } else {
        s = std::fs::read_to_string(path)?;
    }
    io::parse_config(&s)
}

fn graph_of(c: &Configuration) -> GasketGraph {
    GasketGraph::new(c.level(), c.boundary())
}

fn config_output(c: &Configuration) -> CmdResult {
    Ok(Output::new(to_value(c)?, io::config_to_compact(c)))
}

fn gasket(args: &GraphArgs) -> CmdResult {
    let g = GasketGraph::new(args.level, args.boundary);
    let text = format!(
        "level {} {}: {} gasket vertices, {} gasket edges, {} non-sink vertices",
        args.level,
        args.boundary,
        vertex_count(args.level),
        edge_count(args.level),
        g.len()
    );
    Ok(Output::new(to_value(&io::GraphExport::from(&g))?, text))
}

fn sandpile(cmd: &SandpileCmd) -> CmdResult {
    match cmd {
        SandpileCmd::Stabilize { config, frozen } => {
            let c = read_config(config)?;
            let g = graph_of(&c);
            let (out, odometer) = stabilize(&g, &c, frozen)?;
            Ok(Output::new(
                json!({"config": out, "odometer": odometer.fires}),
                io::config_to_compact(&out),
            ))
        }
        SandpileCmd::Identity {
            graph,
            render,
            scale,
        } => {
            let g = GasketGraph::new(graph.level, graph.boundary);
            let id = identity(&g)?;
            if let Some(path) = render {
                write_render(path, &g, &id, *scale)?;
            }
            config_output(&id)
        }
        SandpileCmd::Burn { config } => {
            let c = read_config(config)?;
            let (recurrent, odometer) = is_recurrent_burning(&graph_of(&c), &c)?;
            Ok(Output::new(
                json!({"recurrent": recurrent, "odometer": odometer.fires}),
                if recurrent { "recurrent" } else { "transient" }.to_string(),
            ))
        }
    }
}

fn report(check: &str, level: u32, pass: bool, details: Value) -> Output {
    let text = format!("{check} level {level}: {}", if pass { "pass" } else { "FAIL" });
    Output {
        json: json!({"check": check, "level": level, "pass": pass, "details": details}),
        text,
        pass,
    }
}

fn selfsim(cmd: &SelfsimCmd) -> CmdResult {
    match cmd {
        SelfsimCmd::Id {
            level,
            render,
            scale,
        } => {
            let id = build_identity_theorem(*level)?;
            if let Some(path) = render {
                write_render(path, &graph_of(&id), &id, *scale)?;
            }
            config_output(&id)
        }
        SelfsimCmd::M { level, x, y, z } => config_output(&build_m(*level, *x, *y, *z)?.config),
        SelfsimCmd::Verify {
            check,
            level,
            config,
        } => {
            let level = *level;
            let input = config.as_deref().map(read_config).transpose()?;
            Ok(match check {
                Check::Doubling => {
                    let r = verify_doubling(level)?;
                    report("doubling", level, r.pass, to_value(&r)?)
                }
                Check::Transport => {
                    let eta = match input {
                        Some(c) => c,
                        None => identity(&GasketGraph::new(
                            level,
                            BoundaryCondition::CornerSink(Corner::LowerLeft),
                        ))?,
                    };
                    let r = verify_corner_transport(level, &eta)?;
                    report("transport", level, r.pass, to_value(&r)?)
                }
                Check::Junction => {
                    let eta = match input {
                        Some(c) => c,
                        None => build_m(level, 2, 2, 2)?.config,
                    };
                    let r = verify_junction_invariance(level, &eta)?;
                    report("junction", level, r.pass, to_value(&r)?)
                }
            })
        }
    }
}

fn group_cmd(cmd: &GroupCmd) -> CmdResult {
    match cmd {
        GroupCmd::Snf(args) => {
            let g = GasketGraph::new(args.level, args.boundary);
            let inv = group::sandpile_group(&g);
            let det = group::group_order(&g)?;
            let pass = inv.order().as_ref() == Some(&det);
            let mut json = to_value(&inv)?;
            json["determinant"] = Value::String(det.to_string());
            Ok(Output {
                json,
                text: format!("{inv}\norder {det}"),
                pass,
            })
        }
        GroupCmd::CheckTheorem { level } => {
            let r = group::check_group_theorem(*level)?;
            let text = format!(
                "level {}: lhs {} | rhs {} | convention {} | {}",
                r.level,
                r.lhs,
                r.rhs,
                r.convention_index,
                if r.pass { "pass" } else { "FAIL" }
            );
            Ok(Output {
                json: to_value(&r)?,
                text,
                pass: r.pass,
            })
        }
        GroupCmd::Tau { level, method } => {
            let (name, tau) = match method {
                TauMethod::Recursion => ("recursion", group::tau_recursion(*level)),
                TauMethod::MatrixTree => ("matrix-tree", group::tau_matrix_tree(*level)?),
            };
            Ok(Output::new(
                json!({"level": level, "method": name, "tau": tau.to_string()}),
                tau.to_string(),
            ))
        }
    }
}

fn spectral(cmd: &SpectralCmd) -> CmdResult {
    match cmd {
        SpectralCmd::Eigs { level, all, .. } => {
            let g = GasketGraph::normal(*level);
            if *all {
                let table = CharacterTable::new(&g, CHARACTER_CAP)?;
                let mut rows = Vec::new();
                for h in table.functions() {
                    rows.push(to_value(&eigenvalue(&g, &h)?)?);
                }
                let text = rows
                    .iter()
                    .map(|e| format!("{} {}", e["re"], e["im"]))
                    .collect::<Vec<_>>()
                    .join("\n");
                return Ok(Output::new(json!({"level": level, "eigenvalues": rows}), text));
            }
            let count = cell_origins(*level)?.len();
            let mut rows = Vec::new();
            let mut lines = Vec::new();
            for i in 1..=count {
                let e = eigenvalue(&g, &embed_h1(*level, i)?)?;
                let exact = e.exact.as_ref().map(ToString::to_string).unwrap_or_default();
                lines.push(format!("cell {i}: {exact} ({})", e.re));
                rows.push(json!({"cell": i, "eigenvalue": e}));
            }
            Ok(Output::new(json!({"level": level, "h1": rows}), lines.join("\n")))
        }
        SpectralCmd::Distance { level, t } => {
            let d = exact_distance(&GasketGraph::normal(*level), *t, CHARACTER_CAP)?;
            Ok(Output::new(
                json!({"level": level, "distance": d}),
                format!("l2 {} half_l2 {} tv_upper {}", d.l2, d.half_l2, d.tv_upper),
            ))
        }
    }
}

fn markov(cmd: &MarkovCmd) -> CmdResult {
    match cmd {
        MarkovCmd::Simulate {
            level,
            steps,
            seed,
            trials,
        } => {
            let s = simulate(*level, *steps, *seed, *trials)?;
            let mut text = io::config_to_compact(&s.final_config);
            if let (Some(est), Some(exp)) = (&s.statistic, s.expected) {
                text.push_str(&format!(
                    "\nchi mean {} stderr {} expected {}",
                    est.mean, est.stderr, exp
                ));
            }
            Ok(Output::new(to_value(&s)?, text))
        }
        MarkovCmd::Report {
            level,
            monte_carlo,
            trials,
            seed,
        } => {
            let opts = MonteCarloOptions {
                trials: *trials,
                seed: *seed,
                ..MonteCarloOptions::default()
            };
            let r = mixing_report(*level, monte_carlo.then_some(&opts))?;
            let pass = r.monte_carlo.iter().all(|p| p.within_three_sigma);
            let text = format!(
                "level {}: |V| = {}, lower bound t = {:.3} (raw {:.3}), upper bound t = {:.3}",
                r.level, r.vertices, r.lower_bound_t, r.lower_bound_raw, r.upper_bound_t
            );
            Ok(Output {
                json: to_value(&r)?,
                text,
                pass,
            })
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Gasket(args) => gasket(args),
        Command::Sandpile(cmd) => sandpile(cmd),
        Command::Selfsim(cmd) => selfsim(cmd),
        Command::Group(cmd) => group_cmd(cmd),
        Command::Spectral(cmd) => spectral(cmd),
        Command::Markov(cmd) => markov(cmd),
        Command::Render {
            config,
            output,
            scale,
        } => {
            let c = read_config(config)?;
            write_render(output, &graph_of(&c), &c, *scale)?;
            Ok(Output::new(
                json!({"output": output.display().to_string()}),
                format!("wrote {}", output.display()),
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", out.json);
            } else {
                println!("{}", out.text);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
