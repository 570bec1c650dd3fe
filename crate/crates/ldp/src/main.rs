use std::io::Read as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ldp::error::Error;
use ldp::generate::{generate_instance, random_instance};
use ldp::instance::Instance;
use ldp::interval::{solve_interval, IntervalConfig};
use ldp::oracle::exact_ldp;
use ldp::primal::Solution;
use ldp::solver::{run, SolverConfig};

#[derive(Parser)]
#[command(name = "ldp", about = "Disjoint-paths tracking with long-range pairwise costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file (`-` reads stdin) and print the solution.
    Solve {
        input: String,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Print a generated instance.
    Generate {
        #[arg(long, default_value_t = 6)]
        frames: u32,
        #[arg(long, default_value_t = 3)]
        detections: usize,
        /// Planted trajectories; with `--random` this is ignored.
        #[arg(long, default_value_t = 2)]
        trajectories: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Unstructured random costs instead of planted trajectories.
        #[arg(long)]
        random: bool,
    },
    /// Solve a series of generated instances and print one summary line each.
    Bench {
        #[arg(long, default_value_t = 6)]
        frames: u32,
        #[arg(long, default_value_t = 3)]
        detections: usize,
        #[arg(long, default_value_t = 2)]
        trajectories: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Number of instances (seeds `0..count`).
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[command(flatten)]
        opts: SolveOpts,
    },
}

#[derive(Args)]
struct SolveOpts {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    sep_interval: Option<usize>,
    #[arg(long)]
    primal_interval: Option<usize>,
    #[arg(long)]
    sep_epsilon: Option<f64>,
    #[arg(long)]
    max_new_factor_ratio: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    gap_tolerance: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    cut_ends_budget: Option<usize>,
    /// Windowed mode: solve intervals of this many frames and stitch.
    #[arg(long)]
    interval_length: Option<usize>,
    /// Edge frame-span bound for windowed mode; defaults to the largest
    /// span present in the instance.
    #[arg(long)]
    max_edge_frames: Option<usize>,
    /// Exhaustive exact solve (small instances only).
    #[arg(long)]
    oracle: bool,
    /// Per-iteration progress on stderr.
    #[arg(long)]
    verbose: bool,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl SolveOpts {
    fn solver_config(&self) -> Result<SolverConfig, Error> {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.sep_interval {
            cfg.sep_interval = v;
        }
        if let Some(v) = self.primal_interval {
            cfg.primal_interval = v;
        }
        if let Some(v) = self.sep_epsilon {
            cfg.sep_epsilon = v;
        }
        if let Some(v) = self.max_new_factor_ratio {
            cfg.max_new_factor_ratio = v;
        }
        if let Some(v) = self.damping {
            cfg.damping = v;
        }
        if let Some(v) = self.gap_tolerance {
            cfg.gap_tolerance = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.cut_ends_budget {
            cfg.cut_ends_budget = v;
        }
        cfg.verbose = self.verbose;
        for (name, value) in [
            ("sep-interval", cfg.sep_interval),
            ("primal-interval", cfg.primal_interval),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("--{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&cfg.damping) || cfg.damping == 0.0 {
            return Err(Error::Config("--damping must be in (0, 1]".into()));
        }
        if cfg.sep_epsilon < 0.0 || cfg.gap_tolerance < 0.0 || cfg.tau < 0.0 {
            return Err(Error::Config(
                "--sep-epsilon, --gap-tolerance and --tau must be nonnegative".into(),
            ));
        }
        if cfg.max_new_factor_ratio < 0.0 {
            return Err(Error::Config("--max-new-factor-ratio must be nonnegative".into()));
        }
        Ok(cfg)
    }
}

fn read_instance(input: &str) -> Result<Instance, Error> {
    let text = if input == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(input)?
    };
    Instance::parse(&text)
}

fn solve_one(inst: &Instance, opts: &SolveOpts) -> Result<(Solution, Option<(f64, f64)>), Error> {
    if opts.oracle {
        let (objective, paths) = exact_ldp(inst, 24)?;
        return Ok((Solution { paths, objective }, None));
    }
    let cfg = opts.solver_config()?;
    if let Some(l) = opts.interval_length {
        let t_max = opts
            .max_edge_frames
            .unwrap_or(inst.max_edge_frame_gap().max(1) as usize);
        let icfg = IntervalConfig {
            interval_length: l,
            max_edge_frames: t_max,
            solver: cfg,
        };
        let sol = solve_interval(inst, &icfg)?;
        return Ok((sol, None));
    }
    let report = run(inst, &cfg);
    let bounds = (report.lower_bound, report.gap);
    Ok((report.solution, Some(bounds)))
}

fn real_main() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { input, opts } => {
            let inst = read_instance(&input)?;
            let (sol, bounds) = solve_one(&inst, &opts)?;
            if let Some((lb, gap)) = bounds {
                eprintln!("lower_bound {lb} gap {gap}");
            }
            let out = sol.serialize();
            match &opts.output {
                Some(path) => std::fs::write(path, out)?,
                None => print!("{out}"),
            }
        }
        Command::Generate {
            frames,
            detections,
            trajectories,
            noise,
            seed,
            random,
        } => {
            if !random && trajectories > detections {
                return Err(Error::Config(
                    "--trajectories must not exceed --detections".into(),
                ));
            }
            let inst = if random {
                random_instance(frames, detections, seed)
            } else {
                generate_instance(frames, detections, trajectories, noise, seed).0
            };
            print!("{}", inst.serialize());
        }
        Command::Bench {
            frames,
            detections,
            trajectories,
            noise,
            count,
            opts,
        } => {
            if trajectories > detections {
                return Err(Error::Config(
                    "--trajectories must not exceed --detections".into(),
                ));
            }
            opts.solver_config()?;
            for seed in 0..count {
                let (inst, _) = generate_instance(frames, detections, trajectories, noise, seed);
                let start = std::time::Instant::now();
                let (sol, bounds) = solve_one(&inst, &opts)?;
                let secs = start.elapsed().as_secs_f64();
                match bounds {
                    Some((lb, gap)) => println!(
                        "seed {seed} objective {:.6} lower_bound {lb:.6} gap {gap:.6} time {secs:.3}s",
                        sol.objective
                    ),
                    None => println!("seed {seed} objective {:.6} time {secs:.3}s", sol.objective),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Parse { .. } | Error::Invalid(_) => ExitCode::from(2),
                Error::Config(_) | Error::TooLarge(_) => ExitCode::from(3),
                Error::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
