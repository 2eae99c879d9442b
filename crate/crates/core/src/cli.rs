//! Command-line front end.
//!
//! Exit codes: 0 success, 1 infeasible instance or split, 2 usage or
//! configuration error, 3 I/O error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dctree::{DCTree, Rounding, TreeAlgorithm, TreeParams};
use crate::error::{Error, Result};
use crate::io::{averaged_csv, metric_table, plot_csv, series_csv, write_file, InstanceTable};
use crate::metrics::{
    critical_height, critical_height_mode, l1_array, l1_compare, solve_tree, Aggregation,
    AveragedSeries, Metric, Winner,
};
use crate::model::ProblemInstance;
use crate::montecarlo::{
    derive_seed, make_realization, sweep, Distribution, ExperimentOutcome, ExperimentParams,
    SweepPoint, SweepVariable,
};
use crate::rational::RationalValue;
use crate::solvers::{dp_solve, greedy_solve, lp_relax_solve, SortCriterion, SortKey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "proctor-dc",
    version,
    about = "Divide & conquer proctor assignment toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample random room lists and write them as CSV.
    Generate {
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value = "uniform")]
        dist: Distribution,
        #[arg(long, default_value = "0.9")]
        occupancy: RationalValue,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one column of a room list.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "1")]
        column: String,
        #[arg(long, default_value_t = 54)]
        rate: u64,
        #[arg(long, value_enum, default_value_t = SolverChoice::All)]
        solver: SolverChoice,
    },
    /// Build a D&C tree for one column and print its membership table.
    Tree {
        file: PathBuf,
        #[arg(long, default_value = "1")]
        column: String,
        #[arg(long, default_value_t = 54)]
        rate: u64,
        #[arg(long, default_value = "hlT")]
        tree: TreeAlgorithm,
        #[arg(long, default_value = "gamma")]
        sort: SortKey,
        #[arg(long, default_value = "0.5")]
        fraction: RationalValue,
        #[arg(long, default_value_t = 4)]
        min_size: usize,
        #[arg(long, default_value = "ceil")]
        rounding: Rounding,
        /// Seed for `--sort random`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also print per-height efficiencies.
        #[arg(long)]
        solve: bool,
        /// Write a Graphviz rendering of the tree here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment described by a key=value file.
    Experiment { config: PathBuf, out_dir: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Greedy,
    Dp,
    Lp,
    All,
}

/// Process exit code for an error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        e if e.is_infeasibility() => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::AtVertex { source, .. } => exit_code(source),
        _ => EXIT_USAGE,
    }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    run(std::env::args_os(), &mut stdout.lock())
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate {
            n,
            dist,
            occupancy,
            count,
            seed,
            out: path,
        } => cmd_generate(n, dist, &occupancy, count, seed, &path),
        Command::Solve {
            file,
            column,
            rate,
            solver,
        } => {
            let instance = load_instance(&file, &column, rate)?;
            cmd_solve(&instance, solver, out)
        }
        Command::Tree {
            file,
            column,
            rate,
            tree,
            sort,
            fraction,
            min_size,
            rounding,
            seed,
            solve,
            dot,
        } => {
            let instance = load_instance(&file, &column, rate)?;
            let params = TreeParams {
                algorithm: tree,
                sort: SortCriterion::descending(sort).with_seed(seed),
                head_fraction: (tree == TreeAlgorithm::HeadLeft).then_some(fraction),
                min_size,
                rounding,
            };
            cmd_tree(&instance, params, solve, dot.as_deref(), out)
        }
        Command::Experiment { config, out_dir } => {
            let text = std::fs::read_to_string(&config)?;
            let config = RunConfig::parse(&text)?;
            cmd_experiment(&config, &out_dir, out)
        }
    }
}

fn load_instance(file: &Path, column: &str, rate: u64) -> Result<ProblemInstance> {
    let table = InstanceTable::read(file)?;
    let k = table.column_index(column)?;
    table.instance(k, rate)
}

/// Samples `count` realizations and writes them in the room-list layout.
pub fn cmd_generate(
    n: usize,
    dist: Distribution,
    occupancy: &RationalValue,
    count: usize,
    seed: u64,
    path: &Path,
) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let realizations = (0..count)
        .map(|k| make_realization(dist, n, occupancy, derive_seed(seed, k as u64, 0)))
        .collect::<Result<Vec<_>>>()?;
    write_file(
        path,
        &InstanceTable::from_realizations(&realizations).to_csv()?,
    )
}

fn room_list(instance: &ProblemInstance, positions: impl IntoIterator<Item = usize>) -> String {
    let ids: Vec<String> = positions
        .into_iter()
        .map(|i| instance.room_ids()[i].to_string())
        .collect();
    format!("[{}]", ids.join(", "))
}

pub fn cmd_solve(
    instance: &ProblemInstance,
    solver: SolverChoice,
    out: &mut dyn Write,
) -> Result<()> {
    instance.ensure_feasible()?;
    let all = solver == SolverChoice::All;
    if all || solver == SolverChoice::Lp {
        let lp = lp_relax_solve(instance)?;
        let fractional = lp
            .fractional_room(instance)
            .map_or("none".to_string(), |r| r.to_string());
        writeln!(
            out,
            "LRS {} ({}) support {} fractional {}",
            lp.value.to_fixed(2),
            lp.value,
            room_list(instance, lp.support()),
            fractional
        )?;
    }
    if all || solver == SolverChoice::Dp {
        let dp = dp_solve(instance)?;
        writeln!(
            out,
            "DPS {} rooms {}",
            dp.value,
            room_list(instance, dp.selection.positions())
        )?;
    }
    if all || solver == SolverChoice::Greedy {
        let greedy = greedy_solve(instance)?;
        writeln!(
            out,
            "GAS {} rooms {}",
            greedy.value,
            room_list(instance, greedy.selection.positions())
        )?;
    }
    Ok(())
}

pub fn cmd_tree(
    instance: &ProblemInstance,
    params: TreeParams,
    solve: bool,
    dot: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut tree = DCTree::build(instance, params)?;
    out.write_all(tree.membership_table().as_bytes())?;
    if solve {
        let series = solve_tree(&mut tree)?;
        writeln!(out)?;
        out.write_all(series_csv(&series)?.as_bytes())?;
    }
    if let Some(path) = dot {
        write_file(path, &tree.to_dot())?;
    }
    Ok(())
}

/// Which tree families an experiment covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeSelection {
    One(TreeAlgorithm),
    Both,
}

impl TreeSelection {
    pub fn algorithms(&self) -> Vec<TreeAlgorithm> {
        match self {
            TreeSelection::One(a) => vec![*a],
            TreeSelection::Both => vec![TreeAlgorithm::HeadLeft, TreeAlgorithm::Balanced],
        }
    }
}

/// Parsed experiment configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    /// Base parameters; `head_fraction` applies to head-left runs only.
    pub params: ExperimentParams,
    pub trees: TreeSelection,
    pub sweep: Option<(SweepVariable, Vec<SweepPoint>)>,
    pub aggregation: Aggregation,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ExperimentParams::default(),
            trees: TreeSelection::One(TreeAlgorithm::HeadLeft),
            sweep: None,
            aggregation: Aggregation::Mean,
            workers: 0,
        }
    }
}

const CONFIG_KEYS: [&str; 15] = [
    "n_rooms",
    "dist",
    "occupancy",
    "rate",
    "tree_alg",
    "sort",
    "head_fraction",
    "min_size",
    "rounding",
    "realizations",
    "master_seed",
    "sweep",
    "domain",
    "aggregation",
    "workers",
];

impl RunConfig {
    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if CONFIG_KEYS.contains(&k.trim()) => {
                    entries.insert(k.trim().to_string(), v.trim().to_string());
                }
                Some((k, _)) => problems.push(k.trim().to_string()),
                None => problems.push(format!("line {}: {line:?}", lineno + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }

        let mut config = RunConfig::default();
        let p = &mut config.params;
        let mut fraction_given = false;
        for (key, value) in &entries {
            let result: Result<()> = (|| {
                match key.as_str() {
                    "n_rooms" => p.n_rooms = parse_int(value)?,
                    "dist" => p.dist = value.parse()?,
                    "occupancy" => p.occupancy = value.parse()?,
                    "rate" => p.rate = parse_int(value)?,
                    "tree_alg" => {
                        config.trees = if value.eq_ignore_ascii_case("both") {
                            TreeSelection::Both
                        } else {
                            TreeSelection::One(value.parse()?)
                        }
                    }
                    "sort" => p.sort = value.parse()?,
                    "head_fraction" => {
                        p.head_fraction = Some(value.parse()?);
                        fraction_given = true;
                    }
                    "min_size" => p.min_size = parse_int(value)?,
                    "rounding" => p.rounding = value.parse()?,
                    "realizations" => p.realizations = parse_int(value)?,
                    "master_seed" => p.master_seed = parse_int(value)?,
                    "aggregation" => config.aggregation = value.parse()?,
                    "workers" => config.workers = parse_int(value)?,
                    _ => {}
                }
                Ok(())
            })();
            if let Err(e) = result {
                problems.push(format!("{key} ({e})"));
            }
        }
        if config.trees == TreeSelection::One(TreeAlgorithm::Balanced) && fraction_given {
            problems.push("head_fraction (not used by balanced trees)".into());
        }
        if let Some(v) = entries
            .get("sweep")
            .filter(|v| !v.eq_ignore_ascii_case("none"))
        {
            match v.parse::<SweepVariable>() {
                Ok(variable) => {
                    let domain = match entries.get("domain") {
                        Some(list) => list
                            .split(',')
                            .map(|item| SweepPoint::parse(variable, item))
                            .collect::<Result<Vec<_>>>(),
                        None => Ok(variable.default_domain()),
                    };
                    match domain {
                        Ok(_)
                            if variable == SweepVariable::Fraction
                                && config.trees != TreeSelection::One(TreeAlgorithm::HeadLeft) =>
                        {
                            problems.push("sweep (head fraction sweeps need tree_alg=hlT)".into());
                        }
                        Ok(d) => config.sweep = Some((variable, d)),
                        Err(e) => problems.push(format!("domain ({e})")),
                    }
                }
                Err(e) => problems.push(format!("sweep ({e})")),
            }
        } else if entries.contains_key("domain") {
            problems.push("domain (given without sweep)".into());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        for alg in config.trees.algorithms() {
            if let Err(e) = config.params_for(alg).validate() {
                return Err(Error::Config(vec![e.to_string()]));
            }
        }
        Ok(config)
    }

    /// Base parameters for one tree family.
    pub fn params_for(&self, algorithm: TreeAlgorithm) -> ExperimentParams {
        let mut p = self.params.clone();
        p.tree_alg = algorithm;
        if algorithm == TreeAlgorithm::Balanced {
            p.head_fraction = None;
        }
        p
    }
}

fn parse_int<T: std::str::FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{value:?} is not a non-negative integer")))
}

fn averages(results: &[(SweepPoint, ExperimentOutcome)]) -> Vec<&AveragedSeries> {
    results.iter().map(|(_, o)| &o.averaged).collect()
}

/// Runs the configured experiment(s) and writes all tables into `out_dir`.
pub fn cmd_experiment(config: &RunConfig, out_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let (variable, domain) = match &config.sweep {
        Some((v, d)) => (v.as_str(), d.clone()),
        None => ("rate", vec![SweepPoint::Rate(config.params.rate)]),
    };

    let mut families: Vec<(TreeAlgorithm, Vec<(SweepPoint, ExperimentOutcome)>)> = Vec::new();
    for algorithm in config.trees.algorithms() {
        let params = config.params_for(algorithm);
        let results = pool.install(|| sweep(&params, &domain))?;
        families.push((algorithm, results));
    }

    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        write_file(&out_dir.join(&name), &contents)?;
        written.push(name);
        Ok(())
    };
    let mut modes = Vec::new();
    for (algorithm, results) in &families {
        let tag = algorithm.as_str();
        let labelled: Vec<(String, &AveragedSeries)> = results
            .iter()
            .map(|(point, outcome)| (point.to_string(), &outcome.averaged))
            .collect();
        for metric in Metric::ALL {
            emit(
                format!("{tag}_{metric}.csv"),
                metric_table(variable, &labelled, metric)?,
            )?;
        }
        emit(format!("{tag}_plot.csv"), plot_csv(&labelled)?)?;
        for (label, series) in &labelled {
            emit(
                format!("{tag}_{variable}={label}_averaged.csv"),
                averaged_csv(series)?,
            )?;
        }

        let domain_series: Vec<&AveragedSeries> = labelled.iter().map(|(_, s)| *s).collect();
        let mut heights_csv = String::from("metric,critical_height\n");
        let mut heights = Vec::new();
        for metric in Metric::EFFICIENCIES {
            let h = critical_height(&domain_series, metric, config.aggregation)?;
            heights.push(h);
            heights_csv.push_str(&format!("{metric},{h}\n"));
        }
        let mode = critical_height_mode(&heights)?;
        heights_csv.push_str(&format!("mode,{mode}\n"));
        modes.push(mode);
        emit(format!("{tag}_critical_heights.csv"), heights_csv)?;

        let mut summary = format!("{variable},realizations,resamples\n");
        for (point, outcome) in results {
            summary.push_str(&format!(
                "{point},{},{}\n",
                outcome.series.len(),
                outcome.resamples
            ));
        }
        emit(format!("{tag}_summary.csv"), summary)?;
    }

    if let [(_, head), (_, balanced)] = families.as_slice() {
        let h_tilde = modes.iter().copied().min().unwrap_or(0);
        let (a, b) = (averages(head), averages(balanced));
        let mut csv = String::from("metric,h_tilde,norm_hlT,norm_blT,winner\n");
        let mut rows: Vec<(String, Vec<Metric>)> = Metric::EFFICIENCIES
            .iter()
            .map(|m| (m.to_string(), vec![*m]))
            .collect();
        rows.push(("all".into(), Metric::EFFICIENCIES.to_vec()));
        for (name, metrics) in rows {
            let cmp = l1_compare(
                &l1_array(&a, &metrics, h_tilde)?,
                &l1_array(&b, &metrics, h_tilde)?,
            )?;
            let winner = match cmp.winner {
                Winner::A => "hlT",
                Winner::B => "blT",
                Winner::Tie => "tie",
            };
            csv.push_str(&format!(
                "{name},{h_tilde},{},{},{winner}\n",
                cmp.norm_a.to_fixed(2),
                cmp.norm_b.to_fixed(2)
            ));
        }
        emit("comparison.csv".into(), csv)?;
    }

    for name in &written {
        writeln!(out, "{}", out_dir.join(name).display())?;
    }
    Ok(())
}
