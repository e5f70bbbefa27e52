use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srm::config::{Config, Descriptor, Preset, ReorderMode, ShapeKind, SnapshotFormat};
use srm::error::{exit, CliError};

/// Periodic packings of disks, spheres and platelets by swelling and random
/// migration, with descriptor and percolation analysis.
#[derive(Parser)]
#[command(name = "srm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one snapshot (and run log) per ensemble member.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gen: Generation,
    },
    /// Per-particle descriptors and histograms of snapshot files.
    Analyze {
        /// Snapshot files.
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Descriptors to compute (default: nnd,lvf).
        #[arg(long, value_delimiter = ',')]
        descriptors: Option<Vec<Descriptor>>,
        /// Add the local alignment column (platelets only).
        #[arg(long)]
        alignment: bool,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        lvf_samples_per_particle: Option<u64>,
        /// Alignment neighbor cutoff in platelet diameters.
        #[arg(long)]
        alignment_cutoff: Option<f64>,
    },
    /// Critical tunneling distance of snapshot files, or of a generated
    /// density sweep with --sweep.
    Percolate {
        /// Snapshot files (ignored with --sweep).
        snapshots: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Generate platelet ensembles over `sweep_densities` × `sweep_recipes`.
        #[arg(long)]
        sweep: bool,
        /// Search limit in particle diameters.
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        sweep_densities: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sweep_recipes: Option<Vec<Preset>>,
        #[command(flatten)]
        gen: Generation,
    },
    /// Time growth runs over a list of sizes and fit the scaling exponent.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Runs per size; the median is reported.
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long, value_enum)]
        reorder: Option<ReorderMode>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        initial_fraction: Option<f64>,
        #[arg(long)]
        f_target: Option<f64>,
        #[arg(long)]
        swelling_rate: Option<f64>,
        #[arg(long)]
        outer_attempts: Option<u32>,
        #[arg(long)]
        move_attempts: Option<u32>,
        #[arg(long)]
        reorder_period: Option<u32>,
        #[arg(long)]
        max_iterations: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent seeded members.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Run the O(N²) overlap audit (on by default up to 10⁴ particles).
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct Generation {
    #[arg(long, value_enum)]
    shape: Option<ShapeKind>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    f_target: Option<f64>,
    #[arg(long)]
    rho_target: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    box_lengths: Option<Vec<f64>>,
    #[arg(long)]
    initial_fraction: Option<f64>,
    #[arg(long, value_enum)]
    recipe: Option<Preset>,
    #[arg(long)]
    swelling_rate: Option<f64>,
    #[arg(long)]
    migration_rate: Option<f64>,
    #[arg(long)]
    rotation_rate: Option<f64>,
    #[arg(long)]
    outer_attempts: Option<u32>,
    #[arg(long)]
    move_attempts: Option<u32>,
    #[arg(long)]
    max_iterations: Option<u64>,
    #[arg(long)]
    reorder_period: Option<u32>,
    #[arg(long)]
    final_relaxation_sweeps: Option<u32>,
    #[arg(long)]
    aspect_ratio: Option<f64>,
    #[arg(long)]
    initial_density: Option<f64>,
    #[arg(long)]
    rsa_max_attempts: Option<u32>,
    #[arg(long)]
    relax_migration_rate: Option<f64>,
    #[arg(long)]
    relax_rotation_rate: Option<f64>,
    #[arg(long)]
    plateau_window: Option<u32>,
    #[arg(long)]
    plateau_tolerance: Option<f64>,
    #[arg(long)]
    min_relax_sweeps: Option<u64>,
    #[arg(long)]
    max_relax_sweeps: Option<u64>,
    #[arg(long)]
    stacked_density: Option<f64>,
    #[arg(long)]
    stacked_swelling_rate: Option<f64>,
    #[arg(long)]
    stacked_migration_rate: Option<f64>,
    #[arg(long)]
    stacked_rotation_rate: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<SnapshotFormat>,
}

impl Common {
    fn overlay(&self, cfg: &mut Config) {
        cfg.seed = self.seed;
        cfg.out = self.out.clone();
        cfg.ensemble = self.ensemble;
        cfg.threads = self.threads;
        cfg.audit = self.audit.then_some(true);
    }

    fn resolve(&self, flags: Config) -> Result<Config, CliError> {
        let file = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Ok(file.merged(&flags))
    }
}

impl Generation {
    fn overlay(self, c: &mut Config) {
        c.shape = self.shape;
        c.dimension = self.dimension;
        c.n = self.n;
        c.f_target = self.f_target;
        c.rho_target = self.rho_target;
        c.box_lengths = self.box_lengths;
        c.initial_fraction = self.initial_fraction;
        c.recipe = self.recipe;
        c.swelling_rate = self.swelling_rate;
        c.migration_rate = self.migration_rate;
        c.rotation_rate = self.rotation_rate;
        c.outer_attempts = self.outer_attempts;
        c.move_attempts = self.move_attempts;
        c.max_iterations = self.max_iterations;
        c.reorder_period = self.reorder_period;
        c.final_relaxation_sweeps = self.final_relaxation_sweeps;
        c.aspect_ratio = self.aspect_ratio;
        c.initial_density = self.initial_density;
        c.rsa_max_attempts = self.rsa_max_attempts;
        c.relax_migration_rate = self.relax_migration_rate;
        c.relax_rotation_rate = self.relax_rotation_rate;
        c.plateau_window = self.plateau_window;
        c.plateau_tolerance = self.plateau_tolerance;
        c.min_relax_sweeps = self.min_relax_sweeps;
        c.max_relax_sweeps = self.max_relax_sweeps;
        c.stacked_density = self.stacked_density;
        c.stacked_swelling_rate = self.stacked_swelling_rate;
        c.stacked_migration_rate = self.stacked_migration_rate;
        c.stacked_rotation_rate = self.stacked_rotation_rate;
        c.format = self.format;
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut flags = Config::default();
    match cli.command {
        Command::Generate { common, gen } => {
            common.overlay(&mut flags);
            gen.overlay(&mut flags);
            let cfg = common.resolve(flags)?;
            for m in srm::generate::run_generate(&cfg)? {
                println!(
                    "seed {}: f = {}, {} iterations, {} shakes, {:.2} s -> {}",
                    m.seed,
                    m.volume_fraction.unwrap_or(f64::NAN),
                    m.iterations.unwrap_or(0),
                    m.shakes,
                    m.seconds,
                    m.snapshot.as_deref().map(|p| p.display().to_string()).unwrap_or_default()
                );
            }
        }
        Command::Analyze {
            snapshots,
            common,
            descriptors,
            alignment,
            bins,
            lvf_samples_per_particle,
            alignment_cutoff,
        } => {
            common.overlay(&mut flags);
            flags.descriptors = descriptors;
            flags.bins = bins;
            flags.lvf_samples_per_particle = lvf_samples_per_particle;
            flags.alignment_cutoff = alignment_cutoff;
            let mut cfg = common.resolve(flags)?;
            if alignment {
                let mut d = cfg.descriptors.take().unwrap_or_else(|| vec![Descriptor::Nnd, Descriptor::Lvf]);
                if !d.contains(&Descriptor::Alignment) {
                    d.push(Descriptor::Alignment);
                }
                cfg.descriptors = Some(d);
            }
            for path in &snapshots {
                let report = srm::analyze::run_analyze(path, &cfg)?;
                for (name, n, mean, sd) in &report.summary {
                    println!("{}: {name} n={n} mean={mean} sd={sd}", path.display());
                }
            }
        }
        Command::Percolate {
            snapshots,
            common,
            sweep,
            delta_max,
            sweep_densities,
            sweep_recipes,
            gen,
        } => {
            common.overlay(&mut flags);
            gen.overlay(&mut flags);
            flags.delta_max = delta_max;
            flags.sweep_densities = sweep_densities;
            flags.sweep_recipes = sweep_recipes;
            let cfg = common.resolve(flags)?;
            let result = if sweep {
                srm::percolate::run_percolate_sweep(&cfg)
            } else if snapshots.is_empty() {
                return Err(CliError::Validation("percolate needs snapshot files or --sweep".into()));
            } else {
                srm::percolate::run_percolate_files(&snapshots, &cfg)
            };
            for row in &result?.rows {
                match row.result {
                    Some(p) => println!(
                        "rho {} seed {} {}: delta_c = {} ({} D), axes {:#05b}",
                        row.rho.map(|r| r.to_string()).unwrap_or_default(),
                        row.seed,
                        row.recipe,
                        p.delta_c,
                        p.delta_c / row.diameter,
                        p.axis_mask
                    ),
                    None => println!("seed {} {}: not percolating", row.seed, row.recipe),
                }
            }
        }
        Command::Bench {
            common,
            sizes,
            repeats,
            reorder,
            dimension,
            initial_fraction,
            f_target,
            swelling_rate,
            outer_attempts,
            move_attempts,
            reorder_period,
            max_iterations,
        } => {
            common.overlay(&mut flags);
            flags.sizes = sizes;
            flags.repeats = repeats;
            flags.reorder = reorder;
            flags.dimension = dimension;
            flags.initial_fraction = initial_fraction;
            flags.f_target = f_target;
            flags.swelling_rate = swelling_rate;
            flags.outer_attempts = outer_attempts;
            flags.move_attempts = move_attempts;
            flags.reorder_period = reorder_period;
            flags.max_iterations = max_iterations;
            let cfg = common.resolve(flags)?;
            let report = srm::bench::run_bench(&cfg, |p| {
                println!("n = {} reorder = {}: median {:.3} s over {:?}", p.n, p.reorder, p.median, p.times);
            })?;
            for (m, s) in &report.slopes {
                println!("slope (reorder = {m}): {s:.4}");
            }
            for (n, s) in &report.speedups {
                println!("reorder speedup at n = {n}: {s:.3}");
            }
        }
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
