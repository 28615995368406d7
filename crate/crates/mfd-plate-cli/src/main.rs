//! Command-line front end.
//!
//! Three entry points: `mesh` generates and inspects the built-in families,
//! `solve` runs a single (problem, mesh, thickness, boundary condition) case,
//! `study` sweeps refinements/thicknesses and emits tables in Markdown and
//! CSV. Every run is deterministic given its flags: randomized mesh families
//! require an explicit seed and study rows are computed in parallel but
//! written in a fixed order. `MFDPLATE_THREADS` caps the worker count.
//!
//! Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors.

mod config;
mod output;
mod runs;
mod vtk;

use clap::{Args, Parser, Subcommand};
use mfd_plate::mesh::{export_mesh, generate_mesh, MeshFamily};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mfdplate",
    about = "Mimetic finite difference solver for Reissner-Mindlin plates on polygonal meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh family on the unit square and report quality metrics.
    Mesh(MeshArgs),
    /// Solve a single case.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run a study campaign and emit tables.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Args)]
struct MeshArgs {
    /// Mesh family, T1..T7.
    #[arg(long)]
    family: MeshFamilyArg,
    /// Elements per side of the plate.
    #[arg(long)]
    n: usize,
    /// Seed; required for the randomized families T3 and T7.
    #[arg(long)]
    seed: Option<u64>,
    /// Output mesh file (plain text).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
struct MeshFamilyArg(MeshFamily);

impl std::str::FromStr for MeshFamilyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<MeshFamily>()
            .map(MeshFamilyArg)
            .map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum SolveCommand {
    /// Bending problem under the built-in polynomial benchmark load.
    Source(runs::SourceArgs),
    /// Free-vibration eigenproblem.
    Vibrate(runs::VibrateArgs),
    /// Buckling eigenproblem.
    Buckle(runs::BuckleArgs),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Convergence sweep of the source problem over mesh refinements.
    Source(runs::StudySourceArgs),
    /// Thickness robustness of the source problem (locking check).
    Locking(runs::StudyLockingArgs),
    /// Vibration frequencies over refinements, with extrapolation.
    Vibrate(runs::StudyVibrateArgs),
    /// Buckling intensities over refinements, with extrapolation.
    Buckle(runs::StudyBuckleArgs),
    /// Buckling intensity across thicknesses with a thin-plate limit row.
    BuckleThickness(runs::StudyBuckleThicknessArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    let result = match cli.command {
        Command::Mesh(args) => run_mesh(args),
        Command::Solve(SolveCommand::Source(args)) => runs::solve_source_cmd(args),
        Command::Solve(SolveCommand::Vibrate(args)) => runs::solve_vibrate_cmd(args),
        Command::Solve(SolveCommand::Buckle(args)) => runs::solve_buckle_cmd(args),
        Command::Study(StudyCommand::Source(args)) => runs::study_source_cmd(args),
        Command::Study(StudyCommand::Locking(args)) => runs::study_locking_cmd(args),
        Command::Study(StudyCommand::Vibrate(args)) => runs::study_vibrate_cmd(args),
        Command::Study(StudyCommand::Buckle(args)) => runs::study_buckle_cmd(args),
        Command::Study(StudyCommand::BuckleThickness(args)) => {
            runs::study_buckle_thickness_cmd(args)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("MFDPLATE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run_mesh(args: MeshArgs) -> Result<(), Box<dyn std::error::Error>> {
    let mesh = generate_mesh(args.family.0, args.n, args.seed)?;
    let report = mesh.validate();
    println!(
        "{} n={}: {} vertices, {} edges, {} cells, h = {:.6}",
        args.family.0,
        args.n,
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_cells(),
        mesh.mesh_size()
    );
    println!("validation: {}", report.summary());
    if let Some(path) = args.out {
        export_mesh(&mesh, &path)?;
        println!("wrote {}", path.display());
    }
    if !report.is_valid() {
        return Err("mesh failed validation".into());
    }
    Ok(())
}
