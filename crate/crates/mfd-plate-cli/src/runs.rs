//! Implementations of the `solve` and `study` subcommands.

use crate::config::ConfigFile;
use crate::output::{Field, Table};
use crate::vtk::write_vtk;
use clap::Args;
use mfd_plate::assembly::{
    assemble_buckling, assemble_load, assemble_mass, assemble_stiffness,
};
use mfd_plate::local_forms::{MaterialParams, SigmaTensor};
use mfd_plate::mesh::{generate_mesh, MeshFamily};
use mfd_plate::postproc::{
    errors, extrapolate, nondim_buckling, nondim_frequency, ManufacturedSolution,
};
use mfd_plate::solve::{recover_shear, solve_eig, solve_source, EigMode, LinearSolver};
use mfd_plate::spaces::{interp_scalar, interp_vector, BoundaryConditions, DofMap};
use nalgebra::Matrix2;
use rayon::prelude::*;
use std::path::PathBuf;

type AnyError = Box<dyn std::error::Error>;

// ---------------------------------------------------------------------------
// shared case options
// ---------------------------------------------------------------------------

/// Material, mesh and boundary options shared by every command. Values left
/// unset fall back to the config file (if any) and then to the defaults of
/// the benchmark setup: unit square, E = 1, nu = 0.3, k = 5/6, rho = 1,
/// t = 0.01, clamped everywhere.
#[derive(Args, Clone, Debug, Default)]
pub struct CaseArgs {
    /// Mesh family (T1..T7).
    #[arg(long)]
    pub family: Option<String>,
    /// Elements per plate side.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed for the randomized families T3/T7.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Plate thickness.
    #[arg(long)]
    pub t: Option<f64>,
    /// Poisson ratio.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Young modulus.
    #[arg(long)]
    pub young: Option<f64>,
    /// Shear correction factor.
    #[arg(long)]
    pub k: Option<f64>,
    /// Density.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Boundary conditions: four letters from {C,S,F} for
    /// bottom/right/top/left.
    #[arg(long)]
    pub bc: Option<String>,
    /// Simple-support flavor: `soft` eliminates the deflection only, `hard`
    /// also the tangential rotation.
    #[arg(long)]
    pub support: Option<String>,
    /// Linear solver backend: `direct` or `cg`.
    #[arg(long)]
    pub solver: Option<String>,
    /// Config file with [material]/[mesh]/[bc]/[study] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Case {
    pub family: MeshFamily,
    pub n: usize,
    pub seed: Option<u64>,
    pub material: MaterialParams,
    pub bc: BoundaryConditions,
    pub solver: LinearSolver,
}

impl CaseArgs {
    pub fn resolve(&self) -> Result<Case, AnyError> {
        let cfg = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let family: MeshFamily = self
            .family
            .clone()
            .or(cfg.get("mesh.family").map(str::to_string))
            .unwrap_or_else(|| "T4".into())
            .parse()?;
        let n = match self.n {
            Some(n) => n,
            None => cfg.get_parsed("mesh.n")?.unwrap_or(32),
        };
        let seed = match self.seed {
            Some(s) => Some(s),
            None => cfg.get_parsed("mesh.seed")?,
        };
        let young = resolve_f64(self.young, &cfg, "material.young", 1.0)?;
        let nu = resolve_f64(self.nu, &cfg, "material.nu", 0.3)?;
        let t = resolve_f64(self.t, &cfg, "material.t", 0.01)?;
        let k = resolve_f64(self.k, &cfg, "material.k", 5.0 / 6.0)?;
        let rho = resolve_f64(self.rho, &cfg, "material.rho", 1.0)?;
        let material = MaterialParams::new(young, nu, t, k, rho)?;
        let bc_str = self
            .bc
            .clone()
            .or(cfg.get("bc.sides").map(str::to_string))
            .unwrap_or_else(|| "CCCC".into());
        let support = self
            .support
            .clone()
            .or(cfg.get("bc.support").map(str::to_string))
            .unwrap_or_else(|| "soft".into());
        let hard = match support.as_str() {
            "soft" => false,
            "hard" => true,
            other => return Err(format!("unknown support flavor `{other}`").into()),
        };
        let bc = BoundaryConditions::parse(&bc_str)?.with_hard_support(hard);
        let solver = match self
            .solver
            .clone()
            .unwrap_or_else(|| "direct".into())
            .as_str()
        {
            "direct" => LinearSolver::Direct,
            "cg" => LinearSolver::ConjugateGradient,
            other => return Err(format!("unknown solver `{other}`").into()),
        };
        Ok(Case {
            family,
            n,
            seed,
            material,
            bc,
            solver,
        })
    }
}

fn resolve_f64(
    flag: Option<f64>,
    cfg: &ConfigFile,
    key: &str,
    default: f64,
) -> Result<f64, AnyError> {
    Ok(match flag {
        Some(v) => v,
        None => cfg.get_parsed(key)?.unwrap_or(default),
    })
}

fn parse_sigma(spec: &str) -> Result<SigmaTensor, AnyError> {
    match spec {
        "identity" => Ok(SigmaTensor::identity()),
        "uniaxial" => Ok(SigmaTensor::uniaxial()),
        "shear" => Ok(SigmaTensor::shear_load()),
        explicit => {
            let parts: Vec<f64> = explicit
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("cannot parse stress spec `{explicit}`"))?;
            if parts.len() != 3 {
                return Err(format!(
                    "explicit stress needs `s11,s12,s22`, got `{explicit}`"
                )
                .into());
            }
            Ok(SigmaTensor::new(Matrix2::new(
                parts[0], parts[1], parts[1], parts[2],
            ))?)
        }
    }
}

/// `8..128` doubles from the start to the end inclusive; `8,16,24` is
/// explicit.
fn parse_ns(spec: &str) -> Result<Vec<usize>, AnyError> {
    if let Some((a, b)) = spec.split_once("..") {
        let start: usize = a.trim().parse()?;
        let end: usize = b.trim().parse()?;
        if start < 2 || end < start {
            return Err(format!("bad refinement range `{spec}`").into());
        }
        let mut out = Vec::new();
        let mut n = start;
        while n <= end {
            out.push(n);
            n *= 2;
        }
        Ok(out)
    } else {
        Ok(spec
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()?)
    }
}

fn parse_families(spec: &str) -> Result<Vec<MeshFamily>, AnyError> {
    spec.split(',')
        .map(|s| s.trim().parse::<MeshFamily>().map_err(Into::into))
        .collect()
}

fn parse_f64_list(spec: &str) -> Result<Vec<f64>, AnyError> {
    Ok(spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()?)
}

fn write_tables(table: &Table, out_dir: &Option<PathBuf>, stem: &str) -> Result<(), AnyError> {
    table.print_markdown();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        table.write_files(&dir.join(stem))?;
        println!("wrote {}/{stem}.csv and {}/{stem}.md", dir.display(), dir.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// single solves
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SourceArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Write the solution fields as legacy VTK.
    #[arg(long)]
    pub vtk: Option<PathBuf>,
    /// Write the errors as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Dump the assembled stiffness in coordinate text format.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

struct SourceRun {
    h: f64,
    errors: mfd_plate::postproc::SourceErrors,
}

fn run_source_case(case: &Case) -> Result<SourceRun, AnyError> {
    let mesh = generate_mesh(case.family, case.n, case.seed)?;
    let ms = ManufacturedSolution::new(&case.material);
    let dm = DofMap::build(&mesh, &case.bc);
    let a = assemble_stiffness(&mesh, &dm, &case.material)?;
    let f = assemble_load(&mesh, &dm, |p| ms.load(p))?;
    let sol = solve_source(&a, &f, &dm, case.solver)?;
    let wi = interp_scalar(|p| ms.deflection(p), &mesh);
    let bi = interp_vector(|p| ms.rotation(p), &mesh);
    let e = errors(&sol.rotations, &sol.deflection, &bi, &wi, &mesh, &case.material)?;
    Ok(SourceRun {
        h: mesh.mesh_size(),
        errors: e,
    })
}

pub fn solve_source_cmd(args: SourceArgs) -> Result<(), AnyError> {
    let case = args.case.resolve()?;
    let mesh = generate_mesh(case.family, case.n, case.seed)?;
    let ms = ManufacturedSolution::new(&case.material);
    let dm = DofMap::build(&mesh, &case.bc);
    let a = assemble_stiffness(&mesh, &dm, &case.material)?;
    if let Some(path) = &args.dump_matrix {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        a.write_coo(&mut out)?;
    }
    let f = assemble_load(&mesh, &dm, |p| ms.load(p))?;
    let sol = solve_source(&a, &f, &dm, case.solver)?;
    let wi = interp_scalar(|p| ms.deflection(p), &mesh);
    let bi = interp_vector(|p| ms.rotation(p), &mesh);
    let e = errors(&sol.rotations, &sol.deflection, &bi, &wi, &mesh, &case.material)?;
    println!(
        "{} n={} t={}: e(b)0 = {:.6e}, e(w)0 = {:.6e}, e(b)1 = {:.6e}, e(w)1 = {:.6e}",
        case.family, case.n, case.material.thickness, e.rot_inf, e.w_inf, e.rot_energy, e.w_energy
    );
    if let Some(path) = &args.csv {
        let mut table = Table::new(
            "source errors",
            &["family", "n", "h", "t", "e_b0", "e_w0", "e_b1", "e_w1"],
        );
        table.push_row(vec![
            Field::text(case.family.name()),
            Field::Int(case.n as i64),
            Field::Number(mesh.mesh_size()),
            Field::Number(case.material.thickness),
            Field::Number(e.rot_inf),
            Field::Number(e.w_inf),
            Field::Number(e.rot_energy),
            Field::Number(e.w_energy),
        ]);
        let mut out = std::fs::File::create(path)?;
        table.write_csv(&mut out)?;
    }
    if let Some(path) = &args.vtk {
        let shear = recover_shear(&sol.rotations, &sol.deflection, &case.material, &mesh);
        write_vtk(path, &mesh, &sol.deflection, &sol.rotations, Some(&shear))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct VibrateArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Number of modes to compute.
    #[arg(long, default_value_t = 4)]
    pub modes: usize,
    /// Write each mode shape as `<stem>-<i>.vtk`.
    #[arg(long)]
    pub vtk: Option<PathBuf>,
    /// Write frequencies as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn solve_vibrate_cmd(args: VibrateArgs) -> Result<(), AnyError> {
    let case = args.case.resolve()?;
    let mesh = generate_mesh(case.family, case.n, case.seed)?;
    let dm = DofMap::build(&mesh, &case.bc);
    let a = assemble_stiffness(&mesh, &dm, &case.material)?;
    let b = assemble_mass(&mesh, &dm, &case.material)?;
    let spec = solve_eig(&a, &b, args.modes, EigMode::Vibration, &dm)?;
    let omegas: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&l| nondim_frequency(l, &case.material, 1.0))
        .collect::<Result<_, _>>()?;
    println!(
        "{} n={} t={} {}: frequencies {}",
        case.family,
        case.n,
        case.material.thickness,
        case.bc,
        omegas
            .iter()
            .map(|w| format!("{w:.6}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if let Some(path) = &args.csv {
        let mut table = Table::new("frequencies", &["mode", "lambda", "omega"]);
        for (i, (&l, &w)) in spec.eigenvalues.iter().zip(&omegas).enumerate() {
            table.push_row(vec![
                Field::Int((i + 1) as i64),
                Field::Number(l),
                Field::Number(w),
            ]);
        }
        let mut out = std::fs::File::create(path)?;
        table.write_csv(&mut out)?;
    }
    write_mode_shapes(&args.vtk, &mesh, &spec)?;
    Ok(())
}

fn write_mode_shapes(
    stem: &Option<PathBuf>,
    mesh: &mfd_plate::mesh::PolygonalMesh,
    spec: &mfd_plate::solve::Spectrum,
) -> Result<(), AnyError> {
    if let Some(stem) = stem {
        for (i, (rot, w)) in spec.modes.iter().enumerate() {
            let base = stem.with_extension("");
            let path = PathBuf::from(format!("{}-{}.vtk", base.display(), i + 1));
            write_vtk(&path, mesh, w, rot, None)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct BuckleArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Stress state: identity, uniaxial, shear or `s11,s12,s22`.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    /// Write each mode shape as `<stem>-<i>.vtk`.
    #[arg(long)]
    pub vtk: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn solve_buckle_cmd(args: BuckleArgs) -> Result<(), AnyError> {
    let case = args.case.resolve()?;
    let sigma = parse_sigma(&args.sigma)?;
    let mesh = generate_mesh(case.family, case.n, case.seed)?;
    let dm = DofMap::build(&mesh, &case.bc);
    let a = assemble_stiffness(&mesh, &dm, &case.material)?;
    let b = assemble_buckling(&mesh, &dm, &sigma)?;
    let spec = solve_eig(&a, &b, args.modes, EigMode::Buckling, &dm)?;
    let ks: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&l| nondim_buckling(l, &case.material, 1.0))
        .collect::<Result<_, _>>()?;
    println!(
        "{} n={} t={} {} sigma={}: K {}",
        case.family,
        case.n,
        case.material.thickness,
        case.bc,
        args.sigma,
        ks.iter()
            .map(|k| format!("{k:.6}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if let Some(path) = &args.csv {
        let mut table = Table::new("buckling intensities", &["mode", "lambda", "K"]);
        for (i, (&l, &k)) in spec.eigenvalues.iter().zip(&ks).enumerate() {
            table.push_row(vec![
                Field::Int((i + 1) as i64),
                Field::Number(l),
                Field::Number(k),
            ]);
        }
        let mut out = std::fs::File::create(path)?;
        table.write_csv(&mut out)?;
    }
    write_mode_shapes(&args.vtk, &mesh, &spec)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// studies
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct StudySourceArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Families to sweep, comma-separated.
    #[arg(long, default_value = "T4")]
    pub families: String,
    /// Refinements: `8..64` (doubling) or a comma list.
    #[arg(long, default_value = "8..64")]
    pub ns: String,
    /// Directory for the CSV/Markdown artifacts.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn study_source_cmd(args: StudySourceArgs) -> Result<(), AnyError> {
    let base = args.case.resolve()?;
    let families = parse_families(&args.families)?;
    let ns = parse_ns(&args.ns)?;

    let mut jobs: Vec<(MeshFamily, usize)> = Vec::new();
    for &f in &families {
        for &n in &ns {
            jobs.push((f, n));
        }
    }
    let results: Vec<(MeshFamily, usize, Result<SourceRun, String>)> = jobs
        .par_iter()
        .map(|&(family, n)| {
            let mut case = base.clone();
            case.family = family;
            case.n = n;
            let run = run_source_case(&case).map_err(|e| e.to_string());
            (family, n, run)
        })
        .collect();

    let mut table = Table::new(
        format!("source convergence, t = {}", base.material.thickness),
        &[
            "family", "n", "h", "e_b0", "rc_b0", "e_w0", "rc_w0", "e_b1", "rc_b1", "e_w1",
            "rc_w1",
        ],
    );
    for family in &families {
        let mut prev: Option<(f64, mfd_plate::postproc::SourceErrors)> = None;
        for &n in &ns {
            let entry = results
                .iter()
                .find(|(f, m, _)| f == family && *m == n)
                .unwrap();
            match &entry.2 {
                Ok(run) => {
                    let e = &run.errors;
                    let rc = |now: f64, prev_e: Option<f64>, h_prev: Option<f64>| match (
                        prev_e, h_prev,
                    ) {
                        (Some(pe), Some(ph)) => Field::Number(
                            mfd_plate::postproc::convergence_rate(pe, now, ph, run.h)
                                .unwrap_or(f64::NAN),
                        ),
                        _ => Field::Empty,
                    };
                    let (pe, ph) = match &prev {
                        Some((h, e)) => (Some(*e), Some(*h)),
                        None => (None, None),
                    };
                    table.push_row(vec![
                        Field::text(family.name()),
                        Field::Int(n as i64),
                        Field::Number(run.h),
                        Field::Number(e.rot_inf),
                        rc(e.rot_inf, pe.as_ref().map(|x| x.rot_inf), ph),
                        Field::Number(e.w_inf),
                        rc(e.w_inf, pe.as_ref().map(|x| x.w_inf), ph),
                        Field::Number(e.rot_energy),
                        rc(e.rot_energy, pe.as_ref().map(|x| x.rot_energy), ph),
                        Field::Number(e.w_energy),
                        rc(e.w_energy, pe.as_ref().map(|x| x.w_energy), ph),
                    ]);
                    prev = Some((run.h, *e));
                }
                Err(msg) => {
                    let mut row = vec![
                        Field::text(family.name()),
                        Field::Int(n as i64),
                        Field::text(format!("failed: {msg}")),
                    ];
                    row.extend(std::iter::repeat_with(|| Field::Empty).take(8));
                    table.push_row(row);
                    prev = None;
                }
            }
        }
    }
    write_tables(&table, &args.out_dir, "study-source")
}

#[derive(Args, Debug)]
pub struct StudyLockingArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = "T4")]
    pub families: String,
    #[arg(long, default_value = "8..64")]
    pub ns: String,
    /// Thicknesses to sweep.
    #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5")]
    pub ts: String,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn study_locking_cmd(args: StudyLockingArgs) -> Result<(), AnyError> {
    let base = args.case.resolve()?;
    let families = parse_families(&args.families)?;
    let ns = parse_ns(&args.ns)?;
    let ts = parse_f64_list(&args.ts)?;

    let mut jobs: Vec<(MeshFamily, usize, f64)> = Vec::new();
    for &f in &families {
        for &n in &ns {
            for &t in &ts {
                jobs.push((f, n, t));
            }
        }
    }
    let results: Vec<((MeshFamily, usize, f64), Result<f64, String>)> = jobs
        .par_iter()
        .map(|&(family, n, t)| {
            let mut case = base.clone();
            case.family = family;
            case.n = n;
            case.material.thickness = t;
            let val = run_source_case(&case)
                .map(|r| r.errors.w_energy)
                .map_err(|e| e.to_string());
            ((family, n, t), val)
        })
        .collect();

    let mut columns = vec!["family".to_string(), "n".to_string()];
    columns.extend(ts.iter().map(|t| format!("t={t:.0e}")));
    let columns_ref: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new("thickness robustness of e(w)1", &columns_ref);
    for &family in &families {
        for &n in &ns {
            let mut row = vec![Field::text(family.name()), Field::Int(n as i64)];
            for &t in &ts {
                let entry = results
                    .iter()
                    .find(|((f, m, tt), _)| *f == family && *m == n && *tt == t)
                    .unwrap();
                row.push(match &entry.1 {
                    Ok(v) => Field::Number(*v),
                    Err(_) => Field::Empty,
                });
            }
            table.push_row(row);
        }
    }
    write_tables(&table, &args.out_dir, "study-locking")
}

#[derive(Args, Debug)]
pub struct StudyVibrateArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = "T4")]
    pub families: String,
    #[arg(long, default_value = "16..64")]
    pub ns: String,
    #[arg(long, default_value_t = 4)]
    pub modes: usize,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn study_vibrate_cmd(args: StudyVibrateArgs) -> Result<(), AnyError> {
    let base = args.case.resolve()?;
    let families = parse_families(&args.families)?;
    let ns = parse_ns(&args.ns)?;
    let modes = args.modes;

    let run = |family: MeshFamily, n: usize| -> Result<(f64, Vec<f64>), String> {
        let mesh = generate_mesh(family, n, base.seed).map_err(|e| e.to_string())?;
        let dm = DofMap::build(&mesh, &base.bc);
        let a = assemble_stiffness(&mesh, &dm, &base.material).map_err(|e| e.to_string())?;
        let b = assemble_mass(&mesh, &dm, &base.material).map_err(|e| e.to_string())?;
        let spec =
            solve_eig(&a, &b, modes, EigMode::Vibration, &dm).map_err(|e| e.to_string())?;
        let omegas = spec
            .eigenvalues
            .iter()
            .map(|&l| nondim_frequency(l, &base.material, 1.0).map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()?;
        Ok((mesh.mesh_size(), omegas))
    };
    let table = spectral_study_table(
        format!(
            "vibration frequencies, {} t = {}",
            base.bc, base.material.thickness
        ),
        "omega",
        &families,
        &ns,
        modes,
        run,
    );
    write_tables(&table, &args.out_dir, "study-vibrate")
}

#[derive(Args, Debug)]
pub struct StudyBuckleArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = "T4")]
    pub families: String,
    #[arg(long, default_value = "16..64")]
    pub ns: String,
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn study_buckle_cmd(args: StudyBuckleArgs) -> Result<(), AnyError> {
    let base = args.case.resolve()?;
    let families = parse_families(&args.families)?;
    let ns = parse_ns(&args.ns)?;
    let sigma = parse_sigma(&args.sigma)?;
    let modes = args.modes;

    let run = |family: MeshFamily, n: usize| -> Result<(f64, Vec<f64>), String> {
        let mesh = generate_mesh(family, n, base.seed).map_err(|e| e.to_string())?;
        let dm = DofMap::build(&mesh, &base.bc);
        let a = assemble_stiffness(&mesh, &dm, &base.material).map_err(|e| e.to_string())?;
        let b = assemble_buckling(&mesh, &dm, &sigma).map_err(|e| e.to_string())?;
        let spec = solve_eig(&a, &b, modes, EigMode::Buckling, &dm).map_err(|e| e.to_string())?;
        let ks = spec
            .eigenvalues
            .iter()
            .map(|&l| nondim_buckling(l, &base.material, 1.0).map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()?;
        Ok((mesh.mesh_size(), ks))
    };
    let table = spectral_study_table(
        format!(
            "buckling intensities, {} t = {} sigma = {}",
            base.bc, base.material.thickness, args.sigma
        ),
        "K",
        &families,
        &ns,
        modes,
        run,
    );
    write_tables(&table, &args.out_dir, "study-buckle")
}

/// Shared table layout for the eigenvalue studies: one row per (family,
/// mode), one column per refinement, then the fitted order and the
/// extrapolated limit.
fn spectral_study_table(
    title: String,
    quantity: &str,
    families: &[MeshFamily],
    ns: &[usize],
    modes: usize,
    run: impl Fn(MeshFamily, usize) -> Result<(f64, Vec<f64>), String> + Sync,
) -> Table {
    let mut jobs: Vec<(MeshFamily, usize)> = Vec::new();
    for &f in families {
        for &n in ns {
            jobs.push((f, n));
        }
    }
    let results: Vec<((MeshFamily, usize), Result<(f64, Vec<f64>), String>)> = jobs
        .par_iter()
        .map(|&(f, n)| ((f, n), run(f, n)))
        .collect();

    let mut columns = vec!["family".to_string(), "mode".to_string()];
    columns.extend(ns.iter().map(|n| format!("n={n}")));
    columns.push("order".to_string());
    columns.push("extrap".to_string());
    let columns_ref: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(title, &columns_ref);

    for &family in families {
        for mode in 0..modes {
            let mut row = vec![
                Field::text(family.name()),
                Field::text(format!("{quantity}{}", mode + 1)),
            ];
            let mut hs = Vec::new();
            let mut vals = Vec::new();
            for &n in ns {
                let entry = results
                    .iter()
                    .find(|((f, m), _)| *f == family && *m == n)
                    .unwrap();
                match &entry.1 {
                    Ok((h, v)) if v.len() > mode => {
                        row.push(Field::Number(v[mode]));
                        hs.push(*h);
                        vals.push(v[mode]);
                    }
                    _ => row.push(Field::Empty),
                }
            }
            if vals.len() >= 3 {
                match extrapolate(&vals, &hs) {
                    Ok(fit) => {
                        row.push(Field::Number(fit.order));
                        row.push(Field::Number(fit.limit));
                    }
                    Err(_) => {
                        row.push(Field::Empty);
                        row.push(Field::Empty);
                    }
                }
            } else {
                row.push(Field::Empty);
                row.push(Field::Empty);
            }
            table.push_row(row);
        }
    }
    table
}

#[derive(Args, Debug)]
pub struct StudyBuckleThicknessArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, default_value = "T4")]
    pub families: String,
    #[arg(long, default_value = "16..64")]
    pub ns: String,
    #[arg(long, default_value = "1e-1,1e-2,1e-3,1e-4")]
    pub ts: String,
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn study_buckle_thickness_cmd(args: StudyBuckleThicknessArgs) -> Result<(), AnyError> {
    let base = args.case.resolve()?;
    let families = parse_families(&args.families)?;
    let ns = parse_ns(&args.ns)?;
    let ts = parse_f64_list(&args.ts)?;
    let sigma = parse_sigma(&args.sigma)?;

    let mut jobs: Vec<(MeshFamily, f64, usize)> = Vec::new();
    for &f in &families {
        for &t in &ts {
            for &n in &ns {
                jobs.push((f, t, n));
            }
        }
    }
    let results: Vec<((MeshFamily, f64, usize), Result<(f64, f64), String>)> = jobs
        .par_iter()
        .map(|&(family, t, n)| {
            let key = (family, t, n);
            let out = (|| -> Result<(f64, f64), String> {
                let mut mat = base.material;
                mat.thickness = t;
                let mesh = generate_mesh(family, n, base.seed).map_err(|e| e.to_string())?;
                let dm = DofMap::build(&mesh, &base.bc);
                let a = assemble_stiffness(&mesh, &dm, &mat).map_err(|e| e.to_string())?;
                let b = assemble_buckling(&mesh, &dm, &sigma).map_err(|e| e.to_string())?;
                let spec =
                    solve_eig(&a, &b, 1, EigMode::Buckling, &dm).map_err(|e| e.to_string())?;
                let k = nondim_buckling(spec.eigenvalues[0], &mat, 1.0)
                    .map_err(|e| e.to_string())?;
                Ok((mesh.mesh_size(), k))
            })();
            (key, out)
        })
        .collect();

    let mut columns = vec!["family".to_string(), "t".to_string()];
    columns.extend(ns.iter().map(|n| format!("n={n}")));
    columns.push("order".to_string());
    columns.push("extrap".to_string());
    let columns_ref: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(
        format!("lowest buckling intensity across thicknesses, {}", base.bc),
        &columns_ref,
    );

    for &family in &families {
        let mut limits: Vec<(f64, f64)> = Vec::new();
        for &t in &ts {
            let mut row = vec![Field::text(family.name()), Field::Number(t)];
            let mut hs = Vec::new();
            let mut vals = Vec::new();
            for &n in &ns {
                let entry = results
                    .iter()
                    .find(|((f, tt, m), _)| *f == family && *tt == t && *m == n)
                    .unwrap();
                match &entry.1 {
                    Ok((h, k)) => {
                        row.push(Field::Number(*k));
                        hs.push(*h);
                        vals.push(*k);
                    }
                    Err(_) => row.push(Field::Empty),
                }
            }
            if vals.len() >= 3 {
                match extrapolate(&vals, &hs) {
                    Ok(fit) => {
                        row.push(Field::Number(fit.order));
                        row.push(Field::Number(fit.limit));
                        limits.push((t, fit.limit));
                    }
                    Err(_) => {
                        row.push(Field::Empty);
                        row.push(Field::Empty);
                    }
                }
            } else {
                row.push(Field::Empty);
                row.push(Field::Empty);
            }
            table.push_row(row);
        }
        // thin-plate limit row from the per-thickness extrapolations
        let mut row = vec![Field::text(family.name()), Field::text("0 (extrap.)")];
        for _ in ns.iter() {
            row.push(Field::Empty);
        }
        row.push(Field::Empty);
        if limits.len() >= 3 {
            let ts_fit: Vec<f64> = limits.iter().map(|(t, _)| *t).collect();
            let ks_fit: Vec<f64> = limits.iter().map(|(_, k)| *k).collect();
            match extrapolate(&ks_fit, &ts_fit) {
                Ok(fit) => row.push(Field::Number(fit.limit)),
                Err(_) => row.push(Field::Empty),
            }
        } else {
            row.push(Field::Empty);
        }
        table.push_row(row);
    }
    write_tables(&table, &args.out_dir, "study-buckle-thickness")
}
