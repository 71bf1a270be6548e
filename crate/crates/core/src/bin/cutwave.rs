use clap::{Args, Parser, Subcommand};
use cutwave::basis::SpaceVariant;
use cutwave::dynamics::{write_snapshot, SnapshotFormat, Trajectory};
use cutwave::experiments::{
    condition_sweep, fill_rates, outer_errors, run_aligned_reference, run_inner, solve_outer,
    write_csv, cfl_row, Discretization, ErrorRow, GeometryMode, InnerOptions, Manifest,
    OuterOptions, SetupOptions, DEFAULT_MODE,
};
use cutwave::forms::WeightMode;
use cutwave::spectra::LanczosOptions;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cutwave", version, about = "Cut finite element wave solver and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bessel mode in the unit disk, errors against the exact solution.
    Inner(Common),
    /// Pulse scattered by the star, errors against a finer run.
    Outer {
        #[command(flatten)]
        common: Common,
        /// Cell size of the reference run (default: half the smallest h).
        #[arg(long)]
        h_ref: Option<f64>,
    },
    /// C_FL and mass conditioning without immersed boundary.
    Aligned(Common),
    /// C_FL with and without immersed boundary.
    Cfl(Common),
    /// Mass conditioning of a disk placed near a grid vertex.
    CondSweep {
        #[command(flatten)]
        common: Common,
        /// Offsets of the circle from the vertex, in units of h.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1e-2, 1e-4, 1e-6])]
        offsets: Vec<f64>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Polynomial orders.
    #[arg(long = "p", value_delimiter = ',', default_values_t = [1usize, 2, 3])]
    p: Vec<usize>,
    /// Cell sizes, comma separated.
    #[arg(long = "h", value_delimiter = ',')]
    h: Vec<f64>,
    /// full or reduced.
    #[arg(long, default_value = "full")]
    space: SpaceVariant,
    /// analytic or projected.
    #[arg(long, default_value = "projected")]
    geometry: GeometryMode,
    #[arg(long)]
    gamma_m: Option<f64>,
    #[arg(long)]
    gamma_a: Option<f64>,
    #[arg(long)]
    gamma_d: Option<f64>,
    /// Ghost-penalty weights: paper (scaled) or raw.
    #[arg(long, default_value = "paper")]
    weights: WeightMode,
    /// Final time override.
    #[arg(long)]
    tf: Option<f64>,
    /// Number of snapshots per run.
    #[arg(long, default_value_t = 0)]
    snapshots: usize,
    /// csv or vtk.
    #[arg(long, default_value = "csv")]
    snapshot_format: SnapshotFormat,
    /// Bessel mode index for the disk problem.
    #[arg(long, default_value_t = DEFAULT_MODE)]
    mode: usize,
    /// Seed of the Lanczos start vectors.
    #[arg(long, default_value_t = LanczosOptions::default().seed)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn hs(&self, default: &[f64]) -> Vec<f64> {
        let mut hs = if self.h.is_empty() { default.to_vec() } else { self.h.clone() };
        hs.sort_by(|a, b| b.total_cmp(a));
        hs
    }

    fn setup(&self, p: usize, h: f64) -> SetupOptions {
        let mut s = SetupOptions::new(p, h);
        s.variant = self.space;
        s.geometry = self.geometry;
        s.weights = self.weights;
        s.gamma_m = self.gamma_m;
        s.gamma_a = self.gamma_a;
        s.gamma_d = self.gamma_d;
        s
    }

    fn lanczos(&self) -> LanczosOptions {
        LanczosOptions {
            seed: self.seed,
            ..Default::default()
        }
    }

    fn manifest(&self, command: &str, hs: &[f64]) -> Manifest {
        let mut m = Manifest::new(command);
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        m.set("p", self.p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .set("h", list(hs))
            .set("space", format!("{:?}", self.space).to_lowercase())
            .set("geometry", format!("{:?}", self.geometry).to_lowercase())
            .set("weights", format!("{:?}", self.weights).to_lowercase())
            .set("gamma_m", opt(self.gamma_m))
            .set("gamma_a", opt(self.gamma_a))
            .set("gamma_d", opt(self.gamma_d))
            .set("tf", opt(self.tf))
            .set("snapshots", self.snapshots)
            .set("seed", self.seed);
        m
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("default".into(), |x| x.to_string())
}

fn save_snapshots(out: &Path, stem: &str, disc: &Discretization, traj: &Trajectory, format: SnapshotFormat) -> cutwave::Result<()> {
    if traj.snapshots.is_empty() {
        return Ok(());
    }
    let dir = out.join("snapshots");
    std::fs::create_dir_all(&dir)?;
    let ext = match format {
        SnapshotFormat::Csv => "csv",
        SnapshotFormat::Vtk => "vtk",
    };
    for (k, s) in traj.snapshots.iter().enumerate() {
        write_snapshot(&disc.space, &s.xi, s.t, &dir.join(format!("{stem}_{k:04}.{ext}")), format)?;
    }
    Ok(())
}

fn print_rows(title: &str, rows: &[ErrorRow]) {
    let r = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    println!("{title}");
    println!("{:>9} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}", "h", "L2", "rate", "H1", "rate", "bdry", "rate");
    for row in rows {
        println!(
            "{:>9.5} {:>11.3e} {:>6} {:>11.3e} {:>6} {:>11.3e} {:>6}",
            row.h, row.e_l2, r(row.rate_l2), row.e_h1, r(row.rate_h1), row.e_boundary, r(row.rate_boundary)
        );
    }
}

fn inner(c: &Common) -> cutwave::Result<()> {
    let hs = c.hs(&[0.12, 0.06, 0.03, 0.015]);
    let mut manifest = c.manifest("inner", &hs);
    manifest.set("mode", c.mode);
    for &p in &c.p {
        let mut rows = Vec::new();
        for &h in &hs {
            let mut o = InnerOptions::new(p, h);
            o.setup = c.setup(p, h);
            o.mode = c.mode;
            o.t_final = c.tf;
            o.snapshots = c.snapshots;
            o.check_stability = true;
            let run = run_inner(&o)?;
            manifest.set(&format!("tau_p{p}_h{h}"), run.tau).set("t_final", run.t_final);
            save_snapshots(&c.out, &format!("inner_p{p}_h{h}"), &run.disc, &run.trajectory, c.snapshot_format)?;
            rows.push(run.row());
        }
        fill_rates(&mut rows);
        let space = format!("{:?}", c.space).to_lowercase();
        print_rows(&format!("inner problem, p = {p}, {space} space"), &rows);
        write_csv(&c.out.join(format!("inner_p{p}_{space}.csv")), &rows)?;
    }
    manifest.write(&c.out.join("inner_manifest.txt"))
}

fn outer(c: &Common, h_ref: Option<f64>) -> cutwave::Result<()> {
    let hs = c.hs(&[0.15, 0.075, 0.0375]);
    let h_ref = h_ref.unwrap_or(0.5 * hs.last().copied().unwrap_or(0.0375));
    let mut manifest = c.manifest("outer", &hs);
    manifest.set("h_ref", h_ref);
    for &p in &c.p {
        let mut base = OuterOptions::new(p, h_ref);
        base.setup = c.setup(p, h_ref);
        if let Some(tf) = c.tf {
            base.t_final = tf;
        }
        base.check_stability = true;
        let (ref_disc, ref_traj, _) = solve_outer(&base)?;
        let mut rows = Vec::new();
        for &h in &hs {
            let mut o = base.clone();
            o.setup.h = h;
            o.snapshots = c.snapshots;
            let (disc, traj, tau) = solve_outer(&o)?;
            manifest.set(&format!("tau_p{p}_h{h}"), tau);
            save_snapshots(&c.out, &format!("outer_p{p}_h{h}"), &disc, &traj, c.snapshot_format)?;
            rows.push(ErrorRow::new(h, outer_errors(&disc, &traj.state, &ref_disc, &ref_traj.state)?));
        }
        fill_rates(&mut rows);
        print_rows(&format!("outer problem, p = {p}, reference h = {h_ref}"), &rows);
        write_csv(&c.out.join(format!("outer_p{p}.csv")), &rows)?;
    }
    manifest.write(&c.out.join("outer_manifest.txt"))
}

fn aligned(c: &Common) -> cutwave::Result<()> {
    let hs = c.hs(&[0.12, 0.06, 0.03]);
    let mut rows = Vec::new();
    for &p in &c.p {
        for &h in &hs {
            let d = run_aligned_reference(p, h, c.lanczos())?;
            println!(
                "p={p} h={h}: C_FL={:.4} kappa(M)={:.4e} lmin/h^2={:.4e} lmax/h^2={:.4e}",
                d.cfl, d.kappa, d.lambda_min_scaled, d.lambda_max_scaled
            );
            rows.push(d);
        }
    }
    write_csv(&c.out.join("aligned.csv"), &rows)?;
    c.manifest("aligned", &hs).write(&c.out.join("aligned_manifest.txt"))
}

fn cfl(c: &Common) -> cutwave::Result<()> {
    let hs = c.hs(&[0.12, 0.06, 0.03]);
    let mut rows = Vec::new();
    for &p in &c.p {
        for &h in &hs {
            let r = cfl_row(&c.setup(p, h), c.lanczos())?;
            println!("p={p} h={h}: aligned {:.4} immersed {:.4}", r.cfl_aligned, r.cfl_immersed);
            rows.push(r);
        }
    }
    write_csv(&c.out.join("cfl.csv"), &rows)?;
    c.manifest("cfl", &hs).write(&c.out.join("cfl_manifest.txt"))
}

fn cond_sweep(c: &Common, offsets: &[f64]) -> cutwave::Result<()> {
    let hs = c.hs(&[0.06]);
    let rows = condition_sweep(&c.setup(1, hs[0]), &c.p, &hs, offsets, c.lanczos());
    for r in &rows {
        println!(
            "p={} h={} offset={:e}: kappa {:.3e} (unstabilized {:.3e}) {}",
            r.p, r.h, r.offset, r.kappa_stabilized, r.kappa_unstabilized, r.note
        );
    }
    write_csv(&c.out.join("cond_sweep.csv"), &rows)?;
    let mut m = c.manifest("cond-sweep", &hs);
    m.set("offsets", offsets.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    m.write(&c.out.join("cond_sweep_manifest.txt"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Inner(c) | Command::Aligned(c) | Command::Cfl(c) => c,
        Command::Outer { common, .. } | Command::CondSweep { common, .. } => common,
    };
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("cannot create {}: {e}", common.out.display());
        return ExitCode::FAILURE;
    }
    let result = match &cli.command {
        Command::Inner(c) => inner(c),
        Command::Outer { common, h_ref } => outer(common, *h_ref),
        Command::Aligned(c) => aligned(c),
        Command::Cfl(c) => cfl(c),
        Command::CondSweep { common, offsets } => cond_sweep(common, offsets),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
