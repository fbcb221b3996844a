//! Subcommands of the `euler2d` binary. Every table goes to `--out` or stdout.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use euler2d::analysis::bahouri_chemin::fit_bc_constant;
use euler2d::analysis::keylemma::{key_lemma_decompose_many, KeyLemmaConfig};
use euler2d::analysis::losing::{closed_form, LosingTracker};
use euler2d::analysis::norms::{norm_report, NormConfig, PolarConfig};
use euler2d::analysis::occupancy::{angular_occupancy_with, DEFAULT_ANGLES};
use euler2d::evolution::{evolve_with, ConservedQuantities, EvolveConfig};
use euler2d::fields::{log_radii, read_vrt1, write_vrt1};
use euler2d::flow_map::{advect_particles, FlowState, SegmentSpec, SnapshotProvider};
use euler2d::initial_data::{
    make_bahouri_chemin, make_bump_data, make_continuum_data, BumpDataParams, ContinuumDataParams,
};
use euler2d::spectral::velocity_from_vorticity;
use euler2d::{Grid, Point, Symmetry, VorticityField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{HarnessError, Result};
use crate::experiments::run_experiment;
use crate::table::{Cell, Table};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build initial vorticity and write it as a VRT1 snapshot.
    MakeData(MakeDataArgs),
    /// Evolve a snapshot, writing the snapshot series and conserved.csv.
    Evolve(EvolveArgs),
    /// Advect particles through a snapshot series.
    Trace(TraceArgs),
    /// Key Lemma decomposition at points of one snapshot.
    Keylemma(KeylemmaArgs),
    /// Norm report per snapshot.
    Norms(NormsArgs),
    /// Angular occupancy per snapshot and radius.
    Occupancy(OccupancyArgs),
    /// Velocity asymptotics of the Bahouri-Chemin patch.
    BcFit(BcFitArgs),
    /// Losing-estimate ratio along a snapshot series.
    Losing(LosingArgs),
    /// Run an experiment sweep.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DataKind {
    Bump,
    Continuum,
    BahouriChemin,
    SingleMode,
}

#[derive(Debug, Args)]
pub struct MakeDataArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    /// Grid size; defaults to the smallest admissible size for bump data.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub n: u32,
    #[arg(long, default_value_t = 0.55)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, short = 'i')]
    pub input: PathBuf,
    /// Experiment config file; only its [time] section is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub cfl_max: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Output directory for snap_NNNNN.vrt1 and conserved.csv.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Directory of VRT1 snapshots (or individual files), in time order by name.
    #[arg(long, required = true, num_args = 1..)]
    pub snapshots: Vec<PathBuf>,
    /// Points as "x1,x2;x1,x2;...".
    #[arg(long)]
    pub points: Option<String>,
    /// Trace the diagonal segment for this N instead.
    #[arg(long)]
    pub segment: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeylemmaArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub points: Option<String>,
    /// Number of seeded random points in [0.005, 0.25]^2.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub snapshots: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.03, 0.1])]
    pub deltas: Vec<f64>,
    /// (s, p) pairs as "s:p", comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub wsp: Vec<String>,
    /// Also report the radial and angular parts of |grad w|_2^2.
    #[arg(long)]
    pub polar: bool,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OccupancyArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub snapshots: Vec<PathBuf>,
    #[arg(long)]
    pub r_lo: f64,
    #[arg(long)]
    pub r_hi: f64,
    #[arg(long, default_value_t = 48)]
    pub radii: usize,
    #[arg(long, default_value_t = 0.5)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_ANGLES)]
    pub angles: usize,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BcFitArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [512usize, 1024])]
    pub grids: Vec<usize>,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LosingArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub snapshots: Vec<PathBuf>,
    #[arg(long, default_value_t = euler2d::analysis::constants::LOSING_C)]
    pub c: f64,
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::MakeData(a) => make_data(&a),
        Command::Evolve(a) => evolve(&a),
        Command::Trace(a) => emit(&trace(&a)?, a.out.as_deref()),
        Command::Keylemma(a) => emit(&keylemma(&a)?, a.out.as_deref()),
        Command::Norms(a) => emit(&norms(&a)?, a.out.as_deref()),
        Command::Occupancy(a) => emit(&occupancy(&a)?, a.out.as_deref()),
        Command::BcFit(a) => emit(&bc_fit(&a)?, a.out.as_deref()),
        Command::Losing(a) => emit(&losing(&a)?, a.out.as_deref()),
        Command::Sweep(a) => {
            let cfg = ExperimentConfig::load(a.config.as_deref(), &a.overrides)?;
            let out = run_experiment(&cfg)?;
            for (_, p) in &out.tables {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn emit(t: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => t.write(p),
        None => {
            std::io::stdout().write_all(&t.to_bytes()?)?;
            Ok(())
        }
    }
}

pub fn read_snapshot(path: &Path) -> Result<VorticityField> {
    Ok(read_vrt1(BufReader::new(File::open(path)?))?)
}

pub fn write_snapshot(path: &Path, w: &VorticityField) -> Result<()> {
    let tmp = path.with_extension("vrt1.tmp");
    let mut f = BufWriter::new(File::create(&tmp)?);
    write_vrt1(&mut f, w)?;
    f.flush()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Expands directories into their `.vrt1` files sorted by name.
pub fn snapshot_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .filter(|f| f.extension().is_some_and(|e| e == "vrt1"))
                .collect();
            v.sort();
            out.extend(v);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(HarnessError::config("no snapshots given"));
    }
    Ok(out)
}

fn read_series(inputs: &[PathBuf]) -> Result<Vec<VorticityField>> {
    snapshot_files(inputs)?.iter().map(|p| read_snapshot(p)).collect()
}

/// Parses "x1,x2;x1,x2;...".
pub fn parse_points(s: &str) -> Result<Vec<Point>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| HarnessError::config(format!("bad point '{p}'")))?;
            match v[..] {
                [a, b] => Ok([a, b]),
                _ => Err(HarnessError::config(format!("point '{p}' needs two coordinates"))),
            }
        })
        .collect()
}

fn make_data(a: &MakeDataArgs) -> Result<()> {
    let w = match a.kind {
        DataKind::Bump => {
            let p = BumpDataParams::new(a.n)?;
            let need = p.required_grid_size();
            let m = a.m.unwrap_or(need);
            if m < need {
                return Err(HarnessError::config(format!("grid {m} below the required {need} for N={}", a.n)));
            }
            make_bump_data(p, Grid::new(m)?)?
        }
        DataKind::Continuum => {
            make_continuum_data(ContinuumDataParams::new(a.alpha, a.epsilon)?, Grid::new(a.m.unwrap_or(512))?)?
        }
        DataKind::BahouriChemin => make_bahouri_chemin(Grid::new(a.m.unwrap_or(512))?),
        DataKind::SingleMode => {
            let g = Grid::new(a.m.unwrap_or(256))?;
            let s = g.sample(|x, y| (PI * x).sin() * (PI * y).sin());
            VorticityField::from_samples(g, s, Symmetry::OddOdd, 0.0)?
        }
    };
    if let Some(dir) = a.out.parent() {
        fs::create_dir_all(dir)?;
    }
    write_snapshot(&a.out, &w)
}

fn evolve(a: &EvolveArgs) -> Result<()> {
    let base = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = EvolveConfig {
        dt: a.dt.unwrap_or(base.dt),
        t_final: a.t_final,
        nu: a.nu,
        cfl_max: a.cfl_max.unwrap_or(base.cfl_max),
        record_every: a.record_every.unwrap_or(base.record_every),
    };
    cfg.validate()?;
    let w = read_snapshot(&a.input)?;
    fs::create_dir_all(&a.out)?;
    let mut table = Table::new(ConservedQuantities::HEADER).with_schema("conserved/1");
    let mut k = 0usize;
    let res = evolve_with(&w, &cfg, |wt| {
        write_snapshot(&a.out.join(format!("snap_{k:05}.vrt1")), wt).map_err(to_core)?;
        k += 1;
        table.push(ConservedQuantities::of(wt).values().iter().map(|v| Cell::F(*v)).collect());
        Ok(())
    });
    // Written even on failure, so the series up to the failure is kept.
    table.write(&a.out.join("conserved.csv"))?;
    res?;
    Ok(())
}

fn to_core(e: HarnessError) -> euler2d::Error {
    match e {
        HarnessError::Core(e) => e,
        HarnessError::Io(e) => euler2d::Error::Io(e),
        other => euler2d::Error::Format(other.to_string()),
    }
}

fn trace(a: &TraceArgs) -> Result<Table> {
    let series = read_series(&a.snapshots)?;
    let t0 = series[0].time();
    let (points, labels): (Vec<Point>, Vec<String>) = match (&a.points, a.segment) {
        (Some(p), None) => {
            let pts = parse_points(p)?;
            let labels = (0..pts.len()).map(|i| format!("p{i}")).collect();
            (pts, labels)
        }
        (None, Some(n)) => {
            let pts = SegmentSpec::for_n(n, a.nodes)?.points();
            let labels = (0..pts.len()).map(|i| format!("s{i}")).collect();
            (pts, labels)
        }
        _ => return Err(HarnessError::config("give exactly one of --points and --segment")),
    };
    let velocities = series.iter().map(velocity_from_vorticity).collect::<euler2d::Result<Vec<_>>>()?;
    let provider = SnapshotProvider::new(velocities)?;
    let mut state = FlowState::at_time(points, t0).with_labels(labels)?;
    let mut t = Table::new(["label", "t", "x1", "x2", "phi1", "phi2", "omega_along"]).with_schema("trace/1");
    for w in &series {
        state = advect_particles(&state, &provider, a.dt, w.time())?;
        let omega = w.sample_at(&state.positions);
        for i in 0..state.len() {
            t.push(vec![
                state.label(i).into(),
                state.t.into(),
                state.launch[i][0].into(),
                state.launch[i][1].into(),
                state.positions[i][0].into(),
                state.positions[i][1].into(),
                omega[i].into(),
            ]);
        }
    }
    Ok(t)
}

fn keylemma(a: &KeylemmaArgs) -> Result<Table> {
    let w = read_snapshot(&a.snapshot)?;
    let mut pts = match &a.points {
        Some(p) => parse_points(p)?,
        None => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    pts.extend((0..a.random).map(|_| [rng.gen_range(0.005..0.25), rng.gen_range(0.005..0.25)]));
    if pts.is_empty() {
        return Err(HarnessError::config("no points: give --points or --random"));
    }
    let reps = key_lemma_decompose_many(&w, &pts, &KeyLemmaConfig::default())?;
    let mut t = Table::new([
        "t", "x1", "x2", "u1", "u2", "q", "b1", "b2", "bound_ratio1", "bound_ratio2", "dominance",
    ])
    .with_schema("keylemma/1");
    for r in &reps {
        t.push(vec![
            w.time().into(),
            r.x[0].into(),
            r.x[1].into(),
            r.velocity[0].into(),
            r.velocity[1].into(),
            r.components[0].q.into(),
            r.components[0].remainder.into(),
            r.components[1].remainder.into(),
            r.components[0].bound_ratio.into(),
            r.components[1].bound_ratio.into(),
            r.dominance().into(),
        ]);
    }
    Ok(t)
}

fn parse_wsp(v: &[String]) -> Result<Vec<(f64, f64)>> {
    v.iter()
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| HarnessError::config(format!("W^(s,p) pair '{s}' is not s:p")))?;
            let p = |x: &str| x.trim().parse::<f64>().map_err(|_| HarnessError::config(format!("bad number '{x}'")));
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn norms(a: &NormsArgs) -> Result<Table> {
    let wsp = parse_wsp(&a.wsp)?;
    let mut header = vec!["t".to_string(), "linf".into(), "h1".into()];
    header.extend(a.deltas.iter().map(|d| format!("annulus_h1_{d}")));
    header.extend(wsp.iter().map(|(s, p)| format!("wsp_{s}_{p}")));
    if a.polar {
        header.extend(["polar_radial".to_string(), "polar_angular".into()]);
    }
    let mut t = Table::new(header).with_schema("norms/1");
    for path in snapshot_files(&a.snapshots)? {
        let w = read_snapshot(&path)?;
        let cfg = NormConfig {
            wsp: wsp.clone(),
            deltas: a.deltas.clone(),
            polar: a.polar.then(|| PolarConfig::for_grid(w.grid())),
        };
        let r = norm_report(&w, &cfg)?;
        let mut row: Vec<Cell> = vec![r.t.into(), r.linf.into(), r.h1.into()];
        row.extend(r.annulus_h1_sq.iter().map(|x| Cell::F(x.1.sqrt())));
        row.extend(r.wsp.iter().map(|x| Cell::F(x.value)));
        if let Some((rad, ang)) = r.polar {
            row.extend([Cell::F(rad), Cell::F(ang)]);
        }
        t.push(row);
    }
    Ok(t)
}

fn occupancy(a: &OccupancyArgs) -> Result<Table> {
    if !(a.r_lo > 0.0 && a.r_hi > a.r_lo && a.r_hi < 1.0) || a.radii < 2 {
        return Err(HarnessError::config("need 0 < r_lo < r_hi < 1 and at least 2 radii"));
    }
    let radii = log_radii(a.r_lo, a.r_hi, a.radii);
    let mut t = Table::new(["t", "r", "measure", "haar_weight"]).with_schema("occupancy/1");
    for path in snapshot_files(&a.snapshots)? {
        let w = read_snapshot(&path)?;
        let occ = angular_occupancy_with(&w, &radii, a.level, a.angles)?;
        for ((r, m), hw) in occ.radii.iter().zip(&occ.measures).zip(occ.haar_weights()) {
            t.push(vec![occ.t.into(), (*r).into(), (*m).into(), hw.into()]);
        }
    }
    Ok(t)
}

fn bc_fit(a: &BcFitArgs) -> Result<Table> {
    let fit = fit_bc_constant(&a.grids)?;
    let mut t = Table::new(["m", "slope", "intercept", "r_squared", "slope_lo", "slope_hi", "residual_max", "points"])
        .with_schema("bc-fit/1");
    for g in &fit.per_grid {
        let (lo, hi) = g.fit.slope_band();
        t.push(vec![
            g.m.into(),
            g.fit.slope.into(),
            g.fit.intercept.into(),
            g.fit.r_squared.into(),
            lo.into(),
            hi.into(),
            g.residual_max.into(),
            g.points.into(),
        ]);
    }
    Ok(t)
}

fn losing(a: &LosingArgs) -> Result<Table> {
    if !(a.c > 0.0) {
        return Err(HarnessError::config(format!("constant {} must be positive", a.c)));
    }
    let files = snapshot_files(&a.snapshots)?;
    let w0 = read_snapshot(&files[0])?;
    let mut tracker = LosingTracker::new(&w0, vec![a.c]);
    tracker.observe(&w0);
    for p in &files[1..] {
        tracker.observe(&read_snapshot(p)?);
    }
    let mut t = Table::new(["t", "q", "ratio"]).with_schema("losing/1");
    for (time, r) in &tracker.rows {
        t.push(vec![(*time).into(), closed_form(a.c, tracker.omega_inf, *time).into(), r[0].into()]);
    }
    Ok(t)
}
