//! Sweep recipes. Each experiment is split into independent members (one per
//! N, grid size or viscosity); a member writes its row files and then a
//! `.done` marker, so an interrupted sweep resumes at the first unfinished
//! member. Combined tables are rebuilt from the parts in member order.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use euler2d::analysis::bahouri_chemin::fit_bc_constant;
use euler2d::analysis::growth::GrowthSeries;
use euler2d::analysis::keylemma::integral_term;
use euler2d::analysis::losing::{closed_form, losing_exponent_curve, LosingTracker};
use euler2d::analysis::norms::{norm_report, wsp_membership, NormConfig};
use euler2d::analysis::occupancy::angular_occupancy;
use euler2d::analysis::wedge::case_ii_wedge_diagnostic;
use euler2d::evolution::{energy_balance, evolve_with, evolve_with_tracers, prepare, EvolveConfig};
use euler2d::fields::log_radii;
use euler2d::flow_map::{check_quasi_lipschitz, FlowState, SegmentSpec};
use euler2d::initial_data::{make_bump_data, make_continuum_data, BumpDataParams, ContinuumDataParams};
use euler2d::{Grid, Point, VorticityField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::pool::{run_jobs, worker_count};
use crate::table::{Cell, Table};

pub const SCHEMA_VERSION: u32 = 1;
const SEGMENT_NODES: usize = 64;
const PROBES: usize = 16;
const OCCUPANCY_RADII: usize = 48;
const Q_TOL: f64 = 1e-4;
/// Tolerance on the losing-estimate ratio when searching the smallest admissible C.
pub const LOSING_TOL: f64 = 0.05;

/// Where the combined tables of a finished run live.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// (table name, path) in a fixed order.
    pub tables: Vec<(String, PathBuf)>,
    /// Members computed in this invocation (the rest were already done).
    pub computed: Vec<String>,
}

impl RunOutput {
    pub fn path(&self, name: &str) -> Option<&Path> {
        self.tables.iter().find(|t| t.0 == name).map(|t| t.1.as_path())
    }
}

type Parts = Vec<(&'static str, Table)>;

struct Member {
    key: String,
    run: Box<dyn Fn() -> Result<Parts> + Sync>,
}

fn schema(kind: ExperimentKind, part: &str) -> String {
    format!("{kind}/{part}/{SCHEMA_VERSION}")
}

/// Stamp written into each `.done` marker; a mismatch forces recomputation.
fn fingerprint(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = PathBuf::new();
    format!("{c:?}")
}

fn parts_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.join("parts").join(cfg.kind.name())
}

fn part_path(dir: &Path, key: &str, name: &str) -> PathBuf {
    dir.join(format!("{key}.{name}.csv"))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (members, names): (Vec<Member>, &[&str]) = match cfg.kind {
        ExperimentKind::Thm11Sweep => (thm11_members(cfg), &["rows", "summary"]),
        ExperimentKind::Thm12Run => (thm12_members(cfg), &["rows", "membership"]),
        ExperimentKind::BcCalibration => (bc_members(cfg), &["rows"]),
        ExperimentKind::LosingCheck => (losing_members(cfg), &["rows", "summary"]),
        ExperimentKind::ViscousLimit => (viscous_members(cfg), &["rows"]),
    };
    let dir = parts_dir(cfg);
    fs::create_dir_all(&dir)?;
    let stamp = fingerprint(cfg);
    let done = |m: &Member| {
        fs::read_to_string(dir.join(format!("{}.done", m.key))).is_ok_and(|s| s == stamp)
    };
    let todo: Vec<&Member> = members.iter().filter(|m| !done(m)).collect();
    let results = run_jobs(&todo, worker_count(), |m| -> Result<()> {
        let parts = (m.run)()?;
        for (name, table) in &parts {
            table.write(&part_path(&dir, &m.key, name))?;
        }
        let marker = dir.join(format!("{}.done", m.key));
        let tmp = marker.with_extension("done.tmp");
        fs::write(&tmp, &stamp)?;
        fs::rename(&tmp, &marker)?;
        Ok(())
    });
    // Combine whatever finished, so a failure still leaves usable partial tables.
    let mut tables = Vec::new();
    for name in names {
        let mut all = Table::default();
        for m in members.iter().filter(|m| done(m)) {
            all.append(Table::read(&part_path(&dir, &m.key, name))?);
        }
        let file = if *name == "rows" {
            format!("{}.csv", cfg.kind)
        } else {
            format!("{}-{name}.csv", cfg.kind)
        };
        let path = cfg.output.join(file);
        if !all.header.is_empty() {
            all.write(&path)?;
        }
        tables.push((name.to_string(), path));
    }
    let computed = todo.iter().map(|m| m.key.clone()).collect();
    results.into_iter().collect::<Result<Vec<()>>>()?;
    Ok(RunOutput { tables, computed })
}

fn evolve_cfg(cfg: &ExperimentConfig, t_final: f64, nu: f64) -> EvolveConfig {
    EvolveConfig {
        dt: cfg.dt,
        t_final,
        nu,
        cfl_max: cfg.cfl_max,
        record_every: cfg.record_every,
    }
}

fn bump(cfg: &ExperimentConfig, n: u32) -> Result<VorticityField> {
    let p = BumpDataParams::new(n)?;
    Ok(make_bump_data(p, Grid::new(cfg.grid_size(n)?)?)?)
}

/// Particles `from..from+len` of `st` as their own state.
pub fn slice_state(st: &FlowState, from: usize, len: usize) -> FlowState {
    let mut s = FlowState::at_time(st.launch[from..from + len].to_vec(), 0.0);
    s.positions = st.positions[from..from + len].to_vec();
    s.t = st.t;
    s
}

/// Seeded probe points with |x| in [N^-1, N^-1/2], away from the axes.
pub fn random_probes(n: u32, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    let nf = n as f64;
    (0..count)
        .map(|_| {
            let r = nf.powf(-rng.gen_range(0.5..1.0));
            let th = rng.gen_range(0.1..FRAC_PI_2 - 0.1);
            [r * th.cos(), r * th.sin()]
        })
        .collect()
}

fn thm11_members(cfg: &ExperimentConfig) -> Vec<Member> {
    cfg.n
        .iter()
        .map(|&n| {
            let cfg = cfg.clone();
            Member {
                key: format!("n{n:05}"),
                run: Box::new(move || thm11_job(&cfg, n)),
            }
        })
        .collect()
}

fn thm11_job(cfg: &ExperimentConfig, n: u32) -> Result<Parts> {
    let w = bump(cfg, n)?;
    let m = w.grid().size();
    let nf = n as f64;
    let t_star = cfg.t_star(n);
    let xhat = nf.powf(-7.0 / 8.0);
    let radii = log_radii(nf.powf(-5.0 / 6.0), nf.powf(-4.0 / 6.0), OCCUPANCY_RADII);
    let (lo, hi) = (radii[0], radii[OCCUPANCY_RADII - 1]);
    let mut pts = SegmentSpec::for_n(nf, SEGMENT_NODES)?.points();
    pts.extend(random_probes(n, PROBES, cfg.seed));
    let mut tracers = FlowState::new(pts);
    let pairs: Vec<(usize, Option<usize>)> = (0..PROBES).map(|i| (i, None)).collect();

    let mut rows = Table::new([
        "n", "m", "t", "growth_ratio", "h1", "linf", "occupancy_mean", "case_i_fraction", "case_i",
        "case_ii", "q_xhat", "wedge_min_slope", "flow_lower", "flow_upper",
    ])
    .with_schema(schema(cfg.kind, "rows"));
    let mut growth: Option<GrowthSeries> = None;
    let mut omega_inf = 0.0;
    let mut q0 = f64::NAN;
    let mut case_i_any = false;
    let summary = evolve_with_tracers(&w, &evolve_cfg(cfg, t_star, 0.0), &mut tracers, |wt, st| {
        let g = match &mut growth {
            Some(g) => {
                g.push(wt);
                g
            }
            None => {
                omega_inf = wt.linf();
                growth.insert(GrowthSeries::new(wt)?)
            }
        };
        let ratio = *g.ratios.last().unwrap();
        let occ = angular_occupancy(wt, &radii, 0.5)?;
        let frac = occ.haar_fraction_below(lo, hi, 1.0 / cfg.growth_target);
        let case_i = frac > 0.5;
        case_i_any |= case_i;
        let q = integral_term(wt, [xhat, xhat], Q_TOL)?;
        if q0.is_nan() {
            q0 = q;
        }
        let seg = slice_state(st, 0, SEGMENT_NODES);
        let wedge = case_ii_wedge_diagnostic(&seg, &[]);
        let probes = slice_state(st, SEGMENT_NODES, PROBES);
        let flow = check_quasi_lipschitz(&probes, &pairs, omega_inf, None)?;
        rows.push(vec![
            n.into(),
            m.into(),
            wt.time().into(),
            ratio.into(),
            wt.h1_seminorm().into(),
            wt.linf().into(),
            occ.haar_average(lo, hi).into(),
            frac.into(),
            case_i.into(),
            (!case_i).into(),
            q.into(),
            wedge.min_slope.into(),
            flow.fitted.lower.into(),
            flow.fitted.upper.into(),
        ]);
        Ok(())
    })?;
    let g = growth.expect("the initial state is always observed");
    let (t_max, r_max) = g.max();
    let mut sum = Table::new([
        "n", "m", "t_star", "steps", "halvings", "max_ratio", "t_max", "final_ratio", "q_xhat0", "case_i_any",
    ])
    .with_schema(schema(cfg.kind, "summary"));
    sum.push(vec![
        n.into(),
        m.into(),
        t_star.into(),
        summary.steps.into(),
        summary.halvings.len().into(),
        r_max.into(),
        t_max.into(),
        (*g.ratios.last().unwrap()).into(),
        q0.into(),
        case_i_any.into(),
    ]);
    Ok(vec![("rows", rows), ("summary", sum)])
}

fn fmt_param(x: f64) -> String {
    format!("{x}")
}

fn thm12_members(cfg: &ExperimentConfig) -> Vec<Member> {
    cfg.continuum_grids
        .iter()
        .map(|&m| {
            let cfg = cfg.clone();
            Member {
                key: format!("m{m:05}"),
                run: Box::new(move || thm12_job(&cfg, m)),
            }
        })
        .collect()
}

/// Membership shells run from 16 cells (at most a quarter of this radius) out to this radius.
pub const MEMBERSHIP_R_HI: f64 = 0.2;
pub const MEMBERSHIP_SHELLS: usize = 12;

fn thm12_job(cfg: &ExperimentConfig, m: usize) -> Result<Parts> {
    let grid = Grid::new(m)?;
    let params = ContinuumDataParams::new(cfg.alpha, cfg.epsilon)?;
    let w = make_continuum_data(params, grid)?;
    let mut header = vec!["m".to_string(), "t".into(), "h1".into(), "linf".into()];
    header.extend(cfg.deltas.iter().map(|d| format!("annulus_h1_{}", fmt_param(*d))));
    header.extend(cfg.wsp.iter().map(|(s, p)| format!("wsp_{}_{}", fmt_param(*s), fmt_param(*p))));
    let mut rows = Table::new(header).with_schema(schema(cfg.kind, "rows"));
    let ncfg = NormConfig {
        wsp: cfg.wsp.clone(),
        deltas: cfg.deltas.clone(),
        polar: None,
    };
    evolve_with(&w, &evolve_cfg(cfg, cfg.continuum_t_final, 0.0), |wt| {
        let rep = norm_report(wt, &ncfg)?;
        let mut row: Vec<Cell> = vec![m.into(), rep.t.into(), rep.h1.into(), rep.linf.into()];
        row.extend(rep.annulus_h1_sq.iter().map(|a| Cell::F(a.1.sqrt())));
        row.extend(rep.wsp.iter().map(|v| Cell::F(v.value)));
        rows.push(row);
        Ok(())
    })?;
    let w0 = prepare(&w);
    let mut mem = Table::new(["m", "s", "p", "alpha_p", "gamma", "r_squared", "member"])
        .with_schema(schema(cfg.kind, "membership"));
    let r_lo = (16.0 * grid.spacing()).min(0.25 * MEMBERSHIP_R_HI);
    for &(s, p) in &cfg.wsp {
        let ind = wsp_membership(&w0, s, p, r_lo, MEMBERSHIP_R_HI, MEMBERSHIP_SHELLS)?;
        mem.push(vec![
            m.into(),
            s.into(),
            p.into(),
            (cfg.alpha * p).into(),
            ind.gamma.into(),
            ind.fit.r_squared.into(),
            ind.member.into(),
        ]);
    }
    Ok(vec![("rows", rows), ("membership", mem)])
}

fn bc_members(cfg: &ExperimentConfig) -> Vec<Member> {
    let grids = cfg.bc_grids.clone();
    let kind = cfg.kind;
    vec![Member {
        key: "grids".into(),
        run: Box::new(move || {
            let fit = fit_bc_constant(&grids)?;
            let mut t = Table::new([
                "m", "slope", "intercept", "r_squared", "slope_lo", "slope_hi", "residual_max", "points",
                "relative_change",
            ])
            .with_schema(schema(kind, "rows"));
            let mut prev: Option<f64> = None;
            for g in &fit.per_grid {
                let (lo, hi) = g.fit.slope_band();
                let change = prev.map_or(f64::NAN, |p| (g.fit.slope - p).abs() / g.fit.slope);
                prev = Some(g.fit.slope);
                t.push(vec![
                    g.m.into(),
                    g.fit.slope.into(),
                    g.fit.intercept.into(),
                    g.fit.r_squared.into(),
                    lo.into(),
                    hi.into(),
                    g.residual_max.into(),
                    g.points.into(),
                    change.into(),
                ]);
            }
            Ok(vec![("rows", t)])
        }),
    }]
}

/// Candidate constants scanned for the smallest admissible one: 10^-4 .. 1 in
/// steps of a third of a decade.
pub fn losing_candidates(c: f64) -> Vec<f64> {
    let mut v = vec![c];
    v.extend((0..=12).map(|k| 10f64.powf(-4.0 + k as f64 / 3.0)));
    v
}

fn losing_members(cfg: &ExperimentConfig) -> Vec<Member> {
    cfg.n
        .iter()
        .map(|&n| {
            let cfg = cfg.clone();
            Member {
                key: format!("n{n:05}"),
                run: Box::new(move || losing_job(&cfg, n)),
            }
        })
        .collect()
}

fn losing_job(cfg: &ExperimentConfig, n: u32) -> Result<Parts> {
    let w = bump(cfg, n)?;
    let m = w.grid().size();
    let c = cfg.losing_c;
    let mut tracker = LosingTracker::new(&w, losing_candidates(c));
    evolve_with(&w, &evolve_cfg(cfg, cfg.t_star(n), 0.0), |wt| {
        tracker.observe(wt);
        Ok(())
    })?;
    let mut rows = Table::new(["n", "t", "q", "ratio"]).with_schema(schema(cfg.kind, "rows"));
    for (t, r) in &tracker.rows {
        rows.push(vec![n.into(), (*t).into(), closed_form(c, tracker.omega_inf, *t).into(), r[0].into()]);
    }
    let times: Vec<f64> = tracker.rows.iter().map(|r| r.0).collect();
    let ode = losing_exponent_curve(c, tracker.omega_inf, &times)?;
    let mut sum = Table::new(["n", "m", "c", "omega_inf", "max_ratio", "ode_deviation", "smallest_admissible"])
        .with_schema(schema(cfg.kind, "summary"));
    sum.push(vec![
        n.into(),
        m.into(),
        c.into(),
        tracker.omega_inf.into(),
        tracker.max_ratio(0).into(),
        ode.max_deviation.into(),
        tracker.smallest_admissible(LOSING_TOL).unwrap_or(f64::NAN).into(),
    ]);
    Ok(vec![("rows", rows), ("summary", sum)])
}

fn viscous_members(cfg: &ExperimentConfig) -> Vec<Member> {
    cfg.nu
        .iter()
        .enumerate()
        .map(|(i, &nu)| {
            let cfg = cfg.clone();
            Member {
                key: format!("{i:03}-nu{nu:e}"),
                run: Box::new(move || viscous_job(&cfg, nu)),
            }
        })
        .collect()
}

/// "inviscid", "nu<<t", "t<<nu" or "crossover" (within a decade of t*).
pub fn viscous_regime(nu: f64, t_star: f64) -> &'static str {
    if nu == 0.0 {
        "inviscid"
    } else if nu * 10.0 <= t_star {
        "nu<<t"
    } else if nu >= 10.0 * t_star {
        "t<<nu"
    } else {
        "crossover"
    }
}

fn viscous_job(cfg: &ExperimentConfig, nu: f64) -> Result<Parts> {
    let n = cfg.n[0];
    let w = bump(cfg, n)?;
    let m = w.grid().size();
    let t_star = cfg.t_star(n);
    let mut growth: Option<GrowthSeries> = None;
    let mut prev: Option<VorticityField> = None;
    let (mut max_rel, mut monotone) = (0.0f64, true);
    evolve_with(&w, &evolve_cfg(cfg, t_star, nu), |wt| {
        match &mut growth {
            Some(g) => g.push(wt),
            None => growth = Some(GrowthSeries::new(wt)?),
        }
        if let Some(p) = prev.take() {
            let eb = energy_balance(&[p, wt.clone()], nu)?;
            max_rel = max_rel.max(eb.max_relative);
            monotone &= eb.monotone;
        }
        prev = Some(wt.clone());
        Ok(())
    })?;
    let g = growth.ok_or_else(|| HarnessError::config("no snapshots recorded"))?;
    let (t_max, r_max) = g.max();
    let mut t = Table::new([
        "nu", "n", "m", "t_star", "regime", "ratio_at_t_star", "max_ratio", "t_max", "energy_max_relative",
        "energy_monotone",
    ])
    .with_schema(schema(cfg.kind, "rows"));
    t.push(vec![
        nu.into(),
        n.into(),
        m.into(),
        t_star.into(),
        viscous_regime(nu, t_star).into(),
        (*g.ratios.last().unwrap()).into(),
        r_max.into(),
        t_max.into(),
        max_rel.into(),
        monotone.into(),
    ]);
    Ok(vec![("rows", t)])
}
