//! Batch sweeps over time and auxiliary-qubit count, CSV/JSON export and
//! information-backflow detection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coherence::{
    msc_bruteforce_with, msc_closed_form, reference_basis_of, ClosedFormMode, DEFAULT_GRID,
    DEGEN_TOL,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{ellipsoid_surface_points, Ellipsoid};
use crate::numerics::{partial_trace, Party, Vec3};
use crate::reservoir::{
    closed_form_ellipsoid, evolve_bipartite, initial_state, kraus_pair, survival_amplitude,
    InitialStateParams, KrausMode, ReservoirParams,
};

pub const CSV_HEADER: &str = "t,N,p,s1,s2,s3,center_z,msc";
pub const MESH_THETA: usize = 32;
pub const MESH_PHI: usize = 64;
/// Times the figures single out; always present in the time grid when
/// `t_max` reaches them.
pub const ANCHOR_TIMES: [f64; 2] = [0.8, 1.6];

const ROW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MscMode {
    #[default]
    Paper,
    Strict,
    Bruteforce,
}

impl std::str::FromStr for MscMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(MscMode::Paper),
            "strict" => Ok(MscMode::Strict),
            "bruteforce" => Ok(MscMode::Bruteforce),
            other => Err(Error::Config(format!(
                "msc mode must be paper, strict or bruteforce, got `{other}`"
            ))),
        }
    }
}

impl std::str::FromStr for KrausMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(KrausMode::Paper),
            "exact" => Ok(KrausMode::Exact),
            other => Err(Error::Config(format!(
                "channel mode must be paper or exact, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirSection {
    pub lambda: f64,
    pub gamma0: f64,
    pub omega0: f64,
    pub n_list: Vec<usize>,
}

impl Default for ReservoirSection {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma0: 8.0,
            omega0: 1.0,
            n_list: vec![1, 3, 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub q: f64,
    /// Radians.
    pub theta: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            q: 0.8,
            theta: PI / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub t_max: f64,
    pub n_steps: usize,
    pub mesh_times: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            n_steps: 1001,
            mesh_times: vec![0.0, 0.8, 1.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MscSection {
    pub mode: MscMode,
    pub grid: usize,
}

impl Default for MscSection {
    fn default() -> Self {
        Self {
            mode: MscMode::Paper,
            grid: DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub mode: KrausMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Scenario description. Every key is optional; missing keys take the
/// figure defaults (λ = 1, γ₀ = 8, q = 0.8, θ = π/3, N ∈ {1, 3, 6}).
///
/// ```toml
/// [reservoir]
/// lambda = 1.0
/// gamma0 = 8.0
/// omega0 = 1.0
/// n_list = [1, 3, 6]
///
/// [initial]
/// q = 0.8
/// theta = 1.0471975511965976
///
/// [sweep]
/// t_max = 10.0
/// n_steps = 1001
/// mesh_times = [0.0, 0.8, 1.6]
///
/// [msc]
/// mode = "paper"      # paper | strict | bruteforce
/// grid = 10000
///
/// [channel]
/// mode = "paper"      # paper | exact
///
/// [output]
/// dir = "out"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub reservoir: ReservoirSection,
    pub initial: InitialSection,
    pub sweep: SweepSection,
    pub msc: MscSection,
    pub channel: ChannelSection,
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        let r = &self.reservoir;
        if !(r.lambda > 0.0 && r.lambda.is_finite()) {
            return field("reservoir.lambda", format!("must be > 0, got {}", r.lambda));
        }
        if !(r.gamma0 > 0.0 && r.gamma0.is_finite()) {
            return field("reservoir.gamma0", format!("must be > 0, got {}", r.gamma0));
        }
        if !r.omega0.is_finite() {
            return field("reservoir.omega0", "must be finite".into());
        }
        if r.n_list.is_empty() || r.n_list.contains(&0) {
            return field(
                "reservoir.n_list",
                "must be a non-empty list of N >= 1".into(),
            );
        }
        let i = &self.initial;
        if !(0.0..=1.0).contains(&i.q) {
            return field("initial.q", format!("must lie in [0, 1], got {}", i.q));
        }
        if !(0.0..=PI).contains(&i.theta) {
            return field(
                "initial.theta",
                format!("must lie in [0, pi], got {}", i.theta),
            );
        }
        if 1.0 - i.q * i.q * i.theta.cos().powi(2) <= 1e-12 {
            return field(
                "initial",
                "q = 1 with theta = 0 has a point ellipsoid with undefined axes".into(),
            );
        }
        let s = &self.sweep;
        if !(s.t_max > 0.0 && s.t_max.is_finite()) {
            return field("sweep.t_max", format!("must be > 0, got {}", s.t_max));
        }
        if s.n_steps < 2 {
            return field("sweep.n_steps", format!("must be >= 2, got {}", s.n_steps));
        }
        if let Some(t) = s
            .mesh_times
            .iter()
            .find(|&&t| !(0.0..=s.t_max).contains(&t))
        {
            return field("sweep.mesh_times", format!("{t} lies outside [0, t_max]"));
        }
        if self.msc.mode == MscMode::Bruteforce && self.msc.grid < 8 {
            return field("msc.grid", format!("must be >= 8, got {}", self.msc.grid));
        }
        Ok(())
    }

    pub fn initial_params(&self) -> InitialStateParams {
        InitialStateParams {
            q: self.initial.q,
            theta: self.initial.theta,
        }
    }

    pub fn reservoir_params(&self, n_qubits: usize) -> ReservoirParams {
        ReservoirParams {
            lambda: self.reservoir.lambda,
            gamma0: self.reservoir.gamma0,
            omega0: self.reservoir.omega0,
            n_qubits,
        }
    }

    /// Uniform grid on [0, t_max] plus the figure anchor times.
    pub fn time_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        let mut ts: Vec<f64> = (0..s.n_steps)
            .map(|i| s.t_max * i as f64 / (s.n_steps - 1) as f64)
            .collect();
        for anchor in ANCHOR_TIMES {
            if anchor <= s.t_max && !ts.iter().any(|&t| (t - anchor).abs() < 1e-12) {
                ts.push(anchor);
            }
        }
        ts.sort_by(f64::total_cmp);
        ts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub n: usize,
    pub p: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub center_z: f64,
    pub msc: f64,
    /// Bob's marginal was degenerate and MSC came from the basis infimum.
    pub degenerate: bool,
}

impl TimeSeriesRow {
    pub fn check(&self) -> Result<()> {
        let in_range = |x: f64| (0.0..=1.0 + ROW_SLACK).contains(&x);
        for (name, v) in [
            ("p", self.p),
            ("s1", self.s1),
            ("s2", self.s2),
            ("s3", self.s3),
            ("msc", self.msc),
        ] {
            if !in_range(v) {
                return Err(Error::NonPhysical(format!(
                    "row t = {}, N = {}: {name} = {v} outside [0, 1]",
                    self.t, self.n
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshRecord {
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub center: Vec3,
    pub semiaxes: Vec3,
    /// Row-major 3×3.
    pub orientation: [f64; 9],
    pub points: Vec<Vec3>,
}

impl MeshRecord {
    pub fn from_ellipsoid(t: f64, n: usize, e: &Ellipsoid) -> Result<Self> {
        let mut orientation = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                orientation[3 * i + j] = e.orientation[i][j];
            }
        }
        Ok(Self {
            t,
            n,
            center: e.center,
            semiaxes: e.semiaxes,
            orientation,
            points: ellipsoid_surface_points(e, MESH_THETA, MESH_PHI)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub rows: Vec<TimeSeriesRow>,
    pub meshes: Vec<MeshRecord>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    run_scenario_with(Exec::default(), config)
}

/// Rows ordered by (N in `n_list` order, t ascending); meshes by (N, mesh
/// time in config order).
pub fn run_scenario_with(exec: Exec, config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let times = config.time_grid();
    let jobs: Vec<(usize, f64)> = config
        .reservoir
        .n_list
        .iter()
        .flat_map(|&n| times.iter().map(move |&t| (n, t)))
        .collect();
    let rows = exec
        .map(&jobs, |&(n, t)| compute_row(config, n, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    for row in &rows {
        row.check()?;
    }

    let mut meshes = Vec::new();
    for &n in &config.reservoir.n_list {
        let params = config.reservoir_params(n);
        for &t in &config.sweep.mesh_times {
            let p = survival_amplitude(t, &params).norm_sqr().min(1.0);
            let e = closed_form_ellipsoid(&config.initial_params(), p)?;
            meshes.push(MeshRecord::from_ellipsoid(t, n, &e)?);
        }
    }
    Ok(ScenarioOutput { rows, meshes })
}

fn compute_row(config: &ScenarioConfig, n: usize, t: f64) -> Result<TimeSeriesRow> {
    let params = config.reservoir_params(n);
    let init = config.initial_params();
    let g = survival_amplitude(t, &params);
    let p = g.norm_sqr().min(1.0);
    let e = closed_form_ellipsoid(&init, p)?;

    let bruteforce = || -> Result<(f64, bool)> {
        let rho = evolve_bipartite(&initial_state(&init)?, &kraus_pair(g, config.channel.mode)?);
        let search = msc_bruteforce_with(Exec::Sequential, &rho, config.msc.grid, DEGEN_TOL)?;
        Ok((search.value, search.degenerate))
    };

    let (msc, degenerate) = match config.msc.mode {
        MscMode::Paper => (msc_closed_form(&e.semiaxes, ClosedFormMode::Paper)?, false),
        MscMode::Strict => {
            let rho =
                evolve_bipartite(&initial_state(&init)?, &kraus_pair(g, config.channel.mode)?);
            let basis = reference_basis_of(&partial_trace(&rho, Party::B)?, DEGEN_TOL)?;
            if basis.degenerate {
                bruteforce()?
            } else {
                (msc_closed_form(&e.semiaxes, ClosedFormMode::Strict)?, false)
            }
        }
        MscMode::Bruteforce => bruteforce()?,
    };

    Ok(TimeSeriesRow {
        t,
        n,
        p,
        s1: e.semiaxes[0],
        s2: e.semiaxes[1],
        s3: e.semiaxes[2],
        center_z: e.center[2],
        msc,
        degenerate,
    })
}

/// A forward difference counts as growth only above this many ulps of p,
/// so roundoff on a converged plateau is not reported as backflow.
const BACKFLOW_ULPS: f64 = 8.0;

/// Maximal time intervals over which p(t) strictly increases.
pub fn detect_backflow(rows: &[TimeSeriesRow]) -> Result<Vec<(f64, f64)>> {
    if let Some(first) = rows.first() {
        let sorted = rows.windows(2).all(|w| w[1].t > w[0].t);
        let single_n = rows.iter().all(|r| r.n == first.n);
        if !sorted || !single_n {
            return Err(Error::Unsorted);
        }
    }
    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    for w in rows.windows(2) {
        let floor = BACKFLOW_ULPS * f64::EPSILON * w[0].p.abs().max(w[1].p.abs());
        let rising = w[1].p - w[0].p > floor;
        match (rising, open) {
            (true, None) => open = Some(w[0].t),
            (false, Some(start)) => {
                intervals.push((start, w[0].t));
                open = None;
            }
            _ => {}
        }
    }
    if let (Some(start), Some(last)) = (open, rows.last()) {
        intervals.push((start, last.t));
    }
    Ok(intervals)
}

/// Splits rows by N, keeping first-appearance order.
pub fn group_by_n(rows: &[TimeSeriesRow]) -> Vec<(usize, Vec<TimeSeriesRow>)> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<usize, Vec<TimeSeriesRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry(r.n)
            .or_insert_with(|| {
                order.push(r.n);
                Vec::new()
            })
            .push(*r);
    }
    order
        .into_iter()
        .map(|n| (n, groups.remove(&n).unwrap_or_default()))
        .collect()
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[TimeSeriesRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.t),
            r.n,
            fmt_float(r.p),
            fmt_float(r.s1),
            fmt_float(r.s2),
            fmt_float(r.s3),
            fmt_float(r.center_z),
            fmt_float(r.msc)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(rows: &[TimeSeriesRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv(rows, BufWriter::new(file))
}

pub fn write_mesh_json<W: Write>(meshes: &[MeshRecord], mut w: W) -> Result<()> {
    serde_json::to_writer(&mut w, meshes).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn export_mesh_json(meshes: &[MeshRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_mesh_json(meshes, BufWriter::new(file))
}

pub fn parse_csv(text: &str) -> Result<Vec<TimeSeriesRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(Error::Parse(format!("unexpected header `{h}`"))),
        None => return Err(Error::Parse("empty file".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse(format!(
                "line {}: expected 8 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: bad number `{}`", lineno + 2, fields[i]))
            })
        };
        let n = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad N `{}`", lineno + 2, fields[1])))?;
        rows.push(TimeSeriesRow {
            t: num(0)?,
            n,
            p: num(2)?,
            s1: num(3)?,
            s2: num(4)?,
            s3: num(5)?,
            center_z: num(6)?,
            msc: num(7)?,
            degenerate: false,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<TimeSeriesRow>> {
    parse_csv(&fs::read_to_string(path)?)
}
