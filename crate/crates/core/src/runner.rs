//! Executes an experiment config: one CSV per experiment family member, a
//! manifest with content hashes, and per-row records of degenerate events.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{CounterexampleSection, EstimateSection, ExperimentConfig, FamilySpec, MeasureSection, ResonanceSection};
use crate::error::{Result, ZkError};
use crate::exact::check_identities;
use crate::grid::FrequencyPoint;
use crate::harness::counterexample::counterexample_norms;
use crate::harness::estimates::{EstimateId, EstimateParams, EvalOptions};
use crate::harness::sweep::{ensemble_rows, sample_seed, summarize, EstimateRow};
use crate::io::{file_sha256, sha256_hex, trajectory_rows, write_csv, write_spectral, MeasureCsvRow, SweepSummaryRow};
use crate::measure::{default_family, random_queries, scan_sup_bound};
use crate::solver::{bump_data, gzk_solve};
use crate::stats::loglog_fit;
use crate::symbols::{resonance3, resonance3_factored, resonance3_lower_bound, resonance3_rewritten};

/// Sweep fits need this many shells and samples per shell.
pub const MIN_SWEEP_SHELLS: usize = 4;
pub const MIN_SWEEP_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub rows: Option<usize>,
}

/// A row whose evaluation failed; the row holds NaN and the run went on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub file: String,
    pub row: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub files: Vec<ManifestFile>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    /// Human-readable result lines.
    pub summary: Vec<String>,
}

impl RunOutcome {
    pub fn degenerate(&self) -> bool {
        !self.manifest.events.is_empty()
    }
}

struct Ctx<'a> {
    out: &'a Path,
    files: Vec<(PathBuf, Option<usize>)>,
    events: Vec<Event>,
    lines: Vec<String>,
}

impl Ctx<'_> {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.out.join(name);
        write_csv(&p, rows)?;
        self.files.push((p, Some(rows.len())));
        Ok(())
    }

    fn event(&mut self, file: &str, row: usize, e: &ZkError) {
        self.events.push(Event { file: file.into(), row, error: e.to_string() });
    }
}

/// Hash of the settings that determine the results (output location and
/// worker count excluded).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.out = None;
    c.workers = None;
    sha256_hex(c.to_json().as_bytes())
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let mut ctx = Ctx { out, files: Vec::new(), events: Vec::new(), lines: Vec::new() };

    let mut names: Vec<String> = Vec::new();
    let mut summaries = Vec::new();
    for (i, e) in cfg.estimate.iter().enumerate() {
        let base = format!("estimate-{}", e.id.name());
        let name = if names.contains(&base) { format!("{base}-{i}") } else { base };
        names.push(name.clone());
        summaries.extend(run_estimate(&mut ctx, e, &format!("{name}.csv"), sample_seed(seed, 1 << 40, i))?);
    }
    if !summaries.is_empty() {
        ctx.csv("sweep-summary.csv", &summaries)?;
    }
    if let Some(m) = &cfg.measure {
        run_measure(&mut ctx, m, seed)?;
    }
    if let Some(c) = &cfg.counterexample {
        run_counterexample(&mut ctx, c)?;
    }
    if let Some(s) = &cfg.simulate {
        let grid = cfg.grid()?;
        match gzk_solve(&bump_data(grid, s.amplitude), &s.evolution()) {
            Ok(tr) => {
                let rows = trajectory_rows(&tr);
                ctx.csv("trajectory.csv", &rows)?;
                if s.write_fields {
                    let dir = out.join("fields");
                    std::fs::create_dir_all(&dir)?;
                    for (j, u) in tr.states.iter().enumerate() {
                        let p = dir.join(format!("state-{j:04}.zkf"));
                        write_spectral(&p, u)?;
                        ctx.files.push((p, None));
                    }
                }
                ctx.lines.push(format!(
                    "simulate: {} states, mass drift {:.3e}, energy drift {:.3e}",
                    rows.len(),
                    tr.conserved.mass_drift(),
                    tr.conserved.energy_drift()
                ));
            }
            Err(e) => {
                ctx.csv::<crate::io::TrajectoryRow>("trajectory.csv", &[])?;
                ctx.event("trajectory.csv", 0, &e);
                ctx.lines.push(format!("simulate: {e}"));
            }
        }
    }
    if let Some(id) = &cfg.identities {
        let rep = check_identities(id.samples, seed);
        let max = rep.substitution_max_defect.max(rep.factored_max_defect).max(rep.rewritten_max_defect);
        ctx.csv("identities.csv", &[rep])?;
        ctx.lines.push(format!("identities: {} samples, max absolute defect {max}", id.samples));
    }
    if let Some(r) = &cfg.resonance {
        run_resonance(&mut ctx, r, seed)?;
    }

    let files = ctx
        .files
        .iter()
        .map(|(p, rows)| {
            Ok(ManifestFile {
                path: p.strip_prefix(out).unwrap_or(p).to_string_lossy().into_owned(),
                sha256: file_sha256(p)?,
                rows: *rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "zklab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(cfg),
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
        events: ctx.events,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { manifest, summary: ctx.lines })
}

fn run_estimate(ctx: &mut Ctx, e: &EstimateSection, file: &str, seed: u64) -> Result<Vec<SweepSummaryRow>> {
    let shells = e.shells()?;
    let opt = EvalOptions::default();
    let mut rows: Vec<EstimateRow> = Vec::new();
    let mut summaries = Vec::new();
    for (c, params) in e.combinations().iter().enumerate() {
        let batch = ensemble_rows(e.id, params, &e.ensemble, &shells, e.samples, sample_seed(seed, c as u64, 0), &opt);
        let first = rows.len();
        for (j, (row, err)) in batch.into_iter().enumerate() {
            if let Some(err) = err {
                ctx.event(file, first + j, &err);
            }
            rows.push(row);
        }
        let mine = rows[first..].to_vec();
        if shells.len() >= MIN_SWEEP_SHELLS && e.samples >= MIN_SWEEP_SAMPLES {
            match summarize(e.id, params, mine) {
                Ok(rep) => {
                    ctx.lines.push(format!("{}: slope {:.3} ± {:.3}, max quotient {:.4e}", label(e.id, params), rep.fit.slope, rep.fit.slope_ci, rep.max_quotient));
                    summaries.push(SweepSummaryRow::from(&rep));
                }
                Err(err) => ctx.lines.push(format!("{}: no fit ({err})", label(e.id, params))),
            }
        } else {
            let max = mine.iter().map(|r| r.quotient).filter(|q| q.is_finite()).fold(f64::NAN, f64::max);
            ctx.lines.push(format!("{}: {} rows, max quotient {max:.4e}", label(e.id, params), mine.len()));
        }
    }
    ctx.csv(file, &rows)?;
    Ok(summaries)
}

fn label(id: EstimateId, p: &EstimateParams) -> String {
    let mut s = format!("{id} b={} eps={}", p.b, p.eps);
    for (k, v) in [("s", p.s), ("p", p.p), ("alpha", p.alpha)] {
        if let Some(v) = v {
            s += &format!(" {k}={v}");
        }
    }
    if let Some(k) = p.k {
        s += &format!(" k={k}");
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct MeasureSummaryRow {
    variant: String,
    eps: f64,
    queries: usize,
    max_ratio: f64,
    k_slope: Option<f64>,
    n_slope: Option<f64>,
    mc_within_3se: Option<f64>,
}

fn run_measure(ctx: &mut Ctx, m: &MeasureSection, seed: u64) -> Result<()> {
    let family = match &m.family {
        FamilySpec::Named(n) if n == "random" => random_queries(m.count, seed, m.alpha),
        FamilySpec::Named(_) => default_family(m.alpha),
        FamilySpec::Custom(f) => {
            let mut q = f.queries()?;
            q.iter_mut().for_each(|q| q.alpha = m.alpha);
            q
        }
    };
    let mut summary = Vec::new();
    for (j, &eps) in m.eps.iter().enumerate() {
        let mc = (m.mc_samples > 0).then_some((m.mc_samples, seed));
        let rep = scan_sup_bound(&family, eps, m.variant, mc)?;
        let rows: Vec<MeasureCsvRow> = rep.rows.iter().map(MeasureCsvRow::from).collect();
        let name = if m.eps.len() == 1 { format!("measure-{}.csv", m.variant.name()) } else { format!("measure-{}-{j}.csv", m.variant.name()) };
        ctx.csv(&name, &rows)?;
        let agree = mc.map(|_| {
            let ok = rep.rows.iter().filter(|r| r.mc.is_some_and(|(e, se)| (e - r.measure).abs() <= 3.0 * se)).count();
            ok as f64 / rep.rows.len() as f64
        });
        ctx.lines.push(format!(
            "measure {} eps={eps}: {} queries, max ratio {:.4}, K-slope {}, N-slope {}",
            m.variant.name(),
            rows.len(),
            rep.max_ratio,
            rep.k_fit.map_or("n/a".into(), |f| format!("{:.3}", f.slope)),
            rep.n_fit.map_or("n/a".into(), |f| format!("{:.3}", f.slope)),
        ));
        summary.push(MeasureSummaryRow {
            variant: m.variant.name().into(),
            eps,
            queries: rows.len(),
            max_ratio: rep.max_ratio,
            k_slope: rep.k_fit.map(|f| f.slope),
            n_slope: rep.n_fit.map(|f| f.slope),
            mc_within_3se: agree,
        });
    }
    ctx.csv("measure-summary.csv", &summary)
}

#[derive(Debug, Clone, Serialize)]
struct CounterexampleRow {
    #[serde(rename = "N")]
    n: i64,
    s: f64,
    b: f64,
    xsb: f64,
    xsb_grid: Option<f64>,
    l4_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CounterexampleFitRow {
    s: f64,
    b: f64,
    xsb_slope: f64,
    xsb_ci: f64,
    l4_sq_slope: f64,
    /// min over N of l4_sq / l4_sq(first N)
    l4_sq_floor_ratio: f64,
}

fn run_counterexample(ctx: &mut Ctx, c: &CounterexampleSection) -> Result<()> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &s in &c.s {
        let mine: Vec<CounterexampleRow> = c
            .n
            .iter()
            .map(|&n| {
                let r = counterexample_norms(n as i64, s, c.b, c.grid_check)?;
                Ok(CounterexampleRow { n: r.n, s, b: c.b, xsb: r.xsb, xsb_grid: r.xsb_grid, l4_sq: r.l4_sq })
            })
            .collect::<Result<_>>()?;
        if mine.len() >= 2 {
            let xf = loglog_fit(&mine.iter().map(|r| (r.n as f64, r.xsb)).collect::<Vec<_>>())?;
            let lf = loglog_fit(&mine.iter().map(|r| (r.n as f64, r.l4_sq)).collect::<Vec<_>>())?;
            let floor = mine.iter().map(|r| r.l4_sq).fold(f64::INFINITY, f64::min) / mine[0].l4_sq;
            ctx.lines.push(format!("counterexample s={s}: xsb slope {:.4}, l4^2 slope {:.4}, l4^2 floor ratio {floor:.3}", xf.slope, lf.slope));
            fits.push(CounterexampleFitRow { s, b: c.b, xsb_slope: xf.slope, xsb_ci: xf.slope_ci, l4_sq_slope: lf.slope, l4_sq_floor_ratio: floor });
        }
        rows.extend(mine);
    }
    ctx.csv("counterexample.csv", &rows)?;
    if !fits.is_empty() {
        ctx.csv("counterexample-fit.csv", &fits)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct ResonanceRow {
    xi1: f64,
    q1: i64,
    xi2: f64,
    q2: i64,
    xi3: f64,
    q3: i64,
    resonance: f64,
    factored_defect: f64,
    rewritten_defect: f64,
    lower_bound: f64,
}

fn run_resonance(ctx: &mut Ctx, r: &ResonanceSection, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e50);
    let n = r.n as f64;
    let rows: Vec<ResonanceRow> = (0..r.samples)
        .map(|_| {
            let mut pt = || FrequencyPoint::new(rng.random_range(-n..=n), rng.random_range(-(r.n as i64)..=r.n as i64));
            let (a, b, c) = (pt(), pt(), pt());
            let res = resonance3(a, b, c);
            ResonanceRow {
                xi1: a.xi,
                q1: a.q,
                xi2: b.xi,
                q2: b.q,
                xi3: c.xi,
                q3: c.q,
                resonance: res,
                factored_defect: (resonance3_factored(a, b, c) - res).abs(),
                rewritten_defect: (resonance3_rewritten(a, b, c) - res).abs(),
                lower_bound: resonance3_lower_bound(a, b, c),
            }
        })
        .collect();
    let scale = n.powi(3).max(1.0);
    let worst = rows.iter().map(|x| x.factored_defect.max(x.rewritten_defect)).fold(0.0, f64::max) / scale;
    let held = rows.iter().filter(|x| x.resonance.abs() >= x.lower_bound - 1e-9 * scale).count();
    ctx.lines.push(format!("resonance: {} triples, max defect / N^3 {worst:.3e}, lower bound held on {held}", rows.len()));
    ctx.csv("resonance.csv", &rows)
}

/// Rebuilds sweep fits from the estimate CSVs in `dir` and writes
/// `report.csv` there.
pub fn report(dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("estimate-") && n.ends_with(".csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ZkError::config("--out", format!("no estimate CSVs in {}", dir.display())));
    }
    let mut ctx = Ctx { out: dir, files: Vec::new(), events: Vec::new(), lines: Vec::new() };
    let mut summaries = Vec::new();
    for p in &paths {
        let mut rd = csv::Reader::from_path(p)?;
        let rows: Vec<EstimateRow> = rd.deserialize().collect::<std::result::Result<_, _>>()?;
        let mut groups: Vec<(EstimateParams, Vec<EstimateRow>)> = Vec::new();
        for r in rows {
            let params = EstimateParams { eps: r.eps, b: r.b, p: r.p, alpha: r.alpha, k: r.k, s: r.s, ..Default::default() };
            match groups.iter_mut().find(|g| g.0 == params) {
                Some(g) => g.1.push(r),
                None => groups.push((params, vec![r])),
            }
        }
        for (params, rows) in groups {
            let id = rows[0].estimate_id;
            let shells = rows.iter().map(|r| r.n).collect::<std::collections::BTreeSet<_>>().len();
            if shells < 2 {
                ctx.lines.push(format!("{}: single shell, no fit", label(id, &params)));
                continue;
            }
            match summarize(id, &params, rows) {
                Ok(rep) => {
                    ctx.lines.push(format!("{}: slope {:.3} ± {:.3} over {shells} shells", label(id, &params), rep.fit.slope, rep.fit.slope_ci));
                    summaries.push(SweepSummaryRow::from(&rep));
                }
                Err(e) => ctx.lines.push(format!("{}: no fit ({e})", label(id, &params))),
            }
        }
    }
    ctx.csv("report.csv", &summaries)?;
    let files = ctx
        .files
        .iter()
        .map(|(p, rows)| Ok(ManifestFile { path: p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned(), sha256: file_sha256(p)?, rows: *rows }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "zklab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: String::new(),
        seed: 0,
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
        events: Vec::new(),
    };
    Ok(RunOutcome { manifest, summary: ctx.lines })
}
