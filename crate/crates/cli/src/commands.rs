//! One function per subcommand. Each writes a CSV artifact to `out`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use arqsched::capacity::{
    genie_region_n2, genie_sum_capacity, region_bounds, sum_capacity_bounds, sum_capacity_two_user,
};
use arqsched::counterexample::{
    general_report, m4_report, nonidentical_report, CounterexampleKind, CounterexampleReport, NonidenticalPair,
};
use arqsched::eval::{genie_policy_exact, genie_value, optimal_value, policy_value_exact, policy_value_mc, McConfig};
use arqsched::{ChannelParams, Limits, ValueReport};

use crate::artifact::{write_csv, ValueRow};
use crate::config::ExperimentConfig;
use crate::figure::{self, FigureOptions};
use crate::table::{run_table, TableOptions};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub limits: Limits,
    pub timing: bool,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64() * 1e3))
}

fn write_reports<W: Write>(out: W, cfg: &ExperimentConfig, reports: &[(ValueReport, f64)], timing: bool) -> Result<()> {
    let rows: Vec<ValueRow> = reports.iter().map(|(r, ms)| ValueRow::from_report(r, timing.then_some(*ms))).collect();
    write_csv(out, &cfg.echo(), &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityRow {
    pub quantity: String,
    pub value: f64,
}

pub fn capacity<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<()> {
    let params = cfg.channel()?;
    let delay = cfg.delay_or_default();
    let n = cfg.users.unwrap_or(2);
    let mut rows =
        vec![QuantityRow { quantity: "c_sum_2".into(), value: sum_capacity_two_user(&params, &delay).value }];
    rows.push(QuantityRow { quantity: format!("genie_c_{n}"), value: genie_sum_capacity(&params, &delay, n)?.value });
    if n > 2 {
        let b = sum_capacity_bounds(&params, &delay, n)?;
        rows.push(QuantityRow { quantity: format!("c_sum_{n}_lower"), value: b.lower });
        rows.push(QuantityRow { quantity: format!("c_sum_{n}_upper"), value: b.upper });
    }
    write_csv(out, &cfg.echo(), &rows)
}

pub fn genie<W: Write>(cfg: &ExperimentConfig, opts: RunOptions, out: W) -> Result<()> {
    let inst = cfg.instance()?;
    let r = timed(|| Ok(genie_value(&inst)?))?;
    write_reports(out, cfg, &[r], opts.timing)
}

pub fn optimal<W: Write>(cfg: &ExperimentConfig, opts: RunOptions, out: W) -> Result<()> {
    let inst = cfg.instance()?;
    let r = timed(|| Ok(optimal_value(&inst, &opts.limits)?))?;
    write_reports(out, cfg, &[r], opts.timing)
}

/// Exact value of each configured policy; `episodes` is ignored.
pub fn value<W: Write>(cfg: &ExperimentConfig, opts: RunOptions, out: W) -> Result<()> {
    let inst = cfg.instance()?;
    let mut reports = Vec::new();
    for spec in cfg.policies_or_greedy() {
        let policy = spec.build(inst.channels())?;
        reports.push(timed(|| {
            Ok(if cfg.genie {
                genie_policy_exact(&inst, policy.as_ref(), &opts.limits)?
            } else {
                policy_value_exact(&inst, policy.as_ref(), &opts.limits)?
            })
        })?);
    }
    write_reports(out, cfg, &reports, opts.timing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub policy: String,
    pub episode: usize,
    pub slot: u32,
    /// Counted from 1.
    pub user: usize,
}

/// Monte Carlo value of each configured policy, optionally logging the
/// decisions of the first `log_episodes` episodes.
pub fn simulate<W: Write>(cfg: &ExperimentConfig, opts: RunOptions, log: Option<(&Path, usize)>, out: W) -> Result<()> {
    let inst = cfg.instance()?;
    let episodes = cfg.episodes.context("`episodes` is required for simulation")?;
    let seed = cfg.seed_required()?;
    let keep = log.map_or(0, |(_, n)| n);
    let mc = McConfig::new(episodes, seed).genie(cfg.genie).keep_logs(keep);
    let mut reports = Vec::new();
    let mut logs = Vec::new();
    for spec in cfg.policies_or_greedy() {
        let (rep, ms) = timed(|| Ok(policy_value_mc(&inst, &spec, &mc)?))?;
        for (e, decisions) in rep.logs.iter().enumerate() {
            logs.extend(decisions.iter().map(|d| LogRow {
                policy: rep.value.label.clone(),
                episode: e,
                slot: d.slot,
                user: d.user + 1,
            }));
        }
        reports.push((rep.value, ms));
    }
    if let Some((path, _)) = log {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_csv(std::io::BufWriter::new(f), &cfg.echo(), &logs)?;
    }
    write_reports(out, cfg, &reports, opts.timing)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    /// `inner`, `genie` or `outer`.
    pub set: String,
    pub label: String,
    /// Coordinates joined by `;`; for `outer` rows, the 0/1 indicator of
    /// the constrained users.
    pub coords: String,
    /// Right-hand side of an `outer` constraint.
    pub bound: Option<f64>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn region<W: Write>(cfg: &ExperimentConfig, plot: Option<&Path>, out: W) -> Result<()> {
    let params = cfg.channel()?;
    let delay = cfg.delay_or_default();
    let n = cfg.users.unwrap_or(2);
    let bounds = region_bounds(&params, &delay, n)?;
    let mut rows: Vec<RegionRow> = bounds
        .inner
        .iter()
        .map(|v| RegionRow { set: "inner".into(), label: v.label.clone(), coords: join(&v.coords), bound: None })
        .collect();
    let exact = if n == 2 && delay.point_mass().is_some() { Some(genie_region_n2(&params, &delay)?) } else { None };
    for v in exact.iter().flatten() {
        rows.push(RegionRow { set: "genie".into(), label: v.label.clone(), coords: join(&v.coords), bound: None });
    }
    for c in &bounds.outer.constraints {
        let ind: Vec<f64> = (0..n).map(|i| if c.users.contains(&i) { 1.0 } else { 0.0 }).collect();
        let label = c.users.iter().map(|u| (u + 1).to_string()).collect::<Vec<_>>().join(",");
        rows.push(RegionRow { set: "outer".into(), label, coords: join(&ind), bound: Some(c.bound) });
    }
    if let Some(path) = plot {
        if n != 2 {
            bail!("plots are only drawn for two users");
        }
        std::fs::write(path, gnuplot_script(&bounds, exact.as_deref()))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    write_csv(out, &cfg.echo(), &rows)
}

fn gnuplot_script(
    bounds: &arqsched::capacity::RegionBounds,
    exact: Option<&[arqsched::capacity::RegionVertex]>,
) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let block = |s: &mut String, name: &str, pts: &[[f64; 2]]| {
        writeln!(s, "${name} << EOD").unwrap();
        for p in pts.iter().chain(pts.first()) {
            writeln!(s, "{} {}", p[0], p[1]).unwrap();
        }
        writeln!(s, "EOD").unwrap();
    };
    // Inner hull in boundary order: O, X1, Y1,2, X2.
    let pick =
        |l: &str| bounds.inner.iter().find(|v| v.label == l).map(|v| [v.coords[0], v.coords[1]]).unwrap_or([0.0, 0.0]);
    block(&mut s, "inner", &[pick("O"), pick("X1"), pick("Y1,2"), pick("X2")]);
    let c = |users: &[usize]| bounds.outer.constraints.iter().find(|c| c.users == users).map_or(0.0, |c| c.bound);
    let (c1, c2, c12) = (c(&[0]), c(&[1]), c(&[0, 1]));
    block(&mut s, "outer", &[[0.0, 0.0], [c1, 0.0], [c1, (c12 - c1).max(0.0)], [(c12 - c2).max(0.0), c2], [0.0, c2]]);
    let mut plots = vec!["$outer with lines title 'outer bound'", "$inner with lines title 'inner bound'"];
    if let Some(v) = exact {
        let pts: Vec<[f64; 2]> = v.iter().map(|v| [v.coords[0], v.coords[1]]).collect();
        block(&mut s, "genie", &pts);
        plots.push("$genie with linespoints title 'genie region'");
    }
    writeln!(s, "set xlabel 'user 1 throughput'\nset ylabel 'user 2 throughput'\nset size square").unwrap();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub kind: String,
    pub closed_form: f64,
    pub oracle_greedy: f64,
    pub oracle_alternative: f64,
    pub oracle_gap: f64,
    pub delta: f64,
    pub observable_closed_form: Option<f64>,
    pub verdict: String,
}

impl From<&CounterexampleReport> for CounterexampleRow {
    fn from(r: &CounterexampleReport) -> Self {
        Self {
            kind: r.kind.to_string(),
            closed_form: r.closed_form,
            oracle_greedy: r.oracle.greedy,
            oracle_alternative: r.oracle.alternative,
            oracle_gap: r.oracle_gap,
            delta: r.delta(),
            observable_closed_form: r.observable_closed_form,
            verdict: if r.greedy_suboptimal { "greedy-suboptimal" } else { "greedy-not-beaten" }.into(),
        }
    }
}

/// Runs the chosen counterexample; parameters missing from `cfg` take the
/// first published instance of that kind.
pub fn counterexample<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<()> {
    let kind = cfg.kind.unwrap_or(CounterexampleKind::M4);
    let mut cfg = cfg.clone();
    cfg.kind = Some(kind);
    let report = match kind {
        CounterexampleKind::M4 => {
            cfg.p.get_or_insert(0.9308);
            cfg.r.get_or_insert(0.1797);
            cfg.pi.get_or_insert_with(|| vec![0.5216, 0.5130, 0.3305]);
            cfg.horizon = Some(4);
            m4_report(cfg.channel()?, cfg.pi.as_deref().unwrap_or_default())?
        }
        CounterexampleKind::GeneralM => {
            cfg.p.get_or_insert(0.9);
            cfg.r.get_or_insert(0.2);
            cfg.pi.get_or_insert_with(|| vec![0.5, 0.5, 0.4]);
            let m = *cfg.horizon.get_or_insert(6);
            general_report(m, cfg.channel()?, cfg.pi.as_deref().unwrap_or_default())?
        }
        CounterexampleKind::Nonidentical => {
            let p = *cfg.p.get_or_insert(0.5060);
            let r1 = *cfg.r.get_or_insert(0.1411);
            let r2 = *cfg.r2.get_or_insert(0.1054);
            let pi = cfg.pi.get_or_insert_with(|| vec![0.2276, 0.2179]).clone();
            cfg.horizon = Some(2);
            let [a, b] = pi[..] else { bail!("the two-channel counterexample takes exactly two beliefs") };
            nonidentical_report(&NonidenticalPair::new(p, r1, r2, [a, b])?)?
        }
    };
    write_csv(out, &cfg.echo(), &[CounterexampleRow::from(&report)])
}

pub fn table<W: Write>(
    id: u8,
    cfg: &ExperimentConfig,
    rows: Option<Vec<usize>>,
    opts: RunOptions,
    out: W,
) -> Result<()> {
    let defaults = TableOptions::default();
    let topts = TableOptions {
        episodes: cfg.episodes.unwrap_or(defaults.episodes),
        seed: cfg.seed.unwrap_or(defaults.seed),
        init: cfg.initial(),
        rows,
        limits: opts.limits,
        timing: opts.timing,
    };
    run_table(id, &topts)?.write(out)
}

pub fn figure1<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<()> {
    let d = FigureOptions::default();
    let fopts = FigureOptions {
        params: match (cfg.p, cfg.r) {
            (None, None) => d.params,
            _ => ChannelParams::new(cfg.p.unwrap_or(d.params.p()), cfg.r.unwrap_or(d.params.r()))?,
        },
        delay: cfg.delay.clone().unwrap_or(d.delay),
        pi: cfg.pi.clone().unwrap_or(d.pi),
        max_horizon: cfg.horizon.unwrap_or(d.max_horizon),
    };
    let points = figure::run_figure1(&fopts)?;
    write_csv(out, &figure::echo(&fopts), &points)
}
