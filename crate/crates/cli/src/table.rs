//! Greedy-versus-reference comparison tables.

use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use arqsched::eval::{suboptimality_report, McConfig, Reference};
use arqsched::{ChannelParams, DelayPmf, InitialBeliefs, Instance, Limits};

use crate::artifact::{read_csv, write_csv, Echo};
use crate::presets::{table_rows, PresetRow};

#[derive(Debug, Clone, PartialEq)]
pub struct TableOptions {
    pub episodes: u64,
    pub seed: u64,
    pub init: InitialBeliefs,
    /// One-based rows to run; all when `None`.
    pub rows: Option<Vec<usize>>,
    pub limits: Limits,
    pub timing: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            episodes: 1_000_000,
            seed: 1,
            init: InitialBeliefs::Steady,
            rows: None,
            limits: Limits::default(),
            timing: false,
        }
    }
}

/// One computed row beside its published counterpart. Column order is
/// fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: u8,
    pub row: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    pub p: f64,
    pub r: f64,
    pub delay_pmf: String,
    pub pi: String,
    pub reference_kind: String,
    pub reference: f64,
    pub greedy: f64,
    pub greedy_stderr: Option<f64>,
    pub percent: f64,
    pub published_reference: f64,
    pub published_greedy: f64,
    pub published_percent: f64,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableArtifact {
    pub table: u8,
    pub echo: Echo,
    pub rows: Vec<TableRow>,
}

impl TableArtifact {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.echo, &self.rows)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf)?)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (echo, rows): (Echo, Vec<TableRow>) = read_csv(text)?;
        let table = rows.first().map_or(0, |r| r.table);
        Ok(Self { table, echo, rows })
    }
}

pub fn preset_instance(row: &PresetRow, init: &InitialBeliefs) -> Result<Instance> {
    Ok(Instance::identical(
        ChannelParams::new(row.p, row.r)?,
        row.users,
        row.horizon,
        DelayPmf::normalized(&row.delay)?,
        init.clone(),
    )?)
}

/// Evaluates one preset row: exact optimal and greedy values when the
/// instance fits the limits, otherwise the genie value and simulated greedy.
pub fn run_row(table: u8, index: usize, row: &PresetRow, opts: &TableOptions) -> Result<TableRow> {
    let inst = preset_instance(row, &opts.init)?;
    let start = Instant::now();
    let mc = McConfig::new(opts.episodes, opts.seed);
    let s = suboptimality_report(&inst, &opts.limits, &mc)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let describe = inst.describe();
    let get = |k: &str| describe.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap_or_default();
    Ok(TableRow {
        table,
        row: index,
        n: row.users,
        m: row.horizon,
        p: row.p,
        r: row.r,
        delay_pmf: get("delay"),
        pi: get("pi"),
        reference_kind: match s.reference_kind {
            Reference::Optimal => "optimal".into(),
            Reference::Genie => "genie".into(),
        },
        reference: s.reference,
        greedy: s.greedy,
        greedy_stderr: s.greedy_stderr,
        percent: s.percent,
        published_reference: row.published.reference,
        published_greedy: row.published.greedy,
        published_percent: row.published.percent,
        runtime_ms: opts.timing.then_some(elapsed),
    })
}

pub fn run_table(table: u8, opts: &TableOptions) -> Result<TableArtifact> {
    let Some(rows) = table_rows(table) else { bail!("unknown table {table}; expected 1 to 4") };
    let selected: Vec<usize> = match &opts.rows {
        Some(sel) => {
            if let Some(bad) = sel.iter().find(|&&i| i == 0 || i > rows.len()) {
                bail!("table {table} has rows 1 to {}, got {bad}", rows.len());
            }
            sel.clone()
        }
        None => (1..=rows.len()).collect(),
    };
    let out = selected.iter().map(|&i| run_row(table, i, &rows[i - 1], opts)).collect::<Result<Vec<_>>>()?;
    let init = match &opts.init {
        InitialBeliefs::Steady => "steady".to_string(),
        InitialBeliefs::Explicit(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    };
    let echo = vec![
        ("table".to_string(), table.to_string()),
        ("pi".to_string(), init),
        ("episodes".to_string(), opts.episodes.to_string()),
        ("seed".to_string(), opts.seed.to_string()),
        ("max_users".to_string(), opts.limits.max_users.to_string()),
        ("max_horizon".to_string(), opts.limits.max_horizon.to_string()),
        ("max_delay".to_string(), opts.limits.max_delay.to_string()),
    ];
    Ok(TableArtifact { table, echo, rows: out })
}
