use std::fs;
use std::path::{Path, PathBuf};

use gainloss_core::dependence::{dependence_sweep, Binning};
use gainloss_core::fpt::{
    analyze_barrier, empirical_pmf, first_passage_times, Barrier, BarrierAnalysis, EmpiricalPmf,
};
use gainloss_core::index::{build_index, leave_one_out_index, PricePanel};
use gainloss_core::series::{log_returns, scramble, scramble_returns, PriceSeries, ScrambleSpec};
use gainloss_core::synthetic::{generate_gbm, generate_regime_panel};
use serde::Serialize;

use crate::config::{
    BarrierConfig, DependenceConfig, Format, FptConfig, IndexConfig, PanelInput, RunConfig,
    ScrambleConfig, SeriesInput, SimulateConfig,
};
use crate::error::{CliError, CliResult};
use crate::table::{
    align, format_value, read_table, write_csv, write_table, Aligned, DroppedDates,
};

pub const TOOL: &str = "gainloss";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files written by a command and a few lines worth printing.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

#[derive(Serialize)]
struct Envelope<'a, B> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: B,
}

struct Writer<'a> {
    config: &'a RunConfig,
    out: &'a Path,
    output: RunOutput,
}

impl<'a> Writer<'a> {
    fn new(config: &'a RunConfig, out: &'a Path) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(|source| CliError::Output {
            path: out.to_path_buf(),
            source,
        })?;
        Ok(Self {
            config,
            out,
            output: RunOutput::default(),
        })
    }

    /// The comment line that opens every CSV file.
    fn stamp(&self) -> CliResult<Vec<String>> {
        let config = serde_json::to_string(self.config)
            .map_err(|e| CliError::Invalid(format!("serializing config: {e}")))?;
        Ok(vec![format!("{TOOL} {VERSION} config={config}")])
    }

    fn json<B: Serialize>(&mut self, name: &str, body: B) -> CliResult<()> {
        let path = self.out.join(name);
        let envelope = Envelope {
            tool: TOOL,
            version: VERSION,
            config: self.config,
            body,
        };
        let mut text = serde_json::to_string_pretty(&envelope)
            .map_err(|e| CliError::Invalid(format!("serializing report: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        self.output.files.push(path);
        Ok(())
    }

    fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.out.join(name);
        write_csv(&path, &self.stamp()?, header, rows)?;
        self.output.files.push(path);
        Ok(())
    }

    fn table(
        &mut self,
        name: &str,
        dates: Option<&[String]>,
        columns: &[(&str, &[f64])],
    ) -> CliResult<()> {
        let path = self.out.join(name);
        write_table(&path, &self.stamp()?, dates, columns)?;
        self.output.files.push(path);
        Ok(())
    }
}

pub fn run(config: &RunConfig, out: &Path) -> CliResult<RunOutput> {
    config.validate()?;
    let mut writer = Writer::new(config, out)?;
    match config {
        RunConfig::Fpt(c) => cmd_fpt(c, &mut writer)?,
        RunConfig::Scramble(c) => cmd_scramble(c, &mut writer)?,
        RunConfig::Index(c) => cmd_index(c, &mut writer)?,
        RunConfig::Dependence(c) => cmd_dependence(c, &mut writer)?,
        RunConfig::Simulate(c) => cmd_simulate(c, &mut writer)?,
    }
    Ok(writer.output)
}

/// Re-executes the config embedded in a JSON report.
pub fn rerun(report: &Path, out: &Path) -> CliResult<(RunConfig, RunOutput)> {
    let text = fs::read_to_string(report).map_err(|e| CliError::input(report, e.to_string()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::parse(report, e.line() as u64, format!("not a JSON report: {e}")))?;
    let config = value
        .get_mut("config")
        .map(serde_json::Value::take)
        .ok_or_else(|| CliError::input(report, "no embedded config"))?;
    let config: RunConfig = serde_json::from_value(config)
        .map_err(|e| CliError::input(report, format!("embedded config is invalid: {e}")))?;
    let output = run(&config, out)?;
    Ok((config, output))
}

#[derive(Debug, Serialize)]
struct InputSummary {
    label: String,
    columns: Vec<String>,
    /// Days in the analyzed grid.
    days: usize,
    first_date: Option<String>,
    last_date: Option<String>,
    dropped: Vec<DroppedDates>,
}

impl InputSummary {
    fn new(label: &str, aligned: &Aligned) -> Self {
        let dates = aligned.dates.as_deref().unwrap_or_default();
        Self {
            label: label.to_string(),
            columns: aligned.columns.iter().map(|c| c.name.clone()).collect(),
            days: aligned.columns.first().map_or(0, |c| c.values.len()),
            first_date: dates.first().cloned(),
            last_date: dates.last().cloned(),
            dropped: aligned.dropped.clone(),
        }
    }
}

fn read_aligned(paths: &[String], strict: bool) -> CliResult<Aligned> {
    let tables = paths
        .iter()
        .map(|p| read_table(Path::new(p)))
        .collect::<CliResult<Vec<_>>>()?;
    align(tables, strict)
}

fn panel_of(aligned: &Aligned) -> CliResult<PricePanel> {
    let names = aligned.columns.iter().map(|c| c.name.clone()).collect();
    let rows = aligned.columns.iter().map(|c| c.values.clone()).collect();
    Ok(PricePanel::new(names, rows)?)
}

struct Loaded {
    series: PriceSeries,
    summary: InputSummary,
}

fn load_series(input: &SeriesInput) -> CliResult<Loaded> {
    if !input.panel && input.paths.len() > 1 {
        return Err(CliError::Invalid(
            "several inputs given; pass --panel to analyze their artificial index".into(),
        ));
    }
    let mut aligned = read_aligned(&input.paths, input.strict_dates)?;
    let series = if input.panel {
        build_index(&panel_of(&aligned)?)
    } else {
        let names: Vec<&str> = aligned.columns.iter().map(|c| c.name.as_str()).collect();
        let pick = match &input.column {
            Some(name) => names.iter().position(|n| n == name).ok_or_else(|| {
                CliError::Invalid(format!(
                    "no column '{name}' in the input; columns: {}",
                    names.join(", ")
                ))
            })?,
            None if names.len() == 1 => 0,
            None => {
                return Err(CliError::Invalid(format!(
                    "input has columns {}; choose one with --column or use --panel",
                    names.join(", ")
                )))
            }
        };
        let column = aligned.columns.swap_remove(pick);
        aligned.columns = vec![column];
        let column = &aligned.columns[0];
        PriceSeries::new(column.name.clone(), column.values.clone())
            .map_err(|e| CliError::input(&input.paths[0], e.to_string()))?
    };
    Ok(Loaded {
        summary: InputSummary::new(series.label(), &aligned),
        series,
    })
}

#[derive(Debug, Serialize)]
struct Asymmetry {
    rho_abs: f64,
    /// `mode(+rho) - mode(-rho)` in days.
    value: Option<f64>,
    absent: Option<String>,
}

/// One entry per `|rho|` for which both signs were requested.
fn asymmetries(analyses: &[BarrierAnalysis], min_crossings: usize) -> Vec<Asymmetry> {
    let mut out = Vec::new();
    for gain in analyses.iter().filter(|a| a.rho.is_gain()) {
        let rho = gain.rho.rho();
        let Some(loss) = analyses.iter().find(|a| a.rho.rho() == -rho) else {
            continue;
        };
        let short = [gain, loss]
            .into_iter()
            .find(|a| a.pmf.samples < min_crossings.max(1));
        out.push(match short {
            Some(a) => Asymmetry {
                rho_abs: rho,
                value: None,
                absent: Some(
                    gainloss_core::Error::TooFewCrossings {
                        rho: a.rho.rho(),
                        got: a.pmf.samples,
                        needed: min_crossings.max(1),
                    }
                    .to_string(),
                ),
            },
            None => Asymmetry {
                rho_abs: rho,
                value: Some(gain.modes.empirical as f64 - loss.modes.empirical as f64),
                absent: None,
            },
        });
    }
    out
}

fn pmf_rows(analysis: &BarrierAnalysis) -> impl Iterator<Item = Vec<String>> + '_ {
    let fit = analysis.fit.filter(|f| f.converged);
    analysis.pmf.support().map(move |(t, m)| {
        vec![
            t.to_string(),
            format_value(m),
            fit.map_or(String::new(), |f| format_value(f.params.density(t as f64))),
        ]
    })
}

fn write_barriers(
    writer: &mut Writer,
    prefix: &str,
    format: Format,
    analyses: &[BarrierAnalysis],
    asymmetry: &[Asymmetry],
) -> CliResult<()> {
    if format == Format::Csv {
        for analysis in analyses {
            let name = format!("{prefix}_pmf_{:+}.csv", analysis.rho.rho());
            writer.csv(&name, &["t", "mass", "fitted_density"], pmf_rows(analysis))?;
        }
    }
    for a in analyses {
        writer.output.summary.push(format!(
            "rho {:+}: {} crossing(s), {} censored, empirical mode {} day(s){}",
            a.rho.rho(),
            a.pmf.samples,
            a.starts_censored,
            a.modes.empirical,
            a.modes
                .fitted
                .map_or(String::new(), |m| format!(", fitted mode {m:.2}")),
        ));
    }
    for a in asymmetry {
        writer.output.summary.push(match (a.value, &a.absent) {
            (Some(v), _) => format!("asymmetry at {}: {v:+} day(s)", a.rho_abs),
            (None, reason) => format!(
                "asymmetry at {}: not available ({})",
                a.rho_abs,
                reason.as_deref().unwrap_or("")
            ),
        });
    }
    Ok(())
}

fn barriers_of(config: &BarrierConfig) -> CliResult<Vec<Barrier>> {
    config
        .rho
        .iter()
        .map(|&r| Barrier::new(r).map_err(CliError::from))
        .collect()
}

#[derive(Serialize)]
struct FptReport<'a> {
    input: &'a InputSummary,
    barriers: &'a [BarrierAnalysis],
    asymmetry: &'a [Asymmetry],
}

fn cmd_fpt(config: &FptConfig, writer: &mut Writer) -> CliResult<()> {
    let loaded = load_series(&config.input)?;
    let b = &config.barriers;
    let analyses = barriers_of(b)?
        .into_iter()
        .map(|rho| {
            Ok(analyze_barrier(
                &loaded.series,
                rho,
                b.t_max,
                b.fit_weights,
            )?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let asymmetry = asymmetries(&analyses, b.min_crossings);
    write_barriers(writer, "fpt", config.format, &analyses, &asymmetry)?;
    writer.json(
        "fpt.json",
        FptReport {
            input: &loaded.summary,
            barriers: &analyses,
            asymmetry: &asymmetry,
        },
    )
}

#[derive(Debug, Serialize)]
struct Replicate {
    seed: u64,
    /// Sorted permuted returns equal the sorted original returns bit for bit.
    multiset_preserved: bool,
    /// `|last(scrambled) - last(original)| / last(original)`.
    terminal_rel_error: f64,
}

#[derive(Serialize)]
struct ScrambleReport<'a> {
    input: &'a InputSummary,
    algorithm: &'static str,
    replicates: &'a [Replicate],
    /// Histograms are averaged bin by bin over replicates before fitting.
    barriers: &'a [BarrierAnalysis],
    asymmetry: &'a [Asymmetry],
}

fn sorted_bits(values: &[f64]) -> Vec<u64> {
    let mut bits: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
    bits.sort_unstable();
    bits
}

fn cmd_scramble(config: &ScrambleConfig, writer: &mut Writer) -> CliResult<()> {
    let loaded = load_series(&config.input)?;
    let b = &config.barriers;
    let barriers = barriers_of(b)?;
    let original = log_returns(&loaded.series);
    let original_bits = sorted_bits(&original.values);

    let mut replicates = Vec::with_capacity(config.replicates);
    let mut pmfs: Vec<Vec<EmpiricalPmf>> = vec![Vec::new(); barriers.len()];
    let mut starts = vec![(0usize, 0usize); barriers.len()];
    for r in 0..config.replicates {
        let spec = ScrambleSpec {
            seed: config.seed.wrapping_add(r as u64),
            algorithm: config.algorithm,
        };
        let permuted = scramble_returns(&original, &spec);
        let scrambled = scramble(&loaded.series, &spec)?;
        replicates.push(Replicate {
            seed: spec.seed,
            multiset_preserved: sorted_bits(&permuted.values) == original_bits,
            terminal_rel_error: (scrambled.last() - loaded.series.last()).abs()
                / loaded.series.last(),
        });
        for (k, &rho) in barriers.iter().enumerate() {
            let samples = first_passage_times(&scrambled, rho);
            starts[k].0 += samples.starts_total;
            starts[k].1 += samples.starts_censored;
            pmfs[k].push(empirical_pmf(&samples, b.t_max)?);
        }
    }
    let analyses: Vec<BarrierAnalysis> = barriers
        .iter()
        .zip(pmfs)
        .zip(starts)
        .map(|((&rho, pmfs), (total, censored))| {
            let pmf = EmpiricalPmf::average(&pmfs)
                .ok_or(CliError::Numerical("no replicates to average".into()))?;
            Ok(BarrierAnalysis::from_pmf(
                rho,
                total,
                censored,
                pmf,
                b.fit_weights,
            ))
        })
        .collect::<CliResult<_>>()?;
    let asymmetry = asymmetries(&analyses, b.min_crossings);
    write_barriers(writer, "scramble", config.format, &analyses, &asymmetry)?;
    writer.json(
        "scramble.json",
        ScrambleReport {
            input: &loaded.summary,
            algorithm: config.algorithm.name(),
            replicates: &replicates,
            barriers: &analyses,
            asymmetry: &asymmetry,
        },
    )
}

#[derive(Serialize)]
struct IndexReport<'a> {
    input: &'a InputSummary,
    stocks: usize,
    /// Largest `|N I - (N-1) I_n - S_n / S_n0| / (N I)` over all days and stocks.
    reconstitution_max_rel_error: Option<f64>,
    files: Vec<String>,
}

fn load_panel(input: &PanelInput) -> CliResult<(PricePanel, Aligned)> {
    let aligned = read_aligned(&input.paths, input.strict_dates)?;
    Ok((panel_of(&aligned)?, aligned))
}

fn cmd_index(config: &IndexConfig, writer: &mut Writer) -> CliResult<()> {
    let (panel, aligned) = load_panel(&config.input)?;
    let index = build_index(&panel);
    let mut names = vec!["index".to_string()];
    let mut columns = vec![index.values().to_vec()];
    let mut max_error = None;
    if config.leave_one_out {
        let n = panel.stocks() as f64;
        let mut worst = 0.0f64;
        for (k, name) in panel.names().iter().enumerate() {
            let loo = leave_one_out_index(&panel, k)?;
            let row = panel.row(k);
            for (t, (&i, &i_n)) in index.values().iter().zip(loo.values()).enumerate() {
                let lhs = n * i;
                worst = worst.max((lhs - (n - 1.0) * i_n - row[t] / row[0]).abs() / lhs);
            }
            names.push(format!("without_{name}"));
            columns.push(loo.values().to_vec());
        }
        max_error = Some(worst);
    }
    let refs: Vec<(&str, &[f64])> = names
        .iter()
        .map(String::as_str)
        .zip(columns.iter().map(Vec::as_slice))
        .collect();
    writer.table("index.csv", aligned.dates.as_deref(), &refs)?;
    writer.output.summary.push(format!(
        "index of {} stock(s) over {} day(s)",
        panel.stocks(),
        panel.days() + 1
    ));
    writer.json(
        "index.json",
        IndexReport {
            input: &InputSummary::new("index", &aligned),
            stocks: panel.stocks(),
            reconstitution_max_rel_error: max_error,
            files: vec!["index.csv".into()],
        },
    )
}

#[derive(Serialize)]
struct DependenceMeta {
    bins: usize,
    log_base: &'static str,
    units: &'static str,
    estimator: &'static str,
    partition: &'static str,
}

#[derive(Serialize)]
struct DependenceJson<'a> {
    input: &'a InputSummary,
    metadata: DependenceMeta,
    rows: &'a [gainloss_core::dependence::DependenceRow],
}

fn cmd_dependence(config: &DependenceConfig, writer: &mut Writer) -> CliResult<()> {
    let (panel, aligned) = load_panel(&config.input)?;
    let binning = Binning::new(config.bins)?;
    let report = dependence_sweep(&panel, &config.window_lengths, &binning)?;
    if config.format == Format::Csv {
        let rows = report.rows.iter().map(|row| match &row.estimate {
            Some(e) => vec![
                row.window.to_string(),
                format_value(e.mi_up),
                format_value(e.mi_down),
                format_value(e.corr_up),
                format_value(e.corr_down),
                e.up_days.to_string(),
                e.down_days.to_string(),
            ],
            None => {
                let mut r = vec![row.window.to_string()];
                r.resize(7, String::new());
                r
            }
        });
        writer.csv(
            "dependence.csv",
            &["L", "M_U", "M_D", "C_U", "C_D", "n_U", "n_D"],
            rows,
        )?;
    }
    for row in &report.rows {
        writer
            .output
            .summary
            .push(match (&row.estimate, &row.absent) {
                (Some(e), _) => format!(
                    "L={}: M_U={:.4} M_D={:.4} C_U={:.4} C_D={:.4}",
                    row.window, e.mi_up, e.mi_down, e.corr_up, e.corr_down
                ),
                (None, reason) => format!(
                    "L={}: absent ({})",
                    row.window,
                    reason.as_deref().unwrap_or("")
                ),
            });
    }
    writer.json(
        "dependence.json",
        DependenceJson {
            input: &InputSummary::new("panel", &aligned),
            metadata: DependenceMeta {
                bins: report.bins,
                log_base: "e",
                units: "nats",
                estimator: "plug-in, quantile bins",
                partition: "U/D days of the full artificial index",
            },
            rows: &report.rows,
        },
    )
}

#[derive(Serialize)]
struct SimulateReport {
    stocks: usize,
    days: usize,
    files: Vec<String>,
}

fn cmd_simulate(config: &SimulateConfig, writer: &mut Writer) -> CliResult<()> {
    let (file, stocks, days) = match config {
        SimulateConfig::Gbm(spec) => {
            let series = generate_gbm(spec)?;
            writer.table("gbm.csv", None, &[(series.label(), series.values())])?;
            ("gbm.csv", 1, series.values().len())
        }
        SimulateConfig::Regime(spec) => {
            let panel = generate_regime_panel(spec)?;
            let columns: Vec<(&str, &[f64])> = panel
                .names()
                .iter()
                .map(String::as_str)
                .zip(panel.rows().iter().map(Vec::as_slice))
                .collect();
            writer.table("panel.csv", None, &columns)?;
            ("panel.csv", panel.stocks(), panel.days() + 1)
        }
    };
    writer.output.summary.push(format!(
        "{stocks} series of {days} value(s) written to {file}"
    ));
    writer.json(
        "simulate.json",
        SimulateReport {
            stocks,
            days,
            files: vec![file.into()],
        },
    )
}
