//! `depnet`: dependency network analytics from the command line.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depnet::emit::{self, Format};
use depnet::evolution::{
    active_packages, dependency_distribution, dependency_ratio_series, dependents_inequality,
    depth_distribution, growth_series, index_series, release_counts_series, survival_dataset,
    transitive_ratio_series, update_counts_series, update_distribution, update_inequality,
    updates_by_age, SurvivalGroups, TimeSeries,
};
use depnet::fixtures::{self, generate, read_manifest, write_dataset, GeneratorConfig, MANIFEST_FILE};
use depnet::graphops::{classify, weakly_connected_components};
use depnet::indices::{
    changeability_index, p_impact_index, reusability_index_with, IndexName, IndexReport,
    ReuseBasis, DEFAULT_P_PERCENT, DEFAULT_WINDOW_DAYS,
};
use depnet::ingest::{
    filter_dependencies, parse_dataset, read_exclusion_list, validate_dataset, Dataset,
    DatasetPaths, ValidationOptions, DEFAULT_INCLUDED_KINDS,
};
use depnet::snapshot::{build_snapshot, SnapshotGraph};
use depnet::stats::{kaplan_meier, log_rank, Alpha};
use depnet::time::{format_timestamp, parse_date_or_month, parse_timestamp, Month, Timestamp};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "depnet", version, about = "Temporal analysis of package dependency networks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Directory holding packages.csv, releases.csv and dependencies.csv
    #[arg(long, global = true, env = "DEPNET_DATA", default_value = ".")]
    data: PathBuf,
    /// End of observation (YYYY-MM-DD or YYYY-MM). Defaults to the cutoff in
    /// the data directory's manifest.json, else the last release.
    #[arg(long, global = true)]
    cutoff: Option<String>,
    /// Override the ecosystem name used in output file names
    #[arg(long, global = true)]
    ecosystem: Option<String>,
    /// Dependency kinds to keep, comma separated
    #[arg(long, global = true, value_delimiter = ',', default_values_t = DEFAULT_INCLUDED_KINDS.map(String::from))]
    kinds: Vec<String>,
    /// File listing packages to ignore, one name per line
    #[arg(long, global = true)]
    exclude_file: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Output file, or a directory to receive `<metric>__<ecosystem>.<ext>`.
    /// Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, env = "DEPNET_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Also write a JSON provenance record (input hash, arguments, version)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the dataset and report filtering, ordering problems and bursts
    Validate {
        /// Burst threshold as a multiple of the trailing 12-month median
        #[arg(long, default_value_t = 10.0)]
        burst_factor: f64,
    },
    /// Summary (or edge list) of the network at one instant
    Snapshot {
        #[arg(long)]
        at: String,
        /// Print the edge list instead of the summary
        #[arg(long)]
        edges: bool,
    },
    /// Monthly series
    Series(SeriesArgs),
    /// Distributions at one instant
    Distribution {
        #[arg(value_enum)]
        what: DistributionKind,
        /// Instant for updates/depth/deps (default: cutoff)
        #[arg(long)]
        at: Option<String>,
        /// Window for `ages` (default: the year before the cutoff)
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        window: Option<Vec<String>>,
    },
    /// Release survival: Kaplan-Meier curves or a log-rank test
    Survival {
        /// Separate releases of required packages from the others
        #[arg(long)]
        split_required: bool,
        /// Print survival curves (default)
        #[arg(long, conflicts_with = "logrank")]
        km: bool,
        /// Compare required and other packages; implies --split-required
        #[arg(long)]
        logrank: bool,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// Lorenz curve and Gini index
    Inequality {
        #[arg(value_enum)]
        what: InequalityKind,
        /// Update window `[START, END)` (default: the year before the cutoff)
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        window: Option<Vec<String>>,
        /// Snapshot instant for `dependents` (default: cutoff)
        #[arg(long)]
        at: Option<String>,
        /// Print the Gini summary instead of the curve
        #[arg(long)]
        summary: bool,
    },
    /// One index at one instant
    Index {
        #[arg(value_enum)]
        which: IndexKind,
        #[arg(long)]
        at: String,
        /// P for the impact index, in percent
        #[arg(long, default_value_t = DEFAULT_P_PERCENT)]
        p: f64,
        /// Trailing window for changeability, in days
        #[arg(long, default_value_t = DEFAULT_WINDOW_DAYS)]
        window_days: u32,
        /// Count transitive rather than direct dependents for reusability
        #[arg(long)]
        transitive: bool,
    },
    /// Write fixture datasets
    #[command(subcommand)]
    Fixture(FixtureCommand),
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[arg(value_enum)]
    what: SeriesKind,
    /// First month (default: month of the first release)
    #[arg(long)]
    from: Option<String>,
    /// Last month (default: month of the cutoff)
    #[arg(long)]
    to: Option<String>,
    /// Index for `series index`
    #[arg(long, value_enum, default_value_t = IndexKind::Impact)]
    index: IndexKind,
    /// P for the impact index, in percent
    #[arg(long)]
    p: Option<f64>,
    /// Trailing window for changeability, in days
    #[arg(long)]
    window_days: Option<u32>,
    /// Count first releases too in `series updates`
    #[arg(long)]
    include_first: bool,
    /// Growth series to use with --fit
    #[arg(long, value_enum, default_value_t = GrowthOf::Packages)]
    of: GrowthOf,
    /// Print linear and exponential fits instead of the series
    #[arg(long)]
    fit: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SeriesKind {
    Growth,
    Ratio,
    Updates,
    TransitiveRatio,
    Index,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GrowthOf {
    Packages,
    Dependencies,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistributionKind {
    Updates,
    Depth,
    Deps,
    Ages,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InequalityKind {
    Updates,
    Dependents,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IndexKind {
    Changeability,
    Reusability,
    Impact,
}

impl From<IndexKind> for IndexName {
    fn from(k: IndexKind) -> Self {
        match k {
            IndexKind::Changeability => IndexName::Changeability,
            IndexKind::Reusability => IndexName::Reusability,
            IndexKind::Impact => IndexName::PImpact,
        }
    }
}

#[derive(Subcommand, Debug)]
enum FixtureCommand {
    /// Generate a synthetic ecosystem into --out
    Generate {
        #[arg(long, default_value_t = 1000)]
        packages: usize,
        #[arg(long, default_value_t = 24)]
        months: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        attachment_bias: f64,
        #[arg(long, default_value_t = 2.0)]
        mean_deps: f64,
        #[arg(long, default_value_t = 0.3)]
        update_rate: f64,
        /// First month of the history
        #[arg(long, default_value = "2015-01")]
        start: String,
    },
    /// Write the five-package fixture into --out
    Tiny,
}

/// Failures split by exit code.
enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let jobs = cli.global.jobs;
    let result = if jobs == 0 {
        run(&cli)
    } else {
        depnet::with_jobs(jobs, || run(&cli))
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text = format!("{text}: {c}");
        }
    }
    text
}

fn instant(s: &str) -> Outcome<Timestamp> {
    parse_date_or_month(s)
        .or_else(|_| parse_timestamp(s))
        .map_err(|e| usage(format!("invalid date `{s}`: {e}")))
}

fn month_arg(s: &str) -> Outcome<Month> {
    s.parse::<Month>()
        .or_else(|_| parse_date_or_month(s).map(|t| Month::of(&t)))
        .map_err(|_| usage(format!("invalid month `{s}` (expected YYYY-MM)")))
}

/// A dataset with the provenance needed for the manifest.
struct Loaded {
    data: Dataset,
    sha256: String,
}

fn load(g: &Global) -> Outcome<Loaded> {
    let paths = DatasetPaths::in_dir(&g.data);
    let manifest_path = g.data.join(MANIFEST_FILE);
    let cutoff = match &g.cutoff {
        Some(c) => Some(instant(c)?),
        None if manifest_path.is_file() => Some(
            read_manifest(&manifest_path)
                .map_err(anyhow::Error::from)?
                .cutoff,
        ),
        None => None,
    };
    // Without a cutoff, read with an open end and close it at the last release.
    let open_end = parse_timestamp("9999-12-31").expect("valid sentinel");
    let raw = parse_dataset(&paths, cutoff.unwrap_or(open_end)).map_err(anyhow::Error::from)?;
    let raw = match cutoff {
        Some(_) => raw,
        None => {
            let last = raw.last_release_time().unwrap_or(open_end);
            raw.with_cutoff(last).map_err(anyhow::Error::from)?
        }
    };
    let raw = match &g.ecosystem {
        Some(e) => raw.with_ecosystem(e.clone()),
        None => raw,
    };
    let kinds: BTreeSet<String> = g.kinds.iter().map(|k| k.trim().to_ascii_lowercase()).collect();
    let excluded = match &g.exclude_file {
        Some(p) => read_exclusion_list(p).map_err(anyhow::Error::from)?,
        None => BTreeSet::new(),
    };
    let data = filter_dependencies(raw, &kinds, &excluded);

    let mut hasher = Sha256::new();
    for p in [&paths.packages, &paths.releases, &paths.dependencies] {
        hasher.update(std::fs::read(p).with_context(|| p.display().to_string())?);
    }
    Ok(Loaded {
        data,
        sha256: hex::encode(hasher.finalize()),
    })
}

/// Rendered output plus the metric name used for file naming.
struct Table {
    metric: String,
    body: String,
}

fn table<S: Serialize>(metric: impl Into<String>, rows: &[S], header: &[&str], format: Format) -> Table {
    Table {
        metric: metric.into(),
        body: emit::render_or_header(rows, header, format),
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    let g = &cli.global;
    let format: Format = g.format.into();

    if let Command::Fixture(f) = &cli.command {
        return run_fixture(f, g);
    }

    let loaded = load(g)?;
    let d = &loaded.data;
    let out = match &cli.command {
        Command::Validate { burst_factor } => {
            if !(burst_factor.is_finite() && *burst_factor > 0.0) {
                return Err(usage("--burst-factor must be positive"));
            }
            let report = validate_dataset(d, &ValidationOptions { burst_factor: *burst_factor });
            let out = validation_table(d, &report, format);
            write_output(g, d, &out)?;
            if report.has_errors() {
                return Err(Failure::Data(anyhow!("dataset has errors")));
            }
            return write_provenance(cli, &loaded, &out);
        }
        Command::Snapshot { at, edges } => {
            let t = within_cutoff(d, instant(at)?)?;
            let snap = build_snapshot(d, t);
            if *edges {
                #[derive(Serialize)]
                struct Edge<'a> {
                    source: &'a str,
                    target: &'a str,
                }
                let rows: Vec<Edge> = snap.edges().map(|(source, target)| Edge { source, target }).collect();
                table("edges", &rows, &["source", "target"], format)
            } else {
                table("snapshot", &[snapshot_summary(&snap)], &[], format)
            }
        }
        Command::Series(args) => run_series(d, args, format)?,
        Command::Distribution { what, at, window } => {
            let t = match at {
                Some(a) => within_cutoff(d, instant(a)?)?,
                None => d.cutoff(),
            };
            let header = ["bin", "count", "proportion"];
            match what {
                DistributionKind::Updates => table(
                    "update_distribution",
                    &emit::update_bin_rows(&update_distribution(d, t)),
                    &header,
                    format,
                ),
                DistributionKind::Depth => table(
                    "depth_distribution",
                    &emit::histogram_rows(&depth_distribution(&build_snapshot(d, t))),
                    &header,
                    format,
                ),
                DistributionKind::Deps => table(
                    "dependency_distribution",
                    &dependency_distribution(&build_snapshot(d, t)),
                    &["package", "n_direct", "n_transitive", "n_rev_direct", "n_rev_transitive", "depth"],
                    format,
                ),
                DistributionKind::Ages => {
                    let (start, end) = window_arg(d, window.as_deref())?;
                    let h = updates_by_age(d, start, end).map_err(anyhow::Error::from)?;
                    table("updates_by_age", &emit::age_rows(&h), &header, format)
                }
            }
        }
        Command::Survival {
            split_required,
            km: _,
            logrank,
            alpha,
        } => {
            let alpha = Alpha::try_from(*alpha).map_err(|_| usage("--alpha must be 0.05 or 0.01"))?;
            let groups = survival_dataset(d, *split_required || *logrank);
            if *logrank {
                let SurvivalGroups::Split { required, not_required } = &groups else {
                    unreachable!("split requested");
                };
                let r = log_rank(required, not_required, alpha).map_err(anyhow::Error::from)?;
                table("logrank", &[r], &[], format)
            } else {
                #[derive(Serialize)]
                struct Row<'a> {
                    group: &'a str,
                    time: f64,
                    survival: f64,
                }
                let mut rows = Vec::new();
                for s in groups.samples() {
                    if s.is_empty() {
                        continue;
                    }
                    let curve = kaplan_meier(s).map_err(anyhow::Error::from)?;
                    rows.extend(emit::survival_rows(&curve).into_iter().map(|r| Row {
                        group: &s.label,
                        time: r.time,
                        survival: r.survival,
                    }));
                }
                table("survival", &rows, &["group", "time", "survival"], format)
            }
        }
        Command::Inequality {
            what,
            window,
            at,
            summary,
        } => run_inequality(d, *what, window.as_deref(), at.as_deref(), *summary, format)?,
        Command::Index {
            which,
            at,
            p,
            window_days,
            transitive,
        } => {
            let t = within_cutoff(d, instant(at)?)?;
            let report = match which {
                IndexKind::Changeability => {
                    if *window_days == 0 {
                        return Err(usage("--window-days must be positive"));
                    }
                    changeability_index(d, t, *window_days).map_err(anyhow::Error::from)?
                }
                IndexKind::Reusability => {
                    let basis = if *transitive { ReuseBasis::Transitive } else { ReuseBasis::Direct };
                    reusability_index_with(&build_snapshot(d, t), basis)
                }
                IndexKind::Impact => {
                    check_percent(*p)?;
                    p_impact_index(&build_snapshot(d, t), *p).map_err(anyhow::Error::from)?
                }
            };
            table(format!("index_{}", report.index), &[index_row(&report)], &[], format)
        }
        Command::Fixture(_) => unreachable!("handled above"),
    };
    write_output(g, d, &out)?;
    write_provenance(cli, &loaded, &out)
}

fn check_percent(p: f64) -> Outcome<()> {
    if p > 0.0 && p <= 100.0 {
        Ok(())
    } else {
        Err(usage(format!("--p must lie in (0, 100], got {p}")))
    }
}

fn within_cutoff(d: &Dataset, t: Timestamp) -> Outcome<Timestamp> {
    if t > d.cutoff() {
        return Err(Failure::Data(anyhow!(
            "{} is after the end of observation {}",
            format_timestamp(&t),
            format_timestamp(&d.cutoff())
        )));
    }
    Ok(t)
}

/// Defaults to the year ending at the cutoff.
fn window_arg(d: &Dataset, window: Option<&[String]>) -> Outcome<(Timestamp, Timestamp)> {
    match window {
        Some([start, end]) => {
            let (s, e) = (instant(start)?, instant(end)?);
            if s > e {
                return Err(usage(format!("window start {start} is after its end {end}")));
            }
            Ok((s, e))
        }
        Some(_) => Err(usage("--window takes START and END")),
        None => Ok((d.cutoff() - chrono::Duration::days(365), d.cutoff())),
    }
}

#[derive(Serialize)]
struct SnapshotSummary {
    at: String,
    packages: usize,
    dependencies: usize,
    dependent: usize,
    required: usize,
    connected: usize,
    top_level: usize,
    components: usize,
    largest_component_fraction: Option<f64>,
    dropped_dependencies: usize,
}

fn snapshot_summary(g: &SnapshotGraph) -> SnapshotSummary {
    let roles = classify(g);
    let components = weakly_connected_components(g);
    SnapshotSummary {
        at: format_timestamp(&g.at()),
        packages: g.node_count(),
        dependencies: g.edge_count(),
        dependent: roles.dependent,
        required: roles.required,
        connected: roles.connected,
        top_level: roles.top_level,
        components: components.components.len(),
        largest_component_fraction: components.largest_connected_fraction(),
        dropped_dependencies: g.dropped_dependencies(),
    }
}

#[derive(Serialize)]
struct IndexRow {
    at: String,
    index_name: String,
    parameter: Option<f64>,
    value: u64,
}

fn index_row(r: &IndexReport) -> IndexRow {
    IndexRow {
        at: format_timestamp(&r.at),
        index_name: r.index.to_string(),
        parameter: r.parameter,
        value: r.value,
    }
}

fn validation_table(d: &Dataset, report: &depnet::ingest::ValidationReport, format: Format) -> Table {
    #[derive(Serialize)]
    struct Row {
        check: String,
        subject: String,
        detail: String,
    }
    if let Format::Json = format {
        #[derive(Serialize)]
        struct Full<'a> {
            ecosystem: &'a str,
            cutoff: String,
            packages: usize,
            releases: usize,
            dependencies: usize,
            filter: &'a depnet::ingest::FilterReport,
            unresolved_fraction: f64,
            validation: &'a depnet::ingest::ValidationReport,
        }
        let full = Full {
            ecosystem: d.ecosystem(),
            cutoff: format_timestamp(&d.cutoff()),
            packages: d.packages().len(),
            releases: d.releases().len(),
            dependencies: d.dependencies().len(),
            filter: d.filter_report(),
            unresolved_fraction: d.filter_report().unresolved_fraction(),
            validation: report,
        };
        return Table {
            metric: "validation".into(),
            body: serde_json::to_string_pretty(&full).expect("report serializes") + "\n",
        };
    }
    let f = d.filter_report();
    let mut rows = vec![
        Row { check: "count".into(), subject: "packages".into(), detail: d.packages().len().to_string() },
        Row { check: "count".into(), subject: "releases".into(), detail: d.releases().len().to_string() },
        Row { check: "count".into(), subject: "dependencies".into(), detail: d.dependencies().len().to_string() },
    ];
    for (subject, n) in [
        ("kind_dropped", f.kind_dropped),
        ("excluded_packages", f.excluded_packages),
        ("excluded_releases", f.excluded_releases),
        ("excluded_dependencies", f.excluded_dependencies),
        ("duplicate_dependencies", f.duplicate_dependencies),
        ("unresolved_dropped", f.unresolved_dropped),
    ] {
        rows.push(Row { check: "filter".into(), subject: subject.into(), detail: n.to_string() });
    }
    rows.push(Row {
        check: "filter".into(),
        subject: "unresolved_fraction".into(),
        detail: f.unresolved_fraction().to_string(),
    });
    for (p, v) in &report.duplicate_releases {
        rows.push(Row { check: "duplicate_release".into(), subject: p.clone(), detail: v.clone() });
    }
    for o in &report.ordering_flags {
        rows.push(Row {
            check: "ordering".into(),
            subject: o.package.clone(),
            detail: format!("{} before {} ({:?})", o.earlier_version, o.later_version, o.problem),
        });
    }
    for b in &report.bursts {
        rows.push(Row {
            check: "burst".into(),
            subject: b.month.to_string(),
            detail: format!("{} releases, trailing median {}", b.releases, b.trailing_median),
        });
    }
    table("validation", &rows, &[], format)
}

fn run_series(d: &Dataset, args: &SeriesArgs, format: Format) -> Outcome<Table> {
    let from = match &args.from {
        Some(m) => month_arg(m)?,
        None => Month::of(&d.first_release_time().unwrap_or(d.cutoff())),
    };
    let to = match &args.to {
        Some(m) => month_arg(m)?,
        None => Month::of(&d.cutoff()),
    };
    if from > to {
        return Err(usage(format!("--from {from} is after --to {to}")));
    }
    let series_header = ["month", "value"];
    let (metric, series): (String, TimeSeries) = match args.what {
        SeriesKind::Growth => {
            let (p, e) = growth_series(d, from, to).map_err(anyhow::Error::from)?;
            if !args.fit {
                return Ok(table(
                    "growth",
                    &emit::growth_rows(&p, &e),
                    &["month", "packages", "dependencies"],
                    format,
                ));
            }
            match args.of {
                GrowthOf::Packages => ("packages".into(), p),
                GrowthOf::Dependencies => ("dependencies".into(), e),
            }
        }
        SeriesKind::Ratio => (
            "dependency_ratio".into(),
            dependency_ratio_series(d, from, to).map_err(anyhow::Error::from)?,
        ),
        SeriesKind::Updates => {
            let s = if args.include_first {
                release_counts_series(d, from, to)
            } else {
                update_counts_series(d, from, to)
            };
            ("updates".into(), s.map_err(anyhow::Error::from)?)
        }
        SeriesKind::TransitiveRatio => (
            "transitive_ratio".into(),
            transitive_ratio_series(d, from, to).map_err(anyhow::Error::from)?,
        ),
        SeriesKind::Index => {
            let which: IndexName = args.index.into();
            let parameter = match which {
                IndexName::Changeability => {
                    let w = args.window_days.unwrap_or(DEFAULT_WINDOW_DAYS);
                    if w == 0 {
                        return Err(usage("--window-days must be positive"));
                    }
                    Some(w as f64)
                }
                IndexName::PImpact => {
                    let p = args.p.unwrap_or(DEFAULT_P_PERCENT);
                    check_percent(p)?;
                    Some(p)
                }
                IndexName::Reusability => None,
            };
            let s = index_series(d, from, to, which, parameter).map_err(anyhow::Error::from)?;
            if !args.fit {
                return Ok(table(
                    format!("index_{which}"),
                    &emit::index_rows(&s, parameter),
                    &["month", "index_name", "parameter", "value"],
                    format,
                ));
            }
            (format!("index_{which}"), s)
        }
    };
    if args.fit {
        let fits = [series.fit_linear(), series.fit_exponential()]
            .into_iter()
            .map(|f| f.map(|f| emit::fit_row(&f)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| anyhow!("cannot fit {metric}: {e}"))?;
        return Ok(table(format!("{metric}_fit"), &fits, &[], format));
    }
    Ok(table(metric, &emit::series_rows(&series), &series_header, format))
}

fn run_inequality(
    d: &Dataset,
    what: InequalityKind,
    window: Option<&[String]>,
    at: Option<&str>,
    summary: bool,
    format: Format,
) -> Outcome<Table> {
    #[derive(Serialize)]
    struct Summary {
        population: usize,
        total: f64,
        gini: f64,
        normalized_gini: Option<f64>,
    }
    let (metric, lorenz, s) = match what {
        InequalityKind::Updates => {
            let (start, end) = window_arg(d, window)?;
            let active = active_packages(d, start, end).map_err(anyhow::Error::from)?;
            if active.is_empty() {
                return Err(Failure::Data(anyhow!("no package was updated in the window")));
            }
            let r = update_inequality(d, start, end).map_err(anyhow::Error::from)?;
            let s = Summary {
                population: r.active_packages,
                total: r.updates as f64,
                gini: r.gini,
                normalized_gini: r.normalized_gini,
            };
            ("update_inequality", r.lorenz, s)
        }
        InequalityKind::Dependents => {
            let t = match at {
                Some(a) => within_cutoff(d, instant(a)?)?,
                None => d.cutoff(),
            };
            let g = build_snapshot(d, t);
            let r = dependents_inequality(&g).map_err(anyhow::Error::from)?;
            let s = Summary {
                population: r.required_packages,
                total: g.edge_count() as f64,
                gini: r.gini,
                normalized_gini: r.normalized_gini,
            };
            ("dependents_inequality", r.lorenz, s)
        }
    };
    if summary {
        Ok(table(format!("{metric}_summary"), &[s], &[], format))
    } else {
        Ok(table(metric, &emit::lorenz_rows(&lorenz), &["cum_pop", "cum_val"], format))
    }
}

fn run_fixture(f: &FixtureCommand, g: &Global) -> Outcome<()> {
    let dir = g
        .out
        .as_deref()
        .ok_or_else(|| usage("fixture commands need --out DIR"))?;
    let (d, cfg) = match f {
        FixtureCommand::Tiny => (fixtures::tiny(), None),
        FixtureCommand::Generate {
            packages,
            months,
            seed,
            attachment_bias,
            mean_deps,
            update_rate,
            start,
        } => {
            let cfg = GeneratorConfig {
                n_packages: *packages,
                months: *months,
                seed: *seed,
                attachment_bias: *attachment_bias,
                mean_deps: *mean_deps,
                update_rate: *update_rate,
                start: month_arg(start)?,
                ecosystem: g.ecosystem.clone().unwrap_or_else(|| GeneratorConfig::default().ecosystem),
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            (generate(&cfg).map_err(anyhow::Error::from)?, Some(cfg))
        }
    };
    let manifest = write_dataset(&d, dir, cfg.as_ref()).map_err(anyhow::Error::from)?;
    let rows = manifest.rows.unwrap_or_default();
    eprintln!(
        "wrote {} packages, {} releases, {} dependencies to {}",
        rows.packages,
        rows.releases,
        rows.dependencies,
        dir.display()
    );
    Ok(())
}

fn write_output(g: &Global, d: &Dataset, out: &Table) -> Outcome<()> {
    match &g.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .and_then(|_| stdout.flush())
                .context("writing to standard output")?;
        }
        Some(path) => {
            let target = output_path(path, &out.metric, d.ecosystem(), g.format.into());
            std::fs::write(&target, &out.body).with_context(|| target.display().to_string())?;
            eprintln!("wrote {}", target.display());
        }
    }
    Ok(())
}

fn output_path(out: &Path, metric: &str, ecosystem: &str, format: Format) -> PathBuf {
    if out.is_dir() {
        out.join(emit::file_name(metric, ecosystem, format))
    } else {
        out.to_path_buf()
    }
}

fn write_provenance(cli: &Cli, loaded: &Loaded, out: &Table) -> Outcome<()> {
    let Some(path) = &cli.global.manifest else {
        return Ok(());
    };
    let d = &loaded.data;
    let record = serde_json::json!({
        "tool": "depnet",
        "version": env!("CARGO_PKG_VERSION"),
        "arguments": std::env::args().skip(1).collect::<Vec<_>>(),
        "dataset": {
            "dir": cli.global.data.display().to_string(),
            "sha256": loaded.sha256,
            "ecosystem": d.ecosystem(),
            "cutoff": format_timestamp(&d.cutoff()),
            "packages": d.packages().len(),
            "releases": d.releases().len(),
            "dependencies": d.dependencies().len(),
            "filter": d.filter_report(),
        },
        "metric": out.metric,
        "output_sha256": hex::encode(Sha256::digest(out.body.as_bytes())),
    });
    let text = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    std::fs::write(path, text).with_context(|| path.display().to_string())?;
    Ok(())
}
