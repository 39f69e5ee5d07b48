//! Sweep front end: flag parsing, running the estimator over a dB grid and
//! writing the result table as CSV.
//!
//! CSV columns:
//!
//! ```text
//! scheme,partition,snr_db,rate,trials,outages,p_out,ci_low,ci_high,bound_lower,bound_upper
//! ```
//!
//! Rows are sorted by scheme name, partition and SNR. Probabilities carry ten
//! significant digits. Bound columns are empty unless bounds were requested.
//! The last line is `# seed=<seed>`.

use std::cmp::Ordering;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use thiserror::Error;

use crate::channel::Partition;
use crate::montecarlo::{estimate_outage, SimConfig};
use crate::scheme::{Scheme, SchemeRegistry};

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "partition",
    "snr_db",
    "rate",
    "trials",
    "outages",
    "p_out",
    "ci_low",
    "ci_high",
    "bound_lower",
    "bound_upper",
];

/// Grid points beyond this are treated as a typo in `--snr-db`.
const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error("--partitions: {0}")]
    Partition(String),

    #[error(
        "--partitions: all partitions must have the same antenna count ({expected} vs {actual})"
    )]
    AntennaMismatch { expected: usize, actual: usize },

    #[error("--snr-db: {0}")]
    SnrRange(String),

    #[error("--schemes: {0}")]
    Scheme(String),

    #[error("--{flag}: {message}")]
    InvalidValue { flag: &'static str, message: String },

    #[error("simulation failed: {0}")]
    Simulation(#[from] crate::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Partition(_) => 3,
            CliError::AntennaMismatch { .. } => 4,
            CliError::SnrRange(_) => 5,
            CliError::Scheme(_) => 6,
            CliError::InvalidValue { .. } => 7,
            CliError::Simulation(_) => 8,
            CliError::Io { .. } => 9,
            CliError::Csv(_) => 10,
        }
    }
}

/// Outage sweep over an SNR grid for several antenna partitions.
#[derive(Debug, Parser)]
#[command(name = "relaysim", version)]
struct Args {
    /// Semicolon-separated partitions, each a comma-separated list of
    /// antennas per relay, e.g. "4;2,2;1,1,1,1"
    #[arg(long, default_value = "4;2,2;1,1,1,1")]
    partitions: String,

    /// SNR grid in dB as start:stop:step
    #[arg(long = "snr-db", default_value = "0:30:2", allow_hyphen_values = true)]
    snr_db: String,

    /// Target rate in bits/s/Hz
    #[arg(long, default_value_t = 1.0)]
    rate: f64,

    /// Monte Carlo trials per grid point
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Comma-separated scheme names
    #[arg(long, default_value = "genie-tb,genie-stc,sel-tb,sel-stc")]
    schemes: String,

    /// Fill the analytical bound columns
    #[arg(long)]
    bounds: bool,

    #[arg(long, default_value = "results.csv")]
    out: PathBuf,

    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Also write gnuplot data blocks to this path
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub partitions: Vec<Partition>,
    pub snr_db: Vec<f64>,
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<Arc<dyn Scheme>>,
    pub bounds: bool,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub gnuplot: Option<PathBuf>,
}

impl SweepSpec {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            partitions: self.partitions.clone(),
            eta_grid: self
                .snr_db
                .iter()
                .map(|&db| crate::db_to_linear(db))
                .collect(),
            rate: self.rate,
            trials: self.trials,
            seed: self.seed,
            schemes: self.schemes.clone(),
            workers: self.workers,
        }
    }
}

pub fn parse_partitions(s: &str) -> Result<Vec<Partition>, CliError> {
    let partitions = s
        .split(';')
        .map(|p| {
            p.parse::<Partition>()
                .map_err(|e| CliError::Partition(format!("`{}`: {e}", p.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = partitions[0].antennas();
    if let Some(p) = partitions.iter().find(|p| p.antennas() != n) {
        return Err(CliError::AntennaMismatch {
            expected: n,
            actual: p.antennas(),
        });
    }
    Ok(partitions)
}

fn round_db(db: f64) -> f64 {
    (db * 1e9).round() / 1e9
}

/// Expands `start:stop:step` into grid points `start + i * step <= stop`.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::SnrRange(format!(
            "expected start:stop:step, got `{s}`"
        )));
    };
    let num = |field: &str, name: &str| -> Result<f64, CliError> {
        field
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::SnrRange(format!("bad {name} `{field}`")))
    };
    let (start, stop, step) = (num(start, "start")?, num(stop, "stop")?, num(step, "step")?);
    if step <= 0.0 {
        return Err(CliError::SnrRange(format!(
            "step must be positive, got {step}"
        )));
    }
    if start > stop {
        return Err(CliError::SnrRange(format!(
            "start {start} exceeds stop {stop}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > MAX_GRID_POINTS {
        return Err(CliError::SnrRange(format!(
            "{count} grid points is too many"
        )));
    }
    Ok((0..count)
        .map(|i| round_db(start + i as f64 * step))
        .collect())
}

pub fn parse_args<I, T>(argv: I) -> Result<SweepSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    let partitions = parse_partitions(&args.partitions)?;
    let snr_db = parse_snr_grid(&args.snr_db)?;
    let schemes = SchemeRegistry::builtin()
        .resolve_list(&args.schemes)
        .map_err(|e| CliError::Scheme(e.to_string()))?;
    if !args.rate.is_finite() || args.rate < 0.0 {
        return Err(CliError::InvalidValue {
            flag: "rate",
            message: format!("must be finite and non-negative, got {}", args.rate),
        });
    }
    if args.trials == 0 {
        return Err(CliError::InvalidValue {
            flag: "trials",
            message: "must be at least 1".into(),
        });
    }
    if args.workers == Some(0) {
        return Err(CliError::InvalidValue {
            flag: "workers",
            message: "must be at least 1".into(),
        });
    }
    Ok(SweepSpec {
        partitions,
        snr_db,
        rate: args.rate,
        trials: args.trials,
        seed: args.seed,
        schemes,
        bounds: args.bounds,
        out: args.out,
        workers: args.workers,
        gnuplot: args.gnuplot,
    })
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: String,
    pub partition: Partition,
    pub snr_db: f64,
    pub rate: f64,
    pub trials: u64,
    pub outages: u64,
    pub p_out: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
}

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.scheme
        .cmp(&b.scheme)
        .then_with(|| a.partition.cmp(&b.partition))
        .then_with(|| a.snr_db.total_cmp(&b.snr_db))
}

/// Runs the simulation and assembles sorted rows without touching the
/// filesystem.
pub fn compute_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let cfg = spec.sim_config();
    let table = estimate_outage(&cfg)?;
    let mut rows = Vec::with_capacity(table.estimates().len());
    for (si, scheme) in spec.schemes.iter().enumerate() {
        for (pi, partition) in spec.partitions.iter().enumerate() {
            for (ei, (&db, &eta)) in spec.snr_db.iter().zip(&cfg.eta_grid).enumerate() {
                let est = table.get(si, pi, ei);
                let bounds = if spec.bounds {
                    Some(scheme.bounds(partition, spec.rate, eta)?)
                } else {
                    None
                };
                rows.push(SweepRow {
                    scheme: scheme.name().to_string(),
                    partition: partition.clone(),
                    snr_db: db,
                    rate: spec.rate,
                    trials: est.trials,
                    outages: est.outages,
                    p_out: est.p_hat,
                    ci_low: est.ci_low,
                    ci_high: est.ci_high,
                    bound_lower: bounds.as_ref().map(|b| b.lower),
                    bound_upper: bounds.as_ref().map(|b| b.upper),
                });
            }
        }
    }
    rows.sort_by(row_order);
    Ok(rows)
}

/// Ten significant digits.
pub fn format_probability(p: f64) -> String {
    format!("{p:.9e}")
}

pub fn render_csv(rows: &[SweepRow], seed: u64) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| panic!("writing CSV to memory cannot fail: {e}");
    writer.write_record(CSV_HEADER).unwrap_or_else(io);
    for r in rows {
        let opt = |v: Option<f64>| v.map(format_probability).unwrap_or_default();
        writer
            .write_record([
                r.scheme.clone(),
                r.partition.to_string(),
                r.snr_db.to_string(),
                r.rate.to_string(),
                r.trials.to_string(),
                r.outages.to_string(),
                format_probability(r.p_out),
                format_probability(r.ci_low),
                format_probability(r.ci_high),
                opt(r.bound_lower),
                opt(r.bound_upper),
            ])
            .unwrap_or_else(io);
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    let mut text = String::from_utf8(bytes).expect("CSV fields are UTF-8");
    let _ = writeln!(text, "# seed={seed}");
    text
}

/// Parses CSV produced by [`render_csv`]. The seed comment is skipped.
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Csv(format!("unexpected header {header:?}")));
    }
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| CliError::Csv(e.to_string()))?;
            let field = |i: usize| &record[i];
            fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, CliError> {
                s.parse()
                    .map_err(|_| CliError::Csv(format!("bad {name} `{s}`")))
            }
            let opt = |i: usize| -> Result<Option<f64>, CliError> {
                match field(i) {
                    "" => Ok(None),
                    s => num(s, CSV_HEADER[i]).map(Some),
                }
            };
            Ok(SweepRow {
                scheme: field(0).to_string(),
                partition: field(1)
                    .parse()
                    .map_err(|e| CliError::Csv(format!("{e}")))?,
                snr_db: num(field(2), "snr_db")?,
                rate: num(field(3), "rate")?,
                trials: num(field(4), "trials")?,
                outages: num(field(5), "outages")?,
                p_out: num(field(6), "p_out")?,
                ci_low: num(field(7), "ci_low")?,
                ci_high: num(field(8), "ci_high")?,
                bound_lower: opt(9)?,
                bound_upper: opt(10)?,
            })
        })
        .collect()
}

/// Whitespace-separated blocks, one per (scheme, partition), separated by
/// two blank lines so gnuplot can address them with `index`.
pub fn render_gnuplot(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let mut current: Option<(&str, &Partition)> = None;
    for r in rows {
        let key = (r.scheme.as_str(), &r.partition);
        if current != Some(key) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {} {}", r.scheme, r.partition);
            let _ = writeln!(out, "# snr_db p_out ci_low ci_high bound_lower bound_upper");
            current = Some(key);
        }
        let _ = write!(
            out,
            "{} {} {} {}",
            r.snr_db,
            format_probability(r.p_out),
            format_probability(r.ci_low),
            format_probability(r.ci_high)
        );
        if let (Some(lo), Some(hi)) = (r.bound_lower, r.bound_upper) {
            let _ = write!(
                out,
                " {} {}",
                format_probability(lo),
                format_probability(hi)
            );
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

/// Runs the sweep and writes the CSV (and gnuplot data when requested).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let rows = compute_rows(spec)?;
    write_file(&spec.out, &render_csv(&rows, spec.seed))?;
    if let Some(path) = &spec.gnuplot {
        write_file(path, &render_gnuplot(&rows))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &[&str]) -> Result<SweepSpec, CliError> {
        let mut argv = vec!["relaysim"];
        argv.extend_from_slice(extra);
        parse_args(argv)
    }

    #[test]
    fn defaults() {
        let spec = parse(&[]).unwrap();
        assert_eq!(spec.partitions.len(), 3);
        assert_eq!(spec.snr_db.len(), 16);
        assert_eq!(spec.rate, 1.0);
        assert_eq!(spec.trials, 1_000_000);
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.schemes.len(), 4);
        assert!(!spec.bounds);
        assert_eq!(spec.out, PathBuf::from("results.csv"));
    }

    #[test]
    fn single_partition() {
        let spec = parse(&["--partitions", "2,2"]).unwrap();
        assert_eq!(spec.partitions.len(), 1);
        assert_eq!(spec.partitions[0].sizes(), &[2, 2]);
        assert_eq!(spec.partitions[0].relays(), 2);
        assert_eq!(spec.partitions[0].antennas(), 4);
    }

    #[test]
    fn partition_errors() {
        let err = parse(&["--partitions", "4;3"]).unwrap_err();
        assert!(matches!(
            err,
            CliError::AntennaMismatch {
                expected: 4,
                actual: 3
            }
        ));
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("--partitions"));

        let err = parse(&["--partitions", "2,x"]).unwrap_err();
        assert!(matches!(err, CliError::Partition(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("--partitions"));
    }

    #[test]
    fn snr_grid_parsing() {
        assert_eq!(parse_snr_grid("10:10:2").unwrap(), vec![10.0]);
        assert_eq!(parse_snr_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_snr_grid("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_snr_grid("-4:0:2").unwrap(), vec![-4.0, -2.0, 0.0]);
        assert_eq!(parse_snr_grid("0:5:2").unwrap(), vec![0.0, 2.0, 4.0]);

        let spec = parse(&["--snr-db", "-10:0:5"]).unwrap();
        assert_eq!(spec.snr_db, vec![-10.0, -5.0, 0.0]);

        for bad in ["0:30:0", "0:30:-1", "30:0:2", "0:30", "a:1:1", "0:1:1e-9"] {
            let err = parse(&["--snr-db", bad]).unwrap_err();
            assert_eq!(err.exit_code(), 5, "{bad}");
            assert!(err.to_string().starts_with("--snr-db"));
        }
    }

    #[test]
    fn other_flag_errors() {
        let err = parse(&["--schemes", "genie-tb,mrc"]).unwrap_err();
        assert_eq!(err.exit_code(), 6);
        let err = parse(&["--trials", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 7);
        assert!(err.to_string().contains("--trials"));
        let err = parse(&["--rate=-1"]).unwrap_err();
        assert_eq!(err.exit_code(), 7);
        let err = parse(&["--workers", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 7);
        let err = parse(&["--bogus"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn distinct_exit_codes() {
        let codes = [
            CliError::Partition(String::new()).exit_code(),
            CliError::AntennaMismatch {
                expected: 1,
                actual: 2,
            }
            .exit_code(),
            CliError::SnrRange(String::new()).exit_code(),
            CliError::Scheme(String::new()).exit_code(),
            CliError::InvalidValue {
                flag: "x",
                message: String::new(),
            }
            .exit_code(),
            CliError::Simulation(crate::Error::NoAntennas).exit_code(),
            CliError::Csv(String::new()).exit_code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
        assert!(codes.iter().all(|&c| c > 2));
    }

    #[test]
    fn rows_sorted_and_counted() {
        let spec = parse(&["--partitions", "4;1,1,1,1;2,2", "--snr-db", "10:0:1"]);
        assert!(spec.is_err());
        let spec = parse(&[
            "--partitions",
            "4;1,1,1,1;2,2",
            "--snr-db",
            "4:8:2",
            "--schemes",
            "sel-tb,genie-stc",
            "--trials",
            "500",
        ])
        .unwrap();
        let rows = compute_rows(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        let keys: Vec<(String, String, f64)> = rows
            .iter()
            .map(|r| (r.scheme.clone(), r.partition.to_string(), r.snr_db))
            .collect();
        assert_eq!(keys[0], ("genie-stc".into(), "1,1,1,1".into(), 4.0));
        assert_eq!(keys[2], ("genie-stc".into(), "1,1,1,1".into(), 8.0));
        assert_eq!(keys[3], ("genie-stc".into(), "2,2".into(), 4.0));
        assert_eq!(keys[17], ("sel-tb".into(), "4".into(), 8.0));
        assert!(rows.iter().all(|r| r.bound_lower.is_none()));
    }

    #[test]
    fn csv_layout() {
        let spec = parse(&[
            "--partitions",
            "2,2",
            "--snr-db",
            "10:12:2",
            "--schemes",
            "genie-tb",
            "--trials",
            "1000",
            "--bounds",
            "--seed",
            "7",
        ])
        .unwrap();
        let rows = compute_rows(&spec).unwrap();
        let text = render_csv(&rows, 7);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("genie-tb,\"2,2\",10,1,1000,"));
        assert_eq!(*lines.last().unwrap(), "# seed=7");
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n'));

        let back = read_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].partition, rows[0].partition);
        let ratio = back[0].bound_upper.unwrap() / back[0].bound_lower.unwrap();
        assert!((ratio - 256.0).abs() < 1e-6);
    }

    #[test]
    fn probability_format_has_ten_digits() {
        assert_eq!(format_probability(0.001234567891234), "1.234567891e-3");
        assert_eq!(format_probability(0.0), "0.000000000e0");
        assert_eq!(format_probability(1.0), "1.000000000e0");
    }

    #[test]
    fn read_csv_rejects_garbage() {
        assert!(read_csv("a,b\n1,2\n").is_err());
        let mut bad = CSV_HEADER.join(",");
        bad.push_str("\ngenie-tb,4,x,1,1,0,0,0,0,,\n");
        assert!(read_csv(&bad).is_err());
    }

    #[test]
    fn gnuplot_blocks() {
        let spec = parse(&[
            "--partitions",
            "4;2,2",
            "--snr-db",
            "0:2:2",
            "--schemes",
            "sel-tb",
            "--trials",
            "100",
            "--bounds",
        ])
        .unwrap();
        let rows = compute_rows(&spec).unwrap();
        let text = render_gnuplot(&rows);
        assert_eq!(text.matches("\n\n\n").count(), 1);
        assert!(text.starts_with("# sel-tb 2,2\n"));
        let data: Vec<&str> = text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        assert_eq!(data.len(), 4);
        assert_eq!(data[0].split_whitespace().count(), 6);
    }
}
