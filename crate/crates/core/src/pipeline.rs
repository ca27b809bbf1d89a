//! Reading and writing election files, and the curation steps that turn raw
//! results into a vote matrix: pseudo-row handling, top-N retention with an
//! "other" pool, and aggregation to a territorial level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::{Compression, GzBuilder};
use thiserror::Error;

use crate::model::{
    assign_ranks_and_rates, build_matrix, normalize_label, AggregationLevel, ElectionMatrix, LocationRecord,
    ModelError, PollingIdFormat, UnitKey, VoteRecord,
};

pub const RESULT_COLUMNS: [&str; 6] = ["polling_id", "candidate", "value", "rank", "flag_candidates", "rate"];
pub const ACCEPTED_ROUNDS: [&str; 5] = ["first_round", "runoff", "general", "senate", "house"];
pub const DEFAULT_OTHER_LABEL: &str = "other";

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, PartialEq)]
pub enum RowErrorKind {
    BadInteger { column: String, value: String },
    BadFloat { column: String, value: String },
    BadBool { column: String, value: String },
    FieldCount { expected: usize, found: usize },
    InvalidUtf8,
}

/// A malformed row. `line` is the 1-based line in the decompressed text,
/// so the header is line 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub kind: RowErrorKind,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RowErrorKind::BadInteger { column, value } => {
                write!(f, "line {}: `{value}` in column `{column}` is not a non-negative integer", self.line)
            }
            RowErrorKind::BadFloat { column, value } => {
                write!(f, "line {}: `{value}` in column `{column}` is not a finite number", self.line)
            }
            RowErrorKind::BadBool { column, value } => {
                write!(f, "line {}: `{value}` in column `{column}` is not a boolean", self.line)
            }
            RowErrorKind::FieldCount { expected, found } => {
                write!(f, "line {}: expected {expected} fields, found {found}", self.line)
            }
            RowErrorKind::InvalidUtf8 => write!(f, "line {}: invalid UTF-8", self.line),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("{} malformed row(s); first: {}", .0.len(), .0[0])]
    MalformedRows(Vec<RowError>),
    #[error("corrupt gzip stream: {0}")]
    GzipCorrupt(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no votes left after curation")]
    EmptyAfterFilter,
    #[error("level {to} is not an ancestor of level {from}")]
    NotAnAncestor { from: AggregationLevel, to: AggregationLevel },
    #[error("invalid curation config: {0}")]
    InvalidConfig(String),
    #[error("file name `{0}` does not follow {{country}}_{{year}}_{{round}}.csv[.gz]")]
    BadFileName(String),
    #[error("pool label `{0}` collides with a retained candidate")]
    OtherLabelCollision(String),
}

impl PipelineError {
    pub fn row_errors(&self) -> &[RowError] {
        match self {
            PipelineError::MalformedRows(rows) => rows,
            _ => &[],
        }
    }
}

/// Opens `path`, transparently decompressing gzip content (detected by magic bytes).
fn open_maybe_gzip(path: &Path) -> Result<(Box<dyn Read>, bool), PipelineError> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 2];
    let mut filled = 0;
    while filled < 2 {
        let n = file.read(&mut magic[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    let head = io::Cursor::new(magic[..filled].to_vec());
    let chained = head.chain(file);
    if filled == 2 && magic == GZIP_MAGIC {
        Ok((Box::new(MultiGzDecoder::new(chained)), true))
    } else {
        Ok((Box::new(chained), false))
    }
}

fn csv_error(err: csv::Error, gzip: bool) -> PipelineError {
    match err.kind() {
        csv::ErrorKind::Io(e) if gzip => PipelineError::GzipCorrupt(e.to_string()),
        _ => PipelineError::Csv(err.to_string()),
    }
}

fn parse_count(column: &str, raw: &str) -> Result<u64, RowErrorKind> {
    raw.trim().parse::<u64>().map_err(|_| RowErrorKind::BadInteger {
        column: column.to_string(),
        value: raw.to_string(),
    })
}

fn parse_float(column: &str, raw: &str) -> Result<f64, RowErrorKind> {
    match raw.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(RowErrorKind::BadFloat {
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn parse_bool(column: &str, raw: &str) -> Result<bool, RowErrorKind> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "t" | "yes" => Ok(true),
        "false" | "0" | "f" | "no" => Ok(false),
        _ => Err(RowErrorKind::BadBool {
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

struct Rows {
    reader: csv::Reader<Box<dyn Read>>,
    header: Vec<String>,
    gzip: bool,
}

fn open_rows(path: &Path) -> Result<Rows, PipelineError> {
    let (input, gzip) = open_maybe_gzip(path)?;
    // Records end at '\n' only, so line numbers stay exact for CRLF files;
    // the stray '\r' is trimmed with the rest of the field whitespace.
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_reader(input);
    let header = reader
        .byte_headers()
        .map_err(|e| csv_error(e, gzip))?
        .iter()
        .map(|h| String::from_utf8_lossy(h).trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    Ok(Rows { reader, header, gzip })
}

fn column(header: &[String], name: &str) -> Result<usize, PipelineError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| PipelineError::MissingColumn(name.to_string()))
}

/// Streams every data row, handing it to `parse` with the row's line number.
/// Row-level failures are collected rather than dropped.
fn for_each_row<T>(
    rows: &mut Rows,
    mut parse: impl FnMut(&csv::StringRecord) -> Result<T, RowErrorKind>,
) -> Result<Vec<T>, PipelineError> {
    let width = rows.header.len();
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut raw = csv::ByteRecord::new();
    loop {
        match rows.reader.read_byte_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(e, rows.gzip)),
        }
        let line = raw.position().map(|p| p.line()).unwrap_or(0);
        if raw.len() == 1 && raw[0].trim_ascii().is_empty() {
            continue;
        }
        if raw.len() != width {
            errors.push(RowError {
                line,
                kind: RowErrorKind::FieldCount {
                    expected: width,
                    found: raw.len(),
                },
            });
            continue;
        }
        let record = match csv::StringRecord::from_byte_record(raw.clone()) {
            Ok(r) => r,
            Err(_) => {
                errors.push(RowError {
                    line,
                    kind: RowErrorKind::InvalidUtf8,
                });
                continue;
            }
        };
        match parse(&record) {
            Ok(v) => out.push(v),
            Err(kind) => errors.push(RowError { line, kind }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(PipelineError::MalformedRows(errors))
    }
}

/// Reads a results file (`polling_id,candidate,value,rank,flag_candidates,rate`,
/// any column order, optionally gzip-compressed).
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<VoteRecord>, PipelineError> {
    let mut rows = open_rows(path.as_ref())?;
    let idx: Vec<usize> = RESULT_COLUMNS
        .iter()
        .map(|c| column(&rows.header, c))
        .collect::<Result<_, _>>()?;
    for_each_row(&mut rows, |r| {
        let value = parse_count("value", &r[idx[2]])?;
        let rank = parse_count("rank", &r[idx[3]])?;
        Ok(VoteRecord {
            polling_id: r[idx[0]].trim().to_string(),
            candidate: normalize_label(&r[idx[1]]),
            value: i64::try_from(value).map_err(|_| RowErrorKind::BadInteger {
                column: "value".into(),
                value: r[idx[2]].to_string(),
            })?,
            rank: u32::try_from(rank).map_err(|_| RowErrorKind::BadInteger {
                column: "rank".into(),
                value: r[idx[3]].to_string(),
            })?,
            is_real_candidate: parse_bool("flag_candidates", &r[idx[4]])?,
            rate: parse_float("rate", &r[idx[5]])?,
        })
    })
}

/// Reads a location file: `polling_id`, optional `value` and `rate`, and every
/// other column as a named territorial level, in header order.
pub fn read_locations(path: impl AsRef<Path>) -> Result<Vec<LocationRecord>, PipelineError> {
    let mut rows = open_rows(path.as_ref())?;
    let pid = column(&rows.header, "polling_id")?;
    let value = rows.header.iter().position(|h| h == "value");
    let rate = rows.header.iter().position(|h| h == "rate");
    let levels: Vec<(usize, String)> = rows
        .header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != pid && Some(*i) != value && Some(*i) != rate)
        .map(|(i, h)| (i, h.clone()))
        .collect();
    for_each_row(&mut rows, |r| {
        let value = match value.map(|i| r[i].trim()) {
            None | Some("") => None,
            Some(raw) => Some(parse_count("value", raw)? as i64),
        };
        let rate = match rate.map(|i| r[i].trim()) {
            None | Some("") => None,
            Some(raw) => Some(parse_float("rate", raw)?),
        };
        Ok(LocationRecord {
            polling_id: r[pid].trim().to_string(),
            levels: levels
                .iter()
                .map(|(i, name)| (name.clone(), r[*i].trim().to_string()))
                .collect(),
            value,
            rate,
        })
    })
}

/// Polling ids whose location levels do not reproduce the id, and result ids
/// without any location record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocationJoin {
    pub inconsistent: Vec<String>,
    pub unmatched: Vec<String>,
}

pub fn join_locations(records: &[VoteRecord], locations: &[LocationRecord], format: &PollingIdFormat) -> LocationJoin {
    let known: BTreeSet<&str> = locations.iter().map(|l| l.polling_id.as_str()).collect();
    let inconsistent = locations
        .iter()
        .filter(|l| !l.levels.is_empty() && !l.is_consistent(format))
        .map(|l| l.polling_id.clone())
        .collect();
    let unmatched = records
        .iter()
        .map(|r| r.polling_id.as_str())
        .filter(|p| !known.contains(p))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    LocationJoin { inconsistent, unmatched }
}

fn create_output(path: &Path) -> Result<Box<dyn Write>, PipelineError> {
    let file = BufWriter::new(File::create(path)?);
    let gz = path.extension().is_some_and(|e| e == "gz");
    Ok(if gz {
        // Zero mtime and no file name keep the compressed bytes reproducible.
        let enc: GzEncoder<BufWriter<File>> = GzBuilder::new().mtime(0).write(file, Compression::default());
        Box::new(enc)
    } else {
        Box::new(file)
    })
}

/// Writes results in the unified schema to any writer.
pub fn write_results_to<W: Write>(out: W, records: &[VoteRecord]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS).map_err(|e| PipelineError::Csv(e.to_string()))?;
    for r in records {
        w.write_record([
            r.polling_id.as_str(),
            r.candidate.as_str(),
            &r.value.to_string(),
            &r.rank.to_string(),
            if r.is_real_candidate { "true" } else { "false" },
            &r.rate.to_string(),
        ])
        .map_err(|e| PipelineError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes results to `path`, gzip-compressing when the name ends in `.gz`.
pub fn write_results(path: impl AsRef<Path>, records: &[VoteRecord]) -> Result<(), PipelineError> {
    write_results_to(create_output(path.as_ref())?, records)
}

pub fn write_locations(path: impl AsRef<Path>, locations: &[LocationRecord]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(create_output(path.as_ref())?);
    let level_names: Vec<String> = locations
        .first()
        .map(|l| l.levels.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    let mut header = vec!["polling_id".to_string(), "value".into(), "rate".into()];
    header.extend(level_names.iter().cloned());
    w.write_record(&header).map_err(|e| PipelineError::Csv(e.to_string()))?;
    for l in locations {
        let mut row = vec![
            l.polling_id.clone(),
            l.value.map(|v| v.to_string()).unwrap_or_default(),
            l.rate.map(|v| v.to_string()).unwrap_or_default(),
        ];
        row.extend(l.levels.iter().map(|(_, v)| v.clone()));
        w.write_record(&row).map_err(|e| PipelineError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `{country}_{year}_{round}[_location].csv[.gz]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElectionFileName {
    pub country: String,
    pub year: u16,
    pub round: String,
    pub is_location: bool,
}

impl ElectionFileName {
    pub fn parse(name: &str) -> Result<Self, PipelineError> {
        let bad = || PipelineError::BadFileName(name.to_string());
        let file = Path::new(name).file_name().and_then(|f| f.to_str()).ok_or_else(bad)?;
        let stem = file
            .strip_suffix(".csv.gz")
            .or_else(|| file.strip_suffix(".csv"))
            .ok_or_else(bad)?;
        let (stem, is_location) = match stem.strip_suffix("_location") {
            Some(s) => (s, true),
            None => (stem, false),
        };
        let round = ACCEPTED_ROUNDS
            .iter()
            .find(|r| stem.ends_with(&format!("_{r}")))
            .ok_or_else(bad)?;
        let rest = &stem[..stem.len() - round.len() - 1];
        let (country, year) = rest.rsplit_once('_').ok_or_else(bad)?;
        if country.is_empty() || year.len() != 4 {
            return Err(bad());
        }
        Ok(ElectionFileName {
            country: country.to_string(),
            year: year.parse().map_err(|_| bad())?,
            round: round.to_string(),
            is_location,
        })
    }

    pub fn results_file(&self) -> String {
        format!("{}_{}_{}.csv.gz", self.country, self.year, self.round)
    }

    pub fn location_file(&self) -> String {
        format!("{}_{}_{}_location.csv.gz", self.country, self.year, self.round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopN {
    All,
    Count(usize),
}

impl std::str::FromStr for TopN {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(TopN::All);
        }
        s.parse::<usize>()
            .map(TopN::Count)
            .map_err(|_| format!("invalid top-n `{s}`: expected `all` or a count"))
    }
}

/// How abstention, blank and null pseudo-rows are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbstentionMode {
    Exclude,
    /// Each pseudo-row label becomes an extra antagonist. Pseudo-candidates
    /// are kept regardless of the top-N cut, which ranks real candidates only.
    AsCandidates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationConfig {
    pub top_n: TopN,
    pub abstention_mode: AbstentionMode,
    pub aggregation_level: AggregationLevel,
    pub other_label: String,
    pub format: PollingIdFormat,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            top_n: TopN::All,
            abstention_mode: AbstentionMode::Exclude,
            aggregation_level: AggregationLevel::Unit,
            other_label: DEFAULT_OTHER_LABEL.to_string(),
            format: PollingIdFormat::default(),
        }
    }
}

impl CurationConfig {
    pub fn top(n: usize) -> Self {
        CurationConfig {
            top_n: TopN::Count(n),
            ..Default::default()
        }
    }

    /// Two leading candidates, as used for U.S. elections.
    pub fn united_states() -> Self {
        CurationConfig::top(2)
    }

    /// Four leading candidates, as used for Chile.
    pub fn chile() -> Self {
        CurationConfig::top(4)
    }

    /// Eight leading candidates, as used for France.
    pub fn france() -> Self {
        CurationConfig::top(8)
    }

    pub fn preset(country: &str) -> Option<Self> {
        match country.to_ascii_lowercase().as_str() {
            "us" | "usa" | "united_states" | "unitedstates" => Some(Self::united_states()),
            "cl" | "chile" => Some(Self::chile()),
            "fr" | "france" => Some(Self::france()),
            _ => None,
        }
    }

    pub fn with_level(mut self, level: AggregationLevel) -> Self {
        self.aggregation_level = level;
        self
    }

    pub fn with_abstentions(mut self, mode: AbstentionMode) -> Self {
        self.abstention_mode = mode;
        self
    }

    pub fn unit_key(&self) -> UnitKey {
        UnitKey {
            level: self.aggregation_level,
            format: self.format,
        }
    }

    fn check(&self) -> Result<(), PipelineError> {
        if let TopN::Count(n) = self.top_n {
            if n < 2 {
                return Err(PipelineError::InvalidConfig(format!("top-n must be at least 2, got {n}")));
            }
        }
        if self.other_label.trim().is_empty() {
            return Err(PipelineError::InvalidConfig("pool label must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CurationWarning {
    TopNExceedsCandidates { requested: usize, available: usize },
}

impl fmt::Display for CurationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurationWarning::TopNExceedsCandidates { requested, available } => write!(
                f,
                "top-n {requested} exceeds the {available} real candidates; all are retained"
            ),
        }
    }
}

/// Records after the curation steps but before aggregation, at their original polling ids.
#[derive(Debug, Clone, PartialEq)]
pub struct CuratedRecords {
    pub records: Vec<VoteRecord>,
    /// Real candidates kept by name, strongest first.
    pub retained: Vec<String>,
    /// Real candidates folded into the pool label.
    pub pooled: Vec<String>,
    /// Vote share of the retained real candidates among all real-candidate votes.
    pub coverage: f64,
    pub warnings: Vec<CurationWarning>,
}

/// Real candidates ordered by national total, strongest first; ties by label.
pub fn national_ranking(records: &[VoteRecord]) -> Vec<(String, i64)> {
    let mut totals: BTreeMap<String, i64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_real_candidate) {
        *totals.entry(normalize_label(&r.candidate)).or_insert(0) += r.value.max(0);
    }
    let mut ranked: Vec<(String, i64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Applies pseudo-row handling and top-N pooling, keeping per-unit granularity.
pub fn curate_records(records: &[VoteRecord], config: &CurationConfig) -> Result<CuratedRecords, PipelineError> {
    config.check()?;
    if let Some(r) = records.iter().find(|r| r.value < 0) {
        return Err(ModelError::NegativeVotes {
            polling_id: r.polling_id.clone(),
            candidate: r.candidate.clone(),
            value: r.value,
        }
        .into());
    }
    let kept: Vec<&VoteRecord> = records
        .iter()
        .filter(|r| r.is_real_candidate || config.abstention_mode == AbstentionMode::AsCandidates)
        .collect();

    let ranking = national_ranking(records);
    let mut warnings = Vec::new();
    let cut = match config.top_n {
        TopN::All => ranking.len(),
        TopN::Count(n) if n > ranking.len() => {
            warnings.push(CurationWarning::TopNExceedsCandidates {
                requested: n,
                available: ranking.len(),
            });
            ranking.len()
        }
        TopN::Count(n) => n,
    };
    let retained: Vec<String> = ranking[..cut].iter().map(|(c, _)| c.clone()).collect();
    let pooled: Vec<String> = ranking[cut..].iter().map(|(c, _)| c.clone()).collect();
    let real_total: i64 = ranking.iter().map(|(_, v)| v).sum();
    let retained_total: i64 = ranking[..cut].iter().map(|(_, v)| v).sum();
    let coverage = if real_total > 0 {
        retained_total as f64 / real_total as f64
    } else {
        0.0
    };

    let pool_label = normalize_label(&config.other_label);
    if !pooled.is_empty() && retained.contains(&pool_label) {
        return Err(PipelineError::OtherLabelCollision(pool_label));
    }
    let pooled_set: BTreeSet<&str> = pooled.iter().map(String::as_str).collect();

    let mut out = Vec::with_capacity(kept.len());
    let mut pools: BTreeMap<&str, i64> = BTreeMap::new();
    for r in kept {
        let label = normalize_label(&r.candidate);
        if r.is_real_candidate && pooled_set.contains(label.as_str()) {
            *pools.entry(r.polling_id.as_str()).or_insert(0) += r.value;
        } else {
            out.push(VoteRecord {
                candidate: label,
                ..r.clone()
            });
        }
    }
    out.extend(
        pools
            .into_iter()
            .map(|(pid, v)| VoteRecord::new(pid, pool_label.clone(), v)),
    );
    if out.is_empty() || out.iter().all(|r| r.value == 0) {
        return Err(PipelineError::EmptyAfterFilter);
    }
    assign_ranks_and_rates(&mut out);
    Ok(CuratedRecords {
        records: out,
        retained,
        pooled,
        coverage,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curation {
    pub matrix: ElectionMatrix,
    pub retained: Vec<String>,
    pub pooled: Vec<String>,
    pub coverage: f64,
    pub warnings: Vec<CurationWarning>,
}

/// Full curation: pseudo-rows, national ranking, top-N pooling, then a matrix
/// at the configured aggregation level with recomputed shares.
pub fn curate(records: &[VoteRecord], config: &CurationConfig) -> Result<Curation, PipelineError> {
    let curated = curate_records(records, config)?;
    let matrix = build_matrix(&curated.records, &config.unit_key())?;
    Ok(Curation {
        matrix,
        retained: curated.retained,
        pooled: curated.pooled,
        coverage: curated.coverage,
        warnings: curated.warnings,
    })
}

/// Sums the units of `m` (keyed at `from`) into the coarser units of `to`.
pub fn reaggregate(
    m: &ElectionMatrix,
    from: AggregationLevel,
    to: AggregationLevel,
    format: &PollingIdFormat,
) -> Result<ElectionMatrix, PipelineError> {
    if !to.is_ancestor_of(from) {
        return Err(PipelineError::NotAnAncestor { from, to });
    }
    if to == from {
        return Ok(m.clone());
    }
    let n = m.n_candidates();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (k, unit) in m.units().iter().enumerate() {
        let key = format.unit_key(unit, to)?;
        let acc = groups.entry(key).or_insert_with(|| vec![0.0; n]);
        for (a, v) in acc.iter_mut().zip(m.unit_votes(k)) {
            *a += v;
        }
    }
    let (units, rows): (Vec<String>, Vec<Vec<f64>>) = groups.into_iter().unzip();
    Ok(ElectionMatrix::new(units, m.candidates().to_vec(), rows)?)
}
