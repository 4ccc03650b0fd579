//! Parsing of resolver logs, passive-DNS records and label lists, and
//! grouping of log records into fixed-length detection windows.
//!
//! Log lines are tab separated: `timestamp client qname type rdata`, one
//! answer per line. Passive-DNS input is JSON lines with the
//! `rrname/rrtype/rdata/time_first/time_last/count` field names used by
//! public pDNS services. Label lists are `name,class_id,source[,issued_at]`
//! CSV, where a `2ld:` prefix makes the entry match every name under that
//! second-level domain.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::net::IpAddr;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecordType {
    A,
    #[serde(rename = "AAAA")]
    Aaaa,
    #[serde(rename = "CNAME")]
    Cname,
}

impl RecordType {
    pub fn is_address(self) -> bool {
        matches!(self, RecordType::A | RecordType::Aaaa)
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordType::A => "A",
            RecordType::Aaaa => "AAAA",
            RecordType::Cname => "CNAME",
        })
    }
}

/// Record types that exist in DNS but are not modelled. Lines carrying them
/// are skipped and counted rather than treated as malformed.
const UNSUPPORTED_TYPES: &[&str] = &[
    "NS", "MX", "TXT", "PTR", "SRV", "SOA", "CAA", "DS", "DNSKEY", "RRSIG", "NSEC", "NSEC3",
    "HTTPS", "SVCB", "NAPTR", "SPF", "HINFO", "ANY", "OPT", "TLSA", "SSHFP",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Malformed(String),
    UnsupportedType(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Malformed(r) => write!(f, "{r}"),
            ParseError::UnsupportedType(t) => write!(f, "unsupported record type {t}"),
        }
    }
}

impl FromStr for RecordType {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(RecordType::A),
            "AAAA" => Ok(RecordType::Aaaa),
            "CNAME" => Ok(RecordType::Cname),
            other if UNSUPPORTED_TYPES.contains(&other) => {
                Err(ParseError::UnsupportedType(other.to_string()))
            }
            other => Err(ParseError::Malformed(format!("invalid record type `{other}`"))),
        }
    }
}

/// Lowercases ASCII and strips trailing dots. Idempotent.
pub fn normalize_name(raw: &str) -> String {
    raw.trim().trim_end_matches('.').to_ascii_lowercase()
}

fn checked_name(raw: &str) -> std::result::Result<String, ParseError> {
    let name = normalize_name(raw);
    if name.is_empty() {
        return Err(ParseError::Malformed("empty name".into()));
    }
    if name.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(ParseError::Malformed(format!("invalid characters in `{name}`")));
    }
    Ok(name)
}

fn checked_rdata(rtype: RecordType, raw: &str) -> std::result::Result<String, ParseError> {
    match rtype {
        RecordType::A => match raw.trim().parse::<IpAddr>() {
            Ok(ip @ IpAddr::V4(_)) => Ok(ip.to_string()),
            _ => Err(ParseError::Malformed(format!("`{raw}` is not an IPv4 address"))),
        },
        RecordType::Aaaa => match raw.trim().parse::<IpAddr>() {
            Ok(ip @ IpAddr::V6(_)) => Ok(ip.to_string()),
            _ => Err(ParseError::Malformed(format!("`{raw}` is not an IPv6 address"))),
        },
        RecordType::Cname => checked_name(raw),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub rdata: String,
    pub rtype: RecordType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsLogRecord {
    pub timestamp: i64,
    pub client_id: String,
    pub qname: String,
    pub qtype: RecordType,
    pub answers: Vec<Answer>,
}

impl DnsLogRecord {
    /// One TSV line per answer; a record without answers yields a single
    /// line with an empty rdata field.
    pub fn to_lines(&self) -> Vec<String> {
        let head = format!(
            "{}\t{}\t{}\t{}",
            self.timestamp, self.client_id, self.qname, self.qtype
        );
        if self.answers.is_empty() {
            return vec![format!("{head}\t")];
        }
        self.answers
            .iter()
            .map(|a| format!("{head}\t{}", a.rdata))
            .collect()
    }
}

pub fn parse_log_line(line: &str) -> std::result::Result<DnsLogRecord, ParseError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(ParseError::Malformed(format!(
            "expected 5 tab-separated fields, found {}",
            fields.len()
        )));
    }
    let timestamp = fields[0]
        .trim()
        .parse::<i64>()
        .map_err(|_| ParseError::Malformed(format!("bad timestamp `{}`", fields[0])))?;
    let client_id = fields[1].trim();
    if client_id.is_empty() {
        return Err(ParseError::Malformed("empty client id".into()));
    }
    let qtype: RecordType = fields[3].parse()?;
    let qname = checked_name(fields[2])?;
    let answers = if fields[4].trim().is_empty() {
        Vec::new()
    } else {
        vec![Answer {
            rdata: checked_rdata(qtype, fields[4])?,
            rtype: qtype,
        }]
    };
    Ok(DnsLogRecord {
        timestamp,
        client_id: client_id.to_string(),
        qname,
        qtype,
        answers,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassiveDnsRecord {
    pub qname: String,
    pub rtype: RecordType,
    pub rdata: String,
    pub first_seen: i64,
    pub last_seen: i64,
    pub count: u64,
}

#[derive(Deserialize, Serialize)]
struct PdnsWire {
    rrname: String,
    rrtype: String,
    rdata: String,
    time_first: i64,
    time_last: i64,
    count: u64,
}

impl PassiveDnsRecord {
    pub fn to_json_line(&self) -> String {
        let wire = PdnsWire {
            rrname: self.qname.clone(),
            rrtype: self.rtype.to_string(),
            rdata: self.rdata.clone(),
            time_first: self.first_seen,
            time_last: self.last_seen,
            count: self.count,
        };
        serde_json::to_string(&wire).expect("plain struct serializes")
    }

    /// True when the record's closed `[first_seen, last_seen]` span touches
    /// the half-open window `[start, end)`.
    pub fn overlaps(&self, start: i64, end: i64) -> bool {
        self.first_seen < end && self.last_seen >= start
    }
}

pub fn parse_pdns_line(line: &str) -> std::result::Result<PassiveDnsRecord, ParseError> {
    let wire: PdnsWire =
        serde_json::from_str(line).map_err(|e| ParseError::Malformed(e.to_string()))?;
    let rtype: RecordType = wire.rrtype.parse()?;
    if wire.time_first > wire.time_last {
        return Err(ParseError::Malformed(format!(
            "time_first {} after time_last {}",
            wire.time_first, wire.time_last
        )));
    }
    if wire.count == 0 {
        return Err(ParseError::Malformed("count must be at least 1".into()));
    }
    Ok(PassiveDnsRecord {
        qname: checked_name(&wire.rrname)?,
        rdata: checked_rdata(rtype, &wire.rdata)?,
        rtype,
        first_seen: wire.time_first,
        last_seen: wire.time_last,
        count: wire.count,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub parsed: usize,
    pub comments: usize,
    pub malformed: usize,
    pub unsupported: usize,
}

impl IngestStats {
    pub fn merge(&mut self, other: &IngestStats) {
        self.lines += other.lines;
        self.parsed += other.parsed;
        self.comments += other.comments;
        self.malformed += other.malformed;
        self.unsupported += other.unsupported;
    }
}

fn read_lines<T, R: BufRead>(
    input: R,
    parse: impl Fn(&str) -> std::result::Result<T, ParseError>,
) -> std::io::Result<(Vec<T>, IngestStats)> {
    let mut out = Vec::new();
    let mut stats = IngestStats::default();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        stats.lines += 1;
        if line.trim().is_empty() || line.starts_with('#') {
            stats.comments += 1;
            continue;
        }
        match parse(&line) {
            Ok(rec) => {
                stats.parsed += 1;
                out.push(rec);
            }
            Err(ParseError::UnsupportedType(_)) => stats.unsupported += 1,
            Err(ParseError::Malformed(reason)) => {
                log::debug!("skipping line {}: {reason}", n + 1);
                stats.malformed += 1;
            }
        }
    }
    Ok((out, stats))
}

/// Parses a resolver log, skipping (and counting) malformed lines.
pub fn read_logs<R: BufRead>(input: R) -> std::io::Result<(Vec<DnsLogRecord>, IngestStats)> {
    read_lines(input, parse_log_line)
}

pub fn read_pdns<R: BufRead>(input: R) -> std::io::Result<(Vec<PassiveDnsRecord>, IngestStats)> {
    read_lines(input, parse_pdns_line)
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn read_log_file(path: &Path) -> Result<(Vec<DnsLogRecord>, IngestStats)> {
    read_logs(open(path)?).map_err(|e| Error::io(path, e))
}

pub fn read_pdns_file(path: &Path) -> Result<(Vec<PassiveDnsRecord>, IngestStats)> {
    read_pdns(open(path)?).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Labels

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Manual,
    Public,
    Local,
}

impl LabelSource {
    /// Higher wins when sources disagree.
    pub fn rank(self) -> u8 {
        match self {
            LabelSource::Manual => 2,
            LabelSource::Public => 1,
            LabelSource::Local => 0,
        }
    }
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Manual => "manual",
            LabelSource::Public => "public",
            LabelSource::Local => "local",
        })
    }
}

impl FromStr for LabelSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "manual" => Ok(LabelSource::Manual),
            "public" => Ok(LabelSource::Public),
            "local" => Ok(LabelSource::Local),
            other => Err(format!("unknown label source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelPattern {
    Exact(String),
    SecondLevel(String),
}

impl LabelPattern {
    pub fn matches(&self, name: &str) -> bool {
        match self {
            LabelPattern::Exact(n) => n == name,
            LabelPattern::SecondLevel(sld) => second_level(name) == sld,
        }
    }
}

impl fmt::Display for LabelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelPattern::Exact(n) => f.write_str(n),
            LabelPattern::SecondLevel(n) => write!(f, "2ld:{n}"),
        }
    }
}

/// Last two labels of a name (`chat.im.taobao.com` -> `taobao.com`).
pub fn second_level(name: &str) -> &str {
    let mut dots = name.rmatch_indices('.');
    dots.next();
    match dots.next() {
        Some((i, _)) => &name[i + 1..],
        None => name,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEntry {
    pub pattern: LabelPattern,
    pub class_id: usize,
    pub source: LabelSource,
    pub issued_at: i64,
}

impl LabelEntry {
    pub fn exact(name: &str, class_id: usize, source: LabelSource, issued_at: i64) -> Self {
        Self {
            pattern: LabelPattern::Exact(normalize_name(name)),
            class_id,
            source,
            issued_at,
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.pattern, self.class_id, self.source, self.issued_at
        )
    }
}

fn parse_label_line(line: &str, class_count: usize) -> std::result::Result<LabelEntry, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 fields, found {}", fields.len()));
    }
    let class_id: usize = fields[1]
        .parse()
        .map_err(|_| format!("bad class id `{}`", fields[1]))?;
    if class_id >= class_count {
        return Err(format!(
            "class id {class_id} outside configured {class_count} classes"
        ));
    }
    let source: LabelSource = fields[2].parse()?;
    let issued_at = match fields.get(3) {
        Some(s) if !s.is_empty() => s.parse().map_err(|_| format!("bad issued_at `{s}`"))?,
        _ => 0,
    };
    let pattern = match fields[0].strip_prefix("2ld:") {
        Some(rest) => LabelPattern::SecondLevel(normalize_name(rest)),
        None => {
            let name = normalize_name(fields[0]);
            // Popularity lists only publish registrable names; a bare
            // two-label public entry covers its subdomains.
            if source == LabelSource::Public && name.matches('.').count() == 1 {
                LabelPattern::SecondLevel(name)
            } else {
                LabelPattern::Exact(name)
            }
        }
    };
    if matches!(&pattern, LabelPattern::Exact(n) | LabelPattern::SecondLevel(n) if n.is_empty()) {
        return Err("empty name".into());
    }
    Ok(LabelEntry {
        pattern,
        class_id,
        source,
        issued_at,
    })
}

/// Parses a label list. Repeated identical entries are merged; the same
/// pattern mapped to two classes is a [`Error::ConflictingEntry`].
pub fn parse_labels<R: Read>(input: R, class_count: usize) -> Result<Vec<LabelEntry>> {
    let reader = BufReader::new(input);
    let mut seen: BTreeMap<LabelPattern, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::malformed(n + 1, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let entry = parse_label_line(trimmed, class_count).map_err(|r| Error::malformed(n + 1, r))?;
        match seen.get(&entry.pattern) {
            Some(&class) if class != entry.class_id => {
                return Err(Error::ConflictingEntry {
                    name: entry.pattern.to_string(),
                    first: class,
                    second: entry.class_id,
                });
            }
            Some(_) => continue,
            None => {
                seen.insert(entry.pattern.clone(), entry.class_id);
                out.push(entry);
            }
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path, class_count: usize) -> Result<Vec<LabelEntry>> {
    parse_labels(open(path)?, class_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum ConflictPolicy {
    /// Treat the name as unlabeled.
    DropPrior,
    /// Pick one of the disagreeing classes with a seeded draw.
    Randomize { seed: u64 },
}

impl Default for ConflictPolicy {
    fn default() -> Self {
        ConflictPolicy::DropPrior
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prior {
    pub class_id: usize,
    pub source: LabelSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Unlabeled,
    Labeled(Prior),
    Conflict {
        source: LabelSource,
        classes: Vec<usize>,
    },
}

/// Resolves label entries from any number of files against concrete names.
///
/// Precedence: source rank (manual > public > local), then exact over 2LD
/// matches. Disagreement that survives precedence is a conflict.
#[derive(Debug, Clone, Default)]
pub struct LabelIndex {
    exact: BTreeMap<String, Vec<(LabelSource, usize)>>,
    second_level: BTreeMap<String, Vec<(LabelSource, usize)>>,
    policy: ConflictPolicy,
}

impl LabelIndex {
    pub fn new<'a>(entries: impl IntoIterator<Item = &'a LabelEntry>, policy: ConflictPolicy) -> Self {
        let mut index = Self {
            policy,
            ..Self::default()
        };
        for e in entries {
            index.insert(e);
        }
        index
    }

    pub fn insert(&mut self, e: &LabelEntry) {
        let (map, key) = match &e.pattern {
            LabelPattern::Exact(n) => (&mut self.exact, n),
            LabelPattern::SecondLevel(n) => (&mut self.second_level, n),
        };
        let slot = map.entry(key.clone()).or_default();
        if !slot.contains(&(e.source, e.class_id)) {
            slot.push((e.source, e.class_id));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.second_level.is_empty()
    }

    pub fn resolve(&self, name: &str) -> Resolution {
        let exact = self.exact.get(name).map(Vec::as_slice).unwrap_or(&[]);
        let sld = self
            .second_level
            .get(second_level(name))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let best_rank = exact
            .iter()
            .chain(sld)
            .map(|(s, _)| s.rank())
            .max();
        let Some(best_rank) = best_rank else {
            return Resolution::Unlabeled;
        };
        let pick = |set: &[(LabelSource, usize)]| -> Vec<(LabelSource, usize)> {
            set.iter().copied().filter(|(s, _)| s.rank() == best_rank).collect()
        };
        let mut hits = pick(exact);
        if hits.is_empty() {
            hits = pick(sld);
        }
        let source = hits[0].0;
        let mut classes: Vec<usize> = hits.iter().map(|&(_, c)| c).collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() == 1 {
            Resolution::Labeled(Prior {
                class_id: classes[0],
                source,
            })
        } else {
            Resolution::Conflict { source, classes }
        }
    }

    /// Resolution with the conflict policy applied.
    pub fn prior(&self, name: &str) -> Option<Prior> {
        match self.resolve(name) {
            Resolution::Unlabeled => None,
            Resolution::Labeled(p) => Some(p),
            Resolution::Conflict { source, classes } => match self.policy {
                ConflictPolicy::DropPrior => None,
                ConflictPolicy::Randomize { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(name.as_bytes()));
                    classes.choose(&mut rng).map(|&class_id| Prior { class_id, source })
                }
            },
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

// ---------------------------------------------------------------------------
// Windowing

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBatch {
    pub window_start: i64,
    pub window_end: i64,
    pub logs: Vec<DnsLogRecord>,
    pub pdns: Vec<PassiveDnsRecord>,
}

impl WindowBatch {
    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }
}

/// Partitions log records into consecutive half-open windows of
/// `window_seconds`, aligned to multiples of the window length. Windows
/// between the first and last record are emitted even when empty. A pDNS
/// record is attached to every window its `[first_seen, last_seen]` span
/// overlaps.
pub fn window(
    mut records: Vec<DnsLogRecord>,
    pdns: &[PassiveDnsRecord],
    window_seconds: i64,
) -> Result<Vec<WindowBatch>> {
    if window_seconds <= 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }
    records.sort_by_key(|r| r.timestamp);
    let first = records[0].timestamp.div_euclid(window_seconds);
    let last = records[records.len() - 1].timestamp.div_euclid(window_seconds);
    let mut batches: Vec<WindowBatch> = (first..=last)
        .map(|w| {
            let start = w * window_seconds;
            let end = start + window_seconds;
            WindowBatch {
                window_start: start,
                window_end: end,
                logs: Vec::new(),
                pdns: pdns.iter().filter(|p| p.overlaps(start, end)).cloned().collect(),
            }
        })
        .collect();
    for r in records {
        let slot = (r.timestamp.div_euclid(window_seconds) - first) as usize;
        batches[slot].logs.push(r);
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_basic_log_line() {
        let r = parse_log_line("1523577600\tc42\twww.example.com.\tA\t93.184.216.34").unwrap();
        assert_eq!(r.timestamp, 1523577600);
        assert_eq!(r.client_id, "c42");
        assert_eq!(r.qname, "www.example.com");
        assert_eq!(r.qtype, RecordType::A);
        assert_eq!(
            r.answers,
            vec![Answer {
                rdata: "93.184.216.34".into(),
                rtype: RecordType::A
            }]
        );
    }

    #[test]
    fn case_folds_qname() {
        let r = parse_log_line("1523577600\tc42\tWWW.Example.COM\tA\t93.184.216.34").unwrap();
        assert_eq!(r.qname, "www.example.com");
    }

    #[test]
    fn rejects_bad_ip() {
        let e = parse_log_line("1523577600\tc42\tbad..name\tA\tnot-an-ip").unwrap_err();
        assert!(matches!(e, ParseError::Malformed(_)));
    }

    #[test]
    fn rejects_wrong_field_count_and_timestamp() {
        assert!(matches!(
            parse_log_line("1\tc1\ta.test\tA"),
            Err(ParseError::Malformed(_))
        ));
        assert!(matches!(
            parse_log_line("x\tc1\ta.test\tA\t1.2.3.4"),
            Err(ParseError::Malformed(_))
        ));
        assert!(matches!(
            parse_log_line("1\tc1\ta.test\tBOGUS\t1.2.3.4"),
            Err(ParseError::Malformed(_))
        ));
        assert!(matches!(
            parse_log_line("1\tc1\ta.test\tA\t::1"),
            Err(ParseError::Malformed(_))
        ));
    }

    #[test]
    fn unsupported_types_are_distinguished() {
        assert_eq!(
            parse_log_line("1\tc1\ta.test\tMX\tmail.a.test"),
            Err(ParseError::UnsupportedType("MX".into()))
        );
    }

    #[test]
    fn read_logs_counts_and_skips() {
        let text = "# header\n1\tc1\ta.test\tA\t1.2.3.4\n2\tc1\ta.test\tMX\tx\nbroken\n\n";
        let (recs, stats) = read_logs(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(stats.malformed, 1);
        assert_eq!(stats.unsupported, 1);
        assert_eq!(stats.comments, 2);
    }

    #[test]
    fn parses_pdns_records() {
        let r = parse_pdns_line(
            r#"{"rrname":"evil.test","rrtype":"A","rdata":"10.0.0.9","time_first":1,"time_last":2,"count":7}"#,
        )
        .unwrap();
        assert_eq!(r.count, 7);
        assert_eq!(r.rdata, "10.0.0.9");
        let c = parse_pdns_line(
            r#"{"rrname":"a.test","rrtype":"CNAME","rdata":"b.test.","time_first":1,"time_last":2,"count":1}"#,
        )
        .unwrap();
        assert_eq!((c.qname.as_str(), c.rtype, c.rdata.as_str()), ("a.test", RecordType::Cname, "b.test"));
    }

    #[test]
    fn pdns_invariants_enforced() {
        assert!(matches!(
            parse_pdns_line(
                r#"{"rrname":"a.test","rrtype":"A","rdata":"1.1.1.1","time_first":5,"time_last":2,"count":1}"#
            ),
            Err(ParseError::Malformed(_))
        ));
        assert!(matches!(
            parse_pdns_line(
                r#"{"rrname":"a.test","rrtype":"A","rdata":"1.1.1.1","time_first":1,"time_last":2,"count":0}"#
            ),
            Err(ParseError::Malformed(_))
        ));
    }

    #[test]
    fn public_2ld_entry_covers_subdomains() {
        let entries = parse_labels("taobao.com,0,public\n".as_bytes(), 2).unwrap();
        let idx = LabelIndex::new(&entries, ConflictPolicy::DropPrior);
        assert_eq!(
            idx.prior("chat.im.taobao.com"),
            Some(Prior {
                class_id: 0,
                source: LabelSource::Public
            })
        );
    }

    #[test]
    fn manual_entry_is_exact() {
        let entries = parse_labels("sim.jiovt.com,3,manual\n".as_bytes(), 4).unwrap();
        assert_eq!(entries[0].pattern, LabelPattern::Exact("sim.jiovt.com".into()));
        let idx = LabelIndex::new(&entries, ConflictPolicy::DropPrior);
        assert_eq!(idx.prior("sim.jiovt.com").unwrap().class_id, 3);
        assert_eq!(idx.prior("x.sim.jiovt.com"), None);
    }

    #[test]
    fn explicit_2ld_prefix() {
        let entries = parse_labels("2ld:example.com,1,manual\n".as_bytes(), 2).unwrap();
        assert!(entries[0].pattern.matches("a.b.example.com"));
        assert!(!entries[0].pattern.matches("example.org"));
    }

    #[test]
    fn empty_label_file() {
        assert!(parse_labels("".as_bytes(), 2).unwrap().is_empty());
    }

    #[test]
    fn conflicting_entries_in_one_file() {
        let e = parse_labels("a.test,0,manual\na.test,1,manual\n".as_bytes(), 2).unwrap_err();
        assert!(matches!(e, Error::ConflictingEntry { .. }));
    }

    #[test]
    fn class_id_bounds_checked() {
        let e = parse_labels("a.test,5,manual\n".as_bytes(), 2).unwrap_err();
        assert!(matches!(e, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn cross_file_conflicts_follow_policy() {
        let a = parse_labels("alipay.com,0,public\n".as_bytes(), 2).unwrap();
        let b = parse_labels("alipay.com,1,public\n".as_bytes(), 2).unwrap();
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let dropped = LabelIndex::new(&all, ConflictPolicy::DropPrior);
        assert_eq!(dropped.prior("memberprod.alipay.com"), None);
        let random = LabelIndex::new(&all, ConflictPolicy::Randomize { seed: 1 });
        let p = random.prior("memberprod.alipay.com").unwrap();
        assert!(p.class_id <= 1);
        assert_eq!(random.prior("memberprod.alipay.com"), Some(p));
    }

    #[test]
    fn manual_beats_public_beats_local() {
        let entries = vec![
            LabelEntry::exact("x.test", 1, LabelSource::Local, 0),
            LabelEntry {
                pattern: LabelPattern::SecondLevel("x.test".into()),
                class_id: 0,
                source: LabelSource::Public,
                issued_at: 0,
            },
        ];
        let idx = LabelIndex::new(&entries, ConflictPolicy::DropPrior);
        assert_eq!(idx.prior("x.test").unwrap().source, LabelSource::Public);
        let mut with_manual = idx.clone();
        with_manual.insert(&LabelEntry::exact("x.test", 1, LabelSource::Manual, 0));
        assert_eq!(with_manual.prior("x.test").unwrap().class_id, 1);
    }

    fn rec(ts: i64) -> DnsLogRecord {
        DnsLogRecord {
            timestamp: ts,
            client_id: "c".into(),
            qname: "a.test".into(),
            qtype: RecordType::A,
            answers: vec![],
        }
    }

    #[test]
    fn windows_are_half_open() {
        let batches = window(vec![rec(0), rec(100), rec(3600)], &[], 3600).unwrap();
        assert_eq!(batches.len(), 2);
        assert_eq!(batches[0].logs.len(), 2);
        assert_eq!(batches[1].logs.len(), 1);
        assert_eq!(batches[1].window_start, 3600);
    }

    #[test]
    fn single_hour_single_window() {
        let batches = window(vec![rec(7200), rec(7300), rec(10799)], &[], 3600).unwrap();
        assert_eq!(batches.len(), 1);
    }

    #[test]
    fn pdns_spanning_windows_attached_to_each() {
        let p = PassiveDnsRecord {
            qname: "a.test".into(),
            rtype: RecordType::A,
            rdata: "1.1.1.1".into(),
            first_seen: 3000,
            last_seen: 4000,
            count: 1,
        };
        let late = PassiveDnsRecord {
            first_seen: 7200,
            last_seen: 9000,
            ..p.clone()
        };
        let batches =
            window(vec![rec(0), rec(3600), rec(7200)], &[p.clone(), late.clone()], 3600).unwrap();
        // interval-overlap oracle over all windows
        for b in &batches {
            let overlaps = |q: &PassiveDnsRecord| {
                (b.window_start..b.window_end).any(|t| t >= q.first_seen && t <= q.last_seen)
            };
            assert_eq!(b.pdns.contains(&p), overlaps(&p));
            assert_eq!(b.pdns.contains(&late), overlaps(&late));
        }
        assert_eq!(batches[0].pdns, vec![p.clone()]);
        assert_eq!(batches[1].pdns, vec![p]);
        assert_eq!(batches[2].pdns, vec![late]);
    }

    #[test]
    fn window_rejects_nonpositive_length() {
        assert!(window(vec![rec(0)], &[], 0).is_err());
    }

    fn arb_name() -> impl Strategy<Value = String> {
        proptest::collection::vec("[a-zA-Z0-9_-]{1,10}", 1..4).prop_map(|l| l.join("."))
    }

    fn arb_record() -> impl Strategy<Value = DnsLogRecord> {
        (
            0i64..2_000_000_000,
            "[a-z0-9]{1,6}",
            arb_name(),
            prop_oneof![
                any::<[u8; 4]>().prop_map(|o| (RecordType::A, std::net::Ipv4Addr::from(o).to_string())),
                any::<[u16; 8]>().prop_map(|s| (RecordType::Aaaa, std::net::Ipv6Addr::from(s).to_string())),
                arb_name().prop_map(|n| (RecordType::Cname, n.to_ascii_lowercase())),
            ],
        )
            .prop_map(|(ts, client, qname, (rtype, rdata))| DnsLogRecord {
                timestamp: ts,
                client_id: client,
                qname: qname.to_ascii_lowercase(),
                qtype: rtype,
                answers: vec![Answer { rdata, rtype }],
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_fixed_point(r in arb_record()) {
            let lines = r.to_lines();
            prop_assert_eq!(lines.len(), 1);
            let back = parse_log_line(&lines[0]).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(back.to_lines(), lines);
        }

        #[test]
        fn normalization_idempotent(name in "[a-zA-Z0-9.-]{0,20}\\.?") {
            let once = normalize_name(&name);
            prop_assert_eq!(normalize_name(&once), once.clone());
        }

        #[test]
        fn windowing_partitions(ts in proptest::collection::vec(0i64..50_000, 0..60), t in 1i64..5000) {
            let recs: Vec<_> = ts.iter().map(|&x| rec(x)).collect();
            let batches = window(recs, &[], t).unwrap();
            let total: usize = batches.iter().map(|b| b.logs.len()).sum();
            prop_assert_eq!(total, ts.len());
            for b in &batches {
                prop_assert_eq!(b.window_end - b.window_start, t);
                for r in &b.logs {
                    prop_assert!(r.timestamp >= b.window_start && r.timestamp < b.window_end);
                }
            }
        }
    }
}
