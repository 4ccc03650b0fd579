//! Labeled synthetic DNS scenes.
//!
//! Benign domains draw clients by Zipf popularity from every segment and
//! sit on shared hosting addresses. Each malicious family is queried by an
//! overlapping victim group drawn from a few segments, resolves into its
//! own reusable address pool, and has a characteristic naming scheme. Some
//! domains of every class are CNAME aliases of same-class domains.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    Answer, DnsLogRecord, LabelEntry, LabelSource, PassiveDnsRecord, RecordType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameGenerator {
    /// Fixed-length lowercase hex labels.
    DgaHex,
    /// Two dictionary words run together.
    DgaDict,
    /// A benign name with one character edit.
    Typo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub domain_count: usize,
    pub name_generator: NameGenerator,
    /// Size of the victim group.
    pub victims: usize,
    /// Number of segments the victims are drawn from.
    pub victim_segments: usize,
    /// Probability that a given victim queries a given family domain; 1.0
    /// gives every domain the identical victim set.
    pub victim_segment_overlap: f64,
    pub ip_pool_size: usize,
    /// Probability an address slot reuses an address the family already
    /// handed out instead of taking a fresh one from the pool.
    pub ip_reuse_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub clients: usize,
    pub benign_domains: usize,
    /// Benign hosting addresses.
    pub ips: usize,
    pub segments: usize,
    pub families: Vec<FamilySpec>,
    /// Mean number of distinct benign domains each client queries.
    pub benign_query_rate: f64,
    pub zipf_exponent: f64,
    /// Every benign domain is queried by at least this many clients.
    pub min_clients_per_domain: usize,
    /// Probability that a non-victim client queries one random malicious
    /// domain.
    pub cross_query_probability: f64,
    /// Fraction of domains emitted as CNAME aliases of a same-class domain.
    pub cname_fraction: f64,
    pub start: i64,
    pub duration: i64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let family = |name: &str, generator, pool| FamilySpec {
            name: name.to_string(),
            domain_count: 200,
            name_generator: generator,
            victims: 30,
            victim_segments: 3,
            victim_segment_overlap: 0.5,
            ip_pool_size: pool,
            ip_reuse_rate: 0.6,
        };
        Self {
            clients: 500,
            benign_domains: 1400,
            ips: 900,
            segments: 50,
            families: vec![
                family("dga_hex", NameGenerator::DgaHex, 40),
                family("dga_dict", NameGenerator::DgaDict, 40),
                family("typo", NameGenerator::Typo, 40),
            ],
            benign_query_rate: 15.0,
            zipf_exponent: 0.8,
            min_clients_per_domain: 2,
            cross_query_probability: 0.05,
            cname_fraction: 0.05,
            start: 1_523_577_600,
            duration: 3600,
            seed: 7,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let infeasible = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.clients == 0 || self.benign_domains == 0 || self.ips == 0 || self.segments == 0 {
            return infeasible("client, domain, address and segment counts must be positive".into());
        }
        if self.duration <= 0 {
            return infeasible(format!("duration must be positive, got {}", self.duration));
        }
        for (name, v) in [
            ("cross_query_probability", self.cross_query_probability),
            ("cname_fraction", self.cname_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return infeasible(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.benign_query_rate > 0.0) || !(self.zipf_exponent >= 0.0) {
            return infeasible("benign_query_rate must be positive and zipf_exponent non-negative".into());
        }
        if self.min_clients_per_domain > self.clients {
            return infeasible("min_clients_per_domain exceeds client count".into());
        }
        let mut names = BTreeSet::new();
        for f in &self.families {
            if !names.insert(f.name.as_str()) {
                return infeasible(format!("family `{}` listed twice", f.name));
            }
            if f.domain_count == 0 || f.ip_pool_size == 0 {
                return infeasible(format!("family `{}` needs domains and addresses", f.name));
            }
            if f.victims == 0 || f.victim_segments == 0 {
                return infeasible(format!("family `{}` has no victims", f.name));
            }
            if f.victim_segments > self.segments || f.victims > self.clients {
                return infeasible(format!("family `{}` asks for more victims than exist", f.name));
            }
            for (knob, v) in [
                ("victim_segment_overlap", f.victim_segment_overlap),
                ("ip_reuse_rate", f.ip_reuse_rate),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return infeasible(format!("family `{}`: {knob} must be in [0, 1], got {v}", f.name));
                }
            }
        }
        if self.families.len() > 250 {
            return infeasible("at most 250 families".into());
        }
        Ok(())
    }

    pub fn class_count(&self) -> usize {
        1 + self.families.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub logs: Vec<DnsLogRecord>,
    pub pdns: Vec<PassiveDnsRecord>,
    /// `(client_id, segment_label)`.
    pub segments: Vec<(String, String)>,
    /// One exact manual entry per generated domain; class 0 is benign and
    /// family `k` (in spec order) is class `k + 1`.
    pub truth: Vec<LabelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenePaths {
    pub logs: PathBuf,
    pub pdns: PathBuf,
    pub segments: PathBuf,
    pub truth: PathBuf,
}

impl ScenePaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            logs: dir.join("logs.tsv"),
            pdns: dir.join("pdns.jsonl"),
            segments: dir.join("segments.csv"),
            truth: dir.join("truth.csv"),
        }
    }
}

impl Scene {
    pub fn logs_text(&self) -> String {
        let mut out = String::new();
        for r in &self.logs {
            for line in r.to_lines() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    pub fn pdns_text(&self) -> String {
        self.pdns.iter().map(|r| r.to_json_line() + "\n").collect()
    }

    pub fn segments_text(&self) -> String {
        let mut out = String::from("# client_id,segment_label\n");
        for (c, s) in &self.segments {
            out.push_str(&format!("{c},{s}\n"));
        }
        out
    }

    pub fn truth_text(&self) -> String {
        labels_text(&self.truth)
    }

    /// A seeded uniform sample of `round(fraction · n)` truth entries, in
    /// truth order, for use as a manual label list.
    pub fn sample_labels(&self, fraction: f64, seed: u64) -> Vec<LabelEntry> {
        let mut idx: Vec<usize> = (0..self.truth.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let keep = (fraction.clamp(0.0, 1.0) * idx.len() as f64).round() as usize;
        let mut kept = idx[..keep].to_vec();
        kept.sort_unstable();
        kept.into_iter().map(|i| self.truth[i].clone()).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<ScenePaths> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = ScenePaths::in_dir(dir);
        for (path, text) in [
            (&paths.logs, self.logs_text()),
            (&paths.pdns, self.pdns_text()),
            (&paths.segments, self.segments_text()),
            (&paths.truth, self.truth_text()),
        ] {
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(paths)
    }
}

/// Label-list text for `entries`.
pub fn labels_text(entries: &[LabelEntry]) -> String {
    let mut out = String::from("# domain,class_id,source,issued_at\n");
    for e in entries {
        out.push_str(&e.to_csv_line());
        out.push('\n');
    }
    out
}

const WORDS: &[&str] = &[
    "apple", "river", "stone", "cloud", "green", "house", "light", "music", "north", "ocean",
    "paper", "quick", "smart", "tiger", "urban", "value", "water", "young", "zebra", "bright",
    "market", "travel", "health", "sport", "money", "world", "daily", "study", "photo", "video",
    "games", "store", "shop", "news", "media", "design", "school", "bank", "cloud", "forest",
    "garden", "island", "jungle", "kitchen", "lemon", "mountain", "nature", "orange", "planet", "queen",
    "rocket", "silver", "summer", "winter", "spring", "autumn", "table", "window", "yellow", "purple",
    "castle", "dragon", "eagle", "falcon", "harbor", "iron", "jade", "knight", "lotus", "maple",
    "noble", "olive", "pearl", "quest", "royal", "sunny", "thunder", "unity", "vivid", "wonder",
    "crystal", "delta", "ember", "frost", "golden", "horizon", "indigo", "jolly", "kingdom", "lunar",
    "metro", "nova", "orbit", "pixel", "quantum", "radar", "solar", "tango", "ultra", "vector",
    "bridge", "canyon", "desert", "engine", "field", "glory", "heart", "image", "joy", "karma",
    "legend", "magic", "nexus", "omega", "prime", "rapid", "spirit", "trust", "venture", "wave",
];
const BENIGN_TLDS: &[&str] = &["com", "org", "net", "cn", "edu.cn", "io"];
const SUBDOMAINS: &[&str] = &["www", "mail", "cdn", "api", "img", "static", "news", "m"];
const DGA_TLDS: &[&str] = &["net", "info", "biz", "top", "xyz", "ru"];
const HEX: &[u8] = b"0123456789abcdef";
const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

fn benign_name(rng: &mut ChaCha8Rng) -> String {
    let w = |rng: &mut ChaCha8Rng| *WORDS.choose(rng).expect("non-empty");
    let tld = *BENIGN_TLDS.choose(rng).expect("non-empty");
    match rng.random_range(0..5) {
        0 => format!("{}.{tld}", w(rng)),
        1 => format!("{}-{}.{tld}", w(rng), w(rng)),
        2 => format!("{}{}.{tld}", w(rng), rng.random_range(1..100)),
        _ => {
            let sub = *SUBDOMAINS.choose(rng).expect("non-empty");
            format!("{sub}.{}.{tld}", w(rng))
        }
    }
}

fn hex_name(rng: &mut ChaCha8Rng, len: usize, tld: &str) -> String {
    let label: String = (0..len).map(|_| *HEX.choose(rng).expect("non-empty") as char).collect();
    format!("{label}.{tld}")
}

fn dict_name(rng: &mut ChaCha8Rng, tld: &str) -> String {
    let a = WORDS.choose(rng).expect("non-empty");
    let b = WORDS.choose(rng).expect("non-empty");
    format!("{a}{b}.{tld}")
}

/// One substitution, insertion, deletion or transposition inside the
/// registrable label of `base`.
fn typo_name(rng: &mut ChaCha8Rng, base: &str) -> String {
    let labels: Vec<&str> = base.split('.').collect();
    // the label just left of the public suffix
    let suffix_len = if base.ends_with(".edu.cn") { 2 } else { 1 };
    let target = labels.len() - suffix_len - 1;
    let mut chars: Vec<u8> = labels[target].bytes().collect();
    let letter = *LETTERS.choose(rng).expect("non-empty");
    let pos = rng.random_range(0..chars.len());
    match rng.random_range(0..4) {
        0 => chars[pos] = letter,
        1 => chars.insert(pos, letter),
        2 if chars.len() > 2 => {
            chars.remove(pos);
        }
        _ if pos + 1 < chars.len() => chars.swap(pos, pos + 1),
        _ => chars.push(letter),
    }
    let mut out: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    out[target] = String::from_utf8(chars).expect("ascii");
    out.join(".")
}

struct Namer {
    used: BTreeSet<String>,
}

impl Namer {
    fn fresh(&mut self, rng: &mut ChaCha8Rng, mut make: impl FnMut(&mut ChaCha8Rng) -> String) -> String {
        loop {
            let name = make(rng);
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn ip_for(class: usize, k: usize) -> String {
    if class == 0 {
        format!("93.{}.{}.{}", k / 65536 % 256, k / 256 % 256, k % 256)
    } else {
        format!("185.{}.{}.{}", class, k / 256 % 256, k % 256)
    }
}

struct DomainPlan {
    name: String,
    class: usize,
    ips: Vec<String>,
    cname_target: Option<usize>,
    clients: BTreeSet<usize>,
}

/// Same seed, same scene, byte for byte.
pub fn generate(spec: &ScenarioSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let client_ids: Vec<String> = (0..spec.clients).map(|c| format!("c{c:04}")).collect();
    let segment_of: Vec<usize> = (0..spec.clients).map(|c| c % spec.segments).collect();
    let mut namer = Namer {
        used: BTreeSet::new(),
    };

    // benign domains and their hosting
    let mut plans: Vec<DomainPlan> = Vec::new();
    let hosting = WeightedIndex::new((0..spec.ips).map(|r| 1.0 / (r as f64 + 1.0).powf(0.7)))
        .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    for _ in 0..spec.benign_domains {
        let name = namer.fresh(&mut rng, benign_name);
        let mut ips = vec![hosting.sample(&mut rng)];
        if rng.random_bool(0.3) {
            ips.push(hosting.sample(&mut rng));
        }
        ips.sort_unstable();
        ips.dedup();
        plans.push(DomainPlan {
            name,
            class: 0,
            ips: ips.into_iter().map(|k| ip_for(0, k)).collect(),
            cname_target: None,
            clients: BTreeSet::new(),
        });
    }
    let benign_names: Vec<String> = plans.iter().map(|p| p.name.clone()).collect();

    // families
    let mut family_ranges = Vec::new();
    for (f, fam) in spec.families.iter().enumerate() {
        let class = f + 1;
        let tld = *DGA_TLDS.choose(&mut rng).expect("non-empty");
        let hex_len = rng.random_range(10..16);
        let first = plans.len();
        let mut handed_out: Vec<usize> = Vec::new();
        let mut next_fresh = 0usize;
        for _ in 0..fam.domain_count {
            let name = match fam.name_generator {
                NameGenerator::DgaHex => namer.fresh(&mut rng, |r| hex_name(r, hex_len, tld)),
                NameGenerator::DgaDict => namer.fresh(&mut rng, |r| dict_name(r, tld)),
                NameGenerator::Typo => namer.fresh(&mut rng, |r| {
                    let base = benign_names.choose(r).expect("benign domains exist");
                    typo_name(r, base)
                }),
            };
            let slots = if rng.random_bool(0.3) { 2 } else { 1 };
            let mut ips = Vec::new();
            for _ in 0..slots {
                let reuse = !handed_out.is_empty() && rng.random_bool(fam.ip_reuse_rate);
                let k = if reuse || next_fresh >= fam.ip_pool_size {
                    *handed_out.choose(&mut rng).unwrap_or(&0)
                } else {
                    next_fresh += 1;
                    handed_out.push(next_fresh - 1);
                    next_fresh - 1
                };
                ips.push(k);
            }
            ips.sort_unstable();
            ips.dedup();
            plans.push(DomainPlan {
                name,
                class,
                ips: ips.into_iter().map(|k| ip_for(class, k)).collect(),
                cname_target: None,
                clients: BTreeSet::new(),
            });
        }
        family_ranges.push(first..plans.len());
    }

    // CNAME aliases point at another domain of the same class
    let class_ranges: Vec<std::ops::Range<usize>> = std::iter::once(0..spec.benign_domains)
        .chain(family_ranges.iter().cloned())
        .collect();
    for range in &class_ranges {
        if range.len() < 2 {
            continue;
        }
        for d in range.clone() {
            if rng.random_bool(spec.cname_fraction) {
                let mut t = rng.random_range(range.clone());
                while t == d {
                    t = rng.random_range(range.clone());
                }
                if plans[t].cname_target.is_none() {
                    plans[d].cname_target = Some(t);
                }
            }
        }
    }

    // benign popularity
    let zipf = WeightedIndex::new(
        (0..spec.benign_domains).map(|r| 1.0 / (r as f64 + 1.0).powf(spec.zipf_exponent)),
    )
    .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    let mut rank: Vec<usize> = (0..spec.benign_domains).collect();
    rank.shuffle(&mut rng);
    for c in 0..spec.clients {
        let target = (spec.benign_query_rate * rng.random_range(0.5..1.5)).round() as usize;
        let target = target.clamp(1, spec.benign_domains);
        let mut picked = BTreeSet::new();
        let mut guard = 0;
        while picked.len() < target && guard < 20 * target {
            picked.insert(rank[zipf.sample(&mut rng)]);
            guard += 1;
        }
        for d in picked {
            plans[d].clients.insert(c);
        }
    }
    for plan in plans.iter_mut().take(spec.benign_domains) {
        while plan.clients.len() < spec.min_clients_per_domain {
            plan.clients.insert(rng.random_range(0..spec.clients));
        }
    }

    // victims
    let mut all_victims = BTreeSet::new();
    for (fam, range) in spec.families.iter().zip(&family_ranges) {
        let mut segs: Vec<usize> = (0..spec.segments).collect();
        segs.shuffle(&mut rng);
        segs.truncate(fam.victim_segments);
        let mut pool: Vec<usize> = (0..spec.clients).filter(|&c| segs.contains(&segment_of[c])).collect();
        pool.shuffle(&mut rng);
        pool.truncate(fam.victims);
        pool.sort_unstable();
        for d in range.clone() {
            for &v in &pool {
                if rng.random_bool(fam.victim_segment_overlap) {
                    plans[d].clients.insert(v);
                }
            }
            while plans[d].clients.len() < pool.len().min(2) {
                plans[d].clients.insert(*pool.choose(&mut rng).expect("non-empty pool"));
            }
        }
        all_victims.extend(pool);
    }

    // cross-query noise
    let malicious: Vec<usize> = (spec.benign_domains..plans.len()).collect();
    if !malicious.is_empty() {
        for c in 0..spec.clients {
            if !all_victims.contains(&c) && rng.random_bool(spec.cross_query_probability) {
                let d = *malicious.choose(&mut rng).expect("non-empty");
                plans[d].clients.insert(c);
            }
        }
    }

    // emit
    let end = spec.start + spec.duration;
    let mut logs = Vec::new();
    for plan in &plans {
        for &c in &plan.clients {
            let ts = rng.random_range(spec.start..end);
            let client = client_ids[c].clone();
            let (resolved, ips) = match plan.cname_target {
                Some(t) => {
                    logs.push(DnsLogRecord {
                        timestamp: ts,
                        client_id: client.clone(),
                        qname: plan.name.clone(),
                        qtype: RecordType::Cname,
                        answers: vec![Answer {
                            rdata: plans[t].name.clone(),
                            rtype: RecordType::Cname,
                        }],
                    });
                    (&plans[t].name, &plans[t].ips)
                }
                None => (&plan.name, &plan.ips),
            };
            logs.push(DnsLogRecord {
                timestamp: ts,
                client_id: client,
                qname: resolved.clone(),
                qtype: RecordType::A,
                answers: ips
                    .iter()
                    .map(|ip| Answer {
                        rdata: ip.clone(),
                        rtype: RecordType::A,
                    })
                    .collect(),
            });
        }
    }
    logs.sort_by(|a, b| {
        (a.timestamp, &a.client_id, &a.qname, a.qtype as u8).cmp(&(
            b.timestamp,
            &b.client_id,
            &b.qname,
            b.qtype as u8,
        ))
    });

    let mut pdns = Vec::new();
    for plan in &plans {
        let first_seen = spec.start - rng.random_range(1..30) * 86_400;
        let count = rng.random_range(1..500);
        match plan.cname_target {
            Some(t) => pdns.push(PassiveDnsRecord {
                qname: plan.name.clone(),
                rtype: RecordType::Cname,
                rdata: plans[t].name.clone(),
                first_seen,
                last_seen: end - 1,
                count,
            }),
            None => {
                for ip in &plan.ips {
                    pdns.push(PassiveDnsRecord {
                        qname: plan.name.clone(),
                        rtype: RecordType::A,
                        rdata: ip.clone(),
                        first_seen,
                        last_seen: end - 1,
                        count,
                    });
                }
            }
        }
    }

    let segments = client_ids
        .iter()
        .zip(&segment_of)
        .map(|(c, s)| (c.clone(), format!("seg{s:03}")))
        .collect();
    let truth: BTreeMap<&str, usize> = plans.iter().map(|p| (p.name.as_str(), p.class)).collect();
    let truth = truth
        .into_iter()
        .map(|(name, class)| LabelEntry::exact(name, class, LabelSource::Manual, 0))
        .collect();
    Ok(Scene {
        logs,
        pdns,
        segments,
        truth,
    })
}
