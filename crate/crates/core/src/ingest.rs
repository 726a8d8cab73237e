//! Parsing of transaction records, entity-label directories, and seed
//! address lists into validated in-memory stores.
//!
//! File formats:
//! * transactions — JSON Lines, one object per line:
//!   `{"txid": str, "inputs": [[addr, amount], ...], "outputs": [[addr, amount], ...], "timestamp": int, "height": int}`
//! * labels — CSV with header `address,entity,category`
//! * seeds — plain text, one address per line, `#`-prefixed comments ignored

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use thiserror::Error;

/// Reserved input address for coinbase transactions, so every transaction
/// has a non-empty input side and the bipartite invariant holds everywhere.
pub const COINBASE_ADDRESS: &str = "COINBASE";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("line {line}: duplicate txid \"{txid}\" (first seen on line {first})")]
    DuplicateTxid {
        line: usize,
        first: usize,
        txid: String,
    },
    #[error("line {line}: duplicate seed address \"{address}\"")]
    DuplicateSeed { line: usize, address: String },
    #[error("labels row {row}: unknown category \"{value}\"")]
    UnknownCategory { row: usize, value: String },
    #[error("label file must start with header `address,entity,category`, got `{0}`")]
    BadLabelHeader(String),
    #[error("labels row {row}: expected 3 fields, got {got}")]
    BadLabelRow { row: usize, got: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One blockchain transaction: inputs and outputs as (address, amount) pairs,
/// amounts in integer satoshis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRecord {
    pub txid: String,
    pub inputs: Vec<(String, u64)>,
    pub outputs: Vec<(String, u64)>,
    pub timestamp: i64,
    pub height: u64,
}

/// Unvalidated wire form. Amounts are read as `i64` so a negative amount
/// surfaces as a validation error rather than a deserialization failure.
#[derive(Deserialize)]
struct RawTxRecord {
    txid: String,
    inputs: Vec<(String, i64)>,
    outputs: Vec<(String, i64)>,
    timestamp: i64,
    height: u64,
}

impl RawTxRecord {
    fn validate(self, line: usize) -> Result<TxRecord, IngestError> {
        let invalid = |reason: String| IngestError::Invalid { line, reason };
        if self.txid.is_empty() {
            return Err(invalid("empty txid".into()));
        }
        if self.inputs.is_empty() {
            return Err(invalid(format!("tx \"{}\" has no inputs", self.txid)));
        }
        if self.outputs.is_empty() {
            return Err(invalid(format!("tx \"{}\" has no outputs", self.txid)));
        }
        let convert = |pairs: Vec<(String, i64)>, side: &str| {
            pairs
                .into_iter()
                .map(|(addr, amount)| {
                    if addr.is_empty() {
                        return Err(invalid(format!("empty {side} address")));
                    }
                    u64::try_from(amount)
                        .map(|amount| (addr, amount))
                        .map_err(|_| invalid(format!("negative {side} amount {amount}")))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(TxRecord {
            inputs: convert(self.inputs, "input")?,
            outputs: convert(self.outputs, "output")?,
            txid: self.txid,
            timestamp: self.timestamp,
            height: self.height,
        })
    }
}

/// Parses line-delimited JSON transaction records, in file order.
/// Duplicate txids are rejected with the offending line number.
pub fn parse_transactions<R: BufRead>(reader: R) -> Result<Vec<TxRecord>, IngestError> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTxRecord =
            serde_json::from_str(&line).map_err(|source| IngestError::Malformed {
                line: line_no,
                source,
            })?;
        let record = raw.validate(line_no)?;
        if let Some(&first) = seen.get(&record.txid) {
            return Err(IngestError::DuplicateTxid {
                line: line_no,
                first,
                txid: record.txid,
            });
        }
        seen.insert(record.txid.clone(), line_no);
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the same JSON Lines format `parse_transactions` reads.
pub fn write_transactions<W: Write>(records: &[TxRecord], mut writer: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Entity category, the closed set used by tagpack-style label sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Exchange,
    Gambling,
    Marketplace,
    MiningPool,
    Mixer,
    Service,
    Trading,
    #[serde(rename = "eWallet")]
    EWallet,
    Ransomware,
    Other,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Exchange,
        Category::Gambling,
        Category::Marketplace,
        Category::MiningPool,
        Category::Mixer,
        Category::Service,
        Category::Trading,
        Category::EWallet,
        Category::Ransomware,
        Category::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Exchange => "Exchange",
            Category::Gambling => "Gambling",
            Category::Marketplace => "Marketplace",
            Category::MiningPool => "MiningPool",
            Category::Mixer => "Mixer",
            Category::Service => "Service",
            Category::Trading => "Trading",
            Category::EWallet => "eWallet",
            Category::Ransomware => "Ransomware",
            Category::Other => "Other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or(())
    }
}

/// Real-world entity behind an address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLabel {
    pub entity: String,
    pub category: Category,
}

/// Address → entity directory merged from tagpack-like sources.
/// Later rows for the same address overwrite earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDirectory {
    entries: BTreeMap<String, EntityLabel>,
}

impl LabelDirectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, address: String, entity: String, category: Category) {
        self.entries
            .insert(address, EntityLabel { entity, category });
    }

    pub fn lookup(&self, address: &str) -> Option<&EntityLabel> {
        self.entries.get(address)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EntityLabel)> {
        self.entries.iter().map(|(a, l)| (a.as_str(), l))
    }
}

/// Parses a `address,entity,category` CSV into a directory (last row wins).
pub fn parse_labels<R: std::io::Read>(reader: R) -> Result<LabelDirectory, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = csv_reader.headers()?.clone();
    let expected = ["address", "entity", "category"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(IngestError::BadLabelHeader(
            header.iter().collect::<Vec<_>>().join(","),
        ));
    }
    let mut directory = LabelDirectory::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row?;
        if row.len() != 3 {
            return Err(IngestError::BadLabelRow {
                row: row_no,
                got: row.len(),
            });
        }
        let category: Category = row[2].parse().map_err(|_| IngestError::UnknownCategory {
            row: row_no,
            value: row[2].to_string(),
        })?;
        directory.insert(row[0].to_string(), row[1].to_string(), category);
    }
    Ok(directory)
}

/// Writes a directory back to the CSV format `parse_labels` reads.
pub fn write_labels<W: Write>(directory: &LabelDirectory, mut writer: W) -> std::io::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(&mut writer);
    csv_writer.write_record(["address", "entity", "category"])?;
    for (address, label) in directory.iter() {
        csv_writer.write_record([address, &label.entity, label.category.as_str()])?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Ordered seed addresses; each gets a numeric id 1..=K in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet {
    addresses: Vec<String>,
    ids: HashMap<String, u32>,
}

impl SeedSet {
    pub fn from_addresses<I>(addresses: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = String>,
    {
        let mut set = SeedSet::default();
        for address in addresses {
            if set.ids.contains_key(&address) {
                return Err(address);
            }
            set.push(address);
        }
        Ok(set)
    }

    fn push(&mut self, address: String) {
        let id = self.addresses.len() as u32 + 1;
        self.ids.insert(address.clone(), id);
        self.addresses.push(address);
    }

    /// Numeric id of a seed address (1-based), if present.
    pub fn id_of(&self, address: &str) -> Option<u32> {
        self.ids.get(address).copied()
    }

    pub fn address_of(&self, id: u32) -> Option<&str> {
        self.addresses.get(id as usize - 1).map(String::as_str)
    }

    /// Seeds in id order as `(id, address)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.addresses
            .iter()
            .enumerate()
            .map(|(i, a)| (i as u32 + 1, a.as_str()))
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }
}

/// Parses one address per line; blank lines and `#` comments are skipped.
pub fn parse_seeds<R: BufRead>(reader: R) -> Result<SeedSet, IngestError> {
    let mut set = SeedSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let address = line.trim();
        if address.is_empty() || address.starts_with('#') {
            continue;
        }
        if set.ids.contains_key(address) {
            return Err(IngestError::DuplicateSeed {
                line: line_no,
                address: address.to_string(),
            });
        }
        set.push(address.to_string());
    }
    Ok(set)
}

/// Writes one seed address per line, in id order.
pub fn write_seeds<W: Write>(seeds: &SeedSet, mut writer: W) -> std::io::Result<()> {
    for (_, address) in seeds.iter() {
        writeln!(writer, "{address}")?;
    }
    Ok(())
}
