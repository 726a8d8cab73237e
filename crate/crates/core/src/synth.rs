//! Deterministic synthetic corpus generator: planted two-transaction
//! pass-through units, peeling chains, and background noise, with ground
//! truth for evaluating the detection pipeline end to end.

use crate::ingest::{
    write_labels, write_seeds, write_transactions, Category, LabelDirectory, SeedSet, TxRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Shared minor funder of every pass-through unit's first transaction. It
/// links the units into one activity graph so community detection runs on a
/// realistically sized instance instead of thirty tiny islands.
pub const FILLER_ADDRESS: &str = "filler-shared";

const BASE_HEIGHT: u64 = 800_000;
const BASE_TIMESTAMP: i64 = 1_700_000_000;
const BLOCK_SPACING: i64 = 600;

/// Corpus shape. Amounts are drawn log-uniformly from `amount_range`
/// (satoshis); keeping the range within one order of magnitude keeps every
/// planted unit dense enough to survive community detection intact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rng_seed: u64,
    pub n_passthrough: usize,
    pub n_peeling_chains: usize,
    pub peeling_length: usize,
    pub n_noise_txs: usize,
    pub n_exchange_entities: usize,
    pub amount_range: (u64, u64),
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rng_seed: 7,
            n_passthrough: 30,
            n_peeling_chains: 6,
            peeling_length: 6,
            n_noise_txs: 40,
            n_exchange_entities: 4,
            amount_range: (100_000, 1_000_000),
        }
    }
}

/// One planted pass-through: deposit → tx1 → two bridges → tx2 → withdrawal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPassThrough {
    pub tx1: String,
    pub tx2: String,
    pub deposit: String,
    pub withdrawal: String,
    pub bridges: [String; 2],
}

/// One planted peeling chain, seeded at its funding address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedChain {
    pub seed: String,
    pub txids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub units: Vec<PlantedPassThrough>,
    pub chains: Vec<PlantedChain>,
    pub noise_txids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub transactions: Vec<TxRecord>,
    pub labels: LabelDirectory,
    pub seeds: SeedSet,
    pub truth: GroundTruth,
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (u64, u64)) -> u64 {
    if lo == hi {
        return lo;
    }
    let sample = rng.gen_range((lo as f64).ln()..=(hi as f64).ln()).exp();
    (sample.round() as u64).clamp(lo, hi)
}

/// Generates the corpus described by `spec`. Fully deterministic: the same
/// spec always yields byte-identical records, labels, seeds, and truth.
pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    assert!(spec.amount_range.0 >= 1, "amounts are positive satoshis");
    assert!(
        spec.amount_range.0 <= spec.amount_range.1,
        "amount range must be ordered"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut transactions = Vec::new();
    let mut labels = LabelDirectory::new();
    let mut seed_addresses = Vec::new();
    let mut truth = GroundTruth {
        units: Vec::new(),
        chains: Vec::new(),
        noise_txids: Vec::new(),
    };
    let mut tick: u64 = 0;
    let stamp = |tick: &mut u64| {
        let height = BASE_HEIGHT + *tick;
        let timestamp = BASE_TIMESTAMP + *tick as i64 * BLOCK_SPACING;
        *tick += 1;
        (height, timestamp)
    };

    let entity_pool = spec.n_exchange_entities.max(1);
    for i in 0..spec.n_passthrough {
        // One base amount per unit; the 10:1 input and output splits put the
        // dominant shares at 10/11 ≈ 0.909.
        let base = log_uniform(&mut rng, spec.amount_range);
        let deposit = format!("deposit-{i:02}");
        let bridge_a = format!("bridge-{i:02}-a");
        let bridge_b = format!("bridge-{i:02}-b");
        let withdrawal = format!("withdraw-{i:02}");
        let change = format!("pass-change-{i:02}");
        let tx1 = format!("pass-{i:02}-in");
        let tx2 = format!("pass-{i:02}-out");
        let (height, timestamp) = stamp(&mut tick);
        transactions.push(TxRecord {
            txid: tx1.clone(),
            inputs: vec![(deposit.clone(), 10 * base), (FILLER_ADDRESS.into(), base)],
            outputs: vec![(bridge_a.clone(), 9 * base), (bridge_b.clone(), 2 * base)],
            timestamp,
            height,
        });
        let (height, timestamp) = stamp(&mut tick);
        transactions.push(TxRecord {
            txid: tx2.clone(),
            inputs: vec![(bridge_a.clone(), 9 * base), (bridge_b.clone(), 2 * base)],
            outputs: vec![(withdrawal.clone(), 10 * base), (change.clone(), base)],
            timestamp,
            height,
        });
        labels.insert(
            deposit.clone(),
            format!("exchange-{:02}", i % entity_pool),
            Category::Exchange,
        );
        labels.insert(
            withdrawal.clone(),
            format!("exchange-{:02}", (i + 1) % entity_pool),
            Category::Exchange,
        );
        seed_addresses.push(bridge_a.clone());
        truth.units.push(PlantedPassThrough {
            tx1,
            tx2,
            deposit,
            withdrawal,
            bridges: [bridge_a, bridge_b],
        });
    }

    for k in 0..spec.n_peeling_chains {
        let seed = format!("peel-src-{k:02}");
        let base = log_uniform(&mut rng, spec.amount_range);
        // Start high enough that ten-percent peels never exhaust the value.
        let mut value = base * (spec.peeling_length as u64 + 2);
        let mut holder = seed.clone();
        let mut txids = Vec::new();
        for j in 0..spec.peeling_length {
            let txid = format!("peel-{k:02}-{j:02}");
            let peel_out = format!("peel-out-{k:02}-{j:02}");
            let next = format!("peel-chg-{k:02}-{j:02}");
            let peeled = (value / 10).max(1);
            let (height, timestamp) = stamp(&mut tick);
            transactions.push(TxRecord {
                txid: txid.clone(),
                inputs: vec![(holder, value)],
                outputs: vec![(peel_out.clone(), peeled), (next.clone(), value - peeled)],
                timestamp,
                height,
            });
            let category = if j % 2 == 0 {
                Category::Gambling
            } else {
                Category::Service
            };
            labels.insert(peel_out, format!("sink-{k:02}-{j:02}"), category);
            holder = next;
            value -= peeled;
            txids.push(txid);
        }
        if !txids.is_empty() {
            seed_addresses.push(seed.clone());
            truth.chains.push(PlantedChain { seed, txids });
        }
    }

    let noise_pool = (spec.n_noise_txs / 2).max(8);
    let pick = |rng: &mut ChaCha8Rng, exclude: &[usize]| loop {
        let idx = rng.gen_range(0..noise_pool);
        if !exclude.contains(&idx) {
            return idx;
        }
    };
    for m in 0..spec.n_noise_txs {
        let txid = format!("noise-{m:03}");
        let a = pick(&mut rng, &[]);
        let b = pick(&mut rng, &[a]);
        let c = pick(&mut rng, &[a, b]);
        let total = log_uniform(&mut rng, spec.amount_range);
        let split = (total / 3).max(1);
        let (height, timestamp) = stamp(&mut tick);
        transactions.push(TxRecord {
            txid: txid.clone(),
            inputs: vec![(format!("noise-{a:03}"), total)],
            outputs: vec![
                (format!("noise-{b:03}"), split),
                (format!("noise-{c:03}"), total - split),
            ],
            timestamp,
            height,
        });
        truth.noise_txids.push(txid);
    }

    let seeds =
        SeedSet::from_addresses(seed_addresses).expect("generated seed addresses are unique");
    SynthCorpus {
        transactions,
        labels,
        seeds,
        truth,
    }
}

impl SynthCorpus {
    /// Writes `transactions.jsonl`, `labels.csv`, `seeds.txt`, and
    /// `ground_truth.json` into `dir` (created if missing).
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_transactions(
            &self.transactions,
            BufWriter::new(File::create(dir.join("transactions.jsonl"))?),
        )?;
        write_labels(
            &self.labels,
            BufWriter::new(File::create(dir.join("labels.csv"))?),
        )?;
        write_seeds(
            &self.seeds,
            BufWriter::new(File::create(dir.join("seeds.txt"))?),
        )?;
        let mut truth = BufWriter::new(File::create(dir.join("ground_truth.json"))?);
        serde_json::to_writer_pretty(&mut truth, &self.truth)?;
        truth.write_all(b"\n")?;
        Ok(())
    }
}
