//! Monte-Carlo runs of the key-generation, message and relaying schemes
//! over erasure broadcast channels with public ACK feedback.
//!
//! Every packet is a vector of field symbols. When
//! [`SimConfig::track_linear_maps`] is set, each packet also carries its
//! linear map over the run's uniform unknowns (random packets and messages),
//! which is what the audit module checks.

mod channel;
mod keygen;
mod line;
mod log;
mod message;
mod packet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::ParamError;
use crate::gf::{Field, FieldConfig, GfError, Symbol};

pub use channel::{stream_rng, Hop, SlotOutcome, Stream};
pub use keygen::{run_keygen, KeygenOutcome};
pub use line::{run_line, HopOutcome, LineMode, LineOutcome, LineReport};
pub use log::{Phase, SlotRecord, TransmissionLog};
pub use message::{draw_messages, run_message_phase, MessageOutcome};
pub use packet::{apply_matrix, apply_matrix_payloads, combine, Combo, Packet, UnknownKind, Unknowns};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("{slots} slots at randomness rate {rate} yield no source packet")]
    NoRandomness { slots: u64, rate: f64 },
    #[error("schedule refused: {0}")]
    Refused(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    /// Privacy-amplification margin: extraction sizes are (1 - eps_pa) of
    /// their asymptotic value.
    pub eps_pa: f64,
    pub word_bits: u32,
    /// Symbols per packet.
    pub payload_symbols: usize,
    /// Largest MDS matrix width; larger pools are split into chunks.
    pub chunk_columns: usize,
    pub track_linear_maps: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            eps_pa: 0.05,
            word_bits: 8,
            payload_symbols: 4,
            chunk_columns: 200,
            track_linear_maps: true,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..1.0).contains(&self.eps_pa) {
            return Err(SimError::Config(format!("eps_pa = {} outside [0, 1)", self.eps_pa)));
        }
        if self.payload_symbols == 0 {
            return Err(SimError::Config("payload_symbols must be at least 1".into()));
        }
        let order = FieldConfig::with_word_bits(self.word_bits)?.order();
        if self.chunk_columns < 2 || self.chunk_columns >= order {
            return Err(SimError::Config(format!(
                "chunk_columns = {} must lie in 2..{order} for GF(2^{})",
                self.chunk_columns, self.word_bits
            )));
        }
        Ok(())
    }

    pub fn field(&self) -> Result<Field, SimError> {
        Ok(Field::new(FieldConfig::with_word_bits(self.word_bits)?)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PrivateSource,
    Forwarded,
}

/// Random packets known to `node` (and possibly its predecessor).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RandomPool {
    pub node: usize,
    pub packets: Vec<Packet>,
    pub provenance: Vec<Provenance>,
}

impl RandomPool {
    pub fn new(node: usize) -> Self {
        Self {
            node,
            ..Self::default()
        }
    }

    pub fn push(&mut self, packet: Packet, provenance: Provenance) {
        self.packets.push(packet);
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }
}

/// One MDS extraction that produced key rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub label: String,
    pub rows: usize,
    pub columns: usize,
}

/// Key packets as held by the sender (with maps) and by the receiver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub sender: Vec<Packet>,
    pub receiver: Vec<Vec<Symbol>>,
    pub extractions: Vec<Extraction>,
}

impl KeyMaterial {
    pub fn len(&self) -> usize {
        self.sender.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sender.is_empty()
    }

    /// Sender and receiver copies are identical.
    pub fn agrees(&self) -> bool {
        self.sender.len() == self.receiver.len()
            && self.sender.iter().zip(&self.receiver).all(|(s, r)| &s.payload == r)
    }

    /// Splits off the rows from `at` on into a new key.
    pub fn split_off(&mut self, at: usize) -> KeyMaterial {
        KeyMaterial {
            sender: self.sender.split_off(at),
            receiver: self.receiver.split_off(at),
            extractions: self.extractions.clone(),
        }
    }

    /// Extracts `rows` combinations of `columns` (sender copies) with a
    /// `rows x columns` MDS matrix, and the same from the receiver copies.
    pub(crate) fn extract(
        &mut self,
        field: &Field,
        label: String,
        sender: &[&Packet],
        receiver: &[&[Symbol]],
        rows: usize,
    ) -> Result<(), SimError> {
        if rows == 0 {
            return Ok(());
        }
        let m = field.make_mds(rows, sender.len())?;
        self.sender.extend(apply_matrix(field, &m, sender));
        self.receiver.extend(apply_matrix_payloads(field, &m, receiver));
        self.extractions.push(Extraction {
            label,
            rows,
            columns: sender.len(),
        });
        Ok(())
    }
}

/// Row counts for chunked extraction at a fixed fraction: each call
/// returns the rows owed to the next chunk so the total stays
/// floor(fraction * all columns so far).
#[derive(Debug, Clone)]
pub(crate) struct RowBudget {
    fraction: f64,
    columns: usize,
    rows: usize,
}

impl RowBudget {
    pub(crate) fn new(fraction: f64) -> Self {
        Self {
            fraction: fraction.clamp(0.0, 1.0),
            columns: 0,
            rows: 0,
        }
    }

    pub(crate) fn next(&mut self, columns: usize) -> usize {
        self.columns += columns;
        let target = (self.fraction * self.columns as f64 + 1e-9).floor() as usize;
        let rows = target.saturating_sub(self.rows).min(columns);
        self.rows += rows;
        rows
    }
}

/// Empirical figures of a run; rates are counts divided by `slots`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub slots: u64,
    pub slots_used: u64,
    pub key_packets: usize,
    pub forwarded_packets: usize,
    pub randomness_consumed: usize,
    pub messages_delivered: usize,
    pub key_consumed: usize,
    pub key_recycled: usize,
    pub key_rate: f64,
    pub forwarded_rate: f64,
    pub message_rate: f64,
    /// Net key packets spent per delivered message.
    pub key_consumed_per_message: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub advisories: Vec<String>,
}

impl SimReport {
    pub(crate) fn finish_rates(&mut self) {
        let n = self.slots.max(1) as f64;
        self.key_rate = self.key_packets as f64 / n;
        self.forwarded_rate = self.forwarded_packets as f64 / n;
        self.message_rate = self.messages_delivered as f64 / n;
        self.key_consumed_per_message = (self.messages_delivered > 0)
            .then(|| (self.key_consumed as f64 - self.key_recycled as f64) / self.messages_delivered as f64);
    }
}
