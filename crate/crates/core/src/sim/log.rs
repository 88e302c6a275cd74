use std::io::{self, BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::packet::Combo;
use crate::gf::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Keygen,
    Message,
}

/// One slot of one hop, as seen by the omniscient simulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub hop: usize,
    pub slot: u64,
    pub phase: Phase,
    #[serde(serialize_with = "hex_symbols", deserialize_with = "unhex_symbols")]
    pub payload: Vec<Symbol>,
    pub receiver_got: bool,
    pub eve_got: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<Combo>,
}

// Symbols are written big-endian, two bytes each.
fn hex_symbols<S: Serializer>(v: &[Symbol], s: S) -> Result<S::Ok, S::Error> {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_be_bytes()).collect();
    s.serialize_str(&hex::encode(bytes))
}

fn unhex_symbols<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Symbol>, D::Error> {
    let s = String::deserialize(d)?;
    let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
    if bytes.len() % 2 != 0 {
        return Err(serde::de::Error::custom("payload hex must encode whole 16-bit symbols"));
    }
    Ok(bytes.chunks(2).map(|c| Symbol::from_be_bytes([c[0], c[1]])).collect())
}

/// Write-once record of every slot on one or more hops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransmissionLog {
    records: Vec<SlotRecord>,
}

impl TransmissionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, record: SlotRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The public ACK/NACK sequence: receiver states only.
    pub fn feedback(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.receiver_got).collect()
    }

    /// True when every record carries its linear map.
    pub fn is_linear(&self) -> bool {
        self.records.iter().all(|r| r.combo.is_some())
    }

    pub fn write_json_lines<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_json_lines<R: BufRead>(r: R) -> io::Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(Self { records })
    }
}
