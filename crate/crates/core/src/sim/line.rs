use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::channel::{stream_rng, Hop, Stream};
use super::keygen::{kg_phase, pool_phase, KeyPhase};
use super::log::TransmissionLog;
use super::message::{draw_messages, message_phase};
use super::packet::{Packet, UnknownKind, Unknowns};
use super::{KeyMaterial, Provenance, RandomPool, SimConfig, SimError, SimReport};
use crate::capacity::{KeygenScheme, Randomness};
use crate::gf::Symbol;
use crate::lp::{LineNetwork, RateSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineMode {
    OneEve,
    AllEves,
}

impl fmt::Display for LineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LineMode::OneEve => "one_eve",
            LineMode::AllEves => "all_eves",
        })
    }
}

impl FromStr for LineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "one_eve" => Ok(LineMode::OneEve),
            "all_eves" => Ok(LineMode::AllEves),
            other => Err(format!("unknown mode `{other}` (expected one_eve or all_eves)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopOutcome {
    pub hop: usize,
    /// Key-generation and message slots of this hop.
    pub log: TransmissionLog,
    /// Key protecting the messages on this hop, before the message phase.
    pub hop_key: KeyMaterial,
    /// Random packets handed to the next node.
    pub forwarded: RandomPool,
    /// Indices into this hop's extraction output used for the hop key and,
    /// in all_eves mode, forwarded downstream.
    pub hop_key_rows: Vec<usize>,
    pub forwarded_rows: Vec<usize>,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub seed: u64,
    pub mode: LineMode,
    pub slots_per_hop: u64,
    pub lp_rate: f64,
    pub messages_sent: usize,
    pub messages_delivered: usize,
    pub secure_message_rate: f64,
    pub hops: Vec<SimReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineOutcome {
    pub report: LineReport,
    pub hops: Vec<HopOutcome>,
    pub messages: Vec<Packet>,
    pub delivered: Vec<(usize, Vec<Symbol>)>,
    pub unknowns: Unknowns,
}

fn refused(msg: String) -> SimError {
    SimError::Refused(msg)
}

/// Relays `floor(m n)` messages across the line, hop by hop, with `n`
/// slots per hop. Each hop first builds a one-hop key (and forwards
/// randomness), then node j - 1 re-encrypts every message it decrypted.
pub fn run_line(
    net: &LineNetwork,
    mode: LineMode,
    rates: &RateSolution,
    n: u64,
    cfg: &SimConfig,
) -> Result<LineOutcome, SimError> {
    cfg.validate()?;
    net.validate().map_err(|e| SimError::Config(e.to_string()))?;
    if !rates.is_optimal() {
        return Err(refused(format!("rate solution is {:?}, not optimal", rates.status)));
    }
    let m = rates
        .value("m")
        .ok_or_else(|| refused("rate solution has no variable `m`".into()))?;
    let field = cfg.field()?;
    let total = (m * n as f64 + 1e-9).floor() as usize;
    if m > 0.0 && total == 0 {
        return Err(refused(format!("n = {n} slots carry no message at rate {m}")));
    }
    let mut unknowns = Unknowns::new();
    let messages = draw_messages(&field, &mut unknowns, total, cfg);
    let mut current: Vec<(usize, Packet)> = messages.iter().cloned().enumerate().collect();
    let mut incoming: Vec<Packet> = Vec::new();
    let mut hops = Vec::with_capacity(net.len());

    for (idx, params) in net.hops.iter().enumerate() {
        let j = idx + 1;
        let node = idx;
        let message_slots = if m == 0.0 {
            0
        } else if params.delta < 1.0 {
            (m / (1.0 - params.delta) * n as f64 - 1e-9).ceil() as u64
        } else {
            u64::MAX
        };
        if message_slots > n {
            return Err(refused(format!(
                "hop {j}: the message phase needs m / (1 - delta) n = {message_slots} of {n} slots"
            )));
        }
        let mut hop = Hop::new(j, *params, cfg.seed, n - message_slots);
        let mut rng = stream_rng(cfg.seed, j, Stream::Randomness);
        let kind = UnknownKind::Random { node };
        let (len, track) = (cfg.payload_symbols, cfg.track_linear_maps);
        let mut forwarded_in = std::mem::take(&mut incoming);

        let phase = match net.node_randomness[node] {
            Randomness::Unlimited => kg_phase(&field, cfg, &mut hop, || {
                Some(unknowns.fresh(&field, &mut rng, len, kind, track))
            })?,
            Randomness::Limited(rate) => {
                let private = (rate * n as f64 + 1e-9).floor() as usize;
                forwarded_in.extend((0..private).map(|_| unknowns.fresh(&field, &mut rng, len, kind, track)));
                if forwarded_in.is_empty() {
                    KeyPhase {
                        key: KeyMaterial::default(),
                        received: Vec::new(),
                        consumed: 0,
                    }
                } else {
                    pool_phase(&field, cfg, &mut hop, KeygenScheme::MdsExpArq, &forwarded_in)?
                }
            }
        };
        if !phase.key.agrees() {
            return Err(SimError::Invariant(format!("hop {j}: sender and receiver keys differ")));
        }
        let acked = hop.acks();
        let extracted = phase.key.len();

        let mut forwarded = RandomPool::new(j);
        let mut hop_key = phase.key;
        let mut forwarded_rows = Vec::new();
        match mode {
            LineMode::OneEve => {
                if phase.received.len() > acked {
                    return Err(SimError::Invariant(format!(
                        "hop {j}: forwarding {} packets after {acked} ACKs",
                        phase.received.len()
                    )));
                }
                for p in phase.received {
                    forwarded.push(p, Provenance::Forwarded);
                }
            }
            LineMode::AllEves => {
                let k = rates.value_or_zero(&format!("k_{j}"));
                let d = rates.value_or_zero(&format!("d_{j}"));
                if j < net.len() && k > 0.0 && d > 0.0 {
                    let share = ((extracted as f64 * d / k) + 1e-9).floor() as usize;
                    let share = share.min(extracted);
                    let rest = hop_key.split_off(share);
                    // node j's copies: received payloads with the shared maps
                    for (s, r) in hop_key.sender.iter().zip(&hop_key.receiver) {
                        let p = Packet {
                            payload: r.clone(),
                            combo: s.combo.clone(),
                        };
                        forwarded.push(p, Provenance::Forwarded);
                    }
                    forwarded_rows = (0..share).collect();
                    hop_key = rest;
                }
            }
        }
        let hop_key_rows: Vec<usize> = (forwarded_rows.len()..extracted).collect();

        hop.set_horizon(n);
        let mp = message_phase(&field, cfg, &mut hop, hop_key.clone(), &current)?;
        let mut report = SimReport {
            seed: cfg.seed,
            slots: n,
            slots_used: hop.slots_used(),
            key_packets: hop_key.len(),
            forwarded_packets: forwarded.len(),
            randomness_consumed: phase.consumed,
            messages_delivered: mp.delivered.len(),
            key_consumed: mp.pads_used,
            key_recycled: mp.recycled,
            ..SimReport::default()
        };
        if mp.delivered.len() < current.len() {
            report.advisories.push(format!(
                "hop {j}: delivered {} of {} messages ({})",
                mp.delivered.len(),
                current.len(),
                if mp.key_exhausted { "key exhausted" } else { "slots exhausted" }
            ));
        }
        report.finish_rates();
        current = mp
            .delivered
            .into_iter()
            .map(|(i, payload)| {
                let combo = messages[i].combo.clone();
                (i, Packet { payload, combo })
            })
            .collect();
        incoming = forwarded.packets.clone();
        hops.push(HopOutcome {
            hop: j,
            log: hop.into_log(),
            hop_key,
            forwarded,
            hop_key_rows,
            forwarded_rows,
            report,
        });
    }

    let delivered: Vec<(usize, Vec<Symbol>)> = current.into_iter().map(|(i, p)| (i, p.payload)).collect();
    if let Some((i, _)) = delivered.iter().find(|(i, p)| p != &messages[*i].payload) {
        return Err(SimError::Invariant(format!("message {i} arrived altered")));
    }
    let report = LineReport {
        seed: cfg.seed,
        mode,
        slots_per_hop: n,
        lp_rate: m,
        messages_sent: total,
        messages_delivered: delivered.len(),
        secure_message_rate: delivered.len() as f64 / n.max(1) as f64,
        hops: hops.iter().map(|h| h.report.clone()).collect(),
    };
    Ok(LineOutcome {
        report,
        hops,
        messages,
        delivered,
        unknowns,
    })
}
