use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::channel::{stream_rng, Hop, Stream};
use super::log::{Phase, TransmissionLog};
use super::packet::{Packet, UnknownKind, Unknowns};
use super::{KeyMaterial, RowBudget, SimConfig, SimError, SimReport};
use crate::capacity::ChannelParams;
use crate::gf::{Field, Symbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageOutcome {
    /// (message index, payload decrypted by the receiver).
    pub delivered: Vec<(usize, Vec<Symbol>)>,
    /// Unused and recycled key rows.
    pub remaining_key: KeyMaterial,
    pub log: TransmissionLog,
    pub report: SimReport,
}

pub(crate) struct MessagePhase {
    pub delivered: Vec<(usize, Vec<Symbol>)>,
    pub remaining_key: KeyMaterial,
    pub pads_used: usize,
    pub recycled: usize,
    pub key_exhausted: bool,
}

/// `count` uniform messages registered as unknowns.
pub fn draw_messages(field: &Field, unknowns: &mut Unknowns, count: usize, cfg: &SimConfig) -> Vec<Packet> {
    let mut rng = stream_rng(cfg.seed, 0, Stream::MessageContent);
    (0..count)
        .map(|index| {
            unknowns.fresh(
                field,
                &mut rng,
                cfg.payload_symbols,
                UnknownKind::Message { index },
                cfg.track_linear_maps,
            )
        })
        .collect()
}

type Pad = (Packet, Vec<Symbol>);

struct Recycler {
    budget: RowBudget,
    batch: Vec<Pad>,
    batches: usize,
    recycled: usize,
}

impl Recycler {
    /// Privacy-amplifies the pads of the current batch and appends the
    /// result to `queue`.
    fn flush(
        &mut self,
        field: &Field,
        hop: usize,
        queue: &mut VecDeque<Pad>,
        records: &mut KeyMaterial,
    ) -> Result<(), SimError> {
        if self.batch.is_empty() {
            return Ok(());
        }
        let rows = self.budget.next(self.batch.len());
        let sender: Vec<&Packet> = self.batch.iter().map(|(s, _)| s).collect();
        let receiver: Vec<&[Symbol]> = self.batch.iter().map(|(_, r)| r.as_slice()).collect();
        let mut fresh = KeyMaterial::default();
        fresh.extract(field, format!("hop {hop} recycle batch {}", self.batches), &sender, &receiver, rows)?;
        self.batches += 1;
        self.recycled += fresh.len();
        queue.extend(fresh.sender.into_iter().zip(fresh.receiver));
        records.extractions.extend(fresh.extractions);
        self.batch.clear();
        Ok(())
    }
}

/// One-time pads each message, retransmits the identical ciphertext until
/// ACK, and recycles delivered pads in batches: a pad is secret unless Eve
/// caught one of its attempts, which happens for a fraction
/// 1 - delta_e (1 - delta) / (1 - delta delta_e) of them.
pub(crate) fn message_phase(
    field: &Field,
    cfg: &SimConfig,
    hop: &mut Hop,
    key: KeyMaterial,
    messages: &[(usize, Packet)],
) -> Result<MessagePhase, SimError> {
    let hop_index = hop.hop;
    let mut records = KeyMaterial {
        extractions: key.extractions,
        ..KeyMaterial::default()
    };
    let mut queue: VecDeque<Pad> = key.sender.into_iter().zip(key.receiver).collect();
    let mut recycler = Recycler {
        budget: RowBudget::new((1.0 - cfg.eps_pa) * hop.params.secret_fraction()),
        batch: Vec::new(),
        batches: 0,
        recycled: 0,
    };
    let mut delivered = Vec::new();
    let mut pads_used = 0;
    let mut key_exhausted = false;
    for (index, message) in messages {
        if hop.remaining() == 0 {
            break;
        }
        if queue.is_empty() {
            // out of key: amplify the pads delivered so far without waiting
            // for a full batch
            recycler.flush(field, hop_index, &mut queue, &mut records)?;
        }
        let Some((pad_s, pad_r)) = queue.pop_front() else {
            key_exhausted = true;
            break;
        };
        pads_used += 1;
        let cipher = message.plus(field, &pad_s);
        let mut got = false;
        while let Some(o) = hop.transmit(Phase::Message, &cipher) {
            if o.receiver_got {
                got = true;
                break;
            }
        }
        if !got {
            // horizon hit mid-message; the pad is burnt
            break;
        }
        let mut plain = cipher.payload.clone();
        field.mul_add_into(&mut plain, &pad_r, 1);
        if plain != message.payload {
            return Err(SimError::Invariant(format!(
                "hop {hop_index}: message {index} decrypts to a different payload"
            )));
        }
        delivered.push((*index, plain));
        recycler.batch.push((pad_s, pad_r));
        if recycler.batch.len() == cfg.chunk_columns {
            recycler.flush(field, hop_index, &mut queue, &mut records)?;
        }
    }
    recycler.flush(field, hop_index, &mut queue, &mut records)?;
    for (s, r) in queue {
        records.sender.push(s);
        records.receiver.push(r);
    }
    Ok(MessagePhase {
        delivered,
        remaining_key: records,
        pads_used,
        recycled: recycler.recycled,
        key_exhausted,
    })
}

/// Sends `messages` over one hop under `key`, with at most `slots` slots
/// (unbounded when `None`).
pub fn run_message_phase(
    key: KeyMaterial,
    messages: &[Packet],
    p: &ChannelParams,
    slots: Option<u64>,
    cfg: &SimConfig,
) -> Result<MessageOutcome, SimError> {
    cfg.validate()?;
    p.validate()?;
    if p.delta >= 1.0 && slots.is_none() {
        return Err(SimError::Refused("delta = 1 never delivers; give a slot limit".into()));
    }
    let field = cfg.field()?;
    let mut hop = Hop::new(1, *p, cfg.seed, slots.unwrap_or(u64::MAX));
    let indexed: Vec<(usize, Packet)> = messages.iter().cloned().enumerate().collect();
    let phase = message_phase(&field, cfg, &mut hop, key, &indexed)?;
    let mut report = SimReport {
        seed: cfg.seed,
        slots: slots.unwrap_or(hop.slots_used()),
        slots_used: hop.slots_used(),
        key_packets: phase.remaining_key.len(),
        messages_delivered: phase.delivered.len(),
        key_consumed: phase.pads_used,
        key_recycled: phase.recycled,
        ..SimReport::default()
    };
    if phase.delivered.len() < messages.len() {
        report.advisories.push(format!(
            "partial delivery: {} of {} messages ({})",
            phase.delivered.len(),
            messages.len(),
            if phase.key_exhausted { "key exhausted" } else { "slot limit reached" }
        ));
    }
    report.finish_rates();
    Ok(MessageOutcome {
        delivered: phase.delivered,
        remaining_key: phase.remaining_key,
        log: hop.into_log(),
        report,
    })
}
