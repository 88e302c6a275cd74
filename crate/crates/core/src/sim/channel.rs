use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{Phase, SlotRecord, TransmissionLog};
use super::packet::Packet;
use crate::capacity::ChannelParams;

/// Independent RNG streams of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    KeygenChannel = 0,
    MessageChannel = 1,
    Randomness = 2,
    MessageContent = 3,
}

pub fn stream_rng(seed: u64, hop: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(hop as u64 * 8 + stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub receiver_got: bool,
    pub eve_got: bool,
    pub slot_index: u64,
}

/// Erasure broadcast channel of one hop with a slot clock and a horizon.
#[derive(Debug)]
pub struct Hop {
    pub hop: usize,
    pub params: ChannelParams,
    keygen_rng: ChaCha8Rng,
    message_rng: ChaCha8Rng,
    slot: u64,
    horizon: u64,
    log: TransmissionLog,
}

impl Hop {
    pub fn new(hop: usize, params: ChannelParams, seed: u64, horizon: u64) -> Self {
        Self {
            hop,
            params,
            keygen_rng: stream_rng(seed, hop, Stream::KeygenChannel),
            message_rng: stream_rng(seed, hop, Stream::MessageChannel),
            slot: 0,
            horizon,
            log: TransmissionLog::new(),
        }
    }

    pub fn slots_used(&self) -> u64 {
        self.slot
    }

    pub fn remaining(&self) -> u64 {
        self.horizon - self.slot
    }

    pub fn set_horizon(&mut self, horizon: u64) {
        self.horizon = horizon.max(self.slot);
    }

    /// Sends `packet` in the next slot; `None` once the horizon is reached.
    pub fn transmit(&mut self, phase: Phase, packet: &Packet) -> Option<SlotOutcome> {
        if self.slot >= self.horizon {
            return None;
        }
        let rng = match phase {
            Phase::Keygen => &mut self.keygen_rng,
            Phase::Message => &mut self.message_rng,
        };
        let receiver_got = rng.gen_bool(1.0 - self.params.delta);
        let eve_got = rng.gen_bool(1.0 - self.params.delta_e);
        let outcome = SlotOutcome {
            receiver_got,
            eve_got,
            slot_index: self.slot,
        };
        self.log.push(SlotRecord {
            hop: self.hop,
            slot: self.slot,
            phase,
            payload: packet.payload.clone(),
            receiver_got,
            eve_got,
            combo: packet.combo.clone(),
        });
        self.slot += 1;
        Some(outcome)
    }

    /// ACKed slots so far.
    pub fn acks(&self) -> usize {
        self.log.records().iter().filter(|r| r.receiver_got).count()
    }

    pub fn into_log(self) -> TransmissionLog {
        self.log
    }
}
