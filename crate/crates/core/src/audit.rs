//! Exact finite-n secrecy checks on simulator logs.
//!
//! Every payload is a known linear map of uniform unknowns, so Eve's view
//! is independent of a set of secret rows iff those rows stay linearly
//! independent of her observations: the rank deficit
//! `rows - (rank[A; B] - rank A)` is zero.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{ChannelParams, KeygenScheme, Randomness};
use crate::combin::Combinations;
use crate::gf::{Field, Symbol};
use crate::sim::{run_keygen, Combo, KeyMaterial, LineMode, LineOutcome, Packet, SimConfig, SimError, TransmissionLog};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("{0} carries no linear map; rerun with track_linear_maps")]
    NotLinear(String),
    #[error("invalid placement: {0}")]
    Placement(String),
    #[error("at least 100 trials are required, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Eavesdropped hops, 1-based and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvePlacement(Vec<usize>);

impl EvePlacement {
    pub fn new(mut hops: Vec<usize>, n_hops: usize) -> Result<Self, AuditError> {
        hops.sort_unstable();
        hops.dedup();
        if hops.is_empty() {
            return Err(AuditError::Placement("no eavesdropped hop".into()));
        }
        if let Some(bad) = hops.iter().find(|&&j| j == 0 || j > n_hops) {
            return Err(AuditError::Placement(format!("hop {bad} outside 1..={n_hops}")));
        }
        Ok(Self(hops))
    }

    pub fn hops(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, hop: usize) -> bool {
        self.0.binary_search(&hop).is_ok()
    }

    /// Every size-`v` subset of 1..=n, lexicographic.
    pub fn all_of_size(n: usize, v: usize) -> Vec<Self> {
        Combinations::new(n, v)
            .map(|c| Self(c.into_iter().map(|i| i + 1).collect()))
            .collect()
    }

    /// Placements a line run must be secure against: every single hop for
    /// one_eve, and additionally the full set for all_eves.
    pub fn required(mode: LineMode, n: usize) -> Vec<Self> {
        let mut out = Self::all_of_size(n, 1);
        if mode == LineMode::AllEves && n > 1 {
            out.push(Self((1..=n).collect()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditVerdict {
    /// 0 means Eve learns nothing about the audited rows.
    pub secrecy_rank_deficit: usize,
    pub uniformity_ok: bool,
    pub agreement_ok: bool,
    pub placement: EvePlacement,
    pub secret_rows: usize,
    pub eve_rank: usize,
}

impl AuditVerdict {
    pub fn is_perfect(&self) -> bool {
        self.secrecy_rank_deficit == 0 && self.uniformity_ok && self.agreement_ok
    }
}

/// Incremental row echelon form over sparse rows. Rows are reduced in a
/// dense scratch vector so each step costs the pivot's length, not the
/// row's.
struct Eliminator<'a> {
    field: &'a Field,
    pivots: Vec<Option<Combo>>,
    rank: usize,
    acc: Vec<Symbol>,
    queued: Vec<bool>,
    heap: BinaryHeap<Reverse<u32>>,
}

impl<'a> Eliminator<'a> {
    fn new(field: &'a Field) -> Self {
        Self {
            field,
            pivots: Vec::new(),
            rank: 0,
            acc: Vec::new(),
            queued: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn rank(&self) -> usize {
        self.rank
    }

    fn grow(&mut self, id: u32) {
        let need = id as usize + 1;
        if self.acc.len() < need {
            self.acc.resize(need, 0);
            self.queued.resize(need, false);
            self.pivots.resize(need, None);
        }
    }

    fn push(&mut self, id: u32) {
        if !self.queued[id as usize] {
            self.queued[id as usize] = true;
            self.heap.push(Reverse(id));
        }
    }

    /// Adds a row; true when it was independent of the rows so far.
    fn insert(&mut self, row: &[(u32, Symbol)]) -> bool {
        let f = self.field;
        for &(id, c) in row {
            self.grow(id);
            self.acc[id as usize] = f.add(self.acc[id as usize], c);
            self.push(id);
        }
        while let Some(Reverse(lead)) = self.heap.pop() {
            let l = lead as usize;
            self.queued[l] = false;
            let c = self.acc[l];
            if c == 0 {
                continue;
            }
            match self.pivots[l].take() {
                Some(p) => {
                    // pivots are monic; characteristic 2: subtracting is adding
                    for &(id, a) in &p {
                        let i = id as usize;
                        self.acc[i] = f.add(self.acc[i], f.mul(c, a));
                        if id != lead {
                            self.push(id);
                        }
                    }
                    debug_assert_eq!(self.acc[l], 0);
                    self.pivots[l] = Some(p);
                }
                None => {
                    let inv = f.inv(c).expect("lead coefficient is nonzero");
                    let mut rest: Vec<u32> = std::iter::once(lead).chain(self.heap.drain().map(|Reverse(i)| i)).collect();
                    rest.sort_unstable();
                    let mut out = Combo::with_capacity(rest.len());
                    for id in rest {
                        let i = id as usize;
                        self.queued[i] = false;
                        let v = std::mem::take(&mut self.acc[i]);
                        if v != 0 {
                            out.push((id, f.mul(v, inv)));
                        }
                    }
                    self.pivots[l] = Some(out);
                    self.rank += 1;
                    return true;
                }
            }
        }
        false
    }
}

/// Rank deficit of `secret` rows against `observed` rows, plus the two ranks.
pub fn rank_deficit(field: &Field, observed: &[&[(u32, Symbol)]], secret: &[&[(u32, Symbol)]]) -> (usize, usize, usize) {
    let mut e = Eliminator::new(field);
    for row in observed {
        e.insert(row);
    }
    let eve_rank = e.rank();
    let fresh = secret.iter().filter(|row| e.insert(row)).count();
    let mut alone = Eliminator::new(field);
    for row in secret {
        alone.insert(row);
    }
    (secret.len() - fresh, alone.rank(), eve_rank)
}

fn observed_rows<'l>(logs: &[&'l TransmissionLog], placement: &EvePlacement) -> Result<Vec<&'l [(u32, Symbol)]>, AuditError> {
    let mut rows = Vec::new();
    for log in logs {
        for r in log.records() {
            if r.eve_got && placement.contains(r.hop) {
                let combo = r
                    .combo
                    .as_deref()
                    .ok_or_else(|| AuditError::NotLinear(format!("hop {} slot {}", r.hop, r.slot)))?;
                rows.push(combo);
            }
        }
    }
    Ok(rows)
}

fn packet_rows<'p>(packets: &'p [Packet], what: &str) -> Result<Vec<&'p [(u32, Symbol)]>, AuditError> {
    packets
        .iter()
        .enumerate()
        .map(|(i, p)| p.combo.as_deref().ok_or_else(|| AuditError::NotLinear(format!("{what} {i}"))))
        .collect()
}

fn verdict(field: &Field, observed: &[&[(u32, Symbol)]], secret: &[&[(u32, Symbol)]], placement: &EvePlacement, agreement_ok: bool) -> AuditVerdict {
    let (deficit, secret_rank, eve_rank) = rank_deficit(field, observed, secret);
    AuditVerdict {
        secrecy_rank_deficit: deficit,
        uniformity_ok: secret_rank == secret.len(),
        agreement_ok,
        placement: placement.clone(),
        secret_rows: secret.len(),
        eve_rank,
    }
}

/// Secrecy, uniformity and agreement of `key` against Eve's view of `log`
/// on the hops in `placement`.
pub fn audit_key(field: &Field, log: &TransmissionLog, key: &KeyMaterial, placement: &EvePlacement) -> Result<AuditVerdict, AuditError> {
    let observed = observed_rows(&[log], placement)?;
    let secret = packet_rows(&key.sender, "key row")?;
    Ok(verdict(field, &observed, &secret, placement, key.agrees()))
}

/// Secrecy of `messages` against Eve's view of all `logs` on the hops in
/// `placement`; agreement means every delivered message arrived intact.
pub fn audit_message(
    field: &Field,
    logs: &[&TransmissionLog],
    placement: &EvePlacement,
    messages: &[Packet],
    delivered: &[(usize, Vec<Symbol>)],
) -> Result<AuditVerdict, AuditError> {
    let observed = observed_rows(logs, placement)?;
    let secret = packet_rows(messages, "message")?;
    let agreement_ok = delivered
        .iter()
        .all(|(i, p)| messages.get(*i).is_some_and(|m| &m.payload == p));
    Ok(verdict(field, &observed, &secret, placement, agreement_ok))
}

/// Message audits of a line run for each placement.
pub fn audit_line(field: &Field, outcome: &LineOutcome, placements: &[EvePlacement]) -> Result<Vec<AuditVerdict>, AuditError> {
    let logs: Vec<&TransmissionLog> = outcome.hops.iter().map(|h| &h.log).collect();
    let keys_agree = outcome.hops.iter().all(|h| h.hop_key.agrees());
    placements
        .iter()
        .map(|p| {
            if p.hops().iter().any(|&j| j > outcome.hops.len()) {
                return Err(AuditError::Placement(format!("{:?} exceeds {} hops", p.hops(), outcome.hops.len())));
            }
            let mut v = audit_message(field, &logs, p, &outcome.messages, &outcome.delivered)?;
            v.agreement_ok &= keys_agree;
            Ok(v)
        })
        .collect()
}

/// Fraction of failing trials with a 95% Wilson score interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub trials: usize,
    pub failures: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(failures: usize, trials: usize) -> FailureEstimate {
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = if trials == 0 { 0.0 } else { failures as f64 / n };
    let (lower, upper) = if trials == 0 {
        (0.0, 1.0)
    } else {
        let denom = 1.0 + Z * Z / n;
        let center = (p + Z * Z / (2.0 * n)) / denom;
        let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
        // exact at the ends, where the formula only rounds to 0 or 1
        let lower = if failures == 0 { 0.0 } else { (center - half).max(0.0) };
        let upper = if failures == trials { 1.0 } else { (center + half).min(1.0) };
        (lower, upper)
    };
    FailureEstimate {
        trials,
        failures,
        estimate: p,
        lower,
        upper,
    }
}

/// Runs `trials` seeded key-generation runs (seeds `seed`, `seed + 1`, ...)
/// and counts those whose key is not perfectly secret, uniform and shared.
pub fn failure_probability(
    scheme: KeygenScheme,
    p: &ChannelParams,
    d: Randomness,
    n: u64,
    eps_pa: f64,
    trials: usize,
    seed: u64,
) -> Result<FailureEstimate, AuditError> {
    if trials < 100 {
        return Err(AuditError::TooFewTrials(trials));
    }
    let placement = EvePlacement::new(vec![1], 1)?;
    let mut failures = 0;
    for t in 0..trials {
        let cfg = SimConfig {
            seed: seed.wrapping_add(t as u64),
            eps_pa,
            track_linear_maps: true,
            payload_symbols: 1,
            ..SimConfig::default()
        };
        let field = cfg.field()?;
        let out = run_keygen(scheme, p, d, n, &cfg)?;
        if !audit_key(&field, &out.log, &out.key, &placement)?.is_perfect() {
            failures += 1;
        }
    }
    Ok(wilson_interval(failures, trials))
}
