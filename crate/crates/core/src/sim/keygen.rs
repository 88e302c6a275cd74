use serde::{Deserialize, Serialize};

use super::channel::{stream_rng, Hop, Stream};
use super::log::{Phase, TransmissionLog};
use super::packet::{apply_matrix, Packet, UnknownKind, Unknowns};
use super::{KeyMaterial, Provenance, RandomPool, RowBudget, SimConfig, SimError, SimReport};
use crate::capacity::{timeshare_plan, ChannelParams, KeygenScheme, Randomness, Regime};
use crate::gf::{Field, Symbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeygenOutcome {
    pub key: KeyMaterial,
    /// Random packets the receiver got; what it can forward.
    pub receiver_pool: RandomPool,
    pub log: TransmissionLog,
    pub report: SimReport,
    pub unknowns: Unknowns,
}

/// Result of one key-generation phase on a hop.
pub(crate) struct KeyPhase {
    pub key: KeyMaterial,
    pub received: Vec<Packet>,
    pub consumed: usize,
}

/// `caps[c]` bounds the rows of chunk c (the pool packets behind it).
fn extract_chunks(
    field: &Field,
    key: &mut KeyMaterial,
    label: &str,
    chunks: &[Vec<Packet>],
    caps: Option<&[usize]>,
    fraction: f64,
) -> Result<(), SimError> {
    let mut budget = RowBudget::new(fraction);
    for (c, chunk) in chunks.iter().enumerate() {
        let mut rows = budget.next(chunk.len());
        if let Some(caps) = caps {
            rows = rows.min(caps[c]);
        }
        let sender: Vec<&Packet> = chunk.iter().collect();
        // the receiver holds bit-identical copies of what it got
        let receiver: Vec<&[Symbol]> = chunk.iter().map(|p| p.payload.as_slice()).collect();
        key.extract(field, format!("{label} chunk {c}"), &sender, &receiver, rows)?;
    }
    Ok(())
}

fn chunked(packets: &[Packet], size: usize) -> Vec<Vec<Packet>> {
    packets.chunks(size).map(<[Packet]>::to_vec).collect()
}

/// A different random packet each slot until the source runs dry or the
/// horizon is reached; keys are extracted from what the receiver got.
pub(crate) fn kg_phase(
    field: &Field,
    cfg: &SimConfig,
    hop: &mut Hop,
    mut next_packet: impl FnMut() -> Option<Packet>,
) -> Result<KeyPhase, SimError> {
    let mut received = Vec::new();
    let mut consumed = 0;
    while hop.remaining() > 0 {
        let Some(p) = next_packet() else { break };
        consumed += 1;
        let outcome = hop.transmit(Phase::Keygen, &p).expect("slot available");
        if outcome.receiver_got {
            received.push(p);
        }
    }
    let mut key = KeyMaterial::default();
    let fraction = (1.0 - cfg.eps_pa) * hop.params.delta_e;
    extract_chunks(
        field,
        &mut key,
        &format!("hop {} KG", hop.hop),
        &chunked(&received, cfg.chunk_columns),
        None,
        fraction,
    )?;
    Ok(KeyPhase {
        key,
        received,
        consumed,
    })
}

/// Each packet repeated until acknowledged.
fn arq_send(hop: &mut Hop, pool: &[Packet]) -> Vec<Packet> {
    let mut delivered = Vec::new();
    'packets: for p in pool {
        loop {
            match hop.transmit(Phase::Keygen, p) {
                None => break 'packets,
                Some(o) if o.receiver_got => {
                    delivered.push(p.clone());
                    break;
                }
                Some(_) => {}
            }
        }
    }
    delivered
}

/// Expands the pool by 1 / (1 - delta delta_e) with chunked MDS matrices
/// and sends each expanded packet once. Returns the received packets and
/// the pool packets behind each chunk.
fn mds_send(field: &Field, cfg: &SimConfig, hop: &mut Hop, pool: &[Packet]) -> Result<(Vec<Vec<Packet>>, Vec<usize>), SimError> {
    let r = 1.0 - hop.params.delta * hop.params.delta_e;
    let slots = hop.remaining() as usize;
    let (used, expanded) = if r > 0.0 {
        let used = pool.len().min((slots as f64 * r + 1e-9).floor() as usize);
        let expanded = ((used as f64 / r + 1e-9).floor() as usize).clamp(used, slots.max(used));
        (used, expanded)
    } else {
        let used = pool.len().min(slots);
        (used, used)
    };
    if used == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let chunks = expanded.div_ceil(cfg.chunk_columns);
    let mut out = Vec::with_capacity(chunks);
    let mut inputs_per_chunk = Vec::with_capacity(chunks);
    for c in 0..chunks {
        let (i0, i1) = (used * c / chunks, used * (c + 1) / chunks);
        let (e0, e1) = (expanded * c / chunks, expanded * (c + 1) / chunks);
        // expanded packet j is sum_i G[i][j] pool_i
        let g = field.make_mds(i1 - i0, e1 - e0)?.transpose();
        let inputs: Vec<&Packet> = pool[i0..i1].iter().collect();
        let mut received = Vec::new();
        for p in apply_matrix(field, &g, &inputs) {
            match hop.transmit(Phase::Keygen, &p) {
                None => break,
                Some(o) if o.receiver_got => received.push(p),
                Some(_) => {}
            }
        }
        out.push(received);
        inputs_per_chunk.push(i1 - i0);
    }
    Ok((out, inputs_per_chunk))
}

/// Key generation from a finite pool of random packets known to the sender.
pub(crate) fn pool_phase(
    field: &Field,
    cfg: &SimConfig,
    hop: &mut Hop,
    scheme: KeygenScheme,
    pool: &[Packet],
) -> Result<KeyPhase, SimError> {
    let p = hop.params;
    let label = format!("hop {} {}", hop.hop, scheme);
    let arq_fraction = (1.0 - cfg.eps_pa) * p.secret_fraction();
    let mds_fraction = (1.0 - cfg.eps_pa) * p.delta_e;
    let mut key = KeyMaterial::default();
    let mut received = Vec::new();
    let mut consumed = 0;

    let run_mds = |hop: &mut Hop, part: &[Packet], key: &mut KeyMaterial, received: &mut Vec<Packet>| {
        let (chunks, inputs) = mds_send(field, cfg, hop, part)?;
        extract_chunks(field, key, &format!("{label} MDS"), &chunks, Some(&inputs), mds_fraction)?;
        received.extend(chunks.into_iter().flatten());
        Ok::<usize, SimError>(inputs.iter().sum())
    };
    let run_arq = |hop: &mut Hop, part: &[Packet], key: &mut KeyMaterial, received: &mut Vec<Packet>| {
        let delivered = arq_send(hop, part);
        extract_chunks(
            field,
            key,
            &format!("{label} ARQ"),
            &chunked(&delivered, cfg.chunk_columns),
            None,
            arq_fraction,
        )?;
        let n = delivered.len();
        received.extend(delivered);
        Ok::<usize, SimError>(n)
    };

    match scheme {
        KeygenScheme::Kg => {
            let mut it = pool.iter().cloned();
            return kg_phase(field, cfg, hop, || it.next());
        }
        KeygenScheme::Arq => consumed += run_arq(hop, pool, &mut key, &mut received)?,
        KeygenScheme::MdsExp => consumed += run_mds(hop, pool, &mut key, &mut received)?,
        KeygenScheme::MdsExpArq => {
            let rate = pool.len() as f64 / hop.remaining().max(1) as f64;
            let plan = timeshare_plan(&p, rate);
            let split = match plan.regime {
                Regime::MdsOnly => pool.len(),
                Regime::ArqOnly => 0,
                Regime::Mixed => (plan.alpha * pool.len() as f64).floor() as usize,
            };
            consumed += run_mds(hop, &pool[..split], &mut key, &mut received)?;
            if plan.regime != Regime::MdsOnly {
                consumed += run_arq(hop, &pool[split..], &mut key, &mut received)?;
            }
        }
    }
    Ok(KeyPhase {
        key,
        received,
        consumed,
    })
}

/// Runs one key-generation scheme for `n` slots on a single hop whose
/// source has randomness rate `d` (packets per slot).
pub fn run_keygen(
    scheme: KeygenScheme,
    p: &ChannelParams,
    d: Randomness,
    n: u64,
    cfg: &SimConfig,
) -> Result<KeygenOutcome, SimError> {
    cfg.validate()?;
    p.validate()?;
    d.validate()?;
    let field = cfg.field()?;
    let mut unknowns = Unknowns::new();
    let mut rng = stream_rng(cfg.seed, 1, Stream::Randomness);
    let mut hop = Hop::new(1, *p, cfg.seed, n);
    let budget = match d {
        Randomness::Limited(rate) => (n as f64 * rate + 1e-9).floor() as usize,
        Randomness::Unlimited => n as usize,
    };
    if budget == 0 {
        return Err(SimError::NoRandomness { slots: n, rate: d.rate() });
    }
    let kind = UnknownKind::Random { node: 0 };
    let (len, track) = (cfg.payload_symbols, cfg.track_linear_maps);
    let phase = if scheme == KeygenScheme::Kg {
        let mut left = budget;
        kg_phase(&field, cfg, &mut hop, || {
            (left > 0).then(|| {
                left -= 1;
                unknowns.fresh(&field, &mut rng, len, kind, track)
            })
        })?
    } else {
        let pool: Vec<Packet> = (0..budget)
            .map(|_| unknowns.fresh(&field, &mut rng, len, kind, track))
            .collect();
        pool_phase(&field, cfg, &mut hop, scheme, &pool)?
    };

    let mut report = SimReport {
        seed: cfg.seed,
        slots: n,
        slots_used: hop.slots_used(),
        key_packets: phase.key.len(),
        forwarded_packets: phase.received.len(),
        randomness_consumed: phase.consumed,
        ..SimReport::default()
    };
    if scheme == KeygenScheme::Kg && d.rate() < 1.0 {
        report
            .advisories
            .push(format!("KG needs one fresh packet per slot; D = {} < 1 leaves slots idle", d.rate()));
    }
    if phase.key.is_empty() {
        report.advisories.push("extraction size below one packet: empty key".into());
    }
    report.finish_rates();
    if !phase.key.agrees() {
        return Err(SimError::Invariant("sender and receiver keys differ".into()));
    }
    let mut receiver_pool = RandomPool::new(1);
    for p in phase.received {
        receiver_pool.push(p, Provenance::Forwarded);
    }
    Ok(KeygenOutcome {
        key: phase.key,
        receiver_pool,
        log: hop.into_log(),
        report,
        unknowns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::scheme_rates;

    fn half() -> ChannelParams {
        ChannelParams::new(0.5, 0.5).unwrap()
    }

    fn rate_cfg(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            eps_pa: 0.0,
            track_linear_maps: false,
            payload_symbols: 1,
            ..SimConfig::default()
        }
    }

    #[test]
    fn eve_omniscient_gives_empty_key() {
        let p = ChannelParams::new(0.5, 0.0).unwrap();
        let out = run_keygen(KeygenScheme::Arq, &p, Randomness::Limited(0.5), 1000, &rate_cfg(1)).unwrap();
        assert!(out.key.is_empty());
        assert!(!out.report.advisories.is_empty());
    }

    #[test]
    fn no_randomness_is_an_error() {
        let r = run_keygen(KeygenScheme::Arq, &half(), Randomness::Limited(0.0001), 100, &rate_cfg(1));
        assert!(matches!(r, Err(SimError::NoRandomness { .. })));
    }

    #[test]
    fn rates_near_closed_forms() {
        for scheme in [KeygenScheme::Arq, KeygenScheme::MdsExp, KeygenScheme::MdsExpArq] {
            for d in [0.3, 0.6, 0.9] {
                let out = run_keygen(scheme, &half(), Randomness::Limited(d), 20_000, &rate_cfg(3)).unwrap();
                let want = scheme_rates(scheme, &half(), d);
                assert!((out.report.key_rate / want.key_rate - 1.0).abs() < 0.05, "{scheme} {d}");
                assert!((out.report.forwarded_rate / want.forwarded_rate - 1.0).abs() < 0.05, "{scheme} {d}");
                assert!(out.key.agrees());
            }
        }
    }

    #[test]
    fn kg_with_unlimited_source() {
        let out = run_keygen(KeygenScheme::Kg, &half(), Randomness::Unlimited, 20_000, &rate_cfg(4)).unwrap();
        assert!((out.report.key_rate - 0.25).abs() < 0.01);
        assert_eq!(out.report.slots_used, 20_000);
    }

    #[test]
    fn feedback_is_projection_and_forwarded_were_acked() {
        let out = run_keygen(KeygenScheme::Arq, &half(), Randomness::Limited(0.3), 500, &SimConfig::with_seed(5)).unwrap();
        let acked = out.log.feedback().iter().filter(|&&b| b).count();
        assert!(out.receiver_pool.len() <= acked);
        assert!(out.log.is_linear());
    }
}
