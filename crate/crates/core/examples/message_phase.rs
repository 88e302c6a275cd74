//! One-time-pad message delivery with pad recycling over a single hop.

use linesec::capacity::{ChannelParams, KeygenScheme, Randomness};
use linesec::sim::{draw_messages, run_keygen, run_message_phase, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig {
        seed: 3,
        eps_pa: 0.0,
        track_linear_maps: false,
        ..SimConfig::default()
    };
    for (delta, delta_e) in [(0.5, 0.5), (0.2, 0.8), (0.5, 1.0)] {
        let p = ChannelParams::new(delta, delta_e)?;
        let kg = run_keygen(KeygenScheme::Kg, &p, Randomness::Unlimited, 40_000, &cfg)?;
        let mut unknowns = kg.unknowns.clone();
        let msgs = draw_messages(&cfg.field()?, &mut unknowns, 10_000, &cfg);
        let out = run_message_phase(kg.key, &msgs, &p, None, &cfg)?;
        let r = &out.report;
        println!(
            "delta={delta} delta_E={delta_e}: delivered {} in {} slots, pads {} recycled {} net/message {:.4} (expected {:.4})",
            r.messages_delivered,
            r.slots_used,
            r.key_consumed,
            r.key_recycled,
            r.key_consumed_per_message.unwrap_or(f64::NAN),
            p.key_cost_per_message()
        );
    }
    Ok(())
}
