//! Relays messages over three hops at the LP rates, in both Eve models.

use linesec::capacity::{ChannelParams, Randomness};
use linesec::lp::{build_all_eves, build_one_eve, solve, LineNetwork};
use linesec::sim::{run_line, LineMode, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = LineNetwork::uniform(3, ChannelParams::new(0.5, 0.5)?, Randomness::none(), 1)?;
    let cfg = SimConfig {
        seed: 11,
        eps_pa: 0.0,
        track_linear_maps: false,
        ..SimConfig::default()
    };
    for (mode, model) in [(LineMode::OneEve, build_one_eve(&net)?), (LineMode::AllEves, build_all_eves(&net)?)] {
        let rates = solve(&model)?;
        let out = run_line(&net, mode, &rates, 100_000, &cfg)?;
        let r = &out.report;
        println!(
            "{mode}: {} of {} messages delivered, rate {:.5} vs LP {:.5}",
            r.messages_delivered, r.messages_sent, r.secure_message_rate, r.lp_rate
        );
        for h in &r.hops {
            println!("  key {:.4}  forwarded {:.4}  advisories {:?}", h.key_rate, h.forwarded_rate, h.advisories);
        }
    }
    Ok(())
}
