//! Rate LPs of a three-hop line whose relays have no randomness.

use linesec::capacity::{ChannelParams, Randomness};
use linesec::lp::{build_all_eves, build_one_eve, build_v_eves_outer, solve, LineNetwork};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hop = ChannelParams::new(0.5, 0.5)?;
    let mut net = LineNetwork::uniform(3, hop, Randomness::none(), 1)?;

    let one = solve(&build_one_eve(&net)?)?;
    println!("one Eve:  m = {:.6}", one.objective_value);
    for name in ["k_1", "k_2", "k_3", "d_1", "d_2"] {
        println!("  {name} = {:.6}", one.value_or_zero(name));
    }
    let all = solve(&build_all_eves(&net)?)?;
    println!("all Eves: m = {:.6} (3/110 = {:.6})", all.objective_value, 3.0 / 110.0);

    for v in 1..=3 {
        net.eve_cardinality = v;
        let outer = solve(&build_v_eves_outer(&net)?)?;
        println!("outer bound, V = {v}: {:.6}", outer.objective_value);
    }
    Ok(())
}
