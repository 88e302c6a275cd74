//! Closed-form single-hop capacities and the per-scheme rate tables.

use linesec::capacity::{
    csk_single_hop, csm_single_hop, efficiency_table, scheme_rates, timeshare_plan, ChannelParams, KeygenScheme,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChannelParams::new(0.5, 0.5)?;
    println!("per-transmission efficiency at delta = delta_E = 0.5");
    for row in efficiency_table(&p) {
        println!(
            "  {:<8} keys {:.4}  randomness {:.4}",
            row.scheme, row.keys_per_transmission, row.consumed_per_transmission
        );
    }
    println!("\n   D    C_SK    C_SM   MDS-exp/ARQ (key, fwd)   alpha");
    for d in [0.2, 0.4, 0.6, 0.8, 1.0, 1.2] {
        let both = scheme_rates(KeygenScheme::MdsExpArq, &p, d);
        let plan = timeshare_plan(&p, d);
        println!(
            "  {d:.1}  {:.4}  {:.4}   ({:.4}, {:.4})        {:.3} {:?}",
            csk_single_hop(&p, d),
            csm_single_hop(&p, d),
            both.key_rate,
            both.forwarded_rate,
            plan.alpha,
            plan.regime
        );
    }
    Ok(())
}
