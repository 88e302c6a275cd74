//! Forwarded randomness of MDS expansion alone and of MDS expansion with
//! ARQ as the source rate grows, as CSV on stdout.

use linesec::capacity::{scheme_rates, ChannelParams, KeygenScheme};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChannelParams::new(0.5, 0.5)?;
    println!("d,mds_exp_key,mds_exp_fwd,mds_exp_arq_key,mds_exp_arq_fwd");
    for i in 0..=24 {
        let d = i as f64 * 0.05;
        let a = scheme_rates(KeygenScheme::MdsExp, &p, d);
        let b = scheme_rates(KeygenScheme::MdsExpArq, &p, d);
        println!("{d:.2},{:.6},{:.6},{:.6},{:.6}", a.key_rate, a.forwarded_rate, b.key_rate, b.forwarded_rate);
    }
    Ok(())
}
