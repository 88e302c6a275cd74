//! Monte-Carlo key generation with each scheme, next to the asymptotic rates.

use linesec::capacity::{scheme_rates, ChannelParams, KeygenScheme, Randomness};
use linesec::sim::{run_keygen, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChannelParams::new(0.5, 0.5)?;
    let n = 50_000;
    let cfg = SimConfig {
        seed: std::env::var("LINESEC_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(1),
        eps_pa: 0.0,
        track_linear_maps: false,
        ..SimConfig::default()
    };
    for d in [0.3, 0.6, 0.9] {
        for scheme in [KeygenScheme::Arq, KeygenScheme::MdsExp, KeygenScheme::MdsExpArq] {
            let out = run_keygen(scheme, &p, Randomness::Limited(d), n, &cfg)?;
            let want = scheme_rates(scheme, &p, d);
            println!(
                "D={d:.1} {scheme:<12} key {:.4} ({:.4})  forwarded {:.4} ({:.4})  agree={}",
                out.report.key_rate,
                want.key_rate,
                out.report.forwarded_rate,
                want.forwarded_rate,
                out.key.agrees()
            );
        }
    }
    Ok(())
}
