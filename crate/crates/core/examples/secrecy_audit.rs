//! Rank audits of seeded key-generation runs and of a relayed line run.

use linesec::audit::{audit_line, failure_probability, EvePlacement};
use linesec::capacity::{ChannelParams, KeygenScheme, Randomness};
use linesec::lp::{build_all_eves, build_one_eve, solve, LineNetwork};
use linesec::sim::{run_line, LineMode, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChannelParams::new(0.5, 0.5)?;
    for eps in [0.0, 0.05, 0.2] {
        for scheme in [KeygenScheme::Kg, KeygenScheme::Arq, KeygenScheme::MdsExp] {
            let est = failure_probability(scheme, &p, Randomness::Limited(0.6), 2000, eps, 100, 1)?;
            println!(
                "{scheme:<8} eps_pa={eps:<4} failures {}/{}  95% CI [{:.3}, {:.3}]",
                est.failures, est.trials, est.lower, est.upper
            );
        }
    }

    let net = LineNetwork::uniform(3, p, Randomness::none(), 1)?;
    for (mode, model) in [
        (LineMode::OneEve, build_one_eve(&net)?),
        (LineMode::AllEves, build_all_eves(&net)?),
    ] {
        let rates = solve(&model)?;
        let mut perfect = 0;
        let trials = 50;
        for seed in 0..trials {
            let cfg = SimConfig::with_seed(seed);
            let out = run_line(&net, mode, &rates, 2000, &cfg)?;
            let verdicts = audit_line(&cfg.field()?, &out, &EvePlacement::required(mode, net.len()))?;
            perfect += verdicts.iter().all(|v| v.is_perfect()) as usize;
        }
        println!("{mode}: {perfect}/{trials} line runs perfect on every required placement");
    }
    Ok(())
}
