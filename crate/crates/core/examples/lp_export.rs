//! Writes a rate LP in LP and MPS form and reads it back.

use linesec::capacity::{ChannelParams, Randomness};
use linesec::lp::{build_one_eve, export, parse, solve, ExportFormat, LineNetwork};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = LineNetwork::uniform(2, ChannelParams::new(0.3, 0.6)?, Randomness::Limited(0.4), 1)?;
    let model = build_one_eve(&net)?;
    for fmt in [ExportFormat::LpText, ExportFormat::Mps] {
        let text = export(&model, fmt);
        println!("{text}");
        let back = parse(&text, fmt)?;
        println!(
            "re-read {} constraints, optimum {:.6}\n",
            back.constraints().len(),
            solve(&back)?.objective_value
        );
    }
    Ok(())
}
