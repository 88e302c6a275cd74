//! Exit criteria. Each test prints one `[n] ...: PASS|FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture --test-threads 1` to see
//! them all.

mod common;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::{random_hop, random_line, ref_mul, ref_rank, vertex_optimum};
use linesec::audit::{audit_line, rank_deficit, EvePlacement};
use linesec::capacity::{csk_single_hop, csm_single_hop, timeshare_plan, ChannelParams, KeygenScheme, Randomness, Regime};
use linesec::gf::{Field, FieldConfig, Symbol};
use linesec::lp::{
    build_all_eves, build_one_eve, build_single_hop_sk, build_single_hop_sm, build_v_eves_outer, solve, LineNetwork,
    LpModel, Relation, Sense,
};
use linesec::sim::{draw_messages, run_keygen, run_line, run_message_phase, LineMode, SimConfig};
use linesec::Combinations;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria run one at a time so their wall-clock limits mean something.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, title: &str, started: Instant, failures: &[String], detail: String) {
    let elapsed = started.elapsed();
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("[{id}] {title}: {verdict} ({detail}; {:.1} s)", elapsed.as_secs_f64());
    for f in failures.iter().take(5) {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "[{id}] {title}: {} failure(s), first: {}", failures.len(), failures[0]);
}

fn within_time(failures: &mut Vec<String>, started: Instant, limit: Duration) {
    if started.elapsed() > limit {
        failures.push(format!("took {:.1} s, limit {} s", started.elapsed().as_secs_f64(), limit.as_secs()));
    }
}

fn lp_optimum(model: &LpModel) -> f64 {
    let s = solve(model).unwrap();
    assert!(s.is_optimal(), "{} is {:?}", model.name, s.status);
    s.objective_value
}

fn grid(lo: u32, hi: u32) -> impl Iterator<Item = f64> + Clone {
    (lo..=hi).map(|i| i as f64 / 10.0)
}

#[test]
fn formula_lp_agreement() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for delta in grid(1, 9) {
        for delta_e in grid(1, 9) {
            let p = ChannelParams::new(delta, delta_e).unwrap();
            for d in grid(1, 15) {
                let r = Randomness::Limited(d);
                let pairs = [
                    ("key", csk_single_hop(&p, d), lp_optimum(&build_single_hop_sk(&p, r).unwrap())),
                    ("message", csm_single_hop(&p, d), lp_optimum(&build_single_hop_sm(&p, r).unwrap())),
                ];
                for (what, formula, lp) in pairs {
                    checked += 1;
                    worst = worst.max((formula - lp).abs());
                    if (formula - lp).abs() > 1e-9 {
                        failures.push(format!("{what} at delta={delta} delta_e={delta_e} D={d}: {formula} vs {lp}"));
                    }
                }
            }
        }
    }
    within_time(&mut failures, started, Duration::from_secs(10));
    report(1, "closed forms equal LP optima", started, &failures, format!("{checked} pairs, max |diff| {worst:.2e}"));
}

/// Key and forwarded rates from the piecewise table, written out here.
fn tabulated(scheme: KeygenScheme, delta: f64, de: f64, d: f64) -> (f64, f64) {
    let c = de * (1.0 - delta) / (1.0 - delta * de);
    match scheme {
        KeygenScheme::Arq if d < 1.0 - delta => (d * c, d),
        KeygenScheme::Arq => ((1.0 - delta).powi(2) * de / (1.0 - delta * de), 1.0 - delta),
        KeygenScheme::MdsExp if d < 1.0 - delta * de => (d * c, d * (1.0 - delta) / (1.0 - delta * de)),
        KeygenScheme::MdsExp => ((1.0 - delta) * de, 1.0 - delta),
        KeygenScheme::MdsExpArq => (
            if d < 1.0 - delta * de { d * c } else { (1.0 - delta) * de },
            if d < 1.0 - delta { d } else { 1.0 - delta },
        ),
        KeygenScheme::Kg => unreachable!(),
    }
}

#[test]
fn scheme_rates_by_simulation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let p = ChannelParams::new(0.5, 0.5).unwrap();
    let mut worst = 0.0f64;
    for d in [0.3, 0.6, 0.9] {
        for scheme in [KeygenScheme::Arq, KeygenScheme::MdsExp, KeygenScheme::MdsExpArq] {
            let cfg = SimConfig {
                seed: 2024,
                eps_pa: 0.0,
                payload_symbols: 1,
                track_linear_maps: false,
                ..SimConfig::default()
            };
            let out = run_keygen(scheme, &p, Randomness::Limited(d), 100_000, &cfg).unwrap();
            let (key, fwd) = tabulated(scheme, 0.5, 0.5, d);
            for (what, got, want) in [("key", out.report.key_rate, key), ("forwarded", out.report.forwarded_rate, fwd)] {
                let rel = (got - want).abs() / want;
                worst = worst.max(rel);
                if rel > 0.02 {
                    failures.push(format!("{scheme} D={d} {what} rate {got:.5} vs {want:.5}"));
                }
            }
        }
    }
    within_time(&mut failures, started, Duration::from_secs(30));
    report(2, "simulated scheme rates match the table", started, &failures, format!("max rel err {:.2} %", 100.0 * worst));
}

#[test]
fn timesharing_regimes() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draws = 0;
    while draws < 10_000 {
        let (delta, de, d): (f64, f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..=1.0), rng.gen_range(0.0..1.5));
        let (arq_edge, mds_edge) = (1.0 - delta, 1.0 - delta * de);
        if (d - arq_edge).abs() < 1e-9 || (d - mds_edge).abs() < 1e-9 {
            continue;
        }
        draws += 1;
        let plan = timeshare_plan(&ChannelParams::new(delta, de).unwrap(), d);
        if (plan.regime == Regime::ArqOnly) != (d < arq_edge) || (plan.regime == Regime::MdsOnly) != (d > mds_edge) {
            failures.push(format!("delta={delta} delta_e={de} D={d}: {:?}", plan.regime));
        }
    }
    report(3, "time-sharing regime boundaries", started, &failures, format!("{draws} draws"));
}

#[test]
fn outer_bound_matches_achievability() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = rng.gen_range(1..=5);
        let net = random_line(&mut rng, n, 1);
        let mut full = net.clone();
        full.eve_cardinality = n;
        let pairs = [
            ("V=1 vs one Eve", lp_optimum(&build_v_eves_outer(&net).unwrap()), lp_optimum(&build_one_eve(&net).unwrap())),
            ("V=N vs all Eves", lp_optimum(&build_v_eves_outer(&full).unwrap()), lp_optimum(&build_all_eves(&net).unwrap())),
        ];
        for (what, outer, inner) in pairs {
            worst = worst.max((outer - inner).abs());
            if (outer - inner).abs() > 1e-9 {
                failures.push(format!("network {i} (N={n}) {what}: {outer} vs {inner}"));
            }
        }
    }
    report(4, "outer-bound LP equals achievable LP at V=1 and V=N", started, &failures, format!("100 networks, max |diff| {worst:.2e}"));
}

#[test]
fn unlimited_randomness_is_the_weakest_hop() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let n = rng.gen_range(1..=5);
        let hops: Vec<ChannelParams> = (0..n).map(|_| random_hop(&mut rng, 0.0, 1.0)).collect();
        let weakest = hops.iter().map(|h| csm_single_hop(h, f64::INFINITY)).fold(f64::INFINITY, f64::min);
        let net = LineNetwork::new(hops, vec![Randomness::Unlimited; n], 1).unwrap();
        let opt = lp_optimum(&build_one_eve(&net).unwrap());
        if (opt - weakest).abs() > 1e-9 {
            failures.push(format!("instance {i}: LP {opt} vs weakest hop {weakest}"));
        }
    }
    report(5, "unlimited randomness: one-Eve optimum is the weakest hop", started, &failures, "100 instances".into());
}

#[test]
fn line_simulation_rates_and_secrecy() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let hop = ChannelParams::new(0.5, 0.5).unwrap();
    let net = LineNetwork::uniform(3, hop, Randomness::none(), 1).unwrap();
    let modes = [
        (LineMode::OneEve, solve(&build_one_eve(&net).unwrap()).unwrap()),
        (LineMode::AllEves, solve(&build_all_eves(&net).unwrap()).unwrap()),
    ];
    let n = 100_000;

    let mut rates = Vec::new();
    for (mode, sol) in &modes {
        let cfg = SimConfig {
            seed: 6,
            eps_pa: 0.0,
            track_linear_maps: false,
            ..SimConfig::default()
        };
        let out = run_line(&net, *mode, sol, n, &cfg).unwrap();
        let (got, want) = (out.report.secure_message_rate, sol.objective_value);
        if (got - want).abs() / want > 0.05 {
            failures.push(format!("{mode}: rate {got:.5} vs LP {want:.5}"));
        }
        rates.push(format!("{mode} {got:.5}/{want:.5}"));
    }

    // >= 99 % of 200 trials perfect means at most 2 imperfect; trials run in
    // seed order until that outcome is settled either way
    const TRIALS: usize = 200;
    const ALLOWED: usize = TRIALS / 100;
    let (mut imperfect, mut run) = (0, 0);
    let mut first_bad = None;
    while run < TRIALS && imperfect <= ALLOWED {
        let seed = 1000 + run as u64;
        let cfg = SimConfig { seed, ..SimConfig::default() };
        let field = cfg.field().unwrap();
        let mut perfect = true;
        for (mode, sol) in &modes {
            let out = run_line(&net, *mode, sol, n, &cfg).unwrap();
            let verdicts = audit_line(&field, &out, &EvePlacement::required(*mode, net.len())).unwrap();
            if let Some(v) = verdicts.iter().find(|v| !v.is_perfect()) {
                perfect = false;
                first_bad.get_or_insert(format!(
                    "seed {seed} {mode} placement {:?}: deficit {} of {} rows",
                    v.placement.hops(),
                    v.secrecy_rank_deficit,
                    v.secret_rows
                ));
            }
        }
        imperfect += usize::from(!perfect);
        run += 1;
    }
    if imperfect > ALLOWED {
        failures.push(format!(
            "secrecy audit at eps_pa 0.05: {imperfect} imperfect of the first {run} trials (at most {ALLOWED} of {TRIALS} allowed); {}",
            first_bad.unwrap_or_default()
        ));
    }
    within_time(&mut failures, started, Duration::from_secs(300));
    report(
        6,
        "three-hop line: LP rates and secrecy audit",
        started,
        &failures,
        format!("{}; audit {imperfect} imperfect in {run} trials", rates.join(", ")),
    );
}

/// Per message: attempts until the receiver ACKs; the pad stays secret iff
/// Eve missed every attempt. Net consumption is 1 - Pr{secret}.
fn consumption_oracle(delta: f64, delta_e: f64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut secret = 0usize;
    for _ in 0..trials {
        let mut eve_missed_all = true;
        loop {
            eve_missed_all &= rng.gen::<f64>() < delta_e;
            if rng.gen::<f64>() >= delta {
                break;
            }
        }
        secret += usize::from(eve_missed_all);
    }
    1.0 - secret as f64 / trials as f64
}

#[test]
fn message_phase_consumption() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let p = ChannelParams::new(0.5, 0.5).unwrap();
    let expected = consumption_oracle(0.5, 0.5, 1_000_000);
    let cfg = SimConfig {
        seed: 7,
        eps_pa: 0.0,
        track_linear_maps: false,
        ..SimConfig::default()
    };
    let kg = run_keygen(KeygenScheme::Kg, &p, Randomness::Unlimited, 60_000, &cfg).unwrap();
    let mut unknowns = kg.unknowns.clone();
    let msgs = draw_messages(&cfg.field().unwrap(), &mut unknowns, 10_000, &cfg);
    let out = run_message_phase(kg.key, &msgs, &p, None, &cfg).unwrap();
    if out.delivered.len() != msgs.len() {
        failures.push(format!("delivered {} of {}", out.delivered.len(), msgs.len()));
    }
    let got = out.report.key_consumed_per_message.unwrap_or(f64::NAN);
    if !((got - expected).abs() / expected <= 0.03) {
        failures.push(format!("net consumption {got:.4} vs {expected:.4}"));
    }
    report(7, "message-phase net key consumption", started, &failures, format!("{got:.4} per message, oracle {expected:.4}"));
}

#[test]
fn property_suites() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // every k x k minor of every GF(16) MDS matrix
    let f16 = Field::new(FieldConfig::GF16).unwrap();
    let mut minors = 0;
    for n in 1..16 {
        for k in 1..=n {
            let g = f16.make_mds(k, n).unwrap();
            let rows: Vec<Vec<u32>> = (0..k).map(|r| g.row(r).iter().map(|&x| x as u32).collect()).collect();
            for cols in Combinations::new(n, k) {
                minors += 1;
                let minor: Vec<Vec<u32>> = rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                if ref_rank(&minor, 0x13, 4) != k {
                    failures.push(format!("MDS {k}x{n} singular on {cols:?}"));
                }
            }
        }
    }

    // rank audit against enumeration of all 16^4 assignments
    for _ in 0..60 {
        let row = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            (0..4).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(1..16) }).collect()
        };
        let observed: Vec<Vec<u32>> = (0..rng.gen_range(0..=3)).map(|_| row(&mut rng)).collect();
        let secret: Vec<Vec<u32>> = (0..rng.gen_range(1..=2)).map(|_| row(&mut rng)).collect();
        let sparse = |r: &Vec<u32>| -> Vec<(u32, Symbol)> {
            r.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i as u32, c as Symbol)).collect()
        };
        let obs: Vec<Vec<(u32, Symbol)>> = observed.iter().map(sparse).collect();
        let sec: Vec<Vec<(u32, Symbol)>> = secret.iter().map(sparse).collect();
        let (deficit, secret_rank, _) = rank_deficit(
            &f16,
            &obs.iter().map(Vec::as_slice).collect::<Vec<_>>(),
            &sec.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        );
        let audit = deficit == 0 && secret_rank == secret.len();
        if audit != enumerate_uniform(&observed, &secret) {
            failures.push(format!("audit disagrees with enumeration on {observed:?} / {secret:?}"));
        }
    }

    // simplex against vertex enumeration
    for i in 0..200 {
        let nv = rng.gen_range(1..=5);
        let mut m = LpModel::new("random");
        for v in 0..nv {
            m.add_variable(format!("x{v}")).unwrap();
        }
        let obj = (0..nv).map(|v| (v, rng.gen_range(-4..=4) as f64 / 4.0)).collect();
        m.set_objective(if rng.gen() { Sense::Maximize } else { Sense::Minimize }, obj).unwrap();
        for c in 0..rng.gen_range(0..=4) {
            let terms = (0..nv).map(|v| (v, rng.gen_range(-3..=3) as f64 / 2.0)).collect();
            let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
            m.add_constraint(format!("c{c}"), terms, rel, rng.gen_range(-2..=8) as f64 / 2.0).unwrap();
        }
        m.add_constraint("box", (0..nv).map(|v| (v, 1.0)).collect(), Relation::Le, 10.0).unwrap();
        let s = solve(&m).unwrap();
        match vertex_optimum(&m) {
            None if s.is_optimal() => failures.push(format!("LP {i}: solver optimal, oracle infeasible")),
            Some(v) if !s.is_optimal() || (s.objective_value - v).abs() > 1e-7 => {
                failures.push(format!("LP {i}: solver {:?} {} vs vertices {v}", s.status, s.objective_value))
            }
            _ => {}
        }
    }

    // monotone optima
    let mut monotone = 0;
    for _ in 0..60 {
        let n = rng.gen_range(1..=3);
        let net = random_line(&mut rng, n, 1);
        let j = rng.gen_range(0..n);
        let mut variants = Vec::new();
        let mut x = net.clone();
        if let Randomness::Limited(d) = x.node_randomness[j] {
            x.node_randomness[j] = Randomness::Limited(d + 0.3);
        }
        variants.push(("more randomness", x));
        let mut x = net.clone();
        let h = x.hops[j];
        x.hops[j] = ChannelParams::new(h.delta, (h.delta_e + 0.2).min(1.0)).unwrap();
        variants.push(("larger Eve erasure", x));
        let mut x = net.clone();
        x.hops[j] = ChannelParams::new(h.delta * 0.7, h.delta_e).unwrap();
        variants.push(("smaller receiver erasure", x));
        let base = [build_one_eve(&net), build_all_eves(&net), build_v_eves_outer(&net)].map(|m| lp_optimum(&m.unwrap()));
        for (what, better) in &variants {
            let opt = [build_one_eve(better), build_all_eves(better), build_v_eves_outer(better)].map(|m| lp_optimum(&m.unwrap()));
            for (a, b) in base.iter().zip(&opt) {
                monotone += 1;
                if *b < a - 1e-9 {
                    failures.push(format!("{what} lowered an optimum: {a} -> {b}"));
                }
            }
        }
        let mut last = f64::INFINITY;
        for v in 1..=n {
            let mut x = net.clone();
            x.eve_cardinality = v;
            let opt = lp_optimum(&build_v_eves_outer(&x).unwrap());
            if opt > last + 1e-9 {
                failures.push(format!("V={v} raised the outer bound: {last} -> {opt}"));
            }
            last = opt;
        }
    }
    report(
        8,
        "property suites (MDS, audit, simplex, monotonicity)",
        started,
        &failures,
        format!("{minors} minors, 60 audits, 200 LPs, {monotone} monotone pairs"),
    );
}

fn enumerate_uniform(observed: &[Vec<u32>], secret: &[Vec<u32>]) -> bool {
    use std::collections::HashMap;
    let eval = |row: &[u32], x: &[u32]| row.iter().zip(x).fold(0, |acc, (&c, &v)| acc ^ ref_mul(c, v, 0x13, 4));
    let mut joint: HashMap<Vec<u32>, HashMap<Vec<u32>, usize>> = HashMap::new();
    for code in 0..1u32 << 16 {
        let x: Vec<u32> = (0..4).map(|i| code >> (4 * i) & 15).collect();
        let z = observed.iter().map(|r| eval(r, &x)).collect();
        let s = secret.iter().map(|r| eval(r, &x)).collect();
        *joint.entry(z).or_default().entry(s).or_default() += 1;
    }
    let outcomes = 16usize.pow(secret.len() as u32);
    joint.values().all(|given| {
        let first = *given.values().next().unwrap();
        given.len() == outcomes && given.values().all(|&c| c == first)
    })
}
