use funcsp::bench::{run_sweep, summarize, SweepConfig};
use std::time::Instant;

fn probe(n: usize, d: usize, e_values: Vec<usize>, nf_values: Vec<usize>, t_values: Vec<f64>, seeds: u64, identity: bool) {
    let cfg = SweepConfig { n, d, e_values, nf_values, t_values, seeds, seed_base: 0, identity };
    let started = Instant::now();
    let rows = run_sweep(&cfg);
    let elapsed = started.elapsed();
    for s in summarize(&rows) {
        println!(
            "e={} nf={} t={:.2} inst={} direct_bt_mean={:.1} elim_bt_mean={:.1} direct_cpu={}ms elim_cpu={}ms",
            s.e, s.nf, s.t, s.instances, s.direct_backtracks_mean, s.eliminated_backtracks_mean,
            s.direct_cpu.as_millis(), s.eliminated_cpu.as_millis()
        );
    }
    println!("total wall: {:?}\n", elapsed);
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    match args.get(1).map(|s| s.as_str()) {
        Some("a") => probe(20, 20, vec![120], vec![2], vec![0.62, 0.65, 0.68, 0.71], 30, false),
        Some("b") => probe(20, 20, vec![160], vec![2], vec![0.70, 0.73, 0.76], 30, false),
        Some("c") => probe(20, 20, vec![190], vec![2], vec![0.76, 0.78, 0.80], 30, false),
        Some("identity") => probe(30, 30, vec![30], vec![6, 12, 18], vec![0.04, 0.08, 0.12], 8, true),
        _ => eprintln!("usage: a|b|c|identity"),
    }
}
