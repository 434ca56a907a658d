//! Reference runs at acceptance scale; prints the ratio checks.

use enku_core::harness::{fit_convergence, preset, run_experiment, MethodId};

fn mean_at(result: &enku_core::harness::RunResult, method: MethodId, n: usize) -> f64 {
    result
        .series
        .iter()
        .find(|s| s.method == method && s.ensemble_size == n)
        .map(|s| s.w2_mean)
        .unwrap()
}

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    for name in ["exp1", "exp2", "exp3", "sdec", "obsdep"] {
        if !which.is_empty() && !which.iter().any(|w| w == name) {
            continue;
        }
        let mut cfg = preset(name).unwrap();
        if name.starts_with("exp") {
            cfg.n_grid = vec![64, 1024, 4096];
        }
        let start = std::time::Instant::now();
        let result = run_experiment(&cfg).unwrap();
        println!("== {name} ({:.1?}) failures={}", start.elapsed(), result.failures.len());
        for &m in &cfg.methods {
            for &n in &cfg.n_grid {
                println!("   {m:>8} N={n:<7} mean={:.6}", mean_at(&result, m, n));
            }
            if cfg.n_grid.len() >= 3 {
                let (slope, floor) = fit_convergence(&result, m).unwrap();
                println!("   {m:>8} slope={slope:.3} floor={floor:.6}");
            }
        }
        match name {
            "exp1" => {
                for m in [MethodId::Enku, MethodId::Ld, MethodId::Lot] {
                    let ratio = mean_at(&result, m, 4096) / mean_at(&result, m, 64);
                    println!("   ratio 4096/64 {m}: {ratio:.4} (need < 0.35)");
                }
            }
            "exp2" | "exp3" => {
                let enku_big = mean_at(&result, MethodId::Enku, 4096);
                let r = enku_big / mean_at(&result, MethodId::Enku, 64);
                println!("   enku ratio 4096/64: {r:.4} (need < 0.5)");
                for m in [MethodId::Ld, MethodId::Lot] {
                    let plateau = mean_at(&result, m, 4096) / mean_at(&result, m, 1024);
                    let (_, floor) = fit_convergence(&result, m).unwrap();
                    println!(
                        "   {m} plateau 4096/1024: {plateau:.4} (need in [0.7,1.3]); floor/enku@4096: {:.3} (need > 2)",
                        floor / enku_big
                    );
                }
            }
            "sdec" => {
                let v = mean_at(&result, MethodId::SdecAlt, 100_000);
                println!("   sdec-alt at 1e5: {v:.6} (need < 0.05)");
            }
            "obsdep" => {
                let obs = mean_at(&result, MethodId::ObsDep, 4096) / mean_at(&result, MethodId::ObsDep, 64);
                let enku = mean_at(&result, MethodId::Enku, 4096) / mean_at(&result, MethodId::Enku, 64);
                println!("   obsdep ratio 4096/64: {obs:.4} (need < 0.5); enku ratio: {enku:.4} (plateau, need > 0.5)");
            }
            _ => {}
        }
    }
}
