// Temporary scaffolding: probe the moment-matrix SDP at single epsilons.
use bellcert::npa::{build_moment_model, certify_max_randomness_sdp, max_single_expectation_sdp};

fn main() {
    let model = build_moment_model();
    match max_single_expectation_sdp(&model, 2, &[1e-6], false) {
        Ok(rep) => println!("unconstrained single: {:.9}", rep.values[0].1),
        Err(e) => println!("unconstrained single: ERROR {e}"),
    }
    let t = std::time::Instant::now();
    for a in 0..8usize {
        let outcome = [(a >> 2) & 1, (a >> 1) & 1, a & 1];
        match certify_max_randomness_sdp(&model, outcome, &[1e-4, 1e-6, 1e-8]) {
            Ok(rep) => println!(
                "outcome {outcome:?}: extrapolated={:.9} gd={:.2e}",
                rep.extrapolated, rep.gamma_distance
            ),
            Err(e) => println!("outcome {outcome:?}: ERROR {e}"),
        }
    }
    match certify_max_randomness_sdp(&model, [0, 0, 0], &[1e-4, 1e-6, 1e-8]) {
        Ok(rep) => {
            for (eps, v) in &rep.values {
                println!("eps={eps:e}: value={v:.9}");
            }
            println!(
                "extrapolated={:.9} gamma_distance={:.3e} ({:?})",
                rep.extrapolated,
                rep.gamma_distance,
                t.elapsed()
            );
        }
        Err(e) => println!("schedule: ERROR {e}"),
    }
    for idx in 1..=6 {
        match max_single_expectation_sdp(&model, idx, &[1e-4, 1e-5, 1e-6], true) {
            Ok(rep) => println!(
                "single {idx}: values={:?} extrapolated={:.9}",
                rep.values.iter().map(|&(_, v)| v).collect::<Vec<_>>(),
                rep.extrapolated
            ),
            Err(e) => println!("single {idx}: ERROR {e}"),
        }
    }
}
