//! The one-bit Bernoulli subroutine that powers the refinement passes.
//!
//! A pool of users each holds `n` coin flips and sends a single bit. The
//! first bits drive a bisection that localizes the bias; the rest all test
//! one fixed threshold whose hit frequency is inverted through the binomial
//! tail.
//!
//! ```bash
//! cargo run --release --example one_bit_subroutine
//! ```

use rand::Rng;

use fewbits::onebit::{invert_binomial_tail, onebit_estimate, OneBitTask};
use fewbits::SharedRandomness;

fn main() {
    // The inversion primitive on its own.
    for (n, theta, target) in [(2usize, 1usize, 0.75), (50, 20, 0.3), (400, 17, 0.9)] {
        let q = invert_binomial_tail(n, theta, target).unwrap();
        println!("P[Bin({n}, q) >= {theta}] = {target}  =>  q = {q:.6}");
    }

    // Accuracy at a reference point: q = 0.3, n = 100, m' = 1000.
    let (q, n, m_prime) = (0.3, 100usize, 1000usize);
    let sr = SharedRandomness::new(31);
    let runs = 500;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for t in 0..runs {
        let mut data = sr.indexed("flips", t);
        let counts: Vec<u32> = (0..m_prime)
            .map(|_| (0..n).filter(|_| data.random::<f64>() < q).count() as u32)
            .collect();
        let task = OneBitTask::new(n, counts, sr.indexed("tie", t)).unwrap();
        let q_hat = onebit_estimate(task).unwrap();
        sum += q_hat;
        sq += (q_hat - q) * (q_hat - q);
    }
    let rmse = (sq / runs as f64).sqrt();
    println!(
        "q = {q}, n = {n}, m' = {m_prime}: mean estimate {:.4}, rmse {:.4} over {runs} runs",
        sum / runs as f64,
        rmse
    );
    println!(
        "leading-term scale sqrt(q/(m'n)) = {:.4}",
        (q / (m_prime * n) as f64).sqrt()
    );

    // The error shrinks like 1/(m'n): double the samples, halve the MSE.
    for &(mp, nn) in &[(500usize, 64usize), (1000, 64), (1000, 128)] {
        let mut sq = 0.0;
        for t in 0..runs {
            let mut data = sr.indexed("grid", (mp * nn) as u64 ^ t);
            let counts: Vec<u32> = (0..mp)
                .map(|_| (0..nn).filter(|_| data.random::<f64>() < q).count() as u32)
                .collect();
            let task = OneBitTask::new(nn, counts, sr.indexed("grid-tie", t)).unwrap();
            let q_hat = onebit_estimate(task).unwrap();
            sq += (q_hat - q) * (q_hat - q);
        }
        println!(
            "m' = {mp:4}, n = {nn:3}: mse = {:.3e} | 1/(m'n) = {:.3e}",
            sq / runs as f64,
            1.0 / (mp * nn) as f64
        );
    }
}
