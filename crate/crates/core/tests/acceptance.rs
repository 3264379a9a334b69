//! Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p doubtscore --test acceptance -- --nocapture`.

use std::f64::consts::FRAC_PI_2;
use std::process::Command;
use std::time::{Duration, Instant};

use doubtscore::train_demo::{make_blobs, train, TrainConfig};
use doubtscore::{
    angle_to_rp1, certainty_matrix, certainty_offset_matrix, composite_loss, doubt_cost, doubt_cost_gradient,
    doubt_matrix, is_invertible, pairwise_certainty, pairwise_doubt, raw_certainty, raw_doubt,
    raw_doubt_cost, raw_doubt_cost_gradient, rp1_new, rp1_to_angle, Ext, Logits, Probabilities,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex (flat Dirichlet via normalized exponentials).
fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random simplex points, N ∈ 2..=10; every fifth one has a tie at the top
/// and every seventh a tie below it.
fn corpus(seed: u64, count: usize) -> Vec<Probabilities> {
    let mut r = rng(seed);
    (0..count)
        .map(|k| {
            let n = r.random_range(2..=10);
            let mut e: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(Exp1)).collect();
            if k % 5 == 0 {
                let m = e.iter().cloned().fold(f64::MIN, f64::max);
                let i = r.random_range(0..n);
                let top = e.iter().position(|&x| x == m).unwrap();
                if i != top {
                    e[i] = m;
                }
            } else if k % 7 == 0 && n >= 3 {
                e[1] = e[2];
            }
            let s: f64 = e.iter().sum();
            Probabilities::new(e.into_iter().map(|x| x / s).collect()).unwrap()
        })
        .collect()
}

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    num / den
}

fn margin_product(v: &[f64], j: usize) -> f64 {
    (0..v.len()).filter(|&i| i != j).map(|i| v[j] - v[i]).product()
}

/// Reference cost `arcsin((1 - P²)/(1 + P²))` with the top index fixed,
/// less the nearer pole: `-2·atan|P|` (θ - π/2) when `|P| ≤ 1` at `x`,
/// `2·atan(1/|P|)` (θ + π/2) otherwise. The constant cancels in a difference
/// quotient; leaving it out keeps full relative precision where θ sits next
/// to a pole and would otherwise round onto it.
fn reference_cost(x: &[f64], j: usize) -> impl Fn(&[f64]) -> f64 {
    let near_top = margin_product(x, j).abs() <= 1.0;
    move |v| {
        let prod = margin_product(v, j).abs();
        if near_top {
            -2.0 * prod.atan()
        } else {
            2.0 * prod.recip().atan()
        }
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::MIN, f64::max);
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    let m = v.iter().cloned().fold(f64::MIN, f64::max);
    v.iter().position(|&x| x == m).unwrap()
}

/// Vector whose off-top margins are all at least `gap`.
fn interior<F: FnMut() -> Vec<f64>>(mut draw: F, gap: f64) -> Vec<f64> {
    loop {
        let v = draw();
        let j = argmax(&v);
        if (0..v.len()).all(|i| i == j || v[j] - v[i] >= gap) {
            return v;
        }
    }
}

fn ac1_range_law() -> Outcome {
    let start = Instant::now();
    let data = corpus(1, 1000);
    let mut violations = 0;
    let mut ties = 0;
    for p in &data {
        let top = p.max_prob();
        let chi = pairwise_certainty(p);
        let delta = pairwise_doubt(p);
        for ((_, c), (_, d)) in chi.off_argmax().zip(delta.off_argmax()) {
            if !(0.0..=top).contains(&c) {
                violations += 1;
            }
            if d < Ext::Finite(1.0 / top) {
                violations += 1;
            }
            if d.is_infinite() {
                ties += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("{violations} violations, {ties} infinite doubts, {elapsed:.2?}");
    if violations == 0 && elapsed < Duration::from_secs(1) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac2_reciprocity() -> Outcome {
    let mut worst = 0.0f64;
    let mut exceptions = 0;
    for p in &corpus(1, 1000) {
        let chi = pairwise_certainty(p);
        let delta = pairwise_doubt(p);
        for ((_, c), (_, d)) in chi.off_argmax().zip(delta.off_argmax()) {
            if (c == 0.0) != d.is_infinite() {
                exceptions += 1;
            }
            if let Some(d) = d.finite() {
                worst = worst.max((c * d - 1.0).abs());
            }
        }
    }
    let detail = format!("max |χδ - 1| = {worst:.1e}, {exceptions} zero/infinity mismatches");
    if worst <= 1e-12 && exceptions == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac3_skew_symmetry() -> Outcome {
    let mut nonzero = 0;
    for p in &corpus(3, 1000) {
        let c = certainty_offset_matrix(p);
        let n = c.dim();
        for i in 0..n {
            for k in 0..n {
                if c.get(i, k) + c.get(k, i) != 0.0 {
                    nonzero += 1;
                }
            }
        }
    }
    let detail = format!("{nonzero} nonzero entries of C° + C°ᵀ");
    if nonzero == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac4_invertibility() -> Outcome {
    let mut r = rng(4);
    let mut singular = 0;
    let mut worst_cond = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(2..=10);
        let p = Probabilities::new(simplex(&mut r, n)).unwrap();
        let inv = is_invertible(&certainty_matrix(&p));
        if !inv.invertible {
            singular += 1;
        } else {
            worst_cond = worst_cond.max(inv.condition);
        }
    }

    let half = Probabilities::new(vec![0.5, 0.5]).unwrap();
    let c = certainty_matrix(&half);
    let id = [[1.0, 0.0], [0.0, 1.0]];
    let c_is_identity = c.matrix().to_nested() == id;
    let inverse_is_identity = c.inverse().map(|m| m.to_nested() == id).unwrap_or(false);
    let d = doubt_matrix(&half);
    let doubt_ok = d.get(0, 0) == Ext::zero()
        && d.get(1, 1) == Ext::zero()
        && d.get(0, 1).is_infinite()
        && d.get(1, 0).is_infinite();

    let detail = format!(
        "{singular}/1000 singular, worst cond₁ {worst_cond:.2}; [0.5,0.5]: C=I {c_is_identity}, C⁻¹=I {inverse_is_identity}, D=[[0,∞],[∞,0]] {doubt_ok}"
    );
    if singular == 0 && c_is_identity && inverse_is_identity && doubt_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac5_stereographic_roundtrip() -> Outcome {
    let (lo, hi) = (-FRAC_PI_2 + 1e-3, FRAC_PI_2 - 1e-3);
    let steps = 10_000;
    let mut worst = 0.0f64;
    for k in 0..steps {
        let theta = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
        let back = rp1_to_angle(&angle_to_rp1(theta).unwrap());
        worst = worst.max((back - theta).abs());
    }
    let pole = rp1_to_angle(&rp1_new(0.0, 1.0).unwrap());
    let detail = format!("max error {worst:.1e} over {steps} points, G([0:1]) = {pole}");
    if worst <= 1e-9 && pole == FRAC_PI_2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac6_projective_duality() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    let mut unequal = 0;
    for k in 0..1000 {
        // (0, 1], with the right endpoint included once
        let g = if k == 0 { 1.0 } else { 1.0 - r.random::<f64>() };
        let a = rp1_new(g, 1.0).unwrap();
        let b = rp1_new(1.0, 1.0 / g).unwrap();
        worst = worst.max(a.cross(&b).abs());
        if !a.projectively_eq(&b) {
            unequal += 1;
        }
    }
    let detail = format!("max |cross| {worst:.1e}, {unequal} unequal");
    if worst <= 1e-12 && unequal == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac7_cost_boundaries() -> Outcome {
    let mut worst_boundary = 0.0f64;
    for n in 2..=10 {
        let mut one_hot = vec![0.0; n];
        one_hot[n / 2] = 1.0;
        let one_hot = Probabilities::new(one_hot).unwrap();
        let uniform = Probabilities::new(vec![1.0 / n as f64; n]).unwrap();
        worst_boundary = worst_boundary.max(doubt_cost(&one_hot).theta.abs());
        worst_boundary = worst_boundary.max((doubt_cost(&uniform).theta - FRAC_PI_2).abs());
    }

    let mut r = rng(7);
    let mut worst_consistency = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(2..=10);
        let p = Probabilities::new(simplex(&mut r, n)).unwrap();
        let prod: f64 = pairwise_certainty(&p).off_argmax().map(|(_, c)| c).product();
        let via_rp1 = rp1_to_angle(&rp1_new(prod, 1.0).unwrap());
        worst_consistency = worst_consistency.max((doubt_cost(&p).theta - via_rp1).abs());
    }
    let detail = format!("boundary error {worst_boundary:.1e}, cost vs G([∏χ:1]) {worst_consistency:.1e}");
    if worst_boundary <= 1e-12 && worst_consistency <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac8_gradients() -> Outcome {
    let start = Instant::now();
    let h = 1e-6;
    let mut r = rng(8);
    let (mut worst_p, mut worst_y, mut worst_c) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = r.random_range(2..=10);
        let p = interior(|| simplex(&mut r, n), 0.05);
        let j = argmax(&p);
        let g = doubt_cost_gradient(&Probabilities::new(p.clone()).unwrap());
        let fd = central_diff(reference_cost(&p, j), &p, h);
        worst_p = worst_p.max(if g.degenerate {
            f64::INFINITY
        } else {
            rel_err(&g.entries, &fd)
        });
    }
    for _ in 0..100 {
        let n = r.random_range(2..=10);
        let y = interior(|| (0..n).map(|_| r.random_range(-3.0..3.0)).collect(), 0.05);
        let j = argmax(&y);
        let g = raw_doubt_cost_gradient(&Logits::new(y.clone()).unwrap());
        let fd = central_diff(reference_cost(&y, j), &y, h);
        worst_y = worst_y.max(if g.degenerate {
            f64::INFINITY
        } else {
            rel_err(&g.entries, &fd)
        });
    }
    for _ in 0..100 {
        let n = r.random_range(2..=10);
        let y = interior(|| (0..n).map(|_| r.random_range(-3.0..3.0)).collect(), 0.05);
        let j = argmax(&y);
        let target = r.random_range(0..n);
        let lambda = r.random_range(0.0..2.0);
        let c = composite_loss(&Logits::new(y.clone()).unwrap(), target, lambda).unwrap();
        let cost = reference_cost(&y, j);
        let f = |v: &[f64]| log_sum_exp(v) - v[target] + lambda * cost(v);
        let fd = central_diff(f, &y, h);
        worst_c = worst_c.max(rel_err(&c.gradient.entries, &fd));
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "max rel err: probs {worst_p:.1e}, logits {worst_y:.1e}, composite {worst_c:.1e}; {elapsed:.2?}"
    );
    if worst_p <= 1e-5 && worst_y <= 1e-5 && worst_c <= 1e-5 && elapsed < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac9_shift_invariance() -> Outcome {
    // Entries and shifts on a 2⁻¹⁶ grid within ±64, so every y + c is exact.
    let grid = |r: &mut ChaCha8Rng, half_width: i64| -> f64 {
        r.random_range(-half_width << 16..=half_width << 16) as f64 / 65536.0
    };
    let mut r = rng(9);
    let mut score_mismatches = 0;
    let mut worst_grad = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(2..=10);
        let y = Logits::new((0..n).map(|_| grid(&mut r, 32)).collect()).unwrap();
        let c = grid(&mut r, 32);
        let z = y.shifted(c).unwrap();
        if raw_certainty(&y) != raw_certainty(&z)
            || raw_doubt(&y) != raw_doubt(&z)
            || raw_doubt_cost(&y) != raw_doubt_cost(&z)
        {
            score_mismatches += 1;
        }
        let (gy, gz) = (raw_doubt_cost_gradient(&y), raw_doubt_cost_gradient(&z));
        for (a, b) in gy.entries.iter().zip(&gz.entries) {
            worst_grad = worst_grad.max((a - b).abs());
        }
    }
    let detail = format!("{score_mismatches} score mismatches, max gradient difference {worst_grad:.1e}");
    if score_mismatches == 0 && worst_grad <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac10_training() -> Outcome {
    let seed = 42;
    let start = Instant::now();
    let data = make_blobs(3, 100, 0.3, seed).map_err(|e| e.to_string())?;
    let run = |lambda: f64| {
        let cfg = TrainConfig {
            lambda,
            epochs: 500,
            learning_rate: 0.1,
            seed,
        };
        train(&data, &cfg)
            .map(|o| *o.metrics.last().unwrap())
            .map_err(|e| e.to_string())
    };
    let base = run(0.0)?;
    let strong = run(0.5)?;
    let mild = run(0.1)?;
    let elapsed = start.elapsed();
    let detail = format!(
        "seed {seed}: cost λ=0 {:.6} vs λ=0.5 {:.6} (acc {:.3}); λ=0.1 acc {:.3}; {elapsed:.2?}",
        base.doubt_cost, strong.doubt_cost, strong.accuracy, mild.accuracy
    );
    if strong.doubt_cost < base.doubt_cost && mild.accuracy >= 0.9 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac11_golden_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_doubtscore");
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");
    let input = format!("{data}/golden_input.jsonl");
    let golden = std::fs::read(format!("{data}/golden_report.jsonl")).map_err(|e| e.to_string())?;
    let records = std::fs::read_to_string(&input)
        .map_err(|e| e.to_string())?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .count();

    let out = Command::new(bin)
        .args(["score", &input])
        .output()
        .map_err(|e| e.to_string())?;
    let byte_exact = out.status.success() && out.stdout == golden;

    let mut conserved = Vec::new();
    for field in ["theta", "max_doubt", "neg_log"] {
        let out = Command::new(bin)
            .args(["hist", &input, "--field", field, "--bins", "4"])
            .output()
            .map_err(|e| e.to_string())?;
        let csv = String::from_utf8_lossy(&out.stdout);
        let total: usize = csv
            .lines()
            .skip(1)
            .filter_map(|l| l.rsplit(',').next()?.parse::<usize>().ok())
            .sum();
        conserved.push((field, out.status.success() && total == records));
    }

    let detail =
        format!("score byte-exact {byte_exact}; hist conservation {conserved:?} over {records} records");
    if byte_exact && conserved.iter().all(|&(_, ok)| ok) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 11] = [
        ("range law", ac1_range_law),
        ("reciprocity", ac2_reciprocity),
        ("skew-symmetry", ac3_skew_symmetry),
        ("invertibility", ac4_invertibility),
        ("stereographic roundtrip", ac5_stereographic_roundtrip),
        ("projective duality", ac6_projective_duality),
        ("cost boundaries and consistency", ac7_cost_boundaries),
        ("gradient correctness", ac8_gradients),
        ("logit-shift invariance", ac9_shift_invariance),
        ("training demo", ac10_training),
        ("CLI golden files", ac11_golden_cli),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let n = k + 1;
        match check() {
            Ok(detail) => println!("[PASS] AC-{n} {name}: {detail}"),
            Err(detail) => {
                println!("[FAIL] AC-{n} {name}: {detail}");
                failed.push(format!("AC-{n}"));
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
