//! Acceptance checks. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture` doubles as a
//! report. Oracles here are written independently of the library code.

use std::sync::OnceLock;

use approx::relative_eq;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use coevo::agents::{fermi_adopt_probability, AgentVariant};
use coevo::experiment::{run_arena, run_experiment, seed_tail_means, ExperimentConfig, MetricsRow};
use coevo::lattice::{resolve_interactions, round_payoff, DilemmaAction, Lattice, PayoffMatrix, SelectionAction};
use coevo::memory::PayoffMemory;
use coevo::metrics::{gini, MetricsRecord};
use coevo::qlearn::{q_loss_and_gradient, PrioritizedReplayBuffer, QNetwork, TransitionRef, PRIORITY_FLOOR};
use coevo::utility::{counterfactual_utility, population_averages};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn random_action<R: Rng>(rng: &mut R) -> DilemmaAction {
    if rng.gen_bool(0.5) {
        DilemmaAction::Cooperate
    } else {
        DilemmaAction::Defect
    }
}

// ---------------------------------------------------------------- 1

/// Neighbour of `(r, c)` in slot order up, right, down, left.
fn oracle_neighbour(side: usize, i: usize, slot: usize) -> usize {
    let (r, c) = (i / side, i % side);
    let (r, c) = match slot {
        0 => ((r + side - 1) % side, c),
        1 => (r, (c + 1) % side),
        2 => ((r + 1) % side, c),
        _ => (r, (c + side - 1) % side),
    };
    r * side + c
}

#[test]
fn c01_payoff_oracle_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..200 {
        let side = rng.gen_range(3..=6);
        let n = side * side;
        let den = rng.gen_range(1..=12i64);
        let b = Ratio::new(den + rng.gen_range(0..=den), den);
        let dilemmas: Vec<DilemmaAction> = (0..n).map(|_| random_action(&mut rng)).collect();
        let selections: Vec<SelectionAction> =
            (0..n).map(|_| SelectionAction::from_index(rng.gen_range(0..16)).unwrap()).collect();

        // enumerate each undirected edge once (right and down neighbours)
        let mut expected = vec![Ratio::from_integer(0i64); n];
        let pay = |me: DilemmaAction, other: DilemmaAction| match (me, other) {
            (DilemmaAction::Cooperate, DilemmaAction::Cooperate) => Ratio::from_integer(1),
            (DilemmaAction::Defect, DilemmaAction::Cooperate) => b,
            _ => Ratio::from_integer(0),
        };
        for i in 0..n {
            for slot in [1usize, 2] {
                let j = oracle_neighbour(side, i, slot);
                let back = (slot + 2) % 4;
                if selections[i].index() >> slot & 1 == 1 && selections[j].index() >> back & 1 == 1 {
                    expected[i] += pay(dilemmas[i], dilemmas[j]);
                    expected[j] += pay(dilemmas[j], dilemmas[i]);
                }
            }
        }

        let lattice = Lattice::new(side).unwrap();
        let matrix = PayoffMatrix::new(b).unwrap();
        let effective = resolve_interactions(&lattice, &selections);
        for i in 0..n {
            checked += 1;
            if round_payoff(&lattice, i, &dilemmas, &effective, &matrix) != expected[i] {
                mismatches += 1;
            }
        }
    }
    let pass = mismatches == 0;
    report(1, "payoff oracle", pass, &format!("{mismatches} mismatches over {checked} agents (exact rationals)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 2

#[test]
fn c02_gini_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC02);
    let mut worst_eq: f64 = 0.0;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mad: f64 = x.iter().flat_map(|a| x.iter().map(move |b| (a - b).abs())).sum();
        let oracle = mad / (2.0 * (n * n) as f64 * mean);
        let g = gini(&x);
        worst_eq = worst_eq.max((g - oracle).abs());
        let c = rng.gen_range(0.01..100.0);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        worst_scale = worst_scale.max((gini(&scaled) - g).abs());
    }
    let pass = worst_eq <= 1e-9 && worst_scale <= 1e-12;
    report(
        2,
        "gini equivalence",
        pass,
        &format!("max |rank − pairwise| = {worst_eq:.2e} (tol 1e-9), max scale drift = {worst_scale:.2e} (tol 1e-12)"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 3

fn oracle_memory_length(alpha: f64) -> usize {
    if alpha == 0.0 {
        return 0;
    }
    (1..).find(|&n| alpha.powi(n as i32) < 0.01).unwrap()
}

#[test]
fn c03_smoothing_and_utility_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC03);
    let mut worst_smooth: f64 = 0.0;
    let mut worst_utility: f64 = 0.0;
    let mut identity_ok = true;
    for _ in 0..1000 {
        let alpha = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..0.95) };
        let past: Vec<f64> = (0..rng.gen_range(0..30)).map(|_| rng.gen_range(0.0..8.0)).collect();
        let current = rng.gen_range(0.0..8.0);
        let mut mem = PayoffMemory::new(alpha).unwrap();
        for &p in &past {
            mem.push(p);
        }
        let m = oracle_memory_length(alpha).min(past.len());
        let (mut num, mut den) = (current, 1.0);
        for k in 1..=m {
            num += alpha.powi(k as i32) * past[past.len() - k];
            den += alpha.powi(k as i32);
        }
        worst_smooth = worst_smooth.max((mem.smoothed(current) - num / den).abs());

        // random population; agent 0 is the subject
        let n = rng.gen_range(1..40);
        let pays: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..8.0)).collect();
        let acts: Vec<DilemmaAction> = (0..n).map(|_| random_action(&mut rng)).collect();
        let nbs: [DilemmaAction; 4] = std::array::from_fn(|_| random_action(&mut rng));
        let mine = acts[0];
        let other = mine.other();
        let same = nbs.iter().filter(|&&a| a == mine).count() as f64;
        let diff = 4.0 - same;
        let class: Vec<f64> = pays.iter().zip(&acts).filter(|(_, &a)| a == other).map(|(&p, _)| p).collect();
        let mean_other = if class.is_empty() { 0.0 } else { class.iter().sum::<f64>() / class.len() as f64 };
        let expected = ((same + 1.0) * pays[0] - diff * mean_other) / 5.0;
        let avg = population_averages(&pays, &acts);
        let u = counterfactual_utility(pays[0], mine, &nbs, &avg);
        worst_utility = worst_utility.max((u - expected).abs());

        let uniform = [mine; 4];
        identity_ok &= counterfactual_utility(pays[0], mine, &uniform, &avg) == pays[0];
    }
    let pass = worst_smooth <= 1e-12 && worst_utility <= 1e-12 && identity_ok;
    report(
        3,
        "smoothing / utility oracles",
        pass,
        &format!(
            "max smoothing err {worst_smooth:.2e}, max utility err {worst_utility:.2e} (tol 1e-12), U=R identity exact: {identity_ok}"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

fn batch_loss(
    online: &QNetwork<f64>,
    target: &QNetwork<f64>,
    batch: &[TransitionRef<'_, f64>],
    weights: &[f64],
) -> f64 {
    // direct evaluation, independent of the gradient routine
    let gamma = 0.99;
    let mut total = 0.0;
    for (t, w) in batch.iter().zip(weights) {
        let q = online.forward(t.state).unwrap()[t.action];
        let next = target.forward(t.next_state).unwrap();
        let y = t.utility + gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        total += w * (y - q).powi(2);
    }
    total / batch.len() as f64
}

#[test]
fn c04_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC04);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let input = rng.gen_range(2..12);
        let hidden = rng.gen_range(3..10);
        let output = rng.gen_range(2..6);
        let online = QNetwork::<f64>::new(input, hidden, output, &mut rng).unwrap();
        let target = QNetwork::<f64>::new(input, hidden, output, &mut rng).unwrap();
        let size = rng.gen_range(1..9);
        let states: Vec<Vec<f64>> = (0..2 * size)
            .map(|_| (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let actions: Vec<usize> = (0..size).map(|_| rng.gen_range(0..output)).collect();
        let utilities: Vec<f64> = (0..size).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let weights: Vec<f64> = (0..size).map(|_| rng.gen_range(0.1..1.0)).collect();
        let batch: Vec<TransitionRef<'_, f64>> = (0..size)
            .map(|k| TransitionRef {
                state: &states[2 * k],
                action: actions[k],
                utility: utilities[k],
                next_state: &states[2 * k + 1],
            })
            .collect();

        let mut grad = vec![0.0; online.param_count()];
        q_loss_and_gradient(&online, &target, &batch, 0.99, &weights, &mut grad).unwrap();
        for p in 0..online.param_count() {
            let mut plus = online.clone();
            plus.params_mut()[p] += h;
            let mut minus = online.clone();
            minus.params_mut()[p] -= h;
            let fd = (batch_loss(&plus, &target, &batch, &weights) - batch_loss(&minus, &target, &batch, &weights))
                / (2.0 * h);
            let scale = grad[p].abs().max(fd.abs());
            if scale > 0.0 {
                worst = worst.max((grad[p] - fd).abs() / scale.max(1e-8));
            }
        }
    }
    let pass = worst < 1e-4;
    report(4, "gradient check", pass, &format!("max relative error {worst:.2e} over 20 nets (tol 1e-4)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 5

#[test]
fn c05_prioritized_sampling_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC05);
    let n = 40;
    let priorities: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..5.0)).collect();
    let mut buf = PrioritizedReplayBuffer::<f64>::new(n, 1, 0.6).unwrap();
    for i in 0..n {
        buf.add(&[i as f64], 0, 0.0, &[0.0]);
    }
    let idx: Vec<usize> = (0..n).collect();
    let td: Vec<f64> = priorities.iter().map(|p| p - PRIORITY_FLOOR).collect();
    buf.update_priorities(&idx, &td);

    let scaled: Vec<f64> = priorities.iter().map(|p| p.powf(0.6)).collect();
    let total: f64 = scaled.iter().sum();
    let draws = 100_000;
    let mut counts = vec![0usize; n];
    for _ in 0..draws / 1000 {
        for i in buf.sample(1000, 0.4, &mut rng).unwrap().indices {
            counts[i] += 1;
        }
    }
    let chi2: f64 = counts
        .iter()
        .zip(&scaled)
        .map(|(&c, &s)| {
            let e = draws as f64 * s / total;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(1.0 - 0.001);

    let mut uniform = PrioritizedReplayBuffer::<f64>::new(16, 1, 0.6).unwrap();
    for i in 0..16 {
        uniform.add(&[i as f64], 0, 0.0, &[0.0]);
    }
    let weights = uniform.sample(256, 1.0, &mut rng).unwrap().weights;
    let weights_ok = weights.iter().all(|&w| relative_eq!(w, 1.0, epsilon = 1e-12));

    let pass = chi2 < critical && weights_ok;
    report(
        5,
        "prioritized sampling",
        pass,
        &format!("chi2 = {chi2:.2} < {critical:.2} (df {}, p 0.001); uniform beta=1 weights all 1: {weights_ok}", n - 1),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6

#[test]
fn c06_fermi_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC06);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-5.0..5.0);
        let y: f64 = rng.gen_range(-5.0..5.0);
        let k: f64 = rng.gen_range(0.01..3.0);
        let s = fermi_adopt_probability(x, y, k).unwrap() + fermi_adopt_probability(y, x, k).unwrap();
        worst = worst.max((s - 1.0).abs());
    }
    let p: f64 = fermi_adopt_probability(1.0, 1.1, 0.1).unwrap();
    let pass = worst <= 1e-12 && (p - 0.731058).abs() <= 1e-6;
    report(
        6,
        "fermi rule",
        pass,
        &format!("max |p(x,y)+p(y,x)−1| = {worst:.2e} (tol 1e-12); p(ΔR=0.1, K=0.1) = {p:.7} (target 0.731058 ± 1e-6)"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7

#[test]
fn c07_determinism_across_parallelism() {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut outputs = Vec::new();
    for (dir, threads) in dirs.iter().zip([1usize, 1, 3]) {
        let cfg = ExperimentConfig {
            side: 5,
            episodes: 50,
            arenas: 3,
            seeds: 1,
            seed: 17,
            variant: AgentVariant::Dual,
            out_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg, Some(threads)).unwrap();
        let mut bytes = std::fs::read(&report.metrics).unwrap();
        for path in &report.arena_metrics {
            bytes.extend(std::fs::read(path).unwrap());
        }
        outputs.push(bytes);
    }
    let repeat = outputs[0] == outputs[1];
    let parallel = outputs[0] == outputs[2];
    let pass = repeat && parallel && !outputs[0].is_empty();
    report(
        7,
        "determinism",
        pass,
        &format!("same seed byte-identical: {repeat}; 1 vs 3 worker threads byte-identical: {parallel}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

/// Mean cooperation over the last `tail` emitted episodes, per seed.
fn final_coop(rows: &[MetricsRow], tail: usize) -> Vec<f64> {
    seed_tail_means(rows, tail).values().map(|v| v[0].unwrap()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn train_seeds(cfg: &ExperimentConfig, seeds: std::ops::Range<u64>) -> Vec<MetricsRow> {
    seeds.flat_map(|seed| run_arena(cfg, seed, 0).unwrap().1).collect()
}

#[test]
fn c08_imitation_baseline_level() {
    let cfg = ExperimentConfig {
        side: 30,
        b: 1.1,
        alpha: 0.6,
        fermi_k: 0.1,
        variant: AgentVariant::Egt,
        episodes: 500,
        steps_per_episode: 10,
        arenas: 1,
        ..ExperimentConfig::default()
    };
    let coop = final_coop(&train_seeds(&cfg, 0..5), 10);
    let m = mean(&coop);
    let pass = (m - 0.54).abs() <= 0.15;
    report(
        8,
        "imitation baseline level",
        pass,
        &format!("mean final cooperation {m:.4} over 5 seeds {coop:.3?} after 5000 MC steps (target 0.54 ± 0.15)"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 9-11

struct Behaviour {
    dual: Vec<f64>,
    dilemma_only: Vec<f64>,
    egt: Vec<f64>,
    /// Cross-seed means of CR.C, CR.D, EC.C, EC.D over the last 100 episodes.
    selection: [f64; 4],
}

fn behaviour() -> &'static Behaviour {
    static CELL: OnceLock<Behaviour> = OnceLock::new();
    CELL.get_or_init(|| {
        let base = ExperimentConfig {
            side: 10,
            b: 1.1,
            window: 4,
            episodes: 1000,
            steps_per_episode: 10,
            arenas: 1,
            ..ExperimentConfig::default()
        };
        let with = |variant| ExperimentConfig { variant, ..base.clone() };
        let dual_rows = train_seeds(&with(AgentVariant::Dual), 0..3);
        let tails = seed_tail_means(&dual_rows, 100);
        let col = |name: &str| {
            let k = MetricsRecord::COLUMNS.iter().position(|c| *c == name).unwrap();
            mean(&tails.values().filter_map(|v| v[k]).collect::<Vec<_>>())
        };
        Behaviour {
            dual: final_coop(&dual_rows, 10),
            dilemma_only: final_coop(&train_seeds(&with(AgentVariant::DilemmaOnly), 0..3), 10),
            egt: final_coop(&train_seeds(&with(AgentVariant::Egt), 0..3), 10),
            selection: [col("cr_c"), col("cr_d"), col("ec_c"), col("ec_d")],
        }
    })
}

#[test]
fn c09_learning_beats_imitation() {
    let b = behaviour();
    let wins = b.dual.iter().zip(&b.egt).filter(|(d, e)| d > e).count();
    let pass = wins >= 2 && mean(&b.dual) > mean(&b.egt);
    report(
        9,
        "learning beats imitation",
        pass,
        &format!(
            "dual {:.3?} (mean {:.4}) vs imitation {:.3?} (mean {:.4}); seeds won {wins}/3 (need ≥ 2 and a higher mean)",
            b.dual,
            mean(&b.dual),
            b.egt,
            mean(&b.egt)
        ),
    );
    assert!(pass);
}

#[test]
fn c10_selection_favours_cooperators() {
    let [cr_c, cr_d, ec_c, ec_d] = behaviour().selection;
    let pass = cr_c > cr_d && ec_c > ec_d;
    report(
        10,
        "selection favours cooperators",
        pass,
        &format!("final 100 episodes: CR.C {cr_c:.4} vs CR.D {cr_d:.4}; EC.C {ec_c:.4} vs EC.D {ec_d:.4}"),
    );
    assert!(pass);
}

#[test]
fn c11_ablation_ordering() {
    let b = behaviour();
    let (d, o, e) = (mean(&b.dual), mean(&b.dilemma_only), mean(&b.egt));
    let pass = d >= o && o >= e;
    report(
        11,
        "ablation ordering",
        pass,
        &format!("seed means: dual {d:.4} ≥ dilemma-only {o:.4} ≥ imitation {e:.4}"),
    );
    assert!(pass);
}
