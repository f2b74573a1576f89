//! Independent brute-force cross-checks for the constructive
//! characterizations: random utility and belief samplers, Monte Carlo
//! falsifiers for the superiority notions, a grid oracle for the lottery
//! check, and Fourier-Motzkin elimination for the LP path.
//!
//! Sampling can only falsify, never verify; the verification authority is
//! always the characterization plus a constructive witness. Everything here
//! is deterministic in the seed, independent of thread count: the trial
//! stream splits into fixed chunks, each chunk draws from its own
//! counter-derived stream, and the first hit is the one with the lowest
//! global trial index.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lottery::{fosd, sosd, Lottery};
use crate::problem::{expected_utility, Belief, DEFAULT_EPS};
use crate::superiority::{ViolatedClaim, Witness};
use crate::utility::UtilityFn;
use crate::UtilityClass;

/// Configuration shared by the samplers and falsifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Inclusive bounds on the number of utility knots.
    pub knot_count: (usize, usize),
    /// Payoff interval the knots cover.
    pub payoff_range: (f64, f64),
    pub trials: usize,
    /// Probability of drawing a two-point belief instead of a flat
    /// Dirichlet draw; counterexamples concentrate on simplex edges.
    pub pairwise_bias: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            knot_count: (2, 6),
            payoff_range: (-10.0, 10.0),
            trials: 10_000,
            pairwise_bias: 0.5,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Invalid {
                what: "sampler config",
                detail: "trials must be at least 1".into(),
            });
        }
        if self.knot_count.0 == 0 || self.knot_count.0 > self.knot_count.1 {
            return Err(Error::Invalid {
                what: "sampler config",
                detail: format!("empty knot range {:?}", self.knot_count),
            });
        }
        if !(self.payoff_range.0 < self.payoff_range.1) {
            return Err(Error::Invalid {
                what: "sampler config",
                detail: format!("empty payoff range {:?}", self.payoff_range),
            });
        }
        if !(0.0..=1.0).contains(&self.pairwise_bias) {
            return Err(Error::Invalid {
                what: "sampler config",
                detail: format!("pairwise bias {} outside [0,1]", self.pairwise_bias),
            });
        }
        Ok(())
    }

    /// The counter-derived stream used by chunk `stream` of the trial loop.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

const NEAR_KINK_RATE: f64 = 0.2;
const NEAR_KINK_FACTOR: f64 = 1e3;

fn sample_knot_xs(cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(cfg.knot_count.0..=cfg.knot_count.1);
    let (lo, hi) = cfg.payoff_range;
    let gap = (hi - lo) * 1e-6;
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..xs.len() {
        if xs[i] < xs[i - 1] + gap {
            xs[i] = xs[i - 1] + gap;
        }
    }
    xs
}

fn sample_slopes(count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut slopes: Vec<f64> = (0..count)
        .map(|_| (rng.gen_range((0.01_f64).ln()..(10.0_f64).ln())).exp())
        .collect();
    if rng.gen_bool(NEAR_KINK_RATE) {
        let i = rng.gen_range(0..count);
        slopes[i] *= NEAR_KINK_FACTOR;
    }
    slopes
}

fn build_utility(xs: Vec<f64>, slopes: Vec<f64>, concave: bool) -> UtilityFn {
    let k = xs.len();
    let mut knots = Vec::with_capacity(k);
    let mut y = 0.0;
    knots.push((xs[0], y));
    for i in 1..k {
        y += slopes[i] * (xs[i] - xs[i - 1]);
        knots.push((xs[i], y));
    }
    UtilityFn::new(knots, slopes[0], slopes[k], concave)
        .expect("sampled slopes are positive and ordered by construction")
}

/// Random strictly increasing concave utility: positive slopes sorted
/// descending, with a near-kink slope ratio of at least 1e3 injected at
/// rate 0.2 to mimic the witness constructions.
pub fn sample_concave_utility(cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> UtilityFn {
    let xs = sample_knot_xs(cfg, rng);
    let mut slopes = sample_slopes(xs.len() + 1, rng);
    slopes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    build_utility(xs, slopes, true)
}

/// Random strictly increasing utility with unordered slopes.
pub fn sample_monotone_utility(cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> UtilityFn {
    let xs = sample_knot_xs(cfg, rng);
    let slopes = sample_slopes(xs.len() + 1, rng);
    build_utility(xs, slopes, false)
}

fn sample_utility(cfg: &SamplerConfig, class: UtilityClass, rng: &mut ChaCha8Rng) -> UtilityFn {
    match class {
        UtilityClass::RiskAverse => sample_concave_utility(cfg, rng),
        UtilityClass::Monotone => sample_monotone_utility(cfg, rng),
    }
}

/// Random belief: with probability `pairwise_bias` an interior point of a
/// random simplex edge, otherwise a flat Dirichlet draw.
pub fn sample_belief(cfg: &SamplerConfig, n: usize, rng: &mut ChaCha8Rng) -> Belief {
    if n >= 2 && rng.gen_bool(cfg.pairwise_bias) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let w = rng.gen_range(f64::EPSILON..1.0);
        return Belief::two_point(n, i, j, w).expect("pair indices are distinct");
    }
    let mut probs: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Belief::new(probs).expect("normalized exponentials form a belief")
}

struct Hit {
    index: usize,
    witness: Witness,
}

/// Searches `cfg.trials` sampled (utility, belief) pairs for one where the
/// agent weakly prefers `a` to every alternative yet strictly prefers some
/// alternative to `ahat` (or the strict-preference clause fails). Returns
/// the certified first hit, or `None`.
pub fn falsify_superiority_vs_all(
    a: &[f64],
    alternatives: &[&[f64]],
    ahat: &[f64],
    class: UtilityClass,
    cfg: &SamplerConfig,
) -> Result<Option<Witness>> {
    cfg.validate()?;
    if alternatives.is_empty() {
        return Err(Error::Domain("need at least one alternative".into()));
    }
    let n = a.len();
    for alt in alternatives {
        if alt.len() != n || ahat.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: ahat.len().min(alt.len()),
            });
        }
    }
    let eps = DEFAULT_EPS;
    let claim = match (class, alternatives.len()) {
        (UtilityClass::Monotone, _) => ViolatedClaim::NotBBetter,
        (UtilityClass::RiskAverse, 1) => ViolatedClaim::NotBSuperior,
        (UtilityClass::RiskAverse, _) => ViolatedClaim::NotSetSuperior,
    };

    const CHUNK: usize = 1024;
    let n_chunks = cfg.trials.div_ceil(CHUNK);
    let wave = rayon::current_num_threads().max(1) * 2;

    let run_chunk = |chunk_idx: usize| -> Option<Hit> {
        let mut rng = cfg.rng(chunk_idx as u64);
        let start = chunk_idx * CHUNK;
        let len = CHUNK.min(cfg.trials - start);
        for t in 0..len {
            let u = sample_utility(cfg, class, &mut rng);
            let belief = sample_belief(cfg, n, &mut rng);
            let eu_a = expected_utility(a, &belief, &u).ok()?;
            let mut eu_best = f64::NEG_INFINITY;
            for alt in alternatives {
                let v = expected_utility(alt, &belief, &u).ok()?;
                if v > eu_best {
                    eu_best = v;
                }
            }
            let eu_ahat = expected_utility(ahat, &belief, &u).ok()?;
            let weak_violation = eu_a >= eu_best && eu_ahat < eu_best - eps;
            let strict_violation = eu_a > eu_best + eps && eu_ahat <= eu_best;
            if weak_violation || strict_violation {
                if let Ok(w) = Witness::certify(a, alternatives, ahat, u, belief, claim, eps) {
                    return Some(Hit {
                        index: start + t,
                        witness: w,
                    });
                }
            }
        }
        None
    };

    let mut first = None;
    let mut next = 0;
    while next < n_chunks && first.is_none() {
        let upto = (next + wave).min(n_chunks);
        first = (next..upto)
            .into_par_iter()
            .filter_map(run_chunk)
            .min_by_key(|h| h.index);
        next = upto;
    }
    Ok(first.map(|h| h.witness))
}

/// Pairwise version of [`falsify_superiority_vs_all`].
pub fn falsify_superiority(
    a: &[f64],
    b: &[f64],
    ahat: &[f64],
    class: UtilityClass,
    cfg: &SamplerConfig,
) -> Result<Option<Witness>> {
    falsify_superiority_vs_all(a, &[b], ahat, class, cfg)
}

/// Scans mixture weights on a grid for the two-lottery improvement
/// condition: does some `lambda` make
/// `lambda L_b + (1-lambda) L_ahat` dominate
/// `lambda L_a + (1-lambda) L_b` in the given class?
pub fn grid_lottery_oracle(
    l_a: &Lottery,
    l_ahat: &Lottery,
    l_b: &Lottery,
    class: UtilityClass,
    step: f64,
) -> Result<bool> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::Domain(format!("grid step {step} outside (0, 0.1]")));
    }
    let mut lambda = 0.0;
    loop {
        let lhs = Lottery::mix(&[(lambda, l_b), (1.0 - lambda, l_ahat)])?;
        let rhs = Lottery::mix(&[(lambda, l_a), (1.0 - lambda, l_b)])?;
        let ok = match class {
            UtilityClass::Monotone => fosd(&lhs, &rhs, DEFAULT_EPS),
            UtilityClass::RiskAverse => sosd(&lhs, &rhs, DEFAULT_EPS),
        };
        if ok {
            return Ok(true);
        }
        if lambda >= 1.0 {
            return Ok(false);
        }
        lambda = (lambda + step).min(1.0);
    }
}

/// Fourier-Motzkin feasibility of `A x <= c` with `x >= 0`: eliminates
/// variables one at a time and checks the surviving constant constraints.
/// Exponential in principle; intended as an oracle for small systems.
pub fn fourier_motzkin_feasible(a_ub: &[Vec<f64>], c: &[f64]) -> bool {
    let n = a_ub.first().map_or(0, Vec::len);
    let mut rows: Vec<(Vec<f64>, f64)> = a_ub.iter().zip(c).map(|(r, &b)| (r.clone(), b)).collect();
    for i in 0..n {
        let mut sign_row = vec![0.0; n];
        sign_row[i] = -1.0;
        rows.push((sign_row, 0.0));
    }
    const COEF_TOL: f64 = 1e-12;
    for var in 0..n {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut rest = Vec::new();
        for (coeffs, b) in rows {
            let c_var = coeffs[var];
            if c_var > COEF_TOL {
                pos.push((coeffs, b));
            } else if c_var < -COEF_TOL {
                neg.push((coeffs, b));
            } else {
                rest.push((coeffs, b));
            }
        }
        for (pc, pb) in &pos {
            for (nc, nb) in &neg {
                let scale_p = 1.0 / pc[var];
                let scale_n = -1.0 / nc[var];
                let coeffs: Vec<f64> = pc
                    .iter()
                    .zip(nc)
                    .map(|(&p, &q)| p * scale_p + q * scale_n)
                    .collect();
                rest.push((coeffs, pb * scale_p + nb * scale_n));
            }
        }
        rows = rest;
    }
    rows.iter().all(|(_, b)| *b >= -1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{lp_feasible, Feasibility};

    #[test]
    fn fixed_seed_reproduces_utilities() {
        let cfg = SamplerConfig::with_seed(42);
        let a: Vec<_> = {
            let mut rng = cfg.rng(0);
            (0..5)
                .map(|_| sample_concave_utility(&cfg, &mut rng))
                .collect()
        };
        let b: Vec<_> = {
            let mut rng = cfg.rng(0);
            (0..5)
                .map(|_| sample_concave_utility(&cfg, &mut rng))
                .collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn concave_samples_validate() {
        let cfg = SamplerConfig::with_seed(7);
        let mut rng = cfg.rng(0);
        for _ in 0..200 {
            let u = sample_concave_utility(&cfg, &mut rng);
            assert!(u.is_concave());
            assert!(u.segment_slopes().iter().all(|&s| s > 0.0));
        }
    }

    #[test]
    fn near_kink_rate_is_respected() {
        let cfg = SamplerConfig::with_seed(3);
        let mut rng = cfg.rng(0);
        let mut extreme = 0;
        let total = 10_000;
        for _ in 0..total {
            let u = sample_concave_utility(&cfg, &mut rng);
            let slopes = u.segment_slopes();
            let max = slopes.iter().cloned().fold(f64::MIN, f64::max);
            let min = slopes.iter().cloned().fold(f64::MAX, f64::min);
            if max / min >= 1e3 {
                extreme += 1;
            }
        }
        assert!(
            extreme >= total / 10,
            "only {extreme}/{total} samples had an extreme slope ratio"
        );
    }

    #[test]
    fn beliefs_are_valid_and_edge_biased() {
        let cfg = SamplerConfig {
            pairwise_bias: 1.0,
            ..SamplerConfig::with_seed(5)
        };
        let mut rng = cfg.rng(0);
        for _ in 0..200 {
            let b = sample_belief(&cfg, 4, &mut rng);
            let nonzero = b.probs().iter().filter(|&&p| p > 0.0).count();
            assert_eq!(nonzero, 2);
        }
        let cfg = SamplerConfig {
            pairwise_bias: 0.0,
            ..SamplerConfig::with_seed(5)
        };
        let mut rng = cfg.rng(0);
        for _ in 0..200 {
            let b = sample_belief(&cfg, 4, &mut rng);
            assert!((b.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn falsifier_finds_crossed_interval_counterexample() {
        let cfg = SamplerConfig::with_seed(7);
        let w = falsify_superiority(
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[1.5, -0.5],
            UtilityClass::RiskAverse,
            &cfg,
        )
        .unwrap()
        .expect("a counterexample must exist for the crossed interval");
        assert!(w.eu_a > w.eu_b && w.eu_b > w.eu_ahat);
        assert!(w.utility.is_concave());
    }

    #[test]
    fn falsifier_finds_nothing_for_mixture() {
        let cfg = SamplerConfig::with_seed(11);
        let w = falsify_superiority(
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[0.4, 0.6],
            UtilityClass::RiskAverse,
            &cfg,
        )
        .unwrap();
        assert!(
            w.is_none(),
            "no concave counterexample exists for a mixture"
        );
    }

    #[test]
    fn falsifier_breaks_mixture_in_monotone_class() {
        let cfg = SamplerConfig::with_seed(13);
        let w = falsify_superiority(
            &[1.0, 0.0],
            &[0.0, 1.0],
            &[0.4, 0.6],
            UtilityClass::Monotone,
            &cfg,
        )
        .unwrap()
        .expect("a monotone counterexample must exist for a strict mixture");
        assert!(!w.utility.is_concave());
    }

    #[test]
    fn falsifier_is_thread_count_independent() {
        let cfg = SamplerConfig::with_seed(17);
        let run = || {
            falsify_superiority(
                &[1.0, 0.0],
                &[0.0, 1.0],
                &[0.9, 0.05],
                UtilityClass::Monotone,
                &cfg,
            )
            .unwrap()
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(run);
        match (a, b) {
            (Some(x), Some(y)) => {
                assert_eq!(x.belief, y.belief);
                assert_eq!(x.utility, y.utility);
            }
            (None, None) => {}
            other => panic!("thread counts disagreed: {other:?}"),
        }
    }

    #[test]
    fn fourier_motzkin_matches_simplex_on_random_systems() {
        let cfg = SamplerConfig::with_seed(23);
        let mut rng = cfg.rng(0);
        let mut feasible_seen = 0;
        let mut infeasible_seen = 0;
        for _ in 0..60 {
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fm = fourier_motzkin_feasible(&rows, &c);
            let lp = matches!(lp_feasible(&rows, &c).unwrap(), Feasibility::Feasible(_));
            assert_eq!(fm, lp, "rows {rows:?}, c {c:?}");
            if lp {
                feasible_seen += 1;
            } else {
                infeasible_seen += 1;
            }
        }
        assert!(feasible_seen > 0 && infeasible_seen > 0);
    }

    #[test]
    fn grid_oracle_step_domain() {
        let l = Lottery::new(vec![(0.0, 1.0)]).unwrap();
        assert!(matches!(
            grid_lottery_oracle(&l, &l, &l, UtilityClass::Monotone, 0.5),
            Err(Error::Domain(_))
        ));
    }
}
