//! Gauss–Legendre rules and the deterministic map/reduce used by every
//! surface integral.
//!
//! Work items are evaluated independently (in parallel with the `parallel`
//! feature) and combined by pairwise summation in a fixed order, so results
//! are bit-identical for any thread count.

use std::sync::OnceLock;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Largest rule order cached.
pub const MAX_GAUSS_POINTS: usize = 16;

impl GaussRule {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn compute(n: usize) -> GaussRule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Cached rule with `n` points, `1 ≤ n ≤ 16`.
    pub fn get(n: usize) -> &'static GaussRule {
        static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
        let rules = RULES.get_or_init(|| (1..=MAX_GAUSS_POINTS).map(GaussRule::compute).collect());
        &rules[n - 1]
    }

    /// Iterates `(x, w)` mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation over a fixed order.
pub fn pairwise_sum<const N: usize>(items: &[[f64; N]]) -> [f64; N] {
    match items.len() {
        0 => [0.0; N],
        1 => items[0],
        len => {
            let (a, b) = items.split_at(len / 2);
            let (x, y) = (pairwise_sum(a), pairwise_sum(b));
            let mut out = [0.0; N];
            for i in 0..N {
                out[i] = x[i] + y[i];
            }
            out
        }
    }
}

/// Order-preserving map over work items, parallel when the feature is on.
pub fn ordered_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs `f` with at most `threads` workers (sequentially without the
/// `parallel` feature). `threads = 0` uses the global pool.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let g = GaussRule::compute(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((g.nodes[0] + x).abs() < 1e-15 && (g.nodes[1] - x).abs() < 1e-15);
        assert!((g.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=MAX_GAUSS_POINTS {
            let g = GaussRule::get(n);
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let items: Vec<[f64; 2]> = (0..1000).map(|i| [1.0 / (i as f64 + 1.0), i as f64]).collect();
        let a = pairwise_sum(&items);
        let b = pairwise_sum(&items);
        assert_eq!(a, b);
        assert!((a[1] - 499_500.0).abs() < 1e-9);
    }
}
