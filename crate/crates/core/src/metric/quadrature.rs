use crate::scalar::{lit, Real};

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T: Real> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule; nodes come from Newton iteration on `P_n` in `f64`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
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
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1, 1] to [0, 1], ascending.
            nodes.push(lit(0.5 * (1.0 - x)));
            weights.push(lit(0.5 * w));
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`; `None` if any sample is `None`.
    pub fn integrate<F: FnMut(T) -> Option<T>>(&self, a: T, b: T, mut f: F) -> Option<T> {
        let h = b - a;
        let mut sum = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += *w * f(a + h * *x)?;
        }
        Some(sum * h)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
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
