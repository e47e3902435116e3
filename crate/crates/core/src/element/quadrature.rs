use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]` with `q` points.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let m = q.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre rule on `[-1, 1]^dim`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    dim: usize,
    q: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

pub fn gauss_rule(dim: usize, q: usize) -> Result<QuadRule> {
    QuadRule::new(dim, q)
}

impl QuadRule {
    /// `dim` may be 0 (a single point of weight 1), which is what a facet
    /// rule reduces to on a 1D mesh.
    pub fn new(dim: usize, q: usize) -> Result<Self> {
        if !(1..=10).contains(&q) {
            return Err(Error::QuadratureOrder(q));
        }
        if dim > 3 {
            return Err(Error::Dimension(dim));
        }
        let (x, w) = gauss_legendre(q);
        let count = q.pow(dim as u32);
        let mut points = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for i in 0..count {
            let mut p = [0.0; 3];
            let mut wt = 1.0;
            let mut r = i;
            for c in p.iter_mut().take(dim) {
                *c = x[r % q];
                wt *= w[r % q];
                r /= q;
            }
            points.push(p);
            weights.push(wt);
        }
        Ok(Self {
            dim,
            q,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.q
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}
