use super::basis::NodalBasis;
use super::quadrature::QuadRule;

/// Element matrix `∫_K ∇²φ_i : ∇²φ_j dx` for one cell of half-width `h★`,
/// acting on physical DOFs (vertex values and mean `+x_a` derivatives).
#[derive(Debug, Clone)]
pub struct LocalStiffness {
    n: usize,
    half: f64,
    values: Vec<f64>,
}

/// Scale turning physical local DOFs into reference DOFs: 1 for vertex
/// values, `h★` for facet derivatives (`∂/∂ξ = h★ ∂/∂x`).
pub fn dof_scaling(dim: usize, half: f64) -> Vec<f64> {
    let nv = 1 << dim;
    (0..nv + 2 * dim)
        .map(|i| if i < nv { 1.0 } else { half })
        .collect()
}

pub fn local_stiffness(basis: &NodalBasis, half: f64) -> LocalStiffness {
    LocalStiffness::new(basis, half)
}

impl LocalStiffness {
    pub fn new(basis: &NodalBasis, half: f64) -> Self {
        assert!(half > 0.0);
        let dim = basis.dim();
        let n = basis.len();
        // Reference Hessians are affine per axis, so products are quadratic per axis.
        let rule = QuadRule::new(dim, 2).expect("valid rule");
        let hess: Vec<Vec<[[f64; 3]; 3]>> = rule
            .points()
            .iter()
            .map(|p| {
                (0..n)
                    .map(|i| basis.monomials().hessian(basis.function(i), p))
                    .collect()
            })
            .collect();
        let scale = dof_scaling(dim, half);
        let jac = half.powi(dim as i32 - 4);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (g, w) in rule.weights().iter().enumerate() {
                    acc += w * frobenius(&hess[g][i], &hess[g][j], dim);
                }
                let v = jac * scale[i] * scale[j] * acc;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, half, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn half(&self) -> f64 {
        self.half
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn frobenius(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3], dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::reference_basis;
    use nalgebra::DMatrix;

    #[test]
    fn symmetric_with_affine_kernel() {
        for (dim, rank) in [(2, 5), (3, 10)] {
            let b = reference_basis(dim).unwrap();
            let m = local_stiffness(&b, 0.05);
            let n = m.size();
            let mat = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
            assert_eq!(mat, mat.transpose());
            let sv = mat.singular_values();
            let tol = sv.max() * 1e-10;
            assert_eq!(sv.iter().filter(|&&s| s > tol).count(), rank, "dim {dim}");
            let eig = mat.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e > -tol));
        }
    }
}
