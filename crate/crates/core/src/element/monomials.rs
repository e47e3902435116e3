use crate::error::{Error, Result};

/// Multi-index `(α1, α2, α3)`; unused axes stay zero.
pub type MultiIndex = [u8; 3];

/// An ordered list of monomials `ξ^e` on the reference cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialSet {
    dim: usize,
    exps: Vec<MultiIndex>,
}

impl MonomialSet {
    /// The Morley shape space: `P2 + span{ξ1³, ξ2³}` in 2D and
    /// `P2 + span{ξ1ξ2ξ3, ξ1³, ξ2³, ξ3³}` in 3D.
    pub fn morley(dim: usize) -> Self {
        let exps = match dim {
            2 => vec![
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [1, 1, 0],
                [2, 0, 0],
                [0, 2, 0],
                [3, 0, 0],
                [0, 3, 0],
            ],
            3 => vec![
                [0, 0, 0],
                [1, 0, 0],
                [0, 1, 0],
                [0, 0, 1],
                [1, 1, 0],
                [1, 0, 1],
                [0, 1, 1],
                [2, 0, 0],
                [0, 2, 0],
                [0, 0, 2],
                [1, 1, 1],
                [3, 0, 0],
                [0, 3, 0],
                [0, 0, 3],
            ],
            _ => panic!("unsupported dimension {dim}"),
        };
        Self { dim, exps }
    }

    /// All monomials of degree at most 3 in each variable (`Q3`), first axis fastest.
    pub fn tensor_cubic(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
        let count = 4usize.pow(dim as u32);
        let exps = (0..count)
            .map(|i| {
                let mut e = [0u8; 3];
                for (a, x) in e.iter_mut().enumerate().take(dim) {
                    *x = ((i >> (2 * a)) & 3) as u8;
                }
                e
            })
            .collect();
        Self { dim, exps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.exps
    }

    /// Position of the monomial with exponents `e`, if present.
    pub fn position(&self, e: MultiIndex) -> Option<usize> {
        self.exps.iter().position(|&x| x == e)
    }

    /// Reference derivative `∂^α p(ξ)` of `p = Σ coeffs[j] ξ^{e_j}`.
    pub fn eval(&self, coeffs: &[f64], xi: &[f64; 3], alpha: MultiIndex) -> f64 {
        debug_assert_eq!(coeffs.len(), self.exps.len());
        let pw = powers(xi);
        let mut acc = 0.0;
        for (c, e) in coeffs.iter().zip(&self.exps) {
            if *c != 0.0 {
                acc += c * monomial_derivative(&pw, *e, alpha);
            }
        }
        acc
    }

    /// Like [`MonomialSet::eval`] but rejects derivative orders above 3.
    pub fn eval_checked(&self, coeffs: &[f64], xi: &[f64; 3], alpha: MultiIndex) -> Result<f64> {
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        if order > 3 {
            return Err(Error::DerivativeOrder(order));
        }
        Ok(self.eval(coeffs, xi, alpha))
    }

    /// Full reference Hessian at `ξ`.
    pub fn hessian(&self, coeffs: &[f64], xi: &[f64; 3]) -> [[f64; 3]; 3] {
        let pw = powers(xi);
        let mut h = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in i..self.dim {
                let mut alpha = [0u8; 3];
                alpha[i] += 1;
                alpha[j] += 1;
                let mut acc = 0.0;
                for (c, e) in coeffs.iter().zip(&self.exps) {
                    if *c != 0.0 {
                        acc += c * monomial_derivative(&pw, *e, alpha);
                    }
                }
                h[i][j] = acc;
                h[j][i] = acc;
            }
        }
        h
    }
}

/// `pw[a][k] = ξ_a^k` for `k ≤ 3`.
fn powers(xi: &[f64; 3]) -> [[f64; 4]; 3] {
    let mut pw = [[1.0; 4]; 3];
    for a in 0..3 {
        for k in 1..4 {
            pw[a][k] = pw[a][k - 1] * xi[a];
        }
    }
    pw
}

fn monomial_derivative(pw: &[[f64; 4]; 3], e: MultiIndex, alpha: MultiIndex) -> f64 {
    let mut v = 1.0;
    for a in 0..3 {
        let (ea, aa) = (e[a] as usize, alpha[a] as usize);
        if aa > ea {
            return 0.0;
        }
        v *= falling(ea, aa) * pw[a][ea - aa];
    }
    v
}

/// `e (e-1) ... (e-k+1)`.
fn falling(e: usize, k: usize) -> f64 {
    (0..k).map(|i| (e - i) as f64).product()
}

/// `(1/2) ∫_{-1}^{1} ξ^p dξ`.
pub(crate) fn mean_power(p: u8) -> f64 {
    if p % 2 == 1 {
        0.0
    } else {
        1.0 / (p as f64 + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(MonomialSet::morley(2).len(), 8);
        assert_eq!(MonomialSet::morley(3).len(), 14);
        assert_eq!(MonomialSet::tensor_cubic(2).len(), 16);
        assert_eq!(MonomialSet::tensor_cubic(3).len(), 64);
    }

    #[test]
    fn derivatives_of_single_monomials() {
        let m = MonomialSet::morley(2);
        let mut c = vec![0.0; 8];
        c[m.position([2, 0, 0]).unwrap()] = 1.0;
        assert_eq!(m.eval(&c, &[0.0, 0.3, 0.0], [2, 0, 0]), 2.0);
        let mut c = vec![0.0; 8];
        c[m.position([3, 0, 0]).unwrap()] = 1.0;
        for x in [-1.0, -0.2, 0.7] {
            assert_eq!(m.eval(&c, &[x, 0.4, 0.0], [3, 0, 0]), 6.0);
        }
        assert!(m.eval_checked(&c, &[0.0; 3], [3, 1, 0]).is_err());
    }

    #[test]
    fn hessian_matches_eval() {
        let m = MonomialSet::morley(3);
        let c: Vec<f64> = (0..14).map(|i| 0.3 * i as f64 - 1.0).collect();
        let xi = [0.2, -0.7, 0.5];
        let h = m.hessian(&c, &xi);
        assert_eq!(h[0][1], m.eval(&c, &xi, [1, 1, 0]));
        assert_eq!(h[2][2], m.eval(&c, &xi, [0, 0, 2]));
        assert_eq!(h[1][2], h[2][1]);
    }
}
