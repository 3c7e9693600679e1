//! Chebyshev–Gauss–Lobatto nodes, spectral differentiation matrices, and
//! Clenshaw–Curtis quadrature weights on arbitrary intervals [a, b].
//!
//! Nodes are returned *ascending* (x₀ = a, x_N = b); the differentiation
//! matrix and quadrature weights use the same ordering.

use nalgebra::DMatrix;

/// Chebyshev–Gauss–Lobatto nodes on [a, b], ascending, N+1 points.
pub fn nodes(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 1);
    (0..=n)
        .map(|j| {
            let t = (std::f64::consts::PI * j as f64 / n as f64).cos();
            // t runs 1 → −1 as j increases, so (1 − t)/2 runs 0 → 1.
            a + (b - a) * 0.5 * (1.0 - t)
        })
        .collect()
}

/// Spectral differentiation matrix on the nodes of [`nodes`]`(n, a, b)`.
///
/// Entries follow the classical collocation formula with the negative-sum
/// trick on the diagonal for numerical stability; the sign flip and the
/// 2/(b−a) factor account for the affine map from [−1, 1] with reversed
/// orientation.
pub fn diff_matrix(n: usize, a: f64, b: f64) -> DMatrix<f64> {
    assert!(n >= 1);
    let t: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let c = |i: usize| -> f64 {
        let base = if i == 0 || i == n { 2.0 } else { 1.0 };
        base * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = c(i) / c(j) / (t[i] - t[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    // d/dx = (dt/dx) d/dt with t = 1 − 2(x − a)/(b − a).
    d.scale(-2.0 / (b - a))
}

/// Clenshaw–Curtis quadrature weights on the nodes of [`nodes`]`(n, a, b)`:
/// Σⱼ wⱼ f(xⱼ) ≈ ∫ₐᵇ f, exact for polynomials of degree ≤ n.
pub fn clenshaw_curtis(n: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(n >= 1);
    let nf = n as f64;
    let theta: Vec<f64> = (0..=n)
        .map(|j| std::f64::consts::PI * j as f64 / nf)
        .collect();
    let mut w = vec![0.0; n + 1];
    let end = if n % 2 == 0 {
        1.0 / (nf * nf - 1.0)
    } else {
        1.0 / (nf * nf)
    };
    w[0] = end;
    w[n] = end;
    for j in 1..n {
        let mut v = 1.0;
        if n % 2 == 0 {
            for k in 1..n / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
            v -= (nf * theta[j]).cos() / (nf * nf - 1.0);
        } else {
            for k in 1..=(n - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        w[j] = 2.0 * v / nf;
    }
    // Scale from [−1, 1]; weights are symmetric so the node reversal is moot.
    let half = (b - a) * 0.5;
    for wj in &mut w {
        *wj *= half;
    }
    w
}
