//! Two-layer volume fields: Fourier coefficients horizontally, Chebyshev
//! collocation values vertically, with layers stored separately.

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use super::fft::HorizontalTransform;
use super::grid::Grid;
use super::surface::{Surface, SurfaceField};

/// One of the two fluid layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Plus,
    Minus,
}

/// Boundary/interface locations for traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLoc {
    /// x₃ = ℓ from the upper layer.
    SigmaPlus,
    /// x₃ = 0 from above (upper layer).
    SigmaMinusAbove,
    /// x₃ = 0 from below (lower layer).
    SigmaMinusBelow,
    /// x₃ = −b (lower layer bottom).
    SigmaB,
}

/// Scalar field on Ω = Ω₊ ∪ Ω₋. Shape per layer: (m, m, N_v+1) with the
/// vertical index following the ascending node ordering of [`Grid`].
#[derive(Debug, Clone)]
pub struct VolumeField {
    pub plus: Array3<Complex64>,
    pub minus: Array3<Complex64>,
}

impl VolumeField {
    pub fn zeros(grid: &Grid) -> Self {
        let m = grid.m();
        Self {
            plus: Array3::zeros((m, m, grid.n_v_plus + 1)),
            minus: Array3::zeros((m, m, grid.n_v_minus + 1)),
        }
    }

    /// Horizontally uniform field from vertical profiles ρ(x₃) per layer.
    pub fn from_profiles(
        grid: &Grid,
        f_plus: impl Fn(f64) -> f64,
        f_minus: impl Fn(f64) -> f64,
    ) -> Self {
        let mut out = Self::zeros(grid);
        for (j, &x3) in grid.nodes_plus().iter().enumerate() {
            out.plus[(0, 0, j)] = Complex64::new(f_plus(x3), 0.0);
        }
        for (j, &x3) in grid.nodes_minus().iter().enumerate() {
            out.minus[(0, 0, j)] = Complex64::new(f_minus(x3), 0.0);
        }
        out
    }

    pub fn layer(&self, layer: Layer) -> &Array3<Complex64> {
        match layer {
            Layer::Plus => &self.plus,
            Layer::Minus => &self.minus,
        }
    }

    pub fn layer_mut(&mut self, layer: Layer) -> &mut Array3<Complex64> {
        match layer {
            Layer::Plus => &mut self.plus,
            Layer::Minus => &mut self.minus,
        }
    }

    /// ∂_dir for dir ∈ {1, 2}: per-mode multiplication by iξ_dir.
    pub fn d_horizontal(&self, grid: &Grid, dir: usize) -> Self {
        assert!(dir == 1 || dir == 2);
        let mut out = self.clone();
        for arr in [&mut out.plus, &mut out.minus] {
            for i in 0..grid.m() {
                for j in 0..grid.m() {
                    let (x1, x2) = grid.xi(i, j);
                    let f = Complex64::new(0.0, if dir == 1 { x1 } else { x2 });
                    for v in arr.index_axis_mut(Axis(0), i).row_mut(j).iter_mut() {
                        *v *= f;
                    }
                }
            }
        }
        out
    }

    /// ∂₃ by Chebyshev differentiation per layer.
    pub fn d_vertical(&self, grid: &Grid) -> Self {
        let mut out = Self::zeros(grid);
        for (src, dst, d) in [
            (&self.plus, &mut out.plus, grid.diff_plus()),
            (&self.minus, &mut out.minus, grid.diff_minus()),
        ] {
            let n = d.nrows();
            for i in 0..grid.m() {
                for j in 0..grid.m() {
                    for r in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for c in 0..n {
                            acc += d[(r, c)] * src[(i, j, c)];
                        }
                        dst[(i, j, r)] = acc;
                    }
                }
            }
        }
        out
    }

    /// Evaluate at a boundary node, returning a surface field.
    pub fn trace(&self, grid: &Grid, loc: BoundaryLoc) -> SurfaceField {
        let (arr, idx, surf) = match loc {
            BoundaryLoc::SigmaPlus => (&self.plus, grid.n_v_plus, Surface::Plus),
            BoundaryLoc::SigmaMinusAbove => (&self.plus, 0, Surface::Minus),
            BoundaryLoc::SigmaMinusBelow => (&self.minus, grid.n_v_minus, Surface::Minus),
            BoundaryLoc::SigmaB => (&self.minus, 0, Surface::Minus),
        };
        let mut out = SurfaceField::zeros(&grid.clone(), surf);
        out.coeffs
            .assign(&arr.index_axis(Axis(2), idx).to_owned());
        out
    }

    /// Interfacial jump ⟦f⟧ = f₊|_{Σ₋} − f₋|_{Σ₋}.
    pub fn jump(&self, grid: &Grid) -> SurfaceField {
        let above = self.trace(grid, BoundaryLoc::SigmaMinusAbove);
        let below = self.trace(grid, BoundaryLoc::SigmaMinusBelow);
        above.sub(&below)
    }

    /// ∫_Ω f over both layers (real part).
    pub fn integral(&self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for (j, w) in grid.weights_plus().iter().enumerate() {
            acc += w * self.plus[(0, 0, j)].re;
        }
        for (j, w) in grid.weights_minus().iter().enumerate() {
            acc += w * self.minus[(0, 0, j)].re;
        }
        grid.area() * acc
    }

    /// ∫_{Ω±} f over a single layer (real part).
    pub fn integral_layer(&self, grid: &Grid, layer: Layer) -> f64 {
        let (arr, w) = match layer {
            Layer::Plus => (&self.plus, grid.weights_plus()),
            Layer::Minus => (&self.minus, grid.weights_minus()),
        };
        let acc: f64 = w
            .iter()
            .enumerate()
            .map(|(j, wj)| wj * arr[(0, 0, j)].re)
            .sum();
        grid.area() * acc
    }

    /// Squared L²(Ω) norm, both layers: Fourier-Parseval × Clenshaw–Curtis.
    pub fn l2_norm_sq(&self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for (arr, w) in [
            (&self.plus, grid.weights_plus()),
            (&self.minus, grid.weights_minus()),
        ] {
            for i in 0..grid.m() {
                for j in 0..grid.m() {
                    for (k, wk) in w.iter().enumerate() {
                        acc += wk * arr[(i, j, k)].norm_sqr();
                    }
                }
            }
        }
        grid.area() * acc
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.l2_norm_sq(grid).sqrt()
    }

    /// Squared Sobolev norm Σ_{|α|≤k} ‖∂^α f‖²_{L²(Ω₊)} + ‖∂^α f‖²_{L²(Ω₋)}.
    pub fn sobolev_norm_sq(&self, grid: &Grid, k: usize) -> f64 {
        assert!(k <= 3, "volume norms implemented for k <= 3");
        let mut acc = 0.0;
        // Walk multi-indices (a1, a2, a3) with a1+a2+a3 <= k; horizontal
        // derivatives are diagonal multipliers so apply them last.
        for a3 in 0..=k {
            let mut g = self.clone();
            for _ in 0..a3 {
                g = g.d_vertical(grid);
            }
            for a1 in 0..=(k - a3) {
                for a2 in 0..=(k - a3 - a1) {
                    let mut h = g.clone();
                    for _ in 0..a1 {
                        h = h.d_horizontal(grid, 1);
                    }
                    for _ in 0..a2 {
                        h = h.d_horizontal(grid, 2);
                    }
                    acc += h.l2_norm_sq(grid);
                }
            }
        }
        acc
    }

    pub fn sobolev_norm(&self, grid: &Grid, k: usize) -> f64 {
        self.sobolev_norm_sq(grid, k).sqrt()
    }

    /// Physical values (real part) on the padded horizontal grid,
    /// shape (m_pad, m_pad, N_v+1).
    pub fn to_physical(&self, grid: &Grid, t: &HorizontalTransform, layer: Layer) -> Array3<f64> {
        let arr = self.layer(layer);
        let nv = arr.len_of(Axis(2));
        let mp = grid.m_pad();
        let mut out = Array3::zeros((mp, mp, nv));
        for k in 0..nv {
            let slab: Array2<Complex64> = arr.index_axis(Axis(2), k).to_owned();
            let phys = t.to_physical(slab.view());
            for i in 0..mp {
                for j in 0..mp {
                    out[(i, j, k)] = phys[(i, j)].re;
                }
            }
        }
        out
    }

    /// Inverse of [`to_physical`] applied to both layers.
    pub fn from_physical(
        grid: &Grid,
        t: &HorizontalTransform,
        plus: &Array3<f64>,
        minus: &Array3<f64>,
    ) -> Self {
        let mut out = Self::zeros(grid);
        let mp = grid.m_pad();
        for (phys, dst, nv) in [
            (plus, &mut out.plus, grid.n_v_plus + 1),
            (minus, &mut out.minus, grid.n_v_minus + 1),
        ] {
            for k in 0..nv {
                let mut slab = Array2::zeros((mp, mp));
                for i in 0..mp {
                    for j in 0..mp {
                        slab[(i, j)] = Complex64::new(phys[(i, j, k)], 0.0);
                    }
                }
                let spec = t.to_spectral(slab.view());
                dst.index_axis_mut(Axis(2), k).assign(&spec);
            }
        }
        out
    }

    /// Sup-norm estimate over physical nodes of both layers.
    pub fn max_abs(&self, grid: &Grid, t: &HorizontalTransform) -> f64 {
        let a = self.to_physical(grid, t, Layer::Plus);
        let b = self.to_physical(grid, t, Layer::Minus);
        a.iter()
            .chain(b.iter())
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            plus: self.plus.mapv(|c| c * factor),
            minus: self.minus.mapv(|c| c * factor),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.plus.zip_mut_with(&other.plus, |a, b| *a += b);
        self.minus.zip_mut_with(&other.minus, |a, b| *a += b);
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            plus: &self.plus - &other.plus,
            minus: &self.minus - &other.minus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(1.0, 1.0, 4, 12, 12, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vertical_derivative_polynomial() {
        // x₃² on [0,1] → 2x₃.
        let g = grid();
        let f = VolumeField::from_profiles(&g, |x| x * x, |x| x * x);
        let d = f.d_vertical(&g);
        for (j, &x3) in g.nodes_plus().iter().enumerate() {
            assert_relative_eq!(d.plus[(0, 0, j)].re, 2.0 * x3, epsilon = 1e-10);
        }
        for (j, &x3) in g.nodes_minus().iter().enumerate() {
            assert_relative_eq!(d.minus[(0, 0, j)].re, 2.0 * x3, epsilon = 1e-10);
        }
    }

    #[test]
    fn vertical_derivative_exponential() {
        let g = Grid::new(1.0, 1.0, 4, 32, 32, 1.0, 1.0).unwrap();
        let f = VolumeField::from_profiles(&g, f64::exp, f64::exp);
        let d = f.d_vertical(&g);
        for (j, &x3) in g.nodes_plus().iter().enumerate() {
            assert_relative_eq!(d.plus[(0, 0, j)].re, x3.exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_norms_and_traces() {
        let g = grid();
        let f = VolumeField::from_profiles(&g, |_| 1.0, |_| 1.0);
        // vol(Ω) = 4π² · (ℓ + b) = 8π².
        let vol = 8.0 * std::f64::consts::PI.powi(2);
        assert_relative_eq!(f.sobolev_norm(&g, 0), vol.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(f.integral(&g), vol, epsilon = 1e-10);
        assert_relative_eq!(f.jump(&g).sobolev_norm(&g, 0.0), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn trace_of_x3() {
        let g = grid();
        let f = VolumeField::from_profiles(&g, |x| x, |x| x);
        let top = f.trace(&g, BoundaryLoc::SigmaPlus);
        assert_relative_eq!(top.get(&g, 0, 0).re, 1.0, epsilon = 1e-14);
        let bot = f.trace(&g, BoundaryLoc::SigmaB);
        assert_relative_eq!(bot.get(&g, 0, 0).re, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn piecewise_jump() {
        let g = grid();
        let f = VolumeField::from_profiles(&g, |_| 2.0, |_| 1.0);
        assert_relative_eq!(f.jump(&g).get(&g, 0, 0).re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn k1_norm_dominates_k0() {
        let g = grid();
        let mut f = VolumeField::zeros(&g);
        // cos(x₁), constant in x₃.
        for j in 0..=g.n_v_plus {
            f.plus[(g.index_of(1), 0, j)] = Complex64::new(0.5, 0.0);
            f.plus[(g.index_of(-1), 0, j)] = Complex64::new(0.5, 0.0);
        }
        assert!(f.sobolev_norm(&g, 1) >= f.sobolev_norm(&g, 0));
    }

    #[test]
    fn horizontal_commutation() {
        let g = grid();
        let mut f = VolumeField::zeros(&g);
        f.plus[(g.index_of(2), g.index_of(3), 4)] = Complex64::new(0.3, -0.2);
        let a = f.d_horizontal(&g, 1).d_horizontal(&g, 2);
        let b = f.d_horizontal(&g, 2).d_horizontal(&g, 1);
        assert_relative_eq!(a.sub(&b).l2_norm(&g), 0.0);
    }

    #[test]
    fn physical_roundtrip() {
        let g = grid();
        let t = HorizontalTransform::new(&g);
        let mut f = VolumeField::from_profiles(&g, |x| x.exp(), |x| 1.0 + x);
        // add a genuine horizontal mode
        for j in 0..=g.n_v_plus {
            let c = Complex64::new(0.1 * (j as f64), 0.0);
            f.plus[(g.index_of(1), g.index_of(2), j)] = c;
            f.plus[(g.index_of(-1), g.index_of(-2), j)] = c.conj();
        }
        let pp = f.to_physical(&g, &t, Layer::Plus);
        let pm = f.to_physical(&g, &t, Layer::Minus);
        let back = VolumeField::from_physical(&g, &t, &pp, &pm);
        assert!(back.sub(&f).l2_norm(&g) < 1e-11);
    }
}
