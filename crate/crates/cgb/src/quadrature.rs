//! Quadrature on hyperspherical parameter domains plus 1-D radial rules.
//!
//! Product rules: Gauss-Legendre in each colatitude (mapped to (0, pi)),
//! composite trapezoid in the periodic azimuth. Error estimates come from
//! order-doubling.

use crate::linalg::pairwise_sum;
use crate::{CgbError, Result};

/// Nodes/weights of the Gauss-Legendre rule on (-1, 1), via Newton iteration
/// on the Legendre polynomial with the standard cosine initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature grid on the m-sphere parametrized by m hyperspherical angles:
/// m-1 colatitudes in (0, pi) followed by an azimuth in [0, 2 pi).
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    /// Dimension of the sphere S^m being parametrized.
    pub sphere_dim: usize,
    /// Points per angle.
    pub order: usize,
    /// Angle tuples, length m each.
    pub nodes: Vec<Vec<f64>>,
    /// Weights including the hyperspherical Jacobian; sum to |S^m| up to
    /// rule error.
    pub weights: Vec<f64>,
    /// Bare product weights without the Jacobian, for integrands that carry
    /// their own area element in parameter coordinates.
    pub angle_weights: Vec<f64>,
}

/// Map m hyperspherical angles to a unit vector in R^{m+1}. Generic over the
/// scalar so embeddings can be differentiated through it.
pub fn direction<S: crate::scalar::Scalar>(angles: &[S]) -> Vec<S> {
    let m = angles.len();
    let mut u = Vec::with_capacity(m + 1);
    let mut sin_prod = S::one();
    for &a in angles.iter().take(m.saturating_sub(1)) {
        u.push(sin_prod * a.cos());
        sin_prod = sin_prod * a.sin();
    }
    let az = angles[m - 1];
    u.push(sin_prod * az.cos());
    u.push(sin_prod * az.sin());
    u
}

/// Build a product-rule grid on S^m. Interior Gauss nodes guarantee no node
/// sits at a coordinate pole.
pub fn sphere_grid(m: usize, order: usize) -> Result<QuadratureGrid> {
    if !(1..=6).contains(&m) {
        return Err(CgbError::InvalidArgument(format!(
            "sphere dimension {m} exceeds the desk-scale guard (1..=6)"
        )));
    }
    if order < 4 {
        return Err(CgbError::InvalidArgument(format!(
            "order {order} too small; need >= 4"
        )));
    }
    let (gl_nodes, gl_weights) = gauss_legendre(order);
    let half_pi = std::f64::consts::FRAC_PI_2;
    // Colatitude nodes on (0, pi).
    let colat: Vec<(f64, f64)> = gl_nodes
        .iter()
        .zip(&gl_weights)
        .map(|(&x, &w)| (half_pi * (x + 1.0), half_pi * w))
        .collect();
    let tau = std::f64::consts::TAU;
    let azim: Vec<(f64, f64)> = (0..order)
        .map(|i| ((i as f64 + 0.5) * tau / order as f64, tau / order as f64))
        .collect();

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut angle_weights = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let mut angs = Vec::with_capacity(m);
        let mut w = 1.0;
        let mut jac = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            if j + 1 < m {
                let (a, wa) = colat[i];
                angs.push(a);
                w *= wa;
                jac *= a.sin().powi((m - 1 - j) as i32);
            } else {
                let (a, wa) = azim[i];
                angs.push(a);
                w *= wa;
            }
        }
        nodes.push(angs);
        angle_weights.push(w);
        weights.push(w * jac);
        // odometer increment
        let mut j = m;
        loop {
            if j == 0 {
                break;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < order {
                break;
            }
            idx[j] = 0;
            if j == 0 {
                return Ok(QuadratureGrid {
                    sphere_dim: m,
                    order,
                    nodes,
                    weights,
                    angle_weights,
                });
            }
        }
    }
}

impl QuadratureGrid {
    /// Integrate a density given w.r.t. the round unit-sphere measure.
    pub fn integrate_round<F: FnMut(&[f64]) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (node, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(node)?;
            if !v.is_finite() {
                return Err(CgbError::NonFinite(node.clone()));
            }
            terms.push(w * v);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Integrate a density given w.r.t. the bare angle measure (the integrand
    /// must include its own area element, e.g. `area_element`).
    pub fn integrate_param<F: FnMut(&[f64]) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.nodes.len());
        for (node, &w) in self.nodes.iter().zip(&self.angle_weights) {
            let v = f(node)?;
            if !v.is_finite() {
                return Err(CgbError::NonFinite(node.clone()));
            }
            terms.push(w * v);
        }
        Ok(pairwise_sum(&terms))
    }

    pub fn weight_sum(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Value from the finer grid; error estimate from the coarse/fine difference.
pub fn integrate<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    grid: &QuadratureGrid,
    grid_doubled: &QuadratureGrid,
) -> Result<(f64, f64)> {
    let coarse = grid.integrate_round(&mut f)?;
    let fine = grid_doubled.integrate_round(&mut f)?;
    Ok((fine, (fine - coarse).abs()))
}

/// Same order-doubling estimate for integrands carrying their own area
/// element in parameter coordinates.
pub fn integrate_param<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    grid: &QuadratureGrid,
    grid_doubled: &QuadratureGrid,
) -> Result<(f64, f64)> {
    let coarse = grid.integrate_param(&mut f)?;
    let fine = grid_doubled.integrate_param(&mut f)?;
    Ok((fine, (fine - coarse).abs()))
}

/// Gauss-Legendre integration of g over (0, R).
pub fn radial_integrate<F: FnMut(f64) -> Result<f64>>(
    mut g: F,
    radius: f64,
    order: usize,
) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let mut terms = Vec::with_capacity(order);
    for (&x, &w) in nodes.iter().zip(&weights) {
        let r = 0.5 * radius * (x + 1.0);
        let v = g(r)?;
        if !v.is_finite() {
            return Err(CgbError::NonFinite(vec![r]));
        }
        terms.push(0.5 * radius * w * v);
    }
    Ok(pairwise_sum(&terms))
}
