//! Gaussian quadrature rules used to verify the chaos algebra and the time
//! basis. The solver itself never integrates numerically.

use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Hermite rule for the standard Gaussian probability measure, i.e.
/// `integrate(f) ~ E[f(Z)]` with `Z ~ N(0, 1)`.
///
/// Roots are found by Newton iteration on the orthonormal physicists'
/// recurrence and then rescaled by `sqrt(2)`.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "quadrature rule needs at least one node");
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let scale = 2.0_f64.sqrt();
    let norm = PI.sqrt();
    Rule {
        nodes: x.into_iter().map(|v| v * scale).collect(),
        weights: w.into_iter().map(|v| v / norm).collect(),
    }
}

/// Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Rule {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = 2.0 * half / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    Rule {
        nodes: x,
        weights: w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_reproduces_gaussian_moments() {
        let rule = gauss_hermite(40);
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!(rule.integrate(|x| x).abs() < 1e-13);
        assert!((rule.integrate(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!((rule.integrate(|x| x.powi(6)) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(10, 0.0, 3.0);
        assert!((rule.integrate(|t| t * t) - 9.0).abs() < 1e-12);
        assert!((rule.integrate(|t| t.powi(5)) - 3f64.powi(6) / 6.0).abs() < 1e-10);
    }
}
