//! Gauss–Legendre rules on `[0,1]` and their tensor products.
//!
//! Pointwise interpolation errors of rough fields have power-type
//! singularities at cell faces, where the vertex variograms vanish. Rules
//! built here can be composed with a polynomial endpoint-grading map
//! `s = I_u(p, p)` (regularized incomplete beta with integer `p`), whose
//! derivative vanishes to order `p - 1` at both ends. This flattens the
//! `|s|^beta` behaviour into `|u|^(p beta + p - 1)` and restores fast
//! convergence of the Gauss rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical integration settings for cell integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Gauss–Legendre points per dimension and panel.
    pub order: usize,
    /// Dyadic panel subdivision level per dimension.
    pub subdivisions: u32,
    /// Degree of the endpoint-grading map; 1 disables grading.
    pub grading: u32,
    /// Points per axis per cell for sup-norm scans (endpoints included).
    pub scan_points: usize,
    /// Global cap on the number of sup-scan evaluations.
    pub scan_cap: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: 8,
            subdivisions: 0,
            grading: 3,
            scan_points: 5,
            scan_cap: 4_000_000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidQuadrature(format!(
                "order {} < 2",
                self.order
            )));
        }
        if self.grading < 1 || self.grading > 8 {
            return Err(Error::InvalidQuadrature(format!(
                "grading degree {} outside 1..=8",
                self.grading
            )));
        }
        if self.subdivisions > 10 {
            return Err(Error::InvalidQuadrature(format!(
                "subdivision level {} too deep",
                self.subdivisions
            )));
        }
        if self.scan_points < 2 {
            return Err(Error::InvalidQuadrature("scan needs at least 2 points".into()));
        }
        Ok(())
    }

    /// One-dimensional rule on `[0,1]` described by this spec.
    pub fn rule(&self) -> Result<Rule1D> {
        self.validate()?;
        Ok(Rule1D::gauss_legendre(self.order)
            .composite(1usize << self.subdivisions)
            .graded(self.grading))
    }
}

/// Nodes and weights on `[0,1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1D {
    /// `q`-point Gauss–Legendre rule mapped to `[0,1]`.
    pub fn gauss_legendre(q: usize) -> Self {
        assert!(q >= 1);
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        let qf = q as f64;
        for i in 0..q.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_q
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1,1] -> [0,1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[q - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[q - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Copy of the rule on each of `panels` equal subintervals.
    pub fn composite(&self, panels: usize) -> Self {
        if panels <= 1 {
            return self.clone();
        }
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(self.nodes.len() * panels);
        let mut weights = Vec::with_capacity(self.nodes.len() * panels);
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                nodes.push(a + h * x);
                weights.push(h * w);
            }
        }
        Self { nodes, weights }
    }

    /// Pushes the rule through the grading map of degree `p`.
    pub fn graded(&self, p: u32) -> Self {
        if p <= 1 {
            return self.clone();
        }
        let (nodes, weights) = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| {
                let (s, ds) = grading_map(p, u);
                (s, w * ds)
            })
            .unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_a^b f` with the rule rescaled to `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(a + h * x);
        }
        sum * h
    }
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `(I_u(p,p), d/du I_u(p,p))` for integer `p >= 1`.
pub fn grading_map(p: u32, u: f64) -> (f64, f64) {
    let n = 2 * p - 1;
    let v = 1.0 - u;
    let mut s = 0.0;
    for k in p..=n {
        s += binomial(n, k) * u.powi(k as i32) * v.powi((n - k) as i32);
    }
    // 1 / B(p,p) = (2p-1)! / ((p-1)!)^2 = p * C(2p-1, p)
    let ds = p as f64 * binomial(n, p) * (u * v).powi(p as i32 - 1);
    (s, ds)
}

/// Tensor product of a 1-D rule over `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct TensorRule {
    pub dim: usize,
    /// Row-major points, `dim` coordinates each.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(rule: &Rule1D, dim: usize) -> Self {
        let q = rule.len();
        let total = q.pow(dim as u32);
        let mut points = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for &i in &idx {
                points.push(rule.nodes[i]);
                w *= rule.weights[i];
            }
            weights.push(w);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < q {
                    break;
                }
                *slot = 0;
            }
        }
        Self {
            dim,
            points,
            weights,
        }
    }

    /// Equally spaced scan grid with `m` points per axis, endpoints included.
    pub fn scan_grid(m: usize, dim: usize) -> Self {
        let nodes = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let rule = Rule1D {
            nodes,
            weights: vec![1.0; m],
        };
        Self::new(&rule, dim)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

/// Sum by recursive halving; order depends only on `values.len()`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_2q_minus_1() {
        for q in [2usize, 3, 8, 16, 24, 40] {
            let rule = Rule1D::gauss_legendre(q);
            for deg in 0..(2 * q) {
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((got - exact).abs() < 1e-13, "q={q} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let rule = Rule1D::gauss_legendre(9);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > 0.0 && rule.nodes[8] < 1.0);
        assert!((rule.nodes[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grading_map_is_a_cdf() {
        for p in 1..=5 {
            let (s0, _) = grading_map(p, 0.0);
            let (s1, _) = grading_map(p, 1.0);
            assert!(s0.abs() < 1e-15 && (s1 - 1.0).abs() < 1e-15);
            let (sm, _) = grading_map(p, 0.5);
            assert!((sm - 0.5).abs() < 1e-15);
            // derivative matches a central difference
            let u = 0.3;
            let h = 1e-6;
            let fd = (grading_map(p, u + h).0 - grading_map(p, u - h).0) / (2.0 * h);
            assert!((fd - grading_map(p, u).1).abs() < 1e-8);
        }
    }

    #[test]
    fn graded_rule_handles_endpoint_singularity() {
        // int_0^1 s^0.25 ds = 0.8
        let plain = Rule1D::gauss_legendre(8);
        let graded = plain.graded(3);
        let f = |s: f64| s.powf(0.25);
        let e_plain = (plain.integrate(0.0, 1.0, f) - 0.8).abs();
        let e_graded = (graded.integrate(0.0, 1.0, f) - 0.8).abs();
        assert!(e_graded < 2e-6, "{e_graded}");
        assert!(e_graded < e_plain / 100.0);
        let fine = Rule1D::gauss_legendre(16).graded(3);
        assert!((fine.integrate(0.0, 1.0, f) - 0.8).abs() < 2e-8);
    }

    #[test]
    fn composite_weights_sum_to_one() {
        let spec = QuadratureSpec {
            subdivisions: 2,
            ..QuadratureSpec::default()
        };
        let rule = spec.rule().unwrap();
        assert_eq!(rule.len(), 32);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_rule_integrates_products() {
        let t = TensorRule::new(&Rule1D::gauss_legendre(4), 3);
        assert_eq!(t.len(), 64);
        let got: f64 = (0..t.len())
            .map(|i| {
                let p = t.point(i);
                t.weights[i] * p[0] * p[1] * p[1] * p[2].powi(3)
            })
            .sum();
        assert!((got - 1.0 / 2.0 / 3.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(QuadratureSpec::with_order(1).validate().is_err());
        let s = QuadratureSpec {
            grading: 0,
            ..QuadratureSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn pairwise_sum_matches_naive_for_small_inputs() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }
}
