//! Multivariate piecewise linear interpolation on a design.
//!
//! Inside the cell with lower vertex `t_i` and diagonal `r_i`, a point
//! `t = t_i + r_i * s` is interpolated from the `2^d` cell vertices with
//! weights `prod_m (s_m or 1 - s_m)`: the expectation over independent
//! Bernoulli(`s_m`) vertex selectors. Vertex `v` is encoded as a bitmask,
//! bit `m` set meaning the upper knot along coordinate `m`.

use std::collections::HashMap;

use crate::design::Design;
use crate::error::{Error, Result};

/// Cell containing a point and the point's local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLocation {
    pub index: Vec<usize>,
    pub local: Vec<f64>,
}

/// Cell of `t`. Points on a shared face go to the lower cell, except the
/// upper boundary `1`, which belongs to the last cell.
pub fn locate_cell(design: &Design, t: &[f64]) -> Result<CellLocation> {
    if t.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            got: t.len(),
        });
    }
    if t.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutsideDomain(t.to_vec()));
    }
    let mut index = Vec::with_capacity(t.len());
    let mut local = Vec::with_capacity(t.len());
    for (m, &x) in t.iter().enumerate() {
        let (i, s) = locate_on_axis(design.axis(m), x);
        index.push(i);
        local.push(s);
    }
    Ok(CellLocation { index, local })
}

pub(crate) fn locate_on_axis(axis: &[f64], x: f64) -> (usize, f64) {
    let cells = axis.len() - 1;
    let below = axis.partition_point(|&k| k < x);
    let i = below.saturating_sub(1).min(cells - 1);
    let s = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, s)
}

/// Vertex weights `w_v = prod_m (s_m if bit m of v else 1 - s_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexWeights(pub Vec<f64>);

impl VertexWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn weights(local: &[f64]) -> VertexWeights {
    let mut out = vec![0.0; 1 << local.len()];
    fill_weights(local, &mut out);
    VertexWeights(out)
}

/// Writes the `2^d` weights into `out` without allocating.
pub(crate) fn fill_weights(local: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut len = 1;
    for &s in local {
        // weights for coordinate m occupy bit m: extend the table by doubling
        for v in 0..len {
            let w = out[v];
            out[v] = w * (1.0 - s);
            out[v + len] = w * s;
        }
        len <<= 1;
    }
}

/// Knot multi-index of vertex `v` of the cell `index`.
pub fn vertex_index(index: &[usize], v: usize) -> Vec<usize> {
    index
        .iter()
        .enumerate()
        .map(|(m, &i)| i + ((v >> m) & 1))
        .collect()
}

/// Source of field values at grid knots.
pub trait VertexValues {
    fn value(&self, knot: &[usize]) -> Option<f64>;
}

/// Values at every knot of a design, coordinate 0 varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridValues {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridValues {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    /// Samples `f` at every knot of `design`.
    pub fn sample<F: FnMut(&[f64]) -> f64>(design: &Design, mut f: F) -> Self {
        let shape: Vec<usize> = design.axes().iter().map(|a| a.len()).collect();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        let mut point = vec![0.0; shape.len()];
        for _ in 0..total {
            for (m, &i) in idx.iter().enumerate() {
                point[m] = design.axis(m)[i];
            }
            values.push(f(&point));
            for (m, slot) in idx.iter_mut().enumerate() {
                *slot += 1;
                if *slot < shape[m] {
                    break;
                }
                *slot = 0;
            }
        }
        Self { shape, values }
    }

    fn offset(&self, knot: &[usize]) -> Option<usize> {
        if knot.len() != self.shape.len() {
            return None;
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &n) in knot.iter().zip(&self.shape) {
            if i >= n {
                return None;
            }
            offset += i * stride;
            stride *= n;
        }
        Some(offset)
    }
}

impl VertexValues for GridValues {
    fn value(&self, knot: &[usize]) -> Option<f64> {
        self.offset(knot).map(|o| self.values[o])
    }
}

impl VertexValues for HashMap<Vec<usize>, f64> {
    fn value(&self, knot: &[usize]) -> Option<f64> {
        self.get(knot).copied()
    }
}

/// Interpolated value at `t`.
pub fn mpli_eval<V: VertexValues + ?Sized>(design: &Design, values: &V, t: &[f64]) -> Result<f64> {
    let loc = locate_cell(design, t)?;
    eval_in_cell(values, &loc.index, &loc.local)
}

/// Interpolated value using an explicit cell and local coordinate.
pub fn eval_in_cell<V: VertexValues + ?Sized>(values: &V, index: &[usize], local: &[f64]) -> Result<f64> {
    let w = weights(local);
    let mut sum = 0.0;
    for (v, &wv) in w.0.iter().enumerate() {
        let knot = vertex_index(index, v);
        let value = values
            .value(&knot)
            .ok_or_else(|| Error::MissingVertexValue(knot.clone()))?;
        sum += wv * value;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, uniform_design, Allocation, Density};
    use crate::kernels::Decomposition;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn uniform(sizes: Vec<usize>, n: Vec<usize>) -> Design {
        let dec = Decomposition::new(sizes).unwrap();
        uniform_design(&Allocation::new(n).unwrap(), &dec).unwrap()
    }

    #[test]
    fn locate_examples() {
        let d = uniform(vec![2], vec![3]);
        let loc = locate_cell(&d, &[0.0, 0.0]).unwrap();
        assert_eq!(loc.index, vec![0, 0]);
        assert_eq!(loc.local, vec![0.0, 0.0]);
        let loc = locate_cell(&d, &[1.0, 1.0]).unwrap();
        assert_eq!(loc.index, vec![2, 2]);
        assert_eq!(loc.local, vec![1.0, 1.0]);

        let d1 = uniform(vec![1], vec![4]);
        let loc = locate_cell(&d1, &[0.6]).unwrap();
        assert_eq!(loc.index, vec![2]);
        assert!((loc.local[0] - 0.4).abs() < 1e-14);

        // interior knot goes to the lower cell
        let loc = locate_cell(&d1, &[0.5]).unwrap();
        assert_eq!(loc.index, vec![1]);
        assert_eq!(loc.local, vec![1.0]);

        assert!(matches!(locate_cell(&d1, &[1.5]), Err(Error::OutsideDomain(_))));
        assert!(locate_cell(&d1, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn weight_examples() {
        let (t1, t2) = (0.3, 0.6);
        let w = weights(&[t1, t2]);
        let expected = [(1.0 - t1) * (1.0 - t2), t1 * (1.0 - t2), (1.0 - t1) * t2, t1 * t2];
        for (a, b) in w.0.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in w.0.iter().zip([0.28, 0.12, 0.42, 0.18]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(weights(&[0.0, 0.0, 0.0]).0, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bilinear_unit_cell() {
        let d = uniform(vec![2], vec![1]);
        let values = GridValues::new(vec![2, 2], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((mpli_eval(&d, &values, &[0.5, 0.5]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn missing_vertex_is_an_error() {
        let d = uniform(vec![1], vec![2]);
        let mut map = HashMap::new();
        map.insert(vec![0usize], 1.0);
        assert!(matches!(
            mpli_eval(&d, &map, &[0.25]),
            Err(Error::MissingVertexValue(_))
        ));
        map.insert(vec![1usize], 3.0);
        assert!((mpli_eval(&d, &map, &[0.25]).unwrap() - 2.0).abs() < 1e-15);
    }

    fn random_design(rng: &mut impl Rng) -> Design {
        let dec = Decomposition::new(vec![1, 2]).unwrap();
        let a: f64 = rng.gen_range(0.2..3.0);
        build_design(
            &[
                Density::analytic(move |t| a + t).unwrap(),
                Density::Uniform,
            ],
            &Allocation::new(vec![rng.gen_range(1..6), rng.gen_range(1..5)]).unwrap(),
            &dec,
        )
        .unwrap()
    }

    #[test]
    fn multilinear_functions_are_reproduced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let design = random_design(&mut rng);
            let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = |t: &[f64]| {
                let mut acc = 0.0;
                for v in 0..8usize {
                    let mut term = c[v];
                    for (m, &x) in t.iter().enumerate() {
                        if (v >> m) & 1 == 1 {
                            term *= x;
                        }
                    }
                    acc += term;
                }
                acc
            };
            let values = GridValues::sample(&design, f);
            for _ in 0..100 {
                let t: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                assert!((mpli_eval(&design, &values, &t).unwrap() - f(&t)).abs() <= 1e-12);
            }
            // knots are interpolated exactly
            let g = |t: &[f64]| (3.0 * t[0]).sin() + t[1] * t[2].exp();
            let values = GridValues::sample(&design, g);
            for i in 0..design.axis(0).len() {
                for j in 0..design.axis(1).len() {
                    let knot = design.knot(&[i, j, j]);
                    assert_eq!(mpli_eval(&design, &values, &knot).unwrap(), g(&knot));
                }
            }
        }
    }

    #[test]
    fn evaluation_is_continuous_across_faces() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let design = random_design(&mut rng);
            let values = GridValues::sample(&design, |t| (t[0] * 7.0).cos() + t[1] * t[2]);
            let axis = design.axis(0);
            if axis.len() < 3 {
                continue;
            }
            let k = rng.gen_range(1..axis.len() - 1);
            let t = [axis[k], rng.gen::<f64>(), rng.gen::<f64>()];
            let lower = locate_cell(&design, &t).unwrap();
            // the same point seen from the upper neighbour: local coordinate 0
            let mut upper = lower.clone();
            upper.index[0] += 1;
            upper.local[0] = 0.0;
            let a = eval_in_cell(&values, &lower.index, &lower.local).unwrap();
            let b = eval_in_cell(&values, &upper.index, &upper.local).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn weights_form_a_simplex(s in proptest::collection::vec(0.0f64..=1.0, 1..5)) {
            let w = weights(&s);
            prop_assert!(w.0.iter().all(|&x| x >= 0.0));
            prop_assert!((w.0.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn location_reconstructs_point(t in proptest::collection::vec(0.0f64..=1.0, 3)) {
            let design = uniform(vec![1, 2], vec![7, 3]);
            let loc = locate_cell(&design, &t).unwrap();
            for m in 0..3 {
                let axis = design.axis(m);
                let i = loc.index[m];
                prop_assert!((0.0..=1.0).contains(&loc.local[m]));
                let back = axis[i] + (axis[i + 1] - axis[i]) * loc.local[m];
                prop_assert!((back - t[m]).abs() <= 1e-14);
            }
        }
    }
}
