//! Chart abstraction: anything that can evaluate a metric tensor, its
//! coordinate derivatives, and the derived Christoffel symbols on a
//! coordinate box.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ChartError;

pub type Point = Vector3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Maximum condition estimate accepted by `inverse_metric`.
pub const COND_LIMIT: f64 = 1e12;

/// Open coordinate box, per-axis ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl ChartBox {
    pub fn centered(half_widths: [f64; 3]) -> Self {
        ChartBox {
            lo: [-half_widths[0], -half_widths[1], -half_widths[2]],
            hi: half_widths,
        }
    }

    pub fn cube(half_width: f64) -> Self {
        Self::centered([half_width; 3])
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|k| p[k] > self.lo[k] && p[k] < self.hi[k])
    }

    /// Containment with a safety margin on every side.
    pub fn contains_with_margin(&self, p: &Point, margin: f64) -> bool {
        (0..3).all(|k| p[k] > self.lo[k] + margin && p[k] < self.hi[k] - margin)
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        0.5 * (self.hi[axis] - self.lo[axis])
    }
}

/// Christoffel symbols of the second kind, `values[m][i][j]` = Gamma^m_ij.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelTensor {
    pub values: [[[f64; 3]; 3]; 3],
}

impl ChristoffelTensor {
    pub fn zero() -> Self {
        ChristoffelTensor {
            values: [[[0.0; 3]; 3]; 3],
        }
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize, j: usize) -> f64 {
        self.values[m][i][j]
    }

    /// Max deviation from lower-index symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for m in 0..3 {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    d = d.max((self.values[m][i][j] - self.values[m][j][i]).abs());
                }
            }
        }
        d
    }

    /// Gamma(v, w)^m = Gamma^m_ij v^i w^j.
    #[inline]
    pub fn contract(&self, v: &Vec3, w: &Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for m in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += self.values[m][i][j] * v[i] * w[j];
                }
            }
            out[m] = s;
        }
        out
    }
}

/// Bundle of everything the graph operator needs at one point.
#[derive(Debug, Clone)]
pub struct ChartData {
    pub metric: Mat3,
    pub inverse: Mat3,
    pub gamma: ChristoffelTensor,
}

/// Gamma^m_ij = 1/2 g^{ml} (d_i g_jl + d_j g_il - d_l g_ij).
pub fn christoffel_from_derivatives(inverse: &Mat3, dg: &[Mat3; 3]) -> ChristoffelTensor {
    let mut values = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for i in 0..3 {
            for j in 0..=i {
                let mut s = 0.0;
                for l in 0..3 {
                    s += inverse[(m, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                let v = 0.5 * s;
                values[m][i][j] = v;
                values[m][j][i] = v;
            }
        }
    }
    ChristoffelTensor { values }
}

/// Symmetric 3x3 inverse via adjugate; `None` when the determinant vanishes.
pub fn invert_sym3(g: &Mat3) -> Option<Mat3> {
    let det = g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)])
        - g[(0, 1)] * (g[(1, 0)] * g[(2, 2)] - g[(1, 2)] * g[(2, 0)])
        + g[(0, 2)] * (g[(1, 0)] * g[(2, 1)] - g[(1, 1)] * g[(2, 0)]);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut inv = Mat3::zeros();
    inv[(0, 0)] = (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)]) * inv_det;
    inv[(0, 1)] = (g[(0, 2)] * g[(2, 1)] - g[(0, 1)] * g[(2, 2)]) * inv_det;
    inv[(0, 2)] = (g[(0, 1)] * g[(1, 2)] - g[(0, 2)] * g[(1, 1)]) * inv_det;
    inv[(1, 0)] = inv[(0, 1)];
    inv[(1, 1)] = (g[(0, 0)] * g[(2, 2)] - g[(0, 2)] * g[(2, 0)]) * inv_det;
    inv[(1, 2)] = (g[(0, 2)] * g[(1, 0)] - g[(0, 0)] * g[(1, 2)]) * inv_det;
    inv[(2, 0)] = inv[(0, 2)];
    inv[(2, 1)] = inv[(1, 2)];
    inv[(2, 2)] = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]) * inv_det;
    Some(inv)
}

fn frobenius(m: &Mat3) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A coordinate chart carrying a Riemannian metric.
///
/// `metric` and `metric_derivatives` are the two primitive evaluations; the
/// inverse metric, Christoffel symbols and the combined `ChartData` are
/// derived. Implementations must be pure: charts are immutable after
/// construction and safe to share across threads.
pub trait Chart: Sync + Send {
    fn bounds(&self) -> &ChartBox;

    /// g_ij at `p`. Must reject points outside the box.
    fn metric(&self, p: &Point) -> Result<Mat3, ChartError>;

    /// `[d_1 g, d_2 g, d_3 g]` at `p`.
    fn metric_derivatives(&self, p: &Point) -> Result<[Mat3; 3], ChartError>;

    /// g^{ij} at `p`, with a conditioning guard.
    fn inverse_metric(&self, p: &Point) -> Result<Mat3, ChartError> {
        let g = self.metric(p)?;
        let inv = invert_sym3(&g).ok_or(ChartError::NearSingular { cond: f64::INFINITY })?;
        let cond = frobenius(&g) * frobenius(&inv);
        if cond > COND_LIMIT {
            return Err(ChartError::NearSingular { cond });
        }
        Ok(inv)
    }

    fn christoffel(&self, p: &Point) -> Result<ChristoffelTensor, ChartError> {
        let inv = self.inverse_metric(p)?;
        let dg = self.metric_derivatives(p)?;
        Ok(christoffel_from_derivatives(&inv, &dg))
    }

    fn chart_data(&self, p: &Point) -> Result<ChartData, ChartError> {
        let metric = self.metric(p)?;
        let inverse =
            invert_sym3(&metric).ok_or(ChartError::NearSingular { cond: f64::INFINITY })?;
        let dg = self.metric_derivatives(p)?;
        let gamma = christoffel_from_derivatives(&inverse, &dg);
        Ok(ChartData {
            metric,
            inverse,
            gamma,
        })
    }

    /// g(v, w) at `p`.
    fn inner(&self, p: &Point, v: &Vec3, w: &Vec3) -> Result<f64, ChartError> {
        let g = self.metric(p)?;
        Ok((g * w).dot(v))
    }

    /// |v|_g at `p`.
    fn norm(&self, p: &Point, v: &Vec3) -> Result<f64, ChartError> {
        Ok(self.inner(p, v, v)?.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_sym3_matches_identity_product() {
        let g = Mat3::new(1.0, 0.0, 0.0, 0.0, 2.0, -1.0, 0.0, -1.0, 1.0);
        let inv = invert_sym3(&g).unwrap();
        let prod = inv * g;
        let defect = (prod - Mat3::identity()).abs().max();
        assert!(defect < 1e-14, "defect {defect}");
        // hand inverse from the nil3 example
        let expected = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0);
        assert!((inv - expected).abs().max() < 1e-14);
    }

    #[test]
    fn box_containment() {
        let b = ChartBox::cube(0.8);
        assert!(b.contains(&Point::new(0.5, -0.7, 0.0)));
        assert!(!b.contains(&Point::new(0.9, 0.0, 0.0)));
        assert!(!b.contains_with_margin(&Point::new(0.79, 0.0, 0.0), 0.02));
    }
}
