//! The metric catalog: named smooth metrics on coordinate boxes.
//!
//! Every entry is a rotationally structured product
//!     g = lambda^2 (dx^2 + dy^2) + (lambda tau (y dx - x dy) + dt)^2
//! with an entry-specific conformal factor lambda(x, y):
//!
//! * `euclidean`                  lambda = 1, tau = 0
//! * `h2xr`                       lambda = 1 / (1 + kappa r^2/4), tau = 0 (kappa < 0)
//! * `e-kappa-tau`                same lambda, tau > 0
//! * `nil3`                       lambda = 1, tau > 0 (Heisenberg group)
//! * `smooth-nonanalytic-product` lambda^2 = 1 + bump(r), tau = 0, with a
//!   compactly supported exp(-1/s) glue, so the metric is C-infinity but not
//!   analytic while keeping the rotational symmetry.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, ChartBox, Mat3, Point};
use crate::error::{CatalogError, ChartError};

/// How `metric_derivatives` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    ClosedForm,
    /// Central differences with one Richardson level at the given step.
    FiniteDifference { step: f64 },
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Entry {
    Euclidean,
    /// Disk model of E(kappa, tau), kappa < 0; tau = 0 gives H^2(kappa) x R.
    DiskProduct { kappa: f64, tau: f64 },
    Nil3 { tau: f64 },
    BumpProduct { amp: f64 },
}

/// A catalog chart: immutable after construction, evaluations are pure.
#[derive(Debug, Clone)]
pub struct ManifoldChart {
    name: String,
    params: BTreeMap<String, f64>,
    entry: Entry,
    bounds: ChartBox,
    mode: DerivativeMode,
}

/// Radius of the support of the non-analytic bump (in r^2).
const BUMP_SUPPORT_SQ: f64 = 0.25;

fn bump(amp: f64, r_sq: f64) -> f64 {
    if r_sq < BUMP_SUPPORT_SQ {
        amp * (-1.0 / (BUMP_SUPPORT_SQ - r_sq)).exp()
    } else {
        0.0
    }
}

impl ManifoldChart {
    pub fn euclidean() -> Self {
        ManifoldChart {
            name: "euclidean".into(),
            params: BTreeMap::new(),
            entry: Entry::Euclidean,
            bounds: ChartBox::cube(2.0),
            mode: DerivativeMode::ClosedForm,
        }
    }

    pub fn h2xr(kappa: f64) -> Result<Self, CatalogError> {
        disk_entry("h2xr", kappa, 0.0)
    }

    pub fn e_kappa_tau(kappa: f64, tau: f64) -> Result<Self, CatalogError> {
        if tau <= 0.0 {
            return Err(CatalogError::BadParameter {
                entry: "e-kappa-tau".into(),
                name: "tau".into(),
                value: tau,
                reason: "bundle curvature must be positive".into(),
            });
        }
        disk_entry("e-kappa-tau", kappa, tau)
    }

    pub fn nil3(tau: f64) -> Result<Self, CatalogError> {
        if tau <= 0.0 {
            return Err(CatalogError::BadParameter {
                entry: "nil3".into(),
                name: "tau".into(),
                value: tau,
                reason: "bundle curvature must be positive".into(),
            });
        }
        let mut params = BTreeMap::new();
        params.insert("tau".into(), tau);
        Ok(ManifoldChart {
            name: "nil3".into(),
            params,
            entry: Entry::Nil3 { tau },
            bounds: ChartBox::cube(2.0),
            mode: DerivativeMode::ClosedForm,
        })
    }

    pub fn bump_product(amp: f64) -> Result<Self, CatalogError> {
        if amp < 0.0 {
            return Err(CatalogError::BadParameter {
                entry: "smooth-nonanalytic-product".into(),
                name: "amp".into(),
                value: amp,
                reason: "bump amplitude must be nonnegative".into(),
            });
        }
        let mut params = BTreeMap::new();
        params.insert("amp".into(), amp);
        Ok(ManifoldChart {
            name: "smooth-nonanalytic-product".into(),
            params,
            entry: Entry::BumpProduct { amp },
            bounds: ChartBox::cube(2.0),
            mode: DerivativeMode::FiniteDifference {
                step: DEFAULT_FD_STEP,
            },
        })
    }

    /// Override the derivative mode (used to cross-check FD against closed form).
    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Bundle curvature tau of the entry (zero for product entries).
    pub fn tau(&self) -> f64 {
        match self.entry {
            Entry::DiskProduct { tau, .. } | Entry::Nil3 { tau } => tau,
            _ => 0.0,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.entry {
            Entry::DiskProduct { kappa, .. } => Some(kappa),
            Entry::Nil3 { .. } => Some(0.0),
            _ => None,
        }
    }

    /// (lambda, d lambda/dx, d lambda/dy, tau) at (x, y).
    fn conformal(&self, x: f64, y: f64) -> (f64, f64, f64, f64) {
        match self.entry {
            Entry::Euclidean => (1.0, 0.0, 0.0, 0.0),
            Entry::Nil3 { tau } => (1.0, 0.0, 0.0, tau),
            Entry::DiskProduct { kappa, tau } => {
                let lam = 1.0 / (1.0 + kappa * (x * x + y * y) / 4.0);
                let lam_sq = lam * lam;
                (lam, -0.5 * kappa * x * lam_sq, -0.5 * kappa * y * lam_sq, tau)
            }
            Entry::BumpProduct { amp } => {
                let r_sq = x * x + y * y;
                let b = bump(amp, r_sq);
                let lam = (1.0 + b).sqrt();
                if r_sq < BUMP_SUPPORT_SQ {
                    // d bump / d(r^2) = -bump / (support - r^2)^2
                    let db = -b / ((BUMP_SUPPORT_SQ - r_sq) * (BUMP_SUPPORT_SQ - r_sq));
                    let dl = 0.5 / lam * db;
                    (lam, dl * 2.0 * x, dl * 2.0 * y, 0.0)
                } else {
                    (lam, 0.0, 0.0, 0.0)
                }
            }
        }
    }

    fn metric_closed(&self, p: &Point) -> Mat3 {
        let (lam, _, _, tau) = self.conformal(p.x, p.y);
        rotational_metric(lam, tau, p.x, p.y)
    }

    fn derivatives_closed(&self, p: &Point) -> [Mat3; 3] {
        let (x, y) = (p.x, p.y);
        let (lam, lx, ly, tau) = self.conformal(x, y);
        // a_1 = tau lam y, a_2 = -tau lam x; a_{i,k} below.
        let a = Vector2::new(tau * lam * y, -tau * lam * x);
        let da = [
            Vector2::new(tau * lx * y, -tau * (lx * x + lam)), // d/dx
            Vector2::new(tau * (ly * y + lam), -tau * ly * x), // d/dy
        ];
        let dlam = [lx, ly];
        let mut out = [Mat3::zeros(), Mat3::zeros(), Mat3::zeros()];
        for (k, dg) in out.iter_mut().enumerate().take(2) {
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = da[k][i] * a[j] + a[i] * da[k][j];
                    if i == j {
                        v += 2.0 * lam * dlam[k];
                    }
                    dg[(i, j)] = v;
                }
                dg[(i, 2)] = da[k][i];
                dg[(2, i)] = da[k][i];
            }
        }
        out
    }
}

/// g for the rotational family at (x, y).
fn rotational_metric(lam: f64, tau: f64, x: f64, y: f64) -> Mat3 {
    let a1 = tau * lam * y;
    let a2 = -tau * lam * x;
    let ls = lam * lam;
    Mat3::new(
        ls + a1 * a1,
        a1 * a2,
        a1,
        a1 * a2,
        ls + a2 * a2,
        a2,
        a1,
        a2,
        1.0,
    )
}

fn disk_entry(name: &str, kappa: f64, tau: f64) -> Result<ManifoldChart, CatalogError> {
    if kappa >= 0.0 {
        return Err(CatalogError::BadParameter {
            entry: name.into(),
            name: "kappa".into(),
            value: kappa,
            reason: "disk model requires kappa < 0".into(),
        });
    }
    let rho = 2.0 / (-kappa).sqrt();
    let mut params = BTreeMap::new();
    params.insert("kappa".into(), kappa);
    if tau != 0.0 {
        params.insert("tau".into(), tau);
    }
    Ok(ManifoldChart {
        name: name.into(),
        params,
        entry: Entry::DiskProduct { kappa, tau },
        // spatial radius sqrt(2) * 0.4 rho stays strictly inside the disk of radius rho
        bounds: ChartBox::cube(0.4 * rho),
        mode: DerivativeMode::ClosedForm,
    })
}

/// Catalog entry point addressed by string id and a flat parameter map.
pub fn make_manifold(
    name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<ManifoldChart, CatalogError> {
    let allow = |keys: &[&str]| -> Result<(), CatalogError> {
        for k in params.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(CatalogError::UnexpectedParameter {
                    entry: name.into(),
                    name: k.clone(),
                });
            }
        }
        Ok(())
    };
    match name {
        "euclidean" => {
            allow(&[])?;
            Ok(ManifoldChart::euclidean())
        }
        "h2xr" => {
            allow(&["kappa"])?;
            ManifoldChart::h2xr(params.get("kappa").copied().unwrap_or(-1.0))
        }
        "e-kappa-tau" => {
            allow(&["kappa", "tau"])?;
            let kappa = params.get("kappa").copied().ok_or(CatalogError::BadParameter {
                entry: name.into(),
                name: "kappa".into(),
                value: f64::NAN,
                reason: "kappa is required".into(),
            })?;
            let tau = params.get("tau").copied().ok_or(CatalogError::BadParameter {
                entry: name.into(),
                name: "tau".into(),
                value: f64::NAN,
                reason: "tau is required".into(),
            })?;
            ManifoldChart::e_kappa_tau(kappa, tau)
        }
        "nil3" => {
            allow(&["tau"])?;
            ManifoldChart::nil3(params.get("tau").copied().unwrap_or(1.0))
        }
        "smooth-nonanalytic-product" => {
            allow(&["amp"])?;
            ManifoldChart::bump_product(params.get("amp").copied().unwrap_or(0.1))
        }
        other => Err(CatalogError::UnknownName(other.into())),
    }
}

impl Chart for ManifoldChart {
    fn bounds(&self) -> &ChartBox {
        &self.bounds
    }

    fn metric(&self, p: &Point) -> Result<Mat3, ChartError> {
        if !self.bounds.contains(p) {
            return Err(ChartError::OutsideBox(p.x, p.y, p.z));
        }
        Ok(self.metric_closed(p))
    }

    fn metric_derivatives(&self, p: &Point) -> Result<[Mat3; 3], ChartError> {
        match self.mode {
            DerivativeMode::ClosedForm => {
                if !self.bounds.contains(p) {
                    return Err(ChartError::OutsideBox(p.x, p.y, p.z));
                }
                Ok(self.derivatives_closed(p))
            }
            DerivativeMode::FiniteDifference { step } => {
                if !self.bounds.contains(p) {
                    return Err(ChartError::OutsideBox(p.x, p.y, p.z));
                }
                if !self.bounds.contains_with_margin(p, 2.0 * step) {
                    return Err(ChartError::StencilMargin { margin: 2.0 * step });
                }
                let diff = |h: f64| -> [Mat3; 3] {
                    let mut out = [Mat3::zeros(); 3];
                    for (k, d) in out.iter_mut().enumerate() {
                        let mut pp = *p;
                        let mut pm = *p;
                        pp[k] += h;
                        pm[k] -= h;
                        *d = (self.metric_closed(&pp) - self.metric_closed(&pm)) / (2.0 * h);
                    }
                    out
                };
                let coarse = diff(step);
                let fine = diff(0.5 * step);
                let mut out = [Mat3::zeros(); 3];
                for k in 0..3 {
                    out[k] = (fine[k] * 4.0 - coarse[k]) / 3.0;
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Point, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<ManifoldChart> {
        vec![
            ManifoldChart::euclidean(),
            ManifoldChart::h2xr(-1.0).unwrap(),
            ManifoldChart::e_kappa_tau(-1.0, 0.5).unwrap(),
            ManifoldChart::nil3(1.0).unwrap(),
            ManifoldChart::bump_product(0.1).unwrap(),
        ]
    }

    fn random_point(rng: &mut ChaCha8Rng, chart: &ManifoldChart, margin: f64) -> Point {
        let b = chart.bounds();
        Point::new(
            rng.gen_range(b.lo[0] + margin..b.hi[0] - margin),
            rng.gen_range(b.lo[1] + margin..b.hi[1] - margin),
            rng.gen_range(b.lo[2] + margin..b.hi[2] - margin),
        )
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let chart = ManifoldChart::euclidean();
        let p = Point::new(0.3, -1.2, 0.7);
        assert_eq!(chart.metric(&p).unwrap(), Mat3::identity());
        assert_eq!(chart.inverse_metric(&p).unwrap(), Mat3::identity());
        let gamma = chart.christoffel(&p).unwrap();
        assert_eq!(gamma.symmetry_defect(), 0.0);
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(gamma.get(m, i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn nil3_metric_at_origin_and_unit_x() {
        let chart = ManifoldChart::nil3(1.0).unwrap();
        let g0 = chart.metric(&Point::zeros()).unwrap();
        assert!((g0 - Mat3::identity()).abs().max() == 0.0);

        // hand substitution of x = 1, y = 0 into g_tau
        let g = chart.metric(&Point::new(1.0, 0.0, 0.0)).unwrap();
        let expected = Mat3::new(1.0, 0.0, 0.0, 0.0, 2.0, -1.0, 0.0, -1.0, 1.0);
        assert!((g - expected).abs().max() == 0.0);

        let inv = chart.inverse_metric(&Point::new(1.0, 0.0, 0.0)).unwrap();
        let expected_inv = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 2.0);
        assert!((inv - expected_inv).abs().max() < 1e-14);
    }

    #[test]
    fn h2xr_metric_at_origin_is_identity_and_flat_gradient() {
        let chart = ManifoldChart::h2xr(-1.0).unwrap();
        let g = chart.metric(&Point::zeros()).unwrap();
        assert!((g - Mat3::identity()).abs().max() < 1e-15);
        let gamma = chart.christoffel(&Point::zeros()).unwrap();
        let mut max = 0.0f64;
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    max = max.max(gamma.get(m, i, j).abs());
                }
            }
        }
        assert!(max < 1e-15, "christoffels at the disk center: {max}");
    }

    #[test]
    fn nil3_christoffels_at_origin_match_hand_values() {
        let tau = 1.0;
        let chart = ManifoldChart::nil3(tau).unwrap();
        let gamma = chart.christoffel(&Point::zeros()).unwrap();
        for m in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let expected = match (m, i, j) {
                        (0, 1, 2) | (0, 2, 1) => tau,
                        (1, 0, 2) | (1, 2, 0) => -tau,
                        _ => 0.0,
                    };
                    assert!(
                        (gamma.get(m, i, j) - expected).abs() < 1e-14,
                        "Gamma^{m}_{i}{j} = {} expected {expected}",
                        gamma.get(m, i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn inverse_product_is_identity_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for chart in catalog() {
            for _ in 0..100 {
                let p = random_point(&mut rng, &chart, 1e-3);
                let g = chart.metric(&p).unwrap();
                assert!((g - g.transpose()).abs().max() == 0.0, "symmetry");
                let eigs = g.symmetric_eigen().eigenvalues;
                assert!(eigs.min() > 0.0, "{} not positive definite", chart.name());
                let inv = chart.inverse_metric(&p).unwrap();
                let defect = (inv * g - Mat3::identity()).abs().max();
                assert!(defect < 1e-12, "{}: defect {defect}", chart.name());
            }
        }
    }

    #[test]
    fn finite_difference_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for chart in [
            ManifoldChart::nil3(1.3).unwrap(),
            ManifoldChart::h2xr(-1.0).unwrap(),
            ManifoldChart::e_kappa_tau(-0.7, 0.4).unwrap(),
        ] {
            let fd = chart.clone().with_derivative_mode(DerivativeMode::FiniteDifference {
                step: DEFAULT_FD_STEP,
            });
            for _ in 0..40 {
                let p = random_point(&mut rng, &chart, 0.01);
                let a = chart.christoffel(&p).unwrap();
                let b = fd.christoffel(&p).unwrap();
                assert!(b.symmetry_defect() < 1e-7);
                let mut max = 0.0f64;
                for m in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            max = max.max((a.get(m, i, j) - b.get(m, i, j)).abs());
                        }
                    }
                }
                assert!(max < 1e-6, "{}: fd vs closed {max}", chart.name());
            }
        }
    }

    #[test]
    fn metric_compatibility_under_fd_differentiation() {
        // d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il = 0
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for chart in catalog() {
            for _ in 0..25 {
                let p = random_point(&mut rng, &chart, 0.02);
                let gamma = chart.christoffel(&p).unwrap();
                let h = 1e-4;
                for k in 0..3 {
                    let mut pp = p;
                    let mut pm = p;
                    pp[k] += h;
                    pm[k] -= h;
                    let dg = (chart.metric(&pp).unwrap() - chart.metric(&pm).unwrap()) / (2.0 * h);
                    let g = chart.metric(&p).unwrap();
                    for i in 0..3 {
                        for j in 0..3 {
                            let mut v = dg[(i, j)];
                            for l in 0..3 {
                                v -= gamma.get(l, k, i) * g[(l, j)];
                                v -= gamma.get(l, k, j) * g[(i, l)];
                            }
                            assert!(
                                v.abs() < 1e-6,
                                "{}: compatibility defect {v} at k={k},i={i},j={j}",
                                chart.name()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bump_entry_is_curved_inside_support_flat_outside() {
        let chart = ManifoldChart::bump_product(0.1).unwrap();
        let inside = chart.metric(&Point::new(0.1, 0.0, 0.0)).unwrap();
        assert!(inside[(0, 0)] > 1.0);
        let outside = chart.metric(&Point::new(0.9, 0.3, 0.0)).unwrap();
        assert!((outside - Mat3::identity()).abs().max() == 0.0);
        // rotational symmetry: metric ~ rotation-conjugation invariant
        let g1 = chart.metric(&Point::new(0.2, 0.1, 0.0)).unwrap();
        let r = (0.2f64 * 0.2 + 0.1 * 0.1).sqrt();
        let g2 = chart.metric(&Point::new(r, 0.0, 0.0)).unwrap();
        assert!((g1[(0, 0)] + g1[(1, 1)] - g2[(0, 0)] - g2[(1, 1)]).abs() < 1e-15);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(matches!(
            ManifoldChart::e_kappa_tau(0.5, 1.0),
            Err(CatalogError::BadParameter { .. })
        ));
        assert!(matches!(
            ManifoldChart::nil3(-1.0),
            Err(CatalogError::BadParameter { .. })
        ));
        let mut params = BTreeMap::new();
        params.insert("kappa".into(), -1.0);
        assert!(matches!(
            make_manifold("no-such-entry", &params),
            Err(CatalogError::UnknownName(_))
        ));
        params.insert("bogus".into(), 1.0);
        assert!(matches!(
            make_manifold("h2xr", &params),
            Err(CatalogError::UnexpectedParameter { .. })
        ));
    }

    #[test]
    fn outside_box_is_rejected() {
        let chart = ManifoldChart::h2xr(-1.0).unwrap();
        let err = chart.metric(&Point::new(1.5, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, ChartError::OutsideBox(..)));
    }

    #[test]
    fn unit_vectors_have_unit_norm_at_origin() {
        for chart in catalog() {
            let n = chart.norm(&Point::zeros(), &Vec3::z()).unwrap();
            assert!((n - 1.0).abs() < 1e-12, "{}", chart.name());
        }
    }
}
