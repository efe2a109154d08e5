//! Exact closed-form hyperbolic geometry: Poincaré-ball and half-plane
//! distances, Möbius operations, exp/log maps, gyrations, parallel transport,
//! geodesic interpolation, and the disk↔half-plane isometry.
//!
//! All operations are pure; every point-producing operation re-projects its
//! result to norm ≤ 1 − [`BALL_EPS`] so conformal factors stay bounded.

pub mod ops;

pub use ops::{ATANH_MAX_ARG, BALL_EPS};

use crate::error::{Error, Result};

/// A point of the open unit ball D^k.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    /// Validates that the coordinates are finite and strictly inside the
    /// unit ball.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        let n = ops::norm(&coords);
        if n >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "point norm {n} is not < 1"
            )));
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// Builds a point from arbitrary finite coordinates, rescaling onto the
    /// sphere of radius 1 − eps when they fall outside.
    pub fn project_with_margin(mut coords: Vec<f64>, eps: f64) -> Result<Self> {
        check_finite(&coords)?;
        ops::project_in_place(&mut coords, eps);
        Ok(Self { coords })
    }

    /// [`BallPoint::project_with_margin`] with the standard margin.
    pub fn project(coords: Vec<f64>) -> Result<Self> {
        Self::project_with_margin(coords, BALL_EPS)
    }

    pub(crate) fn from_inside(coords: Vec<f64>) -> Self {
        debug_assert!(ops::norm(&coords) < 1.0);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        ops::norm(&self.coords)
    }

    /// ⊖x, the Möbius inverse (ordinary negation).
    pub fn neg(&self) -> BallPoint {
        Self {
            coords: self.coords.iter().map(|v| -v).collect(),
        }
    }
}

/// A point (a, y) of the half-plane H², y > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    pub a: f64,
    pub y: f64,
}

impl HalfPlanePoint {
    pub fn new(a: f64, y: f64) -> Result<Self> {
        if !a.is_finite() || !y.is_finite() || y <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "half-plane point ({a}, {y}) needs finite a and y > 0"
            )));
        }
        Ok(Self { a, y })
    }
}

/// A point of the product manifold (D^k)^p.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    factors: Vec<BallPoint>,
}

impl ProductPoint {
    pub fn new(factors: Vec<BallPoint>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("product point needs p >= 1".into()));
        }
        let k = factors[0].dim();
        if factors.iter().any(|f| f.dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: format!("all factors of dimension {k}"),
                got: "mixed factor dimensions".into(),
            });
        }
        Ok(Self { factors })
    }

    /// Reads p·k flat coordinates as p consecutive k-dimensional factors,
    /// projecting each into the ball.
    pub fn from_flat(coords: &[f64], p: usize, k: usize) -> Result<Self> {
        if coords.len() != p * k {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coordinates", p * k),
                got: format!("{}", coords.len()),
            });
        }
        let factors = coords
            .chunks_exact(k)
            .map(|c| BallPoint::project(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    pub fn factors(&self) -> &[BallPoint] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factor_dim(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_factors() * self.factor_dim());
        for f in &self.factors {
            out.extend_from_slice(f.coords());
        }
        out
    }
}

/// A tangent vector anchored at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: BallPoint,
    pub vec: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: BallPoint, vec: Vec<f64>) -> Result<Self> {
        check_finite(&vec)?;
        if vec.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}", base.dim()),
                got: format!("{}", vec.len()),
            });
        }
        Ok(Self { base, vec })
    }
}

fn check_finite(coords: &[f64]) -> Result<()> {
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    Ok(())
}

fn check_same_dim(x: &BallPoint, y: &BallPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}", x.dim()),
            got: format!("{}", y.dim()),
        });
    }
    Ok(())
}

/// λ_x = 2/(1 − ‖x‖²) ≥ 2.
pub fn conformal_factor(x: &BallPoint) -> f64 {
    ops::conformal_factor(x.coords())
}

/// Hyperbolic distance in the ball.
pub fn ball_distance(x: &BallPoint, y: &BallPoint) -> f64 {
    debug_assert_eq!(x.dim(), y.dim());
    ops::ball_distance(x.coords(), y.coords())
}

/// Hyperbolic distance in the half-plane:
/// acosh(1 + ‖x − y‖²/(2 y₁ y₂)).
pub fn halfplane_distance(x: &HalfPlanePoint, y: &HalfPlanePoint) -> f64 {
    let d2 = (x.a - y.a) * (x.a - y.a) + (x.y - y.y) * (x.y - y.y);
    ops::acosh_clamped(1.0 + d2 / (2.0 * x.y * y.y))
}

/// Product distance: the l² combination of per-factor ball distances.
pub fn product_distance(x: &ProductPoint, y: &ProductPoint) -> Result<f64> {
    if x.num_factors() != y.num_factors() || x.factor_dim() != y.factor_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("({})^{}", x.factor_dim(), x.num_factors()),
            got: format!("({})^{}", y.factor_dim(), y.num_factors()),
        });
    }
    let sum: f64 = x
        .factors()
        .iter()
        .zip(y.factors())
        .map(|(a, b)| {
            let d = ball_distance(a, b);
            d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Möbius addition x ⊕ y, re-projected into the ball.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_same_dim(x, y)?;
    let mut out = vec![0.0; x.dim()];
    ops::mobius_add_into(x.coords(), y.coords(), &mut out);
    ops::project_in_place(&mut out, BALL_EPS);
    Ok(BallPoint::from_inside(out))
}

/// Möbius subtraction (⊖x) ⊕ y.
pub fn mobius_sub(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_same_dim(x, y)?;
    let mut out = vec![0.0; x.dim()];
    ops::mobius_sub_into(x.coords(), y.coords(), &mut out);
    ops::project_in_place(&mut out, BALL_EPS);
    Ok(BallPoint::from_inside(out))
}

/// Möbius scalar multiplication r ⊗ x, with r ⊗ 0 := 0.
pub fn mobius_scalar(r: f64, x: &BallPoint) -> BallPoint {
    let mut out = vec![0.0; x.dim()];
    ops::mobius_scalar_into(r, x.coords(), &mut out);
    ops::project_in_place(&mut out, BALL_EPS);
    BallPoint::from_inside(out)
}

/// exp_x(v). The tangent vector must be based at x.
pub fn exp_map(x: &BallPoint, v: &TangentVector) -> Result<BallPoint> {
    if v.base != *x {
        return Err(Error::InvalidInput(
            "tangent vector is based at a different point".into(),
        ));
    }
    let mut out = vec![0.0; x.dim()];
    ops::exp_map_into(x.coords(), &v.vec, &mut out);
    Ok(BallPoint::from_inside(out))
}

/// log_x(y), the inverse of exp_x; returns the zero vector when y = x.
pub fn log_map(x: &BallPoint, y: &BallPoint) -> Result<TangentVector> {
    check_same_dim(x, y)?;
    let mut out = vec![0.0; x.dim()];
    ops::log_map_into(x.coords(), y.coords(), &mut out);
    TangentVector::new(x.clone(), out)
}

/// The gyroautomorphism gyr[u, v] applied to an arbitrary vector w.
pub fn gyration(u: &BallPoint, v: &BallPoint, w: &[f64]) -> Result<Vec<f64>> {
    check_same_dim(u, v)?;
    if w.len() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}", u.dim()),
            got: format!("{}", w.len()),
        });
    }
    let mut out = vec![0.0; w.len()];
    ops::gyration_into(u.coords(), v.coords(), w, &mut out);
    Ok(out)
}

/// P_{x→y}(v) = (λ_x/λ_y) gyr[y, ⊖x] v, re-based at y.
pub fn parallel_transport(y: &BallPoint, v: &TangentVector) -> Result<TangentVector> {
    let x = &v.base;
    check_same_dim(x, y)?;
    let neg_x = x.neg();
    let mut out = vec![0.0; y.dim()];
    ops::gyration_into(y.coords(), neg_x.coords(), &v.vec, &mut out);
    let scale = conformal_factor(x) / conformal_factor(y);
    for c in out.iter_mut() {
        *c *= scale;
    }
    TangentVector::new(y.clone(), out)
}

/// Point at fraction t along the geodesic from a to b:
/// a ⊕ ((⊖a ⊕ b) ⊗ t).
pub fn geodesic_point(a: &BallPoint, b: &BallPoint, t: f64) -> Result<BallPoint> {
    let diff = mobius_sub(a, b)?;
    let scaled = mobius_scalar(t, &diff);
    mobius_add(a, &scaled)
}

/// Isometry φ: D² → H², (a, y) = (2x₁, 1 − ‖x‖²)/D with D = (1 − x₂)² + x₁².
///
/// The disk origin maps to (0, 1); the boundary point (0, 1) is sent to
/// infinity, so points with 1 − x₂ < [`BALL_EPS`] are rejected as out of
/// numeric range.
pub fn disk_to_halfplane(x: &BallPoint) -> Result<HalfPlanePoint> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2".into(),
            got: format!("{}", x.dim()),
        });
    }
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    if 1.0 - x2 < BALL_EPS {
        return Err(Error::InvalidInput(format!(
            "point with 1 - x2 = {} is out of numeric range for the half-plane map",
            1.0 - x2
        )));
    }
    let d = (1.0 - x2) * (1.0 - x2) + x1 * x1;
    HalfPlanePoint::new(2.0 * x1 / d, (1.0 - ops::norm_sq(x.coords())) / d)
}

/// Inverse of [`disk_to_halfplane`]:
/// x = (2a, a² + y² − 1)/E with E = (1 + y)² + a².
pub fn halfplane_to_disk(h: &HalfPlanePoint) -> Result<BallPoint> {
    let e = (1.0 + h.y) * (1.0 + h.y) + h.a * h.a;
    BallPoint::project(vec![2.0 * h.a / e, (h.a * h.a + h.y * h.y - 1.0) / e])
}

/// Applies the unique rotation sending the unit vector u to (0, 1):
/// R = [[u₂, −u₁], [u₁, u₂]]. Rejects u unless ‖u‖ is within 1e−6 of 1.
pub fn rotate_about_origin(u: [f64; 2], x: &BallPoint) -> Result<BallPoint> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2".into(),
            got: format!("{}", x.dim()),
        });
    }
    let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "rotation direction has norm {n}, not within 1e-6 of 1"
        )));
    }
    let (u1, u2) = (u[0] / n, u[1] / n);
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    // Rotations about the origin are ball isometries; the result stays at
    // the same norm, no projection needed.
    Ok(BallPoint::from_inside(vec![
        u2 * x1 - u1 * x2,
        u1 * x1 + u2 * x2,
    ]))
}

/// Rescales x to norm exactly 1 − eps when it lies outside; errors on
/// non-finite input.
pub fn project_to_ball(coords: Vec<f64>, eps: f64) -> Result<BallPoint> {
    BallPoint::project_with_margin(coords, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bp(coords: &[f64]) -> BallPoint {
        BallPoint::new(coords.to_vec()).unwrap()
    }

    fn random_point(rng: &mut impl Rng, dim: usize, max_norm: f64) -> BallPoint {
        loop {
            let coords: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if ops::norm(&coords) < 1.0 {
                let scale = rng.gen_range(0.0..max_norm) / ops::norm(&coords).max(1e-12);
                if scale * ops::norm(&coords) < max_norm {
                    return BallPoint::new(coords.iter().map(|c| c * scale).collect()).unwrap();
                }
            }
        }
    }

    #[test]
    fn conformal_factor_values() {
        assert_eq!(conformal_factor(&BallPoint::origin(2)), 2.0);
        assert_abs_diff_eq!(
            conformal_factor(&bp(&[0.5, 0.0])),
            8.0 / 3.0,
            epsilon = 1e-15
        );
        // Finite and bounded at the projection margin.
        let boundary = BallPoint::project(vec![1.0, 0.0]).unwrap();
        let lam = conformal_factor(&boundary);
        assert!(lam.is_finite());
        assert!(lam <= 2.0 / BALL_EPS * 1.001);
    }

    #[test]
    fn ball_distance_values() {
        let x = bp(&[0.3, -0.2]);
        assert_eq!(ball_distance(&x, &x), 0.0);

        // d(0, x) = 2 artanh ‖x‖; at ‖x‖ = 0.5 this is ln 3.
        let d = ball_distance(&BallPoint::origin(2), &bp(&[0.5, 0.0]));
        assert_abs_diff_eq!(d, 3.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-12);

        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_point(&mut rng, 3, 0.95);
            let b = random_point(&mut rng, 3, 0.95);
            assert_abs_diff_eq!(ball_distance(&a, &b), ball_distance(&b, &a), epsilon = 0.0);
        }
    }

    #[test]
    fn halfplane_distance_values() {
        let base = HalfPlanePoint::new(0.0, 1.0).unwrap();
        assert_eq!(halfplane_distance(&base, &base), 0.0);

        let e = std::f64::consts::E;
        let up = HalfPlanePoint::new(0.0, e).unwrap();
        assert_abs_diff_eq!(halfplane_distance(&base, &up), 1.0, epsilon = 1e-12);

        // Vertical symmetry y ↔ 1/y.
        for y in [0.2, 0.7, 3.0, 11.0] {
            let a = HalfPlanePoint::new(0.0, y).unwrap();
            let b = HalfPlanePoint::new(0.0, 1.0 / y).unwrap();
            assert_abs_diff_eq!(
                halfplane_distance(&base, &a),
                halfplane_distance(&base, &b),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn product_distance_values() {
        let x = ProductPoint::new(vec![bp(&[0.1, 0.2]), bp(&[0.0, -0.4])]).unwrap();
        assert_eq!(product_distance(&x, &x).unwrap(), 0.0);

        // Degenerate p = 1 product is the ball distance.
        let a = ProductPoint::new(vec![bp(&[0.3, 0.0])]).unwrap();
        let b = ProductPoint::new(vec![bp(&[0.0, 0.5])]).unwrap();
        assert_eq!(
            product_distance(&a, &b).unwrap(),
            ball_distance(&a.factors()[0], &b.factors()[0])
        );

        // Two factors each at distance ln 3 combine to √2 ln 3.
        let o = BallPoint::origin(2);
        let h = bp(&[0.5, 0.0]);
        let x = ProductPoint::new(vec![o.clone(), o.clone()]).unwrap();
        let y = ProductPoint::new(vec![h.clone(), h.clone()]).unwrap();
        assert_abs_diff_eq!(
            product_distance(&x, &y).unwrap(),
            2.0f64.sqrt() * 3.0f64.ln(),
            epsilon = 1e-12
        );

        let short = ProductPoint::new(vec![o]).unwrap();
        assert!(product_distance(&x, &short).is_err());
    }

    #[test]
    fn mobius_add_values() {
        let y = bp(&[0.3, -0.1, 0.2]);
        let zero = BallPoint::origin(3);
        assert_abs_diff_eq!(
            ops::norm(mobius_add(&zero, &y).unwrap().coords()),
            y.norm(),
            epsilon = 1e-15
        );
        assert_eq!(mobius_add(&zero, &y).unwrap(), y);

        let x = bp(&[0.4, 0.25, -0.3]);
        let sum = mobius_add(&x, &x.neg()).unwrap();
        assert!(sum.norm() < 1e-15);

        // Collinear points reduce to the scalar law (a + b)/(1 + ab).
        let s = mobius_add(&bp(&[0.5, 0.0]), &bp(&[0.25, 0.0])).unwrap();
        assert_abs_diff_eq!(s.coords()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.coords()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mobius_scalar_values() {
        let x = bp(&[0.5, 0.0]);
        assert_abs_diff_eq!(
            mobius_scalar(1.0, &x).coords()[0],
            0.5,
            epsilon = 1e-15
        );
        assert_eq!(mobius_scalar(0.0, &x), BallPoint::origin(2));
        assert_eq!(mobius_scalar(2.5, &BallPoint::origin(2)), BallPoint::origin(2));

        // tanh(2 artanh 0.5) = tanh(ln 3) = 0.8.
        let doubled = mobius_scalar(2.0, &x);
        assert_abs_diff_eq!(doubled.coords()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(doubled.coords()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_log_values() {
        let x = bp(&[0.2, -0.1]);
        let zero = TangentVector::new(x.clone(), vec![0.0, 0.0]).unwrap();
        assert_eq!(exp_map(&x, &zero).unwrap(), x);

        let o = BallPoint::origin(2);
        let v = TangentVector::new(o.clone(), vec![0.25, 0.0]).unwrap();
        let moved = exp_map(&o, &v).unwrap();
        assert_abs_diff_eq!(moved.coords()[0], 0.25f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(moved.coords()[1], 0.0, epsilon = 1e-15);

        // Tangent magnitudes are bounded in the Riemannian norm λ_x‖v‖:
        // past ~λ_x‖v‖/2 ≈ 18.7 the exp map's tanh saturates to 1.0 in f64
        // and no implementation can invert it.
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = random_point(&mut rng, 4, 0.9);
            let mut vec: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let riem_target = rng.gen_range(0.0..5.0);
            let scale = riem_target / (conformal_factor(&x) * ops::norm(&vec)).max(1e-12);
            for c in vec.iter_mut() {
                *c *= scale;
            }
            let v = TangentVector::new(x.clone(), vec.clone()).unwrap();
            let y = exp_map(&x, &v).unwrap();
            let back = log_map(&x, &y).unwrap();
            for (a, b) in back.vec.iter().zip(&vec) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gyration_values() {
        let u = bp(&[0.3, 0.1, -0.2]);
        let zero = BallPoint::origin(3);
        let w = vec![0.7, -1.3, 0.4];
        assert_eq!(gyration(&u, &zero, &w).unwrap(), w);
        assert_eq!(gyration(&zero, &u, &w).unwrap(), w);

        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..500 {
            let u = random_point(&mut rng, 3, 0.95);
            let v = random_point(&mut rng, 3, 0.95);
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let g = gyration(&u, &v, &w).unwrap();
            assert_abs_diff_eq!(ops::norm(&g), ops::norm(&w), epsilon = 1e-10);
        }
    }

    #[test]
    fn parallel_transport_values() {
        let x = bp(&[0.2, 0.3]);
        let v = TangentVector::new(x.clone(), vec![0.5, -0.7]).unwrap();
        let same = parallel_transport(&x, &v).unwrap();
        assert_abs_diff_eq!(same.vec[0], v.vec[0], epsilon = 1e-14);
        assert_abs_diff_eq!(same.vec[1], v.vec[1], epsilon = 1e-14);

        // Round trip through the origin.
        let o = BallPoint::origin(2);
        let y = bp(&[0.6, -0.2]);
        let v0 = TangentVector::new(o.clone(), vec![1.0, 0.25]).unwrap();
        let there = parallel_transport(&y, &v0).unwrap();
        let back = parallel_transport(&o, &there).unwrap();
        assert_abs_diff_eq!(back.vec[0], v0.vec[0], epsilon = 1e-9);
        assert_abs_diff_eq!(back.vec[1], v0.vec[1], epsilon = 1e-9);

        // Riemannian norm is preserved: λ_y ‖Pv‖ = λ_x ‖v‖.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = random_point(&mut rng, 2, 0.9);
            let y = random_point(&mut rng, 2, 0.9);
            let vec: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v = TangentVector::new(x.clone(), vec).unwrap();
            let t = parallel_transport(&y, &v).unwrap();
            assert_abs_diff_eq!(
                conformal_factor(&y) * ops::norm(&t.vec),
                conformal_factor(&x) * ops::norm(&v.vec),
                epsilon = 1e-9 * conformal_factor(&x) * ops::norm(&v.vec).max(1.0)
            );
        }
    }

    #[test]
    fn geodesic_point_values() {
        let a = bp(&[0.3, -0.4]);
        let b = bp(&[-0.2, 0.5]);
        let p0 = geodesic_point(&a, &b, 0.0).unwrap();
        let p1 = geodesic_point(&a, &b, 1.0).unwrap();
        assert_abs_diff_eq!(p0.coords()[0], a.coords()[0], epsilon = 1e-14);
        assert_abs_diff_eq!(p0.coords()[1], a.coords()[1], epsilon = 1e-14);
        assert_abs_diff_eq!(p1.coords()[0], b.coords()[0], epsilon = 1e-12);
        assert_abs_diff_eq!(p1.coords()[1], b.coords()[1], epsilon = 1e-12);

        let mid = geodesic_point(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(
            ball_distance(&mid, &a),
            ball_distance(&mid, &b),
            epsilon = 1e-9
        );
    }

    #[test]
    fn disk_halfplane_values() {
        let phi0 = disk_to_halfplane(&BallPoint::origin(2)).unwrap();
        assert_abs_diff_eq!(phi0.a, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(phi0.y, 1.0, epsilon = 0.0);

        // Vertical segment maps to the positive axis with y = (1 + r)/(1 − r).
        let up = disk_to_halfplane(&bp(&[0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(up.a, 0.0, epsilon = 0.0);
        assert_abs_diff_eq!(up.y, 3.0, epsilon = 1e-15);

        let right = disk_to_halfplane(&bp(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(right.a, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(right.y, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(
            halfplane_distance(&phi0, &right),
            3.0f64.ln(),
            epsilon = 1e-12
        );

        // Points too close to the boundary point (0, 1) are rejected.
        assert!(disk_to_halfplane(&bp(&[0.0, 1.0 - 1e-7])).is_err());

        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x = random_point(&mut rng, 2, 0.95);
            let y = random_point(&mut rng, 2, 0.95);
            let (hx, hy) = (disk_to_halfplane(&x).unwrap(), disk_to_halfplane(&y).unwrap());
            assert_abs_diff_eq!(
                halfplane_distance(&hx, &hy),
                ball_distance(&x, &y),
                epsilon = 1e-9
            );
            let back = halfplane_to_disk(&hx).unwrap();
            assert_abs_diff_eq!(back.coords()[0], x.coords()[0], epsilon = 1e-10);
            assert_abs_diff_eq!(back.coords()[1], x.coords()[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn rotation_values() {
        let x = bp(&[0.12, -0.35]);
        let id = rotate_about_origin([0.0, 1.0], &x).unwrap();
        assert_eq!(id, x);

        let quarter = rotate_about_origin([1.0, 0.0], &bp(&[0.3, 0.0])).unwrap();
        assert_abs_diff_eq!(quarter.coords()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(quarter.coords()[1], 0.3, epsilon = 1e-15);

        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..200 {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let u = [theta.cos(), theta.sin()];
            let a = random_point(&mut rng, 2, 0.95);
            let b = random_point(&mut rng, 2, 0.95);
            let (ra, rb) = (
                rotate_about_origin(u, &a).unwrap(),
                rotate_about_origin(u, &b).unwrap(),
            );
            assert_abs_diff_eq!(
                ball_distance(&ra, &rb),
                ball_distance(&a, &b),
                epsilon = 1e-12
            );
        }

        // Slightly off-unit directions are normalized, far-off ones rejected.
        assert!(rotate_about_origin([0.0, 1.0 + 1e-7], &x).is_ok());
        assert!(rotate_about_origin([0.0, 1.5], &x).is_err());
    }

    #[test]
    fn project_to_ball_values() {
        let inside = project_to_ball(vec![0.1, 0.1], 1e-5).unwrap();
        assert_eq!(inside.coords(), &[0.1, 0.1]);

        let clipped = project_to_ball(vec![2.0, 0.0], 1e-5).unwrap();
        assert_abs_diff_eq!(clipped.coords()[0], 0.99999, epsilon = 1e-15);
        assert_eq!(clipped.coords()[1], 0.0);

        let zero = project_to_ball(vec![0.0, 0.0], 1e-5).unwrap();
        assert_eq!(zero, BallPoint::origin(2));

        assert!(project_to_ball(vec![f64::NAN, 0.0], 1e-5).is_err());
        assert!(project_to_ball(vec![f64::INFINITY, 0.0], 1e-5).is_err());
    }
}
