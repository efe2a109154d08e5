//! Slice-level kernels for Poincaré-ball arithmetic.
//!
//! These operate on raw coordinate slices with no validity checks; the typed
//! wrappers in the parent module add validation and re-projection. The
//! trainer calls them directly on its flat parameter arrays to avoid
//! per-sample allocation.

/// Margin kept between any produced point and the unit sphere.
pub const BALL_EPS: f64 = 1e-5;

/// artanh arguments are clamped to at most this value.
pub const ATANH_MAX_ARG: f64 = 1.0 - 1e-12;

pub(crate) const TINY: f64 = 1e-300;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// acosh with the argument clamped up to 1, so that floating-point drift
/// slightly below 1 yields distance 0 instead of NaN.
#[inline]
pub fn acosh_clamped(arg: f64) -> f64 {
    if arg <= 1.0 {
        0.0
    } else {
        arg.acosh()
    }
}

#[inline]
pub fn atanh_clamped(t: f64) -> f64 {
    t.min(ATANH_MAX_ARG).atanh()
}

/// λ_x = 2 / (1 − ‖x‖²).
#[inline]
pub fn conformal_factor(x: &[f64]) -> f64 {
    2.0 / (1.0 - norm_sq(x))
}

/// d(x, y) = acosh(1 + λ_x λ_y ‖x − y‖² / 2).
pub fn ball_distance(x: &[f64], y: &[f64]) -> f64 {
    let alpha = 1.0 - norm_sq(x);
    let beta = 1.0 - norm_sq(y);
    let q = dist_sq(x, y);
    acosh_clamped(1.0 + 2.0 * q / (alpha * beta))
}

/// Intermediate quantities of the ball distance, exposed so that gradient
/// code can reuse them without recomputing dots.
#[derive(Debug, Clone, Copy)]
pub struct DistanceParts {
    /// acosh argument: 1 + 2q/(αβ).
    pub gamma: f64,
    /// 1 − ‖x‖².
    pub alpha: f64,
    /// 1 − ‖y‖².
    pub beta: f64,
    /// ‖x − y‖².
    pub q: f64,
    pub dist: f64,
}

pub fn ball_distance_parts(x: &[f64], y: &[f64]) -> DistanceParts {
    let alpha = 1.0 - norm_sq(x);
    let beta = 1.0 - norm_sq(y);
    let q = dist_sq(x, y);
    let gamma = 1.0 + 2.0 * q / (alpha * beta);
    DistanceParts {
        gamma,
        alpha,
        beta,
        q,
        dist: acosh_clamped(gamma),
    }
}

/// x ⊕ y, written to `out`. No projection.
pub fn mobius_add_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    let xy = dot(x, y);
    let xs = norm_sq(x);
    let ys = norm_sq(y);
    let denom = 1.0 + 2.0 * xy + xs * ys;
    let cx = (1.0 + 2.0 * xy + ys) / denom;
    let cy = (1.0 - xs) / denom;
    for i in 0..out.len() {
        out[i] = cx * x[i] + cy * y[i];
    }
}

/// y ← x ⊕ y in place.
pub fn mobius_add_assign_second(x: &[f64], y: &mut [f64]) {
    let xy = dot(x, y);
    let xs = norm_sq(x);
    let ys = norm_sq(y);
    let denom = 1.0 + 2.0 * xy + xs * ys;
    let cx = (1.0 + 2.0 * xy + ys) / denom;
    let cy = (1.0 - xs) / denom;
    for i in 0..y.len() {
        y[i] = cx * x[i] + cy * y[i];
    }
}

/// (⊖x) ⊕ y, written to `out`. No projection.
pub fn mobius_sub_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    let xy = -dot(x, y);
    let xs = norm_sq(x);
    let ys = norm_sq(y);
    let denom = 1.0 + 2.0 * xy + xs * ys;
    let cx = -(1.0 + 2.0 * xy + ys) / denom;
    let cy = (1.0 - xs) / denom;
    for i in 0..out.len() {
        out[i] = cx * x[i] + cy * y[i];
    }
}

/// r ⊗ x = tanh(r·artanh‖x‖) x/‖x‖, with r ⊗ 0 := 0. No projection.
pub fn mobius_scalar_into(r: f64, x: &[f64], out: &mut [f64]) {
    let n = norm(x);
    if n < TINY {
        out.fill(0.0);
        return;
    }
    let scale = (r * atanh_clamped(n)).tanh() / n;
    for i in 0..out.len() {
        out[i] = scale * x[i];
    }
}

/// exp_x(v) = x ⊕ (tanh(λ_x ‖v‖ / 2) v/‖v‖), projected into the ball.
pub fn exp_map_into(x: &[f64], v: &[f64], out: &mut [f64]) {
    let n = norm(v);
    if n < TINY {
        out.copy_from_slice(x);
    } else {
        let scale = (conformal_factor(x) * n / 2.0).tanh() / n;
        for i in 0..out.len() {
            out[i] = scale * v[i];
        }
        mobius_add_assign_second(x, out);
    }
    project_in_place(out, BALL_EPS);
}

/// log_x(y) = (2/λ_x) artanh(‖⊖x ⊕ y‖) (⊖x ⊕ y)/‖⊖x ⊕ y‖; zero when y = x.
pub fn log_map_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    mobius_sub_into(x, y, out);
    let n = norm(out);
    if n < TINY {
        out.fill(0.0);
        return;
    }
    let scale = 2.0 / conformal_factor(x) * atanh_clamped(n) / n;
    for v in out.iter_mut() {
        *v *= scale;
    }
}

/// gyr[u, v]w = w + 2(Au + Bv)/D. Linear and norm-preserving in w.
pub fn gyration_into(u: &[f64], v: &[f64], w: &[f64], out: &mut [f64]) {
    let uv = dot(u, v);
    let uw = dot(u, w);
    let vw = dot(v, w);
    let us = norm_sq(u);
    let vs = norm_sq(v);
    let a = -uw * vs + vw + 2.0 * uv * vw;
    let b = -vw * us - uw;
    let d = 1.0 + 2.0 * uv + us * vs;
    for i in 0..out.len() {
        out[i] = w[i] + 2.0 * (a * u[i] + b * v[i]) / d;
    }
}

/// Rescales `x` onto the sphere of radius 1 − eps when it lies outside.
pub fn project_in_place(x: &mut [f64], eps: f64) {
    let max_norm = 1.0 - eps;
    let n = norm(x);
    if n > max_norm {
        let scale = max_norm / n;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
}
