//! Monotone rational-quadratic splines with linear tails.
//!
//! Inside `[-B, B]` the map is a piecewise rational-quadratic interpolant
//! through `K + 1` knots; outside it is the identity. Boundary knot
//! derivatives are pinned to 1 so the two pieces join with matching slope.

use crate::error::{Error, Result};
use crate::numerics::Scalar;

pub const DEFAULT_BINS: usize = 4;
pub const DEFAULT_TAIL_BOUND: f64 = 4.0;
pub const MIN_BIN_WIDTH: f64 = 1e-3;
pub const MIN_BIN_HEIGHT: f64 = 1e-3;
pub const MIN_DERIVATIVE: f64 = 1e-3;

/// Offset added to raw derivative parameters so that a raw value of zero maps
/// to a knot derivative of exactly one.
fn derivative_offset() -> f64 {
    ((1.0 - MIN_DERIVATIVE).exp() - 1.0).ln()
}

/// Number of unnormalized parameters for a spline with `bins` bins.
pub fn raw_param_count(bins: usize) -> usize {
    3 * bins - 1
}

/// Unnormalized spline parameters: `K` widths, `K` heights, `K - 1` interior
/// knot derivatives.
#[derive(Debug, Clone)]
pub struct RqsSpline<T> {
    pub bound: f64,
    pub raw_widths: Vec<T>,
    pub raw_heights: Vec<T>,
    pub raw_derivatives: Vec<T>,
}

struct Knots<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    ds: Vec<T>,
}

fn normalized_bins<T: Scalar>(raw: &[T], min_size: f64, bound: f64) -> Vec<T> {
    let k = raw.len();
    let max = raw
        .iter()
        .map(Scalar::value)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<T> = raw.iter().map(|&u| (u - max).exp()).collect();
    let total = T::sum(&exps);
    let span = 2.0 * bound;
    let mut knots = Vec::with_capacity(k + 1);
    knots.push(T::cst(-bound));
    let mut acc = T::cst(0.0);
    for e in exps.iter().take(k - 1) {
        let frac = *e / total * (1.0 - min_size * k as f64) + min_size;
        acc = acc + frac;
        knots.push(acc * span - bound);
    }
    knots.push(T::cst(bound));
    knots
}

impl<T: Scalar> RqsSpline<T> {
    /// Spline from a packed `3K - 1` slice.
    pub fn from_packed(bound: f64, raw: &[T]) -> Result<Self> {
        if raw.len() < 2 || !(raw.len() + 1).is_multiple_of(3) {
            return Err(Error::InvalidArgument(format!(
                "packed spline needs 3K-1 parameters, got {}",
                raw.len()
            )));
        }
        let k = (raw.len() + 1) / 3;
        Ok(Self {
            bound,
            raw_widths: raw[..k].to_vec(),
            raw_heights: raw[k..2 * k].to_vec(),
            raw_derivatives: raw[2 * k..].to_vec(),
        })
    }

    /// Spline that is exactly the identity map.
    pub fn identity(bins: usize, bound: f64) -> Self {
        Self {
            bound,
            raw_widths: vec![T::cst(0.0); bins],
            raw_heights: vec![T::cst(0.0); bins],
            raw_derivatives: vec![T::cst(0.0); bins - 1],
        }
    }

    pub fn bins(&self) -> usize {
        self.raw_widths.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.bins();
        if k == 0 || self.raw_heights.len() != k || self.raw_derivatives.len() + 1 != k {
            return Err(Error::InvalidArgument(
                "inconsistent spline bin counts".into(),
            ));
        }
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tail bound must be positive, got {}",
                self.bound
            )));
        }
        let finite = self
            .raw_widths
            .iter()
            .chain(&self.raw_heights)
            .chain(&self.raw_derivatives)
            .all(|v| v.value().is_finite());
        if !finite {
            return Err(Error::NonFinite("spline parameters".into()));
        }
        Ok(())
    }

    fn knots(&self) -> Result<Knots<T>> {
        self.validate()?;
        let xs = normalized_bins(&self.raw_widths, MIN_BIN_WIDTH, self.bound);
        let ys = normalized_bins(&self.raw_heights, MIN_BIN_HEIGHT, self.bound);
        let offset = derivative_offset();
        let mut ds = Vec::with_capacity(self.bins() + 1);
        ds.push(T::cst(1.0));
        for u in &self.raw_derivatives {
            ds.push((*u + offset).softplus() + MIN_DERIVATIVE);
        }
        ds.push(T::cst(1.0));
        Ok(Knots { xs, ys, ds })
    }
}

fn locate<T: Scalar>(knots: &[T], v: f64) -> usize {
    let k = knots.len() - 1;
    (0..k).find(|&i| v < knots[i + 1].value()).unwrap_or(k - 1)
}

/// `log dy/dx` inside bin with local coordinate `xi`.
fn log_slope<T: Scalar>(xi: T, s: T, d0: T, d1: T) -> T {
    let omx = -xi + 1.0;
    let num = d1 * xi * xi + s * xi * omx * 2.0 + d0 * omx * omx;
    let den = s + (d1 + d0 - s * 2.0) * xi * omx;
    s.ln() * 2.0 + num.ln() - den.ln() * 2.0
}

/// Evaluates the spline at `x`, returning `(y, log dy/dx)`.
pub fn rqs_forward<T: Scalar>(x: T, spline: &RqsSpline<T>) -> Result<(T, T)> {
    let b = spline.bound;
    let xv = x.value();
    if !xv.is_finite() {
        return Err(Error::NonFinite("spline input".into()));
    }
    if xv < -b || xv > b {
        spline.validate()?;
        return Ok((x, T::cst(0.0)));
    }
    let Knots { xs, ys, ds } = spline.knots()?;
    let k = locate(&xs, xv);
    let w = xs[k + 1] - xs[k];
    let h = ys[k + 1] - ys[k];
    let s = h / w;
    let (d0, d1) = (ds[k], ds[k + 1]);
    let xi = (x - xs[k]) / w;
    let omx = -xi + 1.0;
    let num = h * (s * xi * xi + d0 * xi * omx);
    let den = s + (d1 + d0 - s * 2.0) * xi * omx;
    let y = ys[k] + num / den;
    Ok((y, log_slope(xi, s, d0, d1)))
}

/// Inverts the spline at `y`, returning `(x, log dx/dy)`.
pub fn rqs_inverse<T: Scalar>(y: T, spline: &RqsSpline<T>) -> Result<(T, T)> {
    let b = spline.bound;
    let yv = y.value();
    if !yv.is_finite() {
        return Err(Error::NonFinite("spline input".into()));
    }
    if yv < -b || yv > b {
        spline.validate()?;
        return Ok((y, T::cst(0.0)));
    }
    let Knots { xs, ys, ds } = spline.knots()?;
    let k = locate(&ys, yv);
    let w = xs[k + 1] - xs[k];
    let h = ys[k + 1] - ys[k];
    let s = h / w;
    let (d0, d1) = (ds[k], ds[k + 1]);
    let dy = y - ys[k];
    let curv = d1 + d0 - s * 2.0;
    let a = h * (s - d0) + dy * curv;
    let bq = h * d0 - dy * curv;
    let c = -(s * dy);
    let disc = bq * bq - a * c * 4.0;
    let root = if disc.value() > 0.0 {
        disc.sqrt()
    } else {
        T::cst(0.0)
    };
    let xi = c * 2.0 / (-bq - root);
    let x = xi * w + xs[k];
    Ok((x, -log_slope(xi, s, d0, d1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{jvp, Dual};
    use proptest::prelude::*;

    fn spline_from(raw: &[f64]) -> RqsSpline<f64> {
        RqsSpline::from_packed(DEFAULT_TAIL_BOUND, raw).unwrap()
    }

    #[test]
    fn tails_are_identity() {
        let s = spline_from(&[0.3, -1.0, 0.2, 2.0, 0.1, -0.5, 1.0, 0.0, 3.0, -2.0, 0.7]);
        let (y, ld) = rqs_forward(DEFAULT_TAIL_BOUND + 1.0, &s).unwrap();
        assert_eq!(y, DEFAULT_TAIL_BOUND + 1.0);
        assert_eq!(ld, 0.0);
        let (x, ld) = rqs_inverse(-DEFAULT_TAIL_BOUND - 2.5, &s).unwrap();
        assert_eq!(x, -DEFAULT_TAIL_BOUND - 2.5);
        assert_eq!(ld, 0.0);
    }

    #[test]
    fn identity_initialization() {
        let s = RqsSpline::<f64>::identity(DEFAULT_BINS, DEFAULT_TAIL_BOUND);
        let (y, ld) = rqs_forward(0.3, &s).unwrap();
        assert!((y - 0.3).abs() < 1e-15);
        assert!(ld.abs() < 1e-15);
        let (x, ld) = rqs_inverse(-1.7, &s).unwrap();
        assert!((x + 1.7).abs() < 1e-15);
        assert!(ld.abs() < 1e-15);
    }

    #[test]
    fn endpoints_map_to_endpoints() {
        let s = spline_from(&[1.0, -1.0, 0.5, 0.0, 2.0, -2.0, 0.1, 0.4, -0.3, 1.5, 0.2]);
        let b = DEFAULT_TAIL_BOUND;
        assert!((rqs_forward(b, &s).unwrap().0 - b).abs() < 1e-12);
        assert!((rqs_forward(-b, &s).unwrap().0 + b).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_parameters() {
        let s = spline_from(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(rqs_forward(0.1, &s), Err(Error::NonFinite(_))));
        assert!(rqs_forward(9.0, &s).is_err());
    }

    #[test]
    fn log_derivative_matches_forward_mode() {
        let raw = [0.4, -0.7, 1.1, 0.2, -0.3, 0.9, 0.0, -1.2, 0.8, -0.4, 1.3];
        let s_dual = RqsSpline::from_packed(
            DEFAULT_TAIL_BOUND,
            &raw.iter().map(|&v| Dual::constant(v)).collect::<Vec<_>>(),
        )
        .unwrap();
        let s = spline_from(&raw);
        for &x in &[-3.9, -2.0, -0.1, 0.0, 0.8, 2.5, 3.99] {
            let (_, t) = jvp(
                |v| vec![rqs_forward(v[0], &s_dual).unwrap().0],
                &[x],
                &[1.0],
            )
            .unwrap();
            let (_, ld) = rqs_forward(x, &s).unwrap();
            assert!((t[0].ln() - ld).abs() < 1e-12, "x = {x}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_monotone(
            raw in prop::collection::vec(-3.0f64..3.0, 11),
            x in -4.5f64..4.5,
            dx in 1e-4f64..0.5,
        ) {
            let s = spline_from(&raw);
            let (y, ld) = rqs_forward(x, &s).unwrap();
            let (xr, ldi) = rqs_inverse(y, &s).unwrap();
            prop_assert!((xr - x).abs() < 1e-8);
            prop_assert!((ld + ldi).abs() < 1e-8);
            prop_assert!(ld.is_finite());
            let (y2, _) = rqs_forward(x + dx, &s).unwrap();
            prop_assert!(y2 > y);
        }
    }
}
