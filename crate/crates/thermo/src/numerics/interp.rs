//! Interpolation helpers: natural cubic splines and local parabolic peaks.

/// Natural cubic spline through `(x, y)` samples, `x` strictly increasing.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>, // second derivatives at the knots
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> CubicSpline {
        let n = x.len();
        assert!(n >= 2, "spline needs at least two points");
        assert_eq!(n, y.len());
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "spline abscissae must be strictly increasing"
        );
        // tridiagonal solve for natural boundary conditions
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n - 2];
            let mut rhs = vec![0.0; n - 2];
            let mut upper = vec![0.0; n - 2];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            // Thomas algorithm (lower diagonal equals previous upper)
            for i in 1..n - 2 {
                let l = x[i + 1] - x[i];
                let w = l / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; n - 2];
            sol[n - 3] = rhs[n - 3] / diag[n - 3];
            for i in (0..n - 3).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            for i in 0..n - 2 {
                m[i + 1] = sol[i];
            }
        }
        CubicSpline { x, y, m }
    }

    fn segment(&self, xq: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).expect("NaN in spline query"))
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Evaluate the spline; extrapolates with the boundary cubic.
    pub fn eval(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a.powi(3) - a) * self.m[i] + (b.powi(3) - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Integral of the interpolant over its full range.
    pub fn integrate(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            acc += 0.5 * h * (self.y[i] + self.y[i + 1])
                - h.powi(3) * (self.m[i] + self.m[i + 1]) / 24.0;
        }
        acc
    }

    /// Derivative of the spline at `xq`.
    pub fn deriv(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }
}

/// Parabolic refinement of a grid maximum.
///
/// Fits a parabola through the sample at index `i` and its neighbours and
/// returns the interpolated `(x_peak, y_peak)`. Falls back to the raw
/// sample when the parabola degenerates.
pub fn parabolic_peak(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    assert!(i > 0 && i + 1 < x.len(), "peak index must be interior");
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    // Lagrange parabola in the local coordinates
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let c2 = (d1 - d0) / (x2 - x0);
    if c2 >= 0.0 || !c2.is_finite() {
        return (x1, y1);
    }
    // Newton form y = y0 + d0 (x-x0) + c2 (x-x0)(x-x1); stationary point:
    let xp = 0.5 * (x0 + x1) - 0.5 * d0 / c2;
    let yp = y0 + d0 * (xp - x0) + c2 * (xp - x0) * (xp - x1);
    (xp, yp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_interpolates_smooth_function() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x * 0.9).sin()).collect();
        let sp = CubicSpline::new(xs.clone(), ys);
        // interior points; the natural boundary condition costs accuracy
        // within the first couple of intervals
        for &xq in &[1.23, 2.95, 4.5, 5.11] {
            assert!((sp.eval(xq) - (xq * 0.9f64).sin()).abs() < 2e-5);
            assert!((sp.deriv(xq) - 0.9 * (xq * 0.9f64).cos()).abs() < 2e-3);
        }
    }

    #[test]
    fn spline_integral_of_smooth_function() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.exp()).collect();
        let sp = CubicSpline::new(xs, ys);
        let exact = 1.99f64.exp() - 1.0;
        // natural boundary conditions dominate the error
        assert!((sp.integrate() - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn parabolic_peak_exact_on_parabola() {
        let xs = [1.0, 2.0, 3.5];
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 - 2.0 * (x - 2.3) * (x - 2.3)).collect();
        let (xp, yp) = parabolic_peak(&xs, &ys, 1);
        assert!((xp - 2.3).abs() < 1e-12);
        assert!((yp - 3.0).abs() < 1e-12);
    }
}
