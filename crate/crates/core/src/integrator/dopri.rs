//! Dormand–Prince 5(4) pair with dense output of order 4.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub type Vec2 = [f64; 2];

#[inline]
fn axpy(y: Vec2, h: f64, terms: &[(f64, Vec2)]) -> Vec2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Result of one attempted step.
pub struct Attempt {
    pub y1: Vec2,
    /// Derivative at the new point; reused as the first stage of the next step.
    pub k7: Vec2,
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
    pub dense: [Vec2; 5],
}

pub fn attempt<F: Fn(f64, Vec2) -> Vec2>(
    rhs: &F,
    r: f64,
    y: Vec2,
    k1: Vec2,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Attempt {
    let k2 = rhs(r + C2 * h, axpy(y, h, &[(A21, k1)]));
    let k3 = rhs(r + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]));
    let k4 = rhs(r + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = rhs(r + C5 * h, axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = rhs(r + h, axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
    let y1 = axpy(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    let k7 = rhs(r + h, y1);

    let mut err = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = abs_tol + rel_tol * y[i].abs().max(y1[i].abs());
        err += (e / sc) * (e / sc);
    }
    let mut err = (err / 2.0).sqrt();

    let mut dense = [[0.0; 2]; 5];
    for i in 0..2 {
        let diff = y1[i] - y[i];
        let bspl = h * k1[i] - diff;
        dense[0][i] = y[i];
        dense[1][i] = diff;
        dense[2][i] = bspl;
        dense[3][i] = diff - h * k7[i] - bspl;
        dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    if !err.is_finite() {
        err = f64::INFINITY;
    }
    Attempt { y1, k7, err, dense }
}

/// Evaluates the dense polynomial at `θ ∈ [0, 1]`.
#[inline]
pub fn dense_eval(c: &[Vec2; 5], theta: f64) -> Vec2 {
    let t1 = 1.0 - theta;
    let mut out = [0.0; 2];
    for i in 0..2 {
        out[i] = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
    }
    out
}

/// PI step-size controller.
#[derive(Debug, Clone, Copy)]
pub struct Controller {
    prev_err: f64,
}

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - 0.75 * BETA;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

impl Default for Controller {
    fn default() -> Self {
        Controller { prev_err: 1e-4 }
    }
}

impl Controller {
    /// New step size after an accepted step.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let fac11 = err.max(1e-300).powf(EXPO);
        let fac = fac11 / self.prev_err.powf(BETA);
        let fac = (fac / SAFETY).clamp(1.0 / MAX_FACTOR, 1.0 / MIN_FACTOR);
        self.prev_err = err.max(1e-4);
        h / fac
    }

    /// Reduced step size after a rejection.
    pub fn reject(&self, h: f64, err: f64) -> f64 {
        if !err.is_finite() {
            return 0.1 * h;
        }
        let fac11 = err.powf(EXPO);
        h / (fac11 / SAFETY).min(1.0 / MIN_FACTOR)
    }
}
