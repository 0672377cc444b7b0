//! Dormand–Prince 5(4) integrator with step-size control and the classical
//! fourth-order continuous extension.

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub first_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            first_step: 1e-3,
            max_step: 0.1,
            max_steps: 500_000,
        }
    }
}

#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

/// Accepted steps of an integration together with their dense interpolants.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    segments: Vec<Segment<N>>,
    t_start: f64,
    y_start: [f64; N],
}

impl<const N: usize> DenseSolution<N> {
    pub fn span(&self) -> (f64, f64) {
        match self.segments.last() {
            Some(s) => (self.t_start, s.t0 + s.h),
            None => (self.t_start, self.t_start),
        }
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    /// Accepted step end points (t, y), starting with the initial state.
    pub fn nodes(&self) -> Vec<(f64, [f64; N])> {
        let mut out = vec![(self.t_start, self.y_start)];
        for s in &self.segments {
            let mut y = [0.0; N];
            for i in 0..N {
                y[i] = s.cont[0][i] + s.cont[1][i];
            }
            out.push((s.t0 + s.h, y));
        }
        out
    }

    /// Continuous evaluation inside the integrated span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (a, b) = self.span();
        if t < a || t > b || self.segments.is_empty() {
            return if t == a { Some(self.y_start) } else { None };
        }
        let idx = self
            .segments
            .partition_point(|s| s.t0 + s.h < t)
            .min(self.segments.len() - 1);
        let s = &self.segments[idx];
        let theta = (t - s.t0) / s.h;
        let theta1 = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            let c = &s.cont;
            y[i] = c[0][i]
                + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
        }
        Some(y)
    }
}

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

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &Dopri5Options,
) -> Result<DenseSolution<N>, String>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t1 <= t0 {
        return Err(format!("empty span [{t0}, {t1}]"));
    }
    let mut sol = DenseSolution {
        segments: Vec::new(),
        t_start: t0,
        y_start: y0,
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = opts.first_step.min(opts.max_step).min(t1 - t0);
    let min_step = 1e-14 * (t1 - t0).abs().max(1.0);
    let mut steps = 0usize;

    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(format!("step budget {} exhausted at t = {t}", opts.max_steps));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 || h <= min_step {
            if h <= min_step && err > 1.0 {
                return Err(format!("step size underflow at t = {t}"));
            }
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = bspl;
                cont[3][i] = dy - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.segments.push(Segment { t0: t, h, cont });
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    Ok(sol)
}
