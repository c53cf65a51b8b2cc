//! Dormand-Prince 5(4) integrator with adaptive step control.

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBudgetExceeded;

const C: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order weights; also the last stage (FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Fifth minus fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
pub fn integrate<F>(
    mut f: F,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    opts: &OdeOptions,
) -> Result<OdeStats, StepBudgetExceeded>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
    };

    let mut t = t0;
    f(t, y, &mut k[0]);
    let mut h = initial_step(y, &k[0], t1 - t0, opts);

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(StepBudgetExceeded);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate() {
                    acc += a * k[j][i];
                }
                tmp[i] = y[i] + h * acc;
            }
            f(t + C[s] * h, &tmp, &mut k[s + 1]);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (j, b) in B.iter().enumerate() {
                acc += b * k[j][i];
            }
            y_new[i] = y[i] + h * acc;
        }
        f(t + h, &y_new, &mut k[6]);

        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for (j, c) in E.iter().enumerate() {
                e += c * k[j][i];
            }
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err = err.max((h * e).abs() / scale);
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            k.swap(0, 6);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(stats)
}

fn initial_step(y: &[f64], dy: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for (yi, di) in y.iter().zip(dy) {
        let sc = opts.abs_tol + opts.rel_tol * yi.abs();
        d0 = d0.max(yi.abs() / sc);
        d1 = d1.max(di.abs() / sc);
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span)
}
