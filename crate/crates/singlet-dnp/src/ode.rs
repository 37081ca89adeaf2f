//! Adaptive Dormand-Prince 5(4) integrator for a two-component complex
//! state, used for the zero-quantum Schroedinger propagation.

use num_complex::Complex64;

use crate::error::{ModelError, Result};

pub type State2 = [Complex64; 2];

fn axpy(y: &State2, pairs: &[(f64, &State2)]) -> State2 {
    let mut out = *y;
    for &(a, k) in pairs {
        out[0] += a * k[0];
        out[1] += a * k[1];
    }
    out
}

fn err_norm(e: &State2, y: &State2, ynew: &State2, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sc = atol + rtol * y[i].norm().max(ynew[i].norm());
        let r = e[i].norm() / sc;
        acc += r * r;
    }
    (acc / 2.0).sqrt()
}

/// Integrate y' = f(t, y) from `t0` to `t1` (t1 > t0).
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: State2, rtol: f64, atol: f64) -> Result<State2>
where
    F: Fn(f64, &State2) -> State2,
{
    // Dormand-Prince coefficients
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    // 5th-order minus embedded 4th-order weights
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];

    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(ModelError::InvalidInput(format!(
            "integration span must be positive, got [{t0}, {t1}]"
        )));
    }

    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = span * 1e-6;
    let h_min = span * 1e-14;
    let mut k0 = f(t, &y);
    let max_steps = 50_000_000usize;

    for _ in 0..max_steps {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        let mut ks: Vec<State2> = Vec::with_capacity(7);
        ks.push(k0);
        for s in 0..6 {
            let pairs: Vec<(f64, &State2)> = A[s]
                .iter()
                .enumerate()
                .map(|(j, &a)| (a * h, &ks[j]))
                .collect();
            let ys = axpy(&y, &pairs);
            ks.push(f(t + C[s] * h, &ys));
        }
        // ks[6] is evaluated at the 5th-order solution (FSAL)
        let ynew = axpy(
            &y,
            &A[5]
                .iter()
                .enumerate()
                .map(|(j, &a)| (a * h, &ks[j]))
                .collect::<Vec<_>>(),
        );
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for (j, e) in E.iter().enumerate() {
            err[0] += e * h * ks[j][0];
            err[1] += e * h * ks[j][1];
        }
        let norm = err_norm(&err, &y, &ynew, rtol, atol);
        if norm <= 1.0 {
            t += h;
            y = ynew;
            k0 = ks[6];
        }
        let factor = if norm > 0.0 {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < h_min {
            return Err(ModelError::Integration(format!(
                "step size underflow at t = {t:.6e} (h = {h:.3e}); \
                 the local frequency scale is too stiff for the requested tolerance"
            )));
        }
    }
    Err(ModelError::Integration(format!(
        "step budget exhausted at t = {t:.6e} of [{t0:.6e}, {t1:.6e}]"
    )))
}
