//! Integer-order Bessel functions of the first kind.
//!
//! All orders `J_0 ..= J_nmax` at a point come out of one backward
//! (Miller) recurrence normalized by `J_0 + 2 sum J_2k = 1`. Backward
//! recurrence is stable for every order, so the same routine serves the
//! low orders needed for local coefficients and the order-60+ tails of the
//! truncated Berry series.

/// Writes `J_0(x), ..., J_{n}(x)` into `out` where `n = out.len() - 1`.
pub fn fill_bessel_j(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let nmax = out.len() - 1;
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return;
    }
    let ax = x.abs();
    let top = nmax.max(ax.ceil() as usize);
    // Past the turning point J_n(x) decays like an Airy tail of width x^{1/3}.
    let mut start = top + (15.0 * ax.max(1.0).cbrt()) as usize + 20;
    start += start % 2;

    out.fill(0.0);
    let two_over_x = 2.0 / ax;
    let mut next = 0.0_f64;
    let mut cur = 1e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            const S: f64 = 1e-250;
            cur *= S;
            next *= S;
            norm *= S;
            if k <= nmax + 1 {
                for v in out[k.min(nmax + 1)..].iter_mut() {
                    *v *= S;
                }
            }
        }
    }
    out[0] = cur;
    norm += cur;
    let inv = 1.0 / norm;
    for v in out.iter_mut() {
        *v *= inv;
    }
    if x < 0.0 {
        for v in out.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
}

/// `J_0(x) ..= J_nmax(x)` as a fresh vector.
pub fn bessel_j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    fill_bessel_j(x, &mut out);
    out
}

/// `J_n(x)` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_orders(m, x)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt`; the trapezoid rule
    /// on a periodic entire integrand converges geometrically.
    fn integral_oracle(n: i64, x: f64) -> f64 {
        let p = 2048;
        let h = 2.0 * PI / p as f64;
        (0..p)
            .map(|k| {
                let t = k as f64 * h;
                (n as f64 * t - x * t.sin()).cos()
            })
            .sum::<f64>()
            / p as f64
    }

    /// Ascending power series, accurate in double precision for small x.
    fn series_oracle(n: u32, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..200 {
            term *= -half * half / (k as f64 * (k as f64 + n as f64));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }

    #[test]
    fn tabulated_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(0, 10.0) + 0.245_935_764_451_348_3).abs() < 1e-13);
        assert!((bessel_j(1, 10.0) - 0.043_472_746_168_861_44).abs() < 1e-13);
        assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-14);
        assert!(bessel_j(0, 5.520_078_110_286_311).abs() < 1e-14);
    }

    #[test]
    fn matches_series_for_small_arguments() {
        for &x in &[0.1, 0.5, 1.0, 3.0, 7.5] {
            let all = bessel_j_orders(40, x);
            for n in 0..=40u32 {
                let want = series_oracle(n, x);
                assert!(
                    (all[n as usize] - want).abs() < 1e-13 * want.abs().max(1e-3),
                    "n={n} x={x}: {} vs {want}",
                    all[n as usize]
                );
            }
        }
    }

    #[test]
    fn matches_integral_oracle_up_to_order_160() {
        for &x in &[0.3, 2.0, 12.0, 37.7, 64.0, 100.0] {
            let all = bessel_j_orders(160, x);
            for n in (0..=160).step_by(7) {
                let want = integral_oracle(n as i64, x);
                assert!((all[n] - want).abs() < 1e-12, "n={n} x={x}: {} vs {want}", all[n]);
            }
        }
    }

    #[test]
    fn negative_order_and_argument_symmetry() {
        assert!((bessel_j(-3, 2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
        assert!((bessel_j(-4, 2.0) - bessel_j(4, 2.0)).abs() < 1e-16);
        let pos = bessel_j_orders(5, 3.3);
        let neg = bessel_j_orders(5, -3.3);
        for n in 0..=5 {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((neg[n] - s * pos[n]).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_is_kronecker_delta() {
        assert_eq!(bessel_j_orders(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
    }
}
