//! Integer-order Bessel functions of the first kind.
//!
//! Miller's backward recurrence normalised with
//! `J₀(x) + 2 Σₖ J₂ₖ(x) = 1`, which is stable for every order and argument.

/// `J_k(x)` for `k = 0..=n_max`.
pub fn bessel_j_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (n_max as f64).max(ax);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;

    const BIG: f64 = 1e250;
    let mut j_next = 0.0;
    let mut j_cur = 1e-300;
    let mut norm = 0.0;
    // k runs down from `start`; j_cur holds J_k, j_next holds J_{k+1}.
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let k = k - 1;
        if k <= n_max {
            out[k] = j_cur;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > BIG {
            j_cur /= BIG;
            j_next /= BIG;
            norm /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    norm += j_cur;
    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// `J_n(x)` for any integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_all(k, x)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct power series, good to ~1e-14 for |x| below ~15.
    fn series(n: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 1..200 {
            term *= -half * half / (k as f64 * (k + n) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_power_series() {
        // The alternating series loses digits to cancellation as x grows.
        for &(x, tol) in &[(0.1, 1e-15), (1.0, 1e-15), (2.404_825_557_695_773, 1e-14), (3.7, 1e-14), (7.5, 1e-13), (12.0, 1e-11)] {
            for n in 0..25 {
                let a = bessel_j(n as i64, x);
                let b = series(n, x);
                assert!((a - b).abs() < tol, "n={n} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        for n in 1..10 {
            assert_eq!(bessel_j(n, 0.0), 0.0);
            assert_eq!(bessel_j(-n, 0.0), 0.0);
        }
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(bessel_j(0, 2.40483).abs() < 1e-5);
        assert!(series(0, 2.40483).abs() < 1e-5);
    }

    #[test]
    fn squared_sum_is_one() {
        let x = 3.7;
        let s: f64 = (-40..=40).map(|m| bessel_j(m, x).powi(2)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_order_and_argument() {
        let x = 4.2;
        assert!((bessel_j(-3, x) + bessel_j(3, x)).abs() < 1e-15);
        assert!((bessel_j(-4, x) - bessel_j(4, x)).abs() < 1e-15);
        assert!((bessel_j(3, -x) + bessel_j(3, x)).abs() < 1e-15);
    }

    #[test]
    fn large_argument_stays_normalised() {
        let x = 150.0;
        let s: f64 = (-300..=300).map(|m| bessel_j(m, x).powi(2)).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
}
