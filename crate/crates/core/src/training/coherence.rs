//! Coherence of sensing matrices, the Welch bound and the coherence-optimal
//! split of measurements between transmit and receive training.

use crate::{CMatrix, Error, Result};

/// `max_{k≠j} |a_k^* a_j| / (‖a_k‖ ‖a_j‖)`.
pub fn mutual_coherence(a: &CMatrix) -> Result<f64> {
    let n = a.ncols();
    if n < 2 {
        return Err(Error::Dimension("coherence needs at least two columns".into()));
    }
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::InvalidParameter(format!("column {j} is zero")));
    }
    let gram = a.ad_mul(a);
    let mut mu = 0.0f64;
    for j in 0..n {
        for k in 0..j {
            mu = mu.max(gram[(k, j)].norm() / (norms[k] * norms[j]));
        }
    }
    Ok(mu.min(1.0))
}

/// Lower bound on the coherence of any `m x n` matrix, `sqrt((n - m) / (m (n - 1)))`.
pub fn welch_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || m > n || n < 2 {
        return Err(Error::InvalidParameter(format!("Welch bound needs 1 <= M <= N and N >= 2 (M={m}, N={n})")));
    }
    Ok(((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt())
}

/// Welch bound with the degenerate single-column case (`m = n = 1`) mapped to zero.
fn welch_or_trivial(m: usize, n: usize) -> Option<f64> {
    if m == n && n >= 1 {
        Some(0.0)
    } else {
        welch_bound(m, n).ok()
    }
}

/// Smallest `M` whose Welch bound for `N` columns is below `1 / (2K - 1)`.
/// Returns `N` when no smaller `M` qualifies.
pub fn min_measurements_for_k(k: usize, n: usize) -> Result<usize> {
    if k == 0 || n < 2 {
        return Err(Error::InvalidParameter("need K >= 1 and N >= 2".into()));
    }
    let threshold = 1.0 / (2 * k - 1) as f64;
    for m in 1..n {
        if welch_bound(m, n)? < threshold {
            return Ok(m);
        }
    }
    Ok(n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    /// Real-valued coherence-optimal number of precoders.
    pub real_m_t: f64,
    pub real_m_r: f64,
    /// Best integer factor pair `(M_t, M_r)` with `M_t M_r = M`.
    pub m_t: usize,
    pub m_r: usize,
    /// `max(welch(M_t, G_t), welch(M_r, G_r))` for the integer pair.
    pub bound: f64,
    /// No admissible factorization exists; `(1, M)` is reported.
    pub degenerate: bool,
}

/// Positive root of `G_r (G_t - 1) x^2 + M (G_r - G_t) x - M G_t (G_r - 1) = 0`,
/// the point where the transmit and receive Welch bounds coincide, clamped to
/// the admissible interval `[max(1, M / G_r), min(G_t, M)]`.
pub fn closed_form_m_t(m: usize, g_t: usize, g_r: usize) -> f64 {
    let (m, gt, gr) = (m as f64, g_t as f64, g_r as f64);
    let lo = (m / gr).max(1.0);
    let hi = gt.min(m);
    if g_t <= 1 {
        return 1.0;
    }
    if g_r <= 1 {
        return hi;
    }
    let a = gr * (gt - 1.0);
    let b = m * (gr - gt);
    let c = -m * gt * (gr - 1.0);
    let x = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    if lo <= hi {
        x.clamp(lo, hi)
    } else {
        x
    }
}

/// Coherence-optimal split of `M` measurements into `M_t` precoders and `M_r` combiners.
pub fn optimal_split(m: usize, g_t: usize, g_r: usize) -> Result<SplitResult> {
    if m == 0 || g_t == 0 || g_r == 0 {
        return Err(Error::InvalidParameter("M, G_t and G_r must be positive".into()));
    }
    let real_m_t = closed_form_m_t(m, g_t, g_r);
    let mut best: Option<(f64, usize, usize)> = None;
    for m_t in 1..=m {
        if m % m_t != 0 {
            continue;
        }
        let m_r = m / m_t;
        if m_t > g_t || m_r > g_r {
            continue;
        }
        let (Some(bt), Some(br)) = (welch_or_trivial(m_t, g_t), welch_or_trivial(m_r, g_r)) else {
            continue;
        };
        let v = bt.max(br);
        if best.is_none_or(|(b, _, _)| v < b) {
            best = Some((v, m_t, m_r));
        }
    }
    Ok(match best {
        Some((bound, m_t, m_r)) => SplitResult {
            real_m_t,
            real_m_r: m as f64 / real_m_t,
            m_t,
            m_r,
            bound,
            degenerate: false,
        },
        None => SplitResult {
            real_m_t,
            real_m_r: m as f64 / real_m_t,
            m_t: 1,
            m_r: m,
            bound: f64::NAN,
            degenerate: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::one;
    use crate::random::rng_from_seed;
    use crate::C64;
    use rand::Rng;

    #[test]
    fn coherence_trivial_cases() {
        assert_eq!(mutual_coherence(&CMatrix::identity(4, 4)).unwrap(), 0.0);
        let mut a = CMatrix::identity(3, 3);
        a.set_column(2, &a.column(0).into_owned());
        assert!((mutual_coherence(&a).unwrap() - 1.0).abs() < 1e-15);
        let mut z = CMatrix::identity(3, 3);
        z.column_mut(1).fill(C64::new(0.0, 0.0));
        assert!(mutual_coherence(&z).is_err());
        assert!(mutual_coherence(&CMatrix::identity(3, 1)).is_err());
    }

    #[test]
    fn coherence_of_roots_of_unity_matches_brute_force() {
        let roots = [one(), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
        // Column j = (1, i^j).
        let a = CMatrix::from_fn(2, 4, |r, c| if r == 0 { one() } else { roots[c] });
        let mut expect = 0.0f64;
        for j in 0..4 {
            for k in 0..4 {
                if j != k {
                    let ip = (one() + roots[j].conj() * roots[k]).norm() / 2.0;
                    expect = expect.max(ip);
                }
            }
        }
        assert!((mutual_coherence(&a).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn welch_values() {
        assert_eq!(welch_bound(5, 5).unwrap(), 0.0);
        assert_eq!(welch_bound(1, 2).unwrap(), 1.0);
        let v = welch_bound(64, 1024).unwrap();
        assert!((v - (960.0f64 / (64.0 * 1023.0)).sqrt()).abs() < 1e-15);
        assert!((v - 0.12109).abs() < 1e-5);
        assert!(welch_bound(0, 4).is_err());
        assert!(welch_bound(5, 4).is_err());
    }

    #[test]
    fn min_measurements_scan() {
        assert_eq!(min_measurements_for_k(1, 16).unwrap(), 2);
        let m = min_measurements_for_k(4, 1024).unwrap();
        assert!(welch_bound(m, 1024).unwrap() < 1.0 / 7.0);
        assert!(welch_bound(m - 1, 1024).unwrap() >= 1.0 / 7.0);
        // Threshold below every bound short of N.
        let n = 8;
        let wb = welch_bound(n - 1, n).unwrap();
        let k = ((1.0 / wb + 1.0) / 2.0).ceil() as usize + 1;
        assert_eq!(min_measurements_for_k(k, n).unwrap(), n);
    }

    #[test]
    fn full_sampling_split() {
        let s = optimal_split(64 * 16, 64, 16).unwrap();
        assert_eq!((s.m_t, s.m_r), (64, 16));
        assert_eq!(s.bound, 0.0);
        assert!((s.real_m_t - 64.0).abs() < 1e-9);
    }

    fn wb_real(x: f64, g: f64) -> f64 {
        ((g - x) / (x * (g - 1.0))).max(0.0).sqrt()
    }

    #[test]
    fn closed_form_matches_bisection() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let g_t = rng.random_range(4..80usize);
            let g_r = rng.random_range(4..40usize);
            let m = rng.random_range(g_t.max(g_r)..=g_t * g_r);
            let f = |x: f64| wb_real(x, g_t as f64) - wb_real(m as f64 / x, g_r as f64);
            let (mut lo, mut hi) = ((m as f64 / g_r as f64).max(1.0), (g_t as f64).min(m as f64));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = closed_form_m_t(m, g_t, g_r);
            assert!((x - 0.5 * (lo + hi)).abs() < 1e-6, "M={m} G_t={g_t} G_r={g_r}");
        }
    }

    #[test]
    fn integer_split_matches_divisor_scan() {
        for m in [64usize, 128, 256, 512, 1024] {
            let s = optimal_split(m, 64, 16).unwrap();
            let mut best = f64::INFINITY;
            for d in 1..=m {
                if m % d == 0 && d <= 64 && m / d <= 16 {
                    let bt = if d == 64 { 0.0 } else { wb_real(d as f64, 64.0) };
                    let br = if m / d == 16 { 0.0 } else { wb_real((m / d) as f64, 16.0) };
                    best = best.min(bt.max(br));
                }
            }
            assert!((s.bound - best).abs() < 1e-15, "M={m}");
            assert_eq!(s.m_t * s.m_r, m);
        }
    }

    #[test]
    fn degenerate_split_reported() {
        let s = optimal_split(7, 2, 2).unwrap();
        assert!(s.degenerate);
        assert_eq!((s.m_t, s.m_r), (1, 7));
    }
}
