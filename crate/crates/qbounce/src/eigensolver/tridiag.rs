//! Symmetric tridiagonal eigenpairs: Sturm bisection for the lowest
//! eigenvalues, LU with partial pivoting for inverse-iteration solves.

/// Count eigenvalues of a symmetric tridiagonal matrix strictly less
/// than `lambda`, via the LDLᵀ Sturm sequence: the number of negative
/// pivots equals the number of eigenvalues below `lambda`.
///
/// - `diag`: main diagonal d[0..n]
/// - `off`: sub/super-diagonal e[0..n-1]
/// - `pivmin`: smallest pivot magnitude allowed in the recurrence
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64, pivmin: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < pivmin {
            if q >= 0.0 {
                pivmin
            } else {
                -pivmin
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn pivmin_for(off: &[f64]) -> f64 {
    let e_max = off.iter().fold(0.0_f64, |m, &e| m.max(e.abs()));
    f64::MIN_POSITIVE * e_max.mul_add(e_max, 0.0).max(1.0)
}

/// Gershgorin bounds of the spectrum, widened by one rounding margin.
fn spectrum_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let e_left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let e_right = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - e_left - e_right);
        hi = hi.max(diag[i] + e_left + e_right);
    }
    let margin = 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0);
    (lo - margin, hi + margin)
}

/// The `k` smallest eigenvalues, ascending, via per-index bisection.
///
/// The stopping rule is relative to the eigenvalue magnitude, not to the
/// matrix norm, so eigenvalues far below ||T|| are still bisected to full
/// relative precision of the Sturm count.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    assert!(k <= n, "requested more eigenvalues than the matrix order");
    let (lo, hi) = spectrum_bounds(diag, off);
    let pivmin = pivmin_for(off);

    let mut eigenvalues = Vec::with_capacity(k);
    for index in 0..k {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..310 {
            let mid = 0.5 * (a + b);
            if (b - a) <= f64::EPSILON * a.abs().max(b.abs()) || mid <= a || mid >= b {
                break;
            }
            if sturm_count(diag, off, mid, pivmin) <= index {
                a = mid;
            } else {
                b = mid;
            }
        }
        eigenvalues.push(0.5 * (a + b));
    }
    eigenvalues
}

/// LU factorization of a general tridiagonal matrix with partial pivoting;
/// row swaps introduce a second superdiagonal of fill-in.
pub struct TridiagLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factor the matrix with subdiagonal `sub`, diagonal `diag`, and
    /// superdiagonal `sup`. Near-zero pivots are replaced by a tiny value
    /// so solves against nearly singular shifts stay finite.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 2);
        assert_eq!(sub.len(), n - 1);
        assert_eq!(sup.len(), n - 1);

        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];

        let scale = d
            .iter()
            .chain(dl.iter())
            .chain(du.iter())
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        let tiny = f64::MIN_POSITIVE.max(scale * f64::EPSILON * f64::EPSILON);

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    d[i] = if d[i] >= 0.0 { tiny } else { -tiny };
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
                if i < n - 2 {
                    du2[i] = 0.0;
                }
            } else {
                swapped[i] = true;
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i < n - 2 {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
            }
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = if d[n - 1] >= 0.0 { tiny } else { -tiny };
        }

        TridiagLu {
            lower: dl,
            diag: d,
            upper1: du,
            upper2: du2,
            swapped,
        }
    }

    /// Solve A·x = b in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.diag.len();
        assert_eq!(x.len(), n);

        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.lower[i] * x[i];
        }

        x[n - 1] /= self.diag[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.upper1[n - 2] * x[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.upper1[i] * x[i + 1] - self.upper2[i] * x[i + 2]) / self.diag[i];
        }
    }
}

/// y = (T − shift·I)·x for symmetric tridiagonal T.
pub fn shifted_mul(diag: &[f64], off: &[f64], shift: f64, x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut acc = (diag[i] - shift) * x[i];
        if i > 0 {
            acc += off[i - 1] * x[i - 1];
        }
        if i < n - 1 {
            acc += off[i] * x[i + 1];
        }
        y[i] = acc;
    }
}
