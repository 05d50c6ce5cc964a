//! Symmetric tridiagonal eigensolver (implicit QL with shifts).

/// Eigen-decomposition of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal (off[i] couples sites i and i+1).
///
/// Returns eigenvalues ascending; when `want_vectors` is set, also the
/// eigenvector matrix stored column-major (column j = eigenvector j,
/// normalized).
pub fn eigen_tridiag(
    diag: &[f64],
    off: &[f64],
    want_vectors: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = diag.len();
    assert!(n >= 1 && off.len() == n.saturating_sub(1));
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        Some(z)
    } else {
        None
    };

    let eps = f64::EPSILON;
    let mut f_acc = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                // implicit shift from the 2×2 leading block
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f_acc += h;

                // QL sweep
                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g2 = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g2;
                    d[i + 1] = h + s * (c * g2 + s * d[i]);
                    if let Some(z) = z.as_mut() {
                        // rotate columns i and i+1
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let col_i = &mut lo[i * n..(i + 1) * n];
                        let col_j = &mut hi[..n];
                        for k in 0..n {
                            let zik = col_i[k];
                            let zjk = col_j[k];
                            col_j[k] = s * zik + c * zjk;
                            col_i[k] = c * zik - s * zjk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f_acc;
        e[l] = 0.0;
    }

    // sort ascending, permuting columns alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let sorted_d: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let sorted_z = z.map(|z| {
        let mut out = vec![0.0; n * n];
        for (jnew, &jold) in order.iter().enumerate() {
            out[jnew * n..(jnew + 1) * n].copy_from_slice(&z[jold * n..(jold + 1) * n]);
        }
        out
    });
    (sorted_d, sorted_z)
}

/// Eigenvalues only.
pub fn eigenvalues_tridiag(diag: &[f64], off: &[f64]) -> Vec<f64> {
    eigen_tridiag(diag, off, false).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_box_closed_form() {
        // zero diagonal, unit hopping: E_j = 2cos(πj/(N+1)),
        // ψ_j(n) ∝ sin(πjn/(N+1)) — an exact oracle
        let n = 64;
        let diag = vec![0.0; n];
        let off = vec![1.0; n - 1];
        let (vals, vecs) = eigen_tridiag(&diag, &off, true);
        let vecs = vecs.unwrap();
        let mut expected: Vec<f64> =
            (1..=n).map(|j| 2.0 * (PI * j as f64 / (n as f64 + 1.0)).cos()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip(&expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        // vector check at the ground state (j = N for ascending order ↔ cos < 0 side)
        for (j, &val) in vals.iter().enumerate() {
            // recover the mode index from the eigenvalue
            let mode = ((val / 2.0).acos() * (n as f64 + 1.0) / PI).round() as usize;
            let norm = (2.0 / (n as f64 + 1.0)).sqrt();
            let col = &vecs[j * n..(j + 1) * n];
            // match up to overall sign
            let sgn = if col[0] * (PI * mode as f64 / (n as f64 + 1.0)).sin() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for (i, &c) in col.iter().enumerate() {
                let expect = sgn * norm * (PI * mode as f64 * (i + 1) as f64 / (n as f64 + 1.0)).sin();
                assert!((c - expect).abs() < 1e-10, "j={j} i={i}: {c} vs {expect}");
            }
        }
    }

    #[test]
    fn eigenvectors_diagonalize() {
        // random-ish quasiperiodic diagonal
        let n = 40;
        let diag: Vec<f64> =
            (0..n).map(|i| 2.0 * (std::f64::consts::TAU * 0.618 * i as f64).cos()).collect();
        let off = vec![1.0; n - 1];
        let (vals, vecs) = eigen_tridiag(&diag, &off, true);
        let z = vecs.unwrap();
        // residual ‖Hv − λv‖
        for j in 0..n {
            let v = &z[j * n..(j + 1) * n];
            let mut norm = 0.0;
            for i in 0..n {
                let mut hv = diag[i] * v[i];
                if i > 0 {
                    hv += v[i - 1];
                }
                if i + 1 < n {
                    hv += v[i + 1];
                }
                norm += (hv - vals[j] * v[i]).powi(2);
            }
            assert!(norm.sqrt() < 1e-11, "residual {} at j={j}", norm.sqrt());
        }
        // completeness at two sites
        let w0: f64 = (0..n).map(|j| z[j * n + n / 2].powi(2)).sum();
        assert!((w0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_site() {
        let (vals, vecs) = eigen_tridiag(&[3.5], &[], true);
        assert_eq!(vals, vec![3.5]);
        assert_eq!(vecs.unwrap(), vec![1.0]);
    }
}
