use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Diagonal similarity balancing (Parlett-Reinsch, radix 2) in place.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let sq = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= sq;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sq;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real square matrix after balancing.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(invalid("eigenvalues need a square matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::RootFinding("matrix has non-finite entries".into()));
    }
    let mut b = m.clone();
    balance(&mut b);
    let schur = Schur::try_new(b, f64::EPSILON, 200 * n.max(10))
        .ok_or_else(|| Error::RootFinding(format!("Schur iteration did not converge (n = {n})")))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Balanced companion matrix of a monic polynomial given by descending coefficients.
pub fn companion_balanced(coeffs: &[f64]) -> DMatrix<f64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    m
}

/// Roots of a real polynomial (descending powers) via companion-matrix eigenvalues.
///
/// Leading zeros are trimmed; trailing zeros yield exact roots at the origin.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(invalid("polynomial has non-finite coefficients"));
    }
    let start = coeffs
        .iter()
        .position(|c| *c != 0.0)
        .ok_or_else(|| invalid("all-zero polynomial has no defined roots"))?;
    let mut p = &coeffs[start..];
    let mut roots = Vec::new();
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        roots.push(Complex64::new(0.0, 0.0));
        p = &p[..p.len() - 1];
    }
    match p.len() {
        1 => {}
        2 => roots.push(Complex64::new(-p[1] / p[0], 0.0)),
        _ => {
            let m = companion_balanced(p);
            let eig = Schur::try_new(m, f64::EPSILON, 200 * p.len().max(10))
                .ok_or_else(|| Error::RootFinding(format!("companion of degree {} did not converge", p.len() - 1)))?;
            roots.extend(eig.complex_eigenvalues().iter().copied());
        }
    }
    Ok(roots)
}
