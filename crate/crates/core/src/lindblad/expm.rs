//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005). Valid for
//! non-normal matrices such as Liouvillians.

use crate::error::{Error, Result};
use crate::qops::{c, CMatrix};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn lincomb(terms: &[(f64, &CMatrix)], dim: usize) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    for (coef, m) in terms {
        out.zip_apply(m, |o, x| *o += x * c(*coef));
    }
    out
}

/// Padé numerator/denominator pieces `(U, V)` for degree `m ≤ 9`, so that
/// `r_m(A) = (V − U)⁻¹ (V + U)`.
fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let mut powers = vec![id.clone(), a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let odd: Vec<(f64, &CMatrix)> = (0..b.len() / 2).map(|k| (b[2 * k + 1], &powers[k])).collect();
    let even: Vec<(f64, &CMatrix)> = (0..b.len() / 2).map(|k| (b[2 * k], &powers[k])).collect();
    let u = a * lincomb(&odd, n);
    let v = lincomb(&even, n);
    (u, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let b = &B13;
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], n);
    let u = a * (inner_u + lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &id)], n));
    let inner_v = &a6 * lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], n);
    let v = inner_v + lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &id)], n);
    (u, v)
}

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Argument(format!("expm needs a square matrix, got {}x{}", n, a.ncols())));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("expm input has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm1(a);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a.scale(0.5f64.powi(s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let lu = (&v - &u).lu();
    let mut x = lu
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Numerical("singular Padé denominator in expm".into()))?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(x)
}
