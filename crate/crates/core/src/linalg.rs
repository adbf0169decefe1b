//! Dense linear-algebra helpers: matrix exponential, spectral norms and
//! symmetric-matrix checks.

#[allow(unused_imports)] // float math under no_std
use num_traits::Float;
use nalgebra::DMatrix;

// Pade(13) coefficients and the 1-norm threshold below which no scaling is
// required (Higham, "The scaling and squaring method for the matrix
// exponential revisited", 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = norm_1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2.0f64.powi(-squarings);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is singular");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Spectral (largest singular value) norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let top = gram.symmetric_eigenvalues().max();
    top.max(0.0).sqrt()
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues_sorted(m: &DMatrix<f64>) -> alloc::vec::Vec<f64> {
    let mut ev: alloc::vec::Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Largest real part over all eigenvalues.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest absolute asymmetry `|m_ij - m_ji|` relative to the largest entry.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}
