//! Linear orthogonal space-time block codes in dispersion-matrix form.
//!
//! A code maps `N_s` symbols onto a `τ_d × N_g` matrix
//! `X = Σ A_n·Re(s_n) + i·B_n·Im(s_n)`. Row `t` is what the `N_g` AP groups
//! send in channel use `t`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_normal, seeded};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct OstbcCode {
    pub name: &'static str,
    pub a: Vec<CMatrix>,
    pub b: Vec<CMatrix>,
    pub n_groups: usize,
    pub n_symbols: usize,
    pub block_len: usize,
}

impl OstbcCode {
    pub fn from_generator<F>(name: &'static str, n_symbols: usize, generator: F) -> Result<Self>
    where
        F: Fn(&[Complex64]) -> CMatrix,
    {
        let (a, b) = dispersion_matrices(n_symbols, generator)?;
        let (block_len, n_groups) = a[0].shape();
        Ok(OstbcCode {
            name,
            a,
            b,
            n_groups,
            n_symbols,
            block_len,
        })
    }

    /// `X = s`: every group sends the same symbol.
    pub fn single() -> Self {
        Self::from_generator("single", 1, |s| CMatrix::from_element(1, 1, s[0])).expect("repetition code is linear")
    }

    /// `[[s1, s2], [-s2*, s1*]]`.
    pub fn alamouti() -> Self {
        Self::from_generator("alamouti", 2, |s| {
            CMatrix::from_row_slice(2, 2, &[s[0], s[1], -s[1].conj(), s[0].conj()])
        })
        .expect("Alamouti code is linear")
    }

    /// Rate-3/4 code for four groups.
    pub fn rate_three_quarters() -> Self {
        Self::from_generator("rate34", 3, |s| {
            let z = Complex64::new(0.0, 0.0);
            let (s1, s2, s3) = (s[0], s[1], s[2]);
            #[rustfmt::skip]
            let rows = [
                s1,          s2,          s3,         z,
                -s2.conj(),  s1.conj(),   z,          s3,
                -s3.conj(),  z,           s1.conj(),  -s2,
                z,           -s3.conj(),  s2.conj(),  s1,
            ];
            CMatrix::from_row_slice(4, 4, &rows)
        })
        .expect("rate-3/4 code is linear")
    }

    pub fn rate(&self) -> f64 {
        self.n_symbols as f64 / self.block_len as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub symbols: Vec<Complex64>,
    /// Per-symbol energy `E[|s|²]`.
    pub energy: f64,
}

impl SymbolBlock {
    /// Independent circularly-symmetric Gaussian symbols.
    pub fn gaussian<R: Rng + ?Sized>(n_symbols: usize, energy: f64, rng: &mut R) -> Self {
        SymbolBlock {
            symbols: (0..n_symbols).map(|_| complex_normal(rng, energy)).collect(),
            energy,
        }
    }
}

pub fn build_code(code: &OstbcCode, s: &SymbolBlock) -> Result<CMatrix> {
    build_from_symbols(code, &s.symbols)
}

pub(crate) fn build_from_symbols(code: &OstbcCode, symbols: &[Complex64]) -> Result<CMatrix> {
    if symbols.len() != code.n_symbols {
        return Err(Error::Dimension {
            expected: code.n_symbols,
            got: symbols.len(),
        });
    }
    let mut x = CMatrix::zeros(code.block_len, code.n_groups);
    for ((a, b), s) in code.a.iter().zip(&code.b).zip(symbols) {
        x += a * Complex64::from(s.re) + b * (I * s.im);
    }
    Ok(x)
}

/// Extracts `(A_n, B_n)` by probing the generator with unit real and
/// imaginary parts, then checks that the generator is real-linear.
pub fn dispersion_matrices<F>(n_symbols: usize, generator: F) -> Result<(Vec<CMatrix>, Vec<CMatrix>)>
where
    F: Fn(&[Complex64]) -> CMatrix,
{
    if n_symbols == 0 {
        return Err(Error::invalid("a code needs at least one symbol"));
    }
    let zero = vec![Complex64::new(0.0, 0.0); n_symbols];
    let x0 = generator(&zero);
    if x0.iter().any(|v| v.norm() > 0.0) {
        return Err(Error::NotLinear);
    }
    let shape = x0.shape();
    let mut a = Vec::with_capacity(n_symbols);
    let mut b = Vec::with_capacity(n_symbols);
    for n in 0..n_symbols {
        let mut probe = zero.clone();
        probe[n] = Complex64::new(1.0, 0.0);
        a.push(generator(&probe));
        probe[n] = I;
        b.push(generator(&probe) * (-I));
    }
    if a.iter().chain(&b).any(|m| m.shape() != shape) {
        return Err(Error::NotLinear);
    }

    // superposition on a few pseudo-random symbol vectors
    let mut rng = seeded(0x5eed);
    for _ in 0..8 {
        let s: Vec<Complex64> = (0..n_symbols).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let mut rebuilt = CMatrix::zeros(shape.0, shape.1);
        for ((an, bn), sn) in a.iter().zip(&b).zip(&s) {
            rebuilt += an * Complex64::from(sn.re) + bn * (I * sn.im);
        }
        let direct = generator(&s);
        let scale = 1.0 + direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if (direct - rebuilt).iter().any(|v| v.norm() > 1e-12 * scale) {
            return Err(Error::NotLinear);
        }
    }
    Ok((a, b))
}

/// Largest entry of `|XᴴX − (Σ|s_n|²)·I|`.
pub fn orthogonality_defect(code: &OstbcCode, symbols: &[Complex64]) -> Result<f64> {
    let x = build_from_symbols(code, symbols)?;
    let energy: f64 = symbols.iter().map(|s| s.norm_sqr()).sum();
    let gram = x.adjoint() * &x;
    let target = CMatrix::identity(code.n_groups, code.n_groups) * Complex64::from(energy);
    Ok((gram - target).iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Monte-Carlo estimates of `E[X·Re(s_n)]` and `E[X·Im(s_n)]` with
/// element-wise standard errors.
#[derive(Debug, Clone)]
pub struct ProjectionMoments {
    pub mean_re: Vec<CMatrix>,
    pub mean_im: Vec<CMatrix>,
    pub se_re: Vec<CMatrix>,
    pub se_im: Vec<CMatrix>,
}

pub fn projection_moments(
    code: &OstbcCode,
    draws: usize,
    mut symbols: impl FnMut() -> Vec<Complex64>,
) -> Result<ProjectionMoments> {
    let shape = (code.block_len, code.n_groups);
    let zeros = || vec![CMatrix::zeros(shape.0, shape.1); code.n_symbols];
    let (mut s1_re, mut s1_im, mut s2_re, mut s2_im) = (zeros(), zeros(), zeros(), zeros());
    // second moments are tracked per real/imaginary part of every entry
    let sq = |v: Complex64| Complex64::new(v.re * v.re, v.im * v.im);
    for _ in 0..draws {
        let s = symbols();
        let x = build_from_symbols(code, &s)?;
        for n in 0..code.n_symbols {
            let xr = &x * Complex64::from(s[n].re);
            let xi = &x * Complex64::from(s[n].im);
            s2_re[n] += xr.map(sq);
            s2_im[n] += xi.map(sq);
            s1_re[n] += xr;
            s1_im[n] += xi;
        }
    }
    let m = draws as f64;
    let finish = |s1: &[CMatrix], s2: &[CMatrix]| -> (Vec<CMatrix>, Vec<CMatrix>) {
        s1.iter()
            .zip(s2)
            .map(|(a, b)| {
                let mean = a / Complex64::from(m);
                let se = CMatrix::from_fn(shape.0, shape.1, |r, c| {
                    let mu = mean[(r, c)];
                    let e2 = b[(r, c)] / m;
                    let var_re = (e2.re - mu.re * mu.re).max(0.0);
                    let var_im = (e2.im - mu.im * mu.im).max(0.0);
                    Complex64::new((var_re / m).sqrt(), (var_im / m).sqrt())
                });
                (mean, se)
            })
            .unzip()
    };
    let (mean_re, se_re) = finish(&s1_re, &s2_re);
    let (mean_im, se_im) = finish(&s1_im, &s2_im);
    Ok(ProjectionMoments {
        mean_re,
        mean_im,
        se_re,
        se_im,
    })
}

#[derive(Debug, Clone)]
pub struct ProjectionCheck {
    pub passed: bool,
    /// Largest |estimate − target| / SE over all entries.
    pub max_z: f64,
}

/// Checks `E[X·Re(s_n)] = (E_s/2)·A_n` and `E[X·Im(s_n)] = i(E_s/2)·B_n`
/// with Gaussian symbols, entry-wise within `5·SE`.
pub fn expected_projection_identity_check<R: Rng + ?Sized>(
    code: &OstbcCode,
    energy: f64,
    draws: usize,
    rng: &mut R,
) -> Result<ProjectionCheck> {
    let moments = projection_moments(code, draws, || {
        SymbolBlock::gaussian(code.n_symbols, energy, rng).symbols
    })?;
    let half = Complex64::from(energy / 2.0);
    let mut max_z: f64 = 0.0;
    let mut passed = true;
    let mut compare = |est: &CMatrix, se: &CMatrix, target: &CMatrix| {
        for ((e, s), t) in est.iter().zip(se.iter()).zip(target.iter()) {
            for (ev, sv, tv) in [(e.re, s.re, t.re), (e.im, s.im, t.im)] {
                let diff = (ev - tv).abs();
                if sv > 0.0 {
                    max_z = max_z.max(diff / sv);
                    passed &= diff <= 5.0 * sv;
                } else {
                    passed &= diff == 0.0;
                }
            }
        }
    };
    for n in 0..code.n_symbols {
        compare(&moments.mean_re[n], &moments.se_re[n], &(&code.a[n] * half));
        compare(&moments.mean_im[n], &moments.se_im[n], &(&code.b[n] * (I * half)));
    }
    Ok(ProjectionCheck { passed, max_z })
}
