//! Locally optimal block Rayleigh-quotient descent for `A x = λ M x`,
//! `A` Hermitian positive semi-definite, `M` diagonal positive.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::FormOperator;
use crate::scalar::{norm_sq, weighted_dot, weighted_norm_sq, Real};

pub(crate) struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<Complex<T>>,
    pub residual: T,
    pub iterations: usize,
}

type C<T> = Complex<T>;

/// Systems up to this many unknowns are diagonalized directly.
pub(crate) const DENSE_LIMIT: usize = 64;

/// Block width. Guard vectors keep a nearly degenerate bottom from stalling the descent.
const BLOCK: usize = 2;

fn zero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

fn dot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    let mut acc = zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

fn axpy<T: Real>(y: &mut [C<T>], alpha: C<T>, x: &[C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Removes the `M`-projection onto each of `basis` (assumed `M`-orthonormal) and returns the
/// remaining norm relative to the input norm.
fn orthonormalize<T: Real>(v: &mut [C<T>], basis: &[&[C<T>]], mass: &[T]) -> Option<T> {
    let n0 = weighted_norm_sq(v, mass).sqrt();
    if !(n0 > T::zero()) {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let c = weighted_dot(q, v, mass);
            axpy(v, -c, q);
        }
    }
    let n1 = weighted_norm_sq(v, mass).sqrt();
    let rel = n1 / n0;
    if !(rel > T::lit(1e-12)) || !n1.is_finite() {
        return None;
    }
    let inv = T::one() / n1;
    for z in v.iter_mut() {
        *z *= inv;
    }
    Some(rel)
}

/// Smallest eigenpair. `scale` sets the absolute floor of the relative residual test.
pub(crate) fn smallest_eigenpair<T: Real>(
    op: &FormOperator<T>,
    tol: T,
    scale: T,
    max_iter: usize,
    seed: u64,
) -> Result<EigenPair<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Precondition("no free unknowns".into()));
    }
    if n <= DENSE_LIMIT {
        let mut pair = dense_smallest(op)?;
        let mut ax = vec![zero(); n];
        op.apply(&pair.vector, &mut ax);
        let floor = pair.value.abs().max(scale);
        pair.residual = ax
            .iter()
            .zip(&pair.vector)
            .zip(op.mass())
            .map(|((a, x), &m)| norm_sq(a - x * (pair.value * m)) / m)
            .sum::<T>()
            .sqrt()
            / floor;
        return Ok(pair);
    }
    let mass = op.mass();
    let diag = op.diag();
    let k = BLOCK.min(n / 4).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v: Vec<C<T>> = (0..n)
            .map(|_| {
                let re: f64 = rng.random_range(-0.5..0.5);
                let im: f64 = rng.random_range(-0.5..0.5);
                // the first vector leans on the constant, which suits the bottom of the spectrum
                let bias = if j == 0 { T::one() } else { T::zero() };
                Complex::new(bias + T::lit(re), T::lit(im))
            })
            .collect();
        let prev: Vec<&[C<T>]> = xs.iter().map(|x| x.as_slice()).collect();
        if orthonormalize(&mut v, &prev, mass).is_some() {
            xs.push(v);
        }
    }
    if xs.is_empty() {
        return Err(Error::Solver("degenerate start vector".into()));
    }
    let mut ps: Vec<Vec<C<T>>> = Vec::new();
    let mut residual = T::zero();
    let mut lambda = T::zero();

    for iter in 0..max_iter {
        let mut basis: Vec<Vec<C<T>>> = std::mem::take(&mut xs);
        let kx = basis.len();
        let mut images: Vec<Vec<C<T>>> = basis
            .iter()
            .map(|x| {
                let mut ax = vec![zero(); n];
                op.apply(x, &mut ax);
                ax
            })
            .collect();

        // lowest Ritz pair of the current block; the block is a Ritz basis after the first pass
        let h = hermitian(&basis, &images);
        let eig = SymmetricEigen::new(h);
        let order = ascending(&eig.eigenvalues);
        lambda = eig.eigenvalues[order[0]];
        let x0 = combine(&basis, &eig.eigenvectors, order[0], 0);
        let ax0 = combine(&images, &eig.eigenvectors, order[0], 0);
        let r: Vec<C<T>> = (0..n).map(|i| ax0[i] - x0[i] * (lambda * mass[i])).collect();
        residual = r.iter().zip(mass).map(|(z, &m)| norm_sq(*z) / m).sum::<T>().sqrt();
        let floor = lambda.abs().max(scale);
        if residual <= tol * floor {
            let nrm = weighted_norm_sq(&x0, mass).sqrt();
            let x0 = x0.into_iter().map(|z| z / nrm).collect();
            return Ok(EigenPair { value: lambda, vector: x0, residual: residual / floor, iterations: iter });
        }

        // preconditioned residuals of every block member, then the previous directions
        let mut grew = false;
        for c in 0..kx {
            let xc = combine(&basis[..kx], &eig.eigenvectors, order[c], 0);
            let axc = combine(&images[..kx], &eig.eigenvectors, order[c], 0);
            let lc = eig.eigenvalues[order[c]];
            let mut w: Vec<C<T>> = (0..n).map(|i| (axc[i] - xc[i] * (lc * mass[i])) / diag[i]).collect();
            if push_orthonormal(&mut w, &basis, mass) {
                basis.push(w);
                grew = true;
            }
        }
        for mut p in std::mem::take(&mut ps) {
            if push_orthonormal(&mut p, &basis, mass) {
                basis.push(p);
                grew = true;
            }
        }
        if !grew {
            return Err(Error::Convergence { iterations: iter, residual: (residual / floor).as_f64() });
        }
        for b in &basis[images.len()..] {
            let mut ab = vec![zero(); n];
            op.apply(b, &mut ab);
            images.push(ab);
        }

        let h = hermitian(&basis, &images);
        let eig = SymmetricEigen::new(h);
        let order = ascending(&eig.eigenvalues);
        for &col in order.iter().take(kx) {
            let mut x = combine(&basis, &eig.eigenvectors, col, 0);
            let prev: Vec<&[C<T>]> = xs.iter().map(|v| v.as_slice()).collect();
            if orthonormalize(&mut x, &prev, mass).is_some() {
                xs.push(x);
            }
            ps.push(combine(&basis, &eig.eigenvectors, col, kx));
        }
        if xs.is_empty() {
            return Err(Error::Convergence { iterations: iter, residual: (residual / floor).as_f64() });
        }
    }
    let floor = lambda.abs().max(scale);
    Err(Error::Convergence { iterations: max_iter, residual: (residual / floor).as_f64() })
}

/// Orthonormalizes `v` against `basis` and reports whether enough of it survives.
fn push_orthonormal<T: Real>(v: &mut [C<T>], basis: &[Vec<C<T>>], mass: &[T]) -> bool {
    let refs: Vec<&[C<T>]> = basis.iter().map(|b| b.as_slice()).collect();
    orthonormalize(v, &refs, mass).is_some()
}

/// Projected matrix `Bᴴ A B`, symmetrized against roundoff.
fn hermitian<T: Real>(basis: &[Vec<C<T>>], images: &[Vec<C<T>>]) -> DMatrix<C<T>> {
    let k = basis.len();
    DMatrix::from_fn(k, k, |i, j| {
        let v = dot(&basis[i], &images[j]);
        let u = dot(&basis[j], &images[i]).conj();
        (v + u) * T::lit(0.5)
    })
}

fn ascending<T: Real>(values: &nalgebra::DVector<T>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    order
}

/// `Σ_{i ≥ from} c[i, col] · vecs[i]`.
fn combine<T: Real>(vecs: &[Vec<C<T>>], c: &DMatrix<C<T>>, col: usize, from: usize) -> Vec<C<T>> {
    let mut out = vec![zero(); vecs[0].len()];
    for (i, v) in vecs.iter().enumerate().skip(from) {
        axpy(&mut out, c[(i, col)], v);
    }
    out
}

/// Direct diagonalization for tiny systems.
fn dense_smallest<T: Real>(op: &FormOperator<T>) -> Result<EigenPair<T>> {
    let n = op.dim();
    let mass = op.mass();
    let mut a = DMatrix::<C<T>>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = Complex::new(op.diag()[i], T::zero());
    }
    for l in op.links() {
        let (i, j) = (l.a as usize, l.b as usize);
        a[(i, j)] -= l.phase * l.weight;
        a[(j, i)] -= l.phase.conj() * l.weight;
    }
    // symmetric scaling M^{-1/2} A M^{-1/2}
    let s: Vec<T> = mass.iter().map(|&m| T::one() / m.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * (s[i] * s[j]));
    let eig = SymmetricEigen::new(b);
    let (imin, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .ok_or_else(|| Error::Solver("empty spectrum".into()))?;
    let vector: Vec<C<T>> = (0..n).map(|i| eig.eigenvectors[(i, imin)] * s[i]).collect();
    Ok(EigenPair { value, vector, residual: T::zero(), iterations: 0 })
}
