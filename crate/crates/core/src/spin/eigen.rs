use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Eigen-decomposition of a spin Hamiltonian: ascending energies (GHz) and the
/// matching column eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: DMatrix<Complex64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> DVector<Complex64> {
        self.states.column(k).into_owned()
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&e| Complex64::from(e)),
        ));
        &self.states * diag * self.states.adjoint()
    }

    /// `<j|op|i>` expectation-style matrix element between eigenstates `i` and `j`.
    pub fn matrix_element(&self, op: &DMatrix<Complex64>, i: usize, j: usize) -> Complex64 {
        (self.states.column(i).adjoint() * op * self.states.column(j))[(0, 0)]
    }
}

fn max_anti_hermitian(h: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Diagonalizes a Hermitian matrix.
///
/// Energies come out ascending. Inside a degenerate cluster the eigenvectors are
/// replaced by a canonical basis: the lab basis states `|m = S>, |m = S-1>, ...` are
/// projected onto the cluster in that order and orthonormalized, so the first vector
/// has the largest possible overlap with `|m = S>`. Every column is then phased so its
/// largest component is real and positive. This makes the output independent of the
/// backend's arbitrary choices.
pub fn eigensystem(h: &DMatrix<Complex64>) -> Result<EigenSystem> {
    if !h.is_square() {
        return Err(Error::Domain(format!("expected a square matrix, got {}x{}", h.nrows(), h.ncols())));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let asym = max_anti_hermitian(h);
    if asym > HERMITIAN_TOL {
        return Err(Error::NonHermitian(asym));
    }
    let n = h.nrows();
    let sym = (h + h.adjoint()) * Complex64::from(0.5);
    let decomposition = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
    let mut states = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        states.set_column(dst, &decomposition.eigenvectors.column(src));
    }

    let scale = energies.iter().fold(1.0_f64, |acc, e| acc.max(e.abs()));
    let tol = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut states, start, end);
        }
        start = end;
    }
    for k in 0..n {
        fix_phase(&mut states, k);
    }
    Ok(EigenSystem { energies, states })
}

fn canonicalize_cluster(states: &mut DMatrix<Complex64>, start: usize, end: usize) {
    let n = states.nrows();
    let cluster: Vec<DVector<Complex64>> = (start..end).map(|k| states.column(k).into_owned()).collect();
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(cluster.len());
    for k in 0..n {
        if basis.len() == cluster.len() {
            break;
        }
        // projector onto the cluster applied to lab basis vector e_k
        let mut v = DVector::<Complex64>::zeros(n);
        for c in &cluster {
            v += c * c[k].conj();
        }
        for b in &basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / Complex64::from(norm));
        }
    }
    if basis.len() == cluster.len() {
        for (offset, v) in basis.into_iter().enumerate() {
            states.set_column(start + offset, &v);
        }
    }
}

fn fix_phase(states: &mut DMatrix<Complex64>, k: usize) {
    let col = states.column(k);
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let Some(pivot) = col.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)) else {
        return;
    };
    let phase = col[pivot] / Complex64::from(col[pivot].norm());
    let rot = phase.conj();
    for z in states.column_mut(k).iter_mut() {
        *z *= rot;
    }
}
