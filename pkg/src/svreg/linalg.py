"""Small dense linear algebra: symmetric eigenproblems, whitening, polynomial fits.

Every eigenvector leaving this module is in *canonical sign*: its first
coordinate with absolute value above ``SIGN_TOL`` is positive.  Eigenpairs are
sorted by descending eigenvalue; numerically tied eigenvalues are ordered by
descending lexicographic order of their (canonical) eigenvectors so the
output is a deterministic function of the input matrix.
"""

from typing import NamedTuple
import warnings

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrum, EmptyBin, InvalidInput, NumericalFailure, SingularCovariance

SIGN_TOL = 1e-12
TIE_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues in descending order and matching eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def gap(self):
        """Difference between the two largest eigenvalues (``inf`` when d == 1)."""
        if self.values.size < 2:
            return np.inf
        return float(self.values[0] - self.values[1])


def as_symmetric(a):
    """Validate ``a`` as a finite symmetric square matrix and return a float copy."""
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    asym = np.abs(a - a.T)
    if np.any(asym > SYMMETRY_TOL * np.maximum(1.0, np.abs(a))):
        raise InvalidInput("matrix is not symmetric")
    return 0.5 * (a + a.T)


def canonical_sign(v):
    """Flip ``v`` so that its first coordinate with ``|v_i| > 1e-12`` is positive."""
    v = np.asarray(v, dtype=np.float64)
    big = np.flatnonzero(np.abs(v) > SIGN_TOL)
    if big.size and v[big[0]] < 0:
        return -v
    return v.copy()


def jacobi_eigh(a, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Rotations sweep the strict upper triangle row by row.  Iteration stops
    once the off-diagonal Frobenius mass falls below ``tol * ||a||_F``.

    Returns unsorted ``(eigenvalues, eigenvectors)``; use :func:`sym_eigen`
    for the canonical ordering.
    """
    a = np.array(a, dtype=np.float64)
    d = a.shape[0]
    vecs = np.eye(d)
    norm = np.linalg.norm(a)
    if norm == 0.0 or d == 1:
        return np.diag(a).copy(), vecs
    threshold = tol * norm
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2) * 2.0)
        if off < threshold:
            return np.diag(a).copy(), vecs
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p = vecs[:, p].copy()
                vec_q = vecs[:, q]
                vecs[:, p] = c * vec_p - s * vec_q
                vecs[:, q] = s * vec_p + c * vec_q
    off = np.sqrt(np.sum(np.triu(a, 1) ** 2) * 2.0)
    if off < threshold:
        return np.diag(a).copy(), vecs
    raise NumericalFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _canonical_order(values, vectors):
    vectors = np.array(vectors, dtype=np.float64)
    for i in range(vectors.shape[1]):
        vectors[:, i] = canonical_sign(vectors[:, i])
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    scale = max(1.0, float(np.max(np.abs(values))))
    d = values.size
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and values[start] - values[stop] <= TIE_TOL * scale:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            # lexsort keys: last key is primary; negate for descending order
            keys = tuple(-block[i] for i in range(d - 1, -1, -1))
            sub = np.lexsort(keys)
            vectors[:, start:stop] = block[:, sub]
            values[start:stop] = values[start:stop][sub]
        start = stop
    return EigenDecomposition(values, vectors)


def sym_eigen(a, method="lapack"):
    """Full eigendecomposition of a symmetric matrix in canonical form.

    Parameters
    ----------
    a : array_like, shape (d, d)
        Finite symmetric matrix.
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls the divide-and-conquer LAPACK driver through
        :func:`numpy.linalg.eigh`; ``"jacobi"`` uses :func:`jacobi_eigh`.

    Returns
    -------
    EigenDecomposition
        Eigenvalues descending, eigenvectors as orthonormal columns in
        canonical sign.

    Raises
    ------
    InvalidInput
        Non-finite, non-square or non-symmetric input.
    NumericalFailure
        The solver failed to converge.
    """
    a = as_symmetric(a)
    if method == "lapack":
        try:
            values, vectors = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(str(exc)) from exc
    elif method == "jacobi":
        values, vectors = jacobi_eigh(a)
    else:
        raise InvalidInput(f"unknown eigensolver {method!r}")
    return _canonical_order(np.asarray(values, dtype=np.float64), vectors)


def _check_gap(gap, values, what):
    scale = max(1.0, float(np.max(np.abs(values))))
    if gap < TIE_TOL * scale:
        warnings.warn(
            f"{what} eigenvalue is not separated (gap {gap:.3g}); "
            "returning the canonical tie-break vector",
            DegenerateSpectrum,
            stacklevel=3,
        )
        return True
    return False


def smallest_eigenvector(a, method="lapack"):
    """Unit eigenvector of the smallest eigenvalue of ``a``.

    Emits :class:`DegenerateSpectrum` when the two smallest eigenvalues are
    tied; the returned vector is then the canonical tie-break choice.
    """
    eig = sym_eigen(a, method=method)
    if eig.values.size > 1:
        _check_gap(eig.values[-2] - eig.values[-1], eig.values, "smallest")
    return eig.vectors[:, -1].copy()


def largest_eigenvector(a, method="lapack"):
    """Top eigenvector of ``a`` plus the eigengap and a degeneracy flag."""
    eig = sym_eigen(a, method=method)
    degenerate = False
    if eig.values.size > 1:
        degenerate = _check_gap(eig.gap, eig.values, "largest")
    return eig.vectors[:, 0].copy(), eig.gap, degenerate


def inv_sqrt(a, rel_tol=1e-10, method="lapack"):
    """Symmetric inverse square root ``W`` with ``W a W = I``.

    Raises
    ------
    SingularCovariance
        If ``lambda_min(a) <= rel_tol * lambda_max(a)``.
    """
    eig = sym_eigen(a, method=method)
    lam_max, lam_min = eig.values[0], eig.values[-1]
    if not lam_max > 0 or lam_min <= rel_tol * lam_max:
        raise SingularCovariance(
            f"matrix is not safely positive definite (eigenvalues in [{lam_min:.3g}, {lam_max:.3g}])"
        )
    v = eig.vectors
    w = (v / np.sqrt(eig.values)) @ v.T
    return 0.5 * (w + w.T)


def polyfit_ls(abscissae, ordinates, degree, pivot_tol=1e-10):
    """Least-squares polynomial fit, coefficients in ascending powers.

    The design matrix is built on abscissae mapped affinely to [-1, 1] and
    solved by column-pivoted QR.  If it is rank deficient (a trailing pivot
    below ``pivot_tol`` times the leading one, or fewer than ``degree + 1``
    distinct abscissae) the degree is lowered until the fit has full rank;
    the result is zero-padded to length ``degree + 1``.

    Raises
    ------
    EmptyBin
        No data points.
    """
    t = np.asarray(abscissae, dtype=np.float64).ravel()
    y = np.asarray(ordinates, dtype=np.float64).ravel()
    if degree < 0 or int(degree) != degree:
        raise InvalidInput("degree must be a non-negative integer")
    degree = int(degree)
    if t.size != y.size:
        raise InvalidInput("abscissae and ordinates differ in length")
    if t.size == 0:
        raise EmptyBin("cannot fit a polynomial to zero points")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise InvalidInput("non-finite values in polynomial fit")

    out = np.zeros(degree + 1)
    lo, hi = t.min(), t.max()
    if degree == 0 or hi == lo:
        out[0] = y.mean()
        return out
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    u = (t - center) / half
    top = degree if degree == 1 else min(degree, np.unique(t).size - 1)

    for m in range(top, 0, -1):
        vander = u[:, None] ** np.arange(m + 1)
        q, r, perm = scipy.linalg.qr(vander, mode="economic", pivoting=True, overwrite_a=True,
                                     check_finite=False)
        pivots = np.abs(np.diag(r))
        if pivots[-1] <= pivot_tol * pivots[0]:
            continue
        z = scipy.linalg.solve_triangular(r, q.T @ y, check_finite=False)
        scaled = np.empty(m + 1)
        scaled[perm] = z
        # expand sum_k scaled[k] * ((t - center) / half)**k in powers of t
        base = np.array([-center / half, 1.0 / half])
        power = np.ones(1)
        for k in range(m + 1):
            out[:k + 1] += scaled[k] * power
            power = np.convolve(power, base)
        return out
    out[0] = y.mean()
    return out
