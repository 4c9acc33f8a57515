"""Independent reference implementations used to derive expected values in the tests.

These avoid the code paths under test: eigenvalues come from characteristic
polynomials, least squares from the normal equations in extended precision,
nearest neighbours from a full sort, and so on.
"""

import math

import numpy as np


def eig2_charpoly(a):
    """Eigenvalues of a symmetric 2x2 matrix, descending, from the quadratic formula."""
    (p, q), (_, r) = a
    mean = 0.5 * (p + r)
    rad = math.hypot(0.5 * (p - r), q)
    return np.array([mean + rad, mean - rad])


def eig3_charpoly(a):
    """Eigenvalues of a symmetric 3x3 matrix, descending, by the trigonometric cubic solution."""
    a = np.asarray(a, dtype=np.float64)
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(a))[::-1]
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = np.linalg.det(b) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.array(sorted((e1, e2, e3), reverse=True))


def polyfit_normal_equations(t, y, degree):
    """Least-squares coefficients (ascending powers) by solving the normal equations in long double."""
    t = np.asarray(t, dtype=np.longdouble)
    y = np.asarray(y, dtype=np.longdouble)
    v = np.vander(t, degree + 1, increasing=True)
    g = v.T @ v
    rhs = v.T @ y
    # Gaussian elimination with partial pivoting in extended precision
    m = np.concatenate((g, rhs[:, None]), axis=1)
    k = degree + 1
    for c in range(k):
        piv = c + int(np.argmax(np.abs(m[c:, c])))
        m[[c, piv]] = m[[piv, c]]
        for r in range(c + 1, k):
            m[r] -= m[r, c] / m[c, c] * m[c]
    sol = np.zeros(k, dtype=np.longdouble)
    for c in range(k - 1, -1, -1):
        sol[c] = (m[c, -1] - m[c, c + 1:k] @ sol[c + 1:]) / m[c, c]
    return sol.astype(np.float64)


def knn_brute(train_x, train_y, query, k):
    """kNN regression by sorting every distance; ties go to the lower training index."""
    out = np.empty(len(query))
    for i, q in enumerate(query):
        dist = [(float(np.sum((q - x) ** 2)), j) for j, x in enumerate(train_x)]
        dist.sort()
        idx = sorted(j for _, j in dist[:k])
        out[i] = sum(train_y[j] for j in idx) / k
    return out


def trimmed_mean_sort(values, trim):
    vals = sorted(float(v) for v in values)
    cut = math.ceil(trim * len(vals) - 1e-9)
    kept = vals[cut:len(vals) - cut]
    return math.fsum(kept) / len(kept)


def two_pass_cov(x):
    """Biased covariance by explicit loops over entries."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    mean = [sum(x[i, a] for i in range(n)) / n for a in range(d)]
    cov = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            cov[a, b] = sum((x[i, a] - mean[a]) * (x[i, b] - mean[b]) for i in range(n)) / n
    return np.array(mean), cov


def normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
