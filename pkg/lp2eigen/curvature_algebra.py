"""
Pointwise algebra of the elementary symmetric polynomials, the Garding cones and the
Hessian quotient operator

    F(A) = (sigma_n(A) / sigma_{n-k}(A)) ** (1/k).

All the functions act on the trailing axis of a spectrum array (shape (..., n)) or the
trailing two axes of a matrix array (shape (..., n, n)), so the same call evaluates a
single spectrum or a whole field of them at once.
"""

import numpy as np

from .exceptions import AdmissibilityError, CurvatureAlgebraError
from .utils import binomial_ones


def _check_degree(k, n, lowest=0):
    if not lowest <= k <= n:
        raise CurvatureAlgebraError(f"Degree k={k} out of range [{lowest}, {n}]")


def elementary_symmetric(s):
    """All the elementary symmetric polynomials sigma_0, ..., sigma_n of a spectrum.

    Coefficients of prod_i (1 + s_i t), accumulated one factor at a time.

    Parameters
    ----------
    s : array_like
        Shape (..., n).

    Returns
    -------
    numpy.ndarray
        Shape (..., n+1), with sigma_0 = 1.

    Examples
    --------
    >>> elementary_symmetric([1, 2, 3]).tolist()
    [1.0, 6.0, 11.0, 6.0]
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    sigma = np.zeros(s.shape[:-1] + (n + 1,))
    sigma[..., 0] = 1.0
    for i in range(n):
        sigma[..., 1 : i + 2] += s[..., i, None] * sigma[..., : i + 1]
    return sigma


def sigma_k(s, k):
    """Elementary symmetric polynomial of degree `k`.

    Examples
    --------
    >>> float(sigma_k([1, 2, 3], 2))
    11.0
    >>> float(sigma_k([5.0, 0.0], 2))
    0.0
    """
    s = np.asarray(s, dtype=float)
    _check_degree(k, s.shape[-1])
    return elementary_symmetric(s)[..., k]


def sigma_k_gradient(s, k):
    """Partial derivatives of sigma_k, d sigma_k / d s_i = sigma_{k-1}(s without s_i).

    Examples
    --------
    >>> sigma_k_gradient([1, 2, 3], 2).tolist()
    [5.0, 4.0, 3.0]
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    _check_degree(k, n, lowest=1)
    return np.stack(
        [
            elementary_symmetric(np.delete(s, i, axis=-1))[..., k - 1]
            for i in range(n)
        ],
        axis=-1,
    )


def in_gamma_k(s, k):
    """Membership in the Garding cone: sigma_1, ..., sigma_k all strictly positive.

    Examples
    --------
    >>> bool(in_gamma_k([1, 1, -0.1], 2))
    True
    >>> bool(in_gamma_k([1, -1], 2))
    False
    """
    s = np.asarray(s, dtype=float)
    _check_degree(k, s.shape[-1], lowest=1)
    return np.all(elementary_symmetric(s)[..., 1 : k + 1] > 0, axis=-1)


def gamma_k_margin(s, k):
    """Smallest of sigma_1, ..., sigma_k, positive exactly inside the Garding cone."""
    s = np.asarray(s, dtype=float)
    _check_degree(k, s.shape[-1], lowest=1)
    return np.min(elementary_symmetric(s)[..., 1 : k + 1], axis=-1)


def maclaurin_means(s):
    """Normalized means (sigma_j / C(n, j)) ** (1/j), j = 1..n.

    Non-increasing in j on the positive cone.
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    sigma = elementary_symmetric(s)
    return np.stack(
        [(sigma[..., j] / binomial_ones(n, j)) ** (1 / j) for j in range(1, n + 1)],
        axis=-1,
    )


def quotient_from_spectrum(mu, k):
    """F evaluated on eigenvalues, no admissibility check."""
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[-1]
    sigma = elementary_symmetric(mu)
    return (sigma[..., n] / sigma[..., n - k]) ** (1 / k)


def quotient_gradient_from_spectrum(mu, k):
    """Eigenvalue derivatives d F / d mu_i, no admissibility check."""
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[-1]
    sigma = elementary_symmetric(mu)
    value = (sigma[..., n] / sigma[..., n - k]) ** (1 / k)
    log_derivative = sigma_k_gradient(mu, n) / sigma[..., n, None]
    if k < n:
        log_derivative = log_derivative - (
            sigma_k_gradient(mu, n - k) / sigma[..., n - k, None]
        )
    return value[..., None] / k * log_derivative


def _positive_spectrum(a, k):
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    _check_degree(k, n, lowest=1)
    if a.shape[-2:] != (n, n):
        raise CurvatureAlgebraError(f"Expected square matrices, got shape {a.shape}")
    mu, vectors = np.linalg.eigh(a)
    lowest = mu[..., 0]
    if np.any(lowest <= 0):
        node = int(np.argmin(lowest)) if lowest.ndim else None
        value = float(np.min(lowest))
        raise AdmissibilityError(
            f"Matrix argument not positive definite (smallest eigenvalue {value:.3e})",
            node=node,
            value=value,
        )
    return mu, vectors


def quotient_F(a, k):
    """Hessian quotient F(A) = (sigma_n / sigma_{n-k}) ** (1/k) of symmetric matrices.

    Parameters
    ----------
    a : array_like
        Symmetric positive definite matrices, shape (..., n, n).
    k : int
        1 <= k <= n; k = n gives det(A) ** (1/n).

    Returns
    -------
    numpy.ndarray or numpy.float64

    Raises
    ------
    AdmissibilityError
        If any matrix is not positive definite.

    Examples
    --------
    >>> float(quotient_F(np.eye(2), 1))
    0.5
    >>> float(quotient_F(np.diag([2.0, 8.0]), 2))
    4.0
    """
    mu, _ = _positive_spectrum(a, k)
    return quotient_from_spectrum(mu, k)


def quotient_F_gradient(a, k):
    """Matrix derivative F^{ij} = dF / dA_{ij}.

    Spectral function of A: with A = Q diag(mu) Q^T, F^{ij} = Q diag(dF/dmu) Q^T. The
    eigenvalue derivatives of a symmetric function coincide on repeated eigenvalues,
    so this expression is continuous across eigenvalue crossings.

    Examples
    --------
    >>> bool(np.allclose(quotient_F_gradient(np.eye(2), 1), 0.25 * np.eye(2)))
    True
    """
    mu, vectors = _positive_spectrum(a, k)
    d_mu = quotient_gradient_from_spectrum(mu, k)
    return np.einsum("...ia,...a,...ja->...ij", vectors, d_mu, vectors)


def reciprocal_identity_check(s, k):
    """Residual of sigma_k(s) = sigma_{n-k}(1/s) / sigma_n(1/s).

    Raises
    ------
    CurvatureAlgebraError
        If any entry is zero.

    Examples
    --------
    >>> float(reciprocal_identity_check([1.0, 1.0], 1))
    0.0
    """
    s = np.asarray(s, dtype=float)
    n = s.shape[-1]
    _check_degree(k, n)
    if np.any(s == 0):
        raise CurvatureAlgebraError("Reciprocal identity undefined for zero entries")
    inverse = elementary_symmetric(1 / s)
    return np.abs(
        elementary_symmetric(s)[..., k] - inverse[..., n - k] / inverse[..., n]
    )
