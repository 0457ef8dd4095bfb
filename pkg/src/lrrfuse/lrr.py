"""Low-rank representation with a fixed dictionary, solved by inexact ALM.

Minimizes ||Z||_* + lambda ||E||_2,1 subject to X = D Z + E via variable
splitting Z = J with multipliers Y1 (feasibility) and Y2 (split), the
penalty mu growing geometrically each iteration.  Setting D = X gives
plain self-expression.  The two proximal building blocks, singular
value thresholding for the nuclear norm and column shrinkage for the
l2,1 norm, are exposed on their own.

``LowRankRepresentation`` wraps the solver as a scikit-learn estimator
(rows are samples; the solver itself works on columns).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dictionary import Dictionary
from .validation import as_float_matrix, check_at_least, check_positive

__all__ = [
    "LrrParams",
    "LrrSolution",
    "svt",
    "shrink_l21",
    "lrr_solve",
    "column_l1_norms",
    "nuclear_norm",
    "LowRankRepresentation",
]


@dataclass(frozen=True)
class LrrParams:
    """Solver settings.

    ``mu0`` of None scales the initial penalty to the data,
    mu0 = 1e-2 / sigma_1(X), falling back to 1e-2 for X = 0.
    """

    lam: float = 100.0
    mu0: float = None
    rho: float = 1.1
    mu_max: float = 1e10
    tol: float = 1e-6
    max_iter: int = 1000

    def __post_init__(self):
        check_positive(self.lam, "lam")
        if self.mu0 is not None:
            check_positive(self.mu0, "mu0")
        if not float(self.rho) > 1.0:
            raise ValueError("rho must exceed 1")
        check_positive(self.mu_max, "mu_max")
        check_positive(self.tol, "tol")
        check_at_least(self.max_iter, 1, "max_iter")


@dataclass(frozen=True)
class LrrSolution:
    """Solver output: coefficients, sparse error, and diagnostics."""

    z: np.ndarray = field(repr=False)
    e: np.ndarray = field(repr=False)
    iterations: int = 0
    feasibility_residual: float = np.inf
    split_residual: float = np.inf
    objective: float = np.inf
    converged: bool = False


def _gram_singular_values(mtx):
    """Singular values via the Gram matrix of the smaller side, descending."""
    m, n = mtx.shape
    g = mtx @ mtx.T if m <= n else mtx.T @ mtx
    w = np.linalg.eigvalsh(g)
    return np.sqrt(np.maximum(w[::-1], 0.0))


def _spectral_norm(mtx):
    if mtx.size == 0:
        return 0.0
    return float(_gram_singular_values(mtx)[0])


def nuclear_norm(mtx):
    """Sum of singular values."""
    mtx = as_float_matrix(mtx)
    if mtx.size == 0:
        return 0.0
    return float(_gram_singular_values(mtx).sum())


def svt(mtx, tau, method="auto"):
    """Singular value thresholding, the proximal operator of ||.||_*.

    Returns U max(S - tau, 0) V^T for the SVD U S V^T of ``mtx``.

    ``method`` selects the factorization: "direct" runs a full SVD;
    "gram" eigendecomposes the Gram matrix of the smaller side and
    rebuilds the thresholded result from it, which is much faster for
    very oblong matrices; "auto" picks "gram" when the smaller side is
    at most a quarter of the larger.  Both paths agree to high accuracy
    and are tested against each other.
    """
    m = as_float_matrix(mtx)
    tau = float(tau)
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    rows, cols = m.shape
    if method == "auto":
        method = "gram" if 4 * min(rows, cols) <= max(rows, cols) else "direct"
    if method == "direct":
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        keep = s > tau
        if not keep.any():
            return np.zeros_like(m)
        return (u[:, keep] * (s[keep] - tau)) @ vt[keep]
    if method != "gram":
        raise ValueError("method must be auto, direct, or gram")

    if rows <= cols:
        g = m @ m.T
        w, u = np.linalg.eigh(g)
        sig = np.sqrt(np.maximum(w[::-1], 0.0))
        u = u[:, ::-1]
        keep = sig > tau
        if not keep.any():
            return np.zeros_like(m)
        gain = (sig[keep] - tau) / sig[keep]
        basis = u[:, keep]
        return (basis * gain) @ (basis.T @ m)
    g = m.T @ m
    w, v = np.linalg.eigh(g)
    sig = np.sqrt(np.maximum(w[::-1], 0.0))
    v = v[:, ::-1]
    keep = sig > tau
    if not keep.any():
        return np.zeros_like(m)
    gain = (sig[keep] - tau) / sig[keep]
    basis = v[:, keep]
    return (m @ (basis * gain)) @ basis.T


def shrink_l21(mtx, tau):
    """Column-wise shrinkage, the proximal operator of tau ||.||_2,1.

    Each column q becomes max(1 - tau / ||q||_2, 0) q; zero columns stay
    zero.
    """
    m = as_float_matrix(mtx)
    tau = float(tau)
    if tau < 0.0:
        raise ValueError("tau must be >= 0")
    norms = np.sqrt((m * m).sum(axis=0))
    scale = np.zeros_like(norms)
    np.divide(norms - tau, norms, out=scale, where=norms > 0)
    return m * np.maximum(scale, 0.0)


def column_l1_norms(mtx):
    """Per-column sums of absolute values."""
    return np.abs(as_float_matrix(mtx)).sum(axis=0)


def lrr_solve(data, dictionary, params=None):
    """Solve min ||Z||_* + lam ||E||_2,1 s.t. X = D Z + E by inexact ALM.

    Parameters
    ----------
    data : (dim, count) matrix X whose columns are the signals
    dictionary : a :class:`Dictionary` or a plain (dim, K) atom matrix;
        pass X itself for self-expression
    params : LrrParams, defaults apply when omitted

    Returns
    -------
    LrrSolution.  ``converged`` is False when the iteration cap was hit
    first; the best iterate is still returned so callers can proceed
    with a warning.

    Notes
    -----
    Per iteration: J <- svt(Z + Y2/mu, 1/mu); Z from the normal
    equations (I + D^T D) Z = D^T (X - E) + J + (D^T Y1 - Y2)/mu;
    E <- shrink_l21(X - D Z + Y1/mu, lam/mu); multiplier steps
    Y1 += mu (X - D Z - E), Y2 += mu (Z - J); mu <- min(rho mu, mu_max).
    Stops when both infinity-norm residuals fall to ``tol``.  The system
    matrix is factored once; when K > dim the solve is routed through
    the dim x dim identity I + D D^T instead, which is the same
    operator via the push-through identity at a fraction of the cost.
    """
    x = as_float_matrix(data, "data")
    a = dictionary.atoms if isinstance(dictionary, Dictionary) else as_float_matrix(
        dictionary, "dictionary"
    )
    if params is None:
        params = LrrParams()
    dim, count = x.shape
    if a.shape[0] != dim:
        raise ValueError(
            "dictionary dimension %d does not match data %d" % (a.shape[0], dim)
        )
    size = a.shape[1]

    if params.mu0 is not None:
        mu = float(params.mu0)
    else:
        top = _spectral_norm(x)
        mu = 1e-2 / top if top > 0 else 1e-2

    if size <= dim:
        fac = cho_factor(np.eye(size) + a.T @ a)

        def solve_normal(b):
            return cho_solve(fac, b)

    else:
        fac = cho_factor(np.eye(dim) + a @ a.T)

        def solve_normal(b):
            return b - a.T @ cho_solve(fac, a @ b)

    z = np.zeros((size, count))
    j = np.zeros((size, count))
    e = np.zeros((dim, count))
    y1 = np.zeros((dim, count))
    y2 = np.zeros((size, count))
    feas = np.inf
    split = np.inf
    converged = False
    it = 0

    for it in range(1, int(params.max_iter) + 1):
        j = svt(z + y2 / mu, 1.0 / mu)
        z = solve_normal(a.T @ (x - e + y1 / mu) + j - y2 / mu)
        az = a @ z
        e = shrink_l21(x - az + y1 / mu, params.lam / mu)
        h1 = x - az - e
        h2 = z - j
        y1 += mu * h1
        y2 += mu * h2
        mu = min(params.rho * mu, params.mu_max)
        feas = float(np.abs(h1).max()) if h1.size else 0.0
        split = float(np.abs(h2).max()) if h2.size else 0.0
        if feas <= params.tol and split <= params.tol:
            converged = True
            break

    objective = nuclear_norm(z) + params.lam * float(
        np.sqrt((e * e).sum(axis=0)).sum()
    )
    return LrrSolution(
        z=z,
        e=e,
        iterations=it,
        feasibility_residual=feas,
        split_residual=split,
        objective=objective,
        converged=converged,
    )


class LowRankRepresentation(BaseEstimator):
    """Low-rank representation as a scikit-learn estimator.

    ``fit(X)`` computes coefficients for the rows of X against the
    dictionary; with ``dictionary=None`` the data represents itself
    (D = X, subspace-clustering style).  ``transform`` solves for new
    rows against the dictionary captured at fit time.

    Parameters mirror :class:`LrrParams`; ``dictionary`` is either a
    :class:`Dictionary` or an (n_atoms, n_features) array of atom rows.

    Attributes
    ----------
    coefficients_ : (n_samples, n_atoms) fused representation Z^T
    error_ : (n_samples, n_features) sparse error E^T
    n_iter_, converged_, feasibility_residual_, split_residual_,
    objective_ : solver diagnostics
    """

    def __init__(
        self,
        dictionary=None,
        lam=100.0,
        mu0=None,
        rho=1.1,
        mu_max=1e10,
        tol=1e-6,
        max_iter=1000,
    ):
        self.dictionary = dictionary
        self.lam = lam
        self.mu0 = mu0
        self.rho = rho
        self.mu_max = mu_max
        self.tol = tol
        self.max_iter = max_iter

    def _params(self):
        return LrrParams(
            lam=self.lam,
            mu0=self.mu0,
            rho=self.rho,
            mu_max=self.mu_max,
            tol=self.tol,
            max_iter=self.max_iter,
        )

    def _atom_matrix(self, x):
        if self.dictionary is None:
            return x.T
        if isinstance(self.dictionary, Dictionary):
            return self.dictionary.atoms
        return check_array(self.dictionary, dtype=np.float64).T

    def fit(self, X, y=None):
        x = check_array(X, dtype=np.float64)
        atoms = self._atom_matrix(x)
        solution = lrr_solve(x.T, atoms, self._params())
        self.atoms_ = atoms
        self.coefficients_ = solution.z.T
        self.error_ = solution.e.T
        self.n_iter_ = solution.iterations
        self.converged_ = solution.converged
        self.feasibility_residual_ = solution.feasibility_residual
        self.split_residual_ = solution.split_residual
        self.objective_ = solution.objective
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).coefficients_

    def transform(self, X):
        check_is_fitted(self, "atoms_")
        x = check_array(X, dtype=np.float64)
        return lrr_solve(x.T, self.atoms_, self._params()).z.T
