"""Sparse coding and dictionary learning.

Orthogonal matching pursuit, K-SVD training of one sub-dictionary per
orientation class, and the assembly of the per-class sub-dictionaries
into a single global dictionary whose atoms keep their class label.
Patch vectors are used raw, no mean removal or contrast normalization,
so atoms represent the DC component too and reconstruction from codes
is a plain matrix product.

``PatchDictionaryLearner`` wraps the classify-then-train pipeline in a
scikit-learn estimator (rows are samples).
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .hog import column_labels
from .validation import as_float_matrix, check_at_least

__all__ = [
    "KsvdParams",
    "KsvdResult",
    "Dictionary",
    "omp",
    "omp_all",
    "ksvd_train",
    "build_global_dictionary",
    "PatchDictionaryLearner",
]

ATOM_NORM_TOL = 1e-6
COHERENCE_LIMIT = 0.99
RESIDUAL_EXIT = 1e-12


@dataclass(frozen=True)
class KsvdParams:
    """K-SVD settings: atoms per class, OMP sparsity target, sweep count, seed."""

    atoms: int = 128
    sparsity: int = 6
    iterations: int = 30
    seed: int = 0

    def __post_init__(self):
        check_at_least(self.atoms, 1, "atoms")
        check_at_least(self.sparsity, 1, "sparsity")
        check_at_least(self.iterations, 1, "iterations")


@dataclass(frozen=True)
class Dictionary:
    """Unit-norm atoms (dim x size) with a class label per atom."""

    atoms: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    bins: int

    def __post_init__(self):
        a = as_float_matrix(self.atoms, "atoms")
        lab = np.asarray(self.labels, dtype=np.int64).ravel()
        if lab.size != a.shape[1]:
            raise ValueError(
                "%d labels for %d atoms" % (lab.size, a.shape[1])
            )
        if lab.size and (lab.min() < 0 or lab.max() > int(self.bins)):
            raise ValueError("atom labels must lie in 0..%d" % int(self.bins))
        norms = np.sqrt((a * a).sum(axis=0))
        if norms.size and np.abs(norms - 1.0).max() > ATOM_NORM_TOL:
            raise ValueError("dictionary atoms must have unit norm")
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "labels", lab)

    @property
    def dim(self):
        return self.atoms.shape[0]

    @property
    def size(self):
        return self.atoms.shape[1]


@dataclass(frozen=True)
class KsvdResult:
    """Learned atoms plus the post-sweep representation error per iteration."""

    atoms: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)


def _as_atoms(dictionary, name="dictionary"):
    if isinstance(dictionary, Dictionary):
        return dictionary.atoms
    return as_float_matrix(dictionary, name)


def _check_unit_atoms(a):
    norms = np.sqrt((a * a).sum(axis=0))
    if np.abs(norms - 1.0).max() > ATOM_NORM_TOL:
        raise ValueError("dictionary atoms must have unit norm")


def omp_all(dictionary, signals, sparsity):
    """Batch orthogonal matching pursuit over the columns of ``signals``.

    Greedy selection of the atom most correlated with the residual,
    followed by a least-squares refit on the selected support, repeated
    until ``sparsity`` atoms are chosen or the residual norm drops below
    1e-12.  Runs in the Gram domain, synchronously across columns, and
    returns a (size x count) code matrix with at most ``sparsity``
    nonzeros per column.
    """
    a = _as_atoms(dictionary)
    y = as_float_matrix(signals, "signals")
    dim, size = a.shape
    if y.shape[0] != dim:
        raise ValueError(
            "signal dimension %d does not match atoms %d" % (y.shape[0], dim)
        )
    _check_unit_atoms(a)
    t0 = int(sparsity)
    if not 1 <= t0 <= min(dim, size):
        raise ValueError("sparsity must lie in 1..min(dim, atoms)")
    count = y.shape[1]
    codes = np.zeros((size, count))
    if count == 0:
        return codes

    gram = a.T @ a
    proj = a.T @ y
    energy = (y * y).sum(axis=0)
    support = np.zeros((t0, count), dtype=np.int64)
    chosen = np.zeros((size, count), dtype=bool)
    coefs = np.zeros((t0, count))
    active = energy > RESIDUAL_EXIT ** 2

    for t in range(t0):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        if t == 0:
            corr = np.abs(proj[:, act])
        else:
            partial = np.einsum(
                "ktm,tm->km", gram[:, support[:t, act]], coefs[:t, act], optimize=True
            )
            corr = np.abs(proj[:, act] - partial)
        corr[chosen[:, act]] = -1.0
        picks = corr.argmax(axis=0)
        support[t, act] = picks
        chosen[picks, act] = True

        sel = support[: t + 1, act]
        gss = np.moveaxis(gram[sel[:, None, :], sel[None, :, :]], -1, 0)
        rhs = proj[sel, act].T[..., None]
        try:
            sol = np.linalg.solve(gss, rhs)
        except np.linalg.LinAlgError:
            gss = gss + np.eye(t + 1) * 1e-12
            sol = np.linalg.solve(gss, rhs)
        coef = sol[..., 0].T
        coefs[: t + 1, act] = coef
        codes[:, act] = 0.0
        codes[sel, act] = coef
        left = energy[act] - (coef * proj[sel, act]).sum(axis=0)
        active[act] = left > RESIDUAL_EXIT ** 2

    return codes


def omp(dictionary, signal, sparsity):
    """Sparse-code one signal; see :func:`omp_all`."""
    vec = np.asarray(signal, dtype=np.float64).ravel()
    return omp_all(dictionary, vec[:, None], sparsity)[:, 0]


def _init_atoms(x, size, rng):
    """Seeded draw of ``size`` distinct nonzero training columns, normalized."""
    dim = x.shape[0]
    uniq = np.unique(x, axis=1)
    norms = np.sqrt((uniq * uniq).sum(axis=0))
    cand = uniq[:, norms > 0]
    if cand.shape[1] >= size:
        pick = rng.choice(cand.shape[1], size=size, replace=False)
        atoms = cand[:, pick].copy()
    else:
        # degenerate training set, pad with random directions
        extra = rng.standard_normal((dim, size - cand.shape[1]))
        atoms = np.hstack([cand, extra])
    atoms /= np.sqrt((atoms * atoms).sum(axis=0))
    return atoms


def _replacement_atom(atoms, skip, x, col_err, rng):
    """Worst-represented training column, normalized, avoiding duplicates."""
    others = np.delete(np.arange(atoms.shape[1]), skip)
    for col in np.argsort(-col_err):
        v = x[:, col]
        norm = np.linalg.norm(v)
        if norm == 0.0 or col_err[col] == 0.0:
            break
        cand = v / norm
        if others.size and np.abs(atoms[:, others].T @ cand).max() > COHERENCE_LIMIT:
            continue
        return cand
    v = rng.standard_normal(atoms.shape[0])
    return v / np.linalg.norm(v)


def _cleanup_atoms(atoms, codes, x, residual, rng):
    """Replace unused and mutually coherent atoms by fresh training columns."""
    col_err = (residual * residual).sum(axis=0)
    for k in range(atoms.shape[1]):
        others = np.delete(np.arange(atoms.shape[1]), k)
        coherent = (
            others.size > 0
            and np.abs(atoms[:, others].T @ atoms[:, k]).max() > COHERENCE_LIMIT
        )
        unused = not np.any(codes[k] != 0.0)
        if not (coherent or unused):
            continue
        atoms[:, k] = _replacement_atom(atoms, k, x, col_err, rng)
        codes[k, :] = 0.0


def ksvd_train(signals, params):
    """Learn a dictionary by K-SVD.

    Alternates OMP coding of every training column with a sequential
    atom-update sweep: for each atom, the error matrix restricted to the
    columns using it (with that atom's contribution removed) is replaced
    by its best rank-1 approximation, the atom taking the leading left
    singular vector and its coefficient row sigma_1 times the right one.
    Greedy recoding can fit single columns worse than the codes carried
    out of the previous sweep, so each column keeps whichever of the two
    codes has the smaller residual; this makes the per-iteration error
    non-increasing.

    The recorded representation error sum ||v - D code(v)||^2 is
    measured after the sweep; unused or mutually coherent atoms
    (|<a_i, a_j>| > 0.99) are then replaced by the worst-represented
    training column before the next coding pass.

    Returns
    -------
    KsvdResult with the (dim x atoms) dictionary and one error value per
    iteration.
    """
    x = as_float_matrix(signals, "signals")
    dim, count = x.shape
    if count < 1:
        raise ValueError("training set is empty")
    if not isinstance(params, KsvdParams):
        raise TypeError("params must be KsvdParams")
    size = int(params.atoms)
    t0 = max(1, min(int(params.sparsity), size, dim))
    rng = np.random.default_rng(params.seed)

    atoms = _init_atoms(x, size, rng)
    errors = np.zeros(int(params.iterations))
    codes = None
    for it in range(int(params.iterations)):
        fresh = omp_all(atoms, x, t0)
        if codes is None:
            codes = fresh
        else:
            kept = ((x - atoms @ codes) ** 2).sum(axis=0)
            redone = ((x - atoms @ fresh) ** 2).sum(axis=0)
            better = redone <= kept
            codes[:, better] = fresh[:, better]
        residual = x - atoms @ codes
        for k in range(size):
            users = np.flatnonzero(codes[k] != 0.0)
            if users.size == 0:
                continue
            residual[:, users] += np.outer(atoms[:, k], codes[k, users])
            err = residual[:, users]
            if users.size == 1:
                norm = np.linalg.norm(err[:, 0])
                if norm == 0.0:
                    codes[k, users] = 0.0
                    continue
                atom = err[:, 0] / norm
                row = np.array([norm])
            else:
                u, s, vt = np.linalg.svd(err, full_matrices=False)
                atom = u[:, 0]
                row = s[0] * vt[0]
            atoms[:, k] = atom
            codes[k, users] = row
            residual[:, users] = err - np.outer(atom, row)
        errors[it] = float((residual * residual).sum())
        _cleanup_atoms(atoms, codes, x, residual, rng)
    return KsvdResult(atoms=atoms, errors=errors)


def _dedup_atoms(v):
    """Distinct nonzero columns of ``v``, normalized, in canonical order."""
    uniq = np.unique(v, axis=1)
    norms = np.sqrt((uniq * uniq).sum(axis=0))
    keep = uniq[:, norms > 0]
    if keep.shape[1] == 0:
        return None
    return keep / np.sqrt((keep * keep).sum(axis=0))


def build_global_dictionary(classes, params):
    """Train one sub-dictionary per class and concatenate them in order.

    ``classes`` lists the per-class patch matrices V_0 .. V_L (shape
    dim x P_j, P_j may be zero).  Empty classes are skipped.  A class
    with fewer patches than ``params.atoms`` contributes its distinct
    nonzero patches, normalized, without K-SVD; a class whose patches
    are all zero contributes a single constant atom so that every
    non-empty class stays representable.  Class columns are put into a
    canonical lexicographic order before training, so the result does
    not depend on the order patches were pooled in.
    """
    if not isinstance(params, KsvdParams):
        raise TypeError("params must be KsvdParams")
    mats = [as_float_matrix(v, "class %d" % j) for j, v in enumerate(classes)]
    dims = {m.shape[0] for m in mats if m.size}
    if len(dims) > 1:
        raise ValueError("class matrices disagree on patch dimension")
    if not dims:
        raise RuntimeError("every class is empty, nothing to train on")
    dim = dims.pop()

    blocks = []
    labels = []
    for j, v in enumerate(mats):
        if v.shape[1] == 0:
            continue
        if v.shape[1] < params.atoms:
            sub = _dedup_atoms(v)
            if sub is None:
                sub = np.full((dim, 1), 1.0 / np.sqrt(dim))
        else:
            order = np.lexsort(v[::-1, :])
            sub = ksvd_train(v[:, order], params).atoms
        blocks.append(sub)
        labels.extend([j] * sub.shape[1])
    return Dictionary(
        atoms=np.hstack(blocks), labels=np.asarray(labels), bins=len(mats) - 1
    )


class PatchDictionaryLearner(BaseEstimator, TransformerMixin):
    """Class-wise K-SVD dictionary learning over vectorized patches.

    Rows of the input are patches of a ``window`` x ``window`` image
    block, in row-major pixel order.  ``fit`` labels every patch by its
    dominant gradient orientation, trains one K-SVD sub-dictionary per
    label, and concatenates them; ``transform`` sparse-codes patches
    against the learned dictionary with OMP.

    Parameters
    ----------
    window : patch side length
    bins : number of orientation bins L (labels run 0 .. L)
    threshold : dominance threshold for labeling
    atoms : atoms per class sub-dictionary
    sparsity : OMP sparsity target
    iterations : K-SVD sweeps
    seed : RNG seed for dictionary initialization

    Attributes
    ----------
    dictionary_ : the learned :class:`Dictionary`
    components_ : (n_atoms, window^2) atom rows, scikit-learn layout
    atom_labels_ : class label per atom
    class_counts_ : patches per class seen during fit
    """

    def __init__(
        self,
        window=8,
        bins=6,
        threshold=0.3,
        atoms=128,
        sparsity=6,
        iterations=30,
        seed=0,
    ):
        self.window = window
        self.bins = bins
        self.threshold = threshold
        self.atoms = atoms
        self.sparsity = sparsity
        self.iterations = iterations
        self.seed = seed

    def _patch_columns(self, x):
        x = check_array(x, dtype=np.float64)
        if x.shape[1] != int(self.window) ** 2:
            raise ValueError(
                "expected %d features per patch, got %d"
                % (int(self.window) ** 2, x.shape[1])
            )
        return x.T

    def fit(self, X, y=None):
        data = self._patch_columns(X)
        labels = column_labels(data, self.window, self.bins, self.threshold)
        classes = [data[:, labels == j] for j in range(int(self.bins) + 1)]
        params = KsvdParams(
            atoms=self.atoms,
            sparsity=self.sparsity,
            iterations=self.iterations,
            seed=self.seed,
        )
        dictionary = build_global_dictionary(classes, params)
        self.dictionary_ = dictionary
        self.components_ = dictionary.atoms.T
        self.atom_labels_ = dictionary.labels
        self.class_counts_ = np.bincount(labels, minlength=int(self.bins) + 1)
        return self

    def transform(self, X):
        check_is_fitted(self, "dictionary_")
        data = self._patch_columns(X)
        return omp_all(self.dictionary_, data, self.sparsity).T
