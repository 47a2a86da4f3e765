"""Dense Hermitian and Hermitian-definite eigendecompositions.

Everything downstream (truncation solvers, lattice models, bound
calculators) goes through this module instead of touching the LAPACK
backend directly, so the phase and ordering conventions are fixed in
exactly one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotDefinite, SingularConjugation

__all__ = [
    "HermitianMatrix",
    "EigenSystem",
    "GenEigSolution",
    "DefinitePair",
    "as_hermitian",
    "hermitian_eig",
    "gen_eig_definite",
    "conjugate_pair",
    "spectral_norm",
    "frobenius_norm",
    "toeplitz_hermitian",
]

# Relative floor on eigenvalues of the mass matrix below which the
# definite reduction is refused.
PD_TOL_FACTOR = 1e-14


def _hermitize(a: np.ndarray) -> np.ndarray:
    # (a + a*)/2 is exactly conjugate-symmetric in IEEE arithmetic; the
    # diagonal is rewritten to kill signed-zero imaginary parts.
    h = (a + a.conj().T) / 2
    np.fill_diagonal(h, h.diagonal().real)
    return h


class HermitianMatrix:
    """Square complex matrix with Hermitian symmetry enforced at write time.

    ``entries[j, k] == conj(entries[k, j])`` holds exactly (not just to
    rounding) because construction symmetrizes; the stored array is
    read-only afterwards.
    """

    __slots__ = ("_mat",)

    def __init__(self, entries):
        a = np.asarray(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise InvalidInput("matrix has non-finite entries")
        h = _hermitize(a)
        h.setflags(write=False)
        self._mat = h

    @property
    def mat(self) -> np.ndarray:
        """Read-only complex ndarray view of the entries."""
        return self._mat

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._mat.astype(dtype)
        if copy:
            return self._mat.copy()
        return self._mat

    def __repr__(self) -> str:  # pragma: no cover
        return f"HermitianMatrix(dim={self.dim})"


def as_hermitian(m) -> HermitianMatrix:
    """Coerce an array-like into a HermitianMatrix (no-op if it already is)."""
    if isinstance(m, HermitianMatrix):
        return m
    return HermitianMatrix(m)


@dataclass(frozen=True)
class DefinitePair:
    """An ordered pair (H, S) of Hermitian matrices of equal dimension.

    ``first_row_h``/``first_row_s`` are set when the pair is known to be
    Hermitian-Toeplitz (entries depend only on index differences), in which
    case they are the defining first rows.  ``provenance`` is one of
    ``"exact"``, ``"noisy"``, ``"synthetic"``.
    """

    h: HermitianMatrix
    s: HermitianMatrix
    provenance: str = "synthetic"
    first_row_h: np.ndarray | None = None
    first_row_s: np.ndarray | None = None

    def __post_init__(self):
        if self.h.dim != self.s.dim:
            raise InvalidInput(
                f"pair dimensions differ: {self.h.dim} vs {self.s.dim}"
            )

    @property
    def dim(self) -> int:
        return self.h.dim

    @property
    def is_toeplitz(self) -> bool:
        return self.first_row_h is not None and self.first_row_s is not None


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition of a Hermitian matrix.

    ``values`` ascending; column k of ``vectors`` is the unit eigenvector of
    ``values[k]`` with the first non-negligible component made real positive.
    """

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class GenEigSolution:
    """Solution of H c = E S c for a Hermitian pair with S positive definite.

    ``values`` ascending, ``vectors`` columns S-normalized (c* S c = 1),
    ``angles`` the eigenangles arctan(E), and ``cond_d`` the per-eigenvalue
    quantities d_j = |x_j*(H + iS) x_j| for Euclidean-unit x_j; 1/d_j is the
    condition number of the eigenangle.
    """

    values: np.ndarray
    vectors: np.ndarray
    angles: np.ndarray
    cond_d: np.ndarray


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    v = np.array(vectors, dtype=complex)
    mags = np.abs(v)
    big = mags.max(axis=0)
    big[big == 0.0] = 1.0
    # first row index per column with magnitude above 1e-12 of the column max
    pivot_rows = np.argmax(mags > 1e-12 * big[None, :], axis=0)
    pivots = v[pivot_rows, np.arange(v.shape[1])]
    scale = np.abs(pivots)
    scale[scale == 0.0] = 1.0
    phases = np.where(pivots == 0.0, 1.0, pivots / scale)
    v *= np.conj(phases)[None, :]
    return v


def hermitian_eig(m) -> EigenSystem:
    """Full eigendecomposition of a Hermitian matrix, deterministic output.

    Ascending eigenvalues; orthonormal eigenvectors with the fixed phase
    convention, so identical inputs give identical outputs.
    """
    hm = as_hermitian(m)
    vals, vecs = np.linalg.eigh(hm.mat)
    return EigenSystem(values=vals, vectors=_fix_phases(vecs))


def gen_eig_definite(h, s, *, tol_pd: float | None = None) -> GenEigSolution:
    """Solve H c = E S c for Hermitian H and positive definite S.

    Reduction without Cholesky: with S = V diag(lam) V*, the eigenvalues of
    the pair are those of diag(lam)^{-1/2} V* H V diag(lam)^{-1/2}, and the
    back-transformed eigenvectors come out S-normalized.

    Raises NotDefinite when the smallest eigenvalue of S is at most
    ``tol_pd`` (default ``1e-14 * ||S||``).
    """
    hm, sm = as_hermitian(h), as_hermitian(s)
    if hm.dim != sm.dim:
        raise InvalidInput(f"pair dimensions differ: {hm.dim} vs {sm.dim}")
    es = hermitian_eig(sm)
    lam = es.values
    norm_s = float(np.abs(lam).max())
    tol = PD_TOL_FACTOR * norm_s if tol_pd is None else tol_pd
    if lam[0] <= tol:
        raise NotDefinite(
            f"mass matrix not positive definite: lambda_min={lam[0]:.3e}, tol={tol:.3e}"
        )
    half = es.vectors / np.sqrt(lam)[None, :]  # V lam^{-1/2}
    reduced = _hermitize(half.conj().T @ hm.mat @ half)
    vals, y = np.linalg.eigh(reduced)
    vecs = _fix_phases(half @ y)
    # d_j evaluated with Euclidean-unit rescaling of the S-normalized vectors
    unit = vecs / np.linalg.norm(vecs, axis=0)[None, :]
    quad_h = np.einsum("ji,jk,ki->i", unit.conj(), hm.mat, unit).real
    quad_s = np.einsum("ji,jk,ki->i", unit.conj(), sm.mat, unit).real
    cond_d = np.hypot(quad_h, quad_s)
    return GenEigSolution(
        values=vals, vectors=vecs, angles=np.arctan(vals), cond_d=cond_d
    )


def conjugate_pair(a, b, w) -> tuple[HermitianMatrix, HermitianMatrix]:
    """Congruence transform (A, B) -> (W* A W, W* B W) for nonsingular W.

    Generalized eigenvalues are preserved.  Raises SingularConjugation when
    the smallest singular value of W is at most ``1e-12 * ||W||``.
    """
    am, bm = as_hermitian(a), as_hermitian(b)
    wm = np.asarray(w, dtype=complex)
    if wm.ndim != 2 or wm.shape[0] != wm.shape[1] or wm.shape[0] != am.dim:
        raise InvalidInput(f"conjugation matrix has shape {wm.shape}")
    sv = np.linalg.svd(wm, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise SingularConjugation(
            f"smallest singular value {sv[-1]:.3e} below 1e-12 * ||W||"
        )
    return (
        HermitianMatrix(wm.conj().T @ am.mat @ wm),
        HermitianMatrix(wm.conj().T @ bm.mat @ wm),
    )


def spectral_norm(m) -> float:
    """Largest singular value; computed via |eigenvalues| for Hermitian input."""
    if isinstance(m, HermitianMatrix):
        return float(np.abs(np.linalg.eigvalsh(m.mat)).max())
    a = np.asarray(m)
    if a.ndim == 1:
        return float(np.linalg.norm(a))
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.conj().T):
        return float(np.abs(np.linalg.eigvalsh(a)).max())
    return float(np.linalg.norm(a, 2))


def frobenius_norm(m) -> float:
    """sqrt(trace(M* M))."""
    a = m.mat if isinstance(m, HermitianMatrix) else np.asarray(m)
    return float(np.linalg.norm(a))


def toeplitz_hermitian(first_row) -> HermitianMatrix:
    """Hermitian-Toeplitz matrix from its first row (lag-0 entry made real)."""
    r = np.asarray(first_row, dtype=complex)
    if r.ndim != 1 or r.size < 1:
        raise InvalidInput(f"first row must be a nonempty vector, got shape {r.shape}")
    n = r.size
    lag = np.arange(n)[None, :] - np.arange(n)[:, None]
    vals = r[np.abs(lag)]
    return HermitianMatrix(np.where(lag >= 0, vals, np.conj(vals)))
