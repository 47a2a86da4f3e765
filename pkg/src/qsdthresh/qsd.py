"""Unitary-Krylov subspace construction and the projected matrix pair.

Time evolution is exact: the operator is diagonalized once and reused for
every time point, so the projected pair carries no discretization error and
is Hermitian-Toeplitz up to rounding for equispaced grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotToeplitz, ShapeError
from .linalg import (
    DefinitePair,
    EigenSystem,
    HermitianMatrix,
    as_hermitian,
    hermitian_eig,
    spectral_norm,
    toeplitz_hermitian,
)
from .models import ModelSpec, model_system
from .thresholding import threshold_solve

__all__ = [
    "TimeGrid",
    "QsdInstance",
    "krylov_matrix",
    "projected_pair",
    "overlaps",
    "build_qsd_instance",
    "noiseless_qsd_energy",
    "TINY_THRESHOLD_FACTOR",
]

# default truncation level for "noiseless" runs, relative to ||S||
TINY_THRESHOLD_FACTOR = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Evolution times for the Krylov basis.

    ``forward``: t_j = j*dt for j = 0..n-1.  ``symmetric``: t_j = pi*j/dw
    for j = -k..k, where ``dw`` is the spectral width parameter the
    symmetric construction is tuned to.
    """

    kind: str
    times: np.ndarray

    @classmethod
    def forward(cls, n: int, dt: float) -> "TimeGrid":
        if n < 1 or dt <= 0.0:
            raise InvalidInput(f"forward grid needs n >= 1 and dt > 0, got {n}, {dt}")
        return cls(kind="forward", times=dt * np.arange(n, dtype=float))

    @classmethod
    def symmetric(cls, k: int, delta_em: float) -> "TimeGrid":
        if k < 0 or delta_em <= 0.0:
            raise InvalidInput(
                f"symmetric grid needs k >= 0 and delta_em > 0, got {k}, {delta_em}"
            )
        j = np.arange(-k, k + 1, dtype=float)
        return cls(kind="symmetric", times=np.pi * j / delta_em)

    @property
    def n_points(self) -> int:
        return self.times.size

    def is_equispaced(self, rtol: float = 1e-12) -> bool:
        if self.times.size < 3:
            return True
        d = np.diff(self.times)
        scale = np.abs(d).max()
        return bool(np.all(np.abs(d - d[0]) <= rtol * max(scale, 1.0)))


def _check_state(h_op: HermitianMatrix, phi0) -> np.ndarray:
    phi = np.asarray(phi0, dtype=complex)
    if phi.ndim != 1 or phi.size != h_op.dim:
        raise ShapeError(
            f"state has shape {phi.shape}, operator dimension is {h_op.dim}"
        )
    nrm = np.linalg.norm(phi)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-10:
        raise InvalidInput(f"initial state must be unit norm, got ||phi|| = {nrm}")
    return phi


def krylov_matrix(h_op, phi0, grid: TimeGrid, eig: EigenSystem | None = None) -> np.ndarray:
    """Matrix whose column j is exp(i t_j H) phi0 (exact evolution).

    Pass a precomputed ``eig`` of the operator to amortize the
    diagonalization over many grids.
    """
    hm = as_hermitian(h_op)
    phi = _check_state(hm, phi0)
    es = hermitian_eig(hm) if eig is None else eig
    w = es.vectors.conj().T @ phi
    phases = np.exp(1j * np.outer(es.values, grid.times))
    return es.vectors @ (w[:, None] * phases)


def projected_pair(
    h_op, k_matrix: np.ndarray, mode: str = "direct", grid: TimeGrid | None = None
) -> DefinitePair:
    """Projected pair (H, S) = (K* H_op K, K* K) of the Krylov basis.

    ``mode="direct"`` computes every entry; ``mode="toeplitz"`` computes
    only the first rows and imputes the rest from the Hermitian-Toeplitz
    structure (valid for equispaced grids; pass the grid so the spacing can
    be checked).
    """
    hm = as_hermitian(h_op)
    k = np.asarray(k_matrix, dtype=complex)
    if k.ndim != 2 or k.shape[0] != hm.dim:
        raise ShapeError(f"basis matrix has shape {k.shape}, operator dim {hm.dim}")
    hk = hm.mat @ k
    if mode == "direct":
        h = HermitianMatrix(k.conj().T @ hk)
        s = HermitianMatrix(k.conj().T @ k)
        return DefinitePair(h=h, s=s, provenance="exact")
    if mode == "toeplitz":
        if grid is not None and not grid.is_equispaced():
            raise NotToeplitz("toeplitz imputation requires an equispaced grid")
        row_h = k[:, 0].conj() @ hk
        row_s = k[:, 0].conj() @ k
        return DefinitePair(
            h=toeplitz_hermitian(row_h),
            s=toeplitz_hermitian(row_s),
            provenance="exact",
            first_row_h=row_h,
            first_row_s=row_s,
        )
    raise InvalidInput(f"unknown mode {mode!r}")


def overlaps(h_op, phi0, eig: EigenSystem | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Spectrum of the operator and the expansion of phi0 over its eigenbasis.

    Returns (energies ascending, gamma) with gamma_i the i-th eigenvector's
    inner product with phi0 under the package phase convention;
    sum |gamma_i|^2 = 1.
    """
    hm = as_hermitian(h_op)
    phi = _check_state(hm, phi0)
    es = hermitian_eig(hm) if eig is None else eig
    return es.values, es.vectors.conj().T @ phi


@dataclass(frozen=True)
class QsdInstance:
    """One fully assembled subspace problem: operator, state, grid, basis,
    projected pair, and the spectral overlap data."""

    h_op: HermitianMatrix
    phi0: np.ndarray
    grid: TimeGrid
    eig: EigenSystem
    k_matrix: np.ndarray
    pair: DefinitePair
    energies: np.ndarray
    gammas: np.ndarray


def build_qsd_instance(h_op, phi0, grid: TimeGrid, mode: str = "direct") -> QsdInstance:
    """Diagonalize once, evolve exactly, project; all caches filled."""
    hm = as_hermitian(h_op)
    phi = _check_state(hm, phi0)
    es = hermitian_eig(hm)
    k = krylov_matrix(hm, phi, grid, eig=es)
    pair = projected_pair(hm, k, mode=mode, grid=grid)
    energies, gammas = overlaps(hm, phi, eig=es)
    return QsdInstance(
        h_op=hm,
        phi0=phi,
        grid=grid,
        eig=es,
        k_matrix=k,
        pair=pair,
        energies=energies,
        gammas=gammas,
    )


def noiseless_qsd_energy(
    model: ModelSpec, grid: TimeGrid, epsilon: float | None = None
) -> float:
    """Ground-energy estimate of the exact (noise-free) projected pair.

    ``epsilon`` defaults to ``1e-12 * ||S||``, the tiny truncation used for
    reference values.
    """
    h_op, phi0 = model_system(model)
    inst = build_qsd_instance(h_op, phi0, grid)
    if epsilon is None:
        epsilon = TINY_THRESHOLD_FACTOR * spectral_norm(inst.pair.s)
    return threshold_solve(inst.pair.h, inst.pair.s, epsilon).e0
