"""Lattice Hamiltonians and synthetic matrix/vector test instances.

Spin chains are built in the computational (Z) basis; the fermionic chain
is built directly on occupation bitstrings restricted to a particle-number
sector, with the canonical antisymmetric sign convention (equivalent to a
Jordan-Wigner encoding with orbitals ordered site-major, up before down,
the periodic bond carrying the full parity string).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import BadSector, InvalidInput, TooLarge, UnknownSynthetic
from .linalg import DefinitePair, HermitianMatrix, hermitian_eig

__all__ = [
    "ModelSpec",
    "tfim_hamiltonian",
    "tfim_initial_state",
    "hubbard_hamiltonian",
    "hubbard_initial_state",
    "hubbard_sector_basis",
    "synthetic_pair",
    "model_system",
    "SYNTHETIC_NAMES",
]

TFIM_MAX_SITES = 14
HUBBARD_MAX_SITES = 6


@dataclass(frozen=True)
class ModelSpec:
    """Which physical system (or synthetic instance) an experiment runs on."""

    kind: str  # "tfim" | "hubbard" | a synthetic-instance name
    L: int = 0
    g: float = 0.0
    U: float = 0.0
    Ne: int = 0
    seed: int = 0

    def validate(self) -> None:
        if self.kind in ("tfim", "hubbard") and self.L < 2:
            raise InvalidInput(f"lattice models need L >= 2, got L={self.L}")
        if self.kind == "hubbard" and not 0 <= self.Ne <= 2 * self.L:
            raise BadSector(f"Ne={self.Ne} outside 0..{2 * self.L}")


def tfim_hamiltonian(L: int, g: float) -> HermitianMatrix:
    """Transverse-field Ising chain, periodic, dimension 2^L.

    H = -sum_i Z_i Z_{i+1} - g sum_i X_i with the wrap bond (L, 1) included.
    Real symmetric in the computational basis.
    """
    if not 2 <= L <= TFIM_MAX_SITES:
        raise TooLarge(f"tfim supports 2 <= L <= {TFIM_MAX_SITES}, got {L}")
    dim = 1 << L
    states = np.arange(dim)
    bits = (states[:, None] >> np.arange(L)[None, :]) & 1
    z = 1 - 2 * bits  # bit 0 -> spin up -> Z eigenvalue +1
    zz = np.sum(z * np.roll(z, -1, axis=1), axis=1)
    h = np.zeros((dim, dim))
    h[states, states] = -zz
    for i in range(L):
        h[states, states ^ (1 << i)] += -g
    return HermitianMatrix(h)


def tfim_initial_state(L: int, kind: str = "symmetric") -> np.ndarray:
    """A zero-field eigenstate of the Ising chain, as a unit vector.

    ``"up"``/``"down"`` give the two ferromagnetic product states;
    ``"symmetric"`` (default) their even combination, which is the
    zero-field limit of the ground state for weak positive coupling and is
    the choice that reproduces the reference initial overlap at L=10.
    """
    dim = 1 << L
    phi = np.zeros(dim, dtype=complex)
    if kind == "up":
        phi[0] = 1.0
    elif kind == "down":
        phi[-1] = 1.0
    elif kind == "symmetric":
        phi[0] = phi[-1] = 1.0 / np.sqrt(2.0)
    else:
        raise InvalidInput(f"unknown initial-state kind {kind!r}")
    return phi


def _orbital(site: int, spin: int) -> int:
    # site-major ordering: (site0 up, site0 down, site1 up, ...)
    return 2 * site + spin


def _parity(state: int, orbital: int) -> float:
    # sign picked up moving an operator past the occupied lower orbitals
    return -1.0 if bin(state & ((1 << orbital) - 1)).count("1") % 2 else 1.0


def hubbard_sector_basis(L: int, Ne: int, n_up: int | None = None) -> list[int]:
    """Occupation bitmasks with Ne particles (optionally n_up of them up),
    ascending."""
    n_orb = 2 * L
    if not 0 <= Ne <= n_orb:
        raise BadSector(f"Ne={Ne} outside 0..{n_orb}")
    if n_up is not None and not (0 <= n_up <= min(Ne, L) and Ne - n_up <= L):
        raise BadSector(f"n_up={n_up} incompatible with Ne={Ne}, L={L}")
    states = []
    for occ in combinations(range(n_orb), Ne):
        b = sum(1 << p for p in occ)
        if n_up is not None:
            ups = sum(1 for p in occ if p % 2 == 0)
            if ups != n_up:
                continue
        states.append(b)
    return sorted(states)


def hubbard_hamiltonian(
    L: int, U: float, Ne: int, n_up: int | None = None
) -> HermitianMatrix:
    """Single-band fermionic ring restricted to a particle-number sector.

    Hopping -sum_{i,sigma} (adag_{i,sigma} a_{i+1,sigma} + h.c.) with the
    periodic wrap, plus on-site interaction U sum_i n_{i,up} n_{i,down}.
    The printed single-direction hopping sum is Hermitized; the conjugate
    terms are required for L >= 3.
    """
    if not 2 <= L <= HUBBARD_MAX_SITES:
        raise TooLarge(f"hubbard supports 2 <= L <= {HUBBARD_MAX_SITES}, got {L}")
    states = hubbard_sector_basis(L, Ne, n_up)
    index = {b: i for i, b in enumerate(states)}
    d = len(states)
    h = np.zeros((d, d))
    for b in states:
        col = index[b]
        docc = sum(
            1
            for s in range(L)
            if (b >> _orbital(s, 0)) & 1 and (b >> _orbital(s, 1)) & 1
        )
        h[col, col] += U * docc
        for i in range(L):
            j = (i + 1) % L
            for spin in (0, 1):
                p, q = _orbital(i, spin), _orbital(j, spin)
                # adag_p a_q and adag_q a_p
                for dst, src in ((p, q), (q, p)):
                    if (b >> src) & 1 and not (b >> dst) & 1:
                        sign = _parity(b, src)
                        b1 = b & ~(1 << src)
                        sign *= _parity(b1, dst)
                        h[index[b1 | (1 << dst)], col] += -sign
    return HermitianMatrix(h)


def hubbard_initial_state(L: int, Ne: int, n_up: int | None = None) -> np.ndarray:
    """Ground vector of the non-interacting sector Hamiltonian (U = 0).

    Deterministic under the package eigensolver conventions; among exactly
    degenerate ground vectors the lowest-index column is taken.
    """
    es = hermitian_eig(hubbard_hamiltonian(L, 0.0, Ne, n_up))
    return es.vectors[:, 0].copy()


def model_system(spec: ModelSpec) -> tuple[HermitianMatrix, np.ndarray]:
    """Operator and initial vector for a lattice ModelSpec."""
    spec.validate()
    if spec.kind == "tfim":
        return tfim_hamiltonian(spec.L, spec.g), tfim_initial_state(spec.L)
    if spec.kind == "hubbard":
        return (
            hubbard_hamiltonian(spec.L, spec.U, spec.Ne),
            hubbard_initial_state(spec.L, spec.Ne),
        )
    raise InvalidInput(f"model kind {spec.kind!r} is not a lattice model")


# ---------------------------------------------------------------------------
# synthetic instances
# ---------------------------------------------------------------------------

SYNTHETIC_NAMES = (
    "wilkinson",
    "bad_threshold",
    "reorder",
    "sm_H1",
    "sm_H2",
    "sm_xi1",
    "sm_xi2",
    "sm_xi3",
    "sm_xi4",
    "sm_tightness",
    "sm_thresh_only",
)


def _wilkinson(eps: float = 1e-3) -> DefinitePair:
    return DefinitePair(
        h=HermitianMatrix(np.diag([2.0, eps])),
        s=HermitianMatrix(np.diag([1.0, eps])),
        provenance="synthetic",
    )


def _bad_threshold(eps: float = 1e-2) -> DefinitePair:
    return DefinitePair(
        h=HermitianMatrix([[1.0, eps], [eps, eps**2]]),
        s=HermitianMatrix(np.diag([1.0, eps**2])),
        provenance="synthetic",
    )


def _reorder(eta: float = 1e-2) -> dict:
    """2x2 pair where a tiny mass-matrix perturbation swaps the eigenvector
    order; the damage is undone by a congruence (a permutation)."""
    h = HermitianMatrix(np.diag([20.0, 1.0]))
    s = HermitianMatrix(np.diag([1.0, 1.0 - eta / 2]))
    s_noisy = HermitianMatrix(np.diag([1.0, 1.0 + eta / 2]))
    return {"h": h, "s": s, "h_noisy": h, "s_noisy": s_noisy, "eta": eta}


def _graded_diag(extra: float | None) -> HermitianMatrix:
    # 1, then 998 values from 2 to 2.1, optionally one far outlier
    vals = [1.0] + [2.0 + j * 0.1 / 997 for j in range(998)]
    if extra is not None:
        vals.append(extra)
    return HermitianMatrix(np.diag(vals))


def _xi_vector(which: int) -> np.ndarray:
    if which == 1:
        v = np.full(999, np.sqrt(1e-4 / 998))
        v[0] = np.sqrt(1.0 - 1e-4)
    elif which == 2:
        v = np.full(999, np.sqrt(0.5 / 998))
        v[0] = np.sqrt(0.5)
    elif which == 3:
        v = np.full(1000, np.sqrt(1e-4 / 998))
        v[0] = np.sqrt(1.0 - 1e-4 - 1e-8)
        v[-1] = 1e-4
    elif which == 4:
        v = 0.01 / np.arange(1.0, 1001.0)
        v[0] = 1.0
        v /= np.linalg.norm(v)
    else:  # pragma: no cover
        raise UnknownSynthetic(f"xi{which}")
    return v.astype(complex)


def _tightness(seed: int = 0) -> dict:
    """5x5 instance whose truncated-projection error genuinely scales like
    noise / sqrt(epsilon): S sharply graded, H = S^{1/2} A S^{1/2} for a
    random symmetric A, mass-matrix noise at 1e-12."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((5, 5))
    a = (g + g.T) / 2
    s_diag = np.array([1.0, 0.1, 3e-10, 2e-10, 1e-10])
    s = np.diag(s_diag)
    root = np.diag(np.sqrt(s_diag))
    h = root @ a @ root
    gamma = rng.standard_normal((5, 5))
    delta_s = 1e-12 * (gamma + gamma.T) / 2
    return {
        "h": HermitianMatrix(h),
        "s": HermitianMatrix(s),
        "a": HermitianMatrix(a),
        "delta_s": HermitianMatrix(delta_s),
        "epsilon": 1.5e-10,
        # geometric-mean constant at exponent 1/2 for this construction
        "mu": float(np.linalg.eigvalsh(a)[-1]),
    }


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diagonal(r))[None, :]


def _thresh_only(seed: int = 0, cond: float = 1e3, n: int = 100) -> DefinitePair:
    """Graded ill-conditioned pair for the truncation-only error sweep:
    H = K* diag(1..n) K, S = K* K with K a j^{-2}-graded random matrix of
    prescribed condition number."""
    rng = np.random.default_rng(seed)
    u = _haar_orthogonal(n, rng)
    v = _haar_orthogonal(n, rng)
    sv = cond ** (-np.arange(n) / (n - 1))  # geometric from 1 down to 1/cond
    randsvd = (u * sv[None, :]) @ v.T
    k = np.diag(1.0 / np.arange(1.0, n + 1.0) ** 2) @ randsvd
    d = np.diag(np.arange(1.0, n + 1.0))
    return DefinitePair(
        h=HermitianMatrix(k.T @ d @ k),
        s=HermitianMatrix(k.T @ k),
        provenance="synthetic",
    )


def synthetic_pair(name: str, **params):
    """Build a named synthetic instance.

    Returns a DefinitePair (``wilkinson``, ``bad_threshold``,
    ``sm_thresh_only``), a HermitianMatrix (``sm_H1``, ``sm_H2``), a unit
    vector (``sm_xi1`` .. ``sm_xi4``), or a dict bundle (``reorder``,
    ``sm_tightness``).  Stochastic instances consume an explicit ``seed``.
    """
    builders = {
        "wilkinson": _wilkinson,
        "bad_threshold": _bad_threshold,
        "reorder": _reorder,
        "sm_H1": lambda: _graded_diag(None),
        "sm_H2": lambda: _graded_diag(1000.0),
        "sm_xi1": lambda: _xi_vector(1),
        "sm_xi2": lambda: _xi_vector(2),
        "sm_xi3": lambda: _xi_vector(3),
        "sm_xi4": lambda: _xi_vector(4),
        "sm_tightness": _tightness,
        "sm_thresh_only": _thresh_only,
    }
    try:
        builder = builders[name]
    except KeyError:
        raise UnknownSynthetic(
            f"unknown synthetic instance {name!r}; known: {', '.join(SYNTHETIC_NAMES)}"
        ) from None
    return builder(**params)
