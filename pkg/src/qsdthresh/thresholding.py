"""Spectral truncation solvers for noisy or nearly singular Hermitian pairs.

The core routine discards every eigendirection of the overlap matrix S with
eigenvalue at most a level epsilon before solving the reduced generalized
eigenproblem.  An automatically tuned variant walks the level downward until
the recovered eigenvalue jumps, and eigenvector-quality heuristics are
provided as baselines for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyThreshold, InvalidInput, NotDefinite
from .linalg import (
    DefinitePair,
    GenEigSolution,
    HermitianMatrix,
    as_hermitian,
    gen_eig_definite,
    hermitian_eig,
)

__all__ = [
    "ThresholdReport",
    "AutoThresholdTrace",
    "HeuristicScore",
    "threshold_solve",
    "auto_threshold_solve",
    "heuristic_scores",
    "heuristic_select",
]


@dataclass(frozen=True)
class ThresholdReport:
    """Outcome of one truncated solve.

    ``kept_vals``/``discarded_vals`` partition the eigenvalues of S by the
    strict test ``lam > epsilon`` (both ascending).  ``epsilon_total`` is the
    raw sum of the discarded eigenvalues, negative values included; the
    clipped variant used inside error bounds is ``epsilon_total_clipped``.
    ``basis`` holds the kept eigenvectors of S (columns), ``reduced_pair``
    the projected pair (A, B) = (V*HV, V*SV), ``solution`` its full
    generalized eigensolution, ``e0 = min(e_all)`` the recovered value.
    """

    epsilon: float
    kept_dim: int
    kept_vals: np.ndarray
    discarded_vals: np.ndarray
    epsilon_total: float
    reduced_pair: DefinitePair
    e0: float
    e_all: np.ndarray
    basis: np.ndarray
    solution: GenEigSolution

    @property
    def epsilon_total_clipped(self) -> float:
        """max(sum of discarded eigenvalues, 0); the scalar bounds consume."""
        return max(self.epsilon_total, 0.0)


@dataclass(frozen=True)
class HeuristicScore:
    """Quality scores of one candidate eigenpair of a barely truncated solve.

    ``h1`` is the overlap-weighted squared norm c*Sc of the unit-norm
    full-space coefficient vector; ``h2`` the magnitude of the first row of
    S applied to it (a surrogate for the overlap with the initial state).
    """

    energy: float
    h1: float
    h2: float


@dataclass(frozen=True)
class AutoThresholdTrace:
    """Visited (epsilon, energy) pairs of the auto-tuned downward walk.

    ``steps`` includes the point that triggered a jump, if any; ``final``
    is the last accepted pair (the value before the jump).  ``stop_reason``
    is ``"exhausted"`` or ``"jump"``.
    """

    steps: tuple[tuple[float, float], ...]
    final_epsilon: float
    final_energy: float
    stop_reason: str


def threshold_solve(h, s, epsilon: float) -> ThresholdReport:
    """Truncated solve of H c = E S c at truncation level ``epsilon``.

    Eigendirections of S with eigenvalue > epsilon are kept; the reduced
    pair (V*HV, V*SV) is solved as a Hermitian-definite problem and the
    smallest reduced eigenvalue is reported as ``e0``.

    Raises EmptyThreshold when nothing survives, NotDefinite when the
    reduced mass matrix is not positive definite (possible for noisy input
    with epsilon below the noise floor).
    """
    hm, sm = as_hermitian(h), as_hermitian(s)
    if hm.dim != sm.dim:
        raise InvalidInput(f"pair dimensions differ: {hm.dim} vs {sm.dim}")
    es = hermitian_eig(sm)
    keep = es.values > epsilon
    if not keep.any():
        raise EmptyThreshold(
            f"no eigenvalue of S exceeds epsilon={epsilon:.3e}"
        )
    basis = es.vectors[:, keep]
    a = HermitianMatrix(basis.conj().T @ hm.mat @ basis)
    b = HermitianMatrix(basis.conj().T @ sm.mat @ basis)
    solution = gen_eig_definite(a, b)
    discarded = es.values[~keep]
    return ThresholdReport(
        epsilon=float(epsilon),
        kept_dim=int(keep.sum()),
        kept_vals=es.values[keep],
        discarded_vals=discarded,
        epsilon_total=float(discarded.sum()),
        reduced_pair=DefinitePair(h=a, s=b, provenance="synthetic"),
        e0=float(solution.values[0]),
        e_all=solution.values,
        basis=basis,
        solution=solution,
    )


def _is_jump(e_old: float, e_new: float, r: float) -> bool:
    denom = min(abs(e_old), abs(e_new))
    if denom == 0.0:
        # an exact zero counts as a jump unless both values are zero
        return e_old != e_new
    return abs(e_old - e_new) / denom > r


def auto_threshold_solve(h, s, epsilon0: float, r: float) -> AutoThresholdTrace:
    """Downward walk over truncation levels with a relative-jump stopping rule.

    Starting from a conservative level ``epsilon0``, each distinct eigenvalue
    of S below the current level becomes the next level (so everything
    strictly above it is kept).  The walk stops at the first step where the
    recovered value changes by a relative factor exceeding ``r``, and the
    last pre-jump value is the result.
    """
    if epsilon0 <= 0.0 or r <= 0.0:
        raise InvalidInput("epsilon0 and r must be positive")
    first = threshold_solve(h, s, epsilon0)
    energy = first.e0
    # distinct levels below epsilon0, walked largest-to-smallest; exact
    # duplicates collapse so the trace is strictly decreasing in epsilon
    lam = hermitian_eig(as_hermitian(s)).values
    pending = np.unique(lam[lam < epsilon0])[::-1]
    steps = [(float(epsilon0), energy)]
    final_eps, final_energy = float(epsilon0), energy
    stop_reason = "exhausted"
    for eps in pending:
        try:
            candidate = threshold_solve(h, s, float(eps)).e0
        except NotDefinite:
            # reduced pair lost definiteness below the noise floor: treat as
            # a jump off the cliff and keep the last accepted value
            stop_reason = "jump"
            break
        steps.append((float(eps), candidate))
        if _is_jump(energy, candidate, r):
            stop_reason = "jump"
            break
        energy = candidate
        final_eps, final_energy = float(eps), candidate
    return AutoThresholdTrace(
        steps=tuple(steps),
        final_epsilon=final_eps,
        final_energy=final_energy,
        stop_reason=stop_reason,
    )


def heuristic_scores(h, s, tiny_epsilon: float) -> list[HeuristicScore]:
    """Score every eigenpair of a barely truncated solve of (H, S).

    Each reduced eigenvector is lifted back to the full space through the
    truncation basis and normalized to unit Euclidean norm; the scores are
    h1 = c*Sc (real) and h2 = |e_0* S c|.  Ascending in energy.
    """
    sm = as_hermitian(s)
    report = threshold_solve(h, sm, tiny_epsilon)
    lifted = report.basis @ report.solution.vectors
    lifted /= np.linalg.norm(lifted, axis=0)[None, :]
    h1 = np.einsum("ji,jk,ki->i", lifted.conj(), sm.mat, lifted).real
    h2 = np.abs(sm.mat[0, :] @ lifted)
    return [
        HeuristicScore(energy=float(e), h1=float(a), h2=float(b))
        for e, a, b in zip(report.e_all, h1, h2)
    ]


def heuristic_select(
    scores: list[HeuristicScore],
    strategy: str,
    k: int = 5,
    h0: float | None = None,
    metric: str = "h1",
) -> float:
    """Pick a candidate energy from heuristic scores.

    Strategies: ``"a"`` the energy with the largest score; ``"b"`` the
    smallest energy among the top-k scores; ``"c"`` the smallest energy with
    score above ``h0``, falling back to the largest score when none exceeds
    it.
    """
    if not scores:
        raise InvalidInput("scores must be nonempty")
    if metric not in ("h1", "h2"):
        raise InvalidInput(f"unknown metric {metric!r}")
    values = np.array([getattr(sc, metric) for sc in scores])
    energies = np.array([sc.energy for sc in scores])
    if strategy == "a":
        return float(energies[int(np.argmax(values))])
    if strategy == "b":
        if k < 1:
            raise InvalidInput("k must be at least 1 for strategy b")
        top = np.argsort(-values, kind="stable")[: min(k, len(scores))]
        return float(energies[top].min())
    if strategy == "c":
        if h0 is None or h0 <= 0.0:
            raise InvalidInput("h0 must be positive for strategy c")
        above = values > h0
        if not above.any():
            return float(energies[int(np.argmax(values))])
        return float(energies[above].min())
    raise InvalidInput(f"unknown strategy {strategy!r}")
