"""Closed-form perturbation and convergence bounds for definite pairs.

Includes the Crawford number and the classical Stewart eigenangle bound,
the Mathias-Li interval brackets and their gap-condition corollary,
projection-error bounds for spectral truncation under noise, an end-to-end
recovery bound, the trigonometric minimax machinery behind the a-priori
convergence rate, a truncation-only error bound, a stability bound for
best low-rank approximation, and the empirical geometric-mean fit that
feeds the projection bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadAngle,
    BoundVacuous,
    ConditionTooPoor,
    EmptyThreshold,
    GapTooSmall,
    HypothesisViolated,
    InvalidInput,
    NotDefinitePair,
    OverlapTooSmall,
    SectorMismatch,
)
from .linalg import as_hermitian, gen_eig_definite, hermitian_eig, spectral_norm
from .thresholding import threshold_solve

__all__ = [
    "MathiasLiIntervals",
    "MainBoundReport",
    "AlphaFit",
    "crawford_number",
    "stewart_bound",
    "mathias_li_intervals",
    "mathias_li_gap_bound",
    "chi_h_bound",
    "chi_s_bound",
    "main_bound",
    "cheb_beta",
    "p_star",
    "a_priori_bound",
    "a_priori_bound_simplified",
    "thresholding_only_bound",
    "low_rank_stability_bound",
    "alpha_fit",
    "projection_error_direct",
]

ALPHA_GRID = (0.0, 0.125, 0.25, 0.375, 0.5)


# ---------------------------------------------------------------------------
# definiteness and classical eigenangle bounds
# ---------------------------------------------------------------------------

def _golden_max(f, lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def crawford_number(a, b, grid_points: int = 720) -> float:
    """min over unit x of |x*(A + iB)x| for a definite Hermitian pair.

    Evaluated as the maximum over directions theta of
    lambda_min(cos(theta) A + sin(theta) B) - an angular scan with
    golden-section refinement, accurate to about 1e-6 absolute.  Raises
    NotDefinitePair when the maximum is nonpositive.
    """
    am, bm = as_hermitian(a), as_hermitian(b)
    if am.dim != bm.dim:
        raise InvalidInput(f"pair dimensions differ: {am.dim} vs {bm.dim}")

    def g(theta: float) -> float:
        m = np.cos(theta) * am.mat + np.sin(theta) * bm.mat
        return float(np.linalg.eigvalsh(m)[0])

    thetas = np.linspace(0.0, 2.0 * np.pi, grid_points, endpoint=False)
    vals = np.array([g(t) for t in thetas])
    i = int(np.argmax(vals))
    step = 2.0 * np.pi / grid_points
    _, refined = _golden_max(g, thetas[i] - step, thetas[i] + step)
    best = max(float(vals[i]), refined)
    if best <= 0.0:
        raise NotDefinitePair(
            f"pair is not definite: max directional lambda_min = {best:.3e}"
        )
    return best


def stewart_bound(chi: float, crawford: float) -> float:
    """Uniform eigenangle perturbation bound asin(chi / crawford)."""
    if chi < 0.0 or crawford <= 0.0:
        raise InvalidInput("need chi >= 0 and crawford > 0")
    if chi > crawford:
        raise BoundVacuous(
            f"perturbation {chi:.3e} exceeds the Crawford number {crawford:.3e}"
        )
    return float(np.arcsin(chi / crawford))


# ---------------------------------------------------------------------------
# interval brackets for perturbed eigenangles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MathiasLiIntervals:
    """Per-eigenvalue eigenangle brackets and their sorted rearrangements.

    After any Hermitian perturbation of combined norm chi with
    q*chi <= epsilon <= lambda_min(B), the j-th perturbed eigenangle lies in
    [lower_sorted[j], upper_sorted[j]].
    """

    lower: np.ndarray
    upper: np.ndarray
    lower_sorted: np.ndarray
    upper_sorted: np.ndarray
    chi: float
    q: int


def mathias_li_intervals(a, b, chi: float, epsilon: float) -> MathiasLiIntervals:
    """Eigenangle brackets for a definite pair under perturbations of size chi.

    Requires every eigenvalue of B to be at least ``epsilon`` and
    q*chi <= epsilon (HypothesisViolated otherwise); the half-width of
    interval j is asin(q*chi/d_j), so q*chi must not exceed any d_j
    (ConditionTooPoor otherwise).
    """
    am, bm = as_hermitian(a), as_hermitian(b)
    q = am.dim
    if chi < 0.0 or epsilon < 0.0:
        raise InvalidInput("chi and epsilon must be nonnegative")
    lam_b = np.linalg.eigvalsh(bm.mat)
    if lam_b[0] < epsilon:
        raise HypothesisViolated(
            f"lambda_min(B) = {lam_b[0]:.3e} is below epsilon = {epsilon:.3e}"
        )
    if q * chi > epsilon:
        raise HypothesisViolated(
            f"q*chi = {q * chi:.3e} exceeds epsilon = {epsilon:.3e}"
        )
    sol = gen_eig_definite(am, bm)
    args = q * chi / sol.cond_d
    if np.any(args > 1.0):
        raise ConditionTooPoor(
            f"q*chi/d_j = {args.max():.3e} exceeds 1 for some eigenvalue"
        )
    half = np.arcsin(args)
    lower = sol.angles - half
    upper = sol.angles + half
    return MathiasLiIntervals(
        lower=lower,
        upper=upper,
        lower_sorted=np.sort(lower),
        upper_sorted=np.sort(upper),
        chi=float(chi),
        q=q,
    )


def mathias_li_gap_bound(a, b, chi: float, epsilon: float, j: int) -> float:
    """Per-eigenvalue bound asin(q*chi/d_j), valid under an eigenangle gap.

    The gap condition asks both neighbors of eigenangle j (one-sided at the
    ends) to be at least asin(q*chi/epsilon) - asin(q*chi/d_j) away; raises
    GapTooSmall when it fails.
    """
    am, bm = as_hermitian(a), as_hermitian(b)
    q = am.dim
    if not 0 <= j < q:
        raise InvalidInput(f"index j={j} outside 0..{q - 1}")
    if q * chi > epsilon:
        raise HypothesisViolated(
            f"q*chi = {q * chi:.3e} exceeds epsilon = {epsilon:.3e}"
        )
    sol = gen_eig_definite(am, bm)
    arg = q * chi / sol.cond_d[j]
    if arg > 1.0:
        raise ConditionTooPoor(f"q*chi/d_j = {arg:.3e} exceeds 1")
    required = np.arcsin(q * chi / epsilon) - np.arcsin(arg)
    gaps = []
    if j > 0:
        gaps.append(sol.angles[j] - sol.angles[j - 1])
    if j < q - 1:
        gaps.append(sol.angles[j + 1] - sol.angles[j])
    if gaps and min(gaps) < required:
        raise GapTooSmall(
            f"eigenangle gap {min(gaps):.3e} below required {required:.3e}"
        )
    return float(np.arcsin(arg))


# ---------------------------------------------------------------------------
# projection errors of truncation under noise, and the end-to-end bound
# ---------------------------------------------------------------------------

def chi_h_bound(
    mu: float,
    alpha: float,
    n: int,
    rho: float,
    norm_s: float,
    epsilon: float,
    eta_s: float,
) -> float:
    """Truncated-projection error bound 3 mu n^3 (1+1/rho) (||S||/eps)^alpha eta_S
    for the stiffness matrix, assuming the geometric-mean inequality with
    constants (mu, alpha).

    Hypothesis: (1+1/rho) * eta_s / epsilon <= 1.
    """
    if rho <= 0.0 or epsilon <= 0.0 or not 0.0 <= alpha <= 0.5:
        raise InvalidInput("need rho > 0, epsilon > 0, 0 <= alpha <= 1/2")
    if (1.0 + 1.0 / rho) * eta_s / epsilon > 1.0:
        raise HypothesisViolated(
            "(1+1/rho)*eta_s/epsilon exceeds 1; noise too large for the bound"
        )
    return 3.0 * mu * n**3 * (1.0 + 1.0 / rho) * (norm_s / epsilon) ** alpha * eta_s


def chi_s_bound(
    n: int, rho: float, eta_s: float, epsilon: float, simplified: bool = False
) -> float:
    """Truncated-projection error bound for the mass matrix itself.

    General form 2(1+1/rho) eta_s n + [(1+1/rho) eta_s n]^2 / epsilon; with
    ``simplified=True`` the linear form 3(1+1/rho) eta_s n, valid when
    (1+1/rho) eta_s n / epsilon <= 1.
    """
    if rho <= 0.0 or epsilon <= 0.0:
        raise InvalidInput("need rho > 0 and epsilon > 0")
    t = (1.0 + 1.0 / rho) * eta_s * n
    if simplified:
        if t / epsilon > 1.0:
            raise HypothesisViolated(
                "(1+1/rho)*eta_s*n/epsilon exceeds 1; use the general form"
            )
        return 3.0 * t
    return 2.0 * t + t**2 / epsilon


@dataclass(frozen=True)
class MainBoundReport:
    """End-to-end recovery bound for the smallest eigenvalue under noise.

    ``m`` is the kept dimension at level epsilon, ``rho`` the spectral-gap
    margin (largest admissible), ``chi`` the implied distance between the
    clean and noisy truncated pairs, ``flags`` the four hypotheses, and
    ``bound`` the eigenangle error bound asin(n*chi/d_0) - present only
    when every flag holds.
    """

    m: int
    rho: float
    mu: float
    alpha: float
    chi: float
    flags: dict[str, bool]
    bound: float | None
    d0: float
    e0: float
    e1: float


def main_bound(
    h, s, eta_h: float, eta_s: float, epsilon: float, alpha: float, mu: float
) -> MainBoundReport:
    """Evaluate the end-to-end noisy-recovery bound on a clean pair.

    Never raises on hypothesis failure: each hypothesis is reported as a
    flag and the bound is withheld unless all hold.  ``d_0`` is evaluated
    on the clean truncated pair with unit-norm eigenvectors.
    """
    hm, sm = as_hermitian(h), as_hermitian(s)
    n = sm.dim
    lam_desc = np.sort(np.linalg.eigvalsh(sm.mat))[::-1]
    m = int((lam_desc > epsilon).sum())
    flags = {
        "threshold_gap": False,
        "small_noise": False,
        "chi_small": False,
        "angle_gap": False,
    }
    if m == 0:
        return MainBoundReport(
            m=0, rho=float("nan"), mu=mu, alpha=alpha, chi=float("nan"),
            flags=flags, bound=None, d0=float("nan"),
            e0=float("nan"), e1=float("nan"),
        )
    # largest admissible margin: (1+rho)*epsilon = lambda_m by construction
    rho = float(lam_desc[m - 1] / epsilon - 1.0)
    lam_next = float(lam_desc[m]) if m < n else -np.inf
    flags["threshold_gap"] = bool(rho > 0.0 and lam_next + eta_s <= epsilon)
    flags["small_noise"] = bool((1.0 + 1.0 / rho) * eta_s / epsilon <= 1.0)
    norm_s = float(lam_desc[0]) if lam_desc[0] >= -lam_desc[-1] else float(-lam_desc[-1])
    chi = (
        3.0 * (2.0 + mu) * n**3 * (1.0 + 1.0 / rho) * (norm_s / epsilon) ** alpha * eta_s
        + eta_h
    )
    flags["chi_small"] = bool(n * chi <= epsilon)
    try:
        report = threshold_solve(hm, sm, epsilon)
    except EmptyThreshold:  # pragma: no cover - m > 0 rules this out
        report = None
    if report is None:
        return MainBoundReport(
            m=m, rho=rho, mu=mu, alpha=alpha, chi=chi, flags=flags,
            bound=None, d0=float("nan"), e0=float("nan"), e1=float("nan"),
        )
    d0 = float(report.solution.cond_d[0])
    e0 = float(report.e_all[0])
    e1 = float(report.e_all[1]) if report.kept_dim > 1 else float("nan")
    if report.kept_dim == 1:
        flags["angle_gap"] = flags["chi_small"]
    elif flags["chi_small"]:
        required = float(np.arcsin(n * chi / epsilon))
        flags["angle_gap"] = bool(
            np.arctan(e1) - np.arctan(e0) >= required
        )
    bound = None
    if all(flags.values()) and n * chi <= d0:
        bound = float(np.arcsin(n * chi / d0))
    return MainBoundReport(
        m=m, rho=rho, mu=mu, alpha=alpha, chi=chi, flags=flags,
        bound=bound, d0=d0, e0=e0, e1=e1,
    )


# ---------------------------------------------------------------------------
# trigonometric minimax machinery and the a-priori convergence bound
# ---------------------------------------------------------------------------

def _cheb_t(k: int, x):
    """Chebyshev polynomial T_k by the three-term recurrence (vectorized)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for _ in range(k - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


def _check_angle(a: float) -> None:
    if not 0.0 < a < np.pi:
        raise BadAngle(f"opening angle must lie in (0, pi), got {a}")


def cheb_beta(a: float, k: int) -> float:
    """Least possible sup over (-pi,pi)\\(-a,a) of a degree-k trigonometric
    polynomial normalized to 1 at zero: 1 / T_k(1 + 2(1-cos a)/(cos a + 1))."""
    _check_angle(a)
    if k < 0:
        raise InvalidInput("k must be nonnegative")
    x0 = 1.0 + 2.0 * (1.0 - np.cos(a)) / (np.cos(a) + 1.0)
    return float(1.0 / _cheb_t(k, x0))


def p_star(theta, a: float, k: int):
    """The optimal trigonometric polynomial of cheb_beta, evaluated at theta.

    Equals 1 exactly at 0, is bounded by 1 in absolute value, and by
    cheb_beta(a, k) outside (-a, a).
    """
    _check_angle(a)
    if k < 0:
        raise InvalidInput("k must be nonnegative")
    theta = np.asarray(theta, dtype=float)
    denom_arg = 1.0 + 2.0 * (1.0 - np.cos(a)) / (np.cos(a) + 1.0)
    num_arg = 1.0 + 2.0 * (np.cos(theta) - np.cos(a)) / (np.cos(a) + 1.0)
    out = _cheb_t(k, num_arg) / _cheb_t(k, denom_arg)
    return out if out.ndim else float(out)


def a_priori_bound(
    energies,
    gammas,
    m_index: int,
    k: int,
    epsilon: float,
    epsilon_total: float,
) -> float:
    """A-priori error bound for the truncated subspace estimate of the
    ground energy, for the symmetric grid t_j = pi*j/(E_M - E_0), j = -k..k.

    ``energies`` ascending spectrum, ``gammas`` the initial-state expansion
    coefficients, ``m_index`` the tuning index M, ``epsilon`` the truncation
    level, ``epsilon_total`` the discarded mass-matrix weight.  Raises
    OverlapTooSmall when the denominator |g0|^2 - 2|g0| sqrt((2k+1) eps)
    is nonpositive.
    """
    e = np.asarray(energies, dtype=float)
    g2 = np.abs(np.asarray(gammas)) ** 2
    n_states = e.size
    if g2.size != n_states:
        raise InvalidInput("energies and gammas must have equal length")
    if not 1 <= m_index <= n_states - 1:
        raise InvalidInput(f"m_index must lie in 1..{n_states - 1}")
    de = e - e[0]
    if de[m_index] <= 0.0:
        raise InvalidInput("spectrum is degenerate up to m_index")
    damped = 4.0 * (1.0 + np.pi * de[1] / de[m_index]) ** (-2 * k)
    numerator = 2.0 * (
        de[-1] * epsilon_total
        + damped * float(np.sum(de[1 : m_index + 1] * g2[1 : m_index + 1]))
        + float(np.sum(de[m_index + 1 :] * g2[m_index + 1 :]))
    )
    g0 = float(np.sqrt(g2[0]))
    denominator = g0**2 - 2.0 * g0 * np.sqrt((2 * k + 1) * epsilon)
    if denominator <= 0.0:
        raise OverlapTooSmall(
            f"denominator {denominator:.3e} nonpositive: initial overlap too "
            "small for this truncation level"
        )
    return float(numerator / denominator)


def a_priori_bound_simplified(
    delta_e1: float, delta_e_last: float, gamma0_sq: float, k: int
) -> float:
    """Coarse variant 8 * dE_last * (1-|g0|^2)/|g0|^2 * (1 + pi dE_1/dE_last)^(-2k)."""
    if gamma0_sq <= 0.0 or delta_e_last <= 0.0:
        raise InvalidInput("need gamma0_sq > 0 and delta_e_last > 0")
    rate = (1.0 + np.pi * delta_e1 / delta_e_last) ** (-2 * k)
    return float(8.0 * delta_e_last * (1.0 - gamma0_sq) / gamma0_sq * rate)


# ---------------------------------------------------------------------------
# truncation-only and low-rank stability bounds
# ---------------------------------------------------------------------------

def thresholding_only_bound(delta_e: float, epsilon: float, c0_norm: float) -> float:
    """Noise-free truncation error bound dE * eps * ||c0||^2 / (1 - 2 sqrt(eps) ||c0||)
    for a well-conditioned smallest eigenvalue (c0 the S-normalized
    eigenvector).  Hypothesis: 2 sqrt(eps) ||c0|| < 1.
    """
    if delta_e < 0.0 or epsilon < 0.0 or c0_norm < 0.0:
        raise InvalidInput("arguments must be nonnegative")
    t = 2.0 * np.sqrt(epsilon) * c0_norm
    if t >= 1.0:
        raise HypothesisViolated(f"2*sqrt(eps)*||c0|| = {t:.3e} is not below 1")
    return float(delta_e * epsilon * c0_norm**2 / (1.0 - t))


def low_rank_stability_bound(
    lambda_m: float, lambda_m1: float, delta_spec: float, delta_qui: float, n: int
) -> float:
    """Stability of the best rank-m approximation of a PSD matrix under a
    perturbation of spectral norm ``delta_spec`` (``delta_qui`` in the
    quadratic unitarily invariant norm of interest):

        delta_qui + 2 n lambda_m d / gap * (1 + 0.5 n d / gap),
        gap = lambda_m - lambda_{m+1} - d.

    Hypothesis: the spectral gap exceeds the perturbation.
    """
    gap = lambda_m - lambda_m1 - delta_spec
    if gap <= 0.0:
        raise HypothesisViolated(
            f"spectral gap {lambda_m - lambda_m1:.3e} does not exceed the "
            f"perturbation {delta_spec:.3e}"
        )
    t = delta_spec / gap
    return float(delta_qui + 2.0 * n * lambda_m * t * (1.0 + 0.5 * n * t))


# ---------------------------------------------------------------------------
# empirical geometric-mean fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaFit:
    """Scatter of normalized off-diagonal couplings versus eigenvalue ratios.

    Point (x, y) for mass-matrix eigenpairs (lam_i, v_i), (lam_j, v_j):
    x = min(lam)/max(lam), y = |v_i* H v_j| / max(lam).  The geometric-mean
    inequality with exponent alpha holds with constant mu iff
    y <= mu * x^(1-alpha) for all points; ``mu_min`` gives the least such
    constant over the retained scatter.
    """

    x: np.ndarray
    y: np.ndarray
    alpha_grid: np.ndarray
    mu_values: np.ndarray
    floor_ratio: float
    lambda_max: float

    def mu_min(self, alpha: float) -> float:
        if self.x.size == 0:
            return 0.0
        return float(np.max(self.y / self.x ** (1.0 - alpha)))


def alpha_fit(h, s, floor_ratio: float = 1e-16) -> AlphaFit:
    """Build the coupling scatter of a pair and the least geometric-mean
    constants on a grid of exponents.

    Pairs with min(lam_i, lam_j) below ``floor_ratio`` times the largest
    eigenvalue are dropped (they are numerically meaningless).
    """
    hm, sm = as_hermitian(h), as_hermitian(s)
    es = hermitian_eig(sm)
    lam = es.values
    lam_max = float(lam.max())
    if lam_max <= 0.0:
        raise InvalidInput("mass matrix must have a positive eigenvalue")
    coupling = np.abs(es.vectors.conj().T @ hm.mat @ es.vectors)
    floor = floor_ratio * lam_max
    xs, ys = [], []
    n = sm.dim
    for i in range(n):
        for j in range(i, n):
            lo, hi = min(lam[i], lam[j]), max(lam[i], lam[j])
            if lo < floor:
                continue
            xs.append(lo / hi)
            ys.append(coupling[i, j] / hi)
    x = np.asarray(xs)
    y = np.asarray(ys)
    if x.size:
        mu_values = np.array([np.max(y / x ** (1.0 - a)) for a in ALPHA_GRID])
    else:
        mu_values = np.zeros(len(ALPHA_GRID))
    return AlphaFit(
        x=x,
        y=y,
        alpha_grid=np.asarray(ALPHA_GRID),
        mu_values=mu_values,
        floor_ratio=float(floor_ratio),
        lambda_max=lam_max,
    )


# ---------------------------------------------------------------------------
# direct measurement of truncated-projection errors
# ---------------------------------------------------------------------------

def projection_error_direct(
    h, s, s_tilde, epsilon: float
) -> tuple[float, float, np.ndarray]:
    """Measured projector differences between clean and noisy truncations.

    Builds the spectral projectors of S and S~ onto eigenvalues above
    ``epsilon`` and returns (||P H P - P~ H P~||, ||P S P - P~ S P~||, W)
    with W = V~* V the congruence aligning the two truncated pairs.  The
    kept dimensions must agree (SectorMismatch otherwise).
    """
    hm, sm, stm = as_hermitian(h), as_hermitian(s), as_hermitian(s_tilde)
    es = hermitian_eig(sm)
    est = hermitian_eig(stm)
    keep = es.values > epsilon
    keep_t = est.values > epsilon
    if keep.sum() != keep_t.sum():
        raise SectorMismatch(
            f"kept dimensions differ: {int(keep.sum())} vs {int(keep_t.sum())}"
        )
    v = es.vectors[:, keep]
    vt = est.vectors[:, keep_t]
    p = v @ v.conj().T
    pt = vt @ vt.conj().T
    chi_h = spectral_norm(p @ hm.mat @ p - pt @ hm.mat @ pt)
    chi_s = spectral_norm(p @ sm.mat @ p - pt @ sm.mat @ pt)
    return chi_h, chi_s, vt.conj().T @ v
