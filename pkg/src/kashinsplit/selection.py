"""Random selection of large subsets with L1/L2 (via Lp) norm equivalence.

The pipeline: draw k indices uniformly with replacement, keep the
complement I of the drawn set, and certify a concentration condition for
the sampling map on the slice {|y|_p <= 1, |y|_2 = rho}. When the condition
holds (or the slice is empty, which certifies the equivalence trivially at
that rho), the L2 norm is dominated by rho times the Lp norm on span(I) and,
by the same two-sided argument, on the complement span. A Hoelder step
converts the Lp equivalence into the L1 statement.

All searches here are heuristic maximizers with keep-best semantics: a
reported pass of the concentration condition is not a certificate, but a
reported violation always carries an exactly feasible witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map, worker_count
from ._rng import child_seed, substream
from .errors import ConfigError, InfeasibleError, RetryExhaustedError
from .metrics import MixSpace, VectorSet, lp_norm, pairing_matrix
from .systems import OrthonormalSystem

SLICE_FEAS_TOL = 1e-9


@dataclass(eq=False)
class SampledOperator:
    """k uniform draws from the family and the induced pairing map into C^k."""

    picks: np.ndarray  # (k,) indices, with multiplicity
    I: np.ndarray      # complement of the set of drawn indices, sorted
    sys: OrthonormalSystem = field(repr=False)
    _gamma: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.picks.size

    @property
    def n(self) -> int:
        return self.sys.n

    @property
    def gamma(self) -> np.ndarray:
        """(k, n) table whose row i is the pairing functional of pick i."""
        if self._gamma is None:
            xs = VectorSet.from_system(self.sys, self.picks)
            self._gamma = pairing_matrix(xs, self.sys)
        return self._gamma

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        """Pairings (<X_i, y>)_i of y given by coefficients; batched."""
        return np.asarray(coeffs, dtype=np.complex128) @ self.gamma.T


def sample_operator(sys: OrthonormalSystem, k: int, seed: int) -> SampledOperator:
    """k iid uniform draws with replacement; I is the undrawn index set."""
    if not 1 < k < sys.n:
        raise ConfigError("need 1 < k < n")
    picks = substream(seed, 9).integers(0, sys.n, size=k)
    mask = np.ones(sys.n, dtype=bool)
    mask[picks] = False
    return SampledOperator(picks=picks, I=np.flatnonzero(mask), sys=sys)


@dataclass
class IsometryReport:
    mean_ratio: float
    stderr: float
    trials: int

    def to_dict(self) -> dict:
        return {"mean_ratio": self.mean_ratio, "stderr": self.stderr, "trials": self.trials}


def isometry_check(sys: OrthonormalSystem, k: int, trials: int, seed: int,
                   workers: int | None = None) -> IsometryReport:
    """Mean of |Gamma y|^2 / ((k/n) |y|_2^2) over fresh draws and random y.

    The expectation is 1 for an orthonormal family; the report should sit
    within Monte Carlo error of it.
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    n = sys.n

    def one(t: int) -> float:
        rng = substream(seed, 10, t)
        picks = rng.integers(0, n, size=k)
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = sys.synth(a)
        pair_full = (y / sys.m0) @ sys.values.conj().T
        gy2 = float(np.sum(np.abs(pair_full[picks]) ** 2))
        y2 = float(lp_norm(y, sys, 2.0)) ** 2
        return gy2 / ((k / n) * y2)

    vals = np.array(ordered_map(one, range(trials), worker_count(workers)))
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return IsometryReport(float(vals.mean()), se, trials)


def rho_bound(n: int, k: int, L: float, p: float, delta: float, c_cal: float = 1.0) -> float:
    """The theory scale c * sqrt(n/k) * sqrt(log k) * L / (delta (p-1)^{5/2})."""
    if not 1 < k < n:
        raise ConfigError("need 1 < k < n")
    if not 0.0 < delta <= 1.0:
        raise ConfigError("delta must lie in (0, 1]")
    if not 1.0 < p <= 2.0:
        raise ConfigError("p must lie in (1, 2]")
    return c_cal * math.sqrt(n / k) * math.sqrt(math.log(k)) * L / (delta * (p - 1.0) ** 2.5)


def p_auto(n: int, k: int, L: float) -> float:
    """The canonical exponent 1 + 1/log(mu) with mu = L sqrt(n/k) sqrt(log k)."""
    mu = L * math.sqrt(n / k) * math.sqrt(math.log(k))
    if mu <= math.e:
        raise InfeasibleError(
            f"mu = {mu:.4f} <= e, the canonical exponent is undefined; pass p manually"
        )
    return 1.0 + 1.0 / math.log(mu)


@dataclass
class HolderFactor:
    mu: float
    p: float
    theta: float          # interpolation weight (2-p)/p
    factor: float         # L1-equivalence factor mu * Cp^{p/(2-p)} * mu^{2(p-1)/(2-p)}
    c_equiv: float        # factor / (mu (log mu)^{5/2})

    def to_dict(self) -> dict:
        return {"mu": self.mu, "p": self.p, "theta": self.theta,
                "factor": self.factor, "c_equiv": self.c_equiv}


def lp_to_l1_factor(mu: float, p: float | None = None, Cp: float = 1.0) -> HolderFactor:
    """Convert an L2 <= Cp*mu*Lp equivalence into an L1 one by interpolation.

    With the canonical p = 1 + 1/log(mu) the factor is at most a constant
    times mu (log mu)^{5/2}; `c_equiv` reports that constant.
    """
    if mu <= math.e:
        raise ConfigError("mu must exceed e")
    if p is None:
        p = 1.0 + 1.0 / math.log(mu)
    if not 1.0 < p < 2.0:
        raise ConfigError("p must lie in (1, 2)")
    theta = (2.0 - p) / p
    factor = mu * Cp ** (p / (2.0 - p)) * mu ** (2.0 * (p - 1.0) / (2.0 - p))
    c_equiv = factor / (mu * math.log(mu) ** 2.5)
    return HolderFactor(mu, p, theta, factor, c_equiv)


def holder_theta(p: float) -> float:
    """Interpolation weight (2-p)/p of the L1 factor in |f|_p <= |f|_1^t |f|_2^(1-t)."""
    return (2.0 - p) / p


def feasibility_radius(sys: OrthonormalSystem, p: float) -> float:
    """Exact sup of |y|_2 / |y|_p over the full span: m0^(1/p - 1/2), at a point mass."""
    return sys.m0 ** (1.0 / p - 0.5)


@dataclass
class SliceCheck:
    """Outcome of the concentration check on {|y|_p <= 1, |y|_2 = rho}.

    `passed` with `vacuous` means the slice is empty (rho exceeds the exact
    span ratio), which certifies the L2 <= rho * Lp domination outright.
    A failed check carries an exactly feasible violating witness.
    """

    rho: float
    threshold: float
    deviation: float
    passed: bool
    vacuous: bool
    witness: np.ndarray | None = field(default=None, repr=False)
    feasible_radius: float = 0.0

    def to_dict(self) -> dict:
        return {"rho": self.rho, "threshold": self.threshold,
                "deviation": self.deviation, "passed": self.passed,
                "vacuous": self.vacuous, "feasible_radius": self.feasible_radius}


def _slice_point(a, rho, sys, p, delta_coeffs, tol=SLICE_FEAS_TOL):
    """Rescale a onto the slice, blending toward the point-mass direction if needed."""
    def l2_of(c):
        return float(lp_norm(sys.synth(c), sys, 2.0))

    def ratio_of(c):
        y = sys.synth(c)
        return float(lp_norm(y, sys, 2.0)) / float(lp_norm(y, sys, p))

    na = l2_of(a)
    if na == 0.0:
        a = delta_coeffs
        na = l2_of(a)
    if ratio_of(a) >= rho * (1.0 - 1e-13):
        return a * (rho / na)
    ahat = a / na
    dhat = delta_coeffs / l2_of(delta_coeffs)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2.0
        c = (1.0 - mid) * ahat + mid * dhat
        if l2_of(c) > 0 and ratio_of(c) >= rho:
            hi = mid
        else:
            lo = mid
    c = (1.0 - hi) * ahat + hi * dhat
    return c * (rho / l2_of(c))


def slice_concentration(
    op: SampledOperator,
    space: MixSpace,
    rho: float,
    restarts: int = 8,
    iters: int = 150,
    seed: int = 0,
) -> SliceCheck:
    """Search for violations of |sum_j |<X_j,y>|^2 - (k/n) rho^2| <= k rho^2 / (3n).

    Maximizes the quadratic sum both ways over the slice by projected
    ascent / descent (L2-sphere rescale with an Lp-feasible blend). A pass
    is heuristic; a fail returns the feasible violating point.
    """
    if rho <= 0:
        raise ConfigError("rho must be positive")
    sys = op.sys
    p = space.p
    R = feasibility_radius(sys, p)
    threshold = op.k * rho * rho / (3.0 * sys.n)
    if rho > R * (1.0 + 1e-12):
        return SliceCheck(rho, threshold, 0.0, True, True, None, R)

    C = op.gamma  # (k, n)
    Q = C.conj().T @ C
    target = (op.k / sys.n) * rho * rho
    point_mass = np.zeros(sys.m0, dtype=np.complex128)
    point_mass[0] = 1.0
    delta_coeffs = sys.coeffs(point_mass)
    step = 0.5 / (float(np.abs(Q).sum(axis=1).max()) + 1e-30)

    diag = np.real(np.diag(Q))
    starts = []
    for idx in (int(np.argmax(diag)), int(np.argmin(diag))):
        e = np.zeros(sys.n, dtype=np.complex128)
        e[idx] = 1.0
        starts.append(e)
    starts.append(delta_coeffs.astype(np.complex128))
    rng = substream(seed, 11)
    while len(starts) < max(restarts, 3):
        starts.append(rng.standard_normal(sys.n) + 1j * rng.standard_normal(sys.n))

    best_dev, best_wit = -1.0, None
    for sgn in (+1.0, -1.0):
        for a0 in starts:
            a = _slice_point(a0, rho, sys, p, delta_coeffs)
            for _ in range(iters):
                q = float(np.real(np.vdot(a, Q @ a)))
                dev = abs(q - target)
                if dev > best_dev:
                    best_dev, best_wit = dev, a.copy()
                a = _slice_point(a + sgn * 2.0 * step * (Q @ a), rho, sys, p, delta_coeffs)
            q = float(np.real(np.vdot(a, Q @ a)))
            dev = abs(q - target)
            if dev > best_dev:
                best_dev, best_wit = dev, a.copy()

    passed = best_dev <= threshold * (1.0 + 1e-9) + 1e-12
    if not passed:
        y = sys.synth(best_wit)
        l2 = float(lp_norm(y, sys, 2.0))
        lp = float(lp_norm(y, sys, p))
        if abs(l2 - rho) > 1e-6 * rho or lp > 1.0 + 1e-6:
            raise AssertionError("violating witness left the slice; projection bug")
    return SliceCheck(rho, threshold, best_dev, passed, False, best_wit, R)


def cardinality_window(n: int, c: float = 3.0) -> tuple[float, float, bool]:
    """(n/2 - c sqrt n, n/2 + c sqrt n, vacuous?); vacuous when it spans [0, n]."""
    lo = n / 2.0 - c * math.sqrt(n)
    hi = n / 2.0 + c * math.sqrt(n)
    return lo, hi, lo <= 0 and hi >= n


@dataclass
class RatioResult:
    ratio: float
    witness: np.ndarray  # coefficients over the index set
    indices: np.ndarray

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "cardinality": int(self.indices.size)}


def ratio_search(
    sys: OrthonormalSystem,
    I,
    restarts: int = 6,
    iters: int = 300,
    seed: int = 0,
    seed_coeffs=None,
) -> RatioResult:
    """Heuristic lower bound on sup |f|_2 / |f|_1 over span{phi_i : i in I}.

    Normalized subgradient ascent on the log ratio with keep-best semantics;
    any provided seed witnesses are evaluated first, so the result never
    falls below them.
    """
    I = np.asarray(sorted(int(i) for i in I))
    if I.size == 0:
        raise ConfigError("the index set must be nonempty")
    basis = sys.values[I]
    d = I.size

    def ratio_of(a):
        f = a @ basis
        l1 = float(lp_norm(f, sys, 1.0))
        if l1 == 0.0:
            return 0.0
        return float(lp_norm(f, sys, 2.0)) / l1

    starts = []
    if seed_coeffs is not None:
        for s in np.atleast_2d(np.asarray(seed_coeffs, dtype=np.complex128)):
            starts.append(s.copy())
    n_seeded = len(starts)
    e0 = np.zeros(d, dtype=np.complex128)
    e0[0] = 1.0
    starts.append(e0)
    starts.append(np.ones(d, dtype=np.complex128) / math.sqrt(d))
    rng = substream(seed, 12)
    while len(starts) - n_seeded < max(restarts, 2):
        starts.append(rng.standard_normal(d) + 1j * rng.standard_normal(d))

    best_r, best_a = 0.0, e0
    for a0 in starts:
        na = np.linalg.norm(a0)
        if na == 0.0:
            continue
        a = a0 / na
        r = ratio_of(a)
        if r > best_r:
            best_r, best_a = r, a.copy()
        eta = 0.5
        for _ in range(iters):
            f = a @ basis
            absf = np.abs(f)
            l1 = absf.mean()
            l2sq = float(np.linalg.norm(a)) ** 2
            if l1 == 0.0 or l2sq == 0.0:
                break
            sgn = np.where(absf > 0, f / np.where(absf > 0, absf, 1.0), 0.0)
            grad_l1 = (sgn / sys.m0) @ basis.conj().T
            g = a / l2sq - grad_l1 / l1
            cand = a + eta * g
            ncand = np.linalg.norm(cand)
            if ncand == 0.0:
                break
            cand /= ncand
            rc = ratio_of(cand)
            if rc >= r:
                a, r = cand, rc
                if r > best_r:
                    best_r, best_a = r, a.copy()
            else:
                eta *= 0.5
                if eta < 1e-6:
                    break
    return RatioResult(best_r, best_a, I)


@dataclass
class SideCertificate:
    """Certificate for one side of a split: condition outcome plus ratio evidence."""

    side: str
    indices: np.ndarray = field(repr=False)
    cardinality: int
    rho: float
    threshold: float
    deviation: float
    passed: bool
    vacuous: bool
    ratio_search_value: float
    coset_ratio: float | None = None

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "cardinality": self.cardinality,
            "rho": self.rho,
            "threshold": self.threshold,
            "deviation": self.deviation,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "ratio_search_value": self.ratio_search_value,
            "coset_ratio": self.coset_ratio,
            "indices": [int(i) for i in self.indices],
        }


@dataclass
class SplitResult:
    I: np.ndarray
    complement: np.ndarray
    k: int
    p: float
    rho: float
    delta: float
    attempts: int
    window: tuple[float, float]
    window_c: float
    selected: SideCertificate
    other: SideCertificate

    def to_dict(self) -> dict:
        return {
            "k": self.k, "p": self.p, "rho": self.rho, "delta": self.delta,
            "attempts": self.attempts,
            "window": [self.window[0], self.window[1]], "window_c": self.window_c,
            "selected": self.selected.to_dict(),
            "complement": self.other.to_dict(),
        }


def kashin_split(
    sys: OrthonormalSystem,
    p: float | None = None,
    delta: float = 0.5,
    seed: int = 0,
    max_retries: int = 100,
    c_window: float = 3.0,
    c_cal: float = 1.0,
    restarts: int = 6,
    iters: int = 150,
    ratio_restarts: int = 4,
    ratio_iters: int = 200,
    with_coset: bool = True,
) -> SplitResult:
    """Split the family into two halves carrying the L2 <= rho * Lp domination.

    Resamples until the undrawn set lands in the cardinality window
    n/2 +- c_window sqrt(n) and the concentration check passes (a vacuous
    pass, empty slice, is accepted and recorded). Certificates for both
    sides reuse the same rho, as the two-sided kernel argument does; each
    side also carries a heuristic L2/L1 ratio and, for XOR-group systems,
    an exact coset witness ratio.
    """
    n = sys.n
    if n % 2:
        raise ConfigError("n must be even")
    k = round(n * math.log(2.0))
    if not 1 < k < 0.75 * n:
        raise ConfigError("k = round(n log 2) must satisfy 1 < k < 3n/4")
    if p is None:
        p = p_auto(n, k, sys.linf_bound)
    rho = rho_bound(n, k, sys.linf_bound, p, delta, c_cal)
    space = MixSpace(p, rho)
    lo, hi, _ = cardinality_window(n, c_window)

    best = None
    for attempt in range(max_retries):
        op = sample_operator(sys, k, child_seed(seed, 13, attempt))
        size = op.I.size
        if not lo <= size <= hi:
            if best is None:
                best = (attempt, size, None)
            continue
        check = slice_concentration(op, space, rho, restarts=restarts,
                                    iters=iters, seed=child_seed(seed, 14, attempt))
        best = (attempt, size, check)
        if not check.passed:
            continue

        comp = np.setdiff1d(np.arange(n), op.I)
        sides = []
        for name, idx in (("selected", op.I), ("complement", comp)):
            rs = ratio_search(sys, idx, restarts=ratio_restarts, iters=ratio_iters,
                              seed=child_seed(seed, 15, attempt, len(sides)))
            coset_ratio = None
            if with_coset and sys.group_xor:
                from .coset import optimality_certificate

                try:
                    coset_ratio = optimality_certificate(sys, idx, n - idx.size).ratio
                except (ConfigError, AssertionError):
                    coset_ratio = None
            sides.append(SideCertificate(
                side=name, indices=idx, cardinality=int(idx.size),
                rho=rho, threshold=check.threshold, deviation=check.deviation,
                passed=check.passed, vacuous=check.vacuous,
                ratio_search_value=rs.ratio, coset_ratio=coset_ratio,
            ))
        return SplitResult(
            I=op.I, complement=comp, k=k, p=p, rho=rho, delta=delta,
            attempts=attempt + 1, window=(lo, hi), window_c=c_window,
            selected=sides[0], other=sides[1],
        )

    raise RetryExhaustedError(
        f"no attempt out of {max_retries} satisfied the window and the condition",
        report={"best_attempt": best[0] if best else None,
                "last_size": best[1] if best else None},
    )
