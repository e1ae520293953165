"""Norms and process metrics on the discretized span.

The central object is the mixed norm ((|y|_Lp^2 + |y|_L2^2 / rho^2) / 2)^(1/2),
which is uniformly convex of power type 2; its convexity constant and the
type-2 constant of the dual drive every bound downstream. The quasi-metrics
`chain_dist` / `increment_dist` and the `ellipsoid_norm` are the distances
controlling the sign-process increments, and are checked here as runtime
inequalities rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import ConfigError
from .systems import OrthonormalSystem, SpanElement

EP_MEMBERSHIP_TOL = 1e-9
POWER_ITER_TOL = 1e-8
POWER_ITER_CAP = 20000


def _as_values(f, sys: OrthonormalSystem) -> np.ndarray:
    if isinstance(f, SpanElement):
        return f.synth(sys)
    return np.asarray(f, dtype=np.complex128)


def lp_norm(f, sys: OrthonormalSystem, p) -> float | np.ndarray:
    """Weighted L_p norm on the grid; p = inf gives the max. Batched over leading axes."""
    y = _as_values(f, sys)
    a = np.abs(y)
    if p == np.inf or p == math.inf:
        return a.max(axis=-1)
    p = float(p)
    if p < 1.0:
        raise ConfigError("p must be at least 1 (or inf)")
    if p == 1.0:
        return a.mean(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).mean(axis=-1))
    return a.__pow__(p).mean(axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class MixSpace:
    """Parameters of the mixed Lp/L2 norm and its convexity constants.

    `calibration` scales the dual type-2 constant; the absolute constants in
    the underlying bounds are existential, so checks report ratios against
    this calibrated value.
    """

    p: float
    rho: float
    calibration: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ConfigError("mixed norm requires 1 < p <= 2")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")

    @property
    def convexity_constant(self) -> float:
        """lambda with 1/lambda^2 = p(p-1)/8, from the two-point convexity inequality."""
        return math.sqrt(8.0 / (self.p * (self.p - 1.0)))

    @property
    def dual_type2(self) -> float:
        """Type-2 constant of the dual space, calibration * sqrt(p/(p-1))."""
        return self.calibration * math.sqrt(self.p / (self.p - 1.0))

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)


def mix_norm(y, space: MixSpace, sys: OrthonormalSystem) -> float | np.ndarray:
    """((|y|_Lp^2 + |y|_L2^2 / rho^2) / 2)^(1/2), batched."""
    lp = lp_norm(y, sys, space.p)
    l2 = lp_norm(y, sys, 2.0)
    return np.sqrt((lp * lp + l2 * l2 / space.rho**2) / 2.0)


def clarkson_slack(f, g, p: float, sys: OrthonormalSystem):
    """Slack of the two-point power-type-2 convexity inequality in L_p.

    rhs - lhs where
    lhs = |(f+g)/2|_p^2 + (p(p-1)/8) |(f-g)/2|_p^2 and rhs = (|f|_p^2 + |g|_p^2)/2.
    Nonnegative (up to round-off) for 1 < p <= 2. Batched.
    """
    if not 1.0 < p <= 2.0:
        raise ConfigError("the inequality is used for 1 < p <= 2")
    f = _as_values(f, sys)
    g = _as_values(g, sys)
    mid = lp_norm((f + g) / 2.0, sys, p)
    half = lp_norm((f - g) / 2.0, sys, p)
    lhs = mid * mid + (p * (p - 1.0) / 8.0) * half * half
    rhs = (lp_norm(f, sys, p) ** 2 + lp_norm(g, sys, p) ** 2) / 2.0
    return rhs - lhs


@dataclass(eq=False)
class VectorSet:
    """Finite family of dual vectors with cached pairing machinery.

    `bound` is the declared sup-norm bound on the family (the L that enters
    every bound); `l2_quad_sup` is the exact supremum of sum_j |<X_j, y>|^2
    over the unit L2 ball, computed by power iteration.
    """

    vectors: np.ndarray  # (m, m0)
    weights: np.ndarray  # (m0,) probability weights
    bound: float
    _l2_quad_sup: float | None = field(default=None, repr=False)

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.complex128))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.m == 0:
            raise ConfigError("a vector set must contain at least one vector")

    @classmethod
    def from_system(cls, sys: OrthonormalSystem, indices=None) -> "VectorSet":
        if indices is None:
            vectors = sys.values
        else:
            vectors = sys.values[np.asarray(list(indices), dtype=int)]
        return cls(vectors, sys.weights, sys.linf_bound)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    def pair(self, y) -> np.ndarray:
        """<X_j, y> for all j; batched over leading axes of y."""
        y = np.asarray(y, dtype=np.complex128)
        return (y * self.weights) @ self.vectors.conj().T

    def bound_holds(self, tol: float = 1e-9) -> bool:
        return float(np.abs(self.vectors).max()) <= self.bound + tol

    @property
    def l2_quad_sup(self) -> float:
        """sup over the unit L2 ball of sum_j |<X_j, y>|^2 (largest eigenvalue)."""
        if self._l2_quad_sup is None:
            p_mat = self.vectors.conj() * np.sqrt(self.weights)
            z = np.exp(1j * np.linspace(0.0, 1.0, p_mat.shape[1]))
            z /= np.linalg.norm(z)
            lam = 0.0
            for _ in range(POWER_ITER_CAP):
                w = p_mat.conj().T @ (p_mat @ z)
                nw = np.linalg.norm(w)
                if nw == 0.0:
                    lam = 0.0
                    break
                z = w / nw
                new = float(np.linalg.norm(p_mat @ z) ** 2)
                if abs(new - lam) <= POWER_ITER_TOL * max(new, 1e-300):
                    lam = new
                    break
                lam = new
            self._l2_quad_sup = lam
        return self._l2_quad_sup


def max_pairing(y, xs: VectorSet) -> float | np.ndarray:
    """max_j |<X_j, y>|, the sup seminorm induced by the family. Batched."""
    return np.abs(xs.pair(y)).max(axis=-1)


def chain_dist(y, ybar, xs: VectorSet) -> float:
    """Quasi-metric d with d^2 = sum_j |<X_j, y-ybar>|^2 (|<X_j,y>|^2 + |<X_j,ybar>|^2)."""
    py, pb = xs.pair(y), xs.pair(ybar)
    d2 = np.sum(np.abs(py - pb) ** 2 * (np.abs(py) ** 2 + np.abs(pb) ** 2), axis=-1)
    return np.sqrt(d2)


def increment_dist(y, ybar, xs: VectorSet) -> float:
    """Metric with square sum_j (|<X_j,y>|^2 - |<X_j,ybar>|^2)^2, the sub-Gaussian scale."""
    py, pb = xs.pair(y), xs.pair(ybar)
    return np.sqrt(np.sum((np.abs(py) ** 2 - np.abs(pb) ** 2) ** 2, axis=-1))


def ellipsoid_norm(y, xs: VectorSet, u) -> float:
    """(sum_i |<X_i, y>|^2 |<X_i, u>|^2)^(1/2)."""
    alpha = np.abs(xs.pair(u)) ** 2
    return float(np.sqrt(np.sum(np.abs(xs.pair(y)) ** 2 * alpha, axis=-1)))


def dual_norm_upper(x, space: MixSpace, sys: OrthonormalSystem) -> float:
    """Certified upper bound on the mixed-norm dual norm of a vector.

    From the splitting description of the dual: taking the whole vector on
    either leg gives sqrt(2) * min(|x|_{p'}, rho |x|_2).
    """
    xq = float(lp_norm(x, sys, space.conjugate))
    x2 = float(lp_norm(x, sys, 2.0))
    return math.sqrt(2.0) * min(xq, space.rho * x2)


def quad_sup_upper(xs: VectorSet, space: MixSpace, sys: OrthonormalSystem | None = None) -> float:
    """Certified upper bound on sup over the mixed-norm ball of sum_j |<X_j,y>|^2.

    The ball sits inside sqrt(2) rho times the L2 ball, so 2 rho^2 times the
    L2 eigenvalue is an upper bound; a per-vector dual bound gives a second.
    """
    bound = 2.0 * space.rho**2 * xs.l2_quad_sup
    if sys is not None:
        per_vec = sum(dual_norm_upper(x, space, sys) ** 2 for x in xs.vectors)
        bound = min(bound, per_vec)
    return bound


@dataclass
class QuadMax:
    value: float
    coeffs: np.ndarray
    converged: bool


def _ball_projector(sys, space, basis, ball):
    if ball == "l2":
        def norm_of(a):
            return float(np.linalg.norm(a))
    elif ball == "mix":
        def norm_of(a):
            return float(mix_norm(a @ basis, space, sys))
    else:
        raise ConfigError(f"unknown ball {ball!r}")
    return norm_of


def _ball_sq_grad(sys, space, basis, ball):
    """Wirtinger (conjugate-coordinate) gradient of the squared ball norm."""
    if ball == "l2":
        return lambda a: a
    w = sys.weights
    p = space.p
    inv_rho2 = 1.0 / space.rho**2

    def grad(a):
        y = a @ basis
        absy = np.abs(y)
        lp = float((absy**p @ w) ** (1.0 / p))
        safe = np.maximum(absy, 1e-150)
        lp_part = lp ** (2.0 - p) * ((safe ** (p - 2.0) * y) * w) @ basis.conj().T
        l2_part = inv_rho2 * (y * w) @ basis.conj().T
        return (lp_part + l2_part) / 2.0

    return grad


def _quad_starts(A: np.ndarray, restarts: int, seed: int):
    d = A.shape[0]
    starts = []
    # power iteration with a positive shift homes in on the largest eigenvalue
    shift = float(np.abs(A).sum(axis=1).max()) + 1.0
    v = np.exp(1j * np.linspace(0.0, 2.0, d))
    v /= np.linalg.norm(v)
    for _ in range(60):
        v = A @ v + shift * v
        nv = np.linalg.norm(v)
        if nv == 0.0:
            break
        v = v / nv
    starts.append(v)
    diag = np.real(np.diag(A))
    top = int(np.argmax(diag))
    e = np.zeros(d, dtype=np.complex128)
    e[top] = 1.0
    starts.append(e)
    pos = diag > 0
    if pos.any():
        flat = pos.astype(np.complex128)
        starts.append(flat / np.linalg.norm(flat))
    rng = substream(seed, 777)
    while len(starts) < restarts:
        r = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        starts.append(r / np.linalg.norm(r))
    return starts[:max(restarts, 1)]


def max_quad_on_ball(
    A: np.ndarray,
    sys: OrthonormalSystem,
    space: MixSpace | None = None,
    support=None,
    ball: str = "mix",
    restarts: int = 8,
    iters: int = 200,
    seed: int = 0,
) -> QuadMax:
    """Heuristic maximum of Re <a, A a> over the unit ball, in coefficients.

    The objective is 2-homogeneous, so it suffices to maximize the ratio
    Re <a, A a> / |a|^2 and rescale to the norm sphere. Ascent follows the
    ratio gradient A a - val * grad(|a|^2)/2 (the norm-gradient term lets
    the iterate trade constraint mass across coordinates), with an adaptive
    monotone step. Starts: leading-eigenvector, extreme-coordinate,
    flat-positive and random. The result is a lower estimate of the true
    supremum; `converged` is False when a restart was still improving at
    the cap.
    """
    if ball == "mix" and space is None:
        raise ConfigError("a MixSpace is required for the mixed-norm ball")
    basis = sys.values if support is None else sys.values[np.asarray(list(support), dtype=int)]
    norm_of = _ball_projector(sys, space, basis, ball)
    sq_grad = _ball_sq_grad(sys, space, basis, ball)
    row_scale = float(np.abs(A).sum(axis=1).max()) + 1e-300

    best_val, best_a = 0.0, np.zeros(A.shape[0], dtype=np.complex128)
    converged = True
    for a0 in _quad_starts(A, restarts, seed):
        t = norm_of(a0)
        if t == 0.0:
            continue
        a = a0 / t
        g = A @ a
        val = float(np.real(np.vdot(a, g)))
        if val > best_val:
            best_val, best_a = val, a.copy()
        eta = 1.0 / row_scale
        stall = 0
        for _ in range(iters):
            direction = g - val * sq_grad(a)
            cand = a + 2.0 * eta * direction
            t = norm_of(cand)
            if t == 0.0:
                break
            cand /= t
            gc = A @ cand
            vc = float(np.real(np.vdot(cand, gc)))
            if vc >= val:
                if vc <= val + 1e-12 * (1.0 + abs(val)):
                    stall += 1
                else:
                    stall = 0
                a, g, val = cand, gc, vc
                eta *= 1.5
                if val > best_val:
                    best_val, best_a = val, a.copy()
                if stall >= 10:
                    break
            else:
                eta *= 0.3
                if eta < 1e-12 / row_scale:
                    break
        else:
            converged = False
    return QuadMax(best_val, best_a, converged)


def max_abs_quad_on_ball(A: np.ndarray, sys, space=None, **kw) -> QuadMax:
    """Heuristic maximum of |<a, A a>| over the unit ball (both signs tried)."""
    pos = max_quad_on_ball(A, sys, space, **kw)
    neg = max_quad_on_ball(-A, sys, space, **kw)
    if neg.value > pos.value:
        return QuadMax(neg.value, neg.coeffs, pos.converged and neg.converged)
    return QuadMax(pos.value, pos.coeffs, pos.converged and neg.converged)


def pairing_matrix(xs: VectorSet, sys: OrthonormalSystem, support=None) -> np.ndarray:
    """C with C[j, i] = <X_j, phi_i>, so pairings of y = a @ basis are C @ a."""
    basis = sys.values if support is None else sys.values[np.asarray(list(support), dtype=int)]
    return xs.pair(basis).T


def quad_sup_search(
    xs: VectorSet, space: MixSpace, sys: OrthonormalSystem, restarts: int = 8,
    iters: int = 200, seed: int = 0,
) -> float:
    """Heuristic (lower-estimate) value of sup over the mixed ball of sum |<X_j,y>|^2."""
    C = pairing_matrix(xs, sys)
    A = C.conj().T @ C
    return max_quad_on_ball(A, sys, space, ball="mix", restarts=restarts, iters=iters, seed=seed).value


@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol: float = 1e-10) -> bool:
        return self.slack >= -tol

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


def metric_inequalities(
    y, ybar, z, zbar, u,
    xs: VectorSet,
    space: MixSpace,
    sys: OrthonormalSystem,
    quad_sup: float | None = None,
    dual_bound: float | None = None,
) -> list[InequalityCheck]:
    """The four distance comparisons used by the chaining argument, evaluated.

    All five points should lie in the mixed-norm unit ball (u must; y, ybar
    enter the quadratic-sum comparison through it). `quad_sup` defaults to
    the certified upper bound, `dual_bound` to the certified per-vector dual
    upper bound, so the checks are sound rather than heuristic.
    """
    if float(mix_norm(u, space, sys)) > 1.0 + EP_MEMBERSHIP_TOL:
        raise ConfigError("u must lie in the mixed-norm unit ball")
    M = quad_sup_upper(xs, space, sys) if quad_sup is None else quad_sup
    L = dual_bound if dual_bound is not None else max(
        dual_norm_upper(x, space, sys) for x in xs.vectors
    )
    checks = [
        InequalityCheck("increment_vs_chain", float(increment_dist(y, ybar, xs)),
                        2.0 * float(chain_dist(y, ybar, xs))),
        InequalityCheck("chain_vs_pairing_sup", float(chain_dist(y, ybar, xs)),
                        math.sqrt(2.0) * float(max_pairing(np.asarray(y) - np.asarray(ybar), xs)) * math.sqrt(M)),
        InequalityCheck("pairing_sup_vs_norm", float(max_pairing(np.asarray(y) - np.asarray(ybar), xs)),
                        L * float(mix_norm(np.asarray(y) - np.asarray(ybar), space, sys))),
    ]
    dz = np.asarray(z) - np.asarray(zbar)
    lhs4 = float(chain_dist(z, zbar, xs)) ** 2
    rhs4 = 8.0 * (
        ellipsoid_norm(dz, xs, u) ** 2
        + M * float(max_pairing(dz, xs)) ** 2
        * (float(mix_norm(np.asarray(z) - np.asarray(u), space, sys)) ** 2
           + float(mix_norm(np.asarray(zbar) - np.asarray(u), space, sys)) ** 2)
    )
    checks.append(InequalityCheck("chain_vs_ellipsoid_split", lhs4, rhs4))
    return checks


def sample_mix_ball(
    sys: OrthonormalSystem,
    space: MixSpace,
    size: int,
    rng: np.random.Generator,
    support=None,
    boundary: bool = False,
) -> np.ndarray:
    """Coefficient vectors of points of the mixed-norm unit ball.

    Directions are isotropic in coefficients; radii are scaled by the exact
    boundary factor (rejection-free, valid in any dimension). With
    `boundary`, points sit on the unit sphere of the norm.
    """
    basis = sys.values if support is None else sys.values[np.asarray(list(support), dtype=int)]
    d = basis.shape[0]
    a = rng.standard_normal((size, d)) + 1j * rng.standard_normal((size, d))
    t = np.asarray(mix_norm(a @ basis, space, sys))
    r = np.ones(size) if boundary else rng.random(size) ** (1.0 / (2.0 * d))
    return a * (r / t)[:, None]
