"""Nonlinear least squares for the simulator's empirical curve shapes.

Three model families cover every fitted curve the simulator produces:

* ``tanh``       -- A + B*tanh((x-C)/w), single threshold step
* ``multi_tanh`` -- A + sum_i B_i*tanh((x-C_i)/w_i), staircase of steps
* ``gaussian``   -- B*exp(-w*(t-C)^2), transient peak

The solver is a damped (Levenberg-Marquardt) least-squares iteration with
analytic Jacobians; step widths w are kept positive by optimizing log(w)
internally while all reported parameters and Jacobians are in natural
units.  Also provides heuristic initialization and a finite-difference
susceptibility (max |dy/dx|) extractor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_ITERATIONS = 200
DAMPING_INIT = 1e-3
DAMPING_FACTOR = 10.0
DAMPING_MAX = 1e12
RESIDUAL_RTOL = 1e-10
GRADIENT_TOL = 1e-10


# ---------------------------------------------------------------------------
# model definitions: value + analytic Jacobian in natural parameters
# ---------------------------------------------------------------------------

def _sech2(u: np.ndarray) -> np.ndarray:
    """sech(u)**2 without overflow for large |u| (underflows to 0)."""
    e = np.exp(-np.abs(u))
    return (2.0 * e / (1.0 + e * e)) ** 2


def tanh_value(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    a, b, c, w = params
    return a + b * np.tanh((x - c) / w)


def tanh_jacobian(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    _, b, c, w = params
    u = (x - c) / w
    sech2 = _sech2(u)
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = np.tanh(u)
    jac[:, 2] = -b * sech2 / w
    jac[:, 3] = -b * sech2 * u / w
    return jac


def multi_tanh_value(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = np.full_like(np.asarray(x, dtype=float), params[0])
    for b, c, w in params[1:].reshape(-1, 3):
        y += b * np.tanh((x - c) / w)
    return y


def multi_tanh_jacobian(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    jac = np.empty((x.size, params.size))
    jac[:, 0] = 1.0
    for i, (b, c, w) in enumerate(params[1:].reshape(-1, 3)):
        u = (x - c) / w
        sech2 = _sech2(u)
        jac[:, 1 + 3 * i] = np.tanh(u)
        jac[:, 2 + 3 * i] = -b * sech2 / w
        jac[:, 3 + 3 * i] = -b * sech2 * u / w
    return jac


def gaussian_value(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    b, c, w = params
    return b * np.exp(-w * (x - c) ** 2)


def gaussian_jacobian(params: np.ndarray, x: np.ndarray) -> np.ndarray:
    b, c, w = params
    d = x - c
    e = np.exp(-w * d**2)
    jac = np.empty((x.size, 3))
    jac[:, 0] = e
    jac[:, 1] = 2.0 * b * w * d * e
    jac[:, 2] = -b * d**2 * e
    return jac


@dataclass(frozen=True)
class _ModelSpec:
    value: callable
    jacobian: callable
    param_names: tuple[str, ...]
    positive: tuple[int, ...]  # indices constrained > 0 (log-parameterized)
    variadic: bool = False

    def n_params_ok(self, n: int) -> bool:
        if self.variadic:
            return n >= 4 and (n - 1) % 3 == 0
        return n == len(self.param_names)

    def names(self, n: int) -> tuple[str, ...]:
        if not self.variadic:
            return self.param_names
        out = ["A"]
        for i in range((n - 1) // 3):
            out += [f"B{i + 1}", f"C{i + 1}", f"omega{i + 1}"]
        return tuple(out)

    def positive_indices(self, n: int) -> tuple[int, ...]:
        if not self.variadic:
            return self.positive
        return tuple(range(3, n, 3))


MODELS: dict[str, _ModelSpec] = {
    "tanh": _ModelSpec(tanh_value, tanh_jacobian, ("A", "B", "C", "omega"), (3,)),
    "multi_tanh": _ModelSpec(multi_tanh_value, multi_tanh_jacobian, (), (), variadic=True),
    "gaussian": _ModelSpec(gaussian_value, gaussian_jacobian, ("B", "C", "omega"), (2,)),
}


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``params`` is the fitted natural-parameter vector (multi-tanh
    components sorted by ascending center).  ``residual_norm`` is the
    2-norm of the residual vector; ``rms`` divides it by sqrt(n_points).
    ``covariance_diag`` holds per-parameter variance estimates;
    unidentifiable directions are reported as inf.
    """

    model_kind: str
    params: np.ndarray
    param_names: tuple[str, ...]
    residual_norm: float
    n_points: int
    iterations: int
    converged: bool
    covariance_diag: np.ndarray
    message: str = ""
    ssr_history: list = field(default_factory=list)

    @property
    def rms(self) -> float:
        return self.residual_norm / np.sqrt(self.n_points)

    def __getitem__(self, name: str) -> float:
        return float(self.params[self.param_names.index(name)])

    def predict(self, x) -> np.ndarray:
        return MODELS[self.model_kind].value(self.params, np.asarray(x, dtype=float))


def _to_internal(params: np.ndarray, positive: tuple[int, ...]) -> np.ndarray:
    theta = params.astype(float).copy()
    theta[list(positive)] = np.log(theta[list(positive)])
    return theta


def _to_natural(theta: np.ndarray, positive: tuple[int, ...]) -> np.ndarray:
    params = theta.copy()
    params[list(positive)] = np.exp(params[list(positive)])
    return params


def _covariance_diag(jac: np.ndarray, ssr: float, n: int, p: int) -> np.ndarray:
    """Per-parameter variance from the natural-parameter Jacobian.

    Directions with (numerically) zero curvature are unidentifiable and
    get inf, not the zeros a pseudo-inverse would silently produce.
    """
    a = jac.T @ jac
    s, v = np.linalg.eigh(a)
    smax = s[-1] if s.size else 0.0
    tol = max(smax, 1.0) * np.finfo(float).eps * p * 100
    sigma2 = ssr / (n - p) if n > p else np.inf
    diag = np.zeros(p)
    for i in range(p):
        weights = v[i, :] ** 2
        deficient = s < tol
        if np.any(deficient & (weights > 1e-12)):
            diag[i] = np.inf
        else:
            diag[i] = sigma2 * float(np.sum(weights / np.maximum(s, tol)))
    return diag


def _sort_multi_tanh(params: np.ndarray) -> np.ndarray:
    comps = params[1:].reshape(-1, 3)
    order = np.argsort(comps[:, 1])
    return np.concatenate([[params[0]], comps[order].ravel()])


def fit(model_kind: str, xs, ys, init) -> FitResult:
    """Damped least-squares fit of ``model_kind`` to (xs, ys) from ``init``.

    Uses Levenberg-Marquardt damping on the Gauss-Newton normal equations
    with analytic Jacobians; accepted steps strictly decrease the residual
    norm.  Deterministic given ``init``.  A singular or stagnant system
    yields converged=False with a diagnostic message rather than an
    exception.
    """
    if model_kind not in MODELS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    spec = MODELS[model_kind]
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    p0 = np.asarray(init, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if not np.isfinite(x).all():
        raise ValueError("xs must be finite")
    if not spec.n_params_ok(p0.size):
        raise ValueError(f"{model_kind} expects a different parameter count, got {p0.size}")
    if x.size < p0.size:
        raise ValueError(f"need at least {p0.size} points, got {x.size}")
    positive = spec.positive_indices(p0.size)
    if np.any(p0[list(positive)] <= 0):
        raise ValueError("width parameters must be positive")

    n, p = x.size, p0.size
    theta = _to_internal(p0, positive)
    params = p0.copy()
    resid = spec.value(params, x) - y
    ssr = float(resid @ resid)
    lam = DAMPING_INIT
    history = [ssr]
    converged = False
    message = "maximum iterations reached"
    iterations = 0

    for iterations in range(1, MAX_ITERATIONS + 1):
        jac_nat = spec.jacobian(params, x)
        # chain rule d/d(log w) = w * d/dw for log-parameterized widths
        jac = jac_nat.copy()
        for idx in positive:
            jac[:, idx] *= params[idx]
        grad = jac.T @ resid
        if np.max(np.abs(grad)) < GRADIENT_TOL:
            converged = True
            message = "gradient norm below tolerance"
            break
        a = jac.T @ jac
        diag = np.maximum(np.diag(a), 1e-12)

        stepped = False
        while lam <= DAMPING_MAX:
            try:
                delta = np.linalg.solve(a + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= DAMPING_FACTOR
                continue
            if not np.isfinite(delta).all():
                lam *= DAMPING_FACTOR
                continue
            trial_theta = theta + delta
            trial_params = _to_natural(trial_theta, positive)
            with np.errstate(all="ignore"):  # wild trials may over/underflow
                trial_resid = spec.value(trial_params, x) - y
                trial_ssr = float(trial_resid @ trial_resid)
            if np.isfinite(trial_ssr) and trial_ssr < ssr:
                rel_drop = (ssr - trial_ssr) / max(ssr, np.finfo(float).tiny)
                theta, params, resid = trial_theta, trial_params, trial_resid
                ssr = trial_ssr
                history.append(ssr)
                lam = max(lam / DAMPING_FACTOR, 1e-15)
                stepped = True
                if rel_drop < RESIDUAL_RTOL:
                    converged = True
                    message = "relative residual change below tolerance"
                break
            lam *= DAMPING_FACTOR
        if converged:
            break
        if not stepped:
            # no damping level yields an improving step; report best point
            converged = ssr == 0.0
            message = "damping limit reached without an accepting step"
            break

    if model_kind == "multi_tanh":
        params = _sort_multi_tanh(params)
    cov = _covariance_diag(spec.jacobian(params, x), ssr, n, p)
    return FitResult(
        model_kind=model_kind,
        params=params,
        param_names=spec.names(p),
        residual_norm=float(np.sqrt(ssr)),
        n_points=n,
        iterations=iterations,
        converged=converged,
        covariance_diag=cov,
        message=message,
        ssr_history=history,
    )


# ---------------------------------------------------------------------------
# initialization heuristics
# ---------------------------------------------------------------------------

def _separated_peaks(x: np.ndarray, mag: np.ndarray, k: int) -> np.ndarray:
    """Locations of the k largest local maxima of ``mag`` that are at
    least (x-range)/(4k) apart, largest first."""
    interior = np.arange(1, x.size - 1)
    is_peak = (mag[interior] >= mag[interior - 1]) & (mag[interior] >= mag[interior + 1])
    candidates = interior[is_peak]
    if candidates.size == 0:
        candidates = np.array([int(np.argmax(mag))])
    order = candidates[np.argsort(mag[candidates])[::-1]]
    min_sep = (x[-1] - x[0]) / (4.0 * k)
    kept: list[int] = []
    for idx in order:
        if all(abs(x[idx] - x[j]) >= min_sep for j in kept):
            kept.append(int(idx))
        if len(kept) == k:
            break
    if len(kept) < k:
        raise ValueError(
            f"found {len(kept)} separated derivative peak(s), "
            f"need {k} to initialize a {k}-component multi_tanh"
        )
    return np.array(sorted(kept, key=lambda i: x[i]))


def auto_init(model_kind: str, xs, ys, components: int = 1) -> np.ndarray:
    """Heuristic starting parameters for :func:`fit`.

    tanh: A from the midpoint of the y-extremes, C at the steepest point,
    B signed by the slope there, w from the half-excursion width.
    gaussian: C at the argmax, B at the peak, w from the half-maximum
    width.  multi_tanh: one (B, C, w) per separated derivative peak;
    raises if fewer than ``components`` peaks exist.
    """
    if model_kind not in MODELS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least 3 points to initialize")
    span = x[-1] - x[0]
    if span == 0:
        raise ValueError("xs must span a nonzero range")
    ymin, ymax = float(np.min(y)), float(np.max(y))
    a = 0.5 * (ymin + ymax)

    if model_kind == "gaussian":
        peak = int(np.argmax(y))
        b = y[peak] if y[peak] != 0 else 1.0
        above = np.flatnonzero(y > 0.5 * y[peak])
        width = x[above[-1]] - x[above[0]] if above.size > 1 else abs(span) / 10
        width = abs(width) if width != 0 else abs(span) / 10
        w = np.log(2.0) / (0.5 * width) ** 2
        return np.array([b, x[peak], w])

    deriv = np.gradient(y, x)
    mag = np.abs(deriv)

    if model_kind == "tanh":
        steep = int(np.argmax(mag))
        c = x[steep]
        b = 0.5 * (ymax - ymin)
        if b == 0:
            b = 1e-3  # flat data: keep the model well-defined
        if deriv[steep] < 0:
            b = -b
        half = np.flatnonzero(np.abs(y - a) < 0.5 * (ymax - ymin) / 2)
        w = (x[half[-1]] - x[half[0]]) / 2 if half.size > 1 else abs(span) / 10
        w = abs(w) if w != 0 else abs(span) / 10
        return np.array([a, b, c, w])

    # multi_tanh
    k = components
    if k < 1:
        raise ValueError("components must be >= 1")
    peaks = _separated_peaks(x, mag, k)
    centers = x[peaks]
    # the k steps split the x-range into k+1 plateau regions; sample the
    # middle half of each region to stay clear of the transitions
    bounds = np.concatenate([[x[0]], centers, [x[-1]]])
    plateaus = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        pad = 0.25 * (hi - lo)
        seg = y[(x >= lo + pad) & (x <= hi - pad)]
        if seg.size == 0:
            seg = y[np.argmin(np.abs(x - 0.5 * (lo + hi))) : None][:1]
        plateaus.append(float(np.median(seg)))
    amps = [0.5 * (plateaus[i + 1] - plateaus[i]) for i in range(k)]
    a0 = 0.5 * (plateaus[0] + plateaus[-1])
    w0 = abs(span) / (10.0 * k)
    params = [a0]
    for b_i, c_i in zip(amps, centers):
        params += [b_i if b_i != 0 else 1e-3, c_i, w0]
    return np.array(params)


def susceptibility(curve) -> tuple[float, float]:
    """Location and magnitude of the maximum |dy/dx| along a curve.

    ``curve`` is a sequence of (x, y) pairs with strictly monotone x.
    Uses central finite differences in the interior and one-sided
    differences at the ends; exact ties resolve to the smallest x.
    """
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("curve must be at least 3 (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    dx = np.diff(x)
    if np.any(dx == 0):
        raise ValueError("duplicate x values in curve")
    if not (np.all(dx > 0) or np.all(dx < 0)):
        raise ValueError("x values must be strictly monotone")
    d = np.empty_like(y)
    d[0] = (y[1] - y[0]) / (x[1] - x[0])
    d[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
    d[1:-1] = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    mag = np.abs(d)
    best = np.flatnonzero(mag == mag.max())
    idx = best[np.argmin(x[best])]
    return float(x[idx]), float(mag[idx])
