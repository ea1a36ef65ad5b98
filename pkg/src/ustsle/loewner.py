"""Chordal Loewner evolution: ODE solves, slit-map unzipping, SLE(2) with partition-function drift."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import ellipj, ellipk, elliprf

from .linkpat import CoefficientTable, LinkPattern, left_to_right_orientation


# ---------------------------------------------------------------- square to half-plane


class SquareMap:
    """Conformal map from the unit square onto the upper half-plane.

    The square is sent onto the rectangle ``[-K, K] x [0, K']`` with
    ``K' = 2K`` and then through the Jacobi ``sn`` function.  The bottom side
    lands on ``[-1, 1]``, the vertical sides on ``±[1, 1/k]`` and the top
    midpoint at infinity.
    """

    def __init__(self):
        self.m = brentq(lambda m: ellipk(1 - m) / ellipk(m) - 2.0, 1e-6, 0.999)
        self.k = math.sqrt(self.m)
        self.K = float(ellipk(self.m))
        self.Kp = float(ellipk(1 - self.m))

    def _rect(self, p) -> np.ndarray:
        p = np.asarray(p)
        if np.iscomplexobj(p):
            x, y = p.real, p.imag
        else:
            x, y = p[..., 0], p[..., 1]
        if np.any((x < -1e-12) | (x > 1 + 1e-12) | (y < -1e-12) | (y > 1 + 1e-12)):
            raise ValueError("point outside the closed unit square")
        return 2 * self.K * (x - 0.5) + 1j * 2 * self.K * y

    def sn(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        s, c, d, _ = ellipj(w.real, self.m)
        s1, c1, d1, _ = ellipj(w.imag, 1 - self.m)
        den = c1**2 + self.m * s**2 * s1**2
        with np.errstate(divide="ignore", invalid="ignore"):
            return (s * d1 + 1j * c * d * s1 * c1) / den

    def __call__(self, p) -> np.ndarray:
        """Image of square points given as complex ``x+iy`` or an ``(..., 2)`` array."""
        z = self.sn(self._rect(p))
        return np.where(np.abs(z.imag) < 1e-13 * np.maximum(1, np.abs(z)), z.real + 0j, z)

    def inverse(self, z) -> np.ndarray:
        """Square point (as ``x+iy``) of a point of the closed upper half-plane."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.imag < -1e-12):
            raise ValueError("point below the real axis")
        # a vanishing upward nudge selects the branch for real arguments
        zu = z.real + 1j * np.maximum(z.imag, 1e-300)
        w = zu * elliprf(1 - zu**2, 1 - self.m * zu**2, 1.0 + 0j)
        with np.errstate(divide="ignore", invalid="ignore"):
            for _ in range(2):
                s, c, d, _ = self._sn_cn_dn(w)
                step = (s - z) / (c * d)
                w = np.where(np.isfinite(step) & (np.abs(step) < 1e-3), w - step, w)
        x = np.clip(w.real / (2 * self.K) + 0.5, 0.0, 1.0)
        y = np.clip(w.imag / (2 * self.K), 0.0, 1.0)
        return x + 1j * y

    def _sn_cn_dn(self, w):
        s, c, d, _ = ellipj(w.real, self.m)
        s1, c1, d1, _ = ellipj(w.imag, 1 - self.m)
        den = c1**2 + self.m * s**2 * s1**2
        sn = (s * d1 + 1j * c * d * s1 * c1) / den
        cn = (c * c1 - 1j * s * d * s1 * d1) / den
        dn = (d * c1 * d1 - 1j * self.m * s * c * s1) / den
        return sn, cn, dn, den

    def is_corner(self, p) -> bool:
        x, y = (p.real, p.imag) if isinstance(p, complex) else p
        return min(abs(x), abs(1 - x)) < 1e-12 and min(abs(y), abs(1 - y)) < 1e-12


_SQUARE = None


def square_to_halfplane(p) -> np.ndarray:
    global _SQUARE
    if _SQUARE is None:
        _SQUARE = SquareMap()
    return _SQUARE(p)


def halfplane_to_square(z) -> np.ndarray:
    global _SQUARE
    if _SQUARE is None:
        _SQUARE = SquareMap()
    return _SQUARE.inverse(z)


# ---------------------------------------------------------------- driving functions and the ODE


@dataclass(frozen=True, eq=False)
class DrivingFunction:
    """Piecewise-linear driving function on an increasing capacity grid starting at 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be matching 1-d arrays")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @classmethod
    def sample(cls, fn, t_end: float, n: int) -> DrivingFunction:
        t = np.linspace(0.0, t_end, n + 1)
        return cls(t, np.asarray(fn(t), dtype=float))


@dataclass(frozen=True)
class LoewnerResult:
    g: complex
    g_prime: complex
    swallow_time: float | None = None

    @property
    def swallowed(self) -> bool:
        return self.swallow_time is not None


def solve_loewner(
    driving: DrivingFunction,
    z: complex,
    t_end: float | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    swallow_dt: float | None = None,
) -> LoewnerResult:
    """Integrate ``g' = 2/(g-W)`` and ``(g')' = -2 g'/(g-W)^2`` from ``g_0 = z``.

    A point whose distance to the driving function drops below ``10*sqrt(dt)``
    (``dt`` the driving grid spacing unless given) is reported as swallowed.
    """
    t_end = driving.t_end if t_end is None else float(t_end)
    if t_end > driving.t_end * (1 + 1e-12):
        raise ValueError("t_end beyond the driving function")
    if t_end == 0:
        return LoewnerResult(complex(z), 1 + 0j)
    dt = swallow_dt if swallow_dt is not None else float(np.min(np.diff(driving.times)))
    thresh = 10 * math.sqrt(dt)

    def rhs(t, y):
        g = y[0] + 1j * y[1]
        gp = y[2] + 1j * y[3]
        d = g - driving(t)
        dg = 2 / d
        dgp = -2 * gp / d**2
        return [dg.real, dg.imag, dgp.real, dgp.imag]

    def hit(t, y):
        return abs(y[0] + 1j * y[1] - driving(t)) - thresh

    hit.terminal = True
    hit.direction = -1
    z = complex(z)
    if abs(z - driving.values[0]) < thresh:
        return LoewnerResult(z, 1 + 0j, 0.0)
    sol = solve_ivp(rhs, (0.0, t_end), [z.real, z.imag, 1.0, 0.0], method="DOP853", rtol=rtol, atol=atol, events=hit)
    if sol.status == 1 and sol.t_events[0].size:
        return LoewnerResult(complex("nan"), complex("nan"), float(sol.t_events[0][0]))
    if not sol.success:
        raise RuntimeError(sol.message)
    y = sol.y[:, -1]
    return LoewnerResult(y[0] + 1j * y[1], y[2] + 1j * y[3])


def zero_driving_map(z, t):
    """``sqrt(z^2 + 4t)`` on the branch with positive imaginary part."""
    r = np.sqrt(np.asarray(z, dtype=complex) ** 2 + 4 * t)
    return np.where(r.imag < 0, -r, r)


def hydrodynamic_residual(driving: DrivingFunction, z: complex, t: float | None = None) -> float:
    """``|g_t(z) - z - 2t/z|`` for a far-away point."""
    t = driving.t_end if t is None else t
    res = solve_loewner(driving, z, t)
    return abs(res.g - z - 2 * t / z)


# ---------------------------------------------------------------- slit maps


@nb.njit(cache=True)
def _slit_forward(z, x, y):
    """Vertical-slit mapping-out function of the slit from ``x`` to ``x+iy``."""
    d = z - x
    s = np.sqrt(d * d + y * y)
    if s.imag < 0 or (s.imag == 0 and s.real * d.real < 0):
        s = -s
    return x + s


@nb.njit(cache=True)
def _slit_inverse(w, x, four_dt):
    d = w - x
    s = np.sqrt(d * d - four_dt)
    if s.imag < 0 or (s.imag == 0 and s.real * d.real < 0):
        s = -s
    return x + s


@nb.njit(cache=True)
def _unzip(points, t_max):
    n = points.size
    pts = points.copy()
    times = np.zeros(n)
    values = np.zeros(n)
    x0 = pts[0].real
    values[0] = x0
    used = 1
    for k in range(1, n):
        p = pts[k]
        x, y = p.real, p.imag
        if y <= 0:
            break
        times[used] = times[used - 1] + y * y / 4
        values[used] = x
        used += 1
        if times[used - 1] >= t_max:
            break
        for i in range(k + 1, n):
            q = _slit_forward(pts[i], x, y)
            if q.imag < 0:
                q = complex(q.real, 0.0)
            pts[i] = q
    return times[:used], values[:used]


def extract_driving(curve: Sequence[complex], t_max: float = np.inf) -> DrivingFunction:
    """Driving function of a polyline in the upper half-plane starting on the real line.

    Each vertex is unzipped in turn with a vertical-slit map.  The curve is
    truncated at the first later vertex that touches the real line, or as
    soon as the capacity reaches ``t_max``.
    """
    pts = np.asarray(curve, dtype=complex)
    if pts.size < 2:
        raise ValueError("need at least two points")
    if abs(pts[0].imag) > 1e-12:
        raise ValueError("curve must start on the real line")
    pts[0] = pts[0].real
    t, w = _unzip(pts, float(t_max))
    if t.size < 2:
        raise ValueError("curve leaves the upper half-plane immediately")
    keep = np.concatenate([[True], np.diff(t) > 0])
    return DrivingFunction(t[keep], w[keep])


@nb.njit(cache=True)
def _trace(values, dt):
    n = values.size
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = values[0]
    four_dt = 4 * dt
    for k in range(n):
        w = complex(values[k], 0.0)
        for i in range(k, -1, -1):
            w = _slit_inverse(w, values[i], four_dt)
        out[k + 1] = w
    return out


def trace_from_driving(driving: DrivingFunction, n_steps: int) -> np.ndarray:
    """Curve points generated by ``n_steps`` equal-capacity vertical slits.

    The driving function is held constant on each step at its midpoint value;
    point ``k`` is the tip after ``k`` steps.
    """
    dt = driving.t_end / n_steps
    mids = driving((np.arange(n_steps) + 0.5) * dt)
    return _trace(np.asarray(mids, dtype=float), dt)


def halfplane_capacity(curve: Sequence[complex], radius: float = 1e4) -> float:
    """Capacity from the far-field expansion ``g(z) = z + 2 hcap / z + ...`` of the unzipped map."""
    pts = np.asarray(curve, dtype=complex)
    zs = radius * np.exp(1j * np.array([np.pi / 3, np.pi / 2, 2 * np.pi / 3]))
    est = []
    for z in zs:
        pts_all = np.concatenate([pts, [z]])
        pts_all[0] = pts_all[0].real
        img = _push(pts_all)
        est.append(((img - z) * z / 2).real)
    return float(np.mean(est))


@nb.njit(cache=True)
def _push_impl(pts):
    n = pts.size - 1
    z = pts[n]
    work = pts[:n].copy()
    for k in range(1, n):
        p = work[k]
        x, y = p.real, p.imag
        if y <= 0:
            break
        z = _slit_forward(z, x, y)
        for i in range(k + 1, n):
            q = _slit_forward(work[i], x, y)
            if q.imag < 0:
                q = complex(q.real, 0.0)
            work[i] = q
    return z


def _push(pts):
    return _push_impl(np.asarray(pts, dtype=np.complex128))


# ---------------------------------------------------------------- partition functions on batches


class BatchPartition:
    """Continuum partition function and its gradient on arrays of configurations."""

    def __init__(self, table: CoefficientTable, alpha: LinkPattern | str = "total"):
        self.table = table
        self.alpha = alpha
        rows = table.coeffs if alpha == "total" else (table.row(alpha),)
        self.weights = np.array([float(sum(r[b] for r in rows)) for b in range(len(table.patterns))])
        self.orients = [left_to_right_orientation(b) for b in table.patterns]

    @property
    def N(self) -> int:
        return self.table.N

    @property
    def ident(self) -> str:
        return f"N={self.N},alpha={self.alpha}"

    def value_and_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        P, n = x.shape
        N = self.N
        val = np.zeros(P)
        grad = np.zeros((P, n))
        for c, orient in zip(self.weights, self.orients):
            if c == 0:
                continue
            a = np.array([p[0] - 1 for p in orient])
            b = np.array([p[1] - 1 for p in orient])
            d = x[:, a][:, :, None] - x[:, b][:, None, :]
            M = 1.0 / (np.pi * d**2)
            dM = -2.0 / (np.pi * d**3)
            det = np.linalg.det(M)
            cof = _cofactors(M)
            val += c * det
            contrib = cof * dM
            for k in range(N):
                grad[:, a[k]] += c * contrib[:, k, :].sum(axis=1)
                grad[:, b[k]] -= c * contrib[:, :, k].sum(axis=1)
        return val, grad

    def __call__(self, x) -> np.ndarray:
        return self.value_and_grad(x)[0]

    def log_grad(self, x) -> np.ndarray:
        v, g = self.value_and_grad(x)
        return g / v[:, None]


def _cofactors(M: np.ndarray) -> np.ndarray:
    P, N, _ = M.shape
    if N == 1:
        return np.ones_like(M)
    out = np.empty_like(M)
    idx = np.arange(N)
    for k in range(N):
        for l in range(N):
            minor = M[:, idx != k][:, :, idx != l]
            out[:, k, l] = (-1) ** (k + l) * np.linalg.det(minor)
    return out


# ---------------------------------------------------------------- SLE(2) with partition-function drift


@dataclass(frozen=True)
class Localization:
    """Half-disc of radius ``radius`` around the starting point of the driven curve."""

    radius: float
    epsilon: float = 0.0

    def check(self, x0: Sequence[float], j: int) -> None:
        xj = x0[j - 1]
        for i, x in enumerate(x0, start=1):
            if i != j and abs(x - xj) <= self.radius + self.epsilon:
                raise ValueError("localization neighbourhood must stay away from the other marked points")


@dataclass(eq=False)
class SleEnsemble:
    """Simulated paths.  Time-indexed arrays have shape ``(n_paths, n_steps + 1)``."""

    x0: np.ndarray
    j: int
    kappa: float
    dt: float
    evaluator_id: str
    times: np.ndarray
    W: np.ndarray | None
    X_final: np.ndarray
    log_gprime_final: np.ndarray
    z_final: np.ndarray | None
    tau: np.ndarray
    stopped: np.ndarray
    failed: np.ndarray
    qv: np.ndarray
    W_final: np.ndarray
    X_path: np.ndarray | None = None
    gprime_path: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.W_final.size

    def write_csv(self, path: str | Path, martingale: np.ndarray | None = None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "tau", "W_tau", "QV", "martingale_value"])
            for i in range(self.n_paths):
                m = "" if martingale is None else f"{martingale[i]:.12g}"
                w.writerow([i, f"{self.tau[i]:.12g}", f"{self.W_final[i]:.12g}", f"{self.qv[i]:.12g}", m])

    def manifest(self, seed: int) -> dict:
        return {
            "seed": seed,
            "dt": self.dt,
            "N": len(self.x0) // 2,
            "x0": [float(v) for v in self.x0],
            "j": self.j,
            "kappa": self.kappa,
            "evaluator": self.evaluator_id,
            "n_paths": self.n_paths,
            "failed": int(self.failed.sum()),
        }


@nb.njit(cache=True)
def _tips(history, k, dt, check, out):
    """Tip after ``k`` vertical slits driven by the step midpoints, for paths flagged in ``check``."""
    four_dt = 4 * dt
    for p in range(history.shape[0]):
        if not check[p]:
            continue
        w = complex(0.5 * (history[p, k - 1] + history[p, k]), 0.0)
        for i in range(k - 1, -1, -1):
            w = _slit_inverse(w, 0.5 * (history[p, i] + history[p, i + 1]), four_dt)
        out[p] = w


def simulate_partition_sle(
    x0: Sequence[float],
    j: int,
    evaluator: BatchPartition,
    dt: float,
    rng: np.random.Generator,
    n_paths: int = 1,
    t_end: float | None = None,
    localization: Localization | None = None,
    kappa: float = 2.0,
    noise: bool = True,
    z: complex | Sequence[complex] | None = None,
    record: bool = True,
    record_driving: bool = False,
    collision_gap: float | None = None,
    max_steps: int = 10_000_000,
) -> SleEnsemble:
    """Driving process with drift ``kappa * d_j log Z`` and diffusion ``sqrt(kappa)``.

    Each step advances the deterministic part (drift of ``W``, the flow of the
    other marked points, the log-derivatives ``log g_t'(X_0^i)`` and the
    optional interior points ``z``) by one classical RK4 step, then adds the
    Brownian increment to ``W``.  With ``noise=False`` this is plain RK4 for
    the drift ODE.  Paths stop at ``t_end`` or when the tip of the discrete
    chain leaves the localization half-disc.

    ``record`` keeps every marked point and derivative along the paths;
    ``record_driving`` keeps only ``W``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if n != 2 * evaluator.N or np.any(np.diff(x0) <= 0):
        raise ValueError("x0 must hold 2N increasing points")
    if not 1 <= j <= n:
        raise ValueError("j out of range")
    if t_end is None and localization is None:
        raise ValueError("need t_end or a localization")
    if localization is not None:
        localization.check(x0, j)
    gap = collision_gap if collision_gap is not None else 10 * math.sqrt(dt)
    steps = int(round(t_end / dt)) if t_end is not None else max_steps
    jj = j - 1
    others = np.array([i for i in range(n) if i != jj])
    P = n_paths
    X = np.tile(x0, (P, 1))
    L = np.zeros((P, n))
    track_z = z is not None
    Z = np.tile(np.atleast_1d(np.asarray(z if track_z else 0j, dtype=complex)), (P, 1))
    active = np.ones(P, dtype=bool)
    stopped = np.zeros(P, dtype=bool)
    failed = np.zeros(P, dtype=bool)
    tau = np.full(P, np.nan)
    qv = np.zeros(P)
    sq = math.sqrt(kappa * dt)
    need_hist = localization is not None or record_driving
    hist_cap = steps if t_end is not None else 1024
    history = np.zeros((P, hist_cap + 1)) if (record or need_hist) else None
    if history is not None:
        history[:, 0] = x0[jj]
    xrec = [X.copy()] if record else None
    lrec = [L.copy()] if record else None
    tips = np.zeros(P, dtype=complex)
    sup_dev = np.zeros(P)

    def rhs(Xs, Zs):
        W = Xs[:, jj]
        val, grad = evaluator.value_and_grad(Xs)
        dX = np.zeros_like(Xs)
        dL = np.zeros_like(Xs)
        diff = Xs[:, others] - W[:, None]
        dX[:, others] = 2.0 / diff
        dL[:, others] = -2.0 / diff**2
        dX[:, jj] = kappa * grad[:, jj] / val
        dZ = 2.0 / (Zs - W[:, None]) if track_z else Zs * 0
        return dX, dL, dZ

    k = 0
    while k < steps and active.any():
        idx = np.flatnonzero(active)
        Xa, La, Za = X[idx], L[idx], Z[idx]
        k1 = rhs(Xa, Za)
        k2 = rhs(Xa + 0.5 * dt * k1[0], Za + 0.5 * dt * k1[2])
        k3 = rhs(Xa + 0.5 * dt * k2[0], Za + 0.5 * dt * k2[2])
        k4 = rhs(Xa + dt * k3[0], Za + dt * k3[2])
        Xn = Xa + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Ln = La + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        Zn = Za + dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if noise:
            Xn[:, jj] += sq * rng.standard_normal(idx.size)
        dW = Xn[:, jj] - Xa[:, jj]
        qv[idx] += dW**2
        X[idx], L[idx], Z[idx] = Xn, Ln, Zn
        k += 1
        if history is not None:
            if k >= history.shape[1]:
                history = np.concatenate([history, np.zeros_like(history)], axis=1)
            history[idx, k] = X[idx, jj]
        gaps = np.min(np.abs(Xn[:, others] - Xn[:, [jj]]), axis=1)
        order_ok = np.all(np.diff(Xn, axis=1) > 0, axis=1)
        bad = (gaps < gap) | ~order_ok | ~np.isfinite(Xn).all(axis=1)
        if track_z:
            bad |= np.abs(Zn - Xn[:, [jj]]).min(axis=1) < gap
        if bad.any():
            failed[idx[bad]] = True
            active[idx[bad]] = False
            tau[idx[bad]] = k * dt
        if localization is not None:
            # the hull lies within 4 max(sqrt(t), sup|W - W_0|) of W_0
            sup_dev[idx] = np.maximum(sup_dev[idx], np.abs(X[idx, jj] - x0[jj]))
            check = active & (4 * np.maximum(math.sqrt(k * dt), sup_dev) >= localization.radius)
            if check.any():
                _tips(history, k, dt, check, tips)
                out = check & (np.abs(tips - x0[jj]) >= localization.radius)
                stopped[out] = True
                active[out] = False
                tau[out] = k * dt
        if record:
            xrec.append(X.copy())
            lrec.append(L.copy())
    still = active & ~stopped
    tau[still] = k * dt
    stopped |= still
    W_path = history[:, : k + 1] if ((record or record_driving) and history is not None) else None
    return SleEnsemble(
        x0=x0,
        j=j,
        kappa=kappa,
        dt=dt,
        evaluator_id=evaluator.ident,
        times=np.arange(k + 1) * dt,
        W=W_path,
        X_final=X,
        log_gprime_final=L,
        z_final=Z if track_z else None,
        tau=tau,
        stopped=stopped,
        failed=failed,
        qv=qv,
        W_final=X[:, jj].copy(),
        X_path=np.stack(xrec, axis=1) if record else None,
        gprime_path=np.exp(np.stack(lrec, axis=1)) if record else None,
    )


def drift_ode_solution(x0: Sequence[float], j: int, evaluator: BatchPartition, t_end: float, times: np.ndarray, kappa: float = 2.0) -> np.ndarray:
    """Noise-free driving trajectory from an adaptive high-order ODE solve, at ``times``."""
    x0 = np.asarray(x0, dtype=float)
    jj = j - 1

    def rhs(t, x):
        X = x[None, :]
        val, grad = evaluator.value_and_grad(X)
        out = np.zeros_like(x)
        for i in range(x.size):
            out[i] = kappa * grad[0, jj] / val[0] if i == jj else 2.0 / (x[i] - x[jj])
        return out

    sol = solve_ivp(rhs, (0.0, t_end), x0, method="DOP853", rtol=1e-12, atol=1e-14, t_eval=times, dense_output=False)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[jj]


def sle_rho_drift(W: float, x_target: float, kappa: float = 2.0) -> float:
    """Drift ``rho/(W - x)`` of SLE(kappa, rho) with ``rho = kappa - 6``."""
    return (kappa - 6) / (W - x_target)


# ---------------------------------------------------------------- martingale observable


def cont_poisson_vec(z, x):
    z = np.asarray(z, dtype=complex)
    return z.imag / (np.pi * np.abs(z - x) ** 2)


def martingale_value(
    evaluator: BatchPartition,
    X: np.ndarray,
    j: int,
    g_z: np.ndarray,
    log_gprime: np.ndarray,
    omega: complex,
    x0: np.ndarray,
) -> np.ndarray:
    """Poisson kernel at the tip over the partition function, times the covariance factors."""
    X = np.atleast_2d(X)
    jj = j - 1
    W = X[:, jj]
    num = cont_poisson_vec(g_z, W)
    others = [i for i in range(X.shape[1]) if i != jj]
    factor = np.prod([cont_poisson_vec(omega, x0[i]) for i in others])
    return num / evaluator(X) * factor * np.exp(-log_gprime[:, others].sum(axis=1))


@dataclass(frozen=True)
class MartingaleCheck:
    """Stopped observable over the simulated paths against its starting value."""

    z: complex
    mean: float
    stderr: float
    m0: float
    n_failed: int
    values: np.ndarray = field(repr=False)

    @property
    def n_paths(self) -> int:
        return int(self.values.size)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    @property
    def z_score(self) -> float:
        return (self.mean - self.m0) / self.stderr if self.stderr > 0 else 0.0


def martingale_checks(
    evaluator: BatchPartition,
    x0: Sequence[float],
    j: int,
    zs: Sequence[complex],
    omega: complex,
    localization: Localization,
    n_paths: int,
    rng: np.random.Generator,
    dt: float = 1e-5,
    t_end: float | None = None,
    kappa: float = 2.0,
) -> list[MartingaleCheck]:
    """Monte Carlo mean of the stopped observable for several ``z`` sharing the same paths.

    Paths run until the tip leaves the localization half-disc (or ``t_end``).
    Paths flagged as failed (collisions, lost ordering) are excluded and counted.
    """
    x0 = np.asarray(x0, dtype=float)
    zs = [complex(z) for z in zs]
    for z in zs:
        if z.imag <= 0:
            raise ValueError("z must lie in the upper half-plane")
        if abs(z - x0[j - 1]) <= localization.radius + localization.epsilon:
            raise ValueError("z must lie outside the thickened localization neighbourhood")
    start = x0[None, :]
    m0 = [
        float(martingale_value(evaluator, start, j, np.array([z]), np.zeros((1, x0.size)), omega, x0)[0])
        for z in zs
    ]
    if t_end == 0:
        return [MartingaleCheck(z, m, 0.0, m, 0, np.full(n_paths, m)) for z, m in zip(zs, m0)]
    ens = simulate_partition_sle(
        x0, j, evaluator, dt, rng, n_paths=n_paths, t_end=t_end, localization=localization,
        kappa=kappa, z=zs, record=False,
    )
    ok = ~ens.failed
    out = []
    for k, z in enumerate(zs):
        vals = martingale_value(evaluator, ens.X_final[ok], j, ens.z_final[ok, k], ens.log_gprime_final[ok], omega, x0)
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
        out.append(MartingaleCheck(z, float(vals.mean()), se, m0[k], int(ens.failed.sum()), vals))
    return out


def martingale_check(
    evaluator: BatchPartition,
    x0: Sequence[float],
    j: int,
    z: complex,
    omega: complex,
    localization: Localization,
    n_paths: int,
    rng: np.random.Generator,
    dt: float = 1e-5,
    t_end: float | None = None,
    kappa: float = 2.0,
) -> MartingaleCheck:
    return martingale_checks(evaluator, x0, j, [z], omega, localization, n_paths, rng, dt, t_end, kappa)[0]


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True))
