"""Sensor-system model catalog, path simulation, and pathwise statistics.

Every model in the catalog describes K continuous processes whose drifts
are linear in a single common parameter ``lam``.  Each sensor i carries a
weight process X_i; the running statistics of interest are

* ``B_i``  -- the stochastic integral of X_i against the sensor's path,
* ``A_i``  -- its quadratic variation (the information carried by sensor i),
* ``A_ij`` -- cross-variations between sensors,
* ``B``, ``A`` -- their totals, and ``M = B - lam * A``, a martingale.

Paths are simulated with Euler-Maruyama on a uniform grid.  Quadratic
(co)variations are accumulated from the model's diffusion coefficients,
not from realized squared increments, and every component that is
deterministic is evaluated in closed form so downstream bound audits are
exact at the grid points.

The exponential-integrability condition that makes the drifted law a
proper change of measure is assumed for every catalog model and is not
checked for user-supplied coefficient tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import lfilter

from .errors import GridMismatch, InvalidSpec, NumericalBlowup
from .timefuncs import TimeFunction, as_timefunction

__all__ = [
    "ModelKind",
    "ModelSpec",
    "TimeGrid",
    "SensorPaths",
    "PathStats",
    "Model",
    "build_model",
    "simulate_paths",
    "path_statistics",
]

DEFAULT_BLOWUP_CAP = 1e12


class ModelKind(str, Enum):
    BROWNIAN_CONSTANT = "brownian_constant"
    GAUSSIAN_DET_INFO = "gaussian_det_info"
    ORNSTEIN_UHLENBECK = "ornstein_uhlenbeck"
    SQUARE_ROOT_DIFFUSION = "square_root_diffusion"
    CORRELATED_DIFFUSION = "correlated_diffusion"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform simulation grid on [0, t_end] with n_steps intervals."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_end > 0 and np.isfinite(self.t_end)):
            raise InvalidSpec("t_end must be positive and finite")
        if self.n_steps < 1:
            raise InvalidSpec("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


def _as_matrix_of_timefunctions(entries, K, name):
    if entries is None:
        raise InvalidSpec(f"{name} matrix is required for this model kind")
    rows = tuple(tuple(as_timefunction(v) for v in row) for row in entries)
    if len(rows) != K or any(len(r) != K for r in rows):
        raise InvalidSpec(f"{name} must be a {K}x{K} matrix")
    return rows


def _add_timefunctions(f: TimeFunction, g: TimeFunction) -> TimeFunction:
    merged = tuple(sorted(set(f.breaks) | set(g.breaks)))
    edges = (0.0,) + merged
    coeffs = []
    for left in edges:
        ka = int(np.searchsorted(np.asarray(f.breaks), left, side="right"))
        kb = int(np.searchsorted(np.asarray(g.breaks), left, side="right"))
        s = npoly.polyadd(np.asarray(f.coeffs[ka]), np.asarray(g.coeffs[kb]))
        coeffs.append(tuple(float(v) for v in s))
    return TimeFunction(breaks=merged, coeffs=tuple(coeffs))


def _sum_timefunctions(fns):
    total = fns[0]
    for f in fns[1:]:
        total = _add_timefunctions(total, f)
    return total


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of a K-sensor system.

    Which optional fields are meaningful depends on ``kind``:

    * brownian_constant: ``x`` (nonzero weights); sensors are independent
      unit-variance noise plus drift lam*x_i*t.
    * gaussian_det_info: ``b`` (deterministic weight functions) and
      ``rho`` (instantaneous covariance matrix of the noise); all
      information processes are deterministic.
    * ornstein_uhlenbeck: ``alpha`` (positive constants); sensor i solves
      dY = lam*alpha_i*Y dt + sqrt(alpha_i) dW, independently.
    * square_root_diffusion: ``x`` and optional ``y0`` (start values);
      dY = lam*x_i*Y dt + sqrt(max(Y,0)) dW.  Started at 0 the process is
      absorbed there, so the default start is 1.0 per sensor.
    * correlated_diffusion: ``sigma`` (matrix of time functions); the
      weight process is the path itself and the noise is sigma(t) dW, so
      cross-variations with a nonzero diffusion product are random.

    ``deterministic_cross[i][j]`` declares which cross-variations the
    fusion side may treat as known in closed form.  It must be symmetric
    with a True diagonal; the diagonal is a fixed convention and carries
    no information (per-sensor randomness follows from the kind).
    """

    kind: ModelKind
    K: int
    x: tuple = None
    b: tuple = None
    rho: tuple = None
    alpha: tuple = None
    sigma: tuple = None
    deterministic_cross: tuple = None
    y0: tuple = None

    def to_dict(self) -> dict:
        d = {"kind": ModelKind(self.kind).value, "K": self.K}
        if self.x is not None:
            d["x"] = list(self.x)
        if self.b is not None:
            d["b"] = [f.to_dict() for f in self.b]
        if self.rho is not None:
            d["rho"] = [[f.to_dict() for f in row] for row in self.rho]
        if self.alpha is not None:
            d["alpha"] = list(self.alpha)
        if self.sigma is not None:
            d["sigma"] = [[f.to_dict() for f in row] for row in self.sigma]
        if self.deterministic_cross is not None:
            d["deterministic_cross"] = [list(row) for row in self.deterministic_cross]
        if self.y0 is not None:
            d["y0"] = list(self.y0)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        try:
            kind = ModelKind(d["kind"])
        except (KeyError, ValueError):
            raise InvalidSpec(f"unknown model kind: {d.get('kind')!r}")
        tf = as_timefunction
        return ModelSpec(
            kind=kind,
            K=int(d["K"]),
            x=tuple(float(v) for v in d["x"]) if "x" in d else None,
            b=tuple(tf(v) for v in d["b"]) if "b" in d else None,
            rho=tuple(tuple(tf(v) for v in row) for row in d["rho"]) if "rho" in d else None,
            alpha=tuple(float(v) for v in d["alpha"]) if "alpha" in d else None,
            sigma=tuple(tuple(tf(v) for v in row) for row in d["sigma"]) if "sigma" in d else None,
            deterministic_cross=tuple(
                tuple(bool(v) for v in row) for row in d["deterministic_cross"]
            )
            if "deterministic_cross" in d
            else None,
            y0=tuple(float(v) for v in d["y0"]) if "y0" in d else None,
        )


@dataclass(frozen=True)
class SensorPaths:
    """Simulated sensor paths on a grid.

    ``Y`` has shape (K, n_steps + 1).  All kinds start from 0 except the
    square-root diffusion, which starts from its configured ``y0``.
    """

    grid: TimeGrid
    Y: np.ndarray
    lambda_true: float
    seed: int

    def __post_init__(self):
        self.Y.flags.writeable = False


@dataclass(frozen=True)
class PathStats:
    """Pathwise sufficient statistics on the simulation grid.

    Arrays are indexed like the grid times.  ``A_ij`` is the full K x K
    stack of cross-variations; its diagonal equals ``A_i``.
    """

    grid: TimeGrid
    lambda_true: float
    B_i: np.ndarray
    A_i: np.ndarray
    A_ij: np.ndarray
    B: np.ndarray
    A: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        for a in (self.B_i, self.A_i, self.A_ij, self.B, self.A, self.M):
            a.flags.writeable = False

    def value_at(self, arr: np.ndarray, t):
        """Linear interpolation of a stored path array at times t."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.grid.t_end * (1 + 1e-12)):
            raise GridMismatch("evaluation time outside simulated horizon")
        out = np.interp(np.clip(t, 0.0, self.grid.t_end), self.grid.times(), arr)
        return out if out.ndim else float(out)


class Model:
    """A validated model: coefficient evaluators plus closed forms.

    Subclasses implement ``_setup`` (field validation), the simulation
    step, the weight-process values along a path, the instantaneous
    quadratic-variation density, and closed-form deterministic parts.
    """

    kind: ModelKind
    a_deterministic: bool
    a_i_deterministic: bool

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.K = spec.K
        self._setup(spec)
        mask = spec.deterministic_cross
        if mask is None:
            mask = self._default_cross_mask()
        self._validate_cross_mask(mask)
        self.cross_deterministic = np.asarray(mask, dtype=bool)
        off = ~self.cross_deterministic
        np.fill_diagonal(off, False)
        self.d_counts = off.sum(axis=1).astype(int)
        self._check_cross_closed_forms()

    def _setup(self, spec: ModelSpec):
        raise NotImplementedError

    def _default_cross_mask(self):
        return tuple(tuple(True for _ in range(self.K)) for _ in range(self.K))

    def _validate_cross_mask(self, mask):
        m = np.asarray(mask, dtype=bool)
        if m.shape != (self.K, self.K):
            raise InvalidSpec("deterministic_cross must be K x K")
        if not np.all(np.diag(m)):
            raise InvalidSpec("deterministic_cross diagonal must be all True")
        if not np.array_equal(m, m.T):
            raise InvalidSpec("deterministic_cross must be symmetric")

    def _check_cross_closed_forms(self):
        pass

    # -- interface implemented per kind ---------------------------------

    def simulate(self, lam: float, grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def x_values(self, Y: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Weight-process values X_i(t_k) along the path, shape (K, n+1)."""
        raise NotImplementedError

    def qv_density(self, Y: np.ndarray, times: np.ndarray) -> np.ndarray:
        """d<Y_i, Y_j>/dt along the path, shape (K, K, n+1)."""
        raise NotImplementedError

    def det_cross(self, i: int, j: int, t):
        """Closed-form A_ij(t) for an off-diagonal pair declared deterministic."""
        if not self.cross_deterministic[i, j]:
            raise InvalidSpec(f"cross-variation ({i},{j}) is random, no closed form")
        return np.zeros_like(np.asarray(t, dtype=float))

    def det_info_i(self, i: int, t):
        """Closed-form A_i(t); only valid when a_i_deterministic."""
        raise InvalidSpec("per-sensor information is random for this model")

    def det_info(self, t):
        """Closed-form total A(t); only valid when a_deterministic."""
        raise InvalidSpec("total information is random for this model")


class _BrownianConstantModel(Model):
    kind = ModelKind.BROWNIAN_CONSTANT
    a_deterministic = True
    a_i_deterministic = True

    def _setup(self, spec):
        if spec.x is None or len(spec.x) != spec.K:
            raise InvalidSpec("brownian_constant requires K weights x")
        if any(v == 0 for v in spec.x):
            raise InvalidSpec("weights x must be nonzero")
        self.x = np.asarray(spec.x, dtype=float)

    def _validate_cross_mask(self, mask):
        super()._validate_cross_mask(mask)
        if not np.all(np.asarray(mask, dtype=bool)):
            raise InvalidSpec("cross-variations are identically zero; mask must be all True")

    def simulate(self, lam, grid, rng):
        noise = rng.standard_normal((self.K, grid.n_steps)) * np.sqrt(grid.dt)
        Y = np.zeros((self.K, grid.n_steps + 1))
        Y[:, 1:] = np.cumsum(noise, axis=1)
        Y += lam * self.x[:, None] * grid.times()[None, :]
        return Y

    def x_values(self, Y, times):
        return np.broadcast_to(self.x[:, None], Y.shape).copy()

    def qv_density(self, Y, times):
        q = np.zeros((self.K, self.K, times.size))
        idx = np.arange(self.K)
        q[idx, idx, :] = 1.0
        return q

    def det_info_i(self, i, t):
        return self.x[i] ** 2 * np.asarray(t, dtype=float)

    def det_info(self, t):
        return float(np.sum(self.x**2)) * np.asarray(t, dtype=float)


class _GaussianDetInfoModel(Model):
    kind = ModelKind.GAUSSIAN_DET_INFO
    a_deterministic = True
    a_i_deterministic = True

    def _setup(self, spec):
        if spec.b is None or len(spec.b) != spec.K:
            raise InvalidSpec("gaussian_det_info requires K weight functions b")
        self.b = tuple(as_timefunction(f) for f in spec.b)
        self.rho = _as_matrix_of_timefunctions(spec.rho, spec.K, "rho")
        for i in range(self.K):
            for j in range(i + 1, self.K):
                if self.rho[i][j] != self.rho[j][i]:
                    raise InvalidSpec("rho must be symmetric")
        self._check_psd()
        self._cross_integrand = tuple(
            tuple(self.b[i] * self.b[j] * self.rho[i][j] for j in range(self.K))
            for i in range(self.K)
        )
        self._total_integrand = _sum_timefunctions(
            [self._cross_integrand[i][j] for i in range(self.K) for j in range(self.K)]
        )

    def _sample_times(self):
        breaks = sorted(
            {b for f in self.b for b in f.breaks}
            | {b for row in self.rho for f in row for b in f.breaks}
        )
        pts = [0.0] + breaks + [(breaks[-1] if breaks else 0.0) + 1.0]
        t = []
        for lo, hi in zip(pts, pts[1:]):
            t.extend(np.linspace(lo, hi, 5)[:-1])
        t.extend([pts[-1], pts[-1] + 10.0, pts[-1] + 100.0])
        return np.asarray(t)

    def _check_psd(self):
        # best-effort check at piece edges and a handful of interior points
        for t in self._sample_times():
            m = np.array([[self.rho[i][j](t) for j in range(self.K)] for i in range(self.K)])
            w = np.linalg.eigvalsh(m)
            if w.min() < -1e-9 * max(1.0, abs(w).max()):
                raise InvalidSpec(f"non-positive-semidefinite correlation at t={t}")

    def _rho_stack(self, times):
        stack = np.empty((times.size, self.K, self.K))
        for i in range(self.K):
            for j in range(self.K):
                stack[:, i, j] = self.rho[i][j](times)
        return stack

    def simulate(self, lam, grid, rng):
        dt = grid.dt
        tl = grid.times()[:-1]
        b_vals = np.stack([f(tl) for f in self.b])  # (K, n)
        rho = self._rho_stack(tl)  # (n, K, K)
        drift = lam * np.einsum("nij,jn->in", rho, b_vals) * dt
        w, V = np.linalg.eigh(rho)
        if w.min() < -1e-9 * max(1.0, float(abs(w).max())):
            raise InvalidSpec("correlation matrix not positive semidefinite along the grid")
        root = V * np.sqrt(np.clip(w, 0.0, None))[:, None, :]  # (n, K, K), root @ root^T = rho
        z = rng.standard_normal((grid.n_steps, self.K))
        incr = np.einsum("nij,nj->in", root, z) * np.sqrt(dt) + drift
        Y = np.zeros((self.K, grid.n_steps + 1))
        Y[:, 1:] = np.cumsum(incr, axis=1)
        return Y

    def x_values(self, Y, times):
        return np.stack([f(times) for f in self.b])

    def qv_density(self, Y, times):
        q = np.empty((self.K, self.K, times.size))
        for i in range(self.K):
            for j in range(self.K):
                q[i, j, :] = self.rho[i][j](times)
        return q

    def det_cross(self, i, j, t):
        if not self.cross_deterministic[i, j]:
            raise InvalidSpec(f"cross-variation ({i},{j}) is random, no closed form")
        return self._cross_integrand[i][j].integral(t)

    def det_info_i(self, i, t):
        return self._cross_integrand[i][i].integral(t)

    def det_info(self, t):
        return self._total_integrand.integral(t)


class _OrnsteinUhlenbeckModel(Model):
    kind = ModelKind.ORNSTEIN_UHLENBECK
    a_deterministic = False
    a_i_deterministic = False

    def _setup(self, spec):
        if spec.alpha is None or len(spec.alpha) != spec.K:
            raise InvalidSpec("ornstein_uhlenbeck requires K positive constants alpha")
        if any(a <= 0 for a in spec.alpha):
            raise InvalidSpec("alpha must be positive")
        self.alpha = np.asarray(spec.alpha, dtype=float)

    def _validate_cross_mask(self, mask):
        super()._validate_cross_mask(mask)
        if not np.all(np.asarray(mask, dtype=bool)):
            raise InvalidSpec("sensors are independent; mask must be all True")

    def simulate(self, lam, grid, rng):
        dt = grid.dt
        noise = rng.standard_normal((self.K, grid.n_steps))
        Y = np.zeros((self.K, grid.n_steps + 1))
        for i in range(self.K):
            a = 1.0 + lam * self.alpha[i] * dt
            e = np.sqrt(self.alpha[i] * dt) * noise[i]
            # linear Euler recursion y_k = a*y_{k-1} + e_k as an IIR filter
            Y[i, 1:] = lfilter([1.0], [1.0, -a], e)
        return Y

    def x_values(self, Y, times):
        return Y

    def qv_density(self, Y, times):
        q = np.zeros((self.K, self.K, times.size))
        idx = np.arange(self.K)
        q[idx, idx, :] = self.alpha[:, None]
        return q


class _SquareRootDiffusionModel(Model):
    kind = ModelKind.SQUARE_ROOT_DIFFUSION
    a_deterministic = False
    a_i_deterministic = False

    def _setup(self, spec):
        if spec.x is None or len(spec.x) != spec.K:
            raise InvalidSpec("square_root_diffusion requires K weights x")
        if any(v == 0 for v in spec.x):
            raise InvalidSpec("weights x must be nonzero")
        self.x = np.asarray(spec.x, dtype=float)
        y0 = spec.y0 if spec.y0 is not None else tuple(1.0 for _ in range(spec.K))
        if len(y0) != spec.K or any(v < 0 for v in y0):
            raise InvalidSpec("y0 must give K nonnegative start values")
        self.y0 = np.asarray(y0, dtype=float)

    def _validate_cross_mask(self, mask):
        super()._validate_cross_mask(mask)
        if not np.all(np.asarray(mask, dtype=bool)):
            raise InvalidSpec("sensors are independent; mask must be all True")

    def simulate(self, lam, grid, rng):
        dt = grid.dt
        sdt = np.sqrt(dt)
        noise = rng.standard_normal((self.K, grid.n_steps))
        Y = np.empty((self.K, grid.n_steps + 1))
        Y[:, 0] = self.y0
        y = self.y0.copy()
        for k in range(grid.n_steps):
            yp = np.maximum(y, 0.0)  # full truncation
            y = y + lam * self.x * yp * dt + np.sqrt(yp) * sdt * noise[:, k]
            Y[:, k + 1] = y
        return Y

    def x_values(self, Y, times):
        return np.broadcast_to(self.x[:, None], Y.shape).copy()

    def qv_density(self, Y, times):
        q = np.zeros((self.K, self.K, times.size))
        idx = np.arange(self.K)
        q[idx, idx, :] = np.maximum(Y, 0.0)
        return q


class _CorrelatedDiffusionModel(Model):
    kind = ModelKind.CORRELATED_DIFFUSION
    a_deterministic = False
    a_i_deterministic = False

    def _setup(self, spec):
        self.sigma = _as_matrix_of_timefunctions(spec.sigma, spec.K, "sigma")
        # instantaneous covariance sigma sigma^T, entrywise in closed form
        self.alpha_fn = tuple(
            tuple(
                _sum_timefunctions([self.sigma[i][k] * self.sigma[j][k] for k in range(self.K)])
                for j in range(self.K)
            )
            for i in range(self.K)
        )

    def _default_cross_mask(self):
        # a cross-variation is deterministic (identically zero) exactly
        # when the corresponding diffusion product vanishes
        return tuple(
            tuple(True if i == j else self.alpha_fn[i][j].is_zero for j in range(self.K))
            for i in range(self.K)
        )

    def _check_cross_closed_forms(self):
        for i in range(self.K):
            for j in range(self.K):
                if i != j and self.cross_deterministic[i, j] and not self.alpha_fn[i][j].is_zero:
                    raise InvalidSpec(
                        f"cross-variation ({i},{j}) flagged deterministic but its "
                        "diffusion product is nonzero; no closed form exists"
                    )

    def _matrix_stack(self, fns, times):
        stack = np.empty((times.size, self.K, self.K))
        for i in range(self.K):
            for j in range(self.K):
                stack[:, i, j] = fns[i][j](times)
        return stack

    def simulate(self, lam, grid, rng):
        dt = grid.dt
        sdt = np.sqrt(dt)
        tl = grid.times()[:-1]
        sig = self._matrix_stack(self.sigma, tl)
        alph = self._matrix_stack(self.alpha_fn, tl)
        noise = rng.standard_normal((grid.n_steps, self.K))
        Y = np.empty((self.K, grid.n_steps + 1))
        Y[:, 0] = 0.0
        y = np.zeros(self.K)
        for k in range(grid.n_steps):
            y = y + lam * dt * (alph[k] @ y) + sdt * (sig[k] @ noise[k])
            Y[:, k + 1] = y
        return Y

    def x_values(self, Y, times):
        return Y

    def qv_density(self, Y, times):
        q = np.empty((self.K, self.K, times.size))
        for i in range(self.K):
            for j in range(self.K):
                q[i, j, :] = self.alpha_fn[i][j](times)
        return q


_MODEL_CLASSES = {
    ModelKind.BROWNIAN_CONSTANT: _BrownianConstantModel,
    ModelKind.GAUSSIAN_DET_INFO: _GaussianDetInfoModel,
    ModelKind.ORNSTEIN_UHLENBECK: _OrnsteinUhlenbeckModel,
    ModelKind.SQUARE_ROOT_DIFFUSION: _SquareRootDiffusionModel,
    ModelKind.CORRELATED_DIFFUSION: _CorrelatedDiffusionModel,
}


def build_model(spec: ModelSpec) -> Model:
    """Validate a spec and return a model with coefficient evaluators.

    Raises InvalidSpec on zero weights, malformed or asymmetric masks, or
    a non-positive-semidefinite correlation table.
    """
    if spec.K < 1:
        raise InvalidSpec("K must be at least 1")
    kind = ModelKind(spec.kind)
    return _MODEL_CLASSES[kind](spec)


def simulate_paths(
    model: Model,
    lam: float,
    grid: TimeGrid,
    seed,
    cap: float = DEFAULT_BLOWUP_CAP,
) -> SensorPaths:
    """Simulate one replication of the sensor paths.

    The generator is seeded from ``seed`` alone (an int or a seed
    sequence), so identical (model, lam, grid, seed) inputs reproduce
    bit-identical paths.
    """
    rng = np.random.default_rng(seed)
    Y = model.simulate(float(lam), grid, rng)
    if not np.all(np.isfinite(Y)) or np.max(np.abs(Y)) > cap:
        raise NumericalBlowup(
            f"path magnitude exceeded {cap:g}; refine the grid or shorten the horizon"
        )
    return SensorPaths(grid=grid, Y=Y, lambda_true=float(lam), seed=seed)


def path_statistics(paths: SensorPaths, model: Model) -> PathStats:
    """Compute B_i, A_i, A_ij and their totals along a simulated path.

    Stochastic integrals are left-endpoint Riemann sums.  Deterministic
    information components come from closed forms; random ones accumulate
    the model's diffusion coefficients, so the per-step cross-variation
    bound |A_ij| <= (A_i + A_j)/2 holds exactly.
    """
    grid = paths.grid
    times = grid.times()
    K = model.K
    if paths.Y.shape != (K, times.size):
        raise GridMismatch("path array shape does not match grid and sensor count")
    dt = grid.dt
    Y = paths.Y
    X = model.x_values(Y, times)
    # the diffusion-coefficient stack is only needed for random components
    any_random = (not model.a_i_deterministic) or not np.all(model.cross_deterministic)
    q = model.qv_density(Y, times) if any_random else None

    dY = np.diff(Y, axis=1)
    B_i = np.zeros((K, times.size))
    B_i[:, 1:] = np.cumsum(X[:, :-1] * dY, axis=1)

    A_ij = np.empty((K, K, times.size))
    for i in range(K):
        for j in range(K):
            if i == j and model.a_i_deterministic:
                A_ij[i, j] = model.det_info_i(i, times)
            elif i != j and model.cross_deterministic[i, j]:
                A_ij[i, j] = model.det_cross(i, j, times)
            else:
                integ = X[i, :-1] * X[j, :-1] * q[i, j, :-1] * dt
                A_ij[i, j, 0] = 0.0
                A_ij[i, j, 1:] = np.cumsum(integ)
    A_i = np.array([A_ij[i, i] for i in range(K)])

    B = B_i.sum(axis=0)
    A = A_i.sum(axis=0)
    for i in range(K):
        for j in range(K):
            if i != j:
                A = A + A_ij[i, j]
    M = B - paths.lambda_true * A
    return PathStats(
        grid=grid, lambda_true=paths.lambda_true, B_i=B_i, A_i=A_i, A_ij=A_ij, B=B, A=A, M=M
    )
