"""Master-equation propagation of a damped bosonic mode in a thermal reservoir.

The generator is applied directly as dense matrix products (the superoperator
is never materialized) and integrated in the interaction picture, so there is
no free-Hamiltonian commutator term. The adaptive Dormand-Prince 5(4) stepper
is the default; a fixed-step classical RK4 is kept for deterministic fixtures.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .errors import (
    InvalidParameterError,
    InvalidTimeError,
    StiffnessError,
    TruncationError,
)
from .fock import DensityMatrix, ladder_operators

# Trace drift beyond this level means the representation lost physical weight.
TRACE_DRIFT_LIMIT = 1e-6

# Output-state invariant tolerances (looser than the constructors').
_EVOLVE_HERM_TOL = 1e-10
_EVOLVE_TRACE_TOL = 1e-8
_EVOLVE_PSD_TOL = 1e-8


@dataclass(frozen=True)
class ChannelParams:
    """Physical parameters of the channel.

    gamma      -- field decay rate (1/s), strictly positive.
    beta_rate  -- thermal noise rate (1/s); the reservoir mean occupation is
                  beta_rate / gamma.
    m_squeeze  -- reservoir squeezing parameter, bounded by the physicality
                  condition |M|^2 <= N(N+1).
    n_bar      -- mean photon number of the input ensemble (dimensionless).
    """

    gamma: float
    beta_rate: float = 0.0
    m_squeeze: complex = 0j
    n_bar: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "beta_rate", float(self.beta_rate))
        object.__setattr__(self, "m_squeeze", complex(self.m_squeeze))
        object.__setattr__(self, "n_bar", float(self.n_bar))
        if not math.isfinite(self.gamma) or self.gamma <= 0.0:
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if not math.isfinite(self.beta_rate) or self.beta_rate < 0.0:
            raise InvalidParameterError(f"beta must be >= 0, got {self.beta_rate}")
        if not math.isfinite(self.n_bar) or self.n_bar < 0.0:
            raise InvalidParameterError(f"n_bar must be >= 0, got {self.n_bar}")
        n_res = self.beta_rate / self.gamma
        bound = n_res * (n_res + 1.0)
        if abs(self.m_squeeze) ** 2 > bound + 1e-12 * max(1.0, bound):
            raise InvalidParameterError(
                f"m_squeeze violates |M|^2 <= N(N+1): |{self.m_squeeze}|^2 > {bound:.6g}"
            )

    @property
    def reservoir_photons(self) -> float:
        """Mean occupation N of the reservoir mode."""
        return self.beta_rate / self.gamma


@dataclass(frozen=True)
class IntegratorOptions:
    """Step-control settings for `evolve`.

    method "rk45" is the adaptive Dormand-Prince pair; "rk4" takes fixed
    steps of size max_step (which must then be finite).
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = math.inf
    method: str = "rk45"

    def __post_init__(self):
        if not self.rel_tol > 0.0 or not self.abs_tol > 0.0:
            raise InvalidParameterError("integrator tolerances must be positive")
        if not self.max_step > 0.0:
            raise InvalidParameterError(f"max_step must be > 0, got {self.max_step}")
        if self.method not in ("rk45", "rk4"):
            raise InvalidParameterError(f"unknown integrator method {self.method!r}")
        if self.method == "rk4" and not math.isfinite(self.max_step):
            raise InvalidParameterError("fixed-step rk4 needs a finite max_step")


_PRODUCT_LOCK = threading.Lock()
_PRODUCT_CACHE: dict[int, SimpleNamespace] = {}


def _operator_products(dim: int) -> SimpleNamespace:
    with _PRODUCT_LOCK:
        ops = _PRODUCT_CACHE.get(dim)
        if ops is None:
            a, adag = ladder_operators(dim)
            ops = SimpleNamespace(
                a=a,
                adag=adag,
                number=adag @ a,
                anti_number=a @ adag,
                adag_sq=adag @ adag,
                a_sq=a @ a,
            )
            for mat in (ops.number, ops.anti_number, ops.adag_sq, ops.a_sq):
                mat.setflags(write=False)
            _PRODUCT_CACHE[dim] = ops
    return ops


def _drift_operator(ops: SimpleNamespace, params: ChannelParams) -> np.ndarray:
    # Hermitian drift A such that the generator reads
    # A rho + rho A + (sandwich terms); covers all anticommutator pieces.
    n_res = params.reservoir_photons
    m = params.m_squeeze
    drift = (n_res + 1.0) * ops.number + n_res * ops.anti_number
    if m != 0:
        drift = drift + m * ops.adag_sq + m.conjugate() * ops.a_sq
    return (-0.5 * params.gamma) * drift


def _rhs_matrix(
    rho: np.ndarray, ops: SimpleNamespace, drift: np.ndarray, params: ChannelParams
) -> np.ndarray:
    gamma = params.gamma
    n_res = params.reservoir_photons
    m = params.m_squeeze
    out = drift @ rho + rho @ drift
    a_rho = ops.a @ rho
    out += (gamma * (n_res + 1.0)) * (a_rho @ ops.adag)
    if n_res != 0.0 or m != 0:
        adag_rho = ops.adag @ rho
        if n_res != 0.0:
            out += (gamma * n_res) * (adag_rho @ ops.a)
        if m != 0:
            out += (gamma * m) * (adag_rho @ ops.adag)
            out += (gamma * m.conjugate()) * (a_rho @ ops.a)
    return out


def lindblad_rhs(rho: DensityMatrix, params: ChannelParams) -> DensityMatrix:
    """Right-hand side d(rho)/dt of the reservoir master equation.

    The result is traceless (exactly, by cyclicity of the truncated trace)
    and Hermitian for Hermitian input; it is a derivative, not a state.
    """
    ops = _operator_products(rho.dim)
    drift = _drift_operator(ops, params)
    return DensityMatrix(_rhs_matrix(rho.entries, ops, drift, params))


# Dormand-Prince 5(4) tableau (the propagated solution is 5th order).
_DP_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _error_ratio(err, y_old, y_new, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _check_trace(y: np.ndarray, t: float) -> None:
    drift = abs(np.trace(y) - 1.0)
    if not drift <= TRACE_DRIFT_LIMIT:
        raise TruncationError(
            f"trace drifted by {drift:.3e} at t={t:.6g}; "
            "the truncation dimension is insufficient for this evolution"
        )


def _hermitize(y: np.ndarray) -> np.ndarray:
    return 0.5 * (y + y.conj().T)


def _integrate_rk45(f, y, t0, t1, opts):
    span = t1 - t0
    rel_tol, abs_tol = opts.rel_tol, opts.abs_tol
    k1 = f(y)
    # Initial step from the size of the state and its derivative.
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = float(np.sqrt(np.mean(np.abs(y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean(np.abs(k1 / scale) ** 2)))
    h = 1e-6 * span if (d0 < 1e-8 or d1 < 1e-8) else 0.01 * d0 / d1
    h = min(h, span, opts.max_step)
    t = t0
    while t < t1:
        if h < 1e-14 * max(1.0, abs(t1)):
            raise StiffnessError(
                f"step size underflow at t={t:.6g} (h={h:.3e}); problem too stiff"
            )
        h_try = min(h, opts.max_step)
        final = h_try >= t1 - t
        if final:
            h_try = t1 - t
        ks = [k1]
        for row in _DP_A:
            stage = y + h_try * sum(c * k for c, k in zip(row, ks))
            ks.append(f(stage))
        y_new = y + h_try * sum(b * k for b, k in zip(_DP_B, ks) if b != 0.0)
        k7 = f(y_new)
        ks.append(k7)
        err = h_try * sum(e * k for e, k in zip(_DP_E, ks) if e != 0.0)
        ratio = _error_ratio(err, y, y_new, rel_tol, abs_tol)
        if math.isfinite(ratio) and ratio <= 1.0:
            t = t1 if final else t + h_try
            y = _hermitize(y_new)
            _check_trace(y, t)
            k1 = k7  # first-same-as-last reuse
            factor = _MAX_FACTOR if ratio == 0.0 else _SAFETY * ratio ** -0.2
        else:
            # Step rejected: y and k1 stay valid, only h shrinks.
            factor = _MIN_FACTOR if not math.isfinite(ratio) else _SAFETY * ratio ** -0.2
        h = h_try * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
    return y


def _integrate_rk4(f, y, t0, t1, opts):
    span = t1 - t0
    n_steps = max(1, math.ceil(span / opts.max_step))
    h = span / n_steps
    t = t0
    for _ in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = _hermitize(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t += h
        _check_trace(y, t)
    return y


def evolve_trajectory(
    rho0: DensityMatrix,
    params: ChannelParams,
    times,
    opts: IntegratorOptions | None = None,
) -> list[tuple[float, DensityMatrix]]:
    """Propagate rho0 and return the state at each requested time.

    `times` must be finite, nonnegative and nondecreasing; a single
    integration covers all of them. Every returned state is checked against
    the trajectory invariants (trace, Hermiticity, positivity).
    """
    opts = opts if opts is not None else IntegratorOptions()
    times = [float(t) for t in times]
    if not times:
        raise InvalidTimeError("no sample times given")
    previous = 0.0
    for t in times:
        if not math.isfinite(t) or t < 0.0:
            raise InvalidTimeError(f"sample times must be finite and >= 0, got {t}")
        if t < previous:
            raise InvalidTimeError("sample times must be nondecreasing")
        previous = t

    rho0.validate(herm_tol=_EVOLVE_HERM_TOL, trace_tol=math.inf, psd_tol=_EVOLVE_PSD_TOL)
    y = np.array(rho0.entries, dtype=complex)
    _check_trace(y, 0.0)

    ops = _operator_products(rho0.dim)
    drift = _drift_operator(ops, params)

    def f(mat):
        return _rhs_matrix(mat, ops, drift, params)

    stepper = _integrate_rk45 if opts.method == "rk45" else _integrate_rk4
    out: list[tuple[float, DensityMatrix]] = []
    t_now = 0.0
    for t in times:
        if t == 0.0:
            out.append((0.0, rho0))
            continue
        if t > t_now:
            y = stepper(f, y, t_now, t, opts)
            t_now = t
        state = DensityMatrix(y.copy()).validate(
            herm_tol=_EVOLVE_HERM_TOL,
            trace_tol=_EVOLVE_TRACE_TOL,
            psd_tol=_EVOLVE_PSD_TOL,
        )
        out.append((t, state))
    return out


def evolve(
    rho0: DensityMatrix,
    params: ChannelParams,
    t: float,
    opts: IntegratorOptions | None = None,
) -> DensityMatrix:
    """State of the channel output at time t for the input rho0."""
    return evolve_trajectory(rho0, params, [t], opts)[-1][1]
