"""Truncated Fock-space linear algebra for a single bosonic mode.

Everything lives on the space spanned by the number states |0>..|dim-1>.
The module provides the ladder operators, the canonical states (number,
coherent, thermal, displaced), the base-2 von Neumann entropy, and the
state-comparison metrics used by the integrator and the test suites.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidParameterError,
    NotAStateError,
    TruncationWarning,
)

# Default tolerances for the density-matrix invariant triple.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9

# Coherent-state truncation losses above this level trigger a warning.
COHERENT_LOSS_TOL = 1e-6

# Eigenvalues at or below this level contribute nothing to the entropy.
_ENTROPY_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Density operator on a truncated Fock space.

    Immutable after construction; `validate` checks the invariant triple
    (Hermiticity, unit trace, positivity) at configurable tolerances.
    """

    entries: np.ndarray

    def __post_init__(self):
        mat = np.array(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise InvalidDimensionError(
                f"density matrix must be square, got shape {mat.shape}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def validate(
        self,
        *,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = POSITIVITY_TOL,
    ) -> "DensityMatrix":
        """Check the invariant triple; return self or raise NotAStateError."""
        herm_dev = float(np.max(np.abs(self.entries - self.entries.conj().T)))
        if not herm_dev <= herm_tol:
            raise NotAStateError(
                f"not Hermitian: max deviation {herm_dev:.3e} > {herm_tol:.1e}"
            )
        trace_dev = abs(self.trace() - 1.0)
        if not trace_dev <= trace_tol:
            raise NotAStateError(
                f"trace deviates from 1 by {trace_dev:.3e} > {trace_tol:.1e}"
            )
        min_eig = _min_eigenvalue(self.entries)
        if not min_eig >= -psd_tol:
            raise NotAStateError(
                f"not positive semidefinite: min eigenvalue {min_eig:.3e} < -{psd_tol:.1e}"
            )
        return self


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state on a truncated Fock space.

    `truncation_loss` reports the probability weight lost to truncation by
    the constructor (zero for states that fit exactly).
    """

    amplitudes: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        vec = np.array(self.amplitudes, dtype=complex)
        if vec.ndim != 1 or vec.shape[0] < 1:
            raise InvalidDimensionError(
                f"state vector must be one-dimensional, got shape {vec.shape}"
            )
        vec.setflags(write=False)
        object.__setattr__(self, "amplitudes", vec)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _min_eigenvalue(mat: np.ndarray) -> float:
    # Exactly diagonal matrices (thermal and mixed states) skip the solver.
    if np.count_nonzero(mat - np.diag(np.diagonal(mat))) == 0:
        return float(np.min(np.diagonal(mat).real))
    return float(np.linalg.eigvalsh(mat)[0])


def _check_dim(dim) -> int:
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < 2:
        raise InvalidDimensionError(f"truncation dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


_LADDER_LOCK = threading.Lock()
_LADDER_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def ladder_operators(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices with <n-1|a|n> = sqrt(n).

    Cached per dimension; the returned arrays are read-only and shared.
    """
    dim = _check_dim(dim)
    with _LADDER_LOCK:
        cached = _LADDER_CACHE.get(dim)
        if cached is None:
            a = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
            adag = a.conj().T.copy()
            a.setflags(write=False)
            adag.setflags(write=False)
            cached = (a, adag)
            _LADDER_CACHE[dim] = cached
    return cached


def number_state(n: int, dim: int) -> StateVector:
    """Number state |n> on the truncated space."""
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"number state index {n} outside 0..{dim - 1}")
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return StateVector(vec)


def _coherent_amplitudes(eta: complex, dim: int) -> tuple[np.ndarray, float]:
    # Stable recurrence c_n = c_{n-1} * eta / sqrt(n) starting from the
    # vacuum overlap, instead of eta**n / sqrt(n!) which overflows early.
    eta = complex(eta)
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(eta) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * eta / math.sqrt(n)
    loss = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    return c, loss


def coherent_truncation_loss(eta: complex, dim: int) -> float:
    """Probability weight of |eta> lost beyond the first `dim` levels."""
    return _coherent_amplitudes(complex(eta), _check_dim(dim))[1]


def coherent_state(eta: complex, dim: int) -> StateVector:
    """Coherent state |eta> with amplitudes e^{-|eta|^2/2} eta^n / sqrt(n!).

    The amplitudes are not renormalized after truncation; the lost weight is
    reported on the returned state and a TruncationWarning is emitted when it
    exceeds COHERENT_LOSS_TOL.
    """
    dim = _check_dim(dim)
    amps, loss = _coherent_amplitudes(eta, dim)
    if loss > COHERENT_LOSS_TOL:
        warnings.warn(
            f"coherent state |{eta}> loses weight {loss:.3e} at dim={dim}; "
            f"suggest dim >= {suggested_dim(abs(eta) ** 2, abs(eta) ** 2)}",
            TruncationWarning,
            stacklevel=2,
        )
    return StateVector(amps, truncation_loss=loss)


def displacement_operator(alpha: complex, dim: int) -> np.ndarray:
    """Displacement matrix exp(alpha a+ - alpha* a).

    Computed by scaling-and-squaring matrix exponential of the truncated
    generator; exactly unitary on the truncated space because the generator
    stays anti-Hermitian after truncation.
    """
    dim = _check_dim(dim)
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(dim, dtype=complex)
    loss = coherent_truncation_loss(alpha, dim)
    if loss > COHERENT_LOSS_TOL:
        warnings.warn(
            f"displacement by {alpha} is truncated (loss {loss:.3e}) at dim={dim}",
            TruncationWarning,
            stacklevel=2,
        )
    a, adag = ladder_operators(dim)
    return expm(alpha * adag - alpha.conjugate() * a)


def projector(state: StateVector) -> DensityMatrix:
    """Rank-one density matrix |psi><psi| / <psi|psi>."""
    norm_sq = float(np.sum(np.abs(state.amplitudes) ** 2))
    if norm_sq <= 0.0:
        raise NotAStateError("cannot project a zero state vector")
    return DensityMatrix(np.outer(state.amplitudes, state.amplitudes.conj()) / norm_sq)


def thermal_state(n_th: float, dim: int) -> DensityMatrix:
    """Thermal state with mean occupation n_th, renormalized after truncation.

    Diagonal weights n_th^n / (1 + n_th)^{n+1}; choose `dim` so the truncated
    tail is negligible (see thermal_tail_dim).
    """
    dim = _check_dim(dim)
    n_th = float(n_th)
    if not math.isfinite(n_th) or n_th < 0.0:
        raise InvalidParameterError(f"thermal occupation must be >= 0, got {n_th}")
    if n_th == 0.0:
        return projector(number_state(0, dim))
    ratio = n_th / (1.0 + n_th)
    weights = (1.0 / (1.0 + n_th)) * ratio ** np.arange(dim)
    weights /= weights.sum()
    return DensityMatrix(np.diag(weights.astype(complex))).validate()


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Base-2 entropy -sum(lambda log2 lambda) over the eigenvalues of rho.

    Eigenvalues below the clipping floor are treated as exact zeros; an
    eigenvalue below -POSITIVITY_TOL means the input is not a state.
    """
    evals = np.linalg.eigvalsh(rho.entries)
    if float(evals[0]) < -POSITIVITY_TOL:
        raise NotAStateError(
            f"entropy of a non-positive matrix (min eigenvalue {evals[0]:.3e})"
        )
    evals = evals[evals > _ENTROPY_FLOOR]
    return float(-np.sum(evals * np.log2(evals)))


def fidelity_with_coherent(rho: DensityMatrix, eta: complex) -> float:
    """Overlap <eta| rho |eta> as a real number.

    The imaginary part of the raw matrix element must vanish to 1e-10; a
    larger value means rho is not Hermitian enough to be a state.
    """
    amps, loss = _coherent_amplitudes(complex(eta), rho.dim)
    if loss > COHERENT_LOSS_TOL:
        warnings.warn(
            f"fidelity with |{eta}> is truncated (loss {loss:.3e}) at dim={rho.dim}",
            TruncationWarning,
            stacklevel=2,
        )
    value = complex(np.vdot(amps, rho.entries @ amps))
    if abs(value.imag) > 1e-10:
        raise NotAStateError(
            f"coherent-state overlap has imaginary part {value.imag:.3e}"
        )
    return float(value.real)


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Half the trace norm of rho1 - rho2."""
    if rho1.dim != rho2.dim:
        raise DimensionMismatchError(
            f"trace distance between dim {rho1.dim} and dim {rho2.dim} states"
        )
    evals = np.linalg.eigvalsh(rho1.entries - rho2.entries)
    return float(0.5 * np.sum(np.abs(evals)))


def mean_photon_number(rho: DensityMatrix) -> float:
    """Expectation of the number operator, Tr(rho a+ a)."""
    return float(np.real(np.diagonal(rho.entries)) @ np.arange(rho.dim))


def field_amplitude(rho: DensityMatrix) -> complex:
    """Expectation of the annihilation operator, Tr(rho a)."""
    sub = np.diagonal(rho.entries, offset=-1)
    return complex(np.sum(np.sqrt(np.arange(1, rho.dim)) * sub))


def suggested_dim(mean_photons: float, variance: float) -> int:
    """Truncation heuristic: dim >= mean + 8 sqrt(variance + 1) + 10."""
    if mean_photons < 0 or variance < 0:
        raise InvalidParameterError("photon-number moments must be >= 0")
    return max(2, math.ceil(mean_photons + 8.0 * math.sqrt(variance + 1.0) + 10.0))


def thermal_tail_dim(n_th: float, tail: float = 1e-9) -> int:
    """Smallest dim whose truncated thermal tail weight is at most `tail`."""
    if n_th < 0:
        raise InvalidParameterError(f"thermal occupation must be >= 0, got {n_th}")
    if not 0.0 < tail < 1.0:
        raise InvalidParameterError(f"tail weight must be in (0, 1), got {tail}")
    if n_th == 0.0:
        return 2
    return max(2, math.ceil(math.log(tail) / math.log(n_th / (1.0 + n_th))))
