"""Dense complex linear algebra and validated quantum objects.

Operators and kets are plain ``numpy`` arrays of dtype ``complex128``.
Everything returned from this module is marked read-only so values can be
shared freely. All norms are Frobenius norms.

Tensor factors are ordered row-major: the first factor carries the
slowest-varying index, matching ``numpy.kron``.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    NormalizationError,
    NotProjectorError,
    NotUnitaryError,
    QLabError,
)

DEFAULT_TOL = 1e-9


def check_tol(tol: float) -> float:
    tol = float(tol)
    if not (0.0 < tol < 1.0):
        raise QLabError(f"tolerance must lie in (0, 1), got {tol!r}")
    return tol


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_operator(m, name: str = "operator") -> np.ndarray:
    """Coerce ``m`` to a finite square complex matrix (a read-only copy)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise QLabError(f"{name} has non-finite entries")
    return _frozen(a)


def as_ket(v, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Coerce ``v`` to a unit-norm complex vector; raises on any other norm."""
    a = np.array(v, dtype=complex).reshape(-1)
    if a.size == 0:
        raise DimensionError("ket must have at least one amplitude")
    if not np.all(np.isfinite(a)):
        raise QLabError("ket has non-finite amplitudes")
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > check_tol(tol):
        raise NormalizationError(norm)
    return _frozen(a)


def fnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


@dataclass(frozen=True, eq=False)
class Power:
    """A projector (Hermitian and idempotent within ``tol``), optionally tagged."""

    op: np.ndarray
    label: str | None = None
    tol: InitVar[float] = DEFAULT_TOL

    def __post_init__(self, tol: float):
        op = as_operator(self.op, "power")
        tol = check_tol(tol)
        herm = fnorm(op - dagger(op))
        if herm > tol:
            raise NotProjectorError(f"power is not Hermitian (||P - P^dag||_F = {herm:.3g})")
        idem = fnorm(op @ op - op)
        if idem > tol:
            raise NotProjectorError(f"power is not idempotent (||P^2 - P||_F = {idem:.3g})")
        object.__setattr__(self, "op", op)

    @property
    def dim(self) -> int:
        return self.op.shape[0]

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.op).real))

    def __repr__(self) -> str:
        tag = f", label={self.label!r}" if self.label is not None else ""
        return f"Power(dim={self.dim}, rank={self.rank}{tag})"


def make_projector(v, label: str | None = None, tol: float = DEFAULT_TOL) -> Power:
    """Rank-one power ``|v><v|`` from a unit ket."""
    k = as_ket(v, tol)
    return Power(np.outer(k, k.conj()), label=label, tol=tol)


def identity_power(dim: int) -> Power:
    return Power(np.eye(dim, dtype=complex), label="I")


def _same_dim(p: Power, q: Power) -> None:
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")


def commutes(p: Power, q: Power, tol: float = DEFAULT_TOL) -> bool:
    _same_dim(p, q)
    return fnorm(p.op @ q.op - q.op @ p.op) <= check_tol(tol)


def orthogonal(p: Power, q: Power, tol: float = DEFAULT_TOL) -> bool:
    _same_dim(p, q)
    # ||pq||_F == ||qp||_F for Hermitian p, q, so the test is symmetric.
    return fnorm(p.op @ q.op) <= check_tol(tol)


def tensor(factors: Sequence) -> np.ndarray:
    """Kronecker product of ``factors`` in the given order."""
    mats = [np.asarray(f, dtype=complex) for f in factors]
    if not mats:
        raise QLabError("tensor needs at least one factor")
    return _frozen(reduce(np.kron, mats).astype(complex, copy=True))


def _check_keep(dims: Sequence[int], keep: Iterable[int]) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise QLabError("keep must name at least one factor")
    bad = [k for k in keep if not 0 <= k < len(dims)]
    if bad:
        raise QLabError(f"factor indices out of range for {len(dims)} factors: {bad}")
    return keep


def partial_trace(op, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (0-based factor indices).

    Kept factors appear in ascending index order in the result.
    """
    a = np.asarray(op, dtype=complex)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != a.shape[0] or a.ndim != 2:
        raise DimensionError(f"factor dims {dims} do not match operator of shape {a.shape}")
    keep = _check_keep(dims, keep)
    n = len(dims)
    t = a.reshape(dims + dims)
    # Trace discarded factors from the highest index down so lower axis
    # positions stay valid.
    for k in reversed(range(n)):
        if k in keep:
            continue
        t = np.trace(t, axis1=k, axis2=k + t.ndim // 2)
    kd = int(np.prod([dims[k] for k in keep]))
    return _frozen(t.reshape(kd, kd).copy())


def embed(op, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Place ``op`` (acting on the ``keep`` factors) into the full space as ``op (x) I``.

    This is the adjoint of :func:`partial_trace`:
    ``Tr(rho @ embed(P)) == Tr(partial_trace(rho) @ P)``.
    """
    dims = [int(d) for d in dims]
    keep = _check_keep(dims, keep)
    rest = [k for k in range(len(dims)) if k not in keep]
    kd = int(np.prod([dims[k] for k in keep]))
    a = np.asarray(op, dtype=complex)
    if a.shape != (kd, kd):
        raise DimensionError(f"operator of shape {a.shape} does not act on kept factors {keep}")
    rd = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(a, np.eye(rd, dtype=complex))
    # Axes of ``full`` are ordered (keep..., rest...); permute back to 0..n-1.
    order = keep + rest
    n = len(dims)
    t = full.reshape([dims[k] for k in order] * 2)
    inv = list(np.argsort(order))
    t = t.transpose(inv + [i + n for i in inv])
    total = int(np.prod(dims))
    return _frozen(t.reshape(total, total).copy())


def unitarity_deviation(u) -> float:
    u = np.asarray(u, dtype=complex)
    return fnorm(u @ dagger(u) - np.eye(u.shape[0]))


def check_unitary(u, tol: float = DEFAULT_TOL) -> np.ndarray:
    u = as_operator(u, "unitary")
    dev = unitarity_deviation(u)
    if dev > check_tol(tol):
        raise NotUnitaryError(dev)
    return u


def conjugate(op, u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Return ``u @ op @ u^dag`` after checking that ``u`` is unitary."""
    a = as_operator(op)
    u = check_unitary(u, tol)
    if a.shape != u.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {u.shape[0]}")
    return _frozen(u @ a @ dagger(u))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fixing."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return _frozen(q)


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return _frozen(z / np.linalg.norm(z))


HADAMARD = _frozen(np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2))
