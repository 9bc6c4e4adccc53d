"""Experimental arrangements: a lab state seen through screens and detectors.

A factorization ``(i_1, ..., i_n)`` splits the lab space into screens. Each
screen carries a detector basis, stored as a unitary whose *columns* are the
detector kets. The arrangement's coefficient matrix ``alpha`` holds
``<k|rho|k'>`` over the product basis, with multi-indices flattened
row-major (screen 0 slowest). Screen indices are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, NotUnitaryError, QLabError
from .linalg import (
    DEFAULT_TOL,
    Power,
    check_tol,
    check_unitary,
    dagger,
    embed,
    fnorm,
    make_projector,
    partial_trace,
    random_unitary,
    tensor,
    unitarity_deviation,
)
from .valuation import IntensiveState, clamp_unit, potentia


def check_factorization(factor_dims: Sequence[int], dim: int | None = None) -> tuple[int, ...]:
    dims = tuple(int(d) for d in factor_dims)
    if not dims:
        raise QLabError("factorization needs at least one screen")
    if any(d < 2 for d in dims):
        raise QLabError(f"every screen needs at least 2 detectors, got {list(dims)}")
    if dim is not None and int(np.prod(dims)) != dim:
        raise DimensionError(
            f"factorization {list(dims)} has product {int(np.prod(dims))}, lab has dim {dim}"
        )
    return dims


def factorizations(dim: int) -> list[tuple[int, ...]]:
    """All ordered factorizations of ``dim`` into screens of size >= 2."""
    if dim < 2:
        return []
    out = [(dim,)]
    for d in range(2, dim):
        if dim % d == 0:
            out.extend((d,) + rest for rest in factorizations(dim // d))
    return sorted(out)


def standard_bases(factor_dims: Sequence[int]) -> tuple[np.ndarray, ...]:
    return tuple(np.eye(d, dtype=complex) for d in factor_dims)


@dataclass(frozen=True, eq=False)
class ExperimentalArrangement:
    lab: IntensiveState
    factor_dims: tuple[int, ...]
    bases: tuple[np.ndarray, ...]
    alpha: np.ndarray

    @property
    def degree(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def screens(self) -> int:
        return len(self.factor_dims)

    @property
    def product_basis(self) -> np.ndarray:
        """Unitary whose columns are the product detector kets ``|k_1...k_n>``."""
        return tensor(self.bases)

    def multi_indices(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(d) for d in self.factor_dims)))

    def flat_index(self, multi_index: Sequence[int]) -> int:
        mi = tuple(int(k) for k in multi_index)
        if len(mi) != self.screens or any(not 0 <= k < d for k, d in zip(mi, self.factor_dims)):
            raise QLabError(f"multi-index {list(mi)} out of range for screens {list(self.factor_dims)}")
        return int(np.ravel_multi_index(mi, self.factor_dims))

    def power_of_action(self, multi_index: Sequence[int]) -> Power:
        col = self.product_basis[:, self.flat_index(multi_index)]
        return make_projector(col, label="".join(str(k) for k in multi_index))

    def state_from_alpha(self) -> np.ndarray:
        """Recover the lab's density operator from ``alpha`` and the bases alone."""
        u = self.product_basis
        return u @ self.alpha @ dagger(u)


def _check_bases(bases: Sequence, factor_dims: Sequence[int], tol: float) -> tuple[np.ndarray, ...]:
    if len(bases) != len(factor_dims):
        raise DimensionError(f"{len(bases)} detector bases for {len(factor_dims)} screens")
    out = []
    for k, (b, d) in enumerate(zip(bases, factor_dims)):
        b = np.array(b, dtype=complex)
        if b.shape != (d, d):
            raise DimensionError(f"screen {k}: basis has shape {b.shape}, expected ({d}, {d})")
        dev = unitarity_deviation(b)
        if dev > tol:
            raise NotUnitaryError(dev, f"screen {k}: detector basis is not orthonormal "
                                       f"(||B B^dag - I||_F = {dev:.3g})")
        b.flags.writeable = False
        out.append(b)
    return tuple(out)


def build_arrangement(
    lab: IntensiveState,
    factor_dims: Sequence[int],
    bases: Sequence | None = None,
    tol: float = DEFAULT_TOL,
) -> ExperimentalArrangement:
    """Arrangement with ``alpha = U^dag rho U`` for the product detector basis ``U``.

    ``bases`` defaults to the standard basis on each screen.
    """
    tol = check_tol(tol)
    dims = check_factorization(factor_dims, lab.dim)
    bases = standard_bases(dims) if bases is None else _check_bases(bases, dims, tol)
    u = tensor(bases)
    alpha = dagger(u) @ lab.rho @ u
    alpha.flags.writeable = False
    return ExperimentalArrangement(lab, dims, bases, alpha)


def power_effect(ea: ExperimentalArrangement, multi_index: Sequence[int],
                 tol: float = DEFAULT_TOL) -> float:
    """Potentia of the power of action ``|k_1...k_n><k_1...k_n|``: a diagonal of alpha."""
    i = ea.flat_index(multi_index)
    return clamp_unit(float(ea.alpha[i, i].real), check_tol(tol))


def arrangement_potentia(ea: ExperimentalArrangement, p: Power, tol: float = DEFAULT_TOL) -> float:
    """Potentia of an arbitrary power, computed from ``alpha`` rather than the lab."""
    if p.dim != ea.degree:
        raise DimensionError(f"power has dim {p.dim}, arrangement has degree {ea.degree}")
    u = ea.product_basis
    val = float(np.real(np.sum(ea.alpha * (dagger(u) @ p.op @ u).T)))
    return clamp_unit(val, check_tol(tol))


def rebase(ea: ExperimentalArrangement, unitaries: Sequence, tol: float = DEFAULT_TOL) -> ExperimentalArrangement:
    """Rotate each screen's detectors: new kets are ``W_k`` applied to the old ones."""
    tol = check_tol(tol)
    if len(unitaries) != ea.screens:
        raise DimensionError(f"{len(unitaries)} unitaries for {ea.screens} screens")
    new = []
    for k, (w, b) in enumerate(zip(unitaries, ea.bases)):
        w = check_unitary(w, tol)
        if w.shape != b.shape:
            raise DimensionError(f"screen {k}: unitary has shape {w.shape}, screen has dim {b.shape[0]}")
        new.append(w @ b)
    return build_arrangement(ea.lab, ea.factor_dims, new, tol)


def derive_subarrangement(ea: ExperimentalArrangement, keep: Iterable[int]) -> ExperimentalArrangement:
    """Arrangement over the kept screens, obtained by tracing out the others.

    The product structure of the detector basis means tracing ``alpha``
    directly gives the sub-arrangement's ``alpha``.
    """
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise QLabError("keep must name at least one screen")
    if any(not 0 <= k < ea.screens for k in keep):
        raise QLabError(f"screen indices {keep} out of range for {ea.screens} screens")
    if len(keep) == ea.screens:
        return ea
    dims = [ea.factor_dims[k] for k in keep]
    alpha = partial_trace(ea.alpha, ea.factor_dims, keep)
    rho = partial_trace(ea.lab.rho, ea.factor_dims, keep)
    return ExperimentalArrangement(
        IntensiveState((rho + dagger(rho)) / 2),
        tuple(dims),
        tuple(ea.bases[k] for k in keep),
        alpha,
    )


@dataclass
class KnowledgeReport:
    degree: int
    screens: int
    parameters: int
    purity: float

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "screens": self.screens,
            "parameters": self.parameters,
            "purity": self.purity,
            "note": "parameter count is fixed by the degree alone; purity does not enter",
        }


def arrangement_knowledge(ea: ExperimentalArrangement) -> KnowledgeReport:
    """Independent real parameters fixed by the arrangement: ``N^2 - 1``."""
    n = ea.degree
    return KnowledgeReport(n, ea.screens, n * n - 1, ea.lab.purity)


def _probe_powers(ea: ExperimentalArrangement, other: ExperimentalArrangement,
                  rng: np.random.Generator, extra: int) -> list[Power]:
    """Powers of action of both arrangements plus a few random rank-one powers."""
    probes = [a.power_of_action(mi) for a in (ea, other) for mi in a.multi_indices()]
    for _ in range(extra):
        z = rng.standard_normal(ea.degree) + 1j * rng.standard_normal(ea.degree)
        probes.append(make_projector(z / np.linalg.norm(z)))
    return probes


def basis_invariance_trial(lab: IntensiveState, factor_dims: Sequence[int],
                           rng: np.random.Generator, extra: int = 4) -> dict:
    """Random per-screen rotations; compare potentia computed from either alpha."""
    ea = build_arrangement(lab, factor_dims, [random_unitary(d, rng) for d in factor_dims])
    rb = rebase(ea, [random_unitary(d, rng) for d in ea.factor_dims])
    dev = 0.0
    for p in _probe_powers(ea, rb, rng, extra):
        a = arrangement_potentia(ea, p)
        b = arrangement_potentia(rb, p)
        direct = potentia(lab, p)
        dev = max(dev, abs(a - b), abs(a - direct))
    herm = max(fnorm(x.alpha - dagger(x.alpha)) for x in (ea, rb))
    trace = max(abs(np.trace(x.alpha).real - 1.0) for x in (ea, rb))
    return {
        "factor_dims": list(ea.factor_dims),
        "max_deviation": dev,
        "degree_before": ea.degree,
        "degree_after": rb.degree,
        "alpha_hermiticity": herm,
        "alpha_trace_deviation": float(trace),
    }


def factorization_invariance_trial(lab: IntensiveState, factor_dims: Sequence[int],
                                   rng: np.random.Generator, extra: int = 4) -> dict:
    """Random kept-screen subset; sub-arrangement potentia vs embedded powers."""
    dims = check_factorization(factor_dims, lab.dim)
    ea = build_arrangement(lab, dims, [random_unitary(d, rng) for d in dims])
    n = len(dims)
    size = int(rng.integers(1, n + 1))
    keep = sorted(int(k) for k in rng.choice(n, size=size, replace=False))
    sub = derive_subarrangement(ea, keep)
    probes = [sub.power_of_action(mi) for mi in sub.multi_indices()]
    for _ in range(extra):
        z = rng.standard_normal(sub.degree) + 1j * rng.standard_normal(sub.degree)
        probes.append(make_projector(z / np.linalg.norm(z)))
    dev = 0.0
    for p in probes:
        big = Power(embed(p.op, dims, keep))
        dev = max(dev, abs(arrangement_potentia(sub, p) - arrangement_potentia(ea, big)))
    return {
        "factor_dims": list(dims),
        "keep": keep,
        "max_deviation": dev,
        "degree_before": ea.degree,
        "degree_after": sub.degree,
        "alpha_hermiticity": fnorm(sub.alpha - dagger(sub.alpha)),
        "alpha_trace_deviation": float(abs(np.trace(sub.alpha).real - 1.0)),
    }
