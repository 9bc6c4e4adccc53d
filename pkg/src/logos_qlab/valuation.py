"""Intensive states of affairs, potentia, and checks of the valuation axioms.

An intensive state is carried by a density operator ``rho`` and evaluated on
a power ``P`` by the trace rule ``Tr(rho P)``. Explicit valuation tables
(:class:`GivTable`) are kept separate so that tables which do *not* come from
any density operator can still be checked against the axioms and rejected.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidStateError, PotentiaRangeError, QLabError
from .graph import Context, PowerGraph
from .linalg import DEFAULT_TOL, Power, as_ket, as_operator, check_tol, dagger, fnorm


@dataclass(frozen=True, eq=False)
class IntensiveState:
    """Density-operator realization of an intensive state of affairs."""

    rho: np.ndarray
    tol: InitVar[float] = DEFAULT_TOL

    def __post_init__(self, tol: float):
        rho = as_operator(self.rho, "rho")
        tol = check_tol(tol)
        herm = fnorm(rho - dagger(rho))
        if herm > tol:
            raise InvalidStateError("hermiticity deviation", herm)
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > tol:
            raise InvalidStateError("trace", tr.real, f"trace = {tr.real:.12g}")
        lo = float(np.linalg.eigvalsh((rho + dagger(rho)) / 2).min())
        if lo < -tol:
            raise InvalidStateError("min eigenvalue", lo)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_ket(cls, v, tol: float = DEFAULT_TOL) -> "IntensiveState":
        k = as_ket(v, tol)
        return cls(np.outer(k, k.conj()), tol=tol)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def clamp_unit(value: float, tol: float, what: str = "potentia") -> float:
    """Clamp ``value`` into [0, 1] if it lies within ``tol`` of the interval."""
    if value < -tol or value > 1.0 + tol:
        raise PotentiaRangeError(f"{what} {value:.12g} lies outside [0, 1] beyond tol {tol:g}")
    return min(1.0, max(0.0, value))


def potentia(state: IntensiveState, p: Power, tol: float = DEFAULT_TOL) -> float:
    """Intensity assigned to ``p``: ``Re Tr(rho P)`` clamped by at most ``tol``."""
    if state.dim != p.dim:
        raise DimensionError(f"state has dim {state.dim}, power has dim {p.dim}")
    # Tr(AB) as an elementwise sum avoids forming the product.
    val = float(np.real(np.sum(state.rho * p.op.T)))
    return clamp_unit(val, check_tol(tol))


@dataclass(frozen=True, eq=False)
class GivTable:
    """A global intensive valuation restricted to a finite graph of powers."""

    graph: PowerGraph
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(self.graph.powers):
            raise QLabError(
                f"table has {len(vals)} values for {len(self.graph.powers)} powers"
            )
        bad = [i for i, v in enumerate(vals) if not (0.0 <= v <= 1.0)]
        if bad:
            raise QLabError(f"values outside [0, 1] at indices {bad}")
        object.__setattr__(self, "values", vals)


def make_giv(state: IntensiveState, g: PowerGraph, tol: float = DEFAULT_TOL) -> GivTable:
    if state.dim != g.dim:
        raise DimensionError(f"state has dim {state.dim}, graph has dim {g.dim}")
    return GivTable(g, tuple(potentia(state, p, tol) for p in g.powers))


@dataclass
class ValidationReport:
    """Outcome of a batch of checks; ``passed`` is the conjunction of all checks."""

    checks: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, kind: str, ok: bool, **info) -> None:
        self.checks.append({"kind": kind, "passed": bool(ok), **info})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["passed"]]

    @property
    def max_deviation(self) -> float:
        devs = [c["deviation"] for c in self.checks if "deviation" in c]
        return max(devs) if devs else 0.0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "checks": self.checks,
            "notes": self.notes,
            "info": self.info,
        }


def _find_power(g: PowerGraph, op: np.ndarray, tol: float) -> int | None:
    for i, p in enumerate(g.powers):
        if float(np.abs(p.op - op).max()) <= tol:
            return i
    return None


def validate_isa(
    t: GivTable,
    contexts: Sequence[Context],
    tol: float = DEFAULT_TOL,
    families: Sequence[Sequence[int]] = (),
) -> ValidationReport:
    """Check normalization over each context and additivity over each family.

    For every context the sum of its values must be 1. For every family of
    pairwise-orthogonal powers whose sum is itself a pool member ``Q``, the
    value of ``Q`` must equal the sum of the family's values. If the identity
    is in the pool its value must be 1.
    """
    tol = check_tol(tol)
    g = t.graph
    n = len(g.powers)
    rep = ValidationReport()

    def _indices(members, what):
        members = tuple(int(m) for m in members)
        bad = [m for m in members if not 0 <= m < n]
        if bad:
            raise QLabError(f"{what} index out of range for {n} powers: {bad}")
        return members

    for ctx in contexts:
        ctx = _indices(ctx, "context")
        dev = abs(sum(t.values[m] for m in ctx) - 1.0)
        rep.add("context", dev <= tol, members=list(ctx), deviation=dev)

    eye = np.eye(g.dim)
    idx = _find_power(g, eye, tol)
    if idx is not None:
        dev = abs(t.values[idx] - 1.0)
        rep.add("identity", dev <= tol, members=[idx], deviation=dev)

    for fam in families:
        fam = _indices(fam, "family")
        ops = [g.powers[m].op for m in fam]
        pairwise = all(
            fnorm(ops[a] @ ops[b]) <= tol for a in range(len(ops)) for b in range(a + 1, len(ops))
        )
        if not pairwise:
            rep.notes.append(f"family {list(fam)} skipped: not pairwise orthogonal")
            continue
        q = _find_power(g, sum(ops), tol)
        if q is None:
            rep.notes.append(f"family {list(fam)} skipped: sum is not a pool member")
            continue
        dev = abs(t.values[q] - sum(t.values[m] for m in fam))
        rep.add("additivity", dev <= tol, members=list(fam), target=q, deviation=dev)
    return rep


def random_state(dim: int, purity: str = "pure", seed: int = 0) -> IntensiveState:
    """Seeded random state; ``pure`` is Haar-style, ``mixed`` is normalized ``G G^dag``."""
    if dim < 2:
        raise QLabError(f"random_state needs dim >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    if purity == "pure":
        z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        z /= np.linalg.norm(z)
        return IntensiveState(np.outer(z, z.conj()))
    if purity == "mixed":
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ dagger(g)
        rho = (rho + dagger(rho)) / 2
        return IntensiveState(rho / np.trace(rho).real)
    raise QLabError(f"purity must be 'pure' or 'mixed', got {purity!r}")
