"""Binary-valuation obstruction on Kochen-Specker sets and the intensive bypass.

:func:`search_binary_valuation` decides by exhaustive backtracking whether a
{0,1} assignment exists that puts exactly one 1 in every context and never
two 1s on orthogonal vectors. :func:`intensive_certificate` evaluates a
state's potentia on the same vectors and checks every context sums to one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, QLabError, UnverifiedInstanceError
from .graph import build_power_graph, enumerate_contexts
from .linalg import DEFAULT_TOL, Power, check_tol
from .valuation import IntensiveState, ValidationReport, potentia


@dataclass(frozen=True, eq=False)
class KsInstance:
    """Rank-one power directions plus (optionally) their contexts.

    ``contexts`` is ``None`` when the instance was supplied without them;
    they are then derived during verification.
    """

    vectors: np.ndarray
    contexts: tuple[tuple[int, ...], ...] | None = None
    name: str | None = None

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise DimensionError(f"vectors must form an (n, dim) array, got shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        if self.contexts is not None:
            ctxs = tuple(tuple(int(i) for i in c) for c in self.contexts)
            bad = [i for c in ctxs for i in c if not 0 <= i < v.shape[0]]
            if bad:
                raise QLabError(f"context indices out of range: {sorted(set(bad))}")
            object.__setattr__(self, "contexts", ctxs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def powers(self, tol: float = DEFAULT_TOL) -> list[Power]:
        return [
            Power(np.outer(v, v.conj()), label=f"v{i}", tol=tol)
            for i, v in enumerate(self.vectors)
        ]

    def orthogonality(self, tol: float = DEFAULT_TOL) -> np.ndarray:
        gram = np.abs(self.vectors.conj() @ self.vectors.T)
        orth = gram <= tol
        np.fill_diagonal(orth, False)
        return orth


def verify_instance(inst: KsInstance, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Hygiene checks on an instance; never raises, failures go in the report.

    ``info["contexts"]`` holds the contexts to use downstream: the supplied
    ones, or the derived ones if none were supplied.
    """
    tol = check_tol(tol)
    rep = ValidationReport()
    d = inst.dim
    norms = np.linalg.norm(inst.vectors, axis=1)
    for i, nm in enumerate(norms):
        dev = abs(float(nm) - 1.0)
        if dev > tol:
            rep.add("unit-norm", False, vector=i, deviation=dev)
    units_ok = rep.passed
    rep.add("unit-norm", units_ok, count=len(inst))

    orth = inst.orthogonality(tol)
    eye = np.eye(d)
    supplied = inst.contexts
    for c, ctx in enumerate(supplied or ()):
        if len(ctx) != d or len(set(ctx)) != len(ctx):
            rep.add("context-size", False, context=c, size=len(ctx),
                    reason="incomplete resolution" if len(ctx) < d else "wrong member count")
            continue
        pair_ok = all(orth[a, b] for k, a in enumerate(ctx) for b in ctx[k + 1:])
        rep.add("context-orthogonal", pair_ok, context=c)
        total = sum(np.outer(inst.vectors[m], inst.vectors[m].conj()) for m in ctx)
        dev = float(np.linalg.norm(total - eye))
        rep.add("context-complete", dev <= tol, context=c, deviation=dev)

    derived = None
    if units_ok:
        try:
            g = build_power_graph(inst.powers(tol), tol)
        except QLabError as exc:
            rep.add("derivation", False, reason=str(exc))
        else:
            derived = enumerate_contexts(g, tol)
    if derived is not None:
        rep.info["derived_context_count"] = len(derived)
        if supplied is not None:
            same = sorted(tuple(sorted(c)) for c in supplied) == derived
            rep.add("contexts-match-derived", same,
                    supplied=len(supplied), derived=len(derived))
        contexts = list(supplied) if supplied is not None else derived
        rep.info["contexts"] = [list(c) for c in contexts]
        counts = [0] * len(inst)
        for ctx in contexts:
            for m in ctx:
                counts[m] += 1
        rep.info["contexts_per_vector"] = counts
    return rep


@dataclass
class SearchStats:
    nodes: int = 0
    wall_time_ms: float = 0.0
    searches: int = 0


@dataclass
class BinaryValuation:
    assignment: tuple[int, ...]

    def ones(self) -> list[int]:
        return [i for i, a in enumerate(self.assignment) if a]


@dataclass
class _Problem:
    n: int
    contexts: list[tuple[int, ...]]
    nbrs: list[list[int]]
    stats: SearchStats = field(default_factory=SearchStats)


def _propagate(pb: _Problem, vals: np.ndarray) -> bool:
    """Fixpoint of the context and exclusion rules; False on conflict."""
    changed = True
    while changed:
        changed = False
        for i in np.flatnonzero(vals == 1):
            for j in pb.nbrs[i]:
                if vals[j] == 1:
                    return False
                if vals[j] == -1:
                    vals[j] = 0
                    changed = True
        for ctx in pb.contexts:
            cv = vals[list(ctx)]
            ones = int((cv == 1).sum())
            if ones > 1:
                return False
            free = [m for m, x in zip(ctx, cv) if x == -1]
            if ones == 1:
                if free:
                    vals[free] = 0
                    changed = True
            elif not free:
                return False
            elif len(free) == 1:
                vals[free[0]] = 1
                changed = True
    return True


def _solve(pb: _Problem, vals: np.ndarray) -> np.ndarray | None:
    pb.stats.nodes += 1
    vals = vals.copy()
    if not _propagate(pb, vals):
        return None
    best, best_free = None, None
    for ctx in pb.contexts:
        cv = vals[list(ctx)]
        if (cv == 1).any():
            continue
        free = [m for m, x in zip(ctx, cv) if x == -1]
        if best_free is None or len(free) < len(best_free):
            best, best_free = ctx, free
    if best is None:
        vals[vals == -1] = 0
        return vals
    for m in best_free:
        trial = vals.copy()
        trial[m] = 1
        out = _solve(pb, trial)
        if out is not None:
            return out
    return None


def search_binary_valuation(
    inst: KsInstance, tol: float = DEFAULT_TOL
) -> tuple[BinaryValuation | None, SearchStats]:
    """Exhaustive search for a binary valuation on a verified instance.

    Branches on the open context with the fewest free members, propagating
    one-per-context and orthogonal-exclusion rules. When a valuation exists
    the returned witness places its 1s as early as possible: vectors are
    fixed in index order, each set to 1 whenever some completion still
    exists, which yields the lexicographically greatest 0/1 string.
    """
    rep = verify_instance(inst, tol)
    if not rep.passed:
        raise UnverifiedInstanceError(
            f"instance failed verification: {rep.failures[:3]}"
        )
    orth = inst.orthogonality(tol)
    pb = _Problem(
        n=len(inst),
        contexts=[tuple(c) for c in rep.info["contexts"]],
        nbrs=[list(np.flatnonzero(orth[i])) for i in range(len(inst))],
    )
    start = time.perf_counter()
    vals = np.full(pb.n, -1, dtype=np.int8)
    pb.stats.searches += 1
    found = _solve(pb, vals)
    if found is not None:
        for i in range(pb.n):
            trial = vals.copy()
            trial[i] = 1
            pb.stats.searches += 1
            vals[i] = 1 if _solve(pb, trial) is not None else 0
        if not _propagate(pb, vals):
            raise AssertionError("witness construction reached a conflict")
    pb.stats.wall_time_ms = (time.perf_counter() - start) * 1e3
    if found is None:
        return None, pb.stats
    return BinaryValuation(tuple(int(x) for x in vals)), pb.stats


def check_valuation(inst: KsInstance, contexts: Sequence[Sequence[int]],
                    assignment: Sequence[int], tol: float = DEFAULT_TOL) -> bool:
    """Both valuation rules, checked directly against the instance."""
    a = list(assignment)
    if len(a) != len(inst) or any(x not in (0, 1) for x in a):
        return False
    if any(sum(a[m] for m in ctx) != 1 for ctx in contexts):
        return False
    orth = inst.orthogonality(tol)
    ones = [i for i, x in enumerate(a) if x]
    return not any(orth[i, j] for k, i in enumerate(ones) for j in ones[k + 1:])


@dataclass
class CertificateReport:
    potentia: list[float]
    contexts: list[list[int]]
    context_sums: list[float]
    max_deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "potentia": self.potentia,
            "contexts": self.contexts,
            "context_sums": self.context_sums,
        }


def intensive_certificate(
    state: IntensiveState, inst: KsInstance, tol: float = DEFAULT_TOL
) -> CertificateReport:
    """One global intensive valuation, checked on every context at once."""
    if state.dim != inst.dim:
        raise DimensionError(f"state has dim {state.dim}, instance has dim {inst.dim}")
    rep = verify_instance(inst, tol)
    if not rep.passed:
        raise UnverifiedInstanceError(f"instance failed verification: {rep.failures[:3]}")
    values = [potentia(state, p, tol) for p in inst.powers(tol)]
    contexts = rep.info["contexts"]
    sums = [float(sum(values[m] for m in ctx)) for ctx in contexts]
    dev = max((abs(s - 1.0) for s in sums), default=0.0)
    return CertificateReport(values, contexts, sums, dev, dev <= tol)


def flat_enumeration(inst: KsInstance, contexts: Sequence[Sequence[int]],
                     tol: float = DEFAULT_TOL, chunk: int = 65536) -> tuple[int, int]:
    """Brute-force cross-check: try every choice of one member per context.

    Shares no code with the backtracking search. Returns ``(candidates,
    valid)``, where a candidate is valid when the chosen vectors form a
    binary valuation: every context has exactly one chosen member and no
    two chosen vectors are orthogonal.
    """
    ctxs = [np.asarray(c, dtype=np.intp) for c in contexts]
    n = len(inst)
    orth = inst.orthogonality(tol)
    pairs = np.argwhere(np.triu(orth))
    sizes = [len(c) for c in ctxs]
    total = int(np.prod(sizes)) if ctxs else 1
    valid = 0
    for lo in range(0, total, chunk):
        flat = np.arange(lo, min(lo + chunk, total))
        picks = np.stack(np.unravel_index(flat, sizes), axis=1) if ctxs else np.zeros((1, 0), int)
        ones = np.zeros((len(flat), n), dtype=bool)
        rows = np.arange(len(flat))
        for c, ctx in enumerate(ctxs):
            ones[rows, ctx[picks[:, c]]] = True
        ok = np.ones(len(flat), dtype=bool)
        for ctx in ctxs:
            ok &= ones[:, ctx].sum(axis=1) == 1
        for i, j in pairs:
            ok &= ~(ones[:, i] & ones[:, j])
        valid += int(ok.sum())
    return total, valid
