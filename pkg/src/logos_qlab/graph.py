"""Graph of powers over a finite pool, orthogonality contexts, export."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DuplicatePowerError, PoolTooLargeError, QLabError
from .linalg import DEFAULT_TOL, Power, check_tol

POOL_CAP = 4096

# A context is a sorted tuple of pool indices.
Context = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PowerGraph:
    powers: tuple[Power, ...]
    edges: frozenset[tuple[int, int]]
    dim: int
    tol: float = DEFAULT_TOL

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self, i: int) -> list[int]:
        return sorted({b if a == i else a for a, b in self.edges if i in (a, b)})

    def stacked(self) -> np.ndarray:
        return np.stack([p.op for p in self.powers])


def _stack(pool: Sequence[Power]) -> np.ndarray:
    return np.stack([p.op for p in pool])


def _pairwise_norms(ops: np.ndarray, kind: str) -> np.ndarray:
    """Frobenius norms of ``P_i P_j - P_j P_i`` (kind='comm') or ``P_i P_j`` (kind='prod')."""
    n = ops.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        prod = np.einsum("ab,nbc->nac", ops[i], ops)
        if kind == "comm":
            prod = prod - np.einsum("nab,bc->nac", ops, ops[i])
        out[i] = np.linalg.norm(prod, axis=(1, 2))
    return out


def build_power_graph(
    pool: Sequence[Power], tol: float = DEFAULT_TOL, cap: int = POOL_CAP
) -> PowerGraph:
    """Vertices are the pool's powers in input order; edges join commuting pairs."""
    tol = check_tol(tol)
    pool = tuple(pool)
    if not pool:
        raise QLabError("power pool is empty")
    if len(pool) > cap:
        raise PoolTooLargeError(f"pool has {len(pool)} powers, cap is {cap}")
    dims = sorted({p.dim for p in pool})
    if len(dims) > 1:
        raise DimensionError(f"pool mixes dimensions {dims}")
    ops = _stack(pool)
    n = len(pool)

    dupes = []
    for i in range(n - 1):
        diff = np.abs(ops[i + 1:] - ops[i]).reshape(n - i - 1, -1)
        for j in np.flatnonzero(diff.max(axis=1) <= tol):
            dupes.append((i, i + 1 + int(j)))
    if dupes:
        raise DuplicatePowerError(dupes)

    comm = _pairwise_norms(ops, "comm")
    edges = frozenset(
        (i, j) for i in range(n) for j in range(i + 1, n) if comm[i, j] <= tol
    )
    return PowerGraph(powers=pool, edges=edges, dim=dims[0], tol=tol)


def orthogonality_matrix(g: PowerGraph, tol: float | None = None) -> np.ndarray:
    tol = g.tol if tol is None else check_tol(tol)
    orth = _pairwise_norms(g.stacked(), "prod") <= tol
    np.fill_diagonal(orth, False)
    return orth


def is_context(g: PowerGraph, members: Sequence[int], tol: float | None = None) -> bool:
    """Pairwise orthogonal members whose operator sum is the identity."""
    tol = g.tol if tol is None else check_tol(tol)
    members = list(members)
    if not members or len(set(members)) != len(members):
        return False
    orth = orthogonality_matrix(g, tol)
    if any(not orth[a, b] for k, a in enumerate(members) for b in members[k + 1:]):
        return False
    total = sum(g.powers[m].op for m in members)
    return float(np.linalg.norm(total - np.eye(g.dim))) <= tol


def enumerate_contexts(g: PowerGraph, tol: float | None = None) -> list[Context]:
    """All resolutions of the identity by pairwise-orthogonal pool members.

    Backtracking over the orthogonality relation in index order. Pairwise
    orthogonal projectors add their ranks, so a branch is cut as soon as the
    rank total would overshoot ``dim`` or the compatible remainder cannot
    cover the deficit. Zero projectors never join a context.
    """
    tol = g.tol if tol is None else check_tol(tol)
    orth = orthogonality_matrix(g, tol)
    ranks = [p.rank for p in g.powers]
    dim = g.dim
    eye = np.eye(dim)
    cands = [i for i, r in enumerate(ranks) if r > 0]
    found: list[Context] = []

    def search(pos: int, chosen: list[int], allowed: np.ndarray, total: int) -> None:
        if total == dim:
            acc = sum(g.powers[m].op for m in chosen)
            if float(np.linalg.norm(acc - eye)) <= tol:
                found.append(tuple(chosen))
            return
        deficit = dim - total
        rest = [j for j in cands[pos:] if allowed[j]]
        if sum(ranks[j] for j in rest) < deficit:
            return
        for k, j in enumerate(cands[pos:], start=pos):
            if not allowed[j] or ranks[j] > deficit:
                continue
            chosen.append(j)
            search(k + 1, chosen, allowed & orth[j], total + ranks[j])
            chosen.pop()

    search(0, [], np.ones(len(g.powers), dtype=bool), 0)
    return sorted(found)


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_adjacency(g: PowerGraph) -> dict:
    return {
        "dim": g.dim,
        "vertices": [
            {"index": i, "label": p.label, "rank": p.rank} for i, p in enumerate(g.powers)
        ],
        "edges": [list(e) for e in g.edge_list],
    }


def export_graph(g: PowerGraph, format: str = "dot") -> str:
    """Render ``g`` as undirected DOT or adjacency JSON; output is byte-stable."""
    if format == "dot":
        lines = ["graph powers {"]
        for i, p in enumerate(g.powers):
            label = f"{i}" if p.label is None else f"{i}: {p.label}"
            lines.append(f'  {i} [label="{_dot_escape(label)}"];')
        for a, b in g.edge_list:
            lines.append(f"  {a} -- {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"
    if format in ("adjacency-json", "json"):
        return json.dumps(to_adjacency(g), indent=2, sort_keys=True) + "\n"
    raise QLabError(f"unknown graph export format {format!r}")


def parse_adjacency(text: str) -> dict:
    """Inverse of the adjacency-json export: vertex count, edge set, labels."""
    doc = json.loads(text)
    vertices = sorted(doc["vertices"], key=lambda v: v["index"])
    return {
        "dim": doc["dim"],
        "vertex_count": len(vertices),
        "labels": [v["label"] for v in vertices],
        "edges": {tuple(sorted(e)) for e in doc["edges"]},
    }
