"""Quantum individuals: minimal power sets whose potentia fix every other potentia.

A set of powers determines all potentia of its dimension exactly when the
powers, together with the identity, span the real space of Hermitian
operators (dimension ``dim**2``). Everything here works in real coordinates
with respect to an orthonormal Hermitian basis, where ``Tr(A B)`` becomes a
dot product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, IncompleteSetError, QLabError
from .linalg import DEFAULT_TOL, Power, check_tol, dagger, embed, make_projector, tensor
from .valuation import IntensiveState, clamp_unit, potentia

EXACT_SEARCH_LIMIT = 24
CONSISTENCY_THRESHOLD = 1e-6


def hermitian_coords(h: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in an orthonormal Hermitian basis.

    Order: diagonal entries, then ``sqrt(2) Re h_jk`` and ``sqrt(2) Im h_jk``
    for each ``j < k``.
    """
    h = np.asarray(h)
    d = h.shape[0]
    iu = np.triu_indices(d, 1)
    off = h[iu]
    return np.concatenate([h.diagonal().real, np.sqrt(2) * off.real, np.sqrt(2) * off.imag])


def from_hermitian_coords(x: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    m = d * (d - 1) // 2
    h = np.diag(x[:d]).astype(complex)
    iu = np.triu_indices(d, 1)
    upper = (x[d:d + m] + 1j * x[d + m:]) / np.sqrt(2)
    h[iu] = upper
    h[(iu[1], iu[0])] = upper.conj()
    return h


def _coord_matrix(powers: Sequence[Power], dim: int) -> np.ndarray:
    for p in powers:
        if p.dim != dim:
            raise DimensionError(f"power of dim {p.dim} in a set of dim {dim}")
    rows = [hermitian_coords(p.op) for p in powers]
    return np.array(rows).reshape(len(rows), dim * dim)


def _rank(rows: np.ndarray, tol: float) -> int:
    if rows.size == 0:
        return 0
    s = np.linalg.svd(rows, compute_uv=False)
    return int((s > tol * s[0]).sum()) if s[0] > 0 else 0


def completeness_rank(powers: Sequence[Power], dim: int, tol: float = DEFAULT_TOL) -> tuple[int, bool]:
    """Rank of span(powers + [I]) among Hermitian operators, and whether it is full."""
    tol = check_tol(tol)
    rows = np.vstack([hermitian_coords(np.eye(dim)), _coord_matrix(powers, dim)])
    r = _rank(rows, tol)
    return r, r == dim * dim


@dataclass
class ReconstructionResult:
    rho_hat: np.ndarray
    residual: float
    min_eigenvalue: float
    consistent: bool
    clipped: bool = False

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "min_eigenvalue": self.min_eigenvalue,
            "consistent": self.consistent,
            "clipped": self.clipped,
        }


def reconstruct(
    powers: Sequence[Power],
    values: Sequence[float],
    dim: int,
    tol: float = DEFAULT_TOL,
    clip: bool = False,
) -> ReconstructionResult:
    """Least-squares Hermitian ``rho_hat`` with ``Tr(rho_hat P_i) = values[i]``.

    The trace condition is imposed exactly; the remaining constraints are
    met in the least-squares sense and their RMS violation is ``residual``.
    No positivity correction is applied unless ``clip`` is set, in which case
    negative eigenvalues are zeroed and the trace renormalized.
    """
    tol = check_tol(tol)
    if len(powers) != len(values):
        raise QLabError(f"{len(powers)} powers but {len(values)} potentia")
    vals = np.asarray(values, dtype=float)
    if np.any(vals < 0) or np.any(vals > 1):
        raise QLabError("potentia must lie in [0, 1]")
    rank, complete = completeness_rank(powers, dim, tol)
    if not complete:
        raise IncompleteSetError(rank, dim * dim)

    a = _coord_matrix(powers, dim)
    c = hermitian_coords(np.eye(dim))
    x0 = c / (c @ c)
    null = scipy.linalg.null_space(c[None, :])
    z, *_ = np.linalg.lstsq(a @ null, vals - a @ x0, rcond=None)
    x = x0 + null @ z
    rho = from_hermitian_coords(x, dim)
    residual = float(np.sqrt(np.mean((a @ x - vals) ** 2))) if len(vals) else 0.0
    evals, evecs = np.linalg.eigh(rho)
    clipped = False
    if clip and evals.min() < 0:
        evals = np.clip(evals, 0, None)
        rho = (evecs * evals) @ dagger(evecs)
        rho = rho / np.trace(rho).real
        clipped = True
    return ReconstructionResult(
        rho_hat=rho,
        residual=residual,
        min_eigenvalue=float(np.linalg.eigvalsh(rho).min()),
        consistent=residual <= CONSISTENCY_THRESHOLD,
        clipped=clipped,
    )


@dataclass
class QuantumIndividual:
    dim: int
    powers: tuple[Power, ...]
    rank: int
    complete: bool
    potentia: tuple[float, ...] | None = None
    pool_indices: tuple[int, ...] = ()
    method: str = "exact"
    certified: bool = True
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.potentia is not None:
            vals = tuple(float(v) for v in self.potentia)
            if len(vals) != len(self.powers):
                raise QLabError(f"{len(vals)} potentia for {len(self.powers)} powers")
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise QLabError("individual potentia must lie in [0, 1]")
            self.potentia = vals

    def __len__(self) -> int:
        return len(self.powers)


def make_individual(powers: Sequence[Power], dim: int, values: Sequence[float] | None = None,
                    tol: float = DEFAULT_TOL) -> QuantumIndividual:
    rank, complete = completeness_rank(powers, dim, tol)
    return QuantumIndividual(dim, tuple(powers), rank, complete, values,
                             tuple(range(len(powers))))


def measure_individual(ind: QuantumIndividual, state: IntensiveState,
                       tol: float = DEFAULT_TOL) -> QuantumIndividual:
    """Copy of ``ind`` carrying the potentia ``state`` assigns to its powers."""
    vals = tuple(potentia(state, p, tol) for p in ind.powers)
    return QuantumIndividual(ind.dim, ind.powers, ind.rank, ind.complete, vals,
                             ind.pool_indices, ind.method, ind.certified, list(ind.notes))


def _exact_minimal(rows: np.ndarray, target: int, tol: float) -> tuple[int, ...] | None:
    """Lexicographically first smallest index set whose rows (with I) reach ``target``.

    Depth-first over combinations in lexicographic order, size by size,
    cutting a prefix whenever its rank plus the remaining slots cannot reach
    ``target``. ``rows[0]`` is the identity and always included.
    """
    n = rows.shape[0] - 1
    for size in range(max(0, target - 1), n + 1):
        chosen: list[int] = []

        def dfs(start: int) -> bool:
            r = _rank(rows[[0] + [i + 1 for i in chosen]], tol)
            if r + (size - len(chosen)) < target:
                return False
            if len(chosen) == size:
                return r == target
            for i in range(start, n - (size - len(chosen)) + 1):
                chosen.append(i)
                if dfs(i + 1):
                    return True
                chosen.pop()
            return False

        if dfs(0):
            return tuple(chosen)
    return None


def _greedy_minimal(rows: np.ndarray, target: int, tol: float) -> tuple[int, ...]:
    chosen: list[int] = []
    r = 1
    for i in range(rows.shape[0] - 1):
        nr = _rank(rows[[0] + [j + 1 for j in chosen] + [i + 1]], tol)
        if nr > r:
            chosen.append(i)
            r = nr
            if r == target:
                break
    return tuple(chosen)


def find_minimal_individual(
    pool: Sequence[Power],
    dim: int,
    state: IntensiveState | None = None,
    tol: float = DEFAULT_TOL,
    exact_limit: int = EXACT_SEARCH_LIMIT,
) -> QuantumIndividual:
    """Smallest complete subset of ``pool``; ties go to the lexicographically first.

    Pools up to ``exact_limit`` powers are searched exactly. Larger pools
    use greedy rank ascent in index order. Each greedy step raises the rank
    by one, so the result has ``dim**2 - 1`` members, which matches the
    lower bound ``rank <= size + 1`` and is therefore still minimal.
    """
    tol = check_tol(tol)
    pool = list(pool)
    rank, complete = completeness_rank(pool, dim, tol)
    if not complete:
        raise IncompleteSetError(rank, dim * dim)
    rows = np.vstack([hermitian_coords(np.eye(dim)), _coord_matrix(pool, dim)])
    target = dim * dim
    if len(pool) <= exact_limit:
        idx = _exact_minimal(rows, target, tol)
        method = "exact"
    else:
        idx = _greedy_minimal(rows, target, tol)
        method = "greedy"
    assert idx is not None
    powers = tuple(pool[i] for i in idx)
    r, comp = completeness_rank(powers, dim, tol)
    certified = method == "exact" or len(idx) == target - 1
    ind = QuantumIndividual(dim, powers, r, comp, None, idx, method, certified)
    if method == "greedy":
        ind.notes.append("greedy rank ascent; minimal because size equals dim**2 - 1")
    return measure_individual(ind, state, tol) if state is not None else ind


def derive_potentia(ind: QuantumIndividual, target: Power, tol: float = DEFAULT_TOL) -> float:
    """Potentia of ``target`` deduced from the individual's own potentia."""
    if not ind.complete:
        raise IncompleteSetError(ind.rank, ind.dim * ind.dim)
    if ind.potentia is None:
        raise QLabError("individual carries no potentia; measure it on a state first")
    if target.dim != ind.dim:
        raise DimensionError(f"target has dim {target.dim}, individual has dim {ind.dim}")
    rec = reconstruct(ind.powers, ind.potentia, ind.dim, tol)
    val = float(np.real(np.sum(rec.rho_hat * target.op.T)))
    return clamp_unit(val, check_tol(tol))


def tomographic_projectors(d: int) -> list[Power]:
    """A complete set of ``d**2 - 1`` rank-one powers on one screen.

    ``|j>`` for ``j < d-1`` plus ``(|j> + |k>)/sqrt2`` and ``(|j> + i|k>)/sqrt2``
    for every ``j < k``.
    """
    eye = np.eye(d, dtype=complex)
    out = [make_projector(eye[j], label=f"{j}") for j in range(d - 1)]
    for j, k in itertools.combinations(range(d), 2):
        out.append(make_projector((eye[j] + eye[k]) / np.sqrt(2), label=f"{j}+{k}"))
        out.append(make_projector((eye[j] + 1j * eye[k]) / np.sqrt(2), label=f"{j}+i{k}"))
    return out


def joint_tomographic_pool(d: int, sites: int) -> list[Power]:
    """Tensor products of single-screen tomographic powers (or I), minus I."""
    local = [(None, np.eye(d, dtype=complex))] + [(p.label, p.op) for p in tomographic_projectors(d)]
    pool = []
    for combo in itertools.product(local, repeat=sites):
        if all(lbl is None for lbl, _ in combo):
            continue
        label = "(" + ",".join("I" if lbl is None else lbl for lbl, _ in combo) + ")"
        pool.append(Power(tensor([op for _, op in combo]), label=label))
    return pool


def local_diagonal_powers(d: int, sites: int) -> list[Power]:
    """``|k><k|`` on one site, identity on the rest, for every site and ``k``."""
    dims = [d] * sites
    out = []
    for s in range(sites):
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, k] = 1
            out.append(Power(embed(e, dims, [s]), label=f"site{s}:{k}"))
    return out


def local_full_powers(d: int, sites: int) -> list[Power]:
    """Each site's tomographic set, embedded with identity elsewhere."""
    dims = [d] * sites
    return [
        Power(embed(p.op, dims, [s]), label=f"site{s}:{p.label}")
        for s in range(sites)
        for p in tomographic_projectors(d)
    ]


@dataclass
class ContrastReport:
    dim_per_site: int
    sites: int
    required_rank: int
    local_diagonal_rank: int
    local_full_rank: int
    local_max_difference: float
    joint_individual_size: int
    joint_complete: bool
    derived_product_potentia: list[float]
    mixture_product_potentia: list[float]
    joint_max_difference: float

    @property
    def local_rank_deficit(self) -> int:
        return self.required_rank - self.local_full_rank

    @property
    def locally_indistinguishable(self) -> bool:
        return self.local_max_difference <= 1e-12

    @property
    def jointly_distinguished(self) -> bool:
        return self.joint_max_difference > 1e-8

    def to_dict(self) -> dict:
        return {
            "dim_per_site": self.dim_per_site,
            "sites": self.sites,
            "required_rank": self.required_rank,
            "local_diagonal_rank": self.local_diagonal_rank,
            "local_full_rank": self.local_full_rank,
            "local_rank_deficit": self.local_rank_deficit,
            "local_max_difference": self.local_max_difference,
            "locally_indistinguishable": self.locally_indistinguishable,
            "joint_individual_size": self.joint_individual_size,
            "joint_complete": self.joint_complete,
            "derived_product_potentia": self.derived_product_potentia,
            "mixture_product_potentia": self.mixture_product_potentia,
            "joint_max_difference": self.joint_max_difference,
            "jointly_distinguished": self.jointly_distinguished,
        }


def atomist_contrast(dim_per_site: int, sites: int, state: IntensiveState,
                     tol: float = DEFAULT_TOL) -> ContrastReport:
    """Compare ``state`` with its product-basis dephasing (a classical mixture).

    Single-site diagonal powers cannot tell the two apart and even the full
    single-site tomographic sets leave a rank deficit; a complete joint
    individual derives every product-basis potentia and separates them.
    """
    d, n = int(dim_per_site), int(sites)
    if d < 2 or n < 1:
        raise QLabError("need dim_per_site >= 2 and sites >= 1")
    dim = d ** n
    if state.dim != dim:
        raise DimensionError(f"state has dim {state.dim}, expected {d}^{n} = {dim}")
    mixture = IntensiveState(np.diag(np.diag(state.rho).real).astype(complex))

    diag = local_diagonal_powers(d, n)
    diag_rank, _ = completeness_rank(diag, dim, tol)
    full_rank, _ = completeness_rank(local_full_powers(d, n), dim, tol)
    local_diff = max(abs(potentia(state, p, tol) - potentia(mixture, p, tol)) for p in diag)

    ind = find_minimal_individual(joint_tomographic_pool(d, n), dim, tol=tol)
    ind_state = measure_individual(ind, state, tol)
    ind_mix = measure_individual(ind, mixture, tol)
    eye = np.eye(dim, dtype=complex)
    products = [make_projector(eye[i]) for i in range(dim)]
    derived = [derive_potentia(ind_state, p, tol) for p in products]
    derived_mix = [derive_potentia(ind_mix, p, tol) for p in products]
    joint_diff = max(abs(a - b) for a, b in zip(ind_state.potentia, ind_mix.potentia))
    return ContrastReport(
        dim_per_site=d,
        sites=n,
        required_rank=dim * dim,
        local_diagonal_rank=diag_rank,
        local_full_rank=full_rank,
        local_max_difference=local_diff,
        joint_individual_size=len(ind),
        joint_complete=ind.complete,
        derived_product_potentia=derived,
        mixture_product_potentia=derived_mix,
        joint_max_difference=joint_diff,
    )
