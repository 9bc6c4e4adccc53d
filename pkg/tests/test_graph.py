import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_contexts

from logos_qlab.errors import DimensionError, DuplicatePowerError, PoolTooLargeError, QLabError
from logos_qlab.graph import (
    build_power_graph,
    enumerate_contexts,
    export_graph,
    is_context,
    parse_adjacency,
)
from logos_qlab.linalg import Power, dagger, make_projector, random_unitary

Z = [make_projector([1, 0], "up"), make_projector([0, 1], "down")]
X = [make_projector(np.array([1, 1]) / np.sqrt(2), "+x"), make_projector(np.array([1, -1]) / np.sqrt(2), "-x")]


def ks_pool(inst):
    return inst.powers()


class TestBuild:
    def test_orthogonal_pair(self):
        g = build_power_graph(Z)
        assert g.edges == {(0, 1)}

    def test_noncommuting_pair(self):
        g = build_power_graph([Z[0], X[0]])
        assert g.edges == frozenset()

    def test_ks_edges_against_pairwise_oracle(self, ks18):
        pool = ks_pool(ks18)
        g = build_power_graph(pool)
        assert len(g.powers) == 18
        # independent check: all 153 pairs, commuting by direct matrix products
        expected = set()
        for i, j in itertools.combinations(range(18), 2):
            a, b = pool[i].op, pool[j].op
            if np.abs(a @ b - b @ a).max() < 1e-12:
                expected.add((i, j))
        assert len(list(itertools.combinations(range(18), 2))) == 153
        assert set(g.edges) == expected
        # rank-one projectors commute exactly when the kets are orthogonal here
        v = ks18.vectors
        orth = {(i, j) for i, j in itertools.combinations(range(18), 2) if abs(np.vdot(v[i], v[j])) < 1e-12}
        assert expected == orth

    def test_mixed_dims(self):
        with pytest.raises(DimensionError):
            build_power_graph([Z[0], make_projector([1, 0, 0])])

    def test_duplicates(self):
        with pytest.raises(DuplicatePowerError) as err:
            build_power_graph([Z[0], Z[1], make_projector([1, 0]), X[0]])
        assert err.value.pairs == [(0, 2)]

    def test_cap_and_empty(self):
        with pytest.raises(PoolTooLargeError):
            build_power_graph(Z + X, cap=3)
        with pytest.raises(QLabError):
            build_power_graph([])

    def test_edges_commute(self, ks18):
        g = build_power_graph(ks_pool(ks18))
        for i, j in g.edges:
            a, b = g.powers[i].op, g.powers[j].op
            assert np.linalg.norm(a @ b - b @ a) <= g.tol
            assert i != j


class TestContexts:
    def test_single_resolution(self):
        assert enumerate_contexts(build_power_graph(Z)) == [(0, 1)]

    def test_two_bases(self):
        assert enumerate_contexts(build_power_graph(Z + X)) == [(0, 1), (2, 3)]

    def test_ks_nine_contexts(self, ks18):
        pool = ks_pool(ks18)
        ctxs = enumerate_contexts(build_power_graph(pool))
        ops = [p.op for p in pool]
        oracle = [
            s for s in itertools.combinations(range(18), 4)
            if all(np.linalg.norm(ops[a] @ ops[b]) < 1e-9 for a, b in itertools.combinations(s, 2))
            and np.linalg.norm(sum(ops[a] for a in s) - np.eye(4)) < 1e-9
        ]
        assert ctxs == oracle
        assert len(ctxs) == 9 and all(len(c) == 4 for c in ctxs)

    def test_higher_rank_members(self):
        e = np.eye(3)
        pool = [
            Power(np.diag([1, 1, 0]).astype(complex), "P01"),
            make_projector(e[0], "0"),
            make_projector(e[1], "1"),
            make_projector(e[2], "2"),
            Power(np.diag([0, 1, 1]).astype(complex), "P12"),
        ]
        ops = [p.op for p in pool]
        ctxs = enumerate_contexts(build_power_graph(pool))
        assert ctxs == brute_force_contexts(ops) == [(0, 3), (1, 2, 3), (1, 4)]

    def test_members_are_valid(self, ks18):
        g = build_power_graph(ks_pool(ks18))
        for c in enumerate_contexts(g):
            assert is_context(g, c)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_matches_exhaustive_search(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 4))
        pool = []
        # Mix a few random bases (and their coarse-grainings) so contexts exist.
        while len(pool) < 10:
            u = random_unitary(d, rng)
            cols = [u[:, k:k + 1] for k in range(d)]
            pool.extend(Power(c @ dagger(c)) for c in cols)
            if d == 3 and rng.random() < 0.5:
                pool.append(Power(cols[0] @ dagger(cols[0]) + cols[1] @ dagger(cols[1])))
        pool = pool[:12]
        ops = [p.op for p in pool]
        assert enumerate_contexts(build_power_graph(pool)) == brute_force_contexts(ops)

    def test_permutation_invariance(self, ks18, rng):
        pool = ks_pool(ks18)
        base = {frozenset(c) for c in enumerate_contexts(build_power_graph(pool))}
        perm = rng.permutation(len(pool))
        shuffled = [pool[i] for i in perm]
        got = {frozenset(int(perm[i]) for i in c) for c in enumerate_contexts(build_power_graph(shuffled))}
        assert got == base


class TestExport:
    def test_dot_one_edge(self):
        text = export_graph(build_power_graph(Z), "dot")
        assert sum("--" in line for line in text.splitlines()) == 1
        assert text.startswith("graph powers {") and text.endswith("}\n")
        assert '0 [label="0: up"]' in text

    def test_dot_nodes_only(self):
        text = export_graph(build_power_graph([Z[0], X[0]]), "dot")
        assert "--" not in text
        assert text.count("[label=") == 2

    def test_ks_adjacency_round_trip(self, ks18):
        g = build_power_graph(ks_pool(ks18))
        text = export_graph(g, "adjacency-json")
        back = parse_adjacency(text)
        assert back["vertex_count"] == 18
        assert len(back["edges"]) == len(g.edges)
        assert back["edges"] == set(g.edges)
        assert back["labels"] == [p.label for p in g.powers]

    def test_byte_stable(self, ks18):
        g1 = build_power_graph(ks_pool(ks18))
        g2 = build_power_graph(ks_pool(ks18))
        for fmt in ("dot", "adjacency-json"):
            assert export_graph(g1, fmt) == export_graph(g2, fmt)

    def test_unknown_format(self):
        with pytest.raises(QLabError):
            export_graph(build_power_graph(Z), "graphml")

    def test_label_escaping(self):
        g = build_power_graph([make_projector([1, 0], 'a"b')])
        assert r'label="0: a\"b"' in export_graph(g, "dot")
