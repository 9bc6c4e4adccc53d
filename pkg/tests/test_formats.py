import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from oracles import SINGLET_KET

from logos_qlab import formats
from logos_qlab.arrangements import build_arrangement, derive_subarrangement
from logos_qlab.errors import InvalidStateError, NormalizationError, NotProjectorError, QLabError, SchemaError
from logos_qlab.individuals import find_minimal_individual, tomographic_projectors
from logos_qlab.linalg import random_unitary
from logos_qlab.valuation import random_state

H = 0.7071067811865476


def doc(**kw):
    return json.dumps(kw)


class TestParseState:
    def test_ket(self):
        st_ = formats.parse_state(doc(dim=2, ket=[[H, 0], [H, 0]]))
        assert st_.purity == pytest.approx(1.0)
        assert_allclose(st_.rho, np.full((2, 2), 0.5), atol=1e-15)

    def test_rho(self):
        st_ = formats.parse_state(doc(dim=2, rho=[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]))
        assert_allclose(st_.rho, np.full((2, 2), 0.5))

    def test_trace(self):
        with pytest.raises(InvalidStateError) as err:
            formats.parse_state(doc(dim=2, rho=[[[0.5, 0], [0, 0]], [[0, 0], [0.4, 0]]]))
        assert "trace = 0.9" in str(err.value)

    def test_unnormalized_ket(self):
        with pytest.raises(NormalizationError):
            formats.parse_state(doc(dim=2, ket=[[1, 0], [1, 0]]))

    @pytest.mark.parametrize("text,path", [
        (doc(ket=[[1, 0]]), "$"),
        (doc(dim=2, ket=[[1, 0], [0]]), "$.ket[1]"),
        (doc(dim=2, ket=[[1, 0], [0, "x"]]), "$.ket[1][1]"),
        (doc(dim=2), "$"),
        (doc(dim=3, ket=[[1, 0], [0, 0]]), "$.ket"),
        (doc(dim=2, rho=[[[1, 0], [0, 0]], [[0, 0]]]), "$.rho"),
        ("{not json", "$"),
    ])
    def test_schema_paths(self, text, path):
        with pytest.raises(SchemaError) as err:
            formats.parse_state(text)
        assert err.value.path == path

    def test_both_forms_rejected(self):
        with pytest.raises(SchemaError):
            formats.parse_state(doc(dim=1, ket=[[1, 0]], rho=[[[1, 0]]]))

    def test_bytes_and_bad_utf8(self):
        assert formats.parse_state(doc(dim=1, ket=[[1, 0]]).encode()).dim == 1
        with pytest.raises(SchemaError):
            formats.parse_state(b"\xff\xfe")

    def test_round_trip(self):
        st_ = random_state(3, "mixed", 8)
        back = formats.parse_state(formats.dumps(formats.dump_state(st_)))
        assert_array_equal(back.rho, st_.rho)


class TestPools:
    def test_ket_and_matrix(self):
        text = doc(dim=2, powers=[
            {"label": "up", "ket": [[1, 0], [0, 0]]},
            {"label": "down", "matrix": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]},
        ])
        pool = formats.parse_pool(text)
        assert [p.label for p in pool] == ["up", "down"]
        assert_array_equal(pool[1].op, np.diag([0, 1]))

    def test_not_projector(self):
        with pytest.raises(NotProjectorError):
            formats.parse_pool(doc(dim=1, powers=[{"matrix": [[[2, 0]]]}]))

    def test_path_into_pool(self):
        with pytest.raises(SchemaError) as err:
            formats.parse_pool(doc(dim=2, powers=[{"ket": [[1, 0], [0, 0]]}, {"ket": [[1, 0]]}]))
        assert err.value.path == "$.powers[1].ket"

    def test_round_trip(self, spin_pool):
        back = formats.parse_pool(formats.dumps(formats.dump_pool(spin_pool)))
        for a, b in zip(back, spin_pool):
            assert a.label == b.label
            assert_array_equal(a.op, b.op)

    def test_single_power(self):
        p = formats.parse_power(doc(dim=4, label="updown", ket=[[0, 0], [1, 0], [0, 0], [0, 0]]))
        assert p.label == "updown" and p.rank == 1


class TestInstances:
    def test_bundled_round_trip(self, ks18):
        text = formats.dumps(formats.dump_instance(ks18))
        back = formats.parse_instance(text)
        assert_array_equal(back.vectors, ks18.vectors)
        assert back.contexts == ks18.contexts and back.name == ks18.name

    def test_context_out_of_range(self):
        with pytest.raises(SchemaError) as err:
            formats.parse_instance(doc(dim=1, vectors=[[[1, 0]]], contexts=[[0], [0, 3]]))
        assert err.value.path == "$.contexts[1][1]"

    def test_vector_length(self):
        with pytest.raises(SchemaError) as err:
            formats.parse_instance(doc(dim=2, vectors=[[[1, 0], [0, 0]], [[1, 0]]]))
        assert err.value.path == "$.vectors[1]"

    def test_missing_bundle(self):
        with pytest.raises(FileNotFoundError):
            formats.bundled_instance("no-such-set")


class TestArrangements:
    def test_round_trip(self, rng):
        dims = (2, 3)
        ea = build_arrangement(random_state(6, "mixed", 1), dims, [random_unitary(d, rng) for d in dims])
        text = formats.dumps(formats.dump_arrangement(ea))
        back = formats.parse_arrangement(text)
        assert back.factor_dims == ea.factor_dims
        assert_array_equal(back.alpha, ea.alpha)
        for a, b in zip(back.bases, ea.bases):
            assert_array_equal(a, b)
        assert_allclose(back.lab.rho, ea.lab.rho, atol=1e-14)
        assert formats.dumps(formats.dump_arrangement(back)) == text

    def test_subarrangement_round_trip(self, singlet):
        sub = derive_subarrangement(build_arrangement(singlet, (2, 2)), [1])
        back = formats.parse_arrangement(formats.dumps(formats.dump_arrangement(sub)))
        assert_array_equal(back.alpha, sub.alpha)

    def test_bases_are_kets(self):
        b = formats.parse_bases(doc(bases=[[[[H, 0], [H, 0]], [[H, 0], [-H, 0]]]]), [2])
        assert_allclose(b[0][:, 1], [H, -H])

    def test_bases_mismatch(self):
        with pytest.raises(SchemaError) as err:
            formats.parse_bases(doc(factor_dims=[2, 2], bases=[]), [4])
        assert err.value.path == "$.factor_dims"
        with pytest.raises(SchemaError) as err:
            formats.parse_bases(doc(bases=[[[[1, 0], [0, 0]]]]), [2])
        assert err.value.path == "$.bases[0]"


class TestIndividuals:
    def test_round_trip(self):
        ind = find_minimal_individual(tomographic_projectors(2), 2, random_state(2, "pure", 4))
        text = formats.dumps(formats.dump_individual(ind))
        back = formats.parse_individual(text)
        assert back.potentia == ind.potentia and back.complete and back.rank == 4
        assert formats.dumps(formats.dump_individual(back)) == text

    def test_inconsistent_flag(self):
        bad = doc(dim=2, powers=[{"ket": [[1, 0], [0, 0]]}], complete=True)
        with pytest.raises(SchemaError) as err:
            formats.parse_individual(bad)
        assert err.value.path == "$.complete"


class TestDumps:
    def test_canonical(self):
        assert formats.dumps({"b": 1, "a": [1.5, 2]}) == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'

    def test_no_nan(self):
        with pytest.raises(ValueError):
            formats.dumps({"x": float("nan")})

    def test_float_repr_round_trips(self):
        v = formats.encode_vector(SINGLET_KET)
        assert complex(*json.loads(json.dumps(v))[1]) == SINGLET_KET[1]


def test_schema_error_is_library_error():
    assert issubclass(SchemaError, QLabError)
