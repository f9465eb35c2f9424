import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uniconv.cones import ProductCone, Singleton
from uniconv.errors import (
    AsymmetricMatrixError,
    FileDimensionError,
    ParseError,
    UnknownSetKindError,
)
from uniconv.geometry import BallIntersection, PNormBall, Polytope, Sublevel
from uniconv.problemfile import eval_expression, normalise, parse_problem_file, serialize

EXAMPLE = (resources.files("uniconv") / "data" / "planar_example.problem").read_text()

MINIMAL = """\
space: {n: 2}
objective: {A: [[1, 0], [0, 1]]}
point: [0, 0]
set: {kind: ball, radius: 1}
"""


def test_example_parses_to_worked_instance():
    pf = parse_problem_file(EXAMPLE)
    p = pf.spec
    np.testing.assert_allclose(p.phi.A[0], np.diag([2.0, -2.0]))
    np.testing.assert_allclose(p.g.A[0], np.diag([2.0, 2.0]))
    assert p.g.c[0] == -1.0
    np.testing.assert_allclose(p.x0, [1 / math.sqrt(2)] * 2, rtol=0, atol=0)
    assert isinstance(p.S, PNormBall) and p.S.radius == 0.5
    np.testing.assert_array_equal(p.S.center, p.x0)
    assert p.C == ProductCone(("zero",))
    assert pf.options["seed"] == 0


def test_round_trip():
    data = normalise(EXAMPLE)
    assert normalise(serialize(data)) == data
    assert normalise(serialize(normalise(serialize(data)))) == data


def test_asymmetric_names_component():
    text = EXAMPLE.replace("A: [[2, 0], [0, 2]]", "A: [[2, 1], [0, 2]]")
    with pytest.raises(AsymmetricMatrixError, match="constraint component 0") as exc:
        parse_problem_file(text)
    assert exc.value.code == "asymmetric-matrix" and exc.value.line == 13


def test_empty_constraint_is_unconstrained():
    pf = parse_problem_file(MINIMAL + "constraint:\n")
    assert pf.spec.g is None and pf.spec.C is None
    assert parse_problem_file(MINIMAL).spec.g is None


def test_parse_error_has_line():
    with pytest.raises(ParseError) as exc:
        parse_problem_file("space: {n: 2}\nobjective: [1, 2\n")
    assert exc.value.code == "parse" and exc.value.line is not None


def test_unknown_set_kind():
    with pytest.raises(UnknownSetKindError) as exc:
        parse_problem_file(MINIMAL.replace("kind: ball", "kind: torus"))
    assert exc.value.line == 4


def test_dimension_mismatch():
    with pytest.raises(FileDimensionError) as exc:
        parse_problem_file(MINIMAL.replace("point: [0, 0]", "point: [0, 0, 0]"))
    assert exc.value.code == "dimension-mismatch" and exc.value.line == 3


def test_error_codes_distinct():
    codes = {ParseError.code, AsymmetricMatrixError.code, UnknownSetKindError.code, FileDimensionError.code}
    assert len(codes) == 4


def test_unknown_section_and_option():
    with pytest.raises(ParseError, match="unknown section"):
        parse_problem_file(MINIMAL + "extras: 1\n")
    with pytest.raises(ParseError, match="unknown option"):
        parse_problem_file(MINIMAL + "options: {speed: 3}\n")


def test_set_kinds():
    base = MINIMAL.replace("set: {kind: ball, radius: 1}\n", "")
    S = parse_problem_file(base + "set: {kind: intersection, centers: [[0, 0], [0.5, 0]], radius: 1}\n").spec.S
    assert isinstance(S, BallIntersection)
    S = parse_problem_file(base + "set: {kind: sublevel, A: [[2, 0], [0, 1]], level: 1}\n").spec.S
    assert isinstance(S, Sublevel)
    S = parse_problem_file(base + "set: {kind: polytope, G: [[1, 0], [-1, 0], [0, 1], [0, -1]], h: [1, 1, 1, 1]}\n").spec.S
    assert isinstance(S, Polytope)
    S = parse_problem_file(base + "set: {kind: ball, radius: 2, p: 3, center: [1, 1]}\n").spec.S
    assert S.p == 3 and S.radius == 2


def test_targets():
    base = MINIMAL + "constraint:\n  components:\n    - {A: [[0, 0], [0, 0]], b: [1, 0]}\n    - {A: [[0, 0], [0, 0]], b: [0, 1]}\n"
    assert parse_problem_file(base + "  target: [nonneg, free]\n").spec.C == ProductCone(("nonneg", "free"))
    assert parse_problem_file(base + "  target: {point: [1, 2]}\n").spec.C == Singleton([1.0, 2.0])
    with pytest.raises(FileDimensionError):
        parse_problem_file(base + "  target: [nonneg]\n")
    with pytest.raises(ParseError):
        parse_problem_file(base + "  target: cone\n")


def test_expressions():
    assert eval_expression("1/sqrt(2)") == 1 / math.sqrt(2)
    assert eval_expression("-2**2 + pi") == pytest.approx(math.pi - 4)
    for bad in ("__import__('os')", "x + 1", "sqrt(1, 2)", "[1]"):
        with pytest.raises((ValueError, SyntaxError)):
            eval_expression(bad)
    with pytest.raises(ParseError, match="cannot evaluate"):
        parse_problem_file(MINIMAL.replace("radius: 1", "radius: open(1)"))


@given(
    A=st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3),
    r=st.floats(0.01, 10),
    x=st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=2),
)
def test_round_trip_property(A, r, x):
    text = f"""\
space: {{n: 2}}
objective: {{A: [[{A[0]!r}, {A[1]!r}], [{A[1]!r}, {A[2]!r}]], b: [1, 2], c: 3}}
point: [{x[0]!r}, {x[1]!r}]
set: {{kind: ball, radius: {r!r}}}
"""
    data = normalise(text)
    assert normalise(serialize(data)) == data
