"""
Problem files: a YAML document describing one instance.

Sections::

    space:      {n: 2, p: 2}
    objective:  {A: [[...]], b: [...], c: 0}          # phi = 0.5 x'Ax + b'x + c
    constraint: {target: zero, components: [{A, b, c}, ...]}
    set:        {kind: ball, radius: 0.5}             # center defaults to `point`
    point:      [1/sqrt(2), 1/sqrt(2)]
    options:    {seed: 0, tol: 1e-6, cells: 1000000, samples: 2000}

Any scalar may be written as an arithmetic expression over numbers, ``pi``,
``e`` and the usual elementary functions. ``target`` is one of ``zero``,
``free``, ``nonneg``, ``nonpos`` (applied to every component), a list of
those per component, or ``{point: [...]}`` for a singleton. Set kinds are
``ball`` (center, radius, p), ``intersection`` (centers, radius, p),
``sublevel`` (A, b, c, level) and ``polytope`` (G, h).

Errors carry the 1-based line of the offending node.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field

import numpy as np
import yaml

from .calculus import QuadraticMap
from .cones import KINDS, ProductCone, Singleton
from .errors import (
    AsymmetricMatrixError,
    FileDimensionError,
    ParseError,
    UniconvError,
    UnknownSetKindError,
)
from .geometry import BallIntersection, PNormBall, Polytope, Sublevel
from .optim import ProblemSpec

SET_KINDS = ("ball", "intersection", "sublevel", "polytope")
OPTION_KEYS = {"seed": int, "tol": float, "cells": int, "samples": int, "radius": float}
DEFAULT_OPTIONS = {"seed": 0, "tol": 1e-6, "cells": 1_000_000, "samples": 2000}

_FUNCS = {
    name: getattr(math, name)
    for name in ("sqrt", "exp", "log", "sin", "cos", "tan", "asin", "acos", "atan")
}
_FUNCS["abs"] = abs
_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_expression(text: str) -> float:
    """Evaluate a scalar arithmetic expression without ``eval``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return float(_FUNCS[node.func.id](ev(node.args[0])))
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")

    return float(ev(ast.parse(text.strip(), mode="eval")))


class _Node:
    """Plain value plus the line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value, self.line = value, line


def _convert(node):
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = _convert(k).value
            if not isinstance(key, str):
                raise ParseError("mapping keys must be strings", k.start_mark.line + 1)
            if key in out:
                raise ParseError(f"duplicate key {key!r}", k.start_mark.line + 1)
            out[key] = _convert(v)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(v) for v in node.value], line)
    tag = node.tag
    if tag.endswith(":null"):
        return _Node(None, line)
    if tag.endswith(":bool"):
        return _Node(node.value.lower() in ("true", "yes", "on"), line)
    if tag.endswith(":int") or tag.endswith(":float"):
        return _Node(float(yaml.safe_load(node.value)), line)
    return _Node(node.value, line)


def _scalar(node: _Node, what: str) -> float:
    v = node.value
    if isinstance(v, bool) or v is None or isinstance(v, (list, dict)):
        raise ParseError(f"{what}: expected a number", node.line)
    if isinstance(v, float):
        return v
    try:
        return eval_expression(str(v))
    except (ValueError, SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ParseError(f"{what}: cannot evaluate {v!r} ({exc})", node.line) from None


def _vector(node: _Node, what: str, n: int | None = None) -> list[float]:
    if not isinstance(node.value, list):
        raise ParseError(f"{what}: expected a list of numbers", node.line)
    out = [_scalar(x, what) for x in node.value]
    if n is not None and len(out) != n:
        raise FileDimensionError(f"{what}: expected length {n}, got {len(out)}", node.line)
    return out


def _matrix(node: _Node, what: str, rows: int | None = None, cols: int | None = None) -> list[list[float]]:
    if not isinstance(node.value, list):
        raise ParseError(f"{what}: expected a list of rows", node.line)
    out = [_vector(r, what, cols) for r in node.value]
    if rows is not None and len(out) != rows:
        raise FileDimensionError(f"{what}: expected {rows} rows, got {len(out)}", node.line)
    if out and cols is None and len({len(r) for r in out}) != 1:
        raise FileDimensionError(f"{what}: rows have different lengths", node.line)
    return out


def _get(section: _Node, key: str, required: bool = True, where: str = ""):
    if not isinstance(section.value, dict):
        raise ParseError(f"{where or 'section'}: expected a mapping", section.line)
    if key not in section.value:
        if required:
            raise ParseError(f"{where}: missing key {key!r}", section.line)
        return None
    return section.value[key]


def _quadratic(sec: _Node, n: int, what: str) -> dict:
    A = _matrix(_get(sec, "A", where=what), f"{what}.A", n, n)
    if not np.allclose(np.array(A), np.array(A).T, rtol=1e-12, atol=1e-12):
        raise AsymmetricMatrixError(f"{what}: matrix A is not symmetric", _get(sec, "A").line)
    bnode = _get(sec, "b", required=False)
    cnode = _get(sec, "c", required=False)
    b = _vector(bnode, f"{what}.b", n) if bnode is not None else [0.0] * n
    c = _scalar(cnode, f"{what}.c") if cnode is not None else 0.0
    return {"A": A, "b": b, "c": c}


def _target(node: _Node | None, k: int):
    if node is None:
        return "free"
    v = node.value
    if isinstance(v, str):
        if v not in KINDS:
            raise ParseError(f"constraint.target: unknown cone {v!r}; expected one of {KINDS}", node.line)
        return v
    if isinstance(v, list):
        kinds = []
        for item in v:
            if item.value not in KINDS:
                raise ParseError(f"constraint.target: unknown cone {item.value!r}", item.line)
            kinds.append(item.value)
        if len(kinds) != k:
            raise FileDimensionError(f"constraint.target: {len(kinds)} kinds for {k} components", node.line)
        return kinds
    if isinstance(v, dict) and set(v) == {"point"}:
        return {"point": _vector(v["point"], "constraint.target.point", k)}
    raise ParseError("constraint.target: expected a cone name, a list of names or {point: [...]}", node.line)


def _set_data(sec: _Node, n: int, p_default: float) -> dict:
    kind_node = _get(sec, "kind", where="set")
    kind = kind_node.value
    if kind not in SET_KINDS:
        raise UnknownSetKindError(f"set.kind {kind!r} is not one of {SET_KINDS}", kind_node.line)
    out = {"kind": kind}
    if kind in ("ball", "intersection"):
        pn = _get(sec, "p", required=False)
        out["p"] = _scalar(pn, "set.p") if pn is not None else p_default
        out["radius"] = _scalar(_get(sec, "radius", where="set"), "set.radius")
        if kind == "ball":
            cn = _get(sec, "center", required=False)
            if cn is not None:
                out["center"] = _vector(cn, "set.center", n)
        else:
            out["centers"] = _matrix(_get(sec, "centers", where="set"), "set.centers", None, n)
    elif kind == "sublevel":
        out.update(_quadratic(sec, n, "set"))
        out["level"] = _scalar(_get(sec, "level", where="set"), "set.level")
    else:
        out["G"] = _matrix(_get(sec, "G", where="set"), "set.G", None, n)
        out["h"] = _vector(_get(sec, "h", where="set"), "set.h", len(out["G"]))
    return out


@dataclass
class ProblemFile:
    """Normalised file contents plus the problem they describe."""

    data: dict
    spec: ProblemSpec
    options: dict = field(default_factory=dict)

    def with_radius(self, radius: float) -> "ProblemFile":
        """Same instance with the set radius replaced (ball and intersection sets)."""
        data = {**self.data, "set": {**self.data["set"], "radius": float(radius)}}
        if data["set"]["kind"] not in ("ball", "intersection"):
            raise UniconvError("--radius applies to ball and intersection sets only")
        return build(data)


def normalise(text: str) -> dict:
    """Parse and validate the YAML text into plain nested data."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ParseError(f"malformed document: {exc.problem}", None if mark is None else mark.line + 1) from None
    if root is None:
        raise ParseError("empty document", 1)
    doc = _convert(root)
    if not isinstance(doc.value, dict):
        raise ParseError("top level must be a mapping", doc.line)
    known = {"space", "objective", "constraint", "set", "point", "options"}
    for key, node in doc.value.items():
        if key not in known:
            raise ParseError(f"unknown section {key!r}", node.line)
    space = _get(doc, "space", where="document")
    n_node = _get(space, "n", where="space")
    n = _scalar(n_node, "space.n")
    if n != int(n) or n < 1:
        raise ParseError("space.n must be a positive integer", n_node.line)
    n = int(n)
    pn = _get(space, "p", required=False)
    p = _scalar(pn, "space.p") if pn is not None else 2.0
    data = {"space": {"n": n, "p": p}}
    data["objective"] = _quadratic(_get(doc, "objective", where="document"), n, "objective")
    cons = _get(doc, "constraint", required=False)
    comps = []
    target = "free"
    if cons is not None and cons.value is not None:
        cnode = _get(cons, "components", required=False)
        if cnode is not None and cnode.value is not None:
            if not isinstance(cnode.value, list):
                raise ParseError("constraint.components: expected a list", cnode.line)
            comps = [_quadratic(c, n, f"constraint component {i}") for i, c in enumerate(cnode.value)]
        target = _target(_get(cons, "target", required=False), len(comps))
    data["constraint"] = {"target": target, "components": comps}
    data["point"] = _vector(_get(doc, "point", where="document"), "point", n)
    data["set"] = _set_data(_get(doc, "set", where="document"), n, p)
    opts = dict(DEFAULT_OPTIONS)
    onode = _get(doc, "options", required=False)
    if onode is not None and onode.value is not None:
        if not isinstance(onode.value, dict):
            raise ParseError("options: expected a mapping", onode.line)
        for key, node in onode.value.items():
            if key not in OPTION_KEYS:
                raise ParseError(f"unknown option {key!r}", node.line)
            opts[key] = OPTION_KEYS[key](_scalar(node, f"options.{key}"))
    data["options"] = opts
    return data


def _make_set(sd: dict, point):
    kind = sd["kind"]
    if kind == "ball":
        return PNormBall(sd.get("center", point), sd["radius"], sd["p"])
    if kind == "intersection":
        return BallIntersection(sd["centers"], sd["radius"], sd["p"])
    if kind == "sublevel":
        return Sublevel(sd["A"], sd["b"], sd["c"], sd["level"])
    return Polytope(sd["G"], sd["h"])


def build(data: dict) -> ProblemFile:
    """ProblemFile from normalised data (as produced by ``normalise``)."""
    n = data["space"]["n"]
    obj = data["objective"]
    phi = QuadraticMap([obj["A"]], [obj["b"]], [obj["c"]])
    comps = data["constraint"]["components"]
    target = data["constraint"]["target"]
    if comps:
        g = QuadraticMap([c["A"] for c in comps], [c["b"] for c in comps], [c["c"] for c in comps])
        if isinstance(target, dict):
            C = Singleton(target["point"])
        elif isinstance(target, str):
            C = ProductCone((target,) * len(comps))
        else:
            C = ProductCone(tuple(target))
    else:
        g, C = None, None
    S = _make_set(data["set"], data["point"])
    if S.dim != n:
        raise FileDimensionError("set dimension does not match space.n")
    spec = ProblemSpec(phi, g, S, C, np.array(data["point"]))
    return ProblemFile(data, spec, dict(data.get("options", DEFAULT_OPTIONS)))


def parse_problem_file(text: str) -> ProblemFile:
    return build(normalise(text))


def load_problem_file(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem_file(fh.read())


def serialize(pf: ProblemFile | dict) -> str:
    """YAML text that parses back to the same normalised data."""
    data = pf.data if isinstance(pf, ProblemFile) else pf
    order = ["space", "objective", "constraint", "set", "point", "options"]
    return "\n".join(
        yaml.safe_dump({key: data[key]}, default_flow_style=None, sort_keys=False).rstrip()
        for key in order
        if key in data
    ) + "\n"
