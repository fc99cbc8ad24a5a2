"""Scene files: parsing, validation, and the bundled example scenes.

A scene is a line-oriented text file with three sections:

    [scene]   dim, bbox, combine (union | intersection), name
    [set]     label = primitive(...)          one labeled component per line
    [radius]  label = value | expression      plus optional lipschitz = L
    [samples] seed, boundary_samples, density, probes, rho_max,
              delta_list, point = (...), ray = (...) dir (...)

Primitives: halfspace(normal=(..), offset=v), ball(center=(..), radius=r),
ballcomplement(center=(..), radius=r), slab(normal=(..), lo=a, hi=b),
line(point=(..), direction=(..)), plane(point=(..), basis=((..), (..))),
point(location=(..)), points((..), (..), ...),
intersection(primitive, primitive, ...).

Decimal literals parse bit-exactly through the platform float parser; the
token ``inf`` denotes the unbounded radius.  Parse errors carry line and
column numbers.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .geom import INF
from .proximal import RadiusField
from .sets import (
    AffineSubspace,
    BallComplement,
    ClosedBall,
    ClosedSetDesc,
    FinitePointSet,
    HalfSpace,
    Intersection,
    SetError,
    Slab,
    Union,
)


class SceneError(ValueError):
    """Scene text that does not parse or validate; carries line info."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


@dataclass
class SampleSpec:
    seed: int = 0
    boundary_samples: int = 200
    density: int | None = None
    probes: int = 1000
    rho_max: float | None = None
    delta_list: tuple = (1.0, 10.0, 100.0)
    points: list = field(default_factory=list)
    rays: list = field(default_factory=list)


@dataclass
class Scene:
    name: str
    desc: ClosedSetDesc
    radius_field: RadiusField
    samples: SampleSpec
    source_text: str

    def digest(self, extra: dict | None = None) -> str:
        payload = {"scene": self.source_text, "extra": extra or {}}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Expression tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<punct>[(),=]))"
)


class _Tokens:
    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.pos = 0
        self.items: list[tuple[str, str, int]] = []
        while self.pos < len(text):
            m = _TOKEN_RE.match(text, self.pos)
            if m is None or m.end() == self.pos:
                if text[self.pos :].strip() == "":
                    break
                raise SceneError(f"bad token near {text[self.pos:self.pos+12]!r}", line, self.pos + 1)
            col = m.start(m.lastgroup) + 1
            self.items.append((m.lastgroup, m.group(m.lastgroup), col))
            self.pos = m.end()
        self.idx = 0

    def peek(self):
        return self.items[self.idx] if self.idx < len(self.items) else (None, None, len(self.text))

    def next(self, expect_kind=None, expect_value=None):
        kind, value, col = self.peek()
        if kind is None:
            raise SceneError("unexpected end of expression", self.line, col)
        if expect_kind is not None and kind != expect_kind:
            raise SceneError(f"expected {expect_kind}, got {value!r}", self.line, col)
        if expect_value is not None and value != expect_value:
            raise SceneError(f"expected {expect_value!r}, got {value!r}", self.line, col)
        self.idx += 1
        return kind, value, col

    def done(self) -> bool:
        return self.idx >= len(self.items)


def _parse_value(tok: _Tokens):
    kind, value, col = tok.peek()
    if kind == "num":
        tok.next()
        return float(value)
    if kind == "name" and value == "inf":
        tok.next()
        return INF
    if kind == "punct" and value == "(":
        return _parse_tuple(tok)
    if kind == "name":
        return _parse_call(tok)
    raise SceneError(f"unexpected token {value!r}", tok.line, col)


def _parse_tuple(tok: _Tokens):
    tok.next(expect_value="(")
    items = []
    while True:
        kind, value, col = tok.peek()
        if kind == "punct" and value == ")":
            tok.next()
            return tuple(items)
        items.append(_parse_value(tok))
        kind, value, col = tok.peek()
        if kind == "punct" and value == ",":
            tok.next()
        elif not (kind == "punct" and value == ")"):
            raise SceneError(f"expected ',' or ')', got {value!r}", tok.line, col)


def _parse_call(tok: _Tokens):
    _, fname, col = tok.next(expect_kind="name")
    tok.next(expect_value="(")
    args: list = []
    kwargs: dict = {}
    while True:
        kind, value, c = tok.peek()
        if kind == "punct" and value == ")":
            tok.next()
            return ("call", fname, args, kwargs, col)
        if kind == "name":
            nxt = tok.items[tok.idx + 1] if tok.idx + 1 < len(tok.items) else (None, None, 0)
            if nxt[0] == "punct" and nxt[1] == "=":
                _, key, _ = tok.next()
                tok.next(expect_value="=")
                kwargs[key] = _parse_value(tok)
            else:
                args.append(_parse_value(tok))
        else:
            args.append(_parse_value(tok))
        kind, value, c = tok.peek()
        if kind == "punct" and value == ",":
            tok.next()
        elif not (kind == "punct" and value == ")"):
            raise SceneError(f"expected ',' or ')', got {value!r}", tok.line, c)


def _build_primitive(node, label: str, line: int):
    if not (isinstance(node, tuple) and node and node[0] == "call"):
        raise SceneError("component must be a primitive expression", line)
    _, fname, args, kwargs, col = node

    def need(key):
        if key not in kwargs:
            raise SceneError(f"{fname} needs {key}=...", line, col)
        return kwargs[key]

    try:
        if fname == "halfspace":
            return HalfSpace(need("normal"), need("offset"), label=label)
        if fname == "ball":
            return ClosedBall(need("center"), need("radius"), label=label)
        if fname == "ballcomplement":
            return BallComplement(need("center"), need("radius"), label=label)
        if fname == "slab":
            return Slab(need("normal"), need("lo"), need("hi"), label=label)
        if fname == "line":
            return AffineSubspace(need("point"), [need("direction")], label=label)
        if fname == "plane":
            return AffineSubspace(need("point"), list(need("basis")), label=label)
        if fname == "point":
            return FinitePointSet([need("location")], label=label)
        if fname == "points":
            if not args:
                raise SceneError("points(...) needs at least one tuple", line, col)
            return FinitePointSet(list(args), label=label)
        if fname == "intersection":
            children = [
                _build_primitive(a, label=f"{label}.{k}", line=line) for k, a in enumerate(args)
            ]
            return Intersection(children)
    except (SetError, ValueError) as exc:
        raise SceneError(f"bad {fname}: {exc}", line, col) from exc
    raise SceneError(f"unknown primitive {fname!r}", line, col)


# ---------------------------------------------------------------------------
# Scene file parsing
# ---------------------------------------------------------------------------

_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(.*)$")


def parse_scene(text: str, name: str = "scene") -> Scene:
    section = None
    meta: dict = {}
    set_lines: list[tuple[str, str, int]] = []
    radius_entries: dict[str, str] = {}
    lipschitz = None
    spec = SampleSpec()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("scene", "set", "radius", "samples"):
                raise SceneError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise SceneError("content before any [section]", lineno)
        m = _KEY_RE.match(line)
        if m is None:
            raise SceneError(f"expected key = value, got {line!r}", lineno)
        key, value = m.group(1), m.group(2).strip()
        if section == "scene":
            meta[key] = (value, lineno)
        elif section == "set":
            set_lines.append((key, value, lineno))
        elif section == "radius":
            if key == "lipschitz":
                lipschitz = float(value)
            else:
                radius_entries[key] = value
        elif section == "samples":
            _apply_sample_key(spec, key, value, lineno)

    if not set_lines:
        raise SceneError("scene has no [set] components", 1)

    dim = int(meta.get("dim", ("2", 0))[0])
    combine = meta.get("combine", ("union", 0))[0].lower()
    scene_name = meta.get("name", (name, 0))[0]

    leaves = []
    group_labels: dict[str, list[str]] = {}
    for label, value, lineno in set_lines:
        tok = _Tokens(value, lineno)
        node = _parse_value(tok)
        if not tok.done():
            raise SceneError("trailing tokens after primitive", lineno)
        built = _build_primitive(node, label=label, line=lineno)
        if isinstance(built, Intersection):
            # One scene component, several internal leaves: a single radius
            # rule covers the whole group.
            group_labels[label] = [child.label for child in built.children]
        leaves.append(built)

    if combine == "union":
        root = leaves[0] if len(leaves) == 1 else Union(leaves)
    elif combine == "intersection":
        root = leaves[0] if len(leaves) == 1 else Intersection(leaves)
    else:
        raise SceneError(f"unknown combine mode {combine!r}", meta.get("combine", (None, 1))[1])

    box = None
    if "bbox" in meta:
        value, lineno = meta["bbox"]
        tok = _Tokens(value, lineno)
        lo = _parse_value(tok)
        hi = _parse_value(tok)
        if not tok.done() or not isinstance(lo, tuple) or not isinstance(hi, tuple):
            raise SceneError("bbox needs two tuples: (lo...) (hi...)", lineno)
        box = (lo, hi)

    try:
        desc = ClosedSetDesc(root, box=box, name=scene_name)
    except SetError as exc:
        raise SceneError(str(exc)) from exc
    if desc.dim != dim:
        raise SceneError(f"declared dim {dim} but primitives have dimension {desc.dim}")

    if not radius_entries:
        radius_entries = {leaf.label: "inf" for leaf in desc.leaves}
    for group, children in group_labels.items():
        if group in radius_entries:
            rule = radius_entries.pop(group)
            for child in children:
                radius_entries[child] = rule
    try:
        radius_field = RadiusField.from_sources(radius_entries, lipschitz=lipschitz)
    except Exception as exc:
        raise SceneError(f"bad radius rule: {exc}") from exc

    scene = Scene(scene_name, desc, radius_field, spec, text)
    _validate_scene(scene)
    return scene


def _apply_sample_key(spec: SampleSpec, key: str, value: str, lineno: int):
    try:
        if key == "seed":
            spec.seed = int(value)
        elif key == "boundary_samples":
            spec.boundary_samples = int(value)
        elif key == "density":
            spec.density = int(value)
        elif key == "probes":
            spec.probes = int(value)
        elif key == "rho_max":
            spec.rho_max = float(value)
        elif key == "delta_list":
            spec.delta_list = tuple(float(v) for v in re.split(r"[,\s]+", value) if v)
        elif key == "point":
            tok = _Tokens(value, lineno)
            spec.points.append(_parse_value(tok))
        elif key == "ray":
            m = re.match(r"^(.*)\bdir\b(.*)$", value)
            if m is None:
                raise SceneError("ray needs the form (point) dir (direction)", lineno)
            p = _parse_value(_Tokens(m.group(1), lineno))
            d = _parse_value(_Tokens(m.group(2), lineno))
            spec.rays.append((p, d))
        else:
            raise SceneError(f"unknown sample key {key!r}", lineno)
    except SceneError:
        raise
    except ValueError as exc:
        raise SceneError(f"bad value for {key}: {exc}", lineno) from exc


def _validate_scene(scene: Scene):
    desc = scene.desc
    missing = scene.radius_field.covers(desc)
    if missing:
        raise SceneError(f"radius rules missing for components {missing}")
    unknown = [k for k in scene.radius_field.rules if k not in {l.label for l in desc.leaves}]
    if unknown:
        raise SceneError(f"radius rules for unknown labels {unknown}")
    try:
        desc.validate()
    except SetError as exc:
        raise SceneError(str(exc)) from exc
    lo, hi = desc.box
    for p in scene.samples.points:
        arr = np.asarray(p, dtype=float)
        if arr.shape[0] != desc.dim or np.any(arr < lo) or np.any(arr > hi):
            raise SceneError(f"probe point {p} outside the declared bounding box")
    if scene.radius_field.lipschitz is not None:
        if not scene.radius_field.validate_continuity(desc, seed=scene.samples.seed):
            raise SceneError("radius field failed its declared continuity (Lipschitz) audit")


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    import os

    return parse_scene(text, name=os.path.splitext(os.path.basename(str(path)))[0])
