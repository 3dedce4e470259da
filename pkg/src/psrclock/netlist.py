"""Clock-tree netlist: a small line-oriented description language.

One record per line, ``#`` starts a comment::

    format_version 1
    tree name=spread8 vdd=0.8 source_freq=500meg
    pulse_gen l1=1.0132n c1=1p l2=0.5n c2=2p boost_gain=1.5
    variation length_variation=0.1 distribution=gaussian_truncated samples=5000 seed=42
    branch name=b1 inductance=0.25n resistance=1.5 gaters=512 buffers=1024 ff=PRFF:4096 cap_multiplier=0.8

Quantities accept engineering suffixes on input. ``serialize_tree_spec``
writes the canonical form: fixed record and key order, SI values in
``repr`` float format, so a parse/serialize cycle is lossless and
byte-stable.
"""

import enum
import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .calibration import UnitCaps
from .elements import BoosterSpec, FlipFlopKind, PulseGenSpec
from .errors import NetlistError, ValidationError
from .rlc import RlcTank
from .units import parse_quantity

FORMAT_VERSION = 1

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class Distribution(enum.Enum):
    GAUSSIAN_TRUNCATED = "gaussian_truncated"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class VariationSpec:
    length_variation: float = 0.10
    distribution: Distribution = Distribution.GAUSSIAN_TRUNCATED
    samples: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.length_variation < 1:
            raise ValidationError("length_variation must be in [0, 1)",
                                  field="length_variation")
        if self.samples < 1:
            raise ValidationError("samples must be >= 1", field="samples")
        if self.seed < 0:
            raise ValidationError("seed must be unsigned", field="seed")


@dataclass(frozen=True)
class BranchSpec:
    name: str
    inductance: float
    resistance: float
    gater_count: int = 0
    buffer_count: int = 0
    ff_groups: Tuple[Tuple[FlipFlopKind, int], ...] = ()
    explicit_cap: Optional[float] = None
    cap_multiplier: float = 1.0

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValidationError(f"invalid branch name {self.name!r}", field="name")
        if not self.inductance > 0:
            raise ValidationError("non-positive inductance", field="inductance")
        if not self.resistance >= 0:
            raise ValidationError("negative resistance", field="resistance")
        if self.gater_count < 0:
            raise ValidationError("negative gater count", field="gaters")
        if self.buffer_count < 0:
            raise ValidationError("negative buffer count", field="buffers")
        for _, n in self.ff_groups:
            if n < 0:
                raise ValidationError("negative flip-flop count", field="ff")
        if self.explicit_cap is not None and not self.explicit_cap > 0:
            raise ValidationError("non-positive explicit_cap", field="explicit_cap")
        if not self.cap_multiplier > 0:
            raise ValidationError("non-positive cap_multiplier", field="cap_multiplier")

    @property
    def ff_count(self) -> int:
        return sum(n for _, n in self.ff_groups)


@dataclass(frozen=True)
class TreeSpec:
    name: str
    vdd: float
    source_freq: float
    pulse_gen: PulseGenSpec
    branches: Tuple[BranchSpec, ...]
    variation: Optional[VariationSpec] = None

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValidationError(f"invalid tree name {self.name!r}", field="name")
        if not self.vdd > 0:
            raise ValidationError("non-positive vdd", field="vdd")
        if not self.source_freq > 0:
            raise ValidationError("non-positive source_freq", field="source_freq")
        if not self.branches:
            raise ValidationError("tree has no branches", field="branch")
        seen = set()
        for b in self.branches:
            if b.name in seen:
                raise ValidationError(f"duplicate branch name {b.name!r}", field="name")
            seen.add(b.name)

    def with_ff_kind(self, kind: FlipFlopKind) -> "TreeSpec":
        """Same tree with every flip-flop group replaced by ``kind``."""
        branches = tuple(
            replace(b, ff_groups=((kind, b.ff_count),) if b.ff_groups else ())
            for b in self.branches)
        return replace(self, branches=branches)


@dataclass(frozen=True)
class Stage:
    """One level of the branch load chain (aggregated, not per instance)."""

    kind: str  # "gater", "buffer", or a flip-flop kind name
    count: int
    unit_cap: float

    @property
    def load(self) -> float:
        return self.count * self.unit_cap


@dataclass(frozen=True)
class NetworkBranch:
    name: str
    tank: RlcTank
    stages: Tuple[Stage, ...]
    cap_multiplier: float = 1.0


@dataclass(frozen=True)
class SimNetwork:
    name: str
    vdd: float
    source_freq: float
    pulse_gen: PulseGenSpec
    branches: Tuple[NetworkBranch, ...]
    nodes: Dict[str, int] = field(default_factory=dict)

    @property
    def tanks(self) -> List[RlcTank]:
        return [b.tank for b in self.branches]

    @property
    def total_capacitance(self) -> float:
        return sum(b.tank.capacitance for b in self.branches)

    def with_inductances(self, inductances) -> "SimNetwork":
        if len(inductances) != len(self.branches):
            raise ValidationError("one inductance per branch required")
        branches = tuple(replace(b, tank=replace(b.tank, inductance=float(l)))
                         for b, l in zip(self.branches, inductances))
        return replace(self, branches=branches)


# -- aggregation and elaboration ---------------------------------------------

def aggregate_branch_capacitance(branch: BranchSpec, unit_caps: UnitCaps) -> float:
    """Lumped tank capacitance of one branch, in farads.

    An explicit override wins over the stage sum; either way the OCV
    multiplier applies.
    """
    if branch.explicit_cap is not None:
        return branch.explicit_cap * branch.cap_multiplier
    total = branch.gater_count * unit_caps.gater + branch.buffer_count * unit_caps.buffer
    for kind, n in branch.ff_groups:
        total += n * unit_caps.ff_cap(kind)
    if not total > 0:
        raise ValidationError(f"empty branch load in branch {branch.name!r}",
                              field="explicit_cap")
    return branch.cap_multiplier * total


def _stages(branch: BranchSpec, unit_caps: UnitCaps) -> Tuple[Stage, ...]:
    m = branch.cap_multiplier
    stages = []
    if branch.gater_count:
        stages.append(Stage("gater", branch.gater_count, unit_caps.gater * m))
    if branch.buffer_count:
        stages.append(Stage("buffer", branch.buffer_count, unit_caps.buffer * m))
    for kind, n in branch.ff_groups:
        if n:
            stages.append(Stage(kind.value, n, unit_caps.ff_cap(kind) * m))
    return tuple(stages)


def elaborate(spec: TreeSpec, unit_caps: UnitCaps) -> SimNetwork:
    """Flatten a tree description into one RLC tank per branch."""
    branches = []
    nodes = {"V_SR": 0}
    for b in spec.branches:
        c = aggregate_branch_capacitance(b, unit_caps)
        branches.append(NetworkBranch(
            name=b.name,
            tank=RlcTank(inductance=b.inductance, capacitance=c, resistance=b.resistance),
            stages=_stages(b, unit_caps),
            cap_multiplier=b.cap_multiplier,
        ))
        for suffix in ("R_CLK", "Pclk", "I_L"):
            nodes[f"{b.name}.{suffix}"] = len(nodes)
    return SimNetwork(name=spec.name, vdd=spec.vdd, source_freq=spec.source_freq,
                      pulse_gen=spec.pulse_gen, branches=tuple(branches), nodes=nodes)


# -- text format ---------------------------------------------------------------

# per record: key -> (kind, required)
_SCHEMA = {
    "tree": {"name": ("ident", True), "vdd": ("float", True),
             "source_freq": ("float", True)},
    "pulse_gen": {"l1": ("float", True), "c1": ("float", True), "l2": ("float", True),
                  "c2": ("float", True), "boost_gain": ("float", False)},
    "variation": {"length_variation": ("float", True), "distribution": ("enum", False),
                  "samples": ("int", True), "seed": ("int", False)},
    "branch": {"name": ("ident", True), "inductance": ("float", True),
               "resistance": ("float", True), "gaters": ("int", False),
               "buffers": ("int", False), "ff": ("ffgroups", False),
               "explicit_cap": ("float", False), "cap_multiplier": ("float", False)},
}

# branch field name -> netlist key
_BRANCH_KEYS = {"gater_count": "gaters", "buffer_count": "buffers", "ff_groups": "ff"}


@dataclass
class _Token:
    text: str
    col: int


def _tokenize(line: str) -> List[_Token]:
    code = line.split("#", 1)[0]
    return [_Token(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", code)]


def _convert(kind, raw, key, err):
    if kind == "ident":
        if not _IDENT_RE.match(raw):
            raise err(f"invalid identifier {raw!r} for {key}")
        return raw
    if kind == "float":
        try:
            v = parse_quantity(raw)
        except ValueError:
            raise err(f"bad number {raw!r} for {key}") from None
        if not math.isfinite(v):
            raise err(f"non-finite {key}")
        return v
    if kind == "int":
        if not re.fullmatch(r"[+-]?\d+", raw):
            raise err(f"bad integer {raw!r} for {key}")
        return int(raw)
    if kind == "enum":
        try:
            return Distribution(raw)
        except ValueError:
            raise err(f"unknown distribution {raw!r}") from None
    if kind == "ffgroups":
        groups = []
        for part in raw.split(","):
            kname, sep, count = part.partition(":")
            if not sep or not re.fullmatch(r"[+-]?\d+", count):
                raise err(f"bad ff group {part!r}, expected KIND:COUNT")
            try:
                groups.append((FlipFlopKind(kname), int(count)))
            except ValueError:
                raise err(f"unknown flip-flop kind {kname!r}") from None
        return tuple(groups)
    raise AssertionError(kind)


def parse_tree_spec(text: str, source: str = "<string>") -> TreeSpec:
    """Parse netlist text into a validated ``TreeSpec``.

    Every problem is reported as a ``NetlistError`` carrying the line and
    column of the offending token.
    """
    version = None
    records = {"tree": [], "pulse_gen": [], "variation": [], "branch": []}
    last_line = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        last_line = lineno
        toks = _tokenize(line)
        if not toks:
            continue
        head = toks[0]

        def err(msg, col=head.col, field=None, _ln=lineno):
            return NetlistError(msg, _ln, col, source, field=field)

        if head.text == "format_version":
            if version is not None:
                raise err("duplicate format_version")
            if len(toks) != 2 or not toks[1].text.isdigit():
                raise err("format_version takes a single integer")
            version = int(toks[1].text)
            if version != FORMAT_VERSION:
                raise err(f"unsupported format_version {version}", toks[1].col)
            continue
        if version is None:
            raise err("format_version must be the first record")
        if head.text not in _SCHEMA:
            raise err(f"unknown record {head.text!r}")
        schema = _SCHEMA[head.text]
        values, cols = {}, {}
        for tok in toks[1:]:
            key, sep, raw = tok.text.partition("=")
            if not sep or not raw:
                raise err(f"expected key=value, got {tok.text!r}", tok.col)
            if key not in schema:
                raise err(f"unknown key {key!r} in {head.text}", tok.col, key)
            if key in values:
                raise err(f"duplicate key {key!r}", tok.col, key)
            values[key] = _convert(schema[key][0], raw, key,
                                   lambda m, c=tok.col + len(key) + 1, k=key: err(m, c, k))
            cols[key] = tok.col + len(key) + 1  # diagnostics point at the value
        for key, (_, required) in schema.items():
            if required and key not in values:
                raise err(f"missing required key {key!r} in {head.text}", head.col, key)
        records[head.text].append((lineno, head.col, values, cols))

    if version is None:
        raise NetlistError("empty netlist: missing format_version", 1, 1, source)
    for rec, (lo, hi) in {"tree": (1, 1), "pulse_gen": (1, 1), "variation": (0, 1),
                          "branch": (1, None)}.items():
        n = len(records[rec])
        if n < lo:
            what = "at least one branch" if rec == "branch" else f"a {rec} record"
            raise NetlistError(f"netlist needs {what}", last_line or 1, 1, source,
                               field=rec)
        if hi is not None and n > hi:
            ln, col, _, _ = records[rec][hi]
            raise NetlistError(f"duplicate {rec} record", ln, col, source, field=rec)

    def build(rec, factory, kwargs, key_of=lambda f: f):
        lineno, col, values, cols = rec
        try:
            return factory(**kwargs)
        except ValidationError as exc:
            key = key_of(exc.field) if exc.field else None
            raise NetlistError(str(exc), lineno, cols.get(key, col), source,
                               field=exc.field) from None

    tv = records["tree"][0]
    prec = records["pulse_gen"][0]
    pv = prec[2]
    booster = build(prec, BoosterSpec, dict(l2=pv["l2"], c2=pv["c2"],
                                            boost_gain=pv.get("boost_gain", 1.0)))
    pulse = build(prec, PulseGenSpec, dict(l1=pv["l1"], c1=pv["c1"], booster=booster))
    variation = None
    if records["variation"]:
        vv = records["variation"][0][2]
        variation = build(records["variation"][0], VariationSpec, dict(
            length_variation=vv["length_variation"],
            distribution=vv.get("distribution", Distribution.GAUSSIAN_TRUNCATED),
            samples=vv["samples"], seed=vv.get("seed", 0)))
    branches = []
    seen = {}
    for rec in records["branch"]:
        bv = rec[2]
        if bv["name"] in seen:
            raise NetlistError(f"duplicate branch name {bv['name']!r} "
                               f"(first defined on line {seen[bv['name']]})",
                               rec[0], rec[3]["name"], source, field="name")
        seen[bv["name"]] = rec[0]
        branches.append(build(rec, BranchSpec, dict(
            name=bv["name"], inductance=bv["inductance"], resistance=bv["resistance"],
            gater_count=bv.get("gaters", 0), buffer_count=bv.get("buffers", 0),
            ff_groups=bv.get("ff", ()), explicit_cap=bv.get("explicit_cap"),
            cap_multiplier=bv.get("cap_multiplier", 1.0)),
            key_of=lambda f: _BRANCH_KEYS.get(f, f)))
    tvals = tv[2]
    return build(tv, TreeSpec, dict(
        name=tvals["name"], vdd=tvals["vdd"], source_freq=tvals["source_freq"],
        pulse_gen=pulse, branches=tuple(branches), variation=variation))


def load_tree_spec(path) -> TreeSpec:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_tree_spec(text, source=str(path))


def _f(x: float) -> str:
    return repr(float(x))


def serialize_tree_spec(spec: TreeSpec) -> str:
    """Canonical text form of ``spec``."""
    out = [f"format_version {FORMAT_VERSION}",
           f"tree name={spec.name} vdd={_f(spec.vdd)} source_freq={_f(spec.source_freq)}"]
    p = spec.pulse_gen
    out.append(f"pulse_gen l1={_f(p.l1)} c1={_f(p.c1)} l2={_f(p.booster.l2)} "
               f"c2={_f(p.booster.c2)} boost_gain={_f(p.booster.boost_gain)}")
    if spec.variation is not None:
        v = spec.variation
        out.append(f"variation length_variation={_f(v.length_variation)} "
                   f"distribution={v.distribution.value} samples={v.samples} seed={v.seed}")
    for b in spec.branches:
        parts = [f"branch name={b.name}", f"inductance={_f(b.inductance)}",
                 f"resistance={_f(b.resistance)}", f"gaters={b.gater_count}",
                 f"buffers={b.buffer_count}"]
        if b.ff_groups:
            parts.append("ff=" + ",".join(f"{k.value}:{n}" for k, n in b.ff_groups))
        if b.explicit_cap is not None:
            parts.append(f"explicit_cap={_f(b.explicit_cap)}")
        parts.append(f"cap_multiplier={_f(b.cap_multiplier)}")
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"
