"""Configuration space descriptor (CSD) language.

A descriptor is a UTF-8 text file with one knob per line. Each knob names an
HLS directive, the function (and array/loop label) it applies to, any fixed
parameters, and one or more value sets to sweep. Value sets are brace
delimited; a generated range is written ``{lo->hi,pow_2}`` or ``{lo->hi,div}``.
A ``@bind_<tag>`` decorator appended to a knob's last value set forces equal
values across all knobs carrying the same tag.

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
BIND_RE = re.compile(r"@bind_([A-Za-z_][A-Za-z0-9_]*)$")
RANGE_RE = re.compile(r"(\d+)\s*->\s*(\d+)\s*,\s*([A-Za-z_][A-Za-z0-9_]*)$")


class CsdError(Exception):
    """Base class for descriptor errors."""


class CsdSyntaxError(CsdError):
    """Raised when a descriptor line cannot be parsed.

    Carries the 1-based line number and, when known, the column.
    """

    def __init__(self, message: str, line: int, column: Optional[int] = None):
        self.line = line
        self.column = column
        loc = f"line {line}" if column is None else f"line {line}, col {column}"
        super().__init__(f"{loc}: {message}")


class CsdValidationError(CsdError):
    """Raised by parse_csd when the descriptor violates a structural invariant."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


class GeneratorKind(Enum):
    POW2 = "pow_2"
    DIV = "div"


@dataclass(frozen=True)
class Value:
    """A single knob value: an integer or a categorical token."""

    raw: Union[int, str]

    def __post_init__(self):
        if isinstance(self.raw, str) and not IDENT_RE.match(self.raw):
            raise ValueError(f"invalid categorical token: {self.raw!r}")

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.raw, int)

    def render(self) -> str:
        return str(self.raw)


@dataclass(frozen=True)
class ExplicitList:
    values: tuple[Value, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("explicit value set must be non-empty")
        if len(set(v.raw for v in self.values)) != len(self.values):
            raise ValueError("explicit value set contains duplicates")

    @property
    def is_numeric(self) -> bool:
        return all(v.is_numeric for v in self.values)

    def render(self) -> str:
        return "{" + ",".join(v.render() for v in self.values) + "}"


@dataclass(frozen=True)
class GeneratedRange:
    lo: int
    hi: int
    generator: GeneratorKind

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise ValueError(f"invalid range bounds {self.lo}->{self.hi}")

    @property
    def is_numeric(self) -> bool:
        return True

    def render(self) -> str:
        return "{%d->%d,%s}" % (self.lo, self.hi, self.generator.value)


ValueSet = Union[ExplicitList, GeneratedRange]


def expand_value_set(vs: ValueSet) -> list[Value]:
    """Expand a value set to its ordered list of values.

    Explicit lists keep their written order; generated ranges expand to a
    strictly increasing sequence (powers of two in [lo, hi], or the divisors
    of hi that are >= lo).
    """
    if isinstance(vs, ExplicitList):
        return list(vs.values)
    if vs.generator is GeneratorKind.POW2:
        out, v = [], 1
        while v <= vs.hi:
            if v >= vs.lo:
                out.append(Value(v))
            v *= 2
        return out
    # divisors of hi within [lo, hi], ascending
    return [Value(d) for d in range(vs.lo, vs.hi + 1) if vs.hi % d == 0]


@dataclass(frozen=True)
class DirectiveKind:
    """Registry entry for one directive token.

    ``takes_location`` controls whether the line carries function and target
    fields; ``fixed_params`` names the constant fields between the location
    and the value sets; ``set_names`` fixes the value-set arity.
    """

    token: str
    takes_location: bool
    fixed_params: tuple[str, ...]
    set_names: tuple[str, ...]


DEFAULT_DIRECTIVES: dict[str, DirectiveKind] = {
    d.token: d
    for d in [
        DirectiveKind("resource", True, (), ("core",)),
        DirectiveKind("array_partition", True, ("dim",), ("type", "factor")),
        DirectiveKind("unroll", True, (), ("factor",)),
        DirectiveKind("pipeline", True, (), ("ii",)),
        DirectiveKind("inline", True, (), ("mode",)),
        DirectiveKind("clock", False, (), ("period",)),
    ]
}


@dataclass(frozen=True)
class Knob:
    directive: DirectiveKind
    function: Optional[str]
    target: Optional[str]
    fixed_params: tuple[str, ...]
    value_sets: tuple[ValueSet, ...]
    bind_tag: Optional[str] = None

    @property
    def is_clock(self) -> bool:
        return self.directive.token == "clock"

    def identity(self) -> tuple:
        """Key used to detect duplicate knobs."""
        return (self.directive.token, self.function, self.target, self.fixed_params)

    def render(self) -> str:
        parts = [self.directive.token]
        if self.directive.takes_location:
            parts.append(self.function or "")
            parts.append(self.target or "")
        parts.extend(self.fixed_params)
        parts.extend(vs.render() for vs in self.value_sets)
        line = ";".join(parts)
        if self.bind_tag:
            line += f"@bind_{self.bind_tag}"
        return line


@dataclass
class Diagnostic:
    code: str
    knob_index: Optional[int]
    message: str

    def __str__(self):
        where = "" if self.knob_index is None else f"knob {self.knob_index}: "
        return f"{self.code}: {where}{self.message}"


@dataclass(frozen=True)
class CSD:
    knobs: tuple[Knob, ...]
    source_text: str = ""

    def bind_groups(self) -> dict[str, list[int]]:
        """Map each bind tag to the indices of its member knobs, in order."""
        groups: dict[str, list[int]] = {}
        for i, k in enumerate(self.knobs):
            if k.bind_tag:
                groups.setdefault(k.bind_tag, []).append(i)
        return groups


def _parse_value_set(text: str, lineno: int) -> ValueSet:
    if not (text.startswith("{") and text.endswith("}")):
        raise CsdSyntaxError(f"value set must be brace-delimited: {text!r}", lineno)
    body = text[1:-1].strip()
    if not body:
        raise CsdSyntaxError("empty value set", lineno)
    m = RANGE_RE.match(body)
    if m:
        lo, hi, gen = int(m.group(1)), int(m.group(2)), m.group(3)
        try:
            kind = GeneratorKind(gen)
        except ValueError:
            raise CsdSyntaxError(f"unknown range generator {gen!r}", lineno) from None
        try:
            return GeneratedRange(lo, hi, kind)
        except ValueError as e:
            raise CsdSyntaxError(str(e), lineno) from None
    if "->" in body:
        raise CsdSyntaxError(f"malformed range set: {{{body}}}", lineno)
    values = []
    for tok in body.split(","):
        tok = tok.strip()
        if not tok:
            raise CsdSyntaxError("empty value in set", lineno)
        if tok.lstrip("-").isdigit():
            values.append(Value(int(tok)))
        elif IDENT_RE.match(tok):
            values.append(Value(tok))
        else:
            raise CsdSyntaxError(f"malformed value {tok!r}", lineno)
    try:
        return ExplicitList(tuple(values))
    except ValueError as e:
        raise CsdSyntaxError(str(e), lineno) from None


def _parse_line(line: str, lineno: int, registry: dict[str, DirectiveKind]) -> Knob:
    bind_tag = None
    m = BIND_RE.search(line)
    if m:
        bind_tag = m.group(1)
        line = line[: m.start()]
    elif "@" in line:
        raise CsdSyntaxError("malformed @bind decorator", lineno, line.index("@") + 1)

    fields = [f.strip() for f in line.split(";")]
    if not fields or not fields[0]:
        raise CsdSyntaxError("missing directive kind", lineno, 1)
    kind = registry.get(fields[0])
    if kind is None:
        raise CsdSyntaxError(f"unknown directive kind {fields[0]!r}", lineno, 1)

    pos = 1
    function = target = None
    if kind.takes_location:
        if len(fields) < 3:
            raise CsdSyntaxError(f"{kind.token}: missing function/target fields", lineno)
        function, target = fields[1], fields[2]
        for name, val in (("function", function), ("target", target)):
            if not IDENT_RE.match(val):
                raise CsdSyntaxError(f"invalid {name} identifier {val!r}", lineno)
        pos = 3
    fixed = tuple(fields[pos : pos + len(kind.fixed_params)])
    if len(fixed) != len(kind.fixed_params):
        raise CsdSyntaxError(
            f"{kind.token}: expected fixed parameters {kind.fixed_params}", lineno
        )
    pos += len(kind.fixed_params)
    set_fields = fields[pos:]
    if len(set_fields) != len(kind.set_names):
        raise CsdSyntaxError(
            f"{kind.token}: expected {len(kind.set_names)} value set(s), "
            f"got {len(set_fields)}",
            lineno,
        )
    value_sets = tuple(_parse_value_set(f, lineno) for f in set_fields)
    return Knob(kind, function, target, fixed, value_sets, bind_tag)


def validate_csd(csd: CSD) -> list[Diagnostic]:
    """Check every structural invariant; returns one diagnostic per violation."""
    diags: list[Diagnostic] = []
    seen: dict[tuple, int] = {}
    clock_indices = []
    for i, knob in enumerate(csd.knobs):
        ident = knob.identity()
        if ident in seen:
            diags.append(
                Diagnostic(
                    "DuplicateKnob", i, f"same directive/location as knob {seen[ident]}"
                )
            )
        else:
            seen[ident] = i
        if knob.is_clock:
            clock_indices.append(i)
        if knob.bind_tag is not None and not knob.value_sets[-1].is_numeric:
            diags.append(
                Diagnostic("BindOnCategoricalSet", i, f"tag {knob.bind_tag!r}")
            )
    if not clock_indices:
        diags.append(Diagnostic("MissingClock", None, "exactly one clock knob required"))
    elif len(clock_indices) > 1:
        for i in clock_indices[1:]:
            diags.append(Diagnostic("DuplicateClock", i, "more than one clock knob"))

    for tag, members in csd.bind_groups().items():
        expansions = []
        for i in members:
            vs = csd.knobs[i].value_sets[-1]
            if vs.is_numeric:
                expansions.append([v.raw for v in expand_value_set(vs)])
        if expansions and any(e != expansions[0] for e in expansions[1:]):
            diags.append(
                Diagnostic(
                    "MismatchedBindSets",
                    members[0],
                    f"tag {tag!r}: bound sets expand to different values",
                )
            )
    return diags


def parse_csd(
    text: str,
    registry: Optional[dict[str, DirectiveKind]] = None,
    validate: bool = True,
) -> CSD:
    """Parse descriptor text into a CSD.

    Raises CsdSyntaxError on malformed lines and, unless ``validate`` is
    False, CsdValidationError when structural invariants fail.
    """
    if not text.strip():
        raise CsdSyntaxError("empty descriptor", 1)
    registry = registry or DEFAULT_DIRECTIVES
    knobs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        knobs.append(_parse_line(line, lineno, registry))
    csd = CSD(tuple(knobs), source_text=text)
    if validate:
        diags = validate_csd(csd)
        if diags:
            raise CsdValidationError(diags)
    return csd


def serialize_csd(csd: CSD) -> str:
    """Render a CSD in canonical form; reparsing yields an equal structure."""
    return "".join(k.render() + "\n" for k in csd.knobs)


def csd_equal(a: CSD, b: CSD) -> bool:
    """Structural equality, ignoring source text."""
    return a.knobs == b.knobs
