"""Problem-definition language: tokenizer, recursive-descent parser, printer.

A document declares one universe (variables with finite supports), the
observed functionals, one or more named estimands, optional assumptions
and an optional observed point::

    universe grid {
      variable Y { support: [0, 1] }
      variable Z { support: [0, 1] }
      grid_step: 0.05
    }
    observe { expect(Y | Z=1), prob(Z=1) }
    estimand mean_y { expect(Y) }
    assume bounded(Y, 0, 1)
    given { expect(Y | Z=1) = 0.6  prob(Z=1) = 0.75 }

Numbers are kept as exact fractions of their decimal text, so printing and
reparsing a document gives back an equal :class:`ProblemSpec`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .errors import DSLSyntaxError, DuplicateDeclaration, SpecError, UnknownIdentifier
from .values import MISSING

KEYWORDS = {
    "universe", "grid", "population", "variable", "support", "grid_step", "units",
    "observe", "estimand", "assume", "given", "expect", "prob", "dist", "mean_diff",
    "missing",
}  # fmt: skip

# name -> argument kinds ("var" must be a declared variable, "num" a number)
BUILTINS = {
    "bounded": ("var", "num", "num"),
    "randomized": ("var",),
    "independent": ("var", "var"),
    "fixed": ("var", "num", "num"),
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}()\[\],:|=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "punct" | "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# -- syntax tree ----------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    """An observation or estimand functional.

    ``kind`` is expect, prob, dist or mean_diff; ``value`` is the event value
    of prob; ``given`` an optional (variable, value) condition; ``other`` the
    second variable of mean_diff.
    """

    kind: str
    var: str
    value: Optional[Fraction] = None
    given: Optional[tuple] = None
    other: Optional[str] = None
    pos: tuple = field(default=(0, 0), compare=False, repr=False)

    def variables(self) -> tuple:
        names = [self.var]
        if self.other:
            names.append(self.other)
        if self.given:
            names.append(self.given[0])
        return tuple(names)


@dataclass(frozen=True)
class Variable:
    name: str
    support: tuple
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class UniverseDecl:
    kind: str  # "grid" | "population"
    variables: tuple
    grid_step: Optional[Fraction] = None
    units: Optional[int] = None

    def variable(self, name) -> Variable:
        return next(v for v in self.variables if v.name == name)


@dataclass(frozen=True)
class EstimandDecl:
    name: str
    expr: Expr


@dataclass(frozen=True)
class AssumeDecl:
    builtin: str
    args: tuple  # str for variables, Fraction for numbers
    pos: tuple = field(default=(0, 0), compare=False, repr=False)

    @property
    def name(self) -> str:
        return f"{self.builtin}({', '.join(_arg_text(a) for a in self.args)})"


GivenValue = Union[Fraction, tuple, object]


@dataclass(frozen=True)
class Binding:
    expr: Expr
    value: GivenValue


@dataclass(frozen=True)
class ProblemSpec:
    universe: UniverseDecl
    observe: tuple
    estimands: tuple
    assumptions: tuple = ()
    given: Optional[tuple] = None

    def l0(self) -> Optional[tuple]:
        """The observed point in ``observe`` order, or None."""
        if self.given is None:
            return None
        by_expr = {b.expr: b.value for b in self.given}
        return tuple(by_expr[e] for e in self.observe)


# -- parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise DSLSyntaxError(msg, tok.line, tok.col)

    def at(self, text) -> bool:
        return self.tok.kind in ("ident", "punct") and self.tok.text == text

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what="identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def number(self) -> Fraction:
        t = self.tok
        if t.kind != "num":
            self.fail(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        return Fraction(t.text)

    # problem := stmt*
    def problem(self) -> dict:
        parts = {"universe": None, "observe": None, "estimands": [], "assume": [], "given": None}
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("universe"):
                if parts["universe"] is not None:
                    raise DuplicateDeclaration("a second universe block", t.line, t.col)
                parts["universe"] = self.universe()
            elif self.at("observe"):
                if parts["observe"] is not None:
                    raise DuplicateDeclaration("a second observe block", t.line, t.col)
                parts["observe"] = self.observe()
            elif self.at("estimand"):
                parts["estimands"].append(self.estimand())
            elif self.at("assume"):
                parts["assume"].append(self.assume())
            elif self.at("given"):
                if parts["given"] is not None:
                    raise DuplicateDeclaration("a second given block", t.line, t.col)
                parts["given"] = self.given()
            else:
                self.fail(f"expected a statement, found {t.text!r}")
        return parts

    def universe(self) -> UniverseDecl:
        self.expect("universe")
        t = self.tok
        if not (self.at("grid") or self.at("population")):
            self.fail("universe kind must be 'grid' or 'population'")
        kind = t.text
        self.i += 1
        self.expect("{")
        variables, step, units = [], None, None
        while not self.at("}"):
            t = self.tok
            if self.at("variable"):
                self.i += 1
                name = self.ident("variable name")
                self.expect("{")
                self.expect("support")
                self.expect(":")
                support = self.num_list()
                self.expect("}")
                variables.append(Variable(name.text, support, (name.line, name.col)))
            elif self.at("grid_step"):
                self.i += 1
                self.expect(":")
                if step is not None:
                    raise DuplicateDeclaration("grid_step declared twice", t.line, t.col)
                step = self.number()
            elif self.at("units"):
                self.i += 1
                self.expect(":")
                if units is not None:
                    raise DuplicateDeclaration("units declared twice", t.line, t.col)
                n = self.number()
                if n.denominator != 1 or n < 1:
                    self.fail("units must be a positive integer", t)
                units = int(n)
            else:
                self.fail(f"expected a declaration, found {t.text or 'end of input'!r}")
        self.expect("}")
        return UniverseDecl(kind, tuple(variables), step, units)

    def num_list(self) -> tuple:
        self.expect("[")
        vals = [self.number()]
        while self.at(","):
            self.i += 1
            vals.append(self.number())
        self.expect("]")
        return tuple(vals)

    def observe(self) -> tuple:
        self.expect("observe")
        self.expect("{")
        exprs = [self.expr()]
        while self.at(","):
            self.i += 1
            exprs.append(self.expr())
        self.expect("}")
        return tuple(exprs)

    def estimand(self) -> EstimandDecl:
        self.expect("estimand")
        name = self.ident("estimand name")
        self.expect("{")
        e = self.expr()
        self.expect("}")
        return name, EstimandDecl(name.text, e)

    def assume(self) -> AssumeDecl:
        self.expect("assume")
        name = self.ident("assumption name")
        self.expect("(")
        args = [self.arg()]
        while self.at(","):
            self.i += 1
            args.append(self.arg())
        self.expect(")")
        return AssumeDecl(name.text, tuple(args), (name.line, name.col))

    def arg(self):
        if self.tok.kind == "num":
            return self.number()
        return self.ident("argument").text

    def given(self) -> tuple:
        self.expect("given")
        self.expect("{")
        out = []
        while not self.at("}"):
            e = self.expr()
            self.expect("=")
            out.append(Binding(e, self.given_value()))
            if self.at(","):
                self.i += 1
        self.expect("}")
        return tuple(out)

    def given_value(self):
        if self.at("missing"):
            self.i += 1
            return MISSING
        if self.at("["):
            return self.num_list()
        return self.number()

    def condition(self):
        if not self.at("|"):
            return None
        self.i += 1
        var = self.ident("variable")
        self.expect("=")
        return (var.text, self.number()), var

    def expr(self) -> Expr:
        t = self.tok
        kinds = ("expect", "prob", "dist", "mean_diff")
        if t.kind != "ident" or t.text not in kinds:
            self.fail(f"expected one of {', '.join(kinds)}, found {t.text or 'end of input'!r}")
        self.i += 1
        self.expect("(")
        var = self.ident("variable")
        refs = [var]
        value = other = given = None
        if t.text == "prob":
            self.expect("=")
            value = self.number()
        if t.text == "mean_diff":
            self.expect(",")
            o = self.ident("variable")
            other = o.text
            refs.append(o)
        else:
            cond = self.condition()
            if cond:
                given, ref = cond
                refs.append(ref)
        self.expect(")")
        e = Expr(t.text, var.text, value, given, other, (t.line, t.col))
        object.__setattr__(e, "_refs", tuple(refs))
        return e


def _check(parts) -> ProblemSpec:
    u = parts["universe"]
    if u is None:
        raise SpecError("the document declares no universe")
    if not u.variables:
        raise SpecError("the universe declares no variables")
    declared: dict = {}
    for v in u.variables:
        if v.name in declared:
            raise DuplicateDeclaration(f"variable {v.name} declared twice", *v.pos)
        if len(set(v.support)) != len(v.support):
            raise SpecError(f"support of {v.name} repeats a value", *v.pos)
        declared[v.name] = v
    if u.kind == "grid" and u.units is not None:
        raise SpecError("units belongs to population universes")
    if u.kind == "population" and u.units is None:
        raise SpecError("a population universe needs units")
    if u.kind == "population" and u.grid_step is not None:
        raise SpecError("grid_step belongs to grid universes; populations use units")
    if u.grid_step is not None and not 0 < u.grid_step <= 1:
        raise SpecError("grid_step must lie in (0, 1]")

    def check_expr(e: Expr):
        for ref in getattr(e, "_refs", ()):
            if ref.text not in declared:
                raise UnknownIdentifier(f"unknown variable {ref.text}", ref.line, ref.col)
        if e.given and e.given[0] == e.var:
            raise SpecError(f"{render_expr(e)} conditions on its own variable", *e.pos)
        if e.kind == "mean_diff" and e.other == e.var:
            raise SpecError("mean_diff needs two different variables", *e.pos)

    observe = parts["observe"]
    if observe is None:
        raise SpecError("the document has no observe block")
    for e in observe:
        check_expr(e)
    if len(set(observe)) != len(observe):
        raise DuplicateDeclaration("an observed functional is listed twice", *observe[-1].pos)

    estimands, names = [], set()
    for tok, est in parts["estimands"]:
        if est.name in names:
            raise DuplicateDeclaration(f"estimand {est.name} declared twice", tok.line, tok.col)
        names.add(est.name)
        check_expr(est.expr)
        estimands.append(est)
    if not estimands:
        raise SpecError("the document declares no estimand")

    seen = set()
    for a in parts["assume"]:
        if a.builtin not in BUILTINS:
            raise UnknownIdentifier(
                f"unknown assumption {a.builtin} (known: {', '.join(sorted(BUILTINS))})", *a.pos
            )
        kinds = BUILTINS[a.builtin]
        if len(a.args) != len(kinds):
            raise SpecError(f"{a.builtin} takes {len(kinds)} argument(s), got {len(a.args)}", *a.pos)
        for kind, arg in zip(kinds, a.args):
            if kind == "var":
                if not isinstance(arg, str):
                    raise SpecError(f"{a.builtin}: expected a variable, got {_arg_text(arg)}", *a.pos)
                if arg not in declared:
                    raise UnknownIdentifier(f"unknown variable {arg}", *a.pos)
            elif isinstance(arg, str):
                raise SpecError(f"{a.builtin}: expected a number, got {arg}", *a.pos)
        if a.name in seen:
            raise DuplicateDeclaration(f"assumption {a.name} declared twice", *a.pos)
        seen.add(a.name)

    given = parts["given"]
    if given is not None:
        bound = set()
        for b in given:
            check_expr(b.expr)
            if b.expr in bound:
                raise DuplicateDeclaration(f"{render_expr(b.expr)} bound twice", *b.expr.pos)
            if b.expr not in observe:
                raise SpecError(f"given binds {render_expr(b.expr)}, which is not observed", *b.expr.pos)
            bound.add(b.expr)
        unbound = [e for e in observe if e not in bound]
        if unbound:
            raise SpecError(f"given leaves {render_expr(unbound[0])} unbound")
    return ProblemSpec(u, observe, tuple(estimands), tuple(parts["assume"]), given)


def parse(text: str) -> ProblemSpec:
    """Parse and check a problem document."""
    return _check(_Parser(text).problem())


# -- printer --------------------------------------------------------------------


def format_number(x) -> str:
    """Shortest exact decimal text for a terminating fraction."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    k, scaled = 0, x
    while scaled.denominator != 1:
        if k > 64:
            return repr(float(x))  # not a terminating decimal
        k, scaled = k + 1, scaled * 10
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    sign = "-" if x < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}".rstrip("0")


def _arg_text(a) -> str:
    return a if isinstance(a, str) else format_number(a)


def render_expr(e: Expr) -> str:
    cond = f" | {e.given[0]}={format_number(e.given[1])}" if e.given else ""
    if e.kind == "prob":
        return f"prob({e.var}={format_number(e.value)}{cond})"
    if e.kind == "mean_diff":
        return f"mean_diff({e.var}, {e.other})"
    return f"{e.kind}({e.var}{cond})"


def _value_text(v) -> str:
    if v is MISSING:
        return "missing"
    if isinstance(v, tuple):
        return "[" + ", ".join(format_number(x) for x in v) + "]"
    return format_number(v)


def render(spec: ProblemSpec) -> str:
    """Canonical text of ``spec``; ``parse(render(s)) == s``."""
    u = spec.universe
    lines = [f"universe {u.kind} {{"]
    for v in u.variables:
        lines.append(f"  variable {v.name} {{ support: {_value_text(v.support)} }}")
    if u.grid_step is not None:
        lines.append(f"  grid_step: {format_number(u.grid_step)}")
    if u.units is not None:
        lines.append(f"  units: {u.units}")
    lines.append("}")
    lines.append("observe { " + ", ".join(render_expr(e) for e in spec.observe) + " }")
    for est in spec.estimands:
        lines.append(f"estimand {est.name} {{ {render_expr(est.expr)} }}")
    for a in spec.assumptions:
        lines.append(f"assume {a.name}")
    if spec.given is not None:
        lines.append("given {")
        for b in spec.given:
            lines.append(f"  {render_expr(b.expr)} = {_value_text(b.value)}")
        lines.append("}")
    return "\n".join(lines) + "\n"
