"""Recursive-descent parser for the line-oriented scenario language.

One statement per line, ``#`` starts a comment. Subsystems are numbered
from 1 in scenario text (``pauli Z @ 1`` is the first particle).

    scenario singlet-xy
    space 2 x 2
    state singlet = 1/sqrt(2) (|ud> - |du>)
    state xy = [0.5,0 0,0.5 0.5,0 0,0.5]
    obs sy1 = pauli Y @ 1
    obs sx2 = { 1: [0.7071,0 0.7071,0] -1: [0.7071,0 -0.7071,0] } @ 2
    obs both = product(sy1, sx2)
    pre singlet
    post xy
    event 1 sz1 = -1
    actual 2 sz2 = 1
    query eq4 replace 1 sy1 assert outcome(sy1) == -1
    productrule sy1 sx2 both
    config samples 100000 seed 7

Ket labels are one character per subsystem (``u``/``d`` or a digit) or
comma separated indices, e.g. ``|0,11>``.
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass

import numpy as np

from tscf.counterfactual import And, Const, Equals, Outcome, ProbCompare, Product
from tscf.hilbert import SpaceLayout, validate
from tscf.scenario.model import (
    EventSpec,
    ExplicitSpec,
    ParseError,
    PauliSpec,
    ProductRuleSpec,
    ProductSpec,
    QuerySpec,
    Scenario,
    ScenarioError,
    SemanticError,
    StateSpec,
    build_observable,
)
from tscf.tolerances import TOL

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ket>\|[^|>]*>)
  | (?P<op>==|>=|<=|[=<>\[\]{}(),;:*/+\-@])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    col: int  # 1-based


def tokenize(text: str, line: int) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError("unexpected character", line, pos + 1, text[pos])
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token], line: int, eol_col: int):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.eol_col = eol_col

    def peek(self, offset: int = 0) -> Token | None:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of line")
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self.error(f"expected {text!r}", tok)
        self.i += 1
        return tok

    def name(self, what: str = "name") -> str:
        tok = self.peek()
        if tok is None or tok.kind != "name":
            raise self.error(f"expected {what}", tok)
        self.i += 1
        return tok.text

    def integer(self, what: str = "integer") -> int:
        tok = self.peek()
        if tok is None or tok.kind != "number" or not tok.text.isdigit():
            raise self.error(f"expected {what}", tok)
        self.i += 1
        return int(tok.text)

    def real(self) -> float:
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        else:
            self.accept("+")
        tok = self.peek()
        if tok is None or tok.kind != "number":
            raise self.error("expected a number", tok)
        self.i += 1
        return sign * float(tok.text)

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def end(self):
        if not self.done():
            raise self.error("unexpected trailing input", self.peek())

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        if tok is None:
            return ParseError(message, self.line, self.eol_col, "")
        return ParseError(message, self.line, tok.col, tok.text)


# -- Dirac shorthand -----------------------------------------------------------


class _Dirac:
    """Arithmetic over complex scalars and kets; juxtaposition multiplies."""

    def __init__(self, s: _Stream, layout: SpaceLayout):
        self.s = s
        self.layout = layout

    def parse(self) -> np.ndarray:
        start = self.s.peek()
        value = self.expr()
        self.s.end()
        if not isinstance(value, np.ndarray):
            raise self.s.error("state expression has no ket", start)
        return value

    def _combine(self, a, b, op, tok):
        if op in "+-" and isinstance(a, np.ndarray) != isinstance(b, np.ndarray):
            raise self.s.error("cannot add a number to a ket", tok)
        if op == "*" and isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
            raise self.s.error("cannot multiply two kets", tok)
        if op == "/" and isinstance(b, np.ndarray):
            raise self.s.error("cannot divide by a ket", tok)
        if op == "/" and b == 0:
            raise self.s.error("division by zero", tok)
        return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b, "/": lambda: a / b}[op]()

    def expr(self):
        value = self.term()
        while self.s.at("+") or self.s.at("-"):
            tok = self.s.next()
            value = self._combine(value, self.term(), tok.text, tok)
        return value

    def _starts_factor(self) -> bool:
        tok = self.s.peek()
        if tok is None:
            return False
        return tok.kind in ("number", "ket") or tok.text in ("(", "i", "sqrt")

    def term(self):
        value = self.unary()
        while True:
            tok = self.s.peek()
            if tok is not None and tok.text in ("*", "/"):
                self.s.next()
                value = self._combine(value, self.unary(), tok.text, tok)
            elif self._starts_factor():
                value = self._combine(value, self.unary(), "*", tok)
            else:
                return value

    def unary(self):
        if self.s.accept("-"):
            return -self.unary()
        if self.s.accept("+"):
            return self.unary()
        return self.atom()

    def atom(self):
        tok = self.s.next()
        if tok.kind == "number":
            return complex(float(tok.text))
        if tok.text == "i":
            return 1j
        if tok.text == "sqrt":
            if self.s.accept("("):
                arg = self.expr()
                self.s.expect(")")
            else:
                arg = self.atom()
            if isinstance(arg, np.ndarray):
                raise self.s.error("sqrt of a ket", tok)
            if arg.imag == 0 and arg.real >= 0:
                return complex(np.sqrt(arg.real))
            return cmath.sqrt(arg)
        if tok.text == "(":
            value = self.expr()
            self.s.expect(")")
            return value
        if tok.kind == "ket":
            return self.ket(tok)
        raise self.s.error("unexpected token in state expression", tok)

    def ket(self, tok: Token) -> np.ndarray:
        body = tok.text[1:-1].replace(" ", "")
        labels = body.split(",") if "," in body else list(body)
        dims = self.layout.subsystem_dims
        if len(labels) != len(dims):
            raise self.s.error(f"ket needs {len(dims)} labels, got {len(labels)}", tok)
        idx = []
        for lab, d in zip(labels, dims):
            if lab in ("u", "d") and d == 2:
                idx.append(0 if lab == "u" else 1)
            elif lab.isdigit() and int(lab) < d:
                idx.append(int(lab))
            else:
                raise self.s.error(f"bad basis label {lab!r} for dimension {d}", tok)
        vec = np.zeros(self.layout.total_dim, dtype=complex)
        vec[np.ravel_multi_index(tuple(idx), dims)] = 1
        return vec


# -- statements ------------------------------------------------------------------


def _numeric_vector(s: _Stream, closers=("]",)) -> tuple[complex, ...]:
    amps = []
    while not any(s.at(c) for c in closers):
        re_ = s.real()
        s.expect(",")
        im = s.real()
        amps.append(complex(re_, im))
    return tuple(amps)


def _property(s: _Stream):
    if s.at("prob"):
        s.next()
        s.expect("(")
        rel = _relation(s)
        s.expect(")")
        tok = s.next()
        if tok.text not in (">=", "<=", ">", "<", "=="):
            raise s.error("expected a comparison", tok)
        return ProbCompare(rel, tok.text, s.real())
    return _relation(s)


def _relation(s: _Stream):
    terms = [_equality(s)]
    while s.accept("and"):
        terms.append(_equality(s))
    return terms[0] if len(terms) == 1 else And(tuple(terms))


def _equality(s: _Stream):
    left = _product(s)
    s.expect("==")
    return Equals(left, _product(s))


def _product(s: _Stream):
    factors = [_factor(s)]
    while s.accept("*"):
        factors.append(_factor(s))
    return factors[0] if len(factors) == 1 else Product(tuple(factors))


def _factor(s: _Stream):
    if s.accept("outcome"):
        s.expect("(")
        label = s.name("event label")
        slot = s.integer("slot") if s.accept("@") else None
        s.expect(")")
        return Outcome(label, slot)
    return Const(s.real())


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.name = ""
        self.layout: SpaceLayout | None = None
        self.states: list[StateSpec] = []
        self.observables: list = []
        self.obs_objects: dict = {}
        self.pre = None
        self.post = None
        self.fixed: list[EventSpec] = []
        self.actual: list[EventSpec] = []
        self.queries: list[QuerySpec] = []
        self.query_lines: dict[str, int] = {}
        self.products: list[ProductRuleSpec] = []
        self.samples = None
        self.seed = None
        self.seen_scenario = False

    def run(self) -> Scenario:
        for lineno, raw in enumerate(self.text.split("\n"), start=1):
            line = raw.rstrip("\r").split("#", 1)[0]
            if not line.strip():
                continue
            self.line = lineno
            self.statement(line)
        if self.layout is None:
            raise SemanticError("missing 'space' declaration")
        if self.pre is None:
            raise SemanticError("missing 'pre' declaration")
        scenario = Scenario(
            self.name,
            self.layout,
            tuple(self.states),
            tuple(self.observables),
            self.pre,
            self.post,
            tuple(self.fixed),
            tuple(self.actual),
            tuple(self.queries),
            tuple(self.products),
            self.samples,
            self.seed,
        )
        try:
            scenario.check()
        except SemanticError as exc:
            label = getattr(exc, "query", None)
            if exc.line or label not in self.query_lines:
                raise
            raise SemanticError(exc.message, self.query_lines[label]) from exc
        return scenario

    def semantic(self, message: str, col: int = 0, token: str = "") -> SemanticError:
        return SemanticError(message, self.line, col, token)

    def statement(self, line: str):
        head = line.split(None, 1)[0]
        if head == "scenario":
            if self.seen_scenario:
                raise self.semantic("duplicate 'scenario' line")
            self.seen_scenario = True
            self.name = line.split(None, 1)[1].strip() if len(line.split(None, 1)) > 1 else ""
            return
        if head == "space":
            return self.space(line)
        s = _Stream(tokenize(line, self.line), self.line, len(line) + 1)
        kw = s.next()
        handler = {
            "state": self.state,
            "obs": self.obs,
            "pre": self.boundary,
            "post": self.boundary,
            "event": self.event,
            "actual": self.event,
            "query": self.query,
            "productrule": self.productrule,
            "config": self.config,
        }.get(kw.text)
        if handler is None:
            raise ParseError("unknown statement", self.line, kw.col, kw.text)
        if kw.text != "state" and kw.text != "config" and self.layout is None:
            raise self.semantic("'space' must be declared first", kw.col, kw.text)
        handler(s, kw)
        s.end()

    def space(self, line: str):
        if self.layout is not None:
            raise self.semantic("duplicate 'space' line")
        body = line.split(None, 1)[1] if len(line.split(None, 1)) > 1 else ""
        parts = [p for p in re.split(r"[x×\s]+", body.strip()) if p]
        col = line.index("space") + 7
        if not parts or not all(p.isdigit() for p in parts):
            raise ParseError("expected dimensions like '2 x 2'", self.line, col, body.strip())
        try:
            self.layout = SpaceLayout(tuple(int(p) for p in parts))
        except ValueError as exc:
            raise self.semantic(str(exc), col) from None
        if self.layout.total_dim > 64:
            raise self.semantic(f"total dimension {self.layout.total_dim} exceeds 64", col)

    def _new_name(self, s: _Stream, existing) -> tuple[str, Token]:
        tok = s.peek()
        name = s.name()
        if name in existing:
            raise self.semantic(f"duplicate name {name!r}", tok.col, name)
        return name, tok

    def state(self, s: _Stream, kw: Token):
        if self.layout is None:
            raise self.semantic("'space' must be declared first", kw.col, kw.text)
        name, tok = self._new_name(s, {x.name for x in self.states})
        s.expect("=")
        if s.accept("["):
            amps = _numeric_vector(s)
            s.expect("]")
        else:
            amps = tuple(complex(a) for a in _Dirac(s, self.layout).parse())
        if len(amps) != self.layout.total_dim:
            raise self.semantic(
                f"state {name!r} has {len(amps)} amplitudes, layout needs {self.layout.total_dim}", tok.col, name
            )
        norm2 = float(sum(abs(a) ** 2 for a in amps))
        if abs(norm2 - 1) > TOL.arithmetic:
            raise self.semantic(f"state {name!r} is not normalized (squared norm {norm2:.17g})", tok.col, name)
        self.states.append(StateSpec(name, amps))

    def _subsystems(self, s: _Stream) -> tuple[int, ...]:
        out = []
        while True:
            tok = s.peek()
            k = s.integer("subsystem number")
            if not 1 <= k <= self.layout.n_subsystems:
                raise self.semantic(f"subsystem {k} out of range 1..{self.layout.n_subsystems}", tok.col, tok.text)
            out.append(k - 1)
            if not s.accept(","):
                return tuple(out)

    def obs(self, s: _Stream, kw: Token):
        name, tok = self._new_name(s, self.obs_objects)
        s.expect("=")
        head = s.peek()
        if s.accept("pauli"):
            axis_tok = s.peek()
            axis = s.name("axis X, Y or Z")
            if axis not in ("X", "Y", "Z"):
                raise ParseError("expected axis X, Y or Z", self.line, axis_tok.col, axis)
            s.expect("@")
            (k,) = self._subsystems(s)
            spec = PauliSpec(name, axis, k)
        elif s.accept("product"):
            s.expect("(")
            left = s.name("observable")
            s.expect(",")
            right = s.name("observable")
            s.expect(")")
            spec = ProductSpec(name, left, right)
        elif s.accept("{"):
            branches = []
            while not s.accept("}"):
                eig = s.real()
                s.expect(":")
                s.expect("[")
                vecs = [_numeric_vector(s, ("]", ";"))]
                while s.accept(";"):
                    vecs.append(_numeric_vector(s, ("]", ";")))
                s.expect("]")
                s.accept(",")
                branches.append((eig, tuple(vecs)))
            support = self._subsystems(s) if s.accept("@") else None
            spec = ExplicitSpec(name, tuple(branches), support)
        else:
            raise s.error("expected 'pauli', 'product(...)' or '{'", head)
        try:
            built = build_observable(spec, self.layout, self.obs_objects)
        except ScenarioError as exc:
            raise self.semantic(exc.message, tok.col, name) from None
        except (ValueError, IndexError) as exc:
            raise self.semantic(f"observable {name!r}: {exc}", tok.col, name) from None
        report = validate(built)
        if not report.ok:
            raise self.semantic(f"observable {name!r} fails {', '.join(report.failures())}", tok.col, name)
        self.obs_objects[name] = built
        self.observables.append(spec)

    def _known_obs(self, s: _Stream) -> str:
        tok = s.peek()
        name = s.name("observable")
        if name not in self.obs_objects:
            raise self.semantic(f"unknown observable {name!r}", tok.col, name)
        return name

    def boundary(self, s: _Stream, kw: Token):
        tok = s.peek()
        name = s.name("state")
        if name not in {x.name for x in self.states}:
            raise self.semantic(f"unknown state {name!r}", tok.col, name)
        if getattr(self, kw.text) is not None:
            raise self.semantic(f"duplicate '{kw.text}' line", kw.col, kw.text)
        setattr(self, kw.text, name)

    def _slot(self, s: _Stream) -> int:
        tok = s.peek()
        slot = s.integer("slot")
        if slot < 1:
            raise self.semantic("slots start at 1 (0 is the pre-selection)", tok.col, tok.text)
        return slot

    def event(self, s: _Stream, kw: Token):
        slot = self._slot(s)
        name = self._known_obs(s)
        outcome = None
        if s.accept("="):
            tok = s.peek()
            outcome = s.real()
            if not self.obs_objects[name].has_eigenvalue(outcome):
                raise self.semantic(f"{outcome:g} is not an eigenvalue of {name!r}", tok.col, tok.text)
        elif kw.text == "actual":
            raise s.error("expected '= outcome'", s.peek())
        (self.fixed if kw.text == "event" else self.actual).append(EventSpec(slot, name, outcome))

    def query(self, s: _Stream, kw: Token):
        label = f"q{len(self.queries) + 1}"
        if not s.at("replace"):
            tok = s.peek()
            label = s.name("query label or 'replace'")
            if label in {q.label for q in self.queries}:
                raise self.semantic(f"duplicate query label {label!r}", tok.col, label)
        s.expect("replace")
        repl = []
        fixed_slots = {e.slot for e in self.fixed}
        while not s.at("assert"):
            tok = s.peek()
            slot = self._slot(s)
            if slot in fixed_slots:
                raise self.semantic(f"slot {slot} already holds a fixed measurement", tok.col, tok.text)
            repl.append((slot, self._known_obs(s)))
        if not repl:
            raise s.error("expected at least one 'SLOT OBS' pair", s.peek())
        s.expect("assert")
        self.queries.append(QuerySpec(label, tuple(repl), _property(s)))
        self.query_lines[label] = self.line

    def productrule(self, s: _Stream, kw: Token):
        a, b, ab = self._known_obs(s), self._known_obs(s), self._known_obs(s)
        self.products.append(ProductRuleSpec(a, b, ab))

    def config(self, s: _Stream, kw: Token):
        while not s.done():
            tok = s.next()
            if tok.text == "samples":
                self.samples = s.integer("sample count")
                if self.samples < 1:
                    raise self.semantic("samples must be >= 1", tok.col, tok.text)
            elif tok.text == "seed":
                self.seed = s.integer("seed")
            else:
                raise ParseError("expected 'samples' or 'seed'", self.line, tok.col, tok.text)


def parse(text: str) -> Scenario:
    """Parse scenario source text. Raises ParseError or SemanticError."""
    return _Parser(text).run()
