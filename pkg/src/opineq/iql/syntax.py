"""Lexer, AST and recursive-descent parser for inequality queries.

Grammar (one expression grammar; kinds are checked after parsing)::

    program := binding* "check" expr ("<=" | "<=L") expr ";"? EOF
    binding := "let" IDENT "~" IDENT "(" [kv ("," kv)*] ")" ";"
    kv      := IDENT "=" (["-"] NUMBER | STRING)
    expr    := term (("+" | "-") term)*
    term    := postfix ("*" postfix)*
    postfix := atom "'"*
    atom    := NUMBER | IDENT | call | "(" expr ")"
    call    := NAME "(" args ")"          (argument shapes per FUNCTIONS)

Scalars and matrices are the two kinds: ``+``/``-`` need equal kinds,
``*`` accepts any mix, ``'`` needs a matrix, ``<=`` compares scalars and
``<=L`` compares Hermitian matrices in the Loewner order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from ..opconvex import FiniteSum, Inverse, Kernel, OperatorConvexFn, Power, Quadratic


class IqlError(Exception):
    """Base error; carries a 1-based source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, token: str = ""):
        self.message, self.line, self.col, self.token = message, line, col, token
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message + (f" (at {token!r})" if token else ""))


class IqlLexError(IqlError):
    pass


class IqlSyntaxError(IqlError):
    pass


class DuplicateBindingError(IqlError):
    pass


class UnboundIdentifierError(IqlError):
    pass


class IqlTypeError(IqlError):
    pass


class IqlRuntimeError(IqlError):
    pass


# tokens -------------------------------------------------------------------

@dataclass(frozen=True)
class Span:
    line: int
    col: int


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER STRING OP EOF
    text: str
    span: Span


_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_SYMBOLS = ("<=L", "<=", "~", ";", "(", ")", ",", "=", "+", "-", "*", "'")


def tokenize(text: str) -> List[Token]:
    out = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        span = Span(line, col)
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0 or "\n" in text[i:j]:
                raise IqlLexError("unterminated string", line, col, ch)
            out.append(Token("STRING", text[i + 1:j], span))
            col += j + 1 - i
            i = j + 1
            continue
        m = _NUMBER.match(text, i) if (ch.isdigit() or ch == ".") else None
        if m:
            out.append(Token("NUMBER", m.group(), span))
        else:
            m = _IDENT.match(text, i)
            if m:
                out.append(Token("IDENT", m.group(), span))
            else:
                sym = next((s for s in _SYMBOLS if text.startswith(s, i)), None)
                if sym == "<=L" and _IDENT.match(text, i + 2).end() > i + 3:
                    sym = "<="  # "<=Lx" is "<=" followed by the identifier "Lx"
                if sym is None:
                    raise IqlLexError("unexpected character", line, col, ch)
                out.append(Token("OP", sym, span))
                col += len(sym)
                i += len(sym)
                continue
        col += m.end() - i
        i = m.end()
    out.append(Token("EOF", "", Span(line, col)))
    return out


# AST ------------------------------------------------------------------------

def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Num:
    value: float
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Adjoint:
    operand: "Expr"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class FnLit:
    fn: OperatorConvexFn
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: Optional[Span] = _span()


Expr = Union[Num, Var, BinOp, Adjoint, Call]


@dataclass(frozen=True)
class Binding:
    name: str
    generator: str
    params: Tuple[Tuple[str, Union[float, str]], ...]
    span: Optional[Span] = _span()

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class Program:
    bindings: Tuple[Binding, ...]
    op: str
    lhs: Expr
    rhs: Expr
    span: Optional[Span] = _span()


# argument shapes: "int" a literal count, "mat" a matrix expression,
# "fn" an operator convex descriptor, "id" a bound identifier, "mat+" one
# or more matrix expressions
FUNCTIONS = {
    "inv": (("mat",), "matrix"),
    "sqrt": (("mat",), "matrix"),
    "f": (("fn", "mat"), "matrix"),
    "compress": (("mat", "id"), "matrix"),
    "wedge": (("int", "mat"), "matrix"),
    "fan": (("int", "mat"), "scalar"),
    "schatten": (("num", "mat"), "scalar"),
    "trace": (("mat",), "scalar"),
    "rho": (("mat",), "scalar"),
    "sing": (("int", "mat"), "scalar"),
    "eig": (("int", "mat"), "scalar"),
    "kappa1": (("mat+",), "scalar"),
    "kappa2": (("mat+",), "scalar"),
    "ip": (("id", "mat", "id"), "scalar"),
}

# generator name -> (required keys, optional keys)
GENERATORS = {
    "posdef": ({"dim"}, {"a", "b"}),
    "psd": ({"dim"}, {"scale"}),
    "poscontraction": ({"dim"}, set()),
    "contraction": ({"dim"}, set()),
    "isometry": ({"dim", "k"}, set()),
    "unit": ({"dim"}, set()),
    "abpair": ({"dim", "part"}, {"mode", "group"}),
    "isocol": ({"dim", "m", "part"}, {"group", "scale"}),
    "fixed": ({"matrix"}, set()),
}

KEYWORDS = {"let", "check"}


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return IqlSyntaxError(message, tok.span.line, tok.span.col, tok.text or "end of input")

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "IDENT") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "IDENT" or self.tok.text in KEYWORDS:
            raise self.error("expected an identifier")
        return self.advance()

    def number(self, signed: bool = False) -> float:
        neg = False
        if signed and self.at("-"):
            self.advance()
            neg = True
        if self.tok.kind != "NUMBER":
            raise self.error("expected a number")
        v = float(self.advance().text)
        return -v if neg else v

    # program
    def program(self) -> Program:
        start = self.tok.span
        bindings = []
        while self.at("let"):
            bindings.append(self.binding())
        self.expect("check")
        lhs = self.expr()
        if not (self.at("<=") or self.at("<=L")):
            raise self.error("expected '<=' or '<=L'")
        op = self.advance().text
        rhs = self.expr()
        if self.at(";"):
            self.advance()
        if self.tok.kind != "EOF":
            raise self.error("unexpected input after the check")
        return Program(tuple(bindings), op, lhs, rhs, start)

    def binding(self) -> Binding:
        self.expect("let")
        name = self.ident()
        self.expect("~")
        gen = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.kv())
            while self.at(","):
                self.advance()
                params.append(self.kv())
        self.expect(")")
        self.expect(";")
        return Binding(name.text, gen.text, tuple(params), name.span)

    def kv(self):
        key = self.ident()
        self.expect("=")
        if self.tok.kind == "STRING":
            return key.text, self.advance().text
        return key.text, self.number(signed=True)

    # expressions
    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            left = BinOp(op.text, left, self.term(), op.span)
        return left

    def term(self):
        left = self.postfix()
        while self.at("*"):
            op = self.advance()
            left = BinOp("*", left, self.postfix(), op.span)
        return left

    def postfix(self):
        node = self.atom()
        while self.at("'"):
            node = Adjoint(node, self.advance().span)
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "NUMBER":
            return Num(self.number(), tok.span)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "IDENT" and tok.text not in KEYWORDS:
            self.advance()
            if tok.text in FUNCTIONS and self.at("("):
                return self.call(tok)
            return Var(tok.text, tok.span)
        raise self.error("expected an expression")

    def call(self, name: Token) -> Call:
        shapes, _ = FUNCTIONS[name.text]
        self.expect("(")
        args = []
        for i, shape in enumerate(shapes):
            if i:
                self.expect(",")
            if shape == "int":
                t = self.tok
                v = self.number()
                if not v.is_integer():
                    raise self.error("expected an integer", t)
                args.append(Num(v, t.span))
            elif shape == "num":
                t = self.tok
                args.append(Num(self.number(), t.span))
            elif shape == "fn":
                t = self.tok
                args.append(FnLit(self.fdesc(), t.span))
            elif shape == "id":
                t = self.ident()
                args.append(Var(t.text, t.span))
            elif shape == "mat+":
                args.append(self.expr())
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
            else:
                args.append(self.expr())
        self.expect(")")
        return Call(name.text, tuple(args), name.span)

    def fdesc(self) -> OperatorConvexFn:
        tok = self.ident()
        name = tok.text
        try:
            if name == "inv":
                return Inverse()
            self.expect("(")
            if name == "quad":
                vals = [self.number(True)]
                for _ in range(2):
                    self.expect(",")
                    vals.append(self.number(True))
                fn = Quadratic(*vals)
            elif name == "pow":
                fn = Power(self.number(True))
            elif name == "ker":
                fn = Kernel(self.number(True))
            elif name == "sum":
                terms = [self.sum_term()]
                while self.at(","):
                    self.advance()
                    terms.append(self.sum_term())
                fn = FiniteSum(tuple(terms))
            else:
                raise IqlSyntaxError("unknown function descriptor", tok.span.line,
                                     tok.span.col, name)
            self.expect(")")
            return fn
        except (ValueError, TypeError) as exc:
            raise IqlTypeError(f"invalid function descriptor: {exc}", tok.span.line,
                               tok.span.col, name) from None

    def sum_term(self):
        w = self.number(True)
        self.expect("*")
        return w, self.fdesc()


def _check_bindings(prog: Program):
    seen = set()
    for b in prog.bindings:
        if b.name in seen:
            raise DuplicateBindingError(f"{b.name!r} is bound twice", b.span.line, b.span.col, b.name)
        seen.add(b.name)
        if b.name in FUNCTIONS:
            raise IqlTypeError(f"{b.name!r} shadows a built-in function",
                               b.span.line, b.span.col, b.name)
        if b.generator not in GENERATORS:
            raise IqlTypeError(f"unknown generator {b.generator!r}", b.span.line, b.span.col,
                               b.generator)
        req, opt = GENERATORS[b.generator]
        keys = [k for k, _ in b.params]
        if len(set(keys)) != len(keys):
            raise IqlTypeError("repeated generator parameter", b.span.line, b.span.col, b.name)
        missing = req - set(keys)
        extra = set(keys) - req - opt
        if missing or extra:
            what = (f"missing {sorted(missing)}" if missing else "") + \
                   (f" unknown {sorted(extra)}" if extra else "")
            raise IqlTypeError(f"bad parameters for {b.generator}: {what.strip()}",
                               b.span.line, b.span.col, b.name)
        for k, v in b.params:
            if (k == "matrix") != isinstance(v, str):
                raise IqlTypeError(f"parameter {k!r} has the wrong type", b.span.line,
                                   b.span.col, k)
    return seen


def kind_of(node, bound) -> str:
    """Kind ("scalar" or "matrix") of an expression; raises on misuse."""
    sp = node.span or Span(0, 0)
    if isinstance(node, Num):
        return "scalar"
    if isinstance(node, Var):
        if node.name not in bound:
            raise UnboundIdentifierError(f"unbound identifier {node.name!r}", sp.line, sp.col,
                                         node.name)
        return "matrix"
    if isinstance(node, Adjoint):
        if kind_of(node.operand, bound) != "matrix":
            raise IqlTypeError("adjoint of a scalar", sp.line, sp.col, "'")
        return "matrix"
    if isinstance(node, BinOp):
        lk, rk = kind_of(node.left, bound), kind_of(node.right, bound)
        if node.op == "*":
            return "matrix" if "matrix" in (lk, rk) else "scalar"
        if lk != rk:
            raise IqlTypeError(f"cannot combine {lk} and {rk} with {node.op!r}",
                               sp.line, sp.col, node.op)
        return lk
    if isinstance(node, Call):
        shapes, result = FUNCTIONS[node.func]
        for arg in node.args:
            if isinstance(arg, (FnLit,)):
                continue
            if isinstance(arg, Num) and node.func in ("fan", "schatten", "sing", "eig", "wedge") \
                    and arg is node.args[0]:
                continue
            if kind_of(arg, bound) != "matrix":
                asp = arg.span or sp
                raise IqlTypeError(f"{node.func} expects a matrix argument", asp.line, asp.col,
                                   node.func)
        return result
    raise IqlTypeError(f"unknown node {node!r}")


def check_program(prog: Program) -> Program:
    bound = _check_bindings(prog)
    lk, rk = kind_of(prog.lhs, bound), kind_of(prog.rhs, bound)
    sp = prog.lhs.span or Span(0, 0)
    want = "scalar" if prog.op == "<=" else "matrix"
    if lk != want or rk != want:
        raise IqlTypeError(f"{prog.op!r} compares {want}s, got {lk} and {rk}", sp.line, sp.col,
                           prog.op)
    return prog


def parse(text: str) -> Program:
    """Parse and kind-check a query."""
    return check_program(_Parser(text).program())


def parse_fdesc(text: str) -> OperatorConvexFn:
    """Parse an operator convex descriptor such as ``sum(1*quad(0,1,0),2*ker(5))``."""
    p = _Parser(text)
    fn = p.fdesc()
    if p.tok.kind != "EOF":
        raise p.error("unexpected input after the descriptor")
    return fn
