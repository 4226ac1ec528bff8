"""A small query language for matrix-inequality conjectures."""
from importlib import resources

from .evaluate import Bound, bind, evaluate, evaluate_env, parse_matrix_literal, validate
from .printer import pretty
from .syntax import (
    DuplicateBindingError,
    IqlError,
    IqlLexError,
    IqlRuntimeError,
    IqlSyntaxError,
    IqlTypeError,
    Program,
    UnboundIdentifierError,
    parse,
    parse_fdesc,
    tokenize,
)


def corpus_files() -> dict:
    """Shipped statement files, name -> source text."""
    root = resources.files(__name__) / "corpus"
    return {p.name: p.read_text(encoding="utf-8")
            for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".iql")}


__all__ = [
    "Bound", "DuplicateBindingError", "IqlError", "IqlLexError", "IqlRuntimeError",
    "IqlSyntaxError", "IqlTypeError", "Program", "UnboundIdentifierError", "bind",
    "corpus_files", "evaluate", "evaluate_env", "parse", "parse_fdesc",
    "parse_matrix_literal", "pretty", "tokenize", "validate",
]
