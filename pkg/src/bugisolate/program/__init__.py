"""C-subset program model: parsing, control flow and def-use facts."""

from .ast import Ast, UnknownFunction, to_json
from .cfg import Cfg, UnknownLabel, all_cfgs, build_cfg
from .defuse import DefUseTable, VarStats, def_use
from .lexer import CSyntaxError
from .parser import SourceProgram, parse
from .printer import to_source

__all__ = [
    "Ast",
    "Cfg",
    "CSyntaxError",
    "DefUseTable",
    "SourceProgram",
    "UnknownFunction",
    "UnknownLabel",
    "VarStats",
    "all_cfgs",
    "build_cfg",
    "def_use",
    "parse",
    "to_json",
    "to_source",
]
