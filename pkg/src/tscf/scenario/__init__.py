from tscf.scenario.builtins import NAMES as BUILTIN_NAMES
from tscf.scenario.builtins import builtin
from tscf.scenario.model import ParseError, Scenario, ScenarioError, SemanticError
from tscf.scenario.parser import parse
from tscf.scenario.serializer import serialize

__all__ = [
    "BUILTIN_NAMES",
    "ParseError",
    "Scenario",
    "ScenarioError",
    "SemanticError",
    "builtin",
    "parse",
    "serialize",
]
