"""Scenarios shipped with the package, written in the scenario language."""

from __future__ import annotations

from tscf.scenario.model import Scenario
from tscf.scenario.parser import parse

SOURCES = {
    "singlet-xy": """\
scenario singlet-xy
# Singlet prepared at t1; |up_x>_1 |up_y>_2 found at t2.
space 2 x 2
state singlet = 1/sqrt(2) (|ud> - |du>)
state xy = 1/2 (|uu> + i|ud> + |du> + i|dd>)
obs sy1 = pauli Y @ 1
obs sx2 = pauli X @ 2
obs sy1sx2 = product(sy1, sx2)
pre singlet
post xy
query sy1 replace 1 sy1 assert outcome(sy1) == -1
query sx2 replace 1 sx2 assert outcome(sx2) == -1
query sy1sx2 replace 1 sy1sx2 assert outcome(sy1sx2) == -1
# each local value is certain alone, but not when both are measured together
query joint replace 1 sy1 1 sx2 assert outcome(sy1) == -1 and outcome(sx2) == -1
productrule sy1 sx2 sy1sx2
""",
    "three-z-x-z": """\
scenario three-z-x-z
# sigma_z = 1 at t1, sigma_x = 1 at t, sigma_z = -1 at t2
space 2
state up = |u>
state down = |d>
obs sz = pauli Z @ 1
obs sx = pauli X @ 1
pre up
post down
actual 1 sx = 1
query replace_z replace 1 sz assert outcome(sz) == 1
""",
    "stapp-cf-z": """\
scenario stapp-cf-z
# sigma_1z measured on the left; sigma_2z obtained with the gradient along +z.
# Would the reversed gradient give the same result?
space 2 x 2
state singlet = 1/sqrt(2) (|ud> - |du>)
obs sz1 = pauli Z @ 1
obs sz2 = pauli Z @ 2
obs sz2rev = pauli Z @ 2
pre singlet
event 1 sz1 = -1
actual 2 sz2 = 1
query cf replace 2 sz2rev assert outcome(sz2rev) == outcome(sz2)
config samples 100000 seed 1998
""",
    "stapp-cf-x": """\
scenario stapp-cf-x
# As stapp-cf-z, but sigma_1x is measured on the left instead.
space 2 x 2
state singlet = 1/sqrt(2) (|ud> - |du>)
obs sx1 = pauli X @ 1
obs sz2 = pauli Z @ 2
obs sz2rev = pauli Z @ 2
pre singlet
event 1 sx1 = 1
actual 2 sz2 = 1
query cf replace 2 sz2rev assert outcome(sz2rev) == outcome(sz2)
config samples 100000 seed 1998
""",
}

NAMES = tuple(SOURCES)


def builtin(name: str) -> Scenario:
    try:
        source = SOURCES[name]
    except KeyError:
        raise KeyError(f"unknown builtin scenario {name!r}; choose from {', '.join(NAMES)}") from None
    return parse(source)
