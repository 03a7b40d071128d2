"""Canonical text form of a Scenario.

Section order is fixed; floats use 17 significant digits, which round-trips
every float64 exactly, so ``parse(serialize(s)) == s``.
"""

from __future__ import annotations

from tscf.scenario.model import ExplicitSpec, PauliSpec, ProductSpec, Scenario


def _num(x: float) -> str:
    return "%.17g" % x


def _amp(z: complex) -> str:
    return f"{_num(z.real)},{_num(z.imag)}"


def _vector(amps) -> str:
    return " ".join(_amp(complex(a)) for a in amps)


def _subsystems(ks) -> str:
    return ",".join(str(k + 1) for k in ks)


def _observable(spec) -> str:
    if isinstance(spec, PauliSpec):
        return f"obs {spec.name} = pauli {spec.axis} @ {spec.subsystem + 1}"
    if isinstance(spec, ProductSpec):
        return f"obs {spec.name} = product({spec.left}, {spec.right})"
    if isinstance(spec, ExplicitSpec):
        parts = [f"{_num(a)}: [{'; '.join(_vector(v) for v in vecs)}]" for a, vecs in spec.branches]
        text = f"obs {spec.name} = {{ {' '.join(parts)} }}"
        if spec.support is not None:
            text += f" @ {_subsystems(spec.support)}"
        return text
    raise TypeError(f"not an observable spec: {spec!r}")


def serialize(s: Scenario) -> str:
    lines = []
    if s.name:
        lines.append(f"scenario {s.name}")
    lines.append(f"space {s.layout}")
    lines.extend(f"state {st.name} = [{_vector(st.amplitudes)}]" for st in s.states)
    lines.extend(_observable(o) for o in s.observables)
    lines.append(f"pre {s.pre}")
    if s.post is not None:
        lines.append(f"post {s.post}")
    for e in s.fixed:
        lines.append(f"event {e.slot} {e.obs}" + ("" if e.outcome is None else f" = {_num(e.outcome)}"))
    lines.extend(f"actual {e.slot} {e.obs} = {_num(e.outcome)}" for e in s.actual)
    for q in s.queries:
        repl = " ".join(f"{slot} {name}" for slot, name in q.replacement)
        lines.append(f"query {q.label} replace {repl} assert {q.prop}")
    lines.extend(f"productrule {p.a} {p.b} {p.ab}" for p in s.product_checks)
    if s.samples is not None or s.seed is not None:
        cfg = "config"
        if s.samples is not None:
            cfg += f" samples {s.samples}"
        if s.seed is not None:
            cfg += f" seed {s.seed}"
        lines.append(cfg)
    return "\n".join(lines) + "\n"
