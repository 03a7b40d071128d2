"""Time-symmetrized quantum counterfactuals for pre- and post-selected systems."""

__version__ = "0.1.0"

from tscf.tolerances import TOL, Tolerances
from tscf.hilbert import (
    LinearOperator,
    ObservableDecomposition,
    SpaceLayout,
    StateVector,
    apply,
    embed,
    inner,
    tensor,
    validate,
)
from tscf.tsvf import (
    MeasurementEvent,
    ProbabilityTable,
    TwoStateVector,
    ZeroDenominatorError,
    abl_sequence,
    abl_single,
)
from tscf.counterfactual import (
    ActualWorld,
    CounterfactualQuery,
    MeaninglessError,
    Verdict,
    definition_iii_eval,
    element_of_reality,
    evaluate,
    product_rule_check,
)
from tscf.oracle import ForwardRun, cross_check, enumerate_exact, monte_carlo

__all__ = [
    "TOL",
    "Tolerances",
    "SpaceLayout",
    "StateVector",
    "LinearOperator",
    "ObservableDecomposition",
    "tensor",
    "inner",
    "apply",
    "embed",
    "validate",
    "TwoStateVector",
    "MeasurementEvent",
    "ProbabilityTable",
    "ZeroDenominatorError",
    "abl_single",
    "abl_sequence",
    "ActualWorld",
    "CounterfactualQuery",
    "MeaninglessError",
    "Verdict",
    "evaluate",
    "element_of_reality",
    "product_rule_check",
    "definition_iii_eval",
    "ForwardRun",
    "enumerate_exact",
    "monte_carlo",
    "cross_check",
]
