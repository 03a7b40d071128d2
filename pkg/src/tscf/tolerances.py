from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every module."""

    structural: float = 1e-10  # projector identities
    arithmetic: float = 1e-12  # normalization, probability sums
    certainty: float = 1e-9  # True/False vs Probabilistic
    zero_denominator: float = 1e-24  # raw squared-amplitude sums


TOL = Tolerances()
