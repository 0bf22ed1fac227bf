"""Entanglement witnesses from measured widths.

Takes the two measured quantities, the sum-frequency width and the
relative-delay width, and turns them into the frequency-time uncertainty
product, the separability and EPR-steering verdicts, and a Gaussian-model
Schmidt mode count. Pure arithmetic: every input is a float with an
explicit error bar, every output carries the propagated error.

Conventions: widths are standard deviations, angular frequency in rad/s
and time in s, so the product is dimensionless. Separable states obey
product >= 1; steering requires product < 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import hypot, inf, sqrt

from .errors import ValidationError

SEPARABILITY_BOUND = 1.0
STEERING_BOUND = 0.5

PROPAGATION_LINEAR = "linear"
PROPAGATION_QUADRATURE = "quadrature"


def uncertainty_product(delta_omega_sum: float, delta_omega_sum_error: float,
                        delta_t: float, delta_t_error: float,
                        propagation: str = PROPAGATION_QUADRATURE
                        ) -> tuple[float, float]:
    """Product delta_omega_sum * delta_t and its propagated error.

    propagation="quadrature" combines the relative errors in quadrature
    (independent measurements); "linear" adds them, the conservative
    choice when correlations are unknown.
    """
    if delta_omega_sum <= 0 or delta_t <= 0:
        raise ValidationError("uncertainty_product: widths must be positive")
    if delta_omega_sum_error < 0 or delta_t_error < 0:
        raise ValidationError("uncertainty_product: errors must be >= 0")
    product = delta_omega_sum * delta_t
    rel_omega = delta_omega_sum_error / delta_omega_sum
    rel_t = delta_t_error / delta_t
    if propagation == PROPAGATION_LINEAR:
        rel = rel_omega + rel_t
    elif propagation == PROPAGATION_QUADRATURE:
        rel = hypot(rel_omega, rel_t)
    else:
        raise ValidationError(
            f"report.propagation: must be 'linear' or 'quadrature', got {propagation!r}")
    return product, product * rel


def separability_check(product: float, product_error: float
                       ) -> tuple[bool, float]:
    """Is the product below the separability bound, and by how many sigma.

    Separable two-photon states satisfy product >= 1; returns (violated,
    significance), where significance = (1 - product) / error.
    """
    if product <= 0:
        raise ValidationError("separability_check: product must be positive")
    violated = product < SEPARABILITY_BOUND
    if product_error > 0:
        sigmas = (SEPARABILITY_BOUND - product) / product_error
    else:
        sigmas = inf if violated else -inf
    return violated, sigmas


def steering_check(product: float) -> bool:
    """EPR-steering condition: product strictly below 1/2."""
    if product <= 0:
        raise ValidationError("steering_check: product must be positive")
    return product < STEERING_BOUND


def schmidt_number(delta_omega_sum: float, delta_omega_single: float) -> float:
    """Effective Schmidt mode count of a Gaussian joint spectrum.

    For a Gaussian model with sum-frequency width delta_omega_sum and
    single-photon width delta_omega_single, K = 1/sqrt(1 - (1+r^2)^-2)
    with r their ratio. K -> 1 for an uncorrelated (separable) spectrum
    and grows without bound as the sum width vanishes.
    """
    if delta_omega_sum <= 0 or delta_omega_single <= 0:
        raise ValidationError("schmidt_number: widths must be positive")
    r = delta_omega_sum / delta_omega_single
    return 1.0 / sqrt(1.0 - (1.0 + r * r) ** -2)


@dataclass
class EntanglementReport:
    """Complete witness summary for one dataset."""

    delta_t: float
    delta_t_error: float
    delta_omega_sum: float
    delta_omega_sum_error: float
    delta_omega_single: float
    product: float
    product_error: float
    propagation: str
    separability_violated: bool
    violation_sigmas: float
    steering_satisfied: bool
    schmidt_modes: float

    def to_dict(self) -> dict:
        return {
            "delay_std": {"value": self.delta_t, "error": self.delta_t_error,
                          "unit": "s"},
            "sum_sigma": {"value": self.delta_omega_sum,
                          "error": self.delta_omega_sum_error,
                          "unit": "rad/s"},
            "single_photon_std": {"value": self.delta_omega_single,
                                  "unit": "rad/s"},
            "uncertainty_product": {"value": self.product,
                                    "error": self.product_error,
                                    "unit": "dimensionless"},
            "propagation": self.propagation,
            "separability_violated": self.separability_violated,
            "violation_sigmas": self.violation_sigmas,
            "steering_satisfied": self.steering_satisfied,
            "schmidt_modes": self.schmidt_modes,
        }


def build_report(delta_omega_sum: float, delta_omega_sum_error: float,
                 delta_t: float, delta_t_error: float,
                 delta_omega_single: float,
                 propagation: str = PROPAGATION_QUADRATURE
                 ) -> EntanglementReport:
    """Assemble the full report from the three measured widths."""
    product, err = uncertainty_product(delta_omega_sum,
                                       delta_omega_sum_error,
                                       delta_t, delta_t_error,
                                       propagation=propagation)
    violated, sigmas = separability_check(product, err)
    return EntanglementReport(
        delta_t=delta_t, delta_t_error=delta_t_error,
        delta_omega_sum=delta_omega_sum,
        delta_omega_sum_error=delta_omega_sum_error,
        delta_omega_single=delta_omega_single,
        product=product, product_error=err, propagation=propagation,
        separability_violated=violated, violation_sigmas=sigmas,
        steering_satisfied=steering_check(product),
        schmidt_modes=schmidt_number(delta_omega_sum, delta_omega_single),
    )
