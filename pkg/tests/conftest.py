"""Shared fixtures: regression cases and random parameter draws."""

from __future__ import annotations

import numpy as np
import pytest

from feedbackq import ModelParams

# Verified regression targets for three mixed-equilibrium parameter sets,
# frozen from the chain solvers after cross-validation against exact
# rational elimination and multi-million-replication Monte Carlo runs.
REFERENCE_CASES = [
    dict(r0=7.8, lam=1.0, mu=0.8, q=0.4,
         x_e=2.073038608, x_hat_e=2.326937720,
         z11=3.237472245, z22=1.650521982,
         zh11=2.968027105, zh22=1.295498911,
         pi0=0.062036331, pi1=0.193863534,
         pih0=0.053034969, pih1=0.165734279),
    dict(r0=4.4, lam=1.0, mu=0.8, q=0.8,
         x_e=2.345401882, x_hat_e=2.444384943,
         z11=2.599804481, z22=1.271964130,
         zh11=2.590096461, zh22=1.258059146,
         pi0=0.158190056, pi1=0.247171963,
         pih0=0.154027436, pih1=0.240667868),
    dict(r0=13.5, lam=0.8, mu=1.0, q=0.2,
         x_e=2.528649316, x_hat_e=2.872415200,
         z11=3.742527860, z22=1.517472140,
         zh11=3.540268327, zh22=1.274160996,
         pi0=0.018237008, pi1=0.072948032,
         pih0=0.017250827, pih1=0.069003310),
]

# The same parameter sets with the three-decimal values the acceptance
# criteria pin.  The equilibrium roots agree with the verified numbers
# above; several payoff and mass entries do not (they are internally
# inconsistent with the model at the 1e-3..1e-2 level -- see README and
# the acceptance suite), so the criteria asserting them stay red.
REPORTED_CASES = [
    dict(r0=7.8, lam=1.0, mu=0.8, q=0.4,
         x_e=2.073, x_hat_e=2.327, z11=3.245, zh11=2.964, z22=1.661, zh22=1.292,
         pi0=0.063, pih0=0.053, pi1=0.195, pih1=0.165),
    dict(r0=4.4, lam=1.0, mu=0.8, q=0.8,
         x_e=2.345, x_hat_e=2.444, z11=2.599, zh11=2.591, z22=1.271, zh22=1.259,
         pi0=0.158, pih0=0.154, pi1=0.247, pih1=0.241),
    dict(r0=13.5, lam=0.8, mu=1.0, q=0.2,
         x_e=2.529, x_hat_e=2.872, z11=3.740, zh11=3.546, z22=1.514, zh22=1.283,
         pi0=0.018, pih0=0.017, pi1=0.073, pih1=0.069),
]


def params_of(case: dict) -> ModelParams:
    return ModelParams(case["lam"], case["mu"], case["q"], case["r0"])


def random_params(rng: np.random.Generator, r0_span: tuple[float, float] | None = None) -> ModelParams:
    """Rates in (0.1, 2), success probability in (0.1, 1)."""
    lam = rng.uniform(0.1, 2.0)
    mu = rng.uniform(0.1, 2.0)
    q = rng.uniform(0.1, 1.0)
    r0 = rng.uniform(*r0_span) if r0_span else 0.0
    return ModelParams(lam, mu, q, r0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
