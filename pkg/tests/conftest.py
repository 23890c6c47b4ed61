from thermoflow.correlations import EquilibriumContext
from thermoflow.derivatives import PotentialFamily
from thermoflow.sft import random_function
from thermoflow.transfer import normalize_potential, pressure, rpf


def base_context(s, f0):
    data = rpf(s, f0)
    wn = normalize_potential(s, f0, data)
    return EquilibriumContext(s, wn, depth=max(f0.depth + 1, 3))


def random_family_1p(s, rng, depth=2, scale=0.3, mean_zero_d1=True,
                     pressure_zero=False):
    """Cubic-in-s potential family with exact partials at 0."""
    f0 = random_function(s, depth, rng, scale=scale)
    if pressure_zero:
        f0 = f0 - pressure(s, f0)
    ctx = base_context(s, f0)
    f1 = random_function(s, depth, rng, scale=scale)
    if mean_zero_d1:
        f1 = f1 - ctx.integrate(f1)
    f2 = random_function(s, depth, rng, scale=scale)
    f3 = random_function(s, depth, rng, scale=scale)
    return PotentialFamily.from_taylor(
        s, f0, {(0,): f1, (0, 0): f2, (0, 0, 0): f3}, nparams=1)


def random_family_3p(s, rng, depth=2, scale=0.25, mean_zero_d1=True,
                     pressure_zero=True):
    f0 = random_function(s, depth, rng, scale=scale)
    if pressure_zero:
        f0 = f0 - pressure(s, f0)
    ctx = base_context(s, f0)
    partials = {}
    for i in range(3):
        g = random_function(s, depth, rng, scale=scale)
        if mean_zero_d1:
            g = g - ctx.integrate(g)
        partials[(i,)] = g
    for i in range(3):
        for j in range(i, 3):
            partials[(i, j)] = random_function(s, depth, rng, scale=scale)
    for i in range(3):
        for j in range(i, 3):
            for k in range(j, 3):
                partials[(i, j, k)] = random_function(s, depth, rng, scale=scale)
    return PotentialFamily.from_taylor(s, f0, partials, nparams=3)
