"""The logarithmic cut-off schedule eps(N) = lambda_cut (ln N)^(-2/(d+2))."""

import math

from kslab.errors import DomainError


def epsilon_schedule(n: int, lam_cut: float, dim: int) -> float:
    if n <= 2:
        raise DomainError("the cut-off schedule needs N >= 3 (ln N > 1), got N={}".format(n))
    if dim < 1:
        raise DomainError("dimension must be positive, got {}".format(dim))
    return lam_cut * math.log(n) ** (-2.0 / (dim + 2.0))


def snap_to_steps(eps: float, dt: float) -> float:
    """Nearest positive multiple of dt, so the cut-off window holds a whole number of steps."""
    return max(1, round(eps / dt)) * dt
