from typing import TypeVar

import numpy as np
import numpy.typing as npt

from kslab.errors import StateError

T = TypeVar("T")


def not_none(value: T | None, what: str = "value") -> T:
    if value is None:
        raise StateError("Unexpected null {}".format(what))
    return value


def require_finite(values: npt.ArrayLike, what: str) -> None:
    """Raises a StateError naming the quantity when values contain NaN or infinity."""
    if not np.all(np.isfinite(values)):
        raise StateError("Non-finite values in {}".format(what))


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0
