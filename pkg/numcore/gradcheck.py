# numcore/gradcheck.py
import logging
from typing import Callable, Mapping

import numpy as np

from core.errors import ContractError
from numcore.tensor import Tape, Tensor, backward

logger = logging.getLogger(__name__)

ScalarFn = Callable[[dict[str, Tensor]], Tensor]


def _value(f: ScalarFn, params: Mapping[str, np.ndarray]) -> float:
    out = f({name: Tensor(v) for name, v in params.items()})
    if out.size != 1:
        raise ContractError(f"checked function must return a scalar, got {out.shape}")
    return out.item()


def analytic_gradients(f: ScalarFn, params: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    tape = Tape()
    return backward(tape, f(tape.watch(params)))


def finite_diff_errors(
    f: ScalarFn,
    params: Mapping[str, np.ndarray],
    step: float = 1e-5,
    analytic: Mapping[str, np.ndarray] | None = None,
    max_coords: int | None = None,
    seed: int = 0,
) -> dict[str, float]:
    """Per-parameter max relative error between tape and central-difference gradients.

    relative error = |analytic - central| / max(|analytic|, |central|, 1e-8).
    With `max_coords`, each parameter is checked at that many seeded coordinates.
    """
    if step <= 0:
        raise ContractError(f"step must be positive, got {step}")
    params = {name: np.array(v, dtype=np.float64) for name, v in params.items()}
    if _value(f, params) != _value(f, params):
        raise ContractError("checked function is not deterministic")
    if analytic is None:
        analytic = analytic_gradients(f, params)

    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    for name, base in params.items():
        coords = np.arange(base.size)
        if max_coords is not None and base.size > max_coords:
            coords = np.sort(rng.choice(base.size, size=max_coords, replace=False))
        worst = 0.0
        for c in coords:
            shifted = dict(params)
            plus, minus = base.copy(), base.copy()
            plus.flat[c] += step
            minus.flat[c] -= step
            shifted[name] = plus
            f_plus = _value(f, shifted)
            shifted[name] = minus
            f_minus = _value(f, shifted)
            central = (f_plus - f_minus) / (2.0 * step)
            a = float(np.asarray(analytic[name]).flat[c])
            rel = abs(a - central) / max(abs(a), abs(central), 1e-8)
            worst = max(worst, rel)
        errors[name] = worst
        logger.debug("gradcheck %s: %d coords, max rel err %.3e", name, len(coords), worst)
    return errors


def finite_diff_check(f: ScalarFn, params: Mapping[str, np.ndarray], step: float = 1e-5, **kwargs) -> float:
    """Max relative error over all checked coordinates of all parameters."""
    errors = finite_diff_errors(f, params, step, **kwargs)
    return max(errors.values(), default=0.0)
