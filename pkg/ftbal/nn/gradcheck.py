"""
Central finite-difference verification of analytic gradients
"""

from typing import Callable, Iterable, Mapping, Union

import numpy as np

from .parameter import Parameter

LossFn = Callable[[bool], float]


def finite_diff_check(
    f: LossFn,
    params: Union[Mapping[str, Parameter], Iterable[Parameter]],
    h: float = 1e-5,
    floor: float = 1e-8,
) -> float:
    """
    Compare analytic and central-difference gradients

    Args:
        f: f(backward) returns the scalar loss; with backward=True it must
           also accumulate analytic gradients into the parameters
        params: parameters to verify
        h: perturbation step
        floor: lower bound of the denominator; entries whose gradients are
            both below it are effectively compared absolutely

    Returns:
        Worst relative error |a - n| / max(|a|, |n|, floor) over all entries
    """
    params = list(params.values()) if isinstance(params, Mapping) else list(params)
    for p in params:
        p.zero_grad()
    f(True)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.value.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = f(False)
            flat[i] = original - h
            f_minus = f(False)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = flat_grad[i]
            denom = max(abs(a), abs(numeric), floor)
            worst = max(worst, abs(a - numeric) / denom)
    return worst
