"""Shared numeric oracles for the test suite."""

import numpy as np

from modsr.autodiff import Tape, Tensor


def central_diff(f, arr, eps=1e-4):
    """Full numeric gradient of scalar f(arr) by central differences."""
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f()
        flat[i] = orig - eps
        lo = f()
        flat[i] = orig
        gf[i] = (hi - lo) / (2.0 * eps)
    return g


def max_rel_err(analytic, numeric):
    denom = np.maximum(np.abs(numeric), 1e-3)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gradcheck(build, arrays, eps=1e-4, tol=1e-4):
    """Compare tape gradients of scalar build(*tensors) against central FD.

    ``arrays`` are float64 numpy arrays; every one is treated as a
    differentiable leaf. Returns the worst relative error seen.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    with Tape() as tape:
        loss = build(*tensors)
    grads = tape.backward(loss, params=tensors)

    worst = 0.0
    for a, g in zip(arrays, grads):
        def f():
            return float(build(*[Tensor(x) for x in arrays]).data)

        num = central_diff(f, a, eps=eps)
        worst = max(worst, max_rel_err(g, num))
    assert worst <= tol, f"gradient mismatch: max rel err {worst:.3e} > {tol}"
    return worst
