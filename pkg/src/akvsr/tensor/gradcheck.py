"""Central finite-difference verification of analytic gradients."""

from collections.abc import Callable, Sequence

import numpy as np

from akvsr.models.results import GradCheckEntry, GradCheckReport
from akvsr.tensor.tensor import Tensor, backward

NamedParams = Sequence[tuple[str, Tensor]]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """``|a - n| / max(1, |a|, |n|)`` elementwise."""
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return np.abs(analytic - numeric) / denom


def grad_check(
    f: Callable[[], Tensor],
    params: NamedParams,
    h: float = 1e-5,
    tol: float = 1e-4,
    label: str = "",
) -> GradCheckReport:
    """Compare analytic and central-difference gradients of a scalar ``f``.

    ``f`` closes over ``params``; each parameter is perturbed in place and
    restored. A NaN in either gradient fails the check with its location.
    """
    for _, p in params:
        p.zero_grad()
    backward(f())
    analytic = {
        name: np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        for name, p in params
    }

    entries = []
    for name, p in params:
        numeric = np.zeros_like(p.data)
        for idx in np.ndindex(p.data.shape):
            original = p.data[idx]
            p.data[idx] = original + h
            plus = f().item()
            p.data[idx] = original - h
            minus = f().item()
            p.data[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * h)

        a = analytic[name]
        nan_mask = np.isnan(a) | np.isnan(numeric)
        if nan_mask.any():
            where = tuple(int(i) for i in np.argwhere(nan_mask)[0])
            entries.append(
                GradCheckEntry(
                    name=name,
                    max_rel_error=float("nan"),
                    worst_index=list(where),
                    passed=False,
                    nan_location=list(where),
                )
            )
            continue
        err = relative_error(a, numeric)
        worst = np.unravel_index(int(np.argmax(err)), err.shape) if err.size else ()
        max_err = float(err.max()) if err.size else 0.0
        entries.append(
            GradCheckEntry(
                name=name,
                max_rel_error=max_err,
                worst_index=[int(i) for i in worst],
                passed=max_err <= tol,
            )
        )
    return GradCheckReport(label=label, tol=tol, step=h, entries=entries)
