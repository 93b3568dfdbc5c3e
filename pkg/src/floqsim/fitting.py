"""Curve fits used by the experiment harness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit


@dataclass
class FitResult:
    model: str
    params: dict
    stderr: dict
    residual: float
    flags: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"model": self.model, "params": self.params, "stderr": self.stderr,
                "residual": self.residual, "flags": self.flags}


def _decay(r, a, eps):
    return a * (1 - 2 * eps) ** r


def fit_exp_decay(rounds, values) -> FitResult:
    """Least-squares fit of ``A (1 - 2 eps)^r``; ``eps`` is the error per round."""
    r = np.asarray(rounds, dtype=float)
    y = np.asarray(values, dtype=float)
    if r.size < 3:
        raise ValueError("need at least 3 points")
    if np.ptp(y) < 1e-12:
        return FitResult("exp-decay", {"A": float(y[0]), "eps": 0.0}, {"A": 0.0, "eps": 0.0},
                         0.0, ["constant"])
    pos = y > 0
    guess = 0.01
    if pos.sum() >= 2:
        slope = np.polyfit(r[pos], np.log(y[pos]), 1)[0]
        guess = float(np.clip((1 - np.exp(slope)) / 2, 1e-6, 0.49))
    popt, pcov = curve_fit(_decay, r, y, p0=(max(y[0], 1e-3), guess),
                           bounds=([0, 0], [np.inf, 0.5]), maxfev=20000)
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    res = float(np.linalg.norm(_decay(r, *popt) - y))
    return FitResult("exp-decay", {"A": float(popt[0]), "eps": float(popt[1])},
                     {"A": float(err[0]), "eps": float(err[1])}, res)


def _leak(r, a, b, p0):
    return a / b - (a / b - p0) * np.exp(-b * r)


def fit_leakage(rounds, populations) -> FitResult:
    """Fit ``p = a/b - (a/b - p0) exp(-b r)`` with a the leakage and b the decay rate."""
    r = np.asarray(rounds, dtype=float)
    y = np.asarray(populations, dtype=float)
    if r.size < 4:
        raise ValueError("need at least 4 points")
    if np.all(np.abs(y) < 1e-15):
        return FitResult("leakage-saturation", {"eps_leak": 0.0, "eps_d": float("nan"), "p0": 0.0},
                         {"eps_leak": 0.0, "eps_d": float("nan"), "p0": 0.0}, 0.0, ["flat"])
    sat = max(float(y[-1]), 1e-9)
    b0 = 1.0 / max(float(r[-1]) / 3, 1.0)
    try:
        popt, pcov = curve_fit(_leak, r, y, p0=(sat * b0, b0, float(y[0])),
                               bounds=([0, 1e-9, -1], [1, 10, 1]), maxfev=50000)
    except RuntimeError as exc:
        raise RuntimeError(f"leakage fit did not converge: {exc}") from exc
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    res = float(np.linalg.norm(_leak(r, *popt) - y))
    names = ("eps_leak", "eps_d", "p0")
    return FitResult("leakage-saturation", dict(zip(names, map(float, popt))),
                     dict(zip(names, map(float, err))), res)


def fit_trig(angles, values) -> FitResult:
    """Linear least squares for ``A cos(x + phi) + c``."""
    x = np.asarray(angles, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points")
    M = np.column_stack([np.cos(x), -np.sin(x), np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    a = float(np.hypot(coef[0], coef[1]))
    phi = float(np.arctan2(coef[1], coef[0]))
    resid = y - M @ coef
    dof = max(x.size - 3, 1)
    cov = np.linalg.pinv(M.T @ M) * float(resid @ resid) / dof
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    return FitResult("trig", {"A": a, "phi": phi, "c": float(coef[2])},
                     {"A": float(np.hypot(se[0], se[1])), "phi": float("nan"), "c": float(se[2])},
                     float(np.linalg.norm(resid)))
