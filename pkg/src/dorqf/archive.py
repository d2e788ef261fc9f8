"""Fit persistence.

A fitted model serializes to a single JSON document (version tag
"dorqf-fit/1") holding everything prediction and band construction need:
basis spec, coefficient vectors, constraint row labels, active set,
covariances, scaling maps, grid, and provenance. Floats round-trip
bit-exactly through repr.
"""

import json

import numpy as np

from .bernstein import CoefficientLayout, build_constraint_system
from .covariance import ResidualCovariance
from .model import DorqfFit

__all__ = ["save_fit", "load_fit", "fit_to_payload", "fit_from_payload"]

FORMAT_TAG = "dorqf-fit/1"


def _array(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def fit_to_payload(fit):
    """JSON-serializable dictionary for a fitted model."""
    rc = fit.residual_cov
    payload = {
        "format": FORMAT_TAG,
        "spec": {
            "order": fit.layout.order,
            "q": fit.layout.q,
            "has_distributional": fit.layout.has_distributional,
            "theta_first_nonneg": any(
                lab.startswith("theta: first") for lab in fit.constraints.row_labels
            ),
        },
        "grid": _array(fit.grid),
        "psi_r": _array(fit.psi_r),
        "psi_ur": _array(fit.psi_ur),
        "constraint_labels": list(fit.constraints.row_labels),
        "active_set": [int(k) for k in fit.active_set],
        "multipliers": _array(fit.multipliers),
        "rss": fit.rss,
        "rss_unconstrained": fit.rss_unconstrained,
        "omega": _array(fit.omega),
        "covariate_scales": [list(s) for s in fit.covariate_scales],
        "predictor_scale": list(fit.predictor_scale) if fit.predictor_scale else None,
        "residual_cov": None if rc is None else {
            "eigenvalues": _array(rc.eigenvalues),
            "eigenvectors": _array(rc.eigenvectors),
            "noise_variance": rc.noise_variance,
            "n_components": rc.n_components,
            "pve": rc.pve,
            "matrix": _array(rc.matrix),
        },
        "delta_n": _array(fit.delta_n),
        "kkt": {k: float(v) for k, v in fit.kkt.items()},
        "provenance": fit.provenance,
    }
    return payload


def fit_from_payload(payload):
    """Rebuild a fitted model from its JSON dictionary."""
    if payload.get("format") != FORMAT_TAG:
        raise ValueError(f"unrecognized fit format {payload.get('format')!r}")
    spec = payload["spec"]
    layout = CoefficientLayout(order=spec["order"], q=spec["q"],
                               has_distributional=spec["has_distributional"])
    constraints = build_constraint_system(
        layout, theta_first_nonneg=spec["theta_first_nonneg"])
    if list(constraints.row_labels) != list(payload["constraint_labels"]):
        raise ValueError("constraint labels do not match the stored spec")
    rc = None
    if payload.get("residual_cov") is not None:
        r = payload["residual_cov"]
        rc = ResidualCovariance(
            eigenvalues=np.asarray(r["eigenvalues"], dtype=float),
            eigenvectors=np.asarray(r["eigenvectors"], dtype=float),
            noise_variance=r["noise_variance"],
            n_components=r["n_components"],
            pve=r["pve"],
            matrix=np.asarray(r["matrix"], dtype=float),
        )
    delta = payload.get("delta_n")
    return DorqfFit(
        layout=layout,
        constraints=constraints,
        grid=np.asarray(payload["grid"], dtype=float),
        psi_r=np.asarray(payload["psi_r"], dtype=float),
        psi_ur=np.asarray(payload["psi_ur"], dtype=float),
        active_set=tuple(payload["active_set"]),
        multipliers=np.asarray(payload["multipliers"], dtype=float),
        rss=payload["rss"],
        rss_unconstrained=payload["rss_unconstrained"],
        residuals=None,
        residuals_unconstrained=None,
        omega=np.asarray(payload["omega"], dtype=float),
        covariate_scales=tuple(tuple(s) for s in payload["covariate_scales"]),
        predictor_scale=(tuple(payload["predictor_scale"])
                         if payload["predictor_scale"] else None),
        residual_cov=rc,
        delta_n=None if delta is None else np.asarray(delta, dtype=float),
        kkt=dict(payload.get("kkt", {})),
        provenance=dict(payload.get("provenance", {})),
    )


def save_fit(fit, path):
    """Write a fitted model to a JSON file."""
    with open(path, "w") as fh:
        json.dump(fit_to_payload(fit), fh)


def load_fit(path):
    """Read a fitted model back from a JSON file."""
    with open(path) as fh:
        return fit_from_payload(json.load(fh))
