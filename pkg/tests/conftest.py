"""Pytest fixtures for ischemic-fbp tests."""

import json

import numpy as np
import pandas as pd
import pytest

from ischemic_fbp.report import RUN_COLUMNS
from ischemic_fbp.schema import FieldId, Parameters


@pytest.fixture
def default_params():
    """Reference parameter set."""
    return Parameters()


@pytest.fixture
def small_params():
    """Coarse grid for fast scenario runs."""
    return Parameters(N=16)


@pytest.fixture
def homeostatic_params():
    """Uniform healthy tissue without a wound source."""
    return Parameters(
        N=16,
        initial_profile="homeostatic",
        k_pb=0.0,
        enforce_homeostasis=True,
    )


@pytest.fixture
def healthy_fields():
    """Homeostatic point values (w, p, e, m, f, n, b, rho)."""
    return np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0])


@pytest.fixture
def tmp_config(tmp_path):
    """Write a small JSON config and return its path."""

    def _write(data: dict, name: str = "params.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def synthetic_frame():
    """Build a run frame from t, R and Q arrays plus constant field columns."""

    def _build(t, R, Q, L=5.0, field_value=1.0, **overrides):
        t = np.asarray(t, dtype=float)
        R = np.asarray(R, dtype=float)
        Q = np.asarray(Q, dtype=float)
        data = {
            "t": t,
            "R": R,
            "Q": Q,
            "Rdot": -2.0 * R * Q / (L * L + R * R),
            "dt": np.concatenate(([0.0], np.diff(t))),
        }
        for f in FieldId:
            for stat in ("min", "max"):
                data[f"{stat}_{f.label}"] = np.full_like(t, field_value)
            data[f"I_{f.label}"] = field_value * (L * L - R * R) / 2.0
        data["rho_L"] = np.full_like(t, field_value)
        data["bc_residual"] = np.zeros_like(t)
        data.update({k: np.asarray(v, dtype=float) for k, v in overrides.items()})
        return pd.DataFrame(data, columns=RUN_COLUMNS)

    return _build
