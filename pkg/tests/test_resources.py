import json
from fractions import Fraction

import numpy as np
import pytest

from heatbench.models import ModelSpec, build_model
from heatbench.resources import (DEFAULT_CARBON_INTENSITY, DEVICE_PROFILES, DeviceProfile, audit_params,
                                 estimate_emissions, recompute, resource_report, time_epochs,
                                 write_resource_reports)


def test_emissions_anchor():
    energy, grams = estimate_emissions(120.0, DeviceProfile("box", 100.0), 400.0)
    assert energy == 0.2
    assert grams == 80.0


def test_emissions_zero_runtime():
    assert estimate_emissions(0.0, DEVICE_PROFILES["laptop_cpu"], DEFAULT_CARBON_INTENSITY) == (0.0, 0.0)


def test_emissions_linearity_grid():
    rng = np.random.default_rng(0)
    for _ in range(50):
        minutes, watts, grid = rng.uniform(0.1, 500), rng.uniform(1, 600), rng.uniform(10, 900)
        _, base = estimate_emissions(minutes, DeviceProfile("d", watts), grid)
        oracle = float(Fraction(watts) * Fraction(minutes) / 60 / 1000 * Fraction(grid))
        assert base == pytest.approx(oracle, rel=1e-12)
        k = rng.uniform(0.5, 4)
        assert estimate_emissions(k * minutes, DeviceProfile("d", watts), grid)[1] == pytest.approx(k * base, rel=1e-12)
        assert estimate_emissions(minutes, DeviceProfile("d", k * watts), grid)[1] == pytest.approx(k * base, rel=1e-12)
        assert estimate_emissions(minutes, DeviceProfile("d", watts), k * grid)[1] == pytest.approx(k * base, rel=1e-12)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        DeviceProfile("d", 0.0)
    with pytest.raises(ValueError):
        estimate_emissions(-1.0, DEVICE_PROFILES["laptop_cpu"], 100)
    with pytest.raises(ValueError):
        time_epochs([])


def test_report_recompute_is_bit_exact(tmp_path):
    model = build_model(ModelSpec("lstm", n_in=6, n_out=3, n_c=2, hidden_size=5), seed=0)
    rep = resource_report(model, [30.0, 33.0, 27.0], DEVICE_PROFILES["datacenter_gpu"], 250.0)
    assert rep.trainable_params == model.num_parameters()
    assert rep.total_runtime_min == 1.5 and rep.runtime_per_epoch_min == 0.5 and rep.epochs == 3
    assert recompute(rep) == rep
    write_resource_reports([rep], tmp_path / "r.json")
    loaded = json.loads((tmp_path / "r.json").read_text())[0]
    assert loaded["emissions_g"] == rep.emissions_g


def test_audit_rejects_mismatch():
    model = build_model(ModelSpec("fcn", n_in=4, n_out=2, hidden_size=3), seed=0)
    rows = audit_params(model)
    assert [r.layer for r in rows] == [n for n, _ in model.named_parameters()]
    model.spec = model.spec.with_(hidden_size=4)
    with pytest.raises(AssertionError):
        audit_params(model)
