import json
import math
from pathlib import Path

import numpy as np
import pytest

import rvlab

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_pareto_inverse_cdf():
    assert rvlab.sample_pareto(2.0, 0.25) == 2.0
    assert rvlab.sample_pareto(0.5, 0.01) == pytest.approx(1e4)


def test_hill_on_pareto_draws():
    x = rvlab.pareto_sample(2.0, 20000, seed=3)
    assert x.min() >= 1.0
    alpha, se = rvlab.hill(list(x), 500)
    assert abs(alpha - 2.0) < 4 * se


def test_hill_geometric_sample():
    alpha, _ = rvlab.hill([8.0, 4.0, 2.0, 1.0], 3)
    assert alpha == pytest.approx(1 / (2 * math.log(2)))


def test_energy_distance_of_antipodal_points():
    u = np.array([[0.6], [0.8]])
    assert rvlab.energy_distance(u, -u) == pytest.approx(4.0)


def test_rde_stationary_fixed_point():
    rde = {"a": {"const": 0.5}, "b": {"const": [1.0]}}
    x = rvlab.rde_stationary(json.dumps(rde), 5, burn_in=80, spacing=1, seed=1)
    assert x.shape == (5, 1)
    assert np.allclose(x, 2.0)


def test_validate_reports_errors():
    assert rvlab.validate_config((CONFIGS / "tail_chain_pm05.json").read_text()) == []
    errors = rvlab.validate_config(json.dumps({"kind": "tail-chain", "seed": -1}))
    assert len(errors) >= 2


def test_run_and_compare(tmp_path):
    a = rvlab.run(str(CONFIGS / "tail_chain_pm05.json"), str(tmp_path / "a"))
    b = rvlab.run(str(CONFIGS / "tail_chain_pm05.json"), str(tmp_path / "b"))
    assert a == b
    names = {row["name"] for row in a["metrics"]}
    assert {"rho_star", "moment_bound_exceedances"} <= names
    assert rvlab.output_hashes(str(tmp_path / "a")) == rvlab.output_hashes(str(tmp_path / "b"))
    diff = rvlab.compare(str(tmp_path / "a"), str(tmp_path / "b"))
    assert all(row["diff"] == 0 for row in diff["rows"])


def test_runtime_error_is_raised(tmp_path):
    with pytest.raises(rvlab.RunError, match="estimate_rho_star"):
        rvlab.run(str(CONFIGS / "failing" / "spectral_pi_noncontractive.json"), str(tmp_path / "f"))


def bundled_configs():
    return sorted(p for p in CONFIGS.rglob("*.json") if p.name != "config.schema.json")


@pytest.mark.parametrize("path", bundled_configs(), ids=lambda p: p.name)
def test_bundled_config_matches_schema_and_validator(path):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((CONFIGS / "config.schema.json").read_text())
    config = json.loads(path.read_text())
    jsonschema.Draft202012Validator(schema).validate(config)
    assert rvlab.validate_config(json.dumps(config)) == []


def test_schema_rejects_unknown_size():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((CONFIGS / "config.schema.json").read_text())
    config = json.loads((CONFIGS / "grey_rde.json").read_text())
    config["sizes"]["trajectories"] = 10
    assert not jsonschema.Draft202012Validator(schema).is_valid(config)
    assert rvlab.validate_config(json.dumps(config))
