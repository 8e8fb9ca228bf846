import json

import pytest

from ssmp.config import ConfigError, build_quintuple, build_sde_config, load, parse
from ssmp.measures import cramer_value, laplace_exponent


def doc(**kw):
    d = {"quintuple": {"psi_at_1": 1.0, "sigma2": 4.0}}
    d.update(kw)
    return d


def test_minimal_document():
    spec = parse(doc())
    q = build_quintuple(spec.quintuple)
    assert laplace_exponent(q.triplet, 1.0) == pytest.approx(1.0)
    cfg = build_sde_config(spec.sde)
    assert cfg.dt == 1e-3 and cfg.m == 256
    assert spec.validate_.tests[0] == "cramer_two_routes"


def test_full_document_builds():
    spec = parse(doc(
        quintuple={"a": 0.2, "sigma2": 1.0, "q": 0.1,
                   "pi": {"atoms": [[-0.7, 0.5]],
                          "densities": [{"family": "exponential", "c": 1.0, "beta": 2.0},
                                        {"family": "truncated_stable", "c": 0.3, "alpha": 1.2}],
                          "small_jump_cutoff": 0.01},
                   "v": {"densities": [{"family": "uniform", "c": 1.0, "lo": -0.8, "hi": -0.2}]}},
        z=-2.0, sde={"dt": 0.01, "m": 64}, validate={"tests": ["symmetry"], "scaling_c": [2, 4]},
    ))
    q = build_quintuple(spec.quintuple)
    assert q.triplet.a == 0.2 and len(q.triplet.pi.densities) == 2
    # uniform V on [-0.8, -0.2]: int (|u| - 1) V = -0.5 * 0.6
    assert cramer_value(q) == pytest.approx(laplace_exponent(q.triplet, 1.0) - 0.3)


@pytest.mark.parametrize("bad, where", [
    ({"quintuple": {"sigma2": 1.0}}, "quintuple"),
    ({"quintuple": {"a": 1.0, "psi_at_1": 1.0}}, "quintuple"),
    (doc(sde={"dt": "fast"}), "sde.dt"),
    (doc(extra=1), "extra"),
    (doc(quintuple={"a": 0, "pi": {"densities": [{"family": "gamma", "c": 1}]}}), "quintuple.pi.densities.0"),
    (doc(quintuple={"a": 0, "pi": {"densities": [{"family": "exponential", "c": 1}]}}),
     "quintuple.pi.densities.0.beta"),
    (doc(validate={"tests": ["nope"]}), "validate.tests.0"),
    ({}, "quintuple"),
])
def test_schema_errors_name_the_path(bad, where):
    with pytest.raises(ConfigError) as e:
        parse(bad)
    assert str(e.value).startswith(where)


def test_domain_errors_name_the_path():
    spec = parse(doc(quintuple={"a": 0, "pi": {"densities": [{"family": "exponential", "c": -1, "beta": 1}]}}))
    with pytest.raises(ConfigError, match=r"^quintuple\.pi\.densities\.0"):
        build_quintuple(spec.quintuple)
    spec = parse(doc(quintuple={"a": 0, "v": {"atoms": [[-2.0, 1.0]]}}))
    with pytest.raises(ConfigError, match=r"^quintuple\.v"):
        build_quintuple(spec.quintuple)
    spec = parse(doc(quintuple={"a": 0, "pi": {"densities": [{"family": "truncated_stable", "c": 1, "alpha": 1}]}}))
    with pytest.raises(ConfigError, match=r"^quintuple\.pi"):
        build_quintuple(spec.quintuple)
    with pytest.raises(ConfigError, match=r"^sde"):
        build_sde_config(parse(doc(sde={"dt": 2.0})).sde)


def test_load_yaml_and_json(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("quintuple:\n  psi_at_1: 0.5\nz: 2\n")
    d, spec = load(y)
    assert d["z"] == 2 and spec.z == 2.0
    j = tmp_path / "c.json"
    j.write_text(json.dumps(doc()))
    assert load(j)[1].quintuple.sigma2 == 4.0
    bad = tmp_path / "b.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load(bad)
    broken = tmp_path / "x.json"
    broken.write_text("{")
    with pytest.raises(ConfigError, match="cannot parse"):
        load(broken)
