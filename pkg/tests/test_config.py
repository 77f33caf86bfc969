import pytest

from afcs.config import ConfigError, load_config, parse_config, parse_quantity


def test_quantities_with_units():
    assert parse_quantity("5 mV") == pytest.approx(5e-3)
    assert parse_quantity("2.5 kHz") == 2500.0
    assert parse_quantity("62.5 mW") == pytest.approx(0.0625)
    assert parse_quantity("1e-10 W/Hz") == 1e-10
    assert parse_quantity("0.1 us") == pytest.approx(1e-7)
    assert parse_quantity("75 m") == 75.0
    assert parse_quantity("3") == 3.0
    with pytest.raises(ValueError):
        parse_quantity("3 furlongs")
    with pytest.raises(ValueError):
        parse_quantity("abc")


def test_parse_values_and_sweep():
    cfg = parse_config("""
# comment
A0 = 5 mV          # trailing comment
n_cycles = 4
sigma_xi_sq = 0.03, 0.01, 0.001
mode = rejection
""")
    assert cfg.values == {"A0": pytest.approx(5e-3), "n_cycles": 4, "mode": "rejection"}
    assert cfg.sweep == ("sigma_xi_sq", [0.03, 0.01, 0.001])


def test_alpha_maps_to_mu():
    cfg = parse_config("alpha = 4\nn_cycles = 2\n")
    mu = cfg.params_overrides()["mu"]
    assert mu == pytest.approx(6.334248366623996e-05, rel=1e-12)
    with pytest.raises(ConfigError):
        parse_config("alpha = 4\nmu = 0.01\n").params_overrides()


@pytest.mark.parametrize("text, line", [
    ("A0 = 1\nbogus = 2\n", 2),
    ("A0 = 1\n\nA0 = 2\n", 3),
    ("just words\n", 1),
    ("A0 =\n", 1),
    ("A0 = 1\nn_cycles = 2.5\n", 2),
    ("x0 = 1, 2\nA0 = 1, 2\n", 2),
    ("A0 = 1,,2\n", 1),
    ("A0 = nan\n", 1),
    ("F = 2 parsecs\n", 1),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text, path="c.cfg")
    assert err.value.line == line
    assert str(err.value).startswith(f"c.cfg:{line}:")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.cfg"))
