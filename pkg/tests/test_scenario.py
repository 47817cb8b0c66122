import numpy as np
import pytest

from twistgw.geometry import DegenerateFrame
from twistgw.grid import field_norm
from twistgw.io import write_snapshot
from twistgw.model import e_phi_residual
from twistgw.scenario import (
    ConfigError, Scenario, bundled_config, dump_config, load_config, onshell_frequencies, onshell_mass_sq, parse_config,
)
from twistgw.geometry import ThetaMatrix

SMALL = """\
version: 1
name: small
grid:
  half_width: 6.0
  points: 40
theta:
  blocks: [0.7]
"""


@pytest.mark.parametrize("name", ["vacuum.cfg", "gw-standard.cfg"])
def test_bundled_configs_round_trip(name):
    cfg = load_config(bundled_config(name))
    again = parse_config(dump_config(cfg))
    assert again.normal_form() == cfg.normal_form()
    assert again.fingerprint() == cfg.fingerprint()


def test_fingerprint_tracks_content():
    a = parse_config(SMALL)
    b = parse_config(SMALL.replace("points: 40", "points: 42"))
    assert a.fingerprint() != b.fingerprint()


def test_unknown_key_reports_line_and_field():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL.replace("  points: 40", "  points: 40\n  colour: red"))
    assert info.value.field == "grid.colour"
    assert info.value.line == 6


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config(SMALL + "params: [unclosed\n")
    assert info.value.line is not None


@pytest.mark.parametrize("text", [SMALL.replace("version: 1", "version: 2"),
                                  SMALL.replace("  blocks: [0.7]", "  blocks: [0.7]\n  matrix: [[0, 1], [-1, 0]]"),
                                  SMALL + "twist:\n  family: file\n",
                                  SMALL + "fields:\n  family: plane\n",
                                  "- just\n- a list\n"])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


def test_onshell_mass_needs_oscillator_field():
    with pytest.raises(ConfigError):
        Scenario(parse_config(SMALL + "params:\n  mass_sq: onshell\n  omega_sq: 0.25\n"))


def test_onshell_oscillator_frequencies():
    th = ThetaMatrix.block([0.5, 2.0])
    assert onshell_frequencies(th, 0.25) == pytest.approx([2.0, 0.5])
    assert onshell_mass_sq(th, 0.25) == pytest.approx(-5.0)
    with pytest.raises(ConfigError):
        onshell_frequencies(ThetaMatrix(np.array([[0, 1, 0.5, 0], [-1, 0, 0, 0], [-0.5, 0, 0, 2], [0, 0, -2, 0.0]])), 1.0)


def test_onshell_oscillator_solves_commutative_field_equation():
    text = SMALL.replace("points: 40", "points: 64") + (
        "params:\n  mass_sq: onshell\n  omega_sq: 0.04\nstar:\n  commutative: true\n"
        "fields:\n  family: onshell_ho\n  amplitude: 0.5\n")
    sc = Scenario(parse_config(text))
    cfg = sc.configuration()
    assert sc.params.mass_sq == pytest.approx(-2 * 2 * 0.2 / 0.7)
    assert field_norm(e_phi_residual(cfg)) < 1e-6 * field_norm(cfg.phi)


@pytest.mark.parametrize("block,check", [
    ("  family: zero\n", lambda phi: np.max(np.abs(phi)) == 0),
    ("  family: gaussian\n  amplitude: 0.5\n", lambda phi: np.max(np.abs(phi)) <= 0.5),
    ("  family: gaussian_poly\n  poly: [[1.0, 1, 0]]\n", lambda phi: abs(phi[20, 20]) < 0.2),
    ("  family: eigenmode\n  modes: [1, 2]\n", lambda phi: abs(phi[0, 0]) < 1e-15),
])
def test_field_families(block, check):
    sc = Scenario(parse_config(SMALL + "fields:\n" + block))
    assert check(sc.phi.values)


def test_field_shape_errors():
    with pytest.raises(ConfigError):
        Scenario(parse_config(SMALL + "fields:\n  family: gaussian\n  center: [0, 0, 0]\n"))
    with pytest.raises(ConfigError):
        Scenario(parse_config(SMALL + "fields:\n  family: gaussian_poly\n  poly: [[1.0, 1]]\n"))


def test_twist_families():
    for fam in ("identity", "sinusoidal", "shear"):
        sc = Scenario(parse_config(SMALL + f"twist:\n  family: {fam}\n  amplitude: 0.1\n"))
        v = sc.configuration().vielbein
        assert v.is_trivial() == (fam == "identity")


def test_strong_twist_is_degenerate():
    sc = Scenario(parse_config(SMALL + "twist:\n  family: sinusoidal\n  amplitude: 5.0\n  damping: 1.0\n"))
    with pytest.raises(DegenerateFrame):
        sc.configuration()


def test_twist_from_snapshot(tmp_path):
    base = Scenario(parse_config(SMALL + "twist:\n  family: shear\n  amplitude: 0.1\n"))
    write_snapshot(tmp_path / "twist", base.phi_a, base.theta.entries, ["phi^0", "phi^1"])
    sc = Scenario(parse_config(SMALL + f"twist:\n  family: file\n  path: {tmp_path / 'twist'}\n"))
    for a in range(2):
        assert np.array_equal(sc.phi_a[a].values, base.phi_a[a].values)
    wrong = SMALL.replace("points: 40", "points: 41") + f"twist:\n  family: file\n  path: {tmp_path / 'twist'}\n"
    with pytest.raises(ConfigError):
        Scenario(parse_config(wrong))
