from pathlib import Path

import numpy as np
import pytest

from epmesh.config import ConfigError, SimConfig, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
[model]
kind = epdiff
[grid]
nx = 32
ny = 32
[time]
t_end = 0.5
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.nx == 32 and cfg.t_end == 0.5
    assert cfg.dt == 0.0204 and cfg.fp_tol == 1e-9 and cfg.cg_tol == 1e-9
    assert cfg.alpha == 0.3133 and cfg.particles_per_cell == 16
    assert cfg.Lx == pytest.approx(2 * np.pi)
    assert cfg.n_steps == 25


def test_shipped_epdiff_config():
    cfg = parse_config((CONFIGS / "epdiff_lines.cfg").read_text())
    assert cfg.alpha == 0.3133 and cfg.nx == cfg.ny == 128 and cfg.dt == 0.0204
    assert cfg.particles_per_cell == 16 and cfg.ic == "two_lines"
    assert cfg.separation == pytest.approx(np.pi / 2)


def test_shipped_swalpha_config():
    cfg = parse_config((CONFIGS / "swalpha_rest.cfg").read_text())
    assert cfg.model == "swalpha" and cfg.model_spec().has_depth


@pytest.mark.parametrize("ppc", [7, 0, 36])
def test_particles_per_cell_must_be_listed_square(ppc):
    with pytest.raises(ConfigError) as err:
        parse_config(f"[particles]\nper_cell = {ppc}\n")
    assert err.value.line == 2 and err.value.key == "per_cell"


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("# comment\n[grid]\nnx = 16\nnz = 4\n")
    assert err.value.line == 4 and "nz" in str(err.value)


def test_unknown_section_and_malformed_lines():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[mesh]\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("[grid]\nnx 16\n")
    with pytest.raises(ConfigError, match="outside"):
        parse_config("nx = 16\n")


@pytest.mark.parametrize("text", [
    "[grid]\nnx = 16.5\n",
    "[grid]\nLx = __import__('os')\n",
    "[time]\ndt = -0.1\n",
    "[time]\nfp_tol = 0\n",
    "[time]\nt_end = -1\n",
    "[output]\nfigures = maybe\n",
    "[model]\nkind = euler\n",
])
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_arithmetic_and_comments():
    cfg = parse_config("[grid]\nLx = 2*pi  # full period\nLy = pi/2 + 1\n[ic]\nlength = none\n")
    assert cfg.Lx == pytest.approx(2 * np.pi)
    assert cfg.Ly == pytest.approx(np.pi / 2 + 1)
    assert cfg.length is None


def test_two_lines_requires_epdiff():
    with pytest.raises(ConfigError, match="EP-Diff"):
        parse_config("[model]\nkind = swalpha\n[ic]\nname = two_lines\n")


def test_zero_t_end_allowed():
    assert parse_config("[time]\nt_end = 0\n").n_steps == 0


def test_config_is_frozen():
    with pytest.raises(Exception):
        SimConfig().nx = 4
