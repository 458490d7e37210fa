import numpy as np
import pytest

from epmesh.diagnostics import DiagnosticsRecord
from epmesh.grid import GridSpec
from epmesh.initial import init_particles_uniform
from epmesh.output import (
    ENERGY_HEADER,
    read_energy_csv,
    read_pgm,
    read_snapshot_text,
    write_energy_csv,
    write_particles_csv,
    write_snapshot_pgm,
    write_snapshot_text,
)

G = GridSpec(2 * np.pi, 2 * np.pi, 8, 10)


def rec(t, H=1.0 / 3):
    return DiagnosticsRecord(t, H, (0.1, -0.2), 4.0, 4.0, 2, 17)


def test_single_record_csv_has_two_lines(tmp_path):
    p = tmp_path / "energy.csv"
    write_energy_csv([rec(0.0)], p)
    lines = p.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(ENERGY_HEADER)


def test_csv_round_trips_full_precision(tmp_path):
    p = tmp_path / "energy.csv"
    records = [rec(k * 0.0204, H=np.pi / (k + 1)) for k in range(5)]
    write_energy_csv(records, p)
    data = read_energy_csv(p)
    assert np.array_equal(data["hamiltonian"], [r.hamiltonian for r in records])
    assert np.array_equal(data["cg_iters"], [17] * 5)


def test_empty_records_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_energy_csv([], tmp_path / "e.csv")


def test_write_errors_name_the_path(tmp_path):
    bad = tmp_path / "missing" / "e.csv"
    with pytest.raises(OSError, match="missing"):
        write_energy_csv([rec(0.0)], bad)


def test_text_snapshot_round_trip_is_bitwise(tmp_path, rng):
    f = rng.normal(size=G.m) * 1e-3
    p = tmp_path / "s.txt"
    write_snapshot_text(f, G, 0.0612, p)
    values, t, name = read_snapshot_text(p)
    assert np.array_equal(values.ravel(), f)
    assert t == 0.0612 and name == "speed"
    assert p.read_text().splitlines()[0] == "# 8 10 0.061199999999999997 speed"


def test_zero_field_gives_zero_graymap(tmp_path):
    p = tmp_path / "z.pgm"
    write_snapshot_pgm(np.zeros(G.m), G, p)
    img, maxval = read_pgm(p)
    assert maxval == 255 and img.shape == (10, 8) and not img.any()


def test_graymap_scaling_and_orientation(tmp_path):
    f = np.zeros(G.m)
    f[G.node_index(0, 0)] = 2.0
    f[G.node_index(3, 9)] = 1.0
    p = tmp_path / "g.pgm"
    write_snapshot_pgm(f, G, p)
    img, _ = read_pgm(p)
    # y increases upwards, so row 0 of the image is the top of the domain
    assert img[-1, 0] == 255 and img[0, 3] == 128
    assert p.read_bytes().startswith(b"P5\n8 10\n255\n")


def test_graymap_with_whitespace_valued_first_pixel(tmp_path):
    f = np.full(G.m, 1.0)
    f[G.node_index(0, 9)] = 10 / 255
    p = tmp_path / "w.pgm"
    write_snapshot_pgm(f, G, p)
    img, _ = read_pgm(p)
    assert img[0, 0] == 10 and img.shape == (10, 8)


def test_particles_csv(tmp_path):
    P = init_particles_uniform(G, 1)
    p = tmp_path / "p.csv"
    write_particles_csv(P, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "beta,x,y,mx,my,D"
    assert len(lines) == P.n + 1
