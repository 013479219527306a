"""Tests for target-density construction from clarity deficits."""

import math

import numpy as np
import pytest

from eclares.grid import CellField, DomainSpec, generate_environment
from eclares.tisd import Tisd, gen_tisd, uniform_tisd, write_tisd_csv


def two_cell_field(q, targets, Q=1.0):
    spec = DomainSpec(lengths=(0.2, 0.1), cell_size=0.1)
    return CellField(
        spec=spec,
        values=np.zeros(2),
        process_noise=np.full(2, Q),
        clarity=np.asarray(q, dtype=float),
        target_clarity=np.asarray(targets, dtype=float),
    )


def test_two_cell_derived_example():
    """Raw weights ln(5)/2 and ln(2.5)/2 normalize to ~0.6372 / 0.3628."""
    fld = two_cell_field([0.0, 0.25], [0.4, 0.4])
    tisd = gen_tisd(fld, epsilon=0.05)
    raw0 = math.log(5.0) / 2.0
    raw1 = math.log(2.5) / 2.0
    want = np.array([raw0, raw1]) / (raw0 + raw1)
    np.testing.assert_allclose(tisd.density, want, atol=1e-4)
    assert tisd.density[0] == pytest.approx(0.6372, abs=1e-3)
    assert tisd.density[1] == pytest.approx(0.3628, abs=1e-3)
    assert not tisd.targets_satisfied


def test_density_sums_to_one():
    fld = generate_environment(
        DomainSpec((2.0, 2.0), 0.2), np.random.default_rng(0))
    tisd = gen_tisd(fld)
    assert tisd.density.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(tisd.density >= 0.0)


def test_symmetry():
    """Cells with identical clarity gaps receive identical mass."""
    fld = two_cell_field([0.2, 0.2], [0.45, 0.45])
    tisd = gen_tisd(fld)
    assert tisd.density[0] == pytest.approx(tisd.density[1], abs=1e-12)
    np.testing.assert_allclose(tisd.density, 0.5)


def test_more_deficit_gets_more_mass():
    fld = two_cell_field([0.0, 0.3], [0.45, 0.45])
    tisd = gen_tisd(fld)
    assert tisd.density[0] > tisd.density[1]


def test_uniform_fallback_when_targets_met():
    fld = two_cell_field([0.46, 0.46], [0.45, 0.45])
    tisd = gen_tisd(fld)
    assert tisd.targets_satisfied
    np.testing.assert_allclose(tisd.density, 0.5)


def test_target_clamped_near_max():
    """Targets at/above q_inf - eps are clamped instead of raising."""
    # q_inf = 0.5 here; target 0.49 with eps 0.05 clamps to 0.45
    fld = two_cell_field([0.0, 0.0], [0.49, 0.2])
    tisd = gen_tisd(fld, epsilon=0.05)
    assert np.all(np.isfinite(tisd.density))
    assert tisd.density.sum() == pytest.approx(1.0)
    assert tisd.density[0] > tisd.density[1]


def test_uniform_tisd():
    spec = DomainSpec((2.0, 2.0), 0.2)
    tisd = uniform_tisd(spec)
    np.testing.assert_allclose(tisd.density, 1.0 / spec.num_cells)
    assert not tisd.targets_satisfied  # baseline, not a deficit statement


def test_tisd_validation():
    spec = DomainSpec((0.2, 0.1), 0.1)
    with pytest.raises(ValueError):
        Tisd(spec=spec, density=np.array([0.7, 0.7]), targets_satisfied=False)
    with pytest.raises(ValueError):
        Tisd(spec=spec, density=np.array([1.2, -0.2]), targets_satisfied=False)


def test_write_tisd_csv(tmp_path):
    spec = DomainSpec((0.2, 0.1), 0.1)
    tisd = uniform_tisd(spec)
    path = tmp_path / "tisd.csv"
    write_tisd_csv(tisd, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("cell_index")
