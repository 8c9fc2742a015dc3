import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_picard.phantoms import (KINDS, PhantomSpec, eval_phantom, read_grid_csv, sample_grid,
                                      write_grid_csv)

SHAPED = ("ellipse", "two_bars", "letter_t")


def test_ellipse_peak_and_edge():
    spec = PhantomSpec("ellipse")
    assert spec(0.0, 0.4) == 1.0
    edge_z = 0.4 + 0.55
    assert spec(0.0, edge_z) == 0.0
    assert spec(0.0, edge_z - 1e-6) < 1e-100


def test_two_bars_values():
    spec = PhantomSpec("two-bars")
    assert spec(0.0, 0.6) == 1.0 and spec(0.0, -0.6) == 1.0
    assert spec(0.0, 0.0) == 0.0


def test_letter_t_values():
    spec = PhantomSpec("letter_t")
    assert spec(0.0, 0.5) == 1.0       # top bar
    assert spec(0.0, -0.3) == 1.0      # stem
    assert spec(0.4, -0.3) == 0.0


def test_unknown_kind():
    with pytest.raises(ValueError):
        PhantomSpec("circle")


def test_constant_kind():
    assert PhantomSpec("constant", {"c0": 0.5})(2.5, -2.5) == 0.5


@pytest.mark.parametrize("kind", SHAPED + ("zero",))
def test_vanishes_on_and_outside_boundary(kind):
    spec = PhantomSpec(kind)
    s = np.linspace(-3, 3, 241)
    X, Z = np.meshgrid(s, s, indexing="ij")
    outside = (np.abs(X) >= 1) | (np.abs(Z) >= 1)
    assert np.all(eval_phantom(spec, X[outside], Z[outside]) == 0.0)


@given(st.floats(-1, 1), st.floats(-1, 1))
@settings(max_examples=200)
def test_ranges(x, z):
    assert 0.0 <= PhantomSpec("ellipse")(x, z) <= 1.0
    assert PhantomSpec("two_bars")(x, z) in (0.0, 1.0)
    assert PhantomSpec("letter_t")(x, z) in (0.0, 1.0)


@pytest.mark.parametrize("kind", SHAPED)
def test_inclusion_masks_cover_support(kind):
    spec = PhantomSpec(kind)
    s = np.linspace(-1, 1, 161)
    X, Z = np.meshgrid(s, s, indexing="ij")
    masks = spec.inclusions(X, Z)
    union = np.any(masks, axis=0)
    support = spec(X, Z) > 0
    assert np.all(union[support])
    if kind != "ellipse":            # the bump underflows to 0 just inside its edge
        assert np.array_equal(union, support)
    assert len(masks) == (2 if kind == "two_bars" else 1)


def test_kinds_listed():
    assert set(SHAPED) < set(KINDS)


def test_grid_csv_round_trip(tmp_path):
    x = np.linspace(-1, 1, 11)
    z = np.linspace(-1, 1, 7)
    values = sample_grid(PhantomSpec("ellipse"), x, z)
    write_grid_csv(x, z, values, tmp_path / "g.csv")
    text = (tmp_path / "g.csv").read_bytes()
    assert b"\r" not in text and text.startswith(b"x,z,value\n")
    x2, z2, v2 = read_grid_csv(tmp_path / "g.csv")
    assert v2.tobytes() == values.tobytes()
    np.testing.assert_array_equal(x2, x)
