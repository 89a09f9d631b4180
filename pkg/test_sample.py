import pytest

from qict.errors import DomainError, EnumerationLimitError
from qict.physics.sample import (
    Layer,
    LayerStack,
    enumerate_paths,
    fresnel_reflectivity,
    fresnel_transmissivity,
    total_reflected_power,
)


def test_mirror_gives_one_path():
    paths = enumerate_paths(LayerStack.mirror(reference_plane_offset=-1e-3))
    assert len(paths) == 1
    assert paths[0].optical_roundtrip == pytest.approx(1e-3)
    assert paths[0].amplitude == 1.0
    assert paths[0].order == 0


def test_glass_slab_first_order_paths():
    """A 1.5-index slab in air: front reflection and one transmitted back reflection"""
    stack = LayerStack(layers=(Layer(1e-3, 1.5),))
    paths = enumerate_paths(stack, max_order=0)
    assert [p.order for p in paths] == [0, 0]
    front, back = paths
    assert front.optical_roundtrip == 0.0
    assert front.amplitude.real == pytest.approx(-0.2)
    assert back.optical_roundtrip == pytest.approx(3e-3)
    assert back.amplitude.real == pytest.approx(0.8 * 0.2 * 1.2)


def test_glass_slab_multiple_reflection():
    stack = LayerStack(layers=(Layer(1e-3, 1.5),))
    paths = enumerate_paths(stack, max_order=1)
    assert len(paths) == 3
    echo = paths[-1]
    assert echo.order == 1
    assert echo.optical_roundtrip == pytest.approx(6e-3)
    assert echo.amplitude.real == pytest.approx(0.8 * 0.2 * 0.2 * 0.2 * 1.2)


def test_paths_sorted_and_power_bounded(sample2_stack):
    paths = enumerate_paths(sample2_stack, max_order=2)
    roundtrips = [p.optical_roundtrip for p in paths]
    assert roundtrips == sorted(roundtrips)
    assert total_reflected_power(paths) <= 1.0


def test_higher_order_adds_paths(sample1_stack):
    counts = [len(enumerate_paths(sample1_stack, max_order=k)) for k in range(3)]
    assert counts[0] == 3
    assert counts[0] < counts[1] < counts[2]


def test_sample1_interfaces(sample1_stack):
    """Surfaces at 0.3 mm, then +2 n_g d for sapphire, then +2 d for the air gap"""
    positions = sample1_stack.interface_positions()
    assert positions == pytest.approx([0.3e-3, 0.3e-3 + 2 * 1.77 * 0.442e-3, 0.3e-3 + 2 * 1.77 * 0.442e-3 + 0.862e-3])
    first_order = [p.optical_roundtrip for p in enumerate_paths(sample1_stack, max_order=0)]
    assert first_order == pytest.approx(positions)


def test_first_order_roundtrips_are_not_doubled(sample2_stack):
    """Each surface reflection sits at its interface position, counted once per roundtrip"""
    first_order = [p.optical_roundtrip for p in enumerate_paths(sample2_stack, max_order=0)]
    assert first_order == pytest.approx([0.35e-3, 2.16222e-3, 2.66222e-3, 4.39328e-3])
    assert first_order == pytest.approx(sample2_stack.interface_positions())


def test_sample2_double_roundtrip_in_silicon(sample2_stack):
    roundtrips = [p.optical_roundtrip for p in enumerate_paths(sample2_stack, max_order=1) if p.order == 1]
    assert any(abs(r - (0.35e-3 + 4 * 3.61 * 0.251e-3)) < 1e-9 for r in roundtrips)


def test_enumeration_cap():
    stack = LayerStack(layers=(Layer(1e-4, 1.5), Layer(1e-4, 2.0), Layer(1e-4, 1.5)))
    with pytest.raises(EnumerationLimitError):
        enumerate_paths(stack, max_order=3, path_cap=10)


def test_shifted_moves_every_path(sample1_stack):
    base = enumerate_paths(sample1_stack)
    moved = enumerate_paths(sample1_stack.shifted(0.1e-3))
    for a, b in zip(base, moved):
        assert b.optical_roundtrip == pytest.approx(a.optical_roundtrip - 0.1e-3)
        assert b.amplitude == a.amplitude


def test_fresnel_identity():
    for n1, n2 in [(1.0, 1.5), (1.77, 1.0), (1.0, 3.61)]:
        t = fresnel_transmissivity(n1, n2) * fresnel_transmissivity(n2, n1)
        assert t == pytest.approx(1 - fresnel_reflectivity(n1, n2) ** 2)


@pytest.mark.parametrize("thickness, index", [(-1e-3, 1.5), (1e-3, 0.9)])
def test_invalid_layers(thickness, index):
    with pytest.raises(DomainError):
        Layer(thickness, index)


def test_substrate_reflectivity_must_be_physical():
    with pytest.raises(DomainError):
        LayerStack(substrate_reflectivity=1.5)
