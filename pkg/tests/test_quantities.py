from __future__ import annotations

import pytest

from csm_bounds.utils.quantities import (IQZ, IZ, QUANTITY_SETS, QuantitySet, describe_quantities,
                                         get_quantity_set, h0_power, hlz, iz_h0_power, parse_quantities,
                                         parse_quantity, parse_target)


def test_parse_simple_and_powers() -> None:
    assert parse_quantity("Iz") == [IZ]
    assert parse_quantity("IzH0^3") == [iz_h0_power(3)]
    assert parse_quantity("H0") == [h0_power(1)]
    assert parse_quantity("Hlz[2]") == [hlz(2)]


def test_star_expands_over_all_sites() -> None:
    assert parse_quantity("Hlz[*]", 3) == [hlz(l) for l in range(4)]
    with pytest.raises(ValueError):
        parse_quantity("Hlz[*]")


def test_unknown_descriptor() -> None:
    with pytest.raises(ValueError):
        parse_quantity("Sx")
    with pytest.raises(ValueError):
        parse_target("iz")


def test_named_sets() -> None:
    assert get_quantity_set("basic3", 5) == [IZ, IQZ, iz_h0_power(1)]
    assert len(get_quantity_set(QuantitySet.H_SIX, 5)) == 6
    assert len(get_quantity_set("h-seven", 5)) == 7
    assert len(get_quantity_set("integrability", 4)) == 6
    assert set(QUANTITY_SETS) == set(QuantitySet)


def test_explicit_list_and_description() -> None:
    quantities = parse_quantities("Iz,Hlz[*]", 2)
    assert describe_quantities(quantities) == ["Iz", "Hlz[*]"]
    assert describe_quantities(parse_quantities(["Hl[1]", "Hl[2]"], 2)) == ["Hl[1]", "Hl[2]"]


def test_properties() -> None:
    assert IQZ.zero_field_only
    assert not iz_h0_power(2).zero_field_only
    assert iz_h0_power(2).spin_operator_count == 3
    assert iz_h0_power(2).energy_order == 2
    assert hlz(0).as_family() == iz_h0_power(1)
    with pytest.raises(ValueError):
        hlz(1).family_signature
