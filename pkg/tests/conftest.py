"""Shared fixtures: the bundled three-device scenario plus power helpers."""

import dataclasses

import pytest

from bscout.scenario import Scenario, dbm_to_watts, load_config


def at_power(scn: Scenario, pt_dbm: float) -> Scenario:
    system = dataclasses.replace(scn.system, transmit_power=dbm_to_watts(pt_dbm))
    return scn._replace(system=system)


def single_link(scn: Scenario, k: int = 0) -> Scenario:
    return scn._replace(links=scn.links[k:k + 1])


@pytest.fixture(scope="session")
def scn() -> Scenario:
    return load_config()
