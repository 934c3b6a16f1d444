"""Placement algorithms behind one ``place(state, ae, rng)`` call signature."""
from .baselines import MAX_TRIES, ffd_place, nva_place
from .ndap import ndap_place
from .oracle import InstanceTooLargeError, oracle_place
from .staging import Staging

PLACERS = {
    "ndap": ndap_place,
    "nva": nva_place,
    "ffd": ffd_place,
    "oracle": oracle_place,
}


def get_placer(name: str):
    try:
        return PLACERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(PLACERS)}") from None


__all__ = [
    "PLACERS", "get_placer", "ndap_place", "nva_place", "ffd_place", "oracle_place",
    "Staging", "InstanceTooLargeError", "MAX_TRIES",
]
