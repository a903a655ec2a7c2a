"""Angles-only absolute and relative navigation for satellite swarms.

Subpackages cover the full desk-scale pipeline: orbit states and frames
(:mod:`swarmnav.orbits`), perturbed dynamics (:mod:`swarmnav.dynamics`),
synthetic star-tracker sensing (:mod:`swarmnav.sensing`), multi-target
bearing-track association (:mod:`swarmnav.tracking`), batch initialization
(:mod:`swarmnav.batch_init`), the sequential multi-observer filter
(:mod:`swarmnav.navfilter`), and the deterministic swarm simulation
(:mod:`swarmnav.simulation`).
"""

from swarmnav import constants
from swarmnav.orbits import AbsoluteOrbit, RelativeOrbit

__all__ = ["constants", "AbsoluteOrbit", "RelativeOrbit"]

__version__ = "0.1.0"
