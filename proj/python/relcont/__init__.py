"""Python interface to the relcont verification library.

Thin wrapper over the compiled `_core` module: scenes are named verification
configurations, each carrying a candidate solution and the closed-form oracle
it is measured against. `run_scene` returns the report as plain dicts.
"""

import json as _json

from ._core import (
    ConfigError,
    StateError,
    list_checks,
    list_scenes,
    moving_domain_gap,
    run_scene_json,
    scene_description,
    scene_parameters,
    star_action_terms,
)

__all__ = [
    "ConfigError",
    "StateError",
    "list_checks",
    "list_scenes",
    "moving_domain_gap",
    "run_scene",
    "run_scene_json",
    "scene_description",
    "scene_parameters",
    "star_action_terms",
]


def run_scene(name, only="*", seed=None, grid=None, params=None, tolerances=None):
    """Run a scene's checks and return the report as a dict.

    The report mirrors the CLI's JSON output: ``scene``, ``environment``
    (seed, grid sizes, constants, timestamp), and one entry per check with
    ``name``, ``anchor``, ``max_residual``, ``l2_residual``, ``tolerance``,
    ``mode``, and ``pass``.
    """
    return _json.loads(
        run_scene_json(
            name,
            only=only,
            seed=seed,
            grid=grid,
            params=params or {},
            tolerances=tolerances or {},
        )
    )
