"""Box-drop acoustic imaging.

Simulate an object dropped into a mic-instrumented box, preprocess the
four-channel contact recordings, and reconstruct the top-down scene with
either the delay-based baseline or a trained network.
"""

from sonobox._core import (
    Model,
    default_config,
    preprocess,
    render_scene,
    run,
    score_scenes,
    simulate_episode,
    tdoa_locate,
    validate_config,
)

__all__ = [
    "Model",
    "default_config",
    "preprocess",
    "render_scene",
    "run",
    "score_scenes",
    "simulate_episode",
    "tdoa_locate",
    "validate_config",
]
