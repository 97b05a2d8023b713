"""Built-in experiment presets.

Each preset expands to a full config for one CLI command.  Quantities the
scenario family leaves open (length grids, list-size rounding, seeds for
block sampling) are ordinary config fields here, so overrides apply and
the resolved values are echoed into every output.
"""

from .errors import ValidationError

PRESETS = {
    # Two-class water-filling example: water level and flip probabilities.
    "fig2": {
        "kind": "waterfill",
        "composition": [477, 40],
        "p": [0.02, 0.03],
        "t": 5,
        "block_length": 511,
    },
    # BI-AWGN allocation and flip rule at three noise levels.
    "fig3": {
        "kind": "awgn-rule",
        "sigmas": [0.5, 0.75, 1.2],
        "block_length": 511,
        "t": 5,
        "seed": 511,
        "mode": "block",
        "rule_samples": 257,
        "sort": "reliability",
    },
    # Single-class flip probabilities vs. block length.
    "fig4": {
        "kind": "optimize",
        "p": [1e-3],
        "fractions": [1.0],
        "t_over_n": 9.8e-4,
        "n_grid": [63, 127, 255, 511, 1023],
        "list_rule": "exact",
    },
    # Two-class flip probabilities vs. block length.
    "fig5": {
        "kind": "optimize",
        "p": [0.083, 0.081],
        "fractions": [0.4, 0.6],
        "t_over_n": 0.079,
        "n_grid": [100, 200, 400, 800],
        "list_rule": "exact",
    },
}


def expand_preset(name: str, overrides: dict) -> dict:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset '{name}' (have: {', '.join(sorted(PRESETS))})")
    config = dict(PRESETS[name])
    for key, value in overrides.items():
        if key == "kind":
            raise ValidationError("preset overrides cannot change kind")
        config[key] = value
    return config
