# generate_config.py
from pathlib import Path

import yaml

from phaseforge.core.loader import emit_config, parse_config_text
from phaseforge.core.merge import load_defaults

STARTER_CHART = {
    "hat": {
        "alpha_hat": 1.0,
        "beta_hat": 1.0,
        "gamma": 1.0,
        "delta": 1.0,
        "eps": 0.05,
        "theta": 1.0,
    }
}


def cmd_generate_config(mode, output):
    config = {"mode": mode}
    config.update(STARTER_CHART)
    config.update(load_defaults())

    # parse once so the starter config is known to validate
    cfg = parse_config_text(yaml.safe_dump(config, sort_keys=False))
    Path(output).write_text(emit_config(cfg))

    print(f"Wrote config to {output}")
    return cfg
