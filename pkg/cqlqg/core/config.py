import os
import copy
import json

from .exceptions import ConfigurationError

CONFIG_ENV_VAR = "CQLQG_CONFIG"

DEFAULTS = {
    "solver": {
        "h_max": 1.0,
        "f": 0.5,
        "sigma": 0.9,
        "epsilon": 1e-6,
        "max_iters": 50000,
        "armijo_max_mu": 60,
        "hurwitz_margin": 1e-9,
        "rng_seed": 0,
        "second_derivative": "analytic",
        "fd_step": 1e-5,
        "log_every": 500,
    },
    "random_search": {"scale": 1.0, "max_tries": 100000},
    "pr_tolerance": 1e-9,
    "file_pr_tolerance": 1e-3,
    "lyapunov_method": "kron",
    "log_dir": ".",
    "log_level": "INFO",
    "plot_style": "print",
}


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = _merge(merged[k], v)
        else:
            merged[k] = v
    return merged


class Config:
    def __init__(self, config_path: str = None) -> None:
        if config_path is None:
            config_path = os.environ.get(CONFIG_ENV_VAR)
        if config_path is None:
            config_dir = os.path.dirname(
                os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
            )
            config_path = os.path.join(config_dir, "config.json")
            if not os.path.exists(config_path):
                config_path = None

        conf = {}
        if config_path is not None:
            try:
                with open(config_path) as json_file:
                    conf = json.load(json_file)
            except (OSError, json.JSONDecodeError) as err:
                raise ConfigurationError(f"Unable to read config {config_path}: {err}")
        self.config_path = config_path

        for k, v in _merge(DEFAULTS, conf).items():
            setattr(self, k, v)

        if self.lyapunov_method not in ("kron", "schur"):
            raise ConfigurationError(
                f"lyapunov_method must be 'kron' or 'schur', got {self.lyapunov_method}"
            )

    def __repr__(self) -> str:
        kws = [f"{key}={value!r}" for key, value in self.__dict__.items()]
        return "{}\n{}".format(type(self).__name__, ",\n".join(kws))


config = Config()
