from dataclasses import dataclass, asdict, replace

from ..core.config import Config, config as default_config
from ..core.exceptions import ConfigurationError

SECOND_DERIVATIVE_MODES = ("analytic", "fd")
LYAPUNOV_METHODS = ("kron", "schur")


@dataclass(frozen=True)
class SolverConfig:
    h_max: float = 1.0
    f: float = 0.5
    sigma: float = 0.9
    epsilon: float = 1e-6
    max_iters: int = 50000
    armijo_max_mu: int = 60
    hurwitz_margin: float = 1e-9
    rng_seed: int = 0
    second_derivative: str = "analytic"
    fd_step: float = 1e-5
    log_every: int = 500
    # None defers to the lyapunov_method of the global config
    lyapunov_method: str = None

    def __post_init__(self) -> None:
        if not 0 < self.f < 1:
            raise ConfigurationError(f"f must lie in (0, 1), got {self.f}")
        if not 0 < self.sigma < 1:
            raise ConfigurationError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.h_max <= 0:
            raise ConfigurationError(f"h_max must be positive, got {self.h_max}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.max_iters < 1 or self.armijo_max_mu < 1:
            raise ConfigurationError("max_iters and armijo_max_mu must be positive")
        if self.hurwitz_margin < 0:
            raise ConfigurationError(f"hurwitz_margin must be nonnegative, got {self.hurwitz_margin}")
        if self.second_derivative not in SECOND_DERIVATIVE_MODES:
            raise ConfigurationError(
                f"second_derivative must be one of {SECOND_DERIVATIVE_MODES}, got {self.second_derivative}"
            )
        if self.fd_step <= 0 or self.log_every < 1:
            raise ConfigurationError("fd_step and log_every must be positive")
        if self.lyapunov_method is not None and self.lyapunov_method not in LYAPUNOV_METHODS:
            raise ConfigurationError(
                f"lyapunov_method must be one of {LYAPUNOV_METHODS}, got {self.lyapunov_method}"
            )

    @classmethod
    def from_config(cls, conf: Config = None, **overrides) -> "SolverConfig":
        """Solver settings from the `solver` section of a Config plus its lyapunov_method;
        None-valued overrides are ignored
        """
        if conf is None:
            conf = default_config
        settings = dict(getattr(conf, "solver", {}))
        unknown = set(settings) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"Unknown solver settings: {sorted(unknown)}")
        settings.setdefault("lyapunov_method", getattr(conf, "lyapunov_method", None))
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)
