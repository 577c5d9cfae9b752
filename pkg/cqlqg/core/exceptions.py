class CqlqgError(Exception):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class DimensionError(CqlqgError, ValueError):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class NumericalError(CqlqgError):
    def __init__(self, *args: object, diagnostics: dict = None) -> None:
        super().__init__(*args)
        self.diagnostics = diagnostics or {}


class NoUniqueSolutionError(NumericalError):
    def __init__(self, *args: object, diagnostics: dict = None) -> None:
        super().__init__(*args, diagnostics=diagnostics)


class UnstableSystemError(CqlqgError):
    def __init__(self, *args: object, spectral_abscissa: float = None) -> None:
        super().__init__(*args)
        self.spectral_abscissa = spectral_abscissa


class PreconditionError(CqlqgError, ValueError):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class StabilizationNotFoundError(CqlqgError):
    def __init__(self, *args: object, tries_used: int = 0) -> None:
        super().__init__(*args)
        self.tries_used = tries_used


class ArmijoExhaustedError(CqlqgError):
    def __init__(self, *args: object, mu: int = 0) -> None:
        super().__init__(*args)
        self.mu = mu


class FlowEscapedError(CqlqgError):
    def __init__(self, *args: object, trace=None) -> None:
        super().__init__(*args)
        self.trace = trace


class PlantFileError(CqlqgError):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class ControllerFileError(CqlqgError):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)


class ConfigurationError(CqlqgError, ValueError):
    def __init__(self, *args: object) -> None:
        super().__init__(*args)
