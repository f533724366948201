"""Exception hierarchy shared by every epskit module."""


class EpskitError(Exception):
    """Base class; ``module`` names the subsystem that raised."""

    module = "epskit"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class ConfigError(EpskitError):
    module = "config"


class DomainError(EpskitError, ValueError):
    """An input lies outside the range where a model is defined."""

    module = "materials"


class NoThermalModelError(EpskitError):
    module = "materials"


class NotPhaseMatchedError(EpskitError):
    module = "phasematch"


class GroupVelocityMatchedError(EpskitError):
    module = "phasematch"


class CannotCompensateError(EpskitError):
    module = "wedges"


class UncompensatableError(EpskitError):
    module = "wedges"


class GeometryError(EpskitError):
    module = "wedges"


class UndefinedEstimateError(EpskitError):
    module = "entanglement"
