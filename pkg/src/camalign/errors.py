"""Exception taxonomy shared across the package."""


class SimulatorError(Exception):
    """Base class for all simulator-raised errors."""


class ConfigurationError(SimulatorError):
    """Invalid geometry, widths, patterns, or run configuration."""


class ScheduleError(SimulatorError):
    """Truth table cannot be compiled: inconsistent entries, unallocated
    fields, or an unsatisfiable read-after-write ordering."""


class AllocationError(SimulatorError):
    """Column allocation failed (insufficient columns or an infeasible
    co-location request)."""


class CapacityError(SimulatorError):
    """Sequences or databases do not fit the configured array."""


class AlphabetError(SimulatorError):
    """A sequence symbol falls outside the configured alphabet."""


class OracleMismatchError(SimulatorError):
    """Simulated result disagrees with the reference oracle."""
