"""Exception types shared across the package."""


class MMFluidError(Exception):
    """Base class for all package errors."""


class NonzeroMeanVorticity(MMFluidError):
    """Biot-Savart inversion requested for vorticity with nonzero mean."""


class InvalidExponent(MMFluidError):
    """Lebesgue exponent outside the admissible range."""


class GridTooCoarse(MMFluidError):
    """Grid cannot host the requested dyadic decomposition."""


class ShellOutOfRange(MMFluidError):
    """Dyadic shell index outside [0, j_max]."""


class EmptyShell(MMFluidError):
    """Shell projection of the field vanishes; ratio undefined."""


class NegativeArgument(MMFluidError):
    """Argument required to be nonnegative."""


class CflViolation(MMFluidError):
    """Time step exceeds the advective CFL bound."""


class NonFiniteField(MMFluidError):
    """A field stopped being finite; numerical blow-up signal."""


class NonMonotoneTime(MMFluidError):
    """Sample appended with a timestamp not after the previous one."""


class EmptyHistory(MMFluidError):
    """Diagnostics requested on an empty run history."""


class InvalidEpsilon(MMFluidError):
    """Free parameter epsilon must be positive."""


class ConfigInvalid(MMFluidError):
    """Scenario configuration failed validation."""


class CorruptSnapshot(MMFluidError):
    """Snapshot file failed magic/CRC validation."""


class VersionMismatch(MMFluidError):
    """Snapshot file written by an incompatible format version."""
