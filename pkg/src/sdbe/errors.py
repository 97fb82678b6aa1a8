"""Exception hierarchy.

Every error carries a stable ``category`` string; the CLI prints it on stderr
so callers can branch on the failure kind without parsing prose.
"""


class SdbeError(Exception):
    category = "SdbeError"


class ZeroVector(SdbeError, ValueError):
    category = "ZeroVector"


class DimensionMismatch(SdbeError, ValueError):
    category = "DimensionMismatch"


class LabelMismatch(SdbeError, ValueError):
    category = "LabelMismatch"


class EmptyInput(SdbeError, ValueError):
    category = "EmptyInput"


class NonFiniteInput(SdbeError, ValueError):
    category = "NonFiniteInput"


class NumericalFailure(SdbeError, ArithmeticError):
    category = "NumericalFailure"


class NotConverged(SdbeError, RuntimeError):
    category = "NotConverged"


class WrongMode(SdbeError, ValueError):
    category = "WrongMode"


class DegenerateLabels(SdbeError, ValueError):
    category = "DegenerateLabels"


class ConstantVector(SdbeError, ValueError):
    category = "ConstantVector"


class InfeasibleSpec(SdbeError, ValueError):
    category = "InfeasibleSpec"


class ConfigError(SdbeError, ValueError):
    category = "ConfigError"


# container format errors

class FormatError(SdbeError, ValueError):
    category = "FormatError"


class BadMagic(FormatError):
    category = "BadMagic"


class TruncatedHeader(FormatError):
    category = "TruncatedHeader"


class TruncatedPayload(FormatError):
    category = "TruncatedPayload"


class TrailingBytes(FormatError):
    category = "TrailingBytes"


class LabelCountMismatch(FormatError):
    category = "LabelCountMismatch"


class NonFiniteData(FormatError):
    category = "NonFiniteData"


class BadPayload(FormatError):
    category = "BadPayload"
