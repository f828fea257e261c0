"""Exception types shared across the pipeline."""


class VeilkitError(Exception):
    """Base class for every error raised by this package."""


class MalformedName(VeilkitError):
    """A sample name does not follow the S?-P?-?-?-?-? scheme.

    ``field`` names the offending component (``"session"``, ``"subject"``,
    ``"gender"``, ``"age"``, ``"image"``, ``"expression"`` or
    ``"field count"``).
    """

    def __init__(self, name: str, field: str, detail: str = ""):
        self.name = name
        self.field = field
        msg = f"malformed sample name {name!r}: bad {field}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class FormatError(VeilkitError):
    """A feature file violates the VPF-CSV layout."""


class NonFiniteValueError(VeilkitError, ValueError):
    """A feature file contains NaN/Inf.

    ``row`` is the 0-based data-row index (header excluded), ``col`` the
    0-based feature column (name/layer columns excluded).
    """

    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite feature value at data row {row}, feature column {col}")


class DimMismatch(VeilkitError):
    """Matrix width differs from what the consumer expects."""


# Classifier-facing name for the same condition.
DimError = DimMismatch


class RowOrderMismatch(VeilkitError):
    """Two datasets disagree on the sample at some row."""

    def __init__(self, index: int, name_a: str, name_b: str):
        self.index = index
        self.name_a = name_a
        self.name_b = name_b
        super().__init__(f"sample mismatch at row {index}: {name_a!r} vs {name_b!r}")


class DegenerateData(VeilkitError):
    """Input carries no variance (all rows identical)."""


class InvalidRetention(VeilkitError):
    """Variance-retention fraction outside (0, 1]."""


class ZeroVariance(VeilkitError):
    """Eigenvalue mass sums to zero; no component can be selected."""


class EmptyClass(VeilkitError):
    """A class has no samples where at least one is required."""


class NonFinite(VeilkitError):
    """Training or query matrix contains NaN/Inf."""


class KTooLarge(VeilkitError):
    """Neighbor count exceeds the number of stored training rows."""


class TooFewSamples(VeilkitError):
    """Fewer samples than folds."""


class DegenerateLabels(VeilkitError):
    """Label vector contains a single class; ranking metrics undefined."""


class EmptyMatrix(VeilkitError):
    """Confusion matrix has zero total count."""


class ConfigError(VeilkitError):
    """Invalid experiment configuration."""
