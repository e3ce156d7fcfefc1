"""Exception hierarchy. Every error carries a machine-parseable category
string; the CLI prints `error category=<category>: <message>` and exits
nonzero, so scripts can branch on the category without parsing prose.
"""


class LisaError(Exception):
    category = "internal"


class DimensionError(LisaError):
    """Tensor shapes incompatible for the requested operation."""

    category = "dimension"


class ContractError(LisaError):
    """An operation was called outside its contract (e.g. non-scalar loss)."""

    category = "contract"


class NonFiniteError(LisaError):
    """A NaN or infinity appeared where only finite values are allowed."""

    category = "non-finite"


class OracleError(LisaError):
    """A verification oracle could not run (e.g. non-deterministic target)."""

    category = "oracle"


class OracleSizeError(OracleError):
    category = "oracle-size"


class CorpusFormatError(LisaError):
    """Malformed corpus file; message includes the offending line number."""

    category = "corpus-format"


class EncodingError(LisaError):
    """Role spans cannot be encoded (overlap)."""

    category = "encoding"


class EstimationError(LisaError):
    """Transition estimation impossible (no frames in the corpus)."""

    category = "estimation"


class ConfigError(LisaError):
    category = "config"


class InjectionError(LisaError):
    """Parse injection received an out-of-range head index."""

    category = "injection"


class AlignmentError(LisaError):
    """Two files that must describe the same sentences do not line up."""

    category = "alignment"


class CompatibilityError(LisaError):
    """Checkpoint and corpus/label spaces do not match."""

    category = "compatibility"


class DecodeError(LisaError):
    category = "decode"
