"""Exception taxonomy shared across the pipeline."""


class PaddlekitError(Exception):
    """Base class for every error raised by this package."""


# --- ingest -------------------------------------------------------------

class MissingTimeColumn(PaddlekitError):
    pass


class EmptyFile(PaddlekitError):
    pass


class NonMonotonicTime(PaddlekitError):
    pass


class NoTemporalOverlap(PaddlekitError):
    pass


class MissingRequiredChannel(PaddlekitError):
    pass


class BadTrialInput(PaddlekitError):
    """Wrong arity or unknown role among the five per-trial files."""


# --- features -----------------------------------------------------------

class EmptyInput(PaddlekitError):
    pass


class NonFiniteInput(PaddlekitError):
    pass


class MissingChannel(PaddlekitError):
    pass


# --- segment ------------------------------------------------------------

class EmptyPhase(PaddlekitError):
    pass


# --- models -------------------------------------------------------------

class SingleClassData(PaddlekitError):
    pass


class RegistryMismatch(PaddlekitError):
    pass


class CorruptModel(PaddlekitError):
    pass


class VersionUnsupported(PaddlekitError):
    pass


# --- eval ---------------------------------------------------------------

class TooFewSamples(PaddlekitError):
    pass


class FoldClassCollapse(PaddlekitError):
    pass


# --- serve --------------------------------------------------------------

class NoAcceptedStrokes(PaddlekitError):
    pass
