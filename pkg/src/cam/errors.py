"""Exception types shared across the engine."""


class CamError(Exception):
    """Base class for all engine errors."""


class SchemaError(CamError):
    """Malformed or unsupported serialized document."""


class NodeNotFoundError(CamError):
    """A node id was not found in the model."""


class MissingMeaningError(CamError):
    """A frontier node has no meaning vector in the embedding table."""


class DegenerateVectorError(CamError):
    """A vector with zero norm (or mismatched dimension) where a direction is required."""


class LabelError(CamError):
    """Labels are missing or not binary {0, 1}."""


class UnfittableColumnError(CamError):
    """A column cannot be fitted (e.g. all values missing, unparseable numerics)."""


class MisalignedInstanceError(CamError):
    """An instance does not align with the model's feature order."""


class SingleClassError(CamError):
    """A metric that needs both classes received a single-class sample."""


class StructureMismatchError(CamError):
    """A fit does not structurally match the model it is applied to."""
