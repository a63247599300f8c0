"""Exception types raised by the skinning engine.

Batch operations (encode_cloud, skin) do not raise per-point errors; they
collect them as flags/indices and only raise for structural problems.
"""


class BskinError(Exception):
    """Base class for all engine errors."""


class NestedSpheres(BskinError):
    """Bone end spheres are nested; no tangent cone exists."""


class OutOfRange(BskinError):
    """Scalar parameter outside its documented domain."""


class InvalidJointRef(BskinError):
    """Pose references a joint sphere or bone that does not exist."""


class DegenerateBone(BskinError):
    """Bone geometry too degenerate to carry a baseline segment."""


class TangentPlane(BskinError):
    """Support plane is tangent to the joint sphere (single component)."""


class WrongCell(BskinError):
    """Point does not lie in the junction cell of the requested cone pair."""


class ParallelLines(BskinError):
    """Line-line intersection requested for (near-)parallel lines."""


class ApexRegion(BskinError):
    """Base point would fall beyond a cone apex."""


class AxisDegenerate(BskinError):
    """Point lies on a bone axis; azimuth undefined."""


class SectionCollapsed(BskinError):
    """Deformed baseline section has (near-)zero arclength."""


class NearTangent(BskinError):
    """sin(beta') fell below the safe threshold during modulation."""


class EmptyNeighborhood(BskinError):
    """Smoothing window contains no base points."""


class NonRigidTransform(BskinError):
    """Dual-quaternion skinning got a transform with scale/shear."""


class SheafDegenerate(BskinError):
    """Sheaf of support planes is undefined for this joint."""


class ParseError(BskinError):
    """Malformed input file; carries location context in the message."""


class UnsupportedFormat(BskinError):
    """File format not recognized or not supported."""


class IoError(BskinError):
    """Filesystem-level failure while reading or writing."""
