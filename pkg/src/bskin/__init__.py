"""Point-set skinning over sphere-mesh skeletons.

A raw 3D cloud is encoded as a detail field over baselines covering a
registered sphere-mesh skeleton; pose and anatomy changes re-synthesize the
cloud by deforming the baselines and lifting each point back along the
evolved detail direction field. LBS and dual-quaternion reference skinners
are included for comparison, plus a CLI and an HTTP posing service.
"""

from .cloud_io import PointCloud, load_cloud, save_cloud
from .encfile import load_encoded, save_encoded
from .encoder import EncodedPoint, EncodedSet, encode_cloud, project_point
from .pipeline import (
    JobOptions,
    SkinningJob,
    SkinResult,
    sample_baselines,
    skin,
)
from .refskin import bone_matrices, dqs, gaussian_weights, lbs
from .skeleton import (
    Bend,
    Bone,
    Pose,
    Registration,
    Skeleton,
    SphereNode,
    apply_pose,
    identity_pose,
    load_pose,
    load_skeleton,
    save_pose,
    save_skeleton,
)

__version__ = "0.1.0"

__all__ = [
    "Bend", "Bone", "EncodedPoint", "EncodedSet", "JobOptions", "PointCloud",
    "Pose", "Registration", "SkinningJob", "SkinResult", "Skeleton",
    "SphereNode", "apply_pose", "bone_matrices", "dqs", "encode_cloud",
    "gaussian_weights", "identity_pose", "lbs", "load_cloud", "load_encoded",
    "load_pose", "load_skeleton", "project_point", "sample_baselines",
    "save_cloud", "save_encoded", "save_pose", "save_skeleton", "skin",
]
