"""Mesh simplification by coarse-to-fine cluster splitting, with a vertex
clustering baseline and a sampled surface-error measure."""

from .errors import (AnalysisError, CheckpointError, EmptyMeshError, MeshFormatError,
                     MeshStructureError, NumericError, RsimpError)
from .mesh import Aabb, Mesh, ValidationReport, bounding_box, build_mesh, validate
from .meshio import read_arrays, read_mesh, write_mesh
from .checkpoint import load_checkpoint, save_checkpoint
from .simplify import (Cluster, SimplificationState, SimplifiedMesh, refine, refine_to_faces,
                       simplify, simplify_to_faces)
from .vclust import cluster_simplify, resolution_for_target
from .metro import ErrorReport, build_spatial_index, mean_error, sample_surface

__version__ = "0.1.0"
