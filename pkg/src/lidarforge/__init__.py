"""Synthetic LiDAR point clouds for rare object categories.

Casts a modeled sensor emission pattern against triangle meshes, stores the
simulated instances in a reusable database following empirical spatial
distributions, and injects sampled instances into real labeled scans with
collision avoidance.
"""

from lidarforge.augment import (
    AugmentPolicy,
    AugmentReport,
    OccupancyGrid,
    augment_directory,
    augment_scan,
    collides,
    occupancy_grid,
)
from lidarforge.distribution import (
    GridConfig,
    PlacementSample,
    SpatialHistogram,
    accumulate_histogram,
    sample_placement,
)
from lidarforge.emission import (
    EmissionGrid,
    LidarSpec,
    build_emission_grid,
    window_subgrid,
)
from lidarforge.forge import (
    ForgeCategory,
    ForgeError,
    ForgePolicy,
    InstanceDatabase,
    InstanceRecord,
    build_database,
    simulate_instance,
)
from lidarforge.geometry import (
    AngularWindow,
    RigidPose,
    SensorInsideMeshError,
    TriangleMesh,
    box_mesh,
    mesh_angular_window,
    point_in_triangle,
    ray_mesh_intersect,
    ray_plane_intersect,
    transform_mesh,
)
from lidarforge.metrics import confusion_matrix, evaluate_label_dirs, miou
from lidarforge.scan_io import LabeledScan, read_scan, write_scan

__version__ = "0.1.0"
