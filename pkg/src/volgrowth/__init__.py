"""Volume growth of infinite connected sums: growth tables, trees, pieces, assembled models and ball volumes."""

from .growth import (
    CanonicalGrowthFunction,
    GrowthClassWitness,
    GrowthFunction,
    NormalizationFailed,
    NotBgd,
    check_bgd,
    normalize,
    same_growth_type,
    subexponential_check,
)
from .tree import LevelSet, RootedTree, build_tree, lower_density_profile, tree_growth
from .pieces import Catalog, CatalogBounds, PieceSpec, default_catalog, verify_pieces
from .assembly import ManifoldModel, assemble, choose_levels, discrete_growth, radial, validate_model
from .simulate import (
    CertificateFailed,
    MetricGraph,
    ball_volume,
    ball_volume_table,
    growth_certificate,
    to_metric_graph,
    verify_sandwich,
)

__version__ = "0.1.0"
