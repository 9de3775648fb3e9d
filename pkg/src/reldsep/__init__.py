"""Relational d-separation via abstract ground graphs."""

from .errors import RelDSepError
from .schema import Cardinality, RelationshipClass, Schema, Skeleton, validate_schema, validate_skeleton
from .paths import (
    RelationalPath,
    construct_nonempty_witness,
    construct_overlap_witness,
    enumerate_paths,
    extend,
    is_valid_path,
    parse_path,
    terminal_set,
)
from .model import (
    RelationalDependency,
    RelationalModel,
    RelationalVariable,
    class_dependency_graph,
    parse_dependency,
    parse_rv,
    rv_instance,
    validate_model,
)
from .grounding import ground_graph
from .agg import AggNode, AbstractGroundGraph, build_agg, build_simple_agg, required_hop_threshold

__version__ = "0.1.0"
