"""softmesh: community-graph ecology analysis and organic-softening simulation."""

__version__ = "0.1.0"
