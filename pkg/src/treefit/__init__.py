"""treefit: embedding k-edge trees into graphs under degree conditions.

Combinatorial library and CLI covering tree cutting and balanced colorings,
regular-pair embedders with reduced-graph scenario dispatch, an exact
embedding oracle, extremal-instance generators, and conjecture sweeps.
"""

__version__ = "0.1.0"
