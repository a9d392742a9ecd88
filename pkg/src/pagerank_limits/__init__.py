"""PageRank on directed multigraphs and samplers of their local limits."""

from .census import (
    NeighborhoodCensus,
    TailSample,
    ccdf,
    census,
    census_limit,
    hill_estimator,
    ks_distance,
    tv_distance,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    InputError,
    InvariantViolation,
    PagerankLimitsError,
    ResourceError,
    SizeError,
    UsageError,
)
from .generators import (
    BiDegreeLaw,
    BiDegreeSequence,
    CtbpParams,
    PamParams,
    RngStream,
    gen_ctbp_tree,
    gen_dcm,
    gen_dpa,
    gen_irg,
    sample_bidegree_sequence,
)
from .graph import (
    DirectedMultigraph,
    MarkedNeighborhood,
    build_graph,
    canonical_code,
    explore_neighborhood,
    local_distance,
    read_edgelist,
    truncate_neighborhood,
    write_edgelist,
)
from .limits import (
    LimitTree,
    PolyaParams,
    attach_generalized_weights,
    gw_root_rank_pool,
    malthusian,
    root_pagerank,
    root_pagerank_generalized,
    sample_ctbp_limit,
    sample_gw_limit,
    sample_polya_limit,
    solve_fixed_point_mc,
    tree_neighborhood,
)
from .pagerank import (
    GeneralizedWeights,
    PageRankParams,
    PageRankVector,
    lower_bound_check,
    pagerank_truncated,
    solve_generalized,
    solve_pagerank,
    truncation_gap,
)

__version__ = "0.1.0"
