"""Random layered digraphs, query oracles, and sublinear cycle finders."""

from .analysis import (
    EpochStats,
    FasResult,
    InvalidTreeHeight,
    NotAForest,
    TooLarge,
    TreeKind,
    TreeType,
    ancestor_count,
    backedge_count,
    classify_trees,
    enumerate_conditional_colorings,
    epoch_stats,
    is_good_partial,
    max_blue_path,
    min_fas_bruteforce,
    min_fas_exact,
    partition_cross_min,
    sample_naive_coloring,
)
from .finders import (
    ColorEstimate,
    FinderOutcome,
    Wall,
    build_wall,
    default_num_walls,
    default_wall_budget,
    identify_color,
    run_algorithm1,
    run_algorithm2,
    run_bfs_heuristic,
    run_birthday_sampler,
    run_random_walk_finder,
    wall_identify,
)
from .graphs import (
    BLUE,
    BRPair,
    BRParams,
    Coloring,
    Digraph,
    InfeasibleSampling,
    InvalidParams,
    NoValidLayering,
    OddVertexCount,
    auto_params,
    color_token,
    gen_br_graph,
    gen_br_pair,
    gen_br_simple,
    gen_coloring,
    parse_color_token,
    validate_br,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    InsufficientData,
    ParseError,
    ScalingFit,
    TrialRecord,
    fit_scaling,
    load_graph,
    records_to_csv,
    run_experiment,
    run_trial,
    save_graph,
    write_csv,
)
from .oracle import (
    EpochDecomposition,
    EpochReason,
    IndexOutOfRange,
    KnowledgeGraph,
    Oracle,
    QueryHistory,
    QueryModel,
    QueryRecord,
    RepeatedQuery,
    VertexOutOfRange,
    decompose_epochs,
    detect_cycle,
    is_surprise,
    knowledge_graph,
    new_oracle,
    verify_cycle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
