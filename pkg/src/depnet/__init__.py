"""Dependency networks for sparse binary data: learning, sampling, recommending."""

from .data import (
    CaseMatrix,
    DataError,
    FormatError,
    Item,
    ItemVocabulary,
    ParseError,
    Popularity,
    VocabularyError,
    parse_sparse_pairs,
    parse_uci_web,
    popularity,
    serialize_uci_web,
    split_train_test,
)
from .evaluate import (
    EvalConfig,
    EvalReport,
    EvaluationError,
    cf_evaluate,
    position_probability,
    protocol_partition,
    user_score,
)
from .modelio import ModelMeta, bundle_to_dict, canonical_json, load_bundle, load_model, save_bundle, save_model
from .network import (
    Arc,
    DependencyNetwork,
    ExplicitJoint,
    TableNetwork,
    adjacency_set,
    conditionally_dependent,
    consistent_dn_from_joint,
    is_bidirectional,
    learn_dependency_network,
)
from .recommend import RecommendationList, baseline_recommend, dn_scores, recommend
from .sampler import (
    ConditionalEstimate,
    GibbsConfig,
    GibbsResult,
    SamplerError,
    StateSpaceError,
    TransitionMatrix,
    UniquenessError,
    chain_matrix,
    exact_stationary,
    gibbs_conditional,
    local_transition_matrix,
    ordered_gibbs_run,
    power_iteration_stationary,
)
from .trees import (
    DecisionTree,
    Internal,
    Leaf,
    ScoreConfig,
    SplitTest,
    leaf_log_marginal,
    learn_tree,
    tree_log_score,
    tree_lookup,
)

__version__ = "0.1.0"
