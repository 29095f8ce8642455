"""Q-RAM resource management for concurrent multifunction RF operation."""
from .errors import CombinationError, ConfigurationError, DomainError, RfqramError, SizeError
from .models import DEFAULT_MODELS, Environment, ModelSet, SystemParams, TaskSpec
from .qram import allocate_exact, allocate_greedy, compound_resource, concave_frontier, enumerate_configs
from .concurrency import CombinationRule, LeafEvaluator, Mode, enumerate_leaves, evaluate_leaf, feasible_blocks, mcts_search

__version__ = "0.1.0"
