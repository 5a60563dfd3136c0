"""Feature maps from histories to MDP states, scored by code length."""

from .agent import Agent, AgentConfig, RunLog, agent_cycle, run_experiment
from .coding import CountVector, code_length, entropy
from .environments import ChainEnv, TinyExampleEnv, make_env, tiny_history
from .experiments import search_phi, tiny_table
from .features import SuffixSet, WindowMap, merge, phi_improve, phi_state, split
from .histories import Alphabets, History, append_cycle, observation_suffix, read_history, write_history
from .mdpcore import CostConfig, CountTensor, build_counts, cost, estimate_mdp, icost
from .planner import ExplorationConfig, best_action, extend_exploration, value_iteration

__all__ = [
    "Agent", "AgentConfig", "Alphabets", "ChainEnv", "CostConfig", "CountTensor", "CountVector",
    "ExplorationConfig", "History", "RunLog", "SuffixSet", "TinyExampleEnv", "WindowMap",
    "agent_cycle", "append_cycle", "best_action", "build_counts", "code_length", "cost", "entropy",
    "estimate_mdp", "extend_exploration", "icost", "make_env", "merge", "observation_suffix",
    "phi_improve", "phi_state", "read_history", "run_experiment", "search_phi", "split",
    "tiny_history", "tiny_table", "value_iteration", "write_history",
]
